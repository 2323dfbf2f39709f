#include "flocklab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "flocklab/errors.hpp"

namespace flocklab {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, std::string_view text) {
  text = trim(text);
  double x = 0.0;
  if (text == "inf" || text == "+inf") return kInfinity;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
    throw ValidationError(key, "'" + std::string(text) + "' is not a number");
  return x;
}

template <typename Int>
Int to_integer(const std::string& key, std::string_view text) {
  text = trim(text);
  Int x{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty())
    throw ValidationError(key, "'" + std::string(text) + "' is not an integer");
  return x;
}

std::vector<double> to_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(to_double(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

std::string from_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_double(v[k]);
  return s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
  std::string name() const { return section + "." + key; }
};

#define NUM(sec, k, member)                                                                               \
  Field {                                                                                                 \
    sec, k, [](RunConfig& c, std::string_view t) { c.member = to_double(std::string(sec) + "." k, t); }, \
        [](const RunConfig& c) { return format_double(c.member); }                                         \
  }
#define INT(sec, k, member, type)                                                                                 \
  Field {                                                                                                         \
    sec, k, [](RunConfig& c, std::string_view t) { c.member = to_integer<type>(std::string(sec) + "." k, t); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                                                \
  }
#define STR(sec, k, member)                                                                     \
  Field {                                                                                       \
    sec, k, [](RunConfig& c, std::string_view t) { c.member = std::string(trim(t)); },         \
        [](const RunConfig& c) { return c.member; }                                              \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      STR("kernel", "profile", kernel.profile),
      STR("kernel", "profile_file", kernel.profile_file),
      NUM("kernel", "r", kernel.r),
      STR("kernel", "alignment", kernel.alignment),
      STR("kernel", "influence", kernel.influence),
      NUM("kernel", "lambda", kernel.lambda),
      NUM("kernel", "beta", kernel.beta),
      NUM("potential", "kappa", potential.kappa),
      NUM("grid", "Lx", grid.Lx),
      NUM("grid", "Lv", grid.Lv),
      INT("grid", "Nx", grid.Nx, int),
      INT("grid", "Nv", grid.Nv, int),
      NUM("time", "t_end", time.t_end),
      NUM("time", "cfl", time.cfl),
      NUM("time", "snapshot_stride", time.snapshot_stride),
      STR("time", "limiter", time.limiter),
      NUM("time", "lp", time.lp),
      Field{"init", "name",
            [](RunConfig& c, std::string_view t) {
              try {
                c.init.kind = parse_init_kind(trim(t));
              } catch (const InvalidArgument&) {
                throw ValidationError("init.name", "must be bump or two_bump");
              }
            },
            [](const RunConfig& c) { return to_string(c.init.kind); }},
      NUM("init", "x1", init.x1),
      NUM("init", "v1", init.v1),
      NUM("init", "m1", init.m1),
      NUM("init", "x2", init.x2),
      NUM("init", "v2", init.v2),
      NUM("init", "m2", init.m2),
      NUM("init", "wx", init.wx),
      NUM("init", "wv", init.wv),
      INT("particles", "n", particles.n, int),
      INT("particles", "seed", particles.seed, std::uint64_t),
      INT("particles", "dim", particles.dim, int),
      NUM("particles", "dt", particles.dt),
      INT("particles", "width", particles.width, int),
      Field{"sweep", "r_list",
            [](RunConfig& c, std::string_view t) { c.sweep.r_list = to_list("sweep.r_list", t); },
            [](const RunConfig& c) { return from_list(c.sweep.r_list); }},
      NUM("sweep", "q", sweep.q),
      NUM("sweep", "tol_rho", sweep.tol_rho),
      NUM("sweep", "tol_j", sweep.tol_j),
      NUM("sweep", "tol_product", sweep.tol_product),
      NUM("sweep", "floor_rho", sweep.floor_rho),
      NUM("sweep", "floor_j", sweep.floor_j),
      NUM("sweep", "floor_product", sweep.floor_product),
      NUM("sweep", "decrease_factor", sweep.decrease_factor),
      INT("sweep", "max_degree", sweep.max_degree, int),
      NUM("sweep", "tol_scheme_factor", sweep.tol_scheme_factor),
  };
  return all;
}

#undef NUM
#undef INT
#undef STR

bool known_section(std::string_view s) {
  for (const auto& f : fields())
    if (f.section == s) return true;
  return false;
}

void require(bool ok, const char* key, const std::string& reason) {
  if (!ok) throw ValidationError(key, reason);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::map<std::string, int> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) throw UnknownKey("[" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    if (section.empty()) throw ParseError(line_no, "key outside of any [section]");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key before '='");

    const std::string full = section + "." + key;
    const Field* field = nullptr;
    for (const auto& f : fields())
      if (f.section == section && f.key == key) field = &f;
    if (!field) throw UnknownKey(full, line_no);
    if (const auto it = seen.find(full); it != seen.end())
      throw ParseError(line_no, "duplicate key '" + full + "' (first set on line " + std::to_string(it->second) +
                                    ", again on line " + std::to_string(line_no) + ")");
    seen.emplace(full, line_no);
    field->set(cfg, value);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

void validate(const RunConfig& c) {
  const auto& k = c.kernel;
  require(k.profile == "triangle" || k.profile == "bump2" || k.profile == "cosine" || k.profile == "table",
          "kernel.profile", "must be triangle, bump2, cosine or table");
  require(k.profile != "table" || !k.profile_file.empty(), "kernel.profile_file", "required for profile = table");
  require(finite(k.r) && k.r >= 0.0, "kernel.r", "must be > 0 or 0 for local mode");
  require(k.alignment == "mt" || k.alignment == "off", "kernel.alignment", "must be mt or off");
  require(k.influence == "algebraic" || k.influence == "constant", "kernel.influence",
          "must be algebraic or constant");
  require(finite(k.lambda) && k.lambda >= 0.0, "kernel.lambda", "must be finite and >= 0");
  require(finite(k.beta) && k.beta > 0.0, "kernel.beta", "must be finite and > 0");
  require(finite(c.potential.kappa) && c.potential.kappa >= 0.0, "potential.kappa", "must be finite and >= 0");

  require(finite(c.grid.Lx) && c.grid.Lx > 0.0, "grid.Lx", "must be finite and > 0");
  require(finite(c.grid.Lv) && c.grid.Lv > 0.0, "grid.Lv", "must be finite and > 0");
  require(c.grid.Nx >= 2, "grid.Nx", "must be >= 2");
  require(c.grid.Nv >= 2, "grid.Nv", "must be >= 2");

  require(finite(c.time.t_end) && c.time.t_end > 0.0, "time.t_end", "must be finite and > 0");
  require(c.time.limiter == "none" || c.time.limiter == "minmod", "time.limiter", "must be none or minmod");
  const double courant = max_stable_courant(parse_limiter(c.time.limiter));
  require(finite(c.time.cfl) && c.time.cfl > 0.0 && c.time.cfl <= courant, "time.cfl",
          "must lie in (0, " + format_double(courant) + "]");
  require(finite(c.time.snapshot_stride) && c.time.snapshot_stride >= 0.0, "time.snapshot_stride",
          "must be finite and >= 0");
  require(c.time.lp >= 1.0 && !std::isnan(c.time.lp), "time.lp", "must be >= 1 (inf allowed)");

  require(finite(c.init.x1) && finite(c.init.v1) && finite(c.init.x2) && finite(c.init.v2), "init",
          "centres must be finite");
  require(finite(c.init.m1) && c.init.m1 > 0.0, "init.m1", "must be finite and > 0");
  require(finite(c.init.m2) && c.init.m2 >= 0.0, "init.m2", "must be finite and >= 0");
  require(finite(c.init.wx) && c.init.wx > 0.0, "init.wx", "must be finite and > 0");
  require(finite(c.init.wv) && c.init.wv > 0.0, "init.wv", "must be finite and > 0");

  require(c.particles.n >= 1, "particles.n", "must be >= 1");
  require(c.particles.dim == 1 || c.particles.dim == 2, "particles.dim", "must be 1 or 2");
  require(finite(c.particles.dt) && c.particles.dt > 0.0, "particles.dt", "must be finite and > 0");
  require(c.particles.width >= 1 && c.particles.width <= 4, "particles.width", "must lie in [1, 4]");

  require(!c.sweep.r_list.empty(), "sweep.r_list", "must not be empty");
  for (const double r : c.sweep.r_list) require(finite(r) && r >= 0.0, "sweep.r_list", "entries must be >= 0");
  require(c.sweep.q >= 1.0 && c.sweep.q < 1.5, "sweep.q", "must lie in [1, 3/2)");
  require(c.sweep.tol_rho > 0.0, "sweep.tol_rho", "must be > 0");
  require(c.sweep.tol_j > 0.0, "sweep.tol_j", "must be > 0");
  require(c.sweep.tol_product > 0.0, "sweep.tol_product", "must be > 0");
  require(finite(c.sweep.floor_rho) && c.sweep.floor_rho >= 0.0, "sweep.floor_rho", "must be finite and >= 0");
  require(finite(c.sweep.floor_j) && c.sweep.floor_j >= 0.0, "sweep.floor_j", "must be finite and >= 0");
  require(finite(c.sweep.floor_product) && c.sweep.floor_product >= 0.0, "sweep.floor_product",
          "must be finite and >= 0");
  require(finite(c.sweep.decrease_factor) && c.sweep.decrease_factor >= 1.0, "sweep.decrease_factor",
          "must be finite and >= 1");
  require(c.sweep.max_degree >= 0 && c.sweep.max_degree <= 8, "sweep.max_degree", "must lie in [0, 8]");
  require(finite(c.sweep.tol_scheme_factor) && c.sweep.tol_scheme_factor >= 0.0, "sweep.tol_scheme_factor",
          "must be finite and >= 0");
}

PhaseGrid make_grid(const RunConfig& cfg) {
  return PhaseGrid{LineGrid{cfg.grid.Lx, cfg.grid.Nx}, LineGrid{cfg.grid.Lv, cfg.grid.Nv}};
}

InfluenceKernel make_influence(const RunConfig& cfg) {
  return cfg.kernel.influence == "constant" ? make_constant_influence(cfg.kernel.lambda)
                                            : make_influence(cfg.kernel.lambda, cfg.kernel.beta);
}

Profile make_profile(const RunConfig& cfg) {
  const ProfileShape shape = parse_profile_shape(cfg.kernel.profile);
  if (shape != ProfileShape::Table) return named_profile(shape);
  std::filesystem::path p = cfg.kernel.profile_file;
  if (p.is_relative()) p = cfg.base_dir / p;
  return load_profile_csv(p);
}

KineticModel make_kinetic_model(const RunConfig& cfg) {
  KineticModel m;
  m.phi = make_influence(cfg);
  m.psi = cfg.potential;
  if (cfg.kernel.alignment == "off") {
    m.mode = AlignmentMode::Off;
  } else if (cfg.kernel.r == 0.0) {
    m.mode = AlignmentMode::Local;
  } else {
    m.mode = AlignmentMode::Nonlocal;
    m.mollifier = make_mollifier(make_profile(cfg), cfg.kernel.r);
  }
  // The sweep needs a profile even when the run itself is local.
  if (m.mode == AlignmentMode::Local && !cfg.sweep.r_list.empty()) {
    double r = 0.0;
    for (const double x : cfg.sweep.r_list) r = std::max(r, x);
    if (r > 0.0) m.mollifier = make_mollifier(make_profile(cfg), r);
  }
  return m;
}

ParticleModel make_particle_model(const RunConfig& cfg) {
  ParticleModel m;
  m.phi = make_influence(cfg);
  m.psi = cfg.potential;
  if (cfg.kernel.alignment == "mt") {
    if (cfg.kernel.r == 0.0) throw ValidationError("kernel.r", "particles need r > 0 when alignment = mt");
    m.mollifier = make_mollifier(make_profile(cfg), cfg.kernel.r, cfg.particles.dim);
  }
  return m;
}

SchemeConfig make_scheme(const RunConfig& cfg) {
  SchemeConfig s;
  s.cfl = cfg.time.cfl;
  s.limiter = parse_limiter(cfg.time.limiter);
  s.t_end = cfg.time.t_end;
  s.snapshot_stride = cfg.time.snapshot_stride;
  s.lp = cfg.time.lp;
  return s;
}

SweepCriteria make_criteria(const RunConfig& cfg) {
  SweepCriteria c;
  c.decrease_factor = cfg.sweep.decrease_factor;
  c.floor_rho = cfg.sweep.floor_rho;
  c.floor_j = cfg.sweep.floor_j;
  c.floor_product = cfg.sweep.floor_product;
  c.tol_rho = cfg.sweep.tol_rho;
  c.tol_j = cfg.sweep.tol_j;
  c.tol_product = cfg.sweep.tol_product;
  return c;
}

}  // namespace flocklab
