#include "flocklab/csv.hpp"

#include <fstream>
#include <system_error>

#include "flocklab/config.hpp"
#include "flocklab/errors.hpp"

namespace flocklab {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw InvalidArgument("CSV row has the wrong number of fields");
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) text_ += ',';
    text_ += csv_field(fields[k]);
  }
  text_ += "\r\n";
  return *this;
}

CsvWriter& CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (const double v : values) fields.push_back(format_double(v));
  return row(fields);
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw InvalidArgument("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InvalidArgument("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && k + 1 < text.size() && text[k + 1] == '\n') ++k;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw InvalidArgument("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::vector<std::string> kDiagnosticsHeader = {"t",      "mass",   "momentum",   "energy",
                                                     "d_local", "d_cs",  "linf_f",     "lp_f",
                                                     "lbound_lhs", "lbound_rhs", "outflow"};
const std::vector<std::string> kSweepHeader = {"r",           "l1_rho_gap", "l1_j_gap", "product_gap",
                                               "energy_margin", "mt_sup",   "runtime_s"};

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows) {
  CsvWriter w(kDiagnosticsHeader);
  for (const auto& r : rows)
    w.row(std::vector<double>{r.t, r.mass, r.momentum, r.energy, r.d_local, r.d_cs, r.linf_f, r.lp_f,
                              r.lbound_lhs, r.lbound_rhs, r.outflow});
  return w.str();
}

std::string snapshot_csv(const PhaseDensity& f) {
  CsvWriter w({"x", "v", "f"});
  for (int i = 0; i < f.grid.x.cells; ++i)
    for (int j = 0; j < f.grid.v.cells; ++j)
      w.row(std::vector<double>{f.grid.x.center(i), f.grid.v.center(j), f.f(i, j)});
  return w.str();
}

std::string trajectory_csv(const std::vector<ParticleEnsemble>& snapshots) {
  const int dim = snapshots.empty() ? 1 : snapshots.front().dim;
  CsvWriter w(dim == 1 ? std::vector<std::string>{"t", "i", "x", "v"}
                       : std::vector<std::string>{"t", "i", "x", "y", "vx", "vy"});
  for (const auto& e : snapshots) {
    const std::string t = format_double(e.t);
    for (int i = 0; i < e.size(); ++i) {
      std::vector<std::string> fields{t, std::to_string(i)};
      for (int a = 0; a < dim; ++a) fields.push_back(format_double(e.x(a, i)));
      for (int a = 0; a < dim; ++a) fields.push_back(format_double(e.v(a, i)));
      w.row(fields);
    }
  }
  return w.str();
}

std::string sweep_csv(const SweepReport& report) {
  CsvWriter w(kSweepHeader);
  auto put = [&w](const SweepRow& r) {
    w.row(std::vector<double>{r.r, r.l1_rho_gap, r.l1_j_gap, r.product_gap, r.energy_margin, r.mt_sup,
                              r.runtime_s});
  };
  for (const auto& r : report.rows) put(r);
  put(report.limit);
  return w.str();
}

}  // namespace flocklab
