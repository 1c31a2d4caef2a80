#pragma once

// Parameter files (JSON), report serialization and flat CSV helpers.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccoh/acoustics.hpp"
#include "ccoh/error.hpp"
#include "ccoh/model.hpp"
#include "ccoh/rates.hpp"

namespace ccoh {

using Json = nlohmann::json;

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::io, path.string() + ": " + e.what());
  }
}

namespace detail {

inline double required_number(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw Error(ErrorKind::invalid_parameter, where + ": missing numeric key '" + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace detail

/// Keys: lambda_soc_ghz, q, g (optional), d_phz, f_phz; optional name.
inline DefectParameters defect_from_json(const Json& j, const std::string& fallback_name = "") {
  const std::string where = fallback_name.empty() ? "defect" : fallback_name;
  DefectParameters d;
  d.name = j.value("name", fallback_name);
  d.lambda_soc_ghz = detail::required_number(j, "lambda_soc_ghz", where);
  d.q = detail::required_number(j, "q", where);
  if (j.contains("g")) d.g = detail::required_number(j, "g", where);
  d.d_phz = detail::required_number(j, "d_phz", where);
  d.f_phz = detail::required_number(j, "f_phz", where);
  d.validate();
  return d;
}

inline DefectParameters load_defect(const std::filesystem::path& path) {
  return defect_from_json(read_json_file(path), path.stem().string());
}

/// Keys: density_kg_m3, c11_gpa, c12_gpa, c44_gpa; optional "frame" as three
/// axis triples [x, y, z] in crystal coordinates (normalized on load).
inline MaterialParameters material_from_json(const Json& j, const std::string& fallback_name = "") {
  const std::string where = fallback_name.empty() ? "material" : fallback_name;
  MaterialParameters m;
  m.name = j.value("name", fallback_name.empty() ? m.name : fallback_name);
  m.density = detail::required_number(j, "density_kg_m3", where);
  m.c11 = detail::required_number(j, "c11_gpa", where) * 1e9;
  m.c12 = detail::required_number(j, "c12_gpa", where) * 1e9;
  m.c44 = detail::required_number(j, "c44_gpa", where) * 1e9;
  if (j.contains("frame")) {
    const Json& f = j.at("frame");
    if (!f.is_array() || f.size() != 3) {
      throw Error(ErrorKind::invalid_frame, where + ": frame must be three axis triples");
    }
    Eigen::Matrix3d r;
    for (int a = 0; a < 3; ++a) {
      const Json& axis = f.at(a);
      if (!axis.is_array() || axis.size() != 3) {
        throw Error(ErrorKind::invalid_frame, where + ": frame axis must have three entries");
      }
      Eigen::Vector3d v(axis[0].get<double>(), axis[1].get<double>(), axis[2].get<double>());
      if (!(v.norm() > 0.0)) throw Error(ErrorKind::invalid_frame, where + ": zero frame axis");
      r.row(a) = v.normalized();
    }
    m.defect_frame = r;
  }
  m.validate();
  return m;
}

inline MaterialParameters load_material(const std::filesystem::path& path) {
  return material_from_json(read_json_file(path), path.stem().string());
}

/// Shortest representation that round-trips; "inf"/"-inf"/"nan" otherwise.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "inf" || s == "+inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::invalid_parameter, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

/// JSON has no infinity; +inf times are written as the string "inf".
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

/// Report fields in their fixed output order (GHz for frequencies, s for times).
inline std::vector<std::pair<std::string, double>> report_fields(const CoherenceReport& r) {
  return {
      {"omega_q_ghz", angular_to_ghz(r.omega_q)},
      {"omega_b_ghz", angular_to_ghz(r.omega_b)},
      {"lambda_eff_ghz", angular_to_ghz(r.lambda_eff)},
      {"chi_b", r.chi.chi_b},
      {"chi_qp", r.chi.chi_q_prime},
      {"chi_bp", r.chi.chi_b_prime},
      {"t1_b_s", r.t1_b},
      {"t1_q_s", r.t1_q},
      {"t2_q_s", r.t2_q},
      {"t_s_b_s", r.t_s_b},
      {"t2_eff_s", r.t2_eff},
      {"sigma_z_b_th", r.sigma_z_b_thermal},
  };
}

inline Json report_to_json(const CoherenceReport& r) {
  Json j = Json::object();
  for (const auto& [k, v] : report_fields(r)) j[k] = json_number(v);
  return j;
}

// -- CSV ---------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos
                                                                               : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return read_csv(in);
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

// Errors go into a single CSV cell; keep them free of separators.
inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace ccoh
