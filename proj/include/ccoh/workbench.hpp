#pragma once

// Bias solving, parameter sweeps and measurement comparison on top of the
// model -> acoustics -> rates pipeline.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "ccoh/acoustics.hpp"
#include "ccoh/error.hpp"
#include "ccoh/io.hpp"
#include "ccoh/model.hpp"
#include "ccoh/rates.hpp"

namespace ccoh {

// ---------------------------------------------------------------------------
// Field solve

enum class FrequencyTarget {
  mean,          // omega_Q averaged over both branches (what the rates consume)
  lower_branch,  // E1 - E0
};

struct FieldSolveOptions {
  double b_max_tesla = 20.0;
  int scan_points = 2000;
  FrequencyTarget target = FrequencyTarget::mean;
};

inline double qubit_frequency_ghz(const LevelStructure& levels, FrequencyTarget target) {
  if (target == FrequencyTarget::lower_branch) {
    return angular_to_ghz(levels.energies[1] - levels.energies[0]);
  }
  return angular_to_ghz(levels.omega_q);
}

/// |B| along `direction` such that the qubit frequency equals `target_ghz`.
/// Scans [0, B_max] for the first sign change, then refines with TOMS 748.
inline double solve_field_magnitude(const DefectParameters& defect, double strain_x_ghz,
                                    double strain_y_ghz, const Vector3& direction,
                                    double target_ghz, const FieldSolveOptions& options = {}) {
  if (!(target_ghz > 0.0) || !std::isfinite(target_ghz)) {
    throw Error(ErrorKind::invalid_parameter, "target qubit frequency must be positive");
  }
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw Error(ErrorKind::invalid_parameter, "field direction must be a unit vector");
  }
  auto residual = [&](double b) {
    if (b <= 0.0) return -target_ghz;  // Kramers-degenerate doublets at zero field
    BiasConditions bias;
    bias.b_tesla = b * direction;
    bias.strain_x_ghz = strain_x_ghz;
    bias.strain_y_ghz = strain_y_ghz;
    return qubit_frequency_ghz(solve_levels(defect, bias), options.target) - target_ghz;
  };

  const int n = std::max(options.scan_points, 2);
  double lo = 0.0;
  double f_lo = -target_ghz;
  for (int k = 1; k <= n; ++k) {
    const double hi = options.b_max_tesla * k / n;
    const double f_hi = residual(hi);
    if (f_hi == 0.0) return hi;
    if (f_hi > 0.0) {
      std::uintmax_t iters = 200;
      const auto tol = boost::math::tools::eps_tolerance<double>(52);
      const auto [a, b] =
          boost::math::tools::toms748_solve(residual, lo, hi, f_lo, f_hi, tol, iters);
      const double fa = std::abs(residual(a));
      const double fb = std::abs(residual(b));
      return fa <= fb ? a : b;
    }
    lo = hi;
    f_lo = f_hi;
  }
  std::ostringstream msg;
  msg << "qubit frequency " << target_ghz << " GHz not reached below " << options.b_max_tesla
      << " T";
  throw Error(ErrorKind::unreachable_frequency, msg.str());
}

// ---------------------------------------------------------------------------
// Cross-section cache

/// Thread-safe memo of chi per (defect, material, quadrature) key.
class ChiCache {
 public:
  CrossSections get(const DefectParameters& defect, const MaterialParameters& material,
                    const QuadratureOptions& options = {}) {
    const std::string key = make_key(defect, material, options);
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const CrossSections chi = scattering_cross_section(defect, material, options);
    std::lock_guard lock(mutex_);
    return cache_.emplace(key, chi).first->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
  }

 private:
  static std::string make_key(const DefectParameters& d, const MaterialParameters& m,
                              const QuadratureOptions& o) {
    std::ostringstream k;
    k.precision(17);
    k << d.d_phz << '|' << d.f_phz << '|' << m.density << '|' << m.c11 << '|' << m.c12 << '|'
      << m.c44;
    for (int i = 0; i < 9; ++i) k << '|' << m.defect_frame(i / 3, i % 3);
    k << '|' << static_cast<int>(o.scheme) << '|' << o.order.value_or(-1) << '|' << o.tolerance;
    return k.str();
  }

  mutable std::mutex mutex_;
  std::map<std::string, CrossSections> cache_;
};

/// Single-bias pipeline: levels -> class cross-sections -> report.
inline CoherenceReport predict_coherence(const DefectParameters& defect, const BiasConditions& bias,
                                         const CrossSections& chi) {
  const LevelStructure levels = solve_levels(defect, bias);
  return coherence_times(levels, class_cross_sections(levels, chi.chi), bias.temperature_k);
}

/// Cross-sections with an externally supplied mean chi (e.g. a tabulated value).
inline CrossSections fixed_cross_sections(double chi) {
  CrossSections c;
  c.chi_x = c.chi_y = c.chi = chi;
  c.converged = true;
  return c;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepAxis {
  double min = 0.0;
  double max = 0.0;
  int count = 1;
  bool log = false;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(count);
    for (int i = 0; i < count; ++i) {
      const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      v.push_back(log ? min * std::pow(max / min, s) : min + (max - min) * s);
    }
    if (count > 1) v.back() = max;
    return v;
  }

  void validate(const std::string& name) const {
    if (count < 1) throw Error(ErrorKind::invalid_parameter, name + ": count must be >= 1");
    if (!std::isfinite(min) || !std::isfinite(max) || max < min) {
      throw Error(ErrorKind::invalid_parameter, name + ": need finite min <= max");
    }
    if (log && !(min > 0.0)) {
      throw Error(ErrorKind::invalid_parameter, name + ": log axis needs min > 0");
    }
  }
};

struct SweepSpec {
  DefectParameters defect;
  MaterialParameters material;
  SweepAxis strain_ghz{1.0, 1000.0, 31, true};
  SweepAxis theta_deg{0.0, 0.0, 1, false};
  SweepAxis phi_deg{0.0, 0.0, 1, false};
  SweepAxis temperature_k{4.0, 4.0, 1, false};
  double strain_azimuth_deg = 0.0;
  std::optional<double> omega_q_ghz;  // exactly one of these two
  std::optional<double> b_tesla;
  FrequencyTarget frequency_target = FrequencyTarget::mean;
  double b_max_tesla = 20.0;
  std::optional<double> chi_s2;  // overrides the computed cross-section
  QuadratureOptions quadrature;
  std::vector<std::string> outputs;  // empty -> all report fields

  void validate() const {
    strain_ghz.validate("strain_ghz");
    theta_deg.validate("theta_deg");
    phi_deg.validate("phi_deg");
    temperature_k.validate("temperature_k");
    if (omega_q_ghz.has_value() == b_tesla.has_value()) {
      throw Error(ErrorKind::invalid_parameter,
                  "sweep constraint needs exactly one of omega_q_ghz, b_tesla");
    }
    if (chi_s2 && !(*chi_s2 > 0.0)) throw Error(ErrorKind::invalid_parameter, "chi_s2 must be > 0");
    static const CoherenceReport probe;
    const auto fields = report_fields(probe);
    for (const auto& o : outputs) {
      const bool known = std::any_of(fields.begin(), fields.end(),
                                     [&](const auto& f) { return f.first == o; });
      if (!known) throw Error(ErrorKind::invalid_parameter, "unknown output field '" + o + "'");
    }
  }
};

namespace detail {

inline SweepAxis axis_from_json(const Json& j, const char* name, SweepAxis fallback) {
  if (!j.contains(name)) return fallback;
  const Json& a = j.at(name);
  if (a.is_number()) return {a.get<double>(), a.get<double>(), 1, false};
  SweepAxis axis;
  axis.min = required_number(a, "min", name);
  axis.max = a.contains("max") ? required_number(a, "max", name) : axis.min;
  axis.count = a.value("count", 1);
  axis.log = a.value("log", false);
  return axis;
}

}  // namespace detail

/// Relative file paths in the spec resolve against `base_dir`.
inline SweepSpec sweep_spec_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  SweepSpec s;
  if (!j.contains("defect")) throw Error(ErrorKind::invalid_parameter, "sweep spec needs 'defect'");
  s.defect = j.at("defect").is_string() ? load_defect(resolve(j.at("defect").get<std::string>()))
                                        : defect_from_json(j.at("defect"));
  if (j.contains("material")) {
    s.material = j.at("material").is_string()
                     ? load_material(resolve(j.at("material").get<std::string>()))
                     : material_from_json(j.at("material"));
  }
  const Json axes = j.value("axes", Json::object());
  s.strain_ghz = detail::axis_from_json(axes, "strain_ghz", s.strain_ghz);
  s.theta_deg = detail::axis_from_json(axes, "theta_deg", s.theta_deg);
  s.phi_deg = detail::axis_from_json(axes, "phi_deg", s.phi_deg);
  s.temperature_k = detail::axis_from_json(axes, "temperature_k", s.temperature_k);
  s.strain_azimuth_deg = j.value("strain_azimuth_deg", 0.0);
  const Json c = j.value("constraint", Json::object());
  if (c.contains("omega_q_ghz")) s.omega_q_ghz = c.at("omega_q_ghz").get<double>();
  if (c.contains("b_tesla")) s.b_tesla = c.at("b_tesla").get<double>();
  if (c.value("target", std::string("mean")) == "lower_branch") {
    s.frequency_target = FrequencyTarget::lower_branch;
  }
  s.b_max_tesla = c.value("b_max_tesla", 20.0);
  if (j.contains("chi_s2")) s.chi_s2 = j.at("chi_s2").get<double>();
  if (j.contains("order")) s.quadrature.order = j.at("order").get<int>();
  if (j.contains("outputs")) s.outputs = j.at("outputs").get<std::vector<std::string>>();
  s.validate();
  return s;
}

struct SweepCell {
  double strain_ghz = 0.0;
  double theta_deg = 0.0;
  double phi_deg = 0.0;
  double temperature_k = 0.0;
  double b_tesla = std::numeric_limits<double>::quiet_NaN();
  std::optional<CoherenceReport> report;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // row-major over (strain, theta, phi, temperature)
  CrossSections chi;
  std::size_t failures = 0;
};

inline SweepCell evaluate_cell(const SweepSpec& spec, const CrossSections& chi, double strain,
                               double theta, double phi, double temperature) {
  SweepCell cell{strain, theta, phi, temperature};
  try {
    const BiasConditions unit =
        BiasConditions::from_polar(temperature, 1.0, theta, phi, strain, spec.strain_azimuth_deg);
    double b = spec.b_tesla.value_or(0.0);
    if (spec.omega_q_ghz) {
      FieldSolveOptions opts;
      opts.b_max_tesla = spec.b_max_tesla;
      opts.target = spec.frequency_target;
      b = solve_field_magnitude(spec.defect, unit.strain_x_ghz, unit.strain_y_ghz, unit.b_tesla,
                                *spec.omega_q_ghz, opts);
    }
    cell.b_tesla = b;
    BiasConditions bias = unit;
    bias.b_tesla = b * unit.b_tesla;
    cell.report = predict_coherence(spec.defect, bias, chi);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

/// Cartesian product of the axes. Cells are computed by `jobs` workers and
/// stored by index, so the result does not depend on scheduling.
inline SweepResult run_sweep(const SweepSpec& spec, int jobs = 1, ChiCache* cache = nullptr) {
  spec.validate();
  SweepResult result;
  if (spec.chi_s2) {
    result.chi = fixed_cross_sections(*spec.chi_s2);
  } else if (cache) {
    result.chi = cache->get(spec.defect, spec.material, spec.quadrature);
  } else {
    result.chi = scattering_cross_section(spec.defect, spec.material, spec.quadrature);
  }

  const auto strain = spec.strain_ghz.values();
  const auto theta = spec.theta_deg.values();
  const auto phi = spec.phi_deg.values();
  const auto temp = spec.temperature_k.values();
  const std::size_t total = strain.size() * theta.size() * phi.size() * temp.size();
  result.cells.resize(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < total; idx = next++) {
      std::size_t r = idx;
      const std::size_t it = r % temp.size();
      r /= temp.size();
      const std::size_t ip = r % phi.size();
      r /= phi.size();
      const std::size_t ith = r % theta.size();
      const std::size_t is = r / theta.size();
      result.cells[idx] = evaluate_cell(spec, result.chi, strain[is], theta[ith], phi[ip], temp[it]);
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(total, 1)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& c : result.cells) result.failures += c.report ? 0 : 1;
  return result;
}

inline std::string sweep_to_csv(const SweepSpec& spec, const SweepResult& result) {
  static const CoherenceReport probe;
  std::vector<std::string> fields = spec.outputs;
  if (fields.empty())
    for (const auto& f : report_fields(probe)) fields.push_back(f.first);

  std::ostringstream out;
  std::vector<std::string> header{"strain_ghz", "theta_deg", "phi_deg", "temperature_k", "b_tesla"};
  header.insert(header.end(), fields.begin(), fields.end());
  header.push_back("error");
  write_csv_row(out, header);
  for (const auto& c : result.cells) {
    std::vector<std::string> row{format_double(c.strain_ghz), format_double(c.theta_deg),
                                 format_double(c.phi_deg), format_double(c.temperature_k),
                                 format_double(c.b_tesla)};
    if (c.report) {
      const auto values = report_fields(*c.report);
      for (const auto& f : fields) {
        const auto it = std::find_if(values.begin(), values.end(),
                                     [&](const auto& v) { return v.first == f; });
        row.push_back(format_double(it->second));
      }
    } else {
      row.insert(row.end(), fields.size(), "");
    }
    row.push_back(csv_safe(c.error));
    write_csv_row(out, row);
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Measurement comparison

enum class Quantity { t1_b, t1_q, t2_q };

inline std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::t1_b: return "T1_B";
    case Quantity::t1_q: return "T1_Q";
    case Quantity::t2_q: return "T2_Q";
  }
  return "";
}

inline Quantity parse_quantity(std::string_view s) {
  if (s == "T1_B") return Quantity::t1_b;
  if (s == "T1_Q") return Quantity::t1_q;
  if (s == "T2_Q") return Quantity::t2_q;
  throw Error(ErrorKind::invalid_parameter, "unknown quantity '" + std::string(s) + "'");
}

struct MeasurementRow {
  std::string defect_id;
  double temperature_k = 0.0;
  double b_tesla = 0.0;
  double b_theta_deg = 0.0;
  double b_phi_deg = 0.0;
  double strain_x_ghz = 0.0;
  double strain_y_ghz = 0.0;
  Quantity quantity = Quantity::t1_b;
  double measured_s = 0.0;

  BiasConditions bias() const {
    BiasConditions b = BiasConditions::from_polar(temperature_k, b_tesla, b_theta_deg, b_phi_deg, 0.0);
    b.strain_x_ghz = strain_x_ghz;
    b.strain_y_ghz = strain_y_ghz;
    return b;
  }
};

inline const std::vector<std::string>& measurement_columns() {
  static const std::vector<std::string> cols{
      "defect_id",   "temperature_k", "b_tesla",  "b_theta_deg", "b_phi_deg",
      "strain_x_ghz", "strain_y_ghz", "quantity", "measured_s"};
  return cols;
}

/// T2_Q is compared against the effective coherence time, which includes the
/// qubit-branch coupling correction.
inline double predicted_value(const CoherenceReport& r, Quantity q) {
  switch (q) {
    case Quantity::t1_b: return r.t1_b;
    case Quantity::t1_q: return r.t1_q;
    case Quantity::t2_q: return r.t2_eff;
  }
  return kInfinity;
}

struct ParsedMeasurements {
  std::vector<MeasurementRow> rows;
  std::vector<std::string> errors;  // per input line; empty when valid
};

inline ParsedMeasurements parse_measurements(const CsvTable& table) {
  std::vector<int> idx;
  for (const auto& c : measurement_columns()) {
    const int i = table.column(c);
    if (i < 0) throw Error(ErrorKind::invalid_parameter, "measurement table lacks column " + c);
    idx.push_back(i);
  }
  ParsedMeasurements out;
  for (const auto& cells : table.rows) {
    MeasurementRow row;
    std::string error;
    try {
      auto cell = [&](int k) -> const std::string& {
        if (idx[k] >= static_cast<int>(cells.size())) {
          throw Error(ErrorKind::invalid_parameter, "short row");
        }
        return cells[idx[k]];
      };
      row.defect_id = cell(0);
      row.temperature_k = parse_double(cell(1));
      row.b_tesla = parse_double(cell(2));
      row.b_theta_deg = parse_double(cell(3));
      row.b_phi_deg = parse_double(cell(4));
      row.strain_x_ghz = parse_double(cell(5));
      row.strain_y_ghz = parse_double(cell(6));
      row.quantity = parse_quantity(cell(7));
      row.measured_s = parse_double(cell(8));
      if (!(row.measured_s > 0.0)) {
        throw Error(ErrorKind::invalid_parameter, "measured value must be positive");
      }
    } catch (const std::exception& e) {
      error = e.what();
    }
    out.rows.push_back(row);
    out.errors.push_back(error);
  }
  return out;
}

struct ComparisonEntry {
  MeasurementRow row;
  double predicted_s = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();  // measured / predicted
  std::string error;
};

struct ComparisonResult {
  std::vector<ComparisonEntry> entries;
  double mean_abs_relative_deviation = 0.0;  // over rows without errors
  std::size_t failures = 0;
};

/// Resolves each defect id to `<defects_dir>/<id>.json`. Row-level problems
/// are reported per entry.
inline ComparisonResult predict_for_measurements(const ParsedMeasurements& input,
                                                 const std::filesystem::path& defects_dir,
                                                 const MaterialParameters& material = {},
                                                 ChiCache* cache = nullptr) {
  ChiCache local;
  ChiCache& chis = cache ? *cache : local;
  std::map<std::string, DefectParameters> defects;
  ComparisonResult out;
  CompensatedSum deviation;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < input.rows.size(); ++i) {
    ComparisonEntry e;
    e.row = input.rows[i];
    e.error = i < input.errors.size() ? input.errors[i] : std::string();
    if (e.error.empty()) {
      try {
        auto it = defects.find(e.row.defect_id);
        if (it == defects.end()) {
          const auto path = defects_dir / (e.row.defect_id + ".json");
          if (!std::filesystem::exists(path)) {
            throw Error(ErrorKind::invalid_parameter, "unknown defect id '" + e.row.defect_id + "'");
          }
          it = defects.emplace(e.row.defect_id, load_defect(path)).first;
        }
        const CrossSections chi = chis.get(it->second, material);
        const auto report = predict_coherence(it->second, e.row.bias(), chi);
        e.predicted_s = predicted_value(report, e.row.quantity);
        e.ratio = e.row.measured_s / e.predicted_s;
        deviation += std::abs(e.ratio - 1.0);
        ++ok;
      } catch (const std::exception& ex) {
        e.error = ex.what();
      }
    }
    if (!e.error.empty()) ++out.failures;
    out.entries.push_back(std::move(e));
  }
  out.mean_abs_relative_deviation = ok ? deviation.value() / ok : 0.0;
  return out;
}

inline std::string comparison_to_csv(const ComparisonResult& result) {
  std::ostringstream out;
  std::vector<std::string> header = measurement_columns();
  for (const char* c : {"predicted_s", "ratio", "error"}) header.emplace_back(c);
  write_csv_row(out, header);
  for (const auto& e : result.entries) {
    const auto& r = e.row;
    write_csv_row(out, {r.defect_id, format_double(r.temperature_k), format_double(r.b_tesla),
                        format_double(r.b_theta_deg), format_double(r.b_phi_deg),
                        format_double(r.strain_x_ghz), format_double(r.strain_y_ghz),
                        std::string(to_string(r.quantity)), format_double(r.measured_s),
                        format_double(e.predicted_s), format_double(e.ratio), csv_safe(e.error)});
  }
  return out.str();
}

}  // namespace ccoh
