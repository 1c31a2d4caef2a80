#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace ccoh;
using testing_support::rel;

namespace fs = std::filesystem;

namespace {

const fs::path kData = CCOH_DATA_DIR;

SweepSpec small_spec() {
  SweepSpec s;
  s.defect = testing_support::siv();
  s.strain_ghz = {10.0, 300.0, 4, true};
  s.theta_deg = {0.0, 90.0, 4, false};
  s.phi_deg = {0.0, 0.0, 1, false};
  s.temperature_k = {1.0, 4.0, 3, false};
  s.omega_q_ghz = 1.0;
  s.chi_s2 = 18.1e-30;
  return s;
}

}  // namespace

TEST(FieldSolve, LowerBranchTargetAlongAxis) {
  FieldSolveOptions o;
  o.target = FrequencyTarget::lower_branch;
  const auto d = testing_support::siv();
  const double b = solve_field_magnitude(d, 0.0, 0.0, Vector3::UnitZ(), 1.0, o);
  EXPECT_LT(rel(b, 1.0 / ((d.g - 2.0 * d.q) * kBohrGHzPerTesla)), 1e-9);
  EXPECT_NEAR(b, 0.03965, 1e-5);  // quoted to four figures
}

TEST(FieldSolve, MeanTargetAlongAxis) {
  const auto d = testing_support::siv();
  const double b = solve_field_magnitude(d, 0.0, 0.0, Vector3::UnitZ(), 1.0);
  EXPECT_LT(rel(b, 1.0 / (d.g * kBohrGHzPerTesla)), 1e-9);
}

TEST(FieldSolve, ConstraintIsSatisfiedAtArbitraryOrientation) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto d = testing_support::siv();
  for (int n = 0; n < 20; ++n) {
    const auto unit = BiasConditions::from_polar(4.0, 1.0, 180.0 * u(rng), 360.0 * u(rng),
                                                 300.0 * u(rng), 360.0 * u(rng));
    const double target = 0.5 + 5.0 * u(rng);
    const double b = solve_field_magnitude(d, unit.strain_x_ghz, unit.strain_y_ghz, unit.b_tesla,
                                           target);
    BiasConditions bias = unit;
    bias.b_tesla *= b;
    EXPECT_NEAR(angular_to_ghz(solve_levels(d, bias).omega_q), target, 1e-9);
  }
}

TEST(FieldSolve, Errors) {
  const auto d = testing_support::siv();
  FieldSolveOptions o;
  o.b_max_tesla = 0.01;
  try {
    solve_field_magnitude(d, 0.0, 0.0, Vector3::UnitZ(), 50.0, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unreachable_frequency);
  }
  EXPECT_THROW(solve_field_magnitude(d, 0.0, 0.0, Vector3::UnitZ(), 0.0), Error);
  EXPECT_THROW(solve_field_magnitude(d, 0.0, 0.0, Vector3(1, 1, 0), 1.0), Error);
}

TEST(Sweep, AxisValues) {
  const auto lin = SweepAxis{0.0, 90.0, 7, false}.values();
  ASSERT_EQ(lin.size(), 7u);
  EXPECT_DOUBLE_EQ(lin[1], 15.0);
  EXPECT_EQ(lin.back(), 90.0);
  const auto lg = SweepAxis{1.0, 1000.0, 4, true}.values();
  EXPECT_NEAR(lg[1], 10.0, 1e-12);
  EXPECT_EQ(lg.back(), 1000.0);
  EXPECT_THROW((SweepAxis{0.0, 10.0, 3, true}.validate("x")), Error);
  EXPECT_THROW((SweepAxis{5.0, 1.0, 3, false}.validate("x")), Error);
}

TEST(Sweep, OutputIsIndependentOfWorkerCount) {
  const auto spec = small_spec();
  const std::string one = sweep_to_csv(spec, run_sweep(spec, 1));
  EXPECT_EQ(one, sweep_to_csv(spec, run_sweep(spec, 3)));
  EXPECT_EQ(one, sweep_to_csv(spec, run_sweep(spec, 8)));
}

TEST(Sweep, CellsEqualDirectPipelineAndSatisfyConstraint) {
  const auto spec = small_spec();
  const auto result = run_sweep(spec, 2);
  ASSERT_EQ(result.cells.size(), 4u * 4u * 3u);
  EXPECT_EQ(result.failures, 0u);
  for (const auto& c : result.cells) {
    ASSERT_TRUE(c.report) << c.error;
    EXPECT_NEAR(angular_to_ghz(c.report->omega_q), 1.0, 1e-9);
    auto bias = BiasConditions::from_polar(c.temperature_k, c.b_tesla, c.theta_deg, c.phi_deg,
                                           c.strain_ghz);
    const auto direct = predict_coherence(spec.defect, bias, fixed_cross_sections(18.1e-30));
    EXPECT_LT(rel(c.report->t2_eff, direct.t2_eff), 1e-9);
    EXPECT_LT(rel(c.report->t1_b, direct.t1_b), 1e-9);
  }
}

TEST(Sweep, LambdaEffFallsWithStrain) {
  auto spec = small_spec();
  spec.strain_ghz = {1.0, 1000.0, 13, true};
  spec.theta_deg = {30.0, 30.0, 1, false};
  spec.temperature_k = {4.0, 4.0, 1, false};
  const auto result = run_sweep(spec);
  double prev = kInfinity;
  for (const auto& c : result.cells) {
    const double l = std::abs(c.report->lambda_eff);
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(Sweep, FailedCellsAreReportedNotFatal) {
  auto spec = small_spec();
  spec.b_max_tesla = 0.05;
  spec.omega_q_ghz = 5.0;  // needs ~0.18 T
  const auto result = run_sweep(spec);
  EXPECT_EQ(result.failures, result.cells.size());
  const auto csv = sweep_to_csv(spec, result);
  EXPECT_NE(csv.find("unreachable-frequency"), std::string::npos);
}

TEST(Sweep, CacheIsTransparent) {
  auto spec = small_spec();
  spec.chi_s2.reset();
  spec.strain_ghz = {50.0, 50.0, 1, false};
  spec.temperature_k = {4.0, 4.0, 1, false};
  ChiCache cache;
  const auto direct = sweep_to_csv(spec, run_sweep(spec, 1));
  EXPECT_EQ(direct, sweep_to_csv(spec, run_sweep(spec, 1, &cache)));
  EXPECT_EQ(direct, sweep_to_csv(spec, run_sweep(spec, 2, &cache)));
  EXPECT_EQ(cache.size(), 1u);
}

TEST(Sweep, SpecFromJsonResolvesFiles) {
  const auto spec = sweep_spec_from_json(read_json_file(kData / "sweep_siv_angle.json"), kData);
  EXPECT_EQ(spec.defect.name, "SiV");
  EXPECT_EQ(spec.theta_deg.count, 7);
  EXPECT_EQ(spec.temperature_k.count, 4);
  ASSERT_TRUE(spec.omega_q_ghz);
  EXPECT_EQ(*spec.omega_q_ghz, 1.0);
  EXPECT_THROW(sweep_spec_from_json(Json{{"defect", "siv.json"}}, kData), Error);  // no constraint
  Json bad = read_json_file(kData / "sweep_siv_angle.json");
  bad["outputs"] = {"t9_s"};
  EXPECT_THROW(sweep_spec_from_json(bad, kData), Error);
}

TEST(Io, LoadsShippedParameterFiles) {
  const auto siv = load_defect(kData / "siv.json");
  EXPECT_EQ(siv.lambda_soc_ghz, 50.0);
  EXPECT_EQ(siv.d_phz, 1.3);
  const auto m = load_material(kData / "diamond.json");
  EXPECT_EQ(m.c44, 578e9);
  EXPECT_LT((m.defect_frame - default_defect_frame()).norm(), 1e-15);
}

TEST(Io, RejectsBadParameterFiles) {
  EXPECT_THROW(defect_from_json(Json{{"lambda_soc_ghz", 50}, {"q", 0.1}, {"d_phz", 1.3}}), Error);
  EXPECT_THROW(defect_from_json(Json{{"lambda_soc_ghz", "50"}, {"q", 0.1}, {"d_phz", 1.3},
                                     {"f_phz", 1}}),
               Error);
  Json m = {{"density_kg_m3", 3512}, {"c11_gpa", 1079}, {"c12_gpa", 124}, {"c44_gpa", 578}};
  m["frame"] = {{1, 0, 0}, {1, 1, 0}, {0, 0, 1}};
  try {
    material_from_json(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_frame);
  }
  EXPECT_THROW(load_defect("/nonexistent/x.json"), Error);
}

TEST(Io, NumberFormattingRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 18.1e-30, 6.02e23, -2.5}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(kInfinity), "inf");
  EXPECT_EQ(parse_double("inf"), kInfinity);
  EXPECT_EQ(json_number(kInfinity), Json("inf"));
  EXPECT_THROW(parse_double("1.0x"), Error);
}

TEST(Io, ReportFieldsHaveFixedOrder) {
  const std::vector<std::string> expected{"omega_q_ghz", "omega_b_ghz", "lambda_eff_ghz", "chi_b",
                                          "chi_qp",      "chi_bp",      "t1_b_s",         "t1_q_s",
                                          "t2_q_s",      "t_s_b_s",     "t2_eff_s",       "sigma_z_b_th"};
  const auto fields = report_fields(CoherenceReport{});
  ASSERT_EQ(fields.size(), expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_EQ(fields[k].first, expected[k]);
  const auto j = report_to_json(CoherenceReport{});
  EXPECT_EQ(j.at("t1_b_s"), Json("inf"));
}

TEST(Io, CsvSplitAndSanitize) {
  std::istringstream in("a,b,c\n1,2,3\r\n\n4,,6\n");
  const auto t = read_csv(in);
  ASSERT_EQ(t.header.size(), 3u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "");
  EXPECT_EQ(t.rows[0][2], "3");
  EXPECT_EQ(t.column("c"), 2);
  EXPECT_EQ(t.column("z"), -1);
  EXPECT_EQ(csv_safe("a,b\nc"), "a;b;c");
}

namespace {

std::string measurement_csv(const std::vector<MeasurementRow>& rows) {
  std::ostringstream out;
  write_csv_row(out, measurement_columns());
  for (const auto& r : rows) {
    write_csv_row(out, {r.defect_id, format_double(r.temperature_k), format_double(r.b_tesla),
                        format_double(r.b_theta_deg), format_double(r.b_phi_deg),
                        format_double(r.strain_x_ghz), format_double(r.strain_y_ghz),
                        std::string(to_string(r.quantity)), format_double(r.measured_s)});
  }
  return out.str();
}

std::vector<MeasurementRow> synthetic_rows(const MaterialParameters& m) {
  std::vector<MeasurementRow> rows;
  const std::pair<const char*, DefectParameters> defects[] = {{"siv", testing_support::siv()},
                                                              {"snv", testing_support::snv()}};
  int n = 0;
  for (const auto& [id, d] : defects) {
    const auto chi = scattering_cross_section(d, m);
    for (auto q : {Quantity::t1_b, Quantity::t1_q, Quantity::t2_q}) {
      MeasurementRow r;
      r.defect_id = id;
      r.temperature_k = 1.5 + n;
      r.b_tesla = 0.1 + 0.05 * n;
      r.b_theta_deg = 15.0 * n;
      r.b_phi_deg = 10.0;
      r.strain_x_ghz = 5.0 * n;
      r.strain_y_ghz = 2.0;
      r.quantity = q;
      r.measured_s = predicted_value(predict_coherence(d, r.bias(), chi), q);
      rows.push_back(r);
      ++n;
    }
  }
  return rows;
}

}  // namespace

TEST(Compare, RoundTripOfPredictionsGivesUnitRatio) {
  const MaterialParameters m;
  std::istringstream in(measurement_csv(synthetic_rows(m)));
  const auto parsed = parse_measurements(read_csv(in));
  const auto result = predict_for_measurements(parsed, kData, m);
  EXPECT_EQ(result.failures, 0u);
  ASSERT_EQ(result.entries.size(), 6u);
  for (const auto& e : result.entries) EXPECT_NEAR(e.ratio, 1.0, 1e-9) << e.error;
  EXPECT_LT(result.mean_abs_relative_deviation, 1e-9);
}

TEST(Compare, PerturbedTemperatureMovesRatio) {
  const MaterialParameters m;
  auto rows = synthetic_rows(m);
  for (auto& r : rows) r.temperature_k += 1.0;
  std::istringstream in(measurement_csv(rows));
  const auto result = predict_for_measurements(parse_measurements(read_csv(in)), kData, m);
  // Warmer predictions are shorter, so measured / predicted rises above 1.
  for (const auto& e : result.entries) EXPECT_GT(e.ratio, 1.0 + 1e-3);
}

TEST(Compare, RowErrorsAreLocal) {
  const MaterialParameters m;
  auto rows = synthetic_rows(m);
  rows[1].defect_id = "gev";
  std::string csv = measurement_csv(rows);
  csv += "siv,4,0.1,0,0,0,0,T9,1e-6\n";
  std::istringstream in(csv);
  const auto result = predict_for_measurements(parse_measurements(read_csv(in)), kData, m);
  ASSERT_EQ(result.entries.size(), 7u);
  EXPECT_EQ(result.failures, 2u);
  EXPECT_NE(result.entries[1].error.find("unknown defect id"), std::string::npos);
  EXPECT_NE(result.entries[6].error.find("unknown quantity"), std::string::npos);
  EXPECT_NEAR(result.entries[0].ratio, 1.0, 1e-9);
  const auto out = comparison_to_csv(result);
  EXPECT_NE(out.find("predicted_s,ratio,error"), std::string::npos);
}

TEST(Compare, EmptyTableAndMissingColumns) {
  std::istringstream empty("defect_id,temperature_k,b_tesla,b_theta_deg,b_phi_deg,strain_x_ghz,"
                           "strain_y_ghz,quantity,measured_s\n");
  const auto result = predict_for_measurements(parse_measurements(read_csv(empty)), kData);
  EXPECT_TRUE(result.entries.empty());
  EXPECT_EQ(result.failures, 0u);
  std::istringstream missing("defect_id,temperature_k\n");
  EXPECT_THROW(parse_measurements(read_csv(missing)), Error);
}

TEST(Compare, ShippedFixtureRoundTrips) {
  const auto parsed = parse_measurements(read_csv_file(kData / "fixtures" / "measurements.csv"));
  const auto result = predict_for_measurements(parsed, kData, load_material(kData / "diamond.json"));
  EXPECT_EQ(result.failures, 0u);
  EXPECT_FALSE(result.entries.empty());
  for (const auto& e : result.entries) EXPECT_NEAR(e.ratio, 1.0, 1e-9);
}
