#include "odr_dro/harness.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "odr_dro/applications.hpp"

namespace odr {
namespace {

MatrixRow row(int size, int index, Method method, std::optional<double> value, int m1 = 2,
              bool certified = true) {
  MatrixRow r;
  r.size = size;
  r.index = index;
  r.label = to_string(method);
  if (method != Method::kFull) r.label += ":" + std::to_string(m1);
  r.report.method = method;
  r.report.m1 = m1;
  r.report.value = value;
  r.report.certified = certified && value.has_value();
  r.report.seconds = 0.5;
  return r;
}

TEST(Methods, LabelsRoundTrip) {
  for (Method m : {Method::kFull, Method::kPcaLb, Method::kPcaUb, Method::kOdrLb, Method::kOdrUb,
                   Method::kOdrRlb, Method::kHeuristicB}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("ODR-LB"), InputError);
  EXPECT_EQ(parse_methods("full,odr-ub").size(), 2u);
  EXPECT_THROW(parse_methods(","), InputError);
}

TEST(ReducedDim, DefaultsAndFractions) {
  ReducedDim d;
  EXPECT_EQ(d.resolve(Method::kOdrLb, 40, 2), 2);
  EXPECT_EQ(d.resolve(Method::kOdrRlb, 40, 2), 1);
  EXPECT_EQ(d.resolve(Method::kPcaLb, 40, 2), 8);
  d.fraction = 0.5;
  EXPECT_EQ(d.resolve(Method::kPcaUb, 10, 2), 5);
  d.absolute = 3;
  EXPECT_EQ(d.resolve(Method::kPcaUb, 10, 2), 3);
}

TEST(RunSpec, RejectsIncompatibleDimensions) {
  const DroInstance in = gen_newsvendor(6, 0);
  RunSpec s;
  s.method = Method::kOdrRlb;
  s.m1.absolute = 3;
  EXPECT_THROW(s.check(in), InputError);
  s.method = Method::kPcaLb;
  s.m1.absolute = 7;
  EXPECT_THROW(s.check(in), InputError);
  s.m1.absolute.reset();
  s.m1.fraction = 1.5;
  EXPECT_THROW(s.check(in), InputError);
  const BoundReport r = run_method(in, s);
  EXPECT_FALSE(r.error.empty());
  EXPECT_FALSE(r.value.has_value());
}

TEST(RunMethod, FixtureFullValue) {
  RunSpec s;
  const BoundReport r = run_method(cvar_pca_counterexample(), s);
  ASSERT_TRUE(r.value.has_value());
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(*r.value, 2.0, 1e-4);
}

TEST(RunMethod, InfeasiblePcaUpperIsInfinite) {
  RunSpec s;
  s.method = Method::kPcaUb;
  const BoundReport r = run_method(gen_newsvendor(10, 0), s);
  ASSERT_TRUE(r.value.has_value());
  EXPECT_TRUE(std::isinf(*r.value) && *r.value > 0);
  EXPECT_TRUE(r.certified);
}

TEST(RunMethod, RevisitedBoundIsNotCertified) {
  RunSpec s;
  s.method = Method::kOdrRlb;
  s.admm.max_iter = 5;
  const BoundReport r = run_method(gen_cvar(6, 1), s);
  EXPECT_TRUE(r.value.has_value());
  EXPECT_FALSE(r.certified);
  EXPECT_EQ(r.m1, 1);
}

TEST(RunMatrix, OneInstanceTwoMethodsGivesTwoRows) {
  std::vector<MatrixInstance> instances{{8, 0, gen_newsvendor(8, 3)}};
  RunSpec full, lb;
  lb.method = Method::kPcaLb;
  const auto rows = run_matrix(instances, {full, lb});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].label, "full");
  EXPECT_EQ(rows[1].label, "pca-lb:2");
  ASSERT_TRUE(rows[1].report.gaps.gap1.has_value());
  EXPECT_GE(*rows[1].report.gaps.gap1, -1e-6);
}

TEST(RunMatrix, ThreadCountDoesNotChangeResults) {
  std::vector<MatrixInstance> instances;
  for (int i = 0; i < 3; ++i) instances.push_back({6, i, gen_cvar(6, i)});
  std::vector<RunSpec> specs(3);
  specs[1].method = Method::kPcaLb;
  specs[2].method = Method::kOdrUb;
  specs[2].admm.max_iter = 5;
  MatrixOptions one, many;
  one.threads = 1;
  many.threads = 4;
  std::ostringstream a, b;
  write_csv(a, run_matrix(instances, specs, one), false);
  write_csv(b, run_matrix(instances, specs, many), false);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Annotate, GapsAndMissingFullValue) {
  std::vector<MatrixRow> rows{row(10, 0, Method::kFull, -100.0), row(10, 0, Method::kOdrLb, -101.0),
                              row(10, 0, Method::kOdrUb, -99.0), row(10, 1, Method::kOdrLb, -5.0),
                              row(10, 1, Method::kOdrUb, -4.0)};
  annotate_rows(rows);
  EXPECT_NEAR(*rows[1].report.gaps.gap1, 1.0, 1e-12);
  EXPECT_NEAR(*rows[2].report.gaps.gap2, 1.0, 1e-12);
  EXPECT_NEAR(*rows[2].report.gaps.interval, 2.0 / 99.0 * 100.0, 1e-12);
  EXPECT_FALSE(rows[3].report.gaps.gap1.has_value());
  EXPECT_FALSE(rows[4].report.gaps.gap2.has_value());
  EXPECT_NEAR(*rows[4].report.gaps.interval, 25.0, 1e-12);
  std::ostringstream csv;
  write_csv(csv, rows);
  EXPECT_NE(csv.str().find("10,1,odr-lb:2,-5,0.500,-,-,-"), std::string::npos) << csv.str();
}

TEST(Annotate, SandwichTripwire) {
  std::vector<MatrixRow> low{row(5, 0, Method::kFull, 1.0), row(5, 0, Method::kPcaLb, 1.1)};
  EXPECT_THROW(annotate_rows(low), SandwichViolation);
  EXPECT_NO_THROW(annotate_rows(low, false));
  std::vector<MatrixRow> up{row(5, 0, Method::kFull, 1.0), row(5, 0, Method::kOdrUb, 0.9)};
  EXPECT_THROW(annotate_rows(up), SandwichViolation);
  std::vector<MatrixRow> slack{row(5, 0, Method::kFull, 1.0), row(5, 0, Method::kOdrLb, 1.0 + 1e-7)};
  EXPECT_NO_THROW(annotate_rows(slack));
  // The revisited bound is not certified and never trips the check.
  std::vector<MatrixRow> rlb{row(5, 0, Method::kFull, 1.0), row(5, 0, Method::kOdrRlb, 2.0, 1, false)};
  EXPECT_NO_THROW(annotate_rows(rlb));
}

TEST(Csv, RoundTripAndSummary) {
  std::vector<MatrixRow> rows{row(10, 0, Method::kFull, -10.0), row(10, 0, Method::kOdrLb, -10.5),
                              row(10, 1, Method::kFull, -20.0), row(10, 1, Method::kOdrLb, -20.0),
                              row(20, 0, Method::kFull, -30.0), row(20, 0, Method::kOdrLb, std::nullopt)};
  annotate_rows(rows);
  std::ostringstream out;
  write_csv(out, rows);
  std::istringstream in(out.str());
  const auto parsed = read_csv(in);
  ASSERT_EQ(parsed.size(), rows.size());
  EXPECT_EQ(parsed[1].method, "odr-lb:2");
  EXPECT_DOUBLE_EQ(*parsed[1].value, -10.5);
  EXPECT_FALSE(parsed[5].value.has_value());

  const auto summary = summarize(parsed);
  ASSERT_EQ(summary.size(), 4u);
  EXPECT_EQ(summary[1].method, "odr-lb:2");
  EXPECT_EQ(summary[1].count, 2);
  // Means of the per-instance rows.
  EXPECT_NEAR(*summary[1].value, (-10.5 - 20.0) / 2, 1e-9);
  EXPECT_NEAR(*summary[1].gap1, (5.0 + 0.0) / 2, 1e-4);
  EXPECT_FALSE(summary[3].value.has_value());

  std::ostringstream r1, r2;
  write_report(r1, summary);
  std::istringstream again(out.str());
  write_report(r2, summarize(read_csv(again)));
  EXPECT_EQ(r1.str(), r2.str());
}

TEST(Csv, RejectsMalformedInput) {
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(read_csv(bad_header), InputError);
  std::istringstream bad_row(std::string(kCsvHeader) + "\n1,2,full,x,-,-,-,-\n");
  EXPECT_THROW(read_csv(bad_row), InputError);
  std::istringstream short_row(std::string(kCsvHeader) + "\n1,2,full\n");
  EXPECT_THROW(read_csv(short_row), InputError);
}

TEST(Svg, OneSeriesPerMethodWithData) {
  std::vector<SummaryRow> s(4);
  s[0] = {10, "odr-lb:2", 1, -1.0, 0.1, 0.5, std::nullopt, std::nullopt};
  s[1] = {20, "odr-lb:2", 1, -2.0, 0.2, 0.7, std::nullopt, std::nullopt};
  s[2] = {10, "pca-lb:2", 1, -3.0, 0.1, 4.0, std::nullopt, std::nullopt};
  s[3] = {10, "full", 1, -1.0, 0.3, std::nullopt, std::nullopt, std::nullopt};
  const std::string svg = render_svg(s, PlotMetric::kGap1);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  std::size_t lines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
  EXPECT_EQ(svg.find("full"), std::string::npos);
  EXPECT_EQ(render_svg(s, PlotMetric::kTime), render_svg(s, PlotMetric::kTime));
}

TEST(Workers, EnvironmentCapsThePool) {
  ::setenv("ODR_DRO_THREADS", "2", 1);
  EXPECT_EQ(worker_count(8), 2);
  EXPECT_EQ(worker_count(1), 1);
  ::unsetenv("ODR_DRO_THREADS");
  EXPECT_EQ(worker_count(3), 3);
}

}  // namespace
}  // namespace odr
