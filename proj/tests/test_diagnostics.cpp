#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rpi/diagnostics.hpp"
#include "rpi/errors.hpp"

using namespace rpi;

namespace {

std::shared_ptr<const StepTable> table(std::vector<double> b, std::vector<double> v) {
  return std::make_shared<const StepTable>(StepTable{std::move(b), std::move(v)});
}

const KernelSpec& zero_kernel() {
  static const KernelSpec k(DeterministicTable{table({0.0}, {0.0})});
  return k;
}

DriReport synthetic(std::vector<double> terms) {
  DriReport r;
  r.terms = std::move(terms);
  classify_dri(r);
  return r;
}

void check_nondecreasing(const DriReport& r) {
  for (std::size_t k = 1; k < r.partial_sums.size(); ++k)
    CHECK(r.partial_sums[k] >= r.partial_sums[k - 1]);
}

}  // namespace

TEST_CASE("verdict rules on synthetic terms") {
  std::vector<double> geometric, harmonic, square, vanishing(40, 0.0);
  for (int k = 0; k < 60; ++k) {
    geometric.push_back(std::pow(0.5, k));
    harmonic.push_back(1.0 / (k + 1));
    square.push_back(1.0 / ((k + 1.0) * (k + 1.0)));
  }
  vanishing[0] = 1.0;
  vanishing[1] = 0.3;

  const DriReport g = synthetic(geometric);
  CHECK(g.verdict == Verdict::ConvergentEvidence);
  CHECK(*g.fitted_ratio == doctest::Approx(0.5));
  CHECK(g.partial_sums.back() == doctest::Approx(2.0));
  CHECK(synthetic(harmonic).verdict == Verdict::DivergentEvidence);
  // Polynomial decay is summable but too slow for the ratio threshold.
  CHECK(synthetic(square).verdict == Verdict::Inconclusive);
  CHECK(synthetic(vanishing).verdict == Verdict::ConvergentEvidence);
  CHECK(synthetic(std::vector<double>(30, 1.0)).verdict == Verdict::DivergentEvidence);
  for (const auto& t : {geometric, harmonic, square, vanishing}) check_nondecreasing(synthetic(t));
}

TEST_CASE("zero kernel dRi") {
  const DriReport m = dri_mean_check(zero_kernel(), 20, 4, 100, RngStream(1));
  const DriReport p = dri_path_check(zero_kernel(), 20, 100, RngStream(1));
  for (const auto* r : {&m, &p}) {
    CHECK(r->terms.size() == 20);
    for (double t : r->terms) CHECK(t == 0.0);
    CHECK(r->verdict == Verdict::ConvergentEvidence);
  }
}

TEST_CASE("Pareto indicator mean terms follow the exact tail") {
  const KernelSpec k(Indicator{Law(Pareto{0.8, 1.0})});
  const DriReport m = dri_mean_check(k, 200, 4, 20000, RngStream(2));
  REQUIRE(m.terms.size() == 200);
  for (std::size_t j = 1; j < 200; j += 7) {
    // sup over [j, j + 1) of P{eta > t} is attained at t = j.
    const double exact = std::pow(double(j), -0.8);
    CHECK(std::abs(m.terms[j] - exact) <= 4 * std::sqrt(exact * (1 - exact) / 4000));
  }
  CHECK(m.terms[0] == 1.0);
  CHECK(m.verdict == Verdict::DivergentEvidence);
  check_nondecreasing(m);
}

TEST_CASE("exponential decay terms are geometric") {
  const KernelSpec k(ScaledExpDecay{Law(PointMass{1.0}), 1.0});
  const DriReport m = dri_mean_check(k, 50, 4, 200, RngStream(3));
  const DriReport p = dri_path_check(k, 50, 200, RngStream(3));
  for (const auto* r : {&m, &p}) {
    for (std::size_t j = 0; j < 50; ++j)
      CHECK(r->terms[j] == doctest::Approx(std::exp(-double(j))).epsilon(1e-12));
    CHECK(r->partial_sums.back() == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))).epsilon(1e-9));
    CHECK(r->verdict == Verdict::ConvergentEvidence);
  }
}

TEST_CASE("path criterion examples") {
  const KernelSpec block(DeterministicTable{table({0.0, 4.0}, {1.0, 0.0})});
  const DriReport b = dri_path_check(block, 10, 50, RngStream(4));
  CHECK(b.terms == std::vector<double>{1, 1, 1, 1, 0, 0, 0, 0, 0, 0});

  const KernelSpec ind(Indicator{Law(Exponential{1.0})});
  const DriReport p = dri_path_check(ind, 12, 100000, RngStream(5));
  for (std::size_t j = 0; j < 12; ++j) {
    const double exact = std::exp(-double(j));
    CHECK(std::abs(p.terms[j] - exact) <= 4 * std::sqrt(exact * (1 - exact) / 100000));
  }
}

TEST_CASE("spike kernel separates the two criteria") {
  const KernelSpec k(SpikeTrain{Law(UniformLaw{0.0, 1.0})});
  const DriReport m = dri_mean_check(k, 21, 256, 50000, RngStream(6));
  const DriReport p = dri_path_check(k, 21, 2000, RngStream(6));
  CHECK(m.terms[0] == 0.0);
  CHECK(p.terms[0] == 0.0);
  for (std::size_t j = 1; j <= 20; ++j) {
    CHECK(p.terms[j] == 1.0);
    const double exact = 1.0 / (double(j) * j + 1.0);
    // The grid maximum undershoots the true sup by at most one grid cell of
    // the density of a Uniform(0, 1) spike start, so allow grid bias too.
    CHECK(std::abs(m.terms[j] - exact) < 4 * m.term_se[j] + 1.0 / 256);
  }
  CHECK(p.verdict == Verdict::DivergentEvidence);
}

TEST_CASE("spike kernel mean criterion reaches a convergent verdict" *
          doctest::should_fail()) {
  // Terms of order k^-2 can never meet both the ratio and remainder
  // thresholds, so this verdict stays Inconclusive.
  const KernelSpec k(SpikeTrain{Law(UniformLaw{0.0, 1.0})});
  const DriReport m = dri_mean_check(k, 50, 64, 20000, RngStream(7));
  CHECK(m.verdict == Verdict::ConvergentEvidence);
}

TEST_CASE("path terms dominate mean terms") {
  const std::vector<KernelSpec> kernels{
      KernelSpec(Indicator{Law(GammaLaw{2.0, 1.0})}),
      KernelSpec(ScaledTable{Law(UniformLaw{-1.0, 2.0}), table({0.0, 0.5, 3.0}, {2.0, 0.3, 0.0})}),
      KernelSpec(BirthDeath{2, {0.5, 0.5, 0.0}, {1.0, 1.5, 2.0}, 3}),
      KernelSpec(SpikeTrain{Law(UniformLaw{0.0, 1.0})}),
  };
  for (const auto& k : kernels) {
    CAPTURE(k.type_name());
    const DriReport m = dri_mean_check(k, 8, 16, 20000, RngStream(8));
    const DriReport p = dri_path_check(k, 8, 20000, RngStream(9));
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(p.terms[j] + 4 * std::hypot(p.term_se[j], m.term_se[j]) >= m.terms[j]);
  }
}

TEST_CASE("absorbed kernels get the same verdict on both criteria") {
  const std::vector<KernelSpec> kernels{
      KernelSpec(Indicator{Law(Exponential{1.0})}),
      KernelSpec(Indicator{Law(UniformLaw{0.0, 3.0})}),
      KernelSpec(BirthDeath{1, {0.0}, {1.0}, 1}),
      KernelSpec(Indicator{Law(Pareto{0.8, 1.0})}),
  };
  for (const auto& k : kernels) {
    CAPTURE(k.type_name());
    const DriReport m = dri_mean_check(k, 50, 4, 5000, RngStream(10));
    const DriReport p = dri_path_check(k, 50, 5000, RngStream(10));
    CHECK(m.verdict == p.verdict);
    CHECK(m.verdict != Verdict::Inconclusive);
  }
}

TEST_CASE("dRi checks are deterministic") {
  const KernelSpec k(ScaledTable{Law(Exponential{1.0}), table({0.0, 1.0}, {1.0, 0.0})});
  const DriReport a = dri_mean_check(k, 10, 8, 3000, RngStream(11));
  const DriReport b = dri_mean_check(k, 10, 8, 3000, RngStream(11));
  CHECK(a.terms == b.terms);
  CHECK(a.term_se == b.term_se);
  CHECK_THROWS_AS(dri_mean_check(k, 0, 8, 10, RngStream(1)), PreconditionError);
  CHECK_THROWS_AS(dri_mean_check(k, 5, 1, 10, RngStream(1)), PreconditionError);
}

TEST_CASE("Laplace functional") {
  const InterarrivalLaw exp1(Exponential{1.0});
  const LaplaceComparison zero =
      laplace_functional_compare(exp1, StepTable{{0.0}, {0.0}}, 10.0, 100, RngStream(1));
  CHECK(zero.transient_estimate == 1.0);
  CHECK(zero.stationary_estimate == 1.0);

  // Poisson exponent: integral of 1 - exp(-h(x)) by quadrature.
  const StepTable h{{0.0, 1.0}, {1.0, 0.0}};
  const double exponent = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&](double x) { return 1.0 - std::exp(-h.eval(x)); }, 0.0, 1.0);
  const double oracle = std::exp(-exponent);
  CHECK(oracle == doctest::Approx(0.5314).epsilon(1e-4));
  const LaplaceComparison c = laplace_functional_compare(exp1, h, 50.0, 20000, RngStream(2));
  CHECK(std::abs(c.transient_estimate - oracle) <= c.transient_halfwidth);
  CHECK(std::abs(c.stationary_estimate - oracle) <= c.stationary_halfwidth);
  CHECK(c.transient_estimate > 0.0);
  CHECK(c.transient_estimate < 1.0);
  CHECK_FALSE(c.lattice_warning);

  const LaplaceComparison pm =
      laplace_functional_compare(InterarrivalLaw(PointMass{1.0}), h, 50.0, 100, RngStream(3));
  CHECK(pm.lattice_warning);
  // One point in every unit interval: exp(-1) exactly.
  CHECK(pm.stationary_estimate == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("intensity check") {
  const auto zero =
      intensity_check(InterarrivalLaw(Exponential{1.0}), {{2.0, 2.0}}, 1000, RngStream(1));
  CHECK(zero[0].expected == 0.0);
  CHECK(zero[0].empirical_mean == 0.0);
  CHECK(zero[0].z_score == 0.0);

  const auto e2 = intensity_check(InterarrivalLaw(Exponential{2.0}), {{0.0, 5.0}}, 100000,
                                  RngStream(2));
  CHECK(e2[0].expected == 10.0);
  CHECK(std::abs(e2[0].z_score) < 4);

  const auto u02 = intensity_check(InterarrivalLaw(UniformLaw{0.0, 2.0}), {{-3.0, 3.0}}, 100000,
                                   RngStream(3));
  CHECK(u02[0].expected == 6.0);
  CHECK(std::abs(u02[0].z_score) < 4);
}

TEST_CASE("overshoot check") {
  const OvershootReport e =
      overshoot_check(InterarrivalLaw(Exponential{1.0}), 3.0, 20000, RngStream(1));
  CHECK(e.ks.p_value > 0.01);
  CHECK(e.short_horizon_warning);

  const OvershootReport pm =
      overshoot_check(InterarrivalLaw(PointMass{1.0}), 10.5, 100, RngStream(2));
  CHECK(pm.lattice_warning);

  const OvershootReport u =
      overshoot_check(InterarrivalLaw(UniformLaw{0.0, 1.0}), 50.0, 20000, RngStream(3));
  CHECK(u.ks.p_value > 0.01);
  CHECK_FALSE(u.lattice_warning);
  CHECK_FALSE(u.short_horizon_warning);
}

TEST_CASE("shift invariance check") {
  const TestResult r =
      shift_invariance_check(InterarrivalLaw(GammaLaw{2.0, 0.5}), 7.0, 20000, RngStream(1));
  CHECK(r.p_value > 0.01);
}

TEST_CASE("comparison of identical and shifted samples") {
  FddMatrix a;
  a.u_grid = {0.0, 1.0};
  a.rows = 200;
  RngStream g(1);
  for (int i = 0; i < 400; ++i) a.data.push_back(std::floor(3 * g.uniform()));
  RngStream r(2);
  const ComparisonReport same = compare_samples(a, a, 0.01, 99, r);
  CHECK_FALSE(same.reject);
  CHECK(same.ks.size() == 2);
  for (const auto& t : same.ks) CHECK(t.statistic == 0.0);

  FddMatrix b = a;
  for (double& v : b.data) v += 1.0;
  const ComparisonReport diff = compare_samples(a, b, 0.01, 99, r);
  CHECK(diff.reject);
  CHECK(diff.ks_level == doctest::Approx(0.01 / 4));
  CHECK(diff.energy_level == doctest::Approx(0.005));
}

TEST_CASE("convergence test with the zero kernel never rejects") {
  const ConvergenceResult res = convergence_test(InterarrivalLaw(Exponential{1.0}), zero_kernel(),
                                                 {1.0, 5.0}, {0.0, 1.0}, 300, 0.01, 5);
  REQUIRE(res.reports.size() == 2);
  for (const auto& rep : res.reports) CHECK_FALSE(rep.reject);
  CHECK(res.warnings.empty());
  CHECK_FALSE(res.hypothesis_violation.has_value());
  CHECK(res.rejection_decays);
}

TEST_CASE("convergence test reports violated hypotheses") {
  const ConvergenceResult heavy =
      convergence_test(InterarrivalLaw(Exponential{1.0}), KernelSpec(Indicator{Law(Pareto{0.8, 1.0})}),
                       {5.0, 20.0}, {0.0}, 200, 0.01, 6);
  CHECK(heavy.hypothesis_violation.has_value());
  CHECK(std::any_of(heavy.warnings.begin(), heavy.warnings.end(), [](const std::string& w) {
    return w.find("E tau = inf") != std::string::npos;
  }));
  REQUIRE(heavy.transient_max_abs.size() == 2);
  for (double m : heavy.transient_max_abs) CHECK(std::isfinite(m));

  const ConvergenceResult lattice =
      convergence_test(InterarrivalLaw(PointMass{1.0}), KernelSpec(Indicator{Law(Exponential{1.0})}),
                       {10.0}, {0.0}, 200, 0.01, 7);
  CHECK(std::any_of(lattice.warnings.begin(), lattice.warnings.end(), [](const std::string& w) {
    return w.find("lattice") != std::string::npos;
  }));
}

TEST_CASE("convergence test is deterministic") {
  const InterarrivalLaw law(UniformLaw{0.0, 2.0});
  const KernelSpec k(Indicator{Law(Exponential{1.0})});
  const auto a = convergence_test(law, k, {2.0}, {0.0, 1.0}, 300, 0.01, 8);
  const auto b = convergence_test(law, k, {2.0}, {0.0, 1.0}, 300, 0.01, 8);
  CHECK(a.reports[0].energy.statistic == b.reports[0].energy.statistic);
  CHECK(a.reports[0].energy.p_value == b.reports[0].energy.p_value);
  CHECK(a.reports[0].ks[1].statistic == b.reports[0].ks[1].statistic);
}
