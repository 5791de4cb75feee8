#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rpi/rng.hpp"

namespace rpi {

/// Sorted sample set; the empirical CDF is the right-continuous step
/// function F_n(x) = #{x_i <= x} / n.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> samples);

  const std::vector<double>& samples() const { return samples_; }
  std::size_t n() const { return samples_.size(); }
  double cdf(double x) const;
  double mean() const;
  double variance() const;

 private:
  std::vector<double> samples_;
};

enum class TestMethod {
  KsTwoSample,
  KsOneSample,
  EnergyPermutation,
  ChiSquare,
  ChiSquareHomogeneity
};

std::string to_string(TestMethod m);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t m = 0;
  TestMethod method = TestMethod::KsTwoSample;
  /// Degrees of freedom (chi-square) or permutation count (energy).
  std::size_t dof = 0;
  /// Energy distance only: rows were subsampled to the exact-computation cap.
  bool subsampled = false;
};

/// Survival function of the Kolmogorov distribution, P{K > lambda}.
double kolmogorov_sf(double lambda);

/// sup_x |F_a(x) - F_b(x)| by merge scan; asymptotic p-value at
/// sqrt(nm / (n + m)) * D.
TestResult ks_two_sample(const EmpiricalDistribution& a,
                         const EmpiricalDistribution& b);

/// D_n = max over sample points of both one-sided gaps. The cdf must map into
/// [0, 1], be nondecreasing, and tend to 0 / 1 at -inf / +inf; otherwise
/// PreconditionError.
TestResult ks_one_sample(const EmpiricalDistribution& a,
                         const std::function<double(double)>& cdf);

/// Rows of equal length stored contiguously.
struct RowMatrix {
  std::size_t cols = 0;
  std::vector<double> data;

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

/// V-statistic 2 E|A - B| - E|A - A'| - E|B - B'| over Euclidean rows.
double energy_statistic(const RowMatrix& a, const RowMatrix& b);

/// Energy distance with a label-permutation p-value
/// (1 + #{perm >= observed}) / (n_permutations + 1). Above 2e4 pooled rows
/// both samples are subsampled (with `rng`) to that cap.
TestResult energy_distance(const RowMatrix& a, const RowMatrix& b,
                           std::size_t n_permutations, RngStream& rng);

/// Pearson goodness of fit. Bins whose expected count is below
/// min_expected are pooled (right tail first, then left, then interior
/// neighbours). A bin with zero probability but positive count yields
/// statistic +inf and p-value 0. Throws PreconditionError if pooling leaves a
/// single bin.
TestResult chisq_gof_counts(const std::vector<long long>& observed,
                            const std::vector<double>& expected_probs,
                            double min_expected = 5.0);

/// Two-sample homogeneity of integer-valued samples: 2 x K contingency
/// table over the observed values, with sparse columns (expected count below
/// min_expected in either row) pooled into neighbours.
TestResult chisq_homogeneity(const std::vector<long long>& a,
                             const std::vector<long long>& b,
                             double min_expected = 5.0);

}  // namespace rpi
