#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpi/distributions.hpp"
#include "rpi/kernels.hpp"
#include "rpi/process.hpp"
#include "rpi/rng.hpp"
#include "rpi/stats.hpp"

namespace rpi {

// --- direct Riemann integrability -------------------------------------------

enum class Verdict { ConvergentEvidence, DivergentEvidence, Inconclusive };
std::string to_string(Verdict v);

enum class DriCriterion { Mean, Path };
std::string to_string(DriCriterion c);

/// Per-unit-interval terms of a dRi criterion and the evidence they give.
///
/// Verdict rules, applied to the upper half of the terms (k >= k_max / 2):
///   1. DivergentEvidence if the least-squares slope of the partial sums
///      against log k is >= 0.5.
///   2. ConvergentEvidence if every tail term is 0, or if a log-linear fit of
///      the positive tail terms gives a ratio r < 0.99 whose geometric
///      remainder beyond k_max is < 1e-3 of the last partial sum. A tail
///      whose last term is 0 with fewer than two positive terms also counts.
///   3. Inconclusive otherwise.
struct DriReport {
  DriCriterion criterion = DriCriterion::Mean;
  std::vector<double> terms;
  /// Monte Carlo standard error of each term.
  std::vector<double> term_se;
  std::vector<double> partial_sums;
  Verdict verdict = Verdict::Inconclusive;
  std::size_t k_max = 0;
  std::size_t n_mc = 0;
  std::size_t grid_per_unit = 0;  // mean criterion only
  double log_slope = 0.0;
  std::optional<double> fitted_ratio;
  std::optional<double> remainder_estimate;
  std::string reason;
};

/// Classify a term sequence with the rules documented on DriReport. Fills
/// partial_sums, verdict, log_slope, fitted_ratio, remainder_estimate, reason.
void classify_dri(DriReport& report);

/// Terms sup_{t in [k, k+1)} E[min(|X(t)|, 1)] for k < k_max. E[.] is estimated on
/// grid_per_unit points per unit interval. A pilot batch (80% of n_mc) picks
/// the maximising grid point of each interval; an independent batch (the
/// remaining 20%) estimates the mean there, so the term carries no
/// max-of-noise bias and term_se is its plain standard error.
DriReport dri_mean_check(const KernelSpec& spec, std::size_t k_max,
                         std::size_t grid_per_unit, std::size_t n_mc,
                         const RngStream& rng);

/// Terms E[sup_{u in [k, k+1)} min(|X(u)|, 1)] averaged over n_mc paths.
DriReport dri_path_check(const KernelSpec& spec, std::size_t k_max,
                         std::size_t n_mc, const RngStream& rng);

// --- point process checks ----------------------------------------------------

struct LaplaceComparison {
  double transient_estimate = 1.0;
  double stationary_estimate = 1.0;
  /// 99% CLT half-widths.
  double transient_halfwidth = 0.0;
  double stationary_halfwidth = 0.0;
  bool lattice_warning = false;
};

/// Monte Carlo estimates of E exp(-sum_k h(t - S_k)) and
/// E exp(-sum_j h(S*_j)) for a nonnegative compactly supported step function
/// h. Throws PreconditionError for h without compact support or with negative
/// values.
LaplaceComparison laplace_functional_compare(const InterarrivalLaw& law,
                                             const StepTable& h, double t,
                                             std::size_t n_mc,
                                             const RngStream& rng);

struct IntensityResult {
  double a = 0.0;
  double b = 0.0;
  double empirical_mean = 0.0;
  double expected = 0.0;
  double standard_error = 0.0;
  double z_score = 0.0;
};

/// Mean number of stationary points in [a, b) against (b - a) / mu.
std::vector<IntensityResult> intensity_check(
    const InterarrivalLaw& law, const std::vector<std::pair<double, double>>& intervals,
    std::size_t n_windows, const RngStream& rng);

struct OvershootReport {
  TestResult ks;
  double horizon = 0.0;
  bool lattice_warning = false;
  bool short_horizon_warning = false;  // horizon < 20 mu
};

/// One-sample KS of S_{nu(T)} - T against the integrated-tail CDF.
OvershootReport overshoot_check(const InterarrivalLaw& law, double horizon,
                                std::size_t n_realizations, const RngStream& rng);

/// Counts in [0, 1) of independent stationary windows, unshifted versus
/// shifted by `shift`, compared by a chi-square homogeneity test.
TestResult shift_invariance_check(const InterarrivalLaw& law, double shift,
                                  std::size_t n_windows, const RngStream& rng);

// --- convergence to stationarity ---------------------------------------------

/// Two-sample comparison of fdd vectors. The family-wise level alpha is split
/// in half between the per-coordinate KS tests (Bonferroni over coordinates,
/// each at alpha / (2 d)) and the energy-distance permutation test (at
/// alpha / 2), so the overall rejection rate under the null is <= alpha.
struct ComparisonReport {
  double t = 0.0;
  std::vector<double> u_grid;
  std::vector<TestResult> ks;
  TestResult energy;
  double alpha = 0.01;
  double ks_level = 0.0;
  double energy_level = 0.0;
  bool reject = false;
  std::string note;
};

ComparisonReport compare_samples(const FddMatrix& a, const FddMatrix& b,
                                 double alpha, std::size_t n_permutations,
                                 RngStream& rng);

struct ConvergenceOptions {
  std::size_t n_permutations = 200;
  double tol = 1e-9;
  StationaryOptions stationary;
  /// Settings for the dRi pre-check.
  std::size_t precheck_k_max = 50;
  std::size_t precheck_grid = 4;
  std::size_t precheck_n_mc = 2000;
};

struct ConvergenceResult {
  std::vector<ComparisonReport> reports;  // one per t, in t_list order
  std::vector<std::string> warnings;
  /// Set when the stationary process could not be evaluated (infinite tail
  /// integral or truncation failure): the limit does not exist or could not
  /// be certified.
  std::optional<std::string> hypothesis_violation;
  /// Largest |value| in each transient sample, in t_list order.
  std::vector<double> transient_max_abs;
  /// Rejection frequency over t_list does not increase.
  bool rejection_decays = true;
};

/// Compares the transient fdd vector at each t with the stationary one.
/// Stationary replicates come from RngStream(seed).child(0), transient ones
/// for t_list[i] from child(1 + i).
ConvergenceResult convergence_test(const InterarrivalLaw& law, const KernelSpec& spec,
                                   const std::vector<double>& t_list,
                                   const std::vector<double>& u_grid,
                                   std::size_t n_replicates, double alpha,
                                   std::uint64_t seed,
                                   const ConvergenceOptions& opts = {});

}  // namespace rpi
