#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpi/distributions.hpp"
#include "rpi/kernels.hpp"
#include "rpi/renewal.hpp"
#include "rpi/rng.hpp"

namespace rpi {

enum class ProcessKind { Transient, Stationary };

/// Values of Y(t + u_j) or Y*(u_j) on a u-grid for one replicate.
struct ProcessSample {
  std::vector<double> u_grid;
  std::vector<double> values;
  ProcessKind kind = ProcessKind::Transient;
  /// Transient: the time t. Stationary: the window half-width c actually used.
  double t_or_c = 0.0;
  /// Stationary only: bound on the truncation error (see TruncationPlan).
  std::optional<double> truncation_bound;
};

/// Window half-width for the truncated stationary sum and the error bound it
/// achieves.
///
/// For kernels that vanish after an absorption time the bound is
/// mu^-1 * integral_{c + min u}^inf P{tau > x} dx, an upper bound on the
/// expected number of nonzero summands left out (so also on the probability
/// that the truncated value differs from the full sum); it is exactly 0 when
/// tau is bounded by c + min u. For ScaledExpDecay it bounds the expected
/// absolute error, mu^-1 E|eta| e^{-a A} / a; when E|eta| = inf the
/// (1 - 1e-6)-quantile of |eta| replaces E|eta| and `quantile_majorant` is
/// set.
struct TruncationPlan {
  double c = 0.0;
  double bound = 0.0;
  bool quantile_majorant = false;
};

struct StationaryOptions {
  /// Largest admissible half-width; 0 means 1000 mu + max|u|.
  double c_max = 0.0;
};

/// c starts at max|u| + 10 mu and doubles until the bound drops below tol.
/// Throws TruncationError when the bound is infinite or c would exceed c_max.
TruncationPlan plan_truncation(const InterarrivalLaw& law, const KernelSpec& spec,
                               const std::vector<double>& u_grid, double tol,
                               const StationaryOptions& opts = {});

/// Y(t + u_j) = sum_{k >= 0} X_{k+1}(t + u_j - S_k), summed exactly.
ProcessSample eval_transient(const InterarrivalLaw& law, const KernelSpec& spec,
                             double t, const std::vector<double>& u_grid,
                             RngStream& rng);

/// Truncated stationary sum on one stationary window with one kernel path per
/// point, drawn lazily in index order. Extending the window keeps all
/// existing points and paths, so values for a larger c refine those for a
/// smaller c.
class StationaryEvaluator {
 public:
  StationaryEvaluator(const InterarrivalLaw& law, const KernelSpec& spec,
                      double c, const RngStream& rng);

  void extend(double c);
  double c() const { return c_; }
  const StationaryWindow& window() const { return window_; }

  /// Y*_c(u) = sum over points -u <= t_k <= c of X_{k+1}(u + t_k).
  double value(double u);
  std::vector<double> values(const std::vector<double>& u_grid);

 private:
  const PathSample& path(long k);

  const KernelSpec* spec_;
  StationaryWindow window_;
  RngStream forward_paths_;
  RngStream backward_paths_;
  std::deque<PathSample> forward_;   // indices 0, 1, ...
  std::deque<PathSample> backward_;  // indices -1, -2, ...
  double c_;
};

ProcessSample eval_stationary(const InterarrivalLaw& law, const KernelSpec& spec,
                              const std::vector<double>& u_grid, double tol,
                              RngStream& rng, const StationaryOptions& opts = {});

/// Same as eval_stationary with a precomputed plan.
ProcessSample eval_stationary(const InterarrivalLaw& law, const KernelSpec& spec,
                              const std::vector<double>& u_grid,
                              const TruncationPlan& plan, RngStream& rng);

struct FddMode {
  ProcessKind kind = ProcessKind::Transient;
  double t = 0.0;   // transient only
  double tol = 1e-9;  // stationary only
  StationaryOptions stationary;

  static FddMode transient(double t) { return {ProcessKind::Transient, t, 1e-9, {}}; }
  static FddMode stationary_mode(double tol, StationaryOptions opts = {}) {
    return {ProcessKind::Stationary, 0.0, tol, opts};
  }
};

/// n_replicates x |u_grid| values, row-major, one row per replicate.
struct FddMatrix {
  std::vector<double> u_grid;
  std::size_t rows = 0;
  std::vector<double> data;
  FddMode mode;
  std::optional<TruncationPlan> plan;

  std::size_t cols() const { return u_grid.size(); }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  std::vector<double> column(std::size_t c) const;
};

/// A replicate failed; carries its index and the original message.
class ReplicateError : public std::runtime_error {
 public:
  ReplicateError(std::size_t replicate, const std::string& what)
      : std::runtime_error("replicate " + std::to_string(replicate) + ": " + what),
        replicate_(replicate) {}
  std::size_t replicate() const { return replicate_; }

 private:
  std::size_t replicate_;
};

/// Replicate r uses root.child(r). Output is independent of the number of
/// worker threads.
FddMatrix fdd_sample(const InterarrivalLaw& law, const KernelSpec& spec,
                     const FddMode& mode, const std::vector<double>& u_grid,
                     std::size_t n_replicates, const RngStream& root);

FddMatrix fdd_sample(const InterarrivalLaw& law, const KernelSpec& spec,
                     const FddMode& mode, const std::vector<double>& u_grid,
                     std::size_t n_replicates, std::uint64_t seed);

}  // namespace rpi
