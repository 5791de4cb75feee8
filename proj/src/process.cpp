#include "rpi/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rpi/errors.hpp"
#include "rpi/parallel.hpp"

namespace rpi {

namespace {

constexpr double kQuantileDelta = 1e-6;

double max_abs(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

void require_grid(const std::vector<double>& u_grid) {
  if (u_grid.empty()) throw PreconditionError("u_grid must not be empty");
  for (double u : u_grid)
    if (!std::isfinite(u)) throw PreconditionError("u_grid entries must be finite");
}

/// Tail bound for excluded ages > age, and whether it needed the quantile
/// majorant.
std::pair<double, bool> tail_bound(const InterarrivalLaw& law,
                                   const KernelSpec& spec, double age) {
  double integral = spec.tail_integral(age);
  bool quantile = false;
  if (std::isinf(integral)) {
    if (const auto* k = std::get_if<ScaledExpDecay>(&spec.variant())) {
      const double q = k->eta.abs_quantile(1.0 - kQuantileDelta);
      integral = q * std::exp(-k->a * std::max(age, 0.0)) / k->a;
      quantile = true;
    }
  }
  return {integral / law.mean(), quantile};
}

}  // namespace

TruncationPlan plan_truncation(const InterarrivalLaw& law, const KernelSpec& spec,
                               const std::vector<double>& u_grid, double tol,
                               const StationaryOptions& opts) {
  require_grid(u_grid);
  if (!(tol > 0)) throw PreconditionError("tol must be > 0");
  const double mu = law.mean();
  const double reach = max_abs(u_grid);
  const double u_min = *std::min_element(u_grid.begin(), u_grid.end());
  const double c_max = opts.c_max > 0 ? opts.c_max : 1000.0 * mu + reach;

  double c = reach + 10.0 * mu;
  while (true) {
    auto [bound, quantile] = tail_bound(law, spec, c + u_min);
    if (std::isinf(bound) || std::isnan(bound)) {
      throw TruncationError(
          "stationary sum diverges: tail integral of the kernel is infinite "
          "(E tau = inf or non-integrable kernel), hypothesis violated",
          c, bound);
    }
    if (bound < tol) return {c, bound, quantile};
    if (2.0 * c > c_max) {
      std::ostringstream msg;
      msg << "truncation bound " << bound << " not below tol " << tol
          << " within c_max " << c_max;
      throw TruncationError(msg.str(), c, bound);
    }
    c *= 2.0;
  }
}

ProcessSample eval_transient(const InterarrivalLaw& law, const KernelSpec& spec,
                             double t, const std::vector<double>& u_grid,
                             RngStream& rng) {
  require_grid(u_grid);
  const double u_max = *std::max_element(u_grid.begin(), u_grid.end());
  RngStream gaps = rng.child(10);
  RngStream paths = rng.child(11);
  const RenewalRealization epochs =
      simulate_forward(law, std::max(0.0, t + u_max), gaps);

  ProcessSample out;
  out.u_grid = u_grid;
  out.values.assign(u_grid.size(), 0.0);
  out.kind = ProcessKind::Transient;
  out.t_or_c = t;
  for (double s : epochs.epochs) {
    const PathSample path = spec.sample_path(paths);
    for (std::size_t j = 0; j < u_grid.size(); ++j)
      out.values[j] += path.eval(t + u_grid[j] - s);
  }
  return out;
}

StationaryEvaluator::StationaryEvaluator(const InterarrivalLaw& law,
                                         const KernelSpec& spec, double c,
                                         const RngStream& rng)
    : spec_(&spec),
      window_(StationaryWindow::build(law, c, rng.child(20))),
      forward_paths_(rng.child(21)),
      backward_paths_(rng.child(22)),
      c_(c) {}

void StationaryEvaluator::extend(double c) {
  if (c <= c_) return;
  window_.extend(c);
  c_ = c;
}

const PathSample& StationaryEvaluator::path(long k) {
  if (k >= 0) {
    while (static_cast<long>(forward_.size()) <= k)
      forward_.push_back(spec_->sample_path(forward_paths_));
    return forward_[static_cast<std::size_t>(k)];
  }
  const auto idx = static_cast<std::size_t>(-k - 1);
  while (backward_.size() <= idx)
    backward_.push_back(spec_->sample_path(backward_paths_));
  return backward_[idx];
}

double StationaryEvaluator::value(double u) {
  const auto& pts = window_.points();
  auto it = std::lower_bound(pts.begin(), pts.end(), -u);
  double sum = 0.0;
  for (; it != pts.end() && *it <= c_; ++it) {
    const long k = window_.first_index() + static_cast<long>(it - pts.begin());
    sum += path(k).eval(u + *it);
  }
  return sum;
}

std::vector<double> StationaryEvaluator::values(const std::vector<double>& u_grid) {
  std::vector<double> out;
  out.reserve(u_grid.size());
  for (double u : u_grid) out.push_back(value(u));
  return out;
}

ProcessSample eval_stationary(const InterarrivalLaw& law, const KernelSpec& spec,
                              const std::vector<double>& u_grid,
                              const TruncationPlan& plan, RngStream& rng) {
  StationaryEvaluator ev(law, spec, plan.c, rng);
  ProcessSample out;
  out.u_grid = u_grid;
  out.values = ev.values(u_grid);
  out.kind = ProcessKind::Stationary;
  out.t_or_c = plan.c;
  out.truncation_bound = plan.bound;
  return out;
}

ProcessSample eval_stationary(const InterarrivalLaw& law, const KernelSpec& spec,
                              const std::vector<double>& u_grid, double tol,
                              RngStream& rng, const StationaryOptions& opts) {
  const TruncationPlan plan = plan_truncation(law, spec, u_grid, tol, opts);
  return eval_stationary(law, spec, u_grid, plan, rng);
}

std::vector<double> FddMatrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

FddMatrix fdd_sample(const InterarrivalLaw& law, const KernelSpec& spec,
                     const FddMode& mode, const std::vector<double>& u_grid,
                     std::size_t n_replicates, const RngStream& root) {
  require_grid(u_grid);
  if (n_replicates < 1) throw PreconditionError("n_replicates must be >= 1");
  FddMatrix m;
  m.u_grid = u_grid;
  m.rows = n_replicates;
  m.mode = mode;
  m.data.assign(n_replicates * u_grid.size(), 0.0);
  if (mode.kind == ProcessKind::Stationary)
    m.plan = plan_truncation(law, spec, u_grid, mode.tol, mode.stationary);

  parallel_for(n_replicates, [&](std::size_t r) {
    RngStream rng = root.child(r);
    try {
      const ProcessSample s =
          mode.kind == ProcessKind::Transient
              ? eval_transient(law, spec, mode.t, u_grid, rng)
              : eval_stationary(law, spec, u_grid, *m.plan, rng);
      std::copy(s.values.begin(), s.values.end(),
                m.data.begin() + static_cast<long>(r * u_grid.size()));
    } catch (const std::exception& e) {
      throw ReplicateError(r, e.what());
    }
  });
  return m;
}

FddMatrix fdd_sample(const InterarrivalLaw& law, const KernelSpec& spec,
                     const FddMode& mode, const std::vector<double>& u_grid,
                     std::size_t n_replicates, std::uint64_t seed) {
  return fdd_sample(law, spec, mode, u_grid, n_replicates, RngStream(seed));
}

}  // namespace rpi
