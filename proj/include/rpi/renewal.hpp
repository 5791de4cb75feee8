#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "rpi/distributions.hpp"
#include "rpi/rng.hpp"

namespace rpi {

/// Zero-delayed renewal epochs S_0 = 0 < S_1 < ... <= horizon, plus the first
/// epoch beyond the horizon.
struct RenewalRealization {
  std::vector<double> epochs;
  double horizon = 0.0;
  /// S_{nu(horizon)}: the first epoch strictly greater than the horizon.
  double next_epoch = 0.0;

  /// nu(horizon) = number of epochs <= horizon.
  std::size_t count() const { return epochs.size(); }
  double overshoot() const { return next_epoch - horizon; }
};

/// Throws DomainError for horizon < 0.
RenewalRealization simulate_forward(const InterarrivalLaw& law, double horizon,
                                    RngStream& rng);

/// Points of the two-sided stationary renewal sequence covering an interval.
///
/// Index convention: t_{-1} < 0 <= t_0. The window always holds one point
/// left of cover_lo() and one point right of cover_hi(), so every point of
/// [cover_lo, cover_hi] is present. Growth is incremental: extend() appends
/// points with the same streams, leaving existing points untouched.
class StationaryWindow {
 public:
  /// Draws (xi0, U) and i.i.d. gaps forward and backward until the window
  /// covers [-c, c]. Forward and backward gaps use independent child streams
  /// of `rng`.
  static StationaryWindow build(const InterarrivalLaw& law, double c,
                                const RngStream& rng);

  /// Grow until the window covers [lo, hi] (never shrinks).
  void extend(double lo, double hi);
  void extend(double c) { extend(-c, c); }

  /// Translate every point by -t and re-establish t_{-1} < 0 <= t_0.
  StationaryWindow shifted(double t) const;

  const std::deque<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  long first_index() const { return first_index_; }
  long last_index() const {
    return first_index_ + static_cast<long>(points_.size()) - 1;
  }
  /// Point with canonical index k, first_index() <= k <= last_index().
  double at(long k) const {
    return points_[static_cast<std::size_t>(k - first_index_)];
  }

  double cover_lo() const { return cover_lo_; }
  double cover_hi() const { return cover_hi_; }
  double xi0() const { return xi0_; }
  double u() const { return u_; }

  /// Number of points in [a, b).
  std::size_t count_in(double a, double b) const;

 private:
  StationaryWindow(InterarrivalLaw law, RngStream forward, RngStream backward)
      : law_(std::move(law)),
        forward_(std::move(forward)),
        backward_(std::move(backward)) {}

  void reindex();

  InterarrivalLaw law_;
  RngStream forward_;
  RngStream backward_;
  std::deque<double> points_;
  long first_index_ = -1;
  double cover_lo_ = 0.0;
  double cover_hi_ = 0.0;
  double xi0_ = 0.0;
  double u_ = 0.0;
};

inline StationaryWindow build_stationary_window(const InterarrivalLaw& law,
                                                double c, const RngStream& rng) {
  return StationaryWindow::build(law, c, rng);
}
inline StationaryWindow shift_window(const StationaryWindow& w, double t) {
  return w.shifted(t);
}

}  // namespace rpi
