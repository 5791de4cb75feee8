#include "rpi/renewal.hpp"

#include <algorithm>
#include <cmath>

#include "rpi/errors.hpp"

namespace rpi {

RenewalRealization simulate_forward(const InterarrivalLaw& law, double horizon,
                                    RngStream& rng) {
  if (std::isnan(horizon) || horizon < 0)
    throw DomainError("simulate_forward: horizon must be >= 0");
  RenewalRealization r;
  r.horizon = horizon;
  double s = 0.0;
  while (s <= horizon) {
    r.epochs.push_back(s);
    s += law.sample(rng);
  }
  r.next_epoch = s;
  return r;
}

StationaryWindow StationaryWindow::build(const InterarrivalLaw& law, double c,
                                         const RngStream& rng) {
  if (!(c > 0)) throw DomainError("build_stationary_window: c must be > 0");
  RngStream delay_stream = rng.child(0);
  StationaryWindow w(law, rng.child(1), rng.child(2));
  const StationaryDelay d = law.sample_stationary_delay(delay_stream);
  w.xi0_ = d.xi0;
  w.u_ = d.u;
  w.points_ = {-d.undershoot(), d.s0};
  w.first_index_ = -1;
  w.cover_lo_ = w.cover_hi_ = 0.0;
  w.extend(-c, c);
  return w;
}

void StationaryWindow::extend(double lo, double hi) {
  while (points_.back() <= hi) points_.push_back(points_.back() + law_.sample(forward_));
  while (points_.front() >= lo) {
    points_.push_front(points_.front() - law_.sample(backward_));
    --first_index_;
  }
  cover_lo_ = std::min(cover_lo_, lo);
  cover_hi_ = std::max(cover_hi_, hi);
}

void StationaryWindow::reindex() {
  const auto zero = std::lower_bound(points_.begin(), points_.end(), 0.0);
  first_index_ = -static_cast<long>(zero - points_.begin());
}

StationaryWindow StationaryWindow::shifted(double t) const {
  StationaryWindow w = *this;
  for (double& p : w.points_) p -= t;
  w.cover_lo_ -= t;
  w.cover_hi_ -= t;
  // Keep at least one point on each side of the origin.
  w.extend(std::min(w.cover_lo_, 0.0), std::max(w.cover_hi_, 0.0));
  w.reindex();
  return w;
}

std::size_t StationaryWindow::count_in(double a, double b) const {
  if (!(a < b)) return 0;
  const auto lo = std::lower_bound(points_.begin(), points_.end(), a);
  const auto hi = std::lower_bound(points_.begin(), points_.end(), b);
  return static_cast<std::size_t>(hi - lo);
}

}  // namespace rpi
