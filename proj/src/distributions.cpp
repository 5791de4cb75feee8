#include "rpi/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rpi/errors.hpp"

namespace rpi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double norm_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}
double norm_quantile(double p) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

void validate(const LawParams& params) {
  std::visit(
      Overloaded{
          [](const Exponential& p) {
            require(std::isfinite(p.rate) && p.rate > 0,
                    "exponential: rate must be > 0");
          },
          [](const GammaLaw& p) {
            require(std::isfinite(p.shape) && p.shape > 0,
                    "gamma: shape must be > 0");
            require(std::isfinite(p.scale) && p.scale > 0,
                    "gamma: scale must be > 0");
          },
          [](const UniformLaw& p) {
            require(std::isfinite(p.lo) && std::isfinite(p.hi) && p.lo < p.hi,
                    "uniform: need lo < hi");
          },
          [](const LogNormal& p) {
            require(std::isfinite(p.mu), "lognormal: mu must be finite");
            require(std::isfinite(p.sigma) && p.sigma > 0,
                    "lognormal: sigma must be > 0");
          },
          [](const PointMass& p) {
            require(std::isfinite(p.value), "point_mass: value must be finite");
          },
          [](const FiniteDiscrete& p) {
            require(!p.atoms.empty(), "finite_discrete: no atoms");
            double total = 0.0;
            for (const auto& a : p.atoms) {
              require(std::isfinite(a.value),
                      "finite_discrete: atom values must be finite");
              require(std::isfinite(a.prob) && a.prob >= 0,
                      "finite_discrete: probabilities must be >= 0");
              total += a.prob;
            }
            require(std::abs(total - 1.0) <= 1e-12,
                    "finite_discrete: probabilities must sum to 1");
          },
          [](const Pareto& p) {
            require(std::isfinite(p.alpha) && p.alpha > 0,
                    "pareto: alpha must be > 0");
            require(std::isfinite(p.xm) && p.xm > 0, "pareto: xm must be > 0");
          },
          [](const Normal& p) {
            require(std::isfinite(p.mean), "normal: mean must be finite");
            require(std::isfinite(p.sd) && p.sd > 0, "normal: sd must be > 0");
          },
      },
      params);
}

}  // namespace

Law::Law(LawParams params) : params_(std::move(params)) { validate(params_); }

std::string Law::family_name() const {
  return std::visit(Overloaded{
                        [](const Exponential&) { return "exponential"; },
                        [](const GammaLaw&) { return "gamma"; },
                        [](const UniformLaw&) { return "uniform"; },
                        [](const LogNormal&) { return "lognormal"; },
                        [](const PointMass&) { return "point_mass"; },
                        [](const FiniteDiscrete&) { return "finite_discrete"; },
                        [](const Pareto&) { return "pareto"; },
                        [](const Normal&) { return "normal"; },
                    },
                    params_);
}

double Law::sample(RngStream& rng) const {
  return std::visit(
      Overloaded{
          [&](const Exponential& p) { return rng.exponential(p.rate); },
          [&](const GammaLaw& p) {
            std::gamma_distribution<double> g(p.shape, p.scale);
            return g(rng.engine());
          },
          [&](const UniformLaw& p) {
            return p.lo + (p.hi - p.lo) * rng.uniform();
          },
          [&](const LogNormal& p) {
            std::normal_distribution<double> n(p.mu, p.sigma);
            return std::exp(n(rng.engine()));
          },
          [&](const PointMass& p) { return p.value; },
          [&](const FiniteDiscrete& p) {
            const double v = rng.uniform();
            double acc = 0.0;
            for (const auto& a : p.atoms) {
              acc += a.prob;
              if (v < acc) return a.value;
            }
            // Rounding left acc slightly below 1: fall back to the last atom
            // with positive mass.
            for (auto it = p.atoms.rbegin(); it != p.atoms.rend(); ++it)
              if (it->prob > 0) return it->value;
            return p.atoms.back().value;
          },
          [&](const Pareto& p) {
            return p.xm * std::pow(rng.uniform(), -1.0 / p.alpha);
          },
          [&](const Normal& p) {
            std::normal_distribution<double> n(p.mean, p.sd);
            return n(rng.engine());
          },
      },
      params_);
}

double Law::mean() const {
  return std::visit(
      Overloaded{
          [](const Exponential& p) { return 1.0 / p.rate; },
          [](const GammaLaw& p) { return p.shape * p.scale; },
          [](const UniformLaw& p) { return 0.5 * (p.lo + p.hi); },
          [](const LogNormal& p) {
            return std::exp(p.mu + 0.5 * p.sigma * p.sigma);
          },
          [](const PointMass& p) { return p.value; },
          [](const FiniteDiscrete& p) {
            double m = 0.0;
            for (const auto& a : p.atoms) m += a.value * a.prob;
            return m;
          },
          [](const Pareto& p) {
            return p.alpha <= 1.0 ? kInf : p.alpha * p.xm / (p.alpha - 1.0);
          },
          [](const Normal& p) { return p.mean; },
      },
      params_);
}

double Law::abs_mean() const {
  return std::visit(
      Overloaded{
          [this](const UniformLaw& p) {
            if (p.lo >= 0) return mean();
            if (p.hi <= 0) return -mean();
            return (p.lo * p.lo + p.hi * p.hi) / (2.0 * (p.hi - p.lo));
          },
          [](const PointMass& p) { return std::abs(p.value); },
          [](const FiniteDiscrete& p) {
            double m = 0.0;
            for (const auto& a : p.atoms) m += std::abs(a.value) * a.prob;
            return m;
          },
          [](const Normal& p) {
            const double z = p.mean / p.sd;
            return p.sd * 2.0 * norm_pdf(z) + p.mean * (1.0 - 2.0 * norm_cdf(-z));
          },
          [this](const auto&) { return mean(); },
      },
      params_);
}

double Law::cdf(double x) const {
  return std::visit(
      Overloaded{
          [x](const Exponential& p) {
            return x <= 0 ? 0.0 : -std::expm1(-p.rate * x);
          },
          [x](const GammaLaw& p) {
            return x <= 0 ? 0.0 : boost::math::gamma_p(p.shape, x / p.scale);
          },
          [x](const UniformLaw& p) {
            if (x <= p.lo) return 0.0;
            if (x >= p.hi) return 1.0;
            return (x - p.lo) / (p.hi - p.lo);
          },
          [x](const LogNormal& p) {
            return x <= 0 ? 0.0 : norm_cdf((std::log(x) - p.mu) / p.sigma);
          },
          [x](const PointMass& p) { return x >= p.value ? 1.0 : 0.0; },
          [x](const FiniteDiscrete& p) {
            double acc = 0.0;
            for (const auto& a : p.atoms)
              if (a.value <= x) acc += a.prob;
            return std::min(acc, 1.0);
          },
          [x](const Pareto& p) {
            return x <= p.xm ? 0.0 : 1.0 - std::pow(p.xm / x, p.alpha);
          },
          [x](const Normal& p) { return norm_cdf((x - p.mean) / p.sd); },
      },
      params_);
}

double Law::survival(double x) const {
  return std::visit(
      Overloaded{
          [x](const Exponential& p) {
            return x <= 0 ? 1.0 : std::exp(-p.rate * x);
          },
          [x](const GammaLaw& p) {
            return x <= 0 ? 1.0 : boost::math::gamma_q(p.shape, x / p.scale);
          },
          [x](const LogNormal& p) {
            return x <= 0 ? 1.0 : norm_sf((std::log(x) - p.mu) / p.sigma);
          },
          [x](const FiniteDiscrete& p) {
            double acc = 0.0;
            for (const auto& a : p.atoms)
              if (a.value > x) acc += a.prob;
            return std::min(acc, 1.0);
          },
          [x](const Pareto& p) {
            return x <= p.xm ? 1.0 : std::pow(p.xm / x, p.alpha);
          },
          [x](const Normal& p) { return norm_sf((x - p.mean) / p.sd); },
          [this, x](const auto&) { return 1.0 - cdf(x); },
      },
      params_);
}

double Law::partial_expectation(double x) const {
  return std::visit(
      Overloaded{
          [x](const Exponential& p) {
            if (x <= 0) return 0.0;
            const double lx = p.rate * x;
            return (-std::expm1(-lx) - lx * std::exp(-lx)) / p.rate;
          },
          [x](const GammaLaw& p) {
            if (x <= 0) return 0.0;
            return p.shape * p.scale *
                   boost::math::gamma_p(p.shape + 1.0, x / p.scale);
          },
          [x](const UniformLaw& p) {
            const double y = std::clamp(x, p.lo, p.hi);
            return (y * y - p.lo * p.lo) / (2.0 * (p.hi - p.lo));
          },
          [x](const LogNormal& p) {
            if (x <= 0) return 0.0;
            const double d = (std::log(x) - p.mu) / p.sigma;
            return std::exp(p.mu + 0.5 * p.sigma * p.sigma) *
                   norm_cdf(d - p.sigma);
          },
          [x](const PointMass& p) { return p.value <= x ? p.value : 0.0; },
          [x](const FiniteDiscrete& p) {
            double acc = 0.0;
            for (const auto& a : p.atoms)
              if (a.value <= x) acc += a.value * a.prob;
            return acc;
          },
          [x](const Pareto& p) {
            if (x <= p.xm) return 0.0;
            if (p.alpha == 1.0) return p.xm * std::log(x / p.xm);
            return p.alpha * std::pow(p.xm, p.alpha) *
                   (std::pow(x, 1.0 - p.alpha) - std::pow(p.xm, 1.0 - p.alpha)) /
                   (1.0 - p.alpha);
          },
          [x](const Normal& p) {
            const double z = (x - p.mean) / p.sd;
            return p.mean * norm_cdf(z) - p.sd * norm_pdf(z);
          },
      },
      params_);
}

double Law::stop_loss(double a) const {
  return std::visit(
      Overloaded{
          [this, a](const Exponential& p) {
            return a <= 0 ? mean() - a : std::exp(-p.rate * a) / p.rate;
          },
          [this, a](const GammaLaw& p) {
            if (a <= 0) return mean() - a;
            const double z = a / p.scale;
            return p.shape * p.scale * boost::math::gamma_q(p.shape + 1.0, z) -
                   a * boost::math::gamma_q(p.shape, z);
          },
          [this, a](const UniformLaw& p) {
            if (a <= p.lo) return mean() - a;
            if (a >= p.hi) return 0.0;
            return (p.hi - a) * (p.hi - a) / (2.0 * (p.hi - p.lo));
          },
          [this, a](const LogNormal& p) {
            if (a <= 0) return mean() - a;
            const double d = (std::log(a) - p.mu) / p.sigma;
            return mean() * norm_sf(d - p.sigma) - a * norm_sf(d);
          },
          [a](const PointMass& p) { return std::max(p.value - a, 0.0); },
          [a](const FiniteDiscrete& p) {
            double acc = 0.0;
            for (const auto& at : p.atoms)
              acc += at.prob * std::max(at.value - a, 0.0);
            return acc;
          },
          [this, a](const Pareto& p) {
            if (p.alpha <= 1.0) return kInf;
            if (a <= p.xm) return mean() - a;
            return std::pow(p.xm, p.alpha) * std::pow(a, 1.0 - p.alpha) /
                   (p.alpha - 1.0);
          },
          [a](const Normal& p) {
            const double z = (a - p.mean) / p.sd;
            return p.sd * norm_pdf(z) + (p.mean - a) * norm_sf(z);
          },
      },
      params_);
}

double Law::abs_cdf(double q) const {
  if (q < 0) return 0.0;
  if (const auto* d = std::get_if<FiniteDiscrete>(&params_)) {
    double acc = 0.0;
    for (const auto& a : d->atoms)
      if (std::abs(a.value) <= q) acc += a.prob;
    return std::min(acc, 1.0);
  }
  if (const auto* m = std::get_if<PointMass>(&params_))
    return std::abs(m->value) <= q ? 1.0 : 0.0;
  // Remaining families have no atoms.
  return std::clamp(cdf(q) - cdf(-q), 0.0, 1.0);
}

double Law::abs_quantile(double p) const {
  require(p > 0 && p < 1, "abs_quantile: p must lie in (0, 1)");
  if (nonnegative()) {
    if (const auto* e = std::get_if<Exponential>(&params_))
      return -std::log1p(-p) / e->rate;
    if (const auto* g = std::get_if<GammaLaw>(&params_))
      return g->scale * boost::math::gamma_p_inv(g->shape, p);
    if (const auto* l = std::get_if<LogNormal>(&params_))
      return std::exp(l->mu + l->sigma * norm_quantile(p));
    if (const auto* r = std::get_if<Pareto>(&params_))
      return r->xm * std::pow(1.0 - p, -1.0 / r->alpha);
  }
  // Bisection on P{|X| <= q}.
  double hi = 1.0;
  while (abs_cdf(hi) < p) {
    hi *= 2.0;
    if (!std::isfinite(hi)) return kInf;
  }
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (abs_cdf(mid) >= p ? hi : lo) = mid;
  }
  return hi;
}

std::optional<double> Law::upper_bound() const {
  return std::visit(
      Overloaded{
          [](const UniformLaw& p) -> std::optional<double> { return p.hi; },
          [](const PointMass& p) -> std::optional<double> { return p.value; },
          [](const FiniteDiscrete& p) -> std::optional<double> {
            double m = -kInf;
            for (const auto& a : p.atoms)
              if (a.prob > 0) m = std::max(m, a.value);
            return m;
          },
          [](const auto&) -> std::optional<double> { return std::nullopt; },
      },
      params_);
}

bool Law::nonnegative() const {
  return std::visit(
      Overloaded{
          [](const UniformLaw& p) { return p.lo >= 0; },
          [](const PointMass& p) { return p.value >= 0; },
          [](const FiniteDiscrete& p) {
            return std::all_of(p.atoms.begin(), p.atoms.end(),
                               [](const Atom& a) { return a.value >= 0; });
          },
          [](const Normal&) { return false; },
          [](const auto&) { return true; },
      },
      params_);
}

// ---------------------------------------------------------------------------

namespace {

/// Best rational approximation p/q of x with q <= max_den, by continued
/// fractions.
std::pair<long long, long long> rational_approx(double x, long long max_den) {
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(r);
    if (a > 1e15) break;
    const auto ai = static_cast<long long>(a);
    const long long q2 = q0 + ai * q1;
    if (q2 > max_den) break;
    const long long p2 = p0 + ai * p1;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return {p1, q1};
}

}  // namespace

std::optional<double> commensurable_span(const std::vector<double>& values,
                                         long long max_denominator) {
  // A few ulps: any irrational ratio has a rational approximation with
  // denominator <= 1e6 far closer than 1e-9, so a loose tolerance would call
  // almost everything lattice.
  constexpr double kRatioTol = 64.0 * std::numeric_limits<double>::epsilon();
  if (values.empty()) return std::nullopt;
  const double base = *std::min_element(values.begin(), values.end());
  if (!(base > 0)) return std::nullopt;

  std::vector<std::pair<long long, long long>> ratios;
  for (double v : values) {
    const double r = v / base;
    auto [p, q] = rational_approx(r, max_denominator);
    if (q == 0 || std::abs(r - static_cast<double>(p) / q) > kRatioTol * r)
      return std::nullopt;
    ratios.emplace_back(p, q);
  }
  long double lcm = 1;
  for (auto [p, q] : ratios) {
    const auto l = static_cast<long long>(lcm);
    lcm = static_cast<long double>(l / std::gcd(l, q)) * q;
    if (lcm > 1e15L) return std::nullopt;
  }
  const auto big_l = static_cast<long long>(lcm);
  long long g = 0;
  for (auto [p, q] : ratios) g = std::gcd(g, p * (big_l / q));
  return base * static_cast<double>(g) / static_cast<double>(big_l);
}

InterarrivalLaw::InterarrivalLaw(LawParams params) : law_(std::move(params)) {
  std::visit(
      Overloaded{
          [](const UniformLaw& p) {
            require(p.lo >= 0, "interarrival uniform: lo must be >= 0");
          },
          [](const PointMass& p) {
            require(p.value > 0, "interarrival point_mass: value must be > 0");
          },
          [](const FiniteDiscrete& p) {
            for (const auto& a : p.atoms)
              require(a.value > 0,
                      "interarrival finite_discrete: atoms must be > 0");
          },
          [](const Pareto&) {
            throw PreconditionError(
                "interarrival law: pareto is only allowed for eta");
          },
          [](const Normal&) {
            throw PreconditionError(
                "interarrival law: normal is not a positive law");
          },
          [](const auto&) {},
      },
      law_.params());
  mean_ = law_.mean();
  require(std::isfinite(mean_) && mean_ > 0,
          "interarrival law: mean must be finite and > 0");

  if (const auto* m = std::get_if<PointMass>(&law_.params())) {
    lattice_span_ = m->value;
  } else if (const auto* d = std::get_if<FiniteDiscrete>(&law_.params())) {
    std::vector<double> support;
    for (const auto& a : d->atoms)
      if (a.prob > 0) support.push_back(a.value);
    lattice_span_ = commensurable_span(support);
  }
}

double InterarrivalLaw::sample_size_biased(RngStream& rng) const {
  return std::visit(
      Overloaded{
          [&](const Exponential& p) {
            std::gamma_distribution<double> g(2.0, 1.0 / p.rate);
            return g(rng.engine());
          },
          [&](const GammaLaw& p) {
            std::gamma_distribution<double> g(p.shape + 1.0, p.scale);
            return g(rng.engine());
          },
          [&](const UniformLaw& p) {
            // Density 2x / (hi^2 - lo^2) on [lo, hi]: inverse transform.
            const double lo2 = p.lo * p.lo;
            return std::sqrt(lo2 + rng.uniform() * (p.hi * p.hi - lo2));
          },
          [&](const LogNormal& p) {
            // x f(x) / mu is LogNormal(mu + sigma^2, sigma).
            std::normal_distribution<double> n(p.mu + p.sigma * p.sigma,
                                               p.sigma);
            return std::exp(n(rng.engine()));
          },
          [&](const PointMass& p) { return p.value; },
          [&](const FiniteDiscrete& p) {
            const double v = rng.uniform() * mean_;
            double acc = 0.0;
            for (const auto& a : p.atoms) {
              acc += a.value * a.prob;
              if (v < acc) return a.value;
            }
            for (auto it = p.atoms.rbegin(); it != p.atoms.rend(); ++it)
              if (it->prob > 0) return it->value;
            return p.atoms.back().value;
          },
          [&](const auto&) -> double {
            throw PreconditionError("size-biased sampling: unsupported family");
          },
      },
      law_.params());
}

StationaryDelay InterarrivalLaw::sample_stationary_delay(RngStream& rng) const {
  const double raw = sample_size_biased(rng);
  const double u = rng.uniform();
  const double s0 = u * raw;
  const double under = raw - s0;
  // Round xi0 to the sum actually represented by the two pieces, so that
  // s0 + undershoot == xi0 holds exactly.
  return {s0, s0 + under, u, under};
}

double InterarrivalLaw::integrated_tail_cdf(double x) const {
  if (std::isnan(x) || x < 0)
    throw DomainError("integrated_tail_cdf: x must be >= 0");
  if (x == 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double value = std::visit(
      Overloaded{
          [x](const Exponential& p) { return -std::expm1(-p.rate * x); },
          [x](const PointMass& p) { return std::min(x, p.value) / p.value; },
          [this, x](const UniformLaw& p) {
            double integral;
            if (x <= p.lo) {
              integral = x;
            } else if (x >= p.hi) {
              integral = mean_;
            } else {
              const double w = p.hi - p.lo;
              integral = p.lo + (w * w - (p.hi - x) * (p.hi - x)) / (2.0 * w);
            }
            return integral / mean_;
          },
          [this, x](const auto&) {
            // integral_0^x P{xi > y} dy = x P{xi > x} + E[xi 1{xi <= x}].
            return (x * law_.survival(x) + law_.partial_expectation(x)) / mean_;
          },
      },
      law_.params());
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace rpi
