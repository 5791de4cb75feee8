#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rpi/rng.hpp"

namespace rpi {

struct Exponential {
  double rate;
};
struct GammaLaw {
  double shape;
  double scale;
};
struct UniformLaw {
  double lo;
  double hi;
};
struct LogNormal {
  double mu;
  double sigma;
};
struct PointMass {
  double value;
};
struct Atom {
  double value;
  double prob;
};
struct FiniteDiscrete {
  std::vector<Atom> atoms;
};
/// P{X > x} = (xm / x)^alpha for x >= xm.
struct Pareto {
  double alpha;
  double xm;
};
struct Normal {
  double mean;
  double sd;
};

using LawParams = std::variant<Exponential, GammaLaw, UniformLaw, LogNormal,
                               PointMass, FiniteDiscrete, Pareto, Normal>;

/// A real-valued parametric law. Construction validates the family-legal
/// parameter ranges; it does not impose positivity (see InterarrivalLaw).
class Law {
 public:
  explicit Law(LawParams params);

  const LawParams& params() const { return params_; }
  std::string family_name() const;

  double sample(RngStream& rng) const;

  /// E[X]; +inf for Pareto with alpha <= 1.
  double mean() const;
  /// E|X|; +inf for Pareto with alpha <= 1.
  double abs_mean() const;
  /// P{X <= x}.
  double cdf(double x) const;
  /// P{X > x}.
  double survival(double x) const;
  /// E[X 1{X <= x}].
  double partial_expectation(double x) const;
  /// E[(X - a)^+] = integral of P{X > y} over (a, inf); may be +inf.
  double stop_loss(double a) const;
  /// p-quantile of |X|.
  double abs_quantile(double p) const;
  /// Smallest b with P{X <= b} = 1, if finite.
  std::optional<double> upper_bound() const;
  bool nonnegative() const;

 private:
  double abs_cdf(double q) const;

  LawParams params_;
};

/// A law for the multiplier eta carried by a kernel. Any validated Law is
/// acceptable, including signed laws, atoms at 0 and Pareto tails with
/// infinite mean.
using EtaLaw = Law;

/// Straddling-interval draw used to place the origin inside a stationary
/// renewal sequence: s0 = u * xi0, with xi0 size-biased and u ~ U(0,1).
struct StationaryDelay {
  double s0;
  double xi0;
  double u;
  /// -S*_{-1}; s0 + undershoot() == xi0 exactly.
  double under;
  double undershoot() const { return under; }
};

/// Positive interarrival law with finite mean.
///
/// Accepted families: Exponential, Gamma, Uniform(lo >= 0), LogNormal,
/// PointMass(c > 0), FiniteDiscrete with positive atoms. Pareto and Normal
/// are rejected. PointMass and commensurable FiniteDiscrete laws are flagged
/// lattice; simulation still runs, reports carry a warning.
class InterarrivalLaw {
 public:
  explicit InterarrivalLaw(LawParams params);

  const Law& law() const { return law_; }
  const LawParams& params() const { return law_.params(); }

  double mean() const { return mean_; }
  double sample(RngStream& rng) const { return law_.sample(rng); }

  /// Draw from the size-biased law x P{xi in dx} / mu.
  double sample_size_biased(RngStream& rng) const;
  StationaryDelay sample_stationary_delay(RngStream& rng) const;

  /// mu^-1 * integral_0^x P{xi > y} dy. Throws DomainError for x < 0.
  double integrated_tail_cdf(double x) const;

  bool is_lattice() const { return lattice_span_.has_value(); }
  /// Span d of the smallest lattice dZ carrying the law, when lattice.
  std::optional<double> lattice_span() const { return lattice_span_; }

 private:
  Law law_;
  double mean_;
  std::optional<double> lattice_span_;
};

/// Span of the lattice generated by positive atoms, or nullopt when some
/// pair of atoms has no rational ratio with denominator <= max_denominator.
std::optional<double> commensurable_span(const std::vector<double>& values,
                                         long long max_denominator = 1000000);

}  // namespace rpi
