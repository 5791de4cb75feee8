#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rpi/distributions.hpp"
#include "rpi/rng.hpp"

namespace rpi {

/// Right-continuous step function: values[i] on [breakpoints[i],
/// breakpoints[i+1]), the last value extends to +inf, and the function is 0
/// left of breakpoints[0] (which must be >= 0).
struct StepTable {
  std::vector<double> breakpoints;
  std::vector<double> values;

  void validate() const;
  double eval(double t) const;
  /// sup |f| over [lo, hi] (include_hi) or [lo, hi).
  double sup_abs(double lo, double hi, bool include_hi) const;
  /// First time after which f is identically 0; nullopt if f does not vanish.
  std::optional<double> support_end() const;
  bool nonnegative() const;
};

struct DeterministicTable {
  std::shared_ptr<const StepTable> table;
};
/// X(t) = 1{0 <= t < eta}.
struct Indicator {
  EtaLaw eta;
};
/// X(t) = eta * exp(-a t) for t >= 0.
struct ScaledExpDecay {
  EtaLaw eta;
  double a;
};
/// X(t) = eta * f(t) with f a step table.
struct ScaledTable {
  EtaLaw eta;
  std::shared_ptr<const StepTable> table;
};
/// Birth-death chain on {0, ..., state_cap} started at `initial`, absorbed at
/// 0. Rates are indexed by state - 1; births are suppressed at state_cap.
struct BirthDeath {
  int initial = 1;
  std::vector<double> birth_rates;
  std::vector<double> death_rates;
  int state_cap = 1;
  std::size_t max_jumps = 1000000;
  double max_time = 1e6;
};
/// Unit spikes on [k + k^2 eta / (k^2 + 1), k + eta), k = 1, 2, ..., with
/// eta supported in [0, 1]. Its mean profile is summable over unit
/// intervals while every unit interval carries a spike.
struct SpikeTrain {
  EtaLaw eta;
};

using KernelVariant = std::variant<DeterministicTable, Indicator, ScaledExpDecay,
                                   ScaledTable, BirthDeath, SpikeTrain>;

/// One sampled trajectory. Immutable after creation; evaluates to 0 for t < 0.
class PathSample {
 public:
  struct Step {
    std::shared_ptr<const StepTable> table;
    double scale;
  };
  struct IndicatorPath {
    double eta;
  };
  struct ExpDecayPath {
    double eta;
    double a;
  };
  /// states[i] holds on [times[i], times[i+1]); times[0] = 0.
  struct BirthDeathPath {
    std::vector<double> times;
    std::vector<int> states;
  };
  struct SpikePath {
    double eta;
  };
  using Variant =
      std::variant<Step, IndicatorPath, ExpDecayPath, BirthDeathPath, SpikePath>;

  explicit PathSample(Variant v) : v_(std::move(v)) {}

  const Variant& data() const { return v_; }

  double eval(double t) const;
  /// sup of |path| over the closed interval [lo, hi].
  double sup_over_interval(double lo, double hi) const;
  /// sup of |path| over [lo, hi).
  double sup_over_half_open(double lo, double hi) const;
  /// tau = inf{t >= 0 : path vanishes on [t, inf)}, when finite and known.
  std::optional<double> absorption_time() const;

  /// Visit the maximal constant nonzero pieces [a, b) of the path clipped to
  /// [lo, hi). Returns false (and visits nothing) for paths that are not
  /// piecewise constant.
  bool for_each_piece(double lo, double hi,
                      const std::function<void(double, double, double)>& fn) const;

 private:
  double sup_abs(double lo, double hi, bool include_hi) const;

  Variant v_;
};

/// Raised when a birth-death path is still alive after its jump or time
/// budget. The partial path is kept for inspection.
class NonAbsorbedPath : public std::runtime_error {
 public:
  NonAbsorbedPath(const std::string& msg, PathSample partial)
      : std::runtime_error(msg), partial_(std::move(partial)) {}
  const PathSample& partial() const { return partial_; }

 private:
  PathSample partial_;
};

class KernelSpec {
 public:
  explicit KernelSpec(KernelVariant v);

  const KernelVariant& variant() const { return v_; }
  std::string type_name() const;

  PathSample sample_path(RngStream& rng) const;

  /// True when every path is >= 0.
  bool nonnegative() const;

  /// Integral over (A, inf) of the per-age tail profile used to bound the
  /// stationary truncation error:
  ///   - kernels that vanish after tau: P{tau > x}, so that the integral
  ///     divided by mu bounds the expected number of nonzero summands left
  ///     out beyond age A;
  ///   - ScaledExpDecay: E|X(x)|, bounding the expected absolute error.
  /// May be +inf (e.g. E tau = inf).
  double tail_integral(double age) const;

  /// Fixed discontinuity locations shared by all paths (step tables only).
  std::vector<double> fixed_discontinuities() const;

 private:
  KernelVariant v_;
};

PathSample sample_path(const KernelSpec& spec, RngStream& rng);
double eval_path(const PathSample& path, double t);
double sup_over_interval(const PathSample& path, double lo, double hi);
std::optional<double> absorption_time(const PathSample& path);

}  // namespace rpi
