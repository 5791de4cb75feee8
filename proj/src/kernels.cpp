#include "rpi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

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

void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

double spike_start(long long k, double eta) {
  const double k2 = static_cast<double>(k) * static_cast<double>(k);
  return static_cast<double>(k) + (k2 / (k2 + 1.0)) * eta;
}
double spike_end(long long k, double eta) {
  return static_cast<double>(k) + eta;
}

/// Does [a, b) meet [lo, hi] (include_hi) or [lo, hi)?
bool meets(double a, double b, double lo, double hi, bool include_hi) {
  if (!(a < b)) return false;
  if (include_hi ? a > hi : a >= hi) return false;
  return lo < b;
}

}  // namespace

// --- StepTable --------------------------------------------------------------

void StepTable::validate() const {
  require(!breakpoints.empty(), "step table: no breakpoints");
  require(breakpoints.size() == values.size(),
          "step table: breakpoints and values differ in length");
  require(breakpoints.front() >= 0, "step table: first breakpoint must be >= 0");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    require(std::isfinite(breakpoints[i]) && std::isfinite(values[i]),
            "step table: entries must be finite");
    if (i > 0)
      require(breakpoints[i] > breakpoints[i - 1],
              "step table: breakpoints must be strictly increasing");
  }
}

double StepTable::eval(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  if (it == breakpoints.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double StepTable::sup_abs(double lo, double hi, bool include_hi) const {
  if (lo > hi || (!include_hi && lo == hi)) return 0.0;
  double best = 0.0;
  const auto n = breakpoints.size();
  auto first = static_cast<std::size_t>(
      std::upper_bound(breakpoints.begin(), breakpoints.end(), lo) -
      breakpoints.begin());
  // Segment containing lo (if lo is right of the first breakpoint).
  if (first > 0) best = std::abs(values[first - 1]);
  for (std::size_t j = first; j < n; ++j) {
    const double b = breakpoints[j];
    if (include_hi ? b > hi : b >= hi) break;
    best = std::max(best, std::abs(values[j]));
  }
  return best;
}

std::optional<double> StepTable::support_end() const {
  if (values.back() != 0.0) return std::nullopt;
  for (std::size_t i = values.size(); i-- > 0;) {
    if (values[i] != 0.0) return breakpoints[i + 1];
  }
  return 0.0;
}

bool StepTable::nonnegative() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return v >= 0; });
}

// --- PathSample -------------------------------------------------------------

double PathSample::eval(double t) const {
  if (t < 0) return 0.0;
  return std::visit(
      Overloaded{
          [t](const Step& p) { return p.scale * p.table->eval(t); },
          [t](const IndicatorPath& p) { return t < p.eta ? 1.0 : 0.0; },
          [t](const ExpDecayPath& p) { return p.eta * std::exp(-p.a * t); },
          [t](const BirthDeathPath& p) {
            auto it = std::upper_bound(p.times.begin(), p.times.end(), t);
            return static_cast<double>(
                p.states[static_cast<std::size_t>(it - p.times.begin()) - 1]);
          },
          [t](const SpikePath& p) {
            const double kf = std::floor(t);
            if (kf < 1) return 0.0;
            const auto k = static_cast<long long>(kf);
            return (spike_start(k, p.eta) <= t && t < spike_end(k, p.eta)) ? 1.0
                                                                          : 0.0;
          },
      },
      v_);
}

double PathSample::sup_abs(double lo, double hi, bool include_hi) const {
  if (lo > hi || (!include_hi && lo == hi)) return 0.0;
  // Paths vanish on (-inf, 0).
  if (include_hi ? hi < 0 : hi <= 0) return 0.0;
  lo = std::max(lo, 0.0);
  return std::visit(
      Overloaded{
          [&](const Step& p) {
            return std::abs(p.scale) * p.table->sup_abs(lo, hi, include_hi);
          },
          [&](const IndicatorPath& p) {
            return meets(0.0, p.eta, lo, hi, include_hi) ? 1.0 : 0.0;
          },
          [&](const ExpDecayPath& p) {
            // Monotone in |.|: the sup sits at the left end.
            return std::abs(p.eta) * std::exp(-p.a * lo);
          },
          [&](const BirthDeathPath& p) {
            auto first = static_cast<std::size_t>(
                std::upper_bound(p.times.begin(), p.times.end(), lo) -
                p.times.begin());
            double best = p.states[first - 1];
            for (std::size_t j = first; j < p.times.size(); ++j) {
              if (include_hi ? p.times[j] > hi : p.times[j] >= hi) break;
              best = std::max(best, static_cast<double>(p.states[j]));
            }
            return best;
          },
          [&](const SpikePath& p) {
            if (!(p.eta > 0)) return 0.0;
            const auto k_lo = std::max<long long>(1, static_cast<long long>(std::floor(lo)));
            const auto k_hi = static_cast<long long>(std::floor(hi));
            if (k_hi - k_lo > 2) return 1.0;  // a whole unit interval with a spike
            for (long long k = k_lo; k <= k_hi; ++k) {
              if (meets(spike_start(k, p.eta), spike_end(k, p.eta), lo, hi,
                        include_hi))
                return 1.0;
            }
            return 0.0;
          },
      },
      v_);
}

double PathSample::sup_over_interval(double lo, double hi) const {
  return sup_abs(lo, hi, true);
}

double PathSample::sup_over_half_open(double lo, double hi) const {
  return sup_abs(lo, hi, false);
}

std::optional<double> PathSample::absorption_time() const {
  return std::visit(
      Overloaded{
          [](const Step& p) -> std::optional<double> {
            if (p.scale == 0.0) return 0.0;
            return p.table->support_end();
          },
          [](const IndicatorPath& p) -> std::optional<double> {
            return std::max(p.eta, 0.0);
          },
          [](const ExpDecayPath& p) -> std::optional<double> {
            if (p.eta == 0.0) return 0.0;
            return std::nullopt;
          },
          [](const BirthDeathPath& p) -> std::optional<double> {
            if (p.states.back() != 0) return std::nullopt;
            return p.times.back();
          },
          [](const SpikePath& p) -> std::optional<double> {
            if (p.eta > 0) return std::nullopt;
            return 0.0;
          },
      },
      v_);
}

bool PathSample::for_each_piece(
    double lo, double hi,
    const std::function<void(double, double, double)>& fn) const {
  if (std::holds_alternative<ExpDecayPath>(v_)) return false;
  lo = std::max(lo, 0.0);
  if (!(lo < hi)) return true;
  auto emit = [&](double a, double b, double v) {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (a < b && v != 0.0) fn(a, b, v);
  };
  std::visit(
      Overloaded{
          [&](const Step& p) {
            const auto& bp = p.table->breakpoints;
            for (std::size_t i = 0; i < bp.size(); ++i) {
              const double end = i + 1 < bp.size() ? bp[i + 1] : kInf;
              if (end <= lo) continue;
              if (bp[i] >= hi) break;
              emit(bp[i], end, p.scale * p.table->values[i]);
            }
          },
          [&](const IndicatorPath& p) { emit(0.0, p.eta, 1.0); },
          [&](const ExpDecayPath&) {},
          [&](const BirthDeathPath& p) {
            for (std::size_t i = 0; i < p.times.size(); ++i) {
              const double end = i + 1 < p.times.size() ? p.times[i + 1] : kInf;
              if (end <= lo) continue;
              if (p.times[i] >= hi) break;
              emit(p.times[i], end, p.states[i]);
            }
          },
          [&](const SpikePath& p) {
            if (!(p.eta > 0)) return;
            const auto k_lo = std::max<long long>(1, static_cast<long long>(std::floor(lo)));
            const auto k_hi = static_cast<long long>(std::floor(hi));
            for (long long k = k_lo; k <= k_hi; ++k)
              emit(spike_start(k, p.eta), spike_end(k, p.eta), 1.0);
          },
      },
      v_);
  return true;
}

// --- KernelSpec -------------------------------------------------------------

KernelSpec::KernelSpec(KernelVariant v) : v_(std::move(v)) {
  std::visit(
      Overloaded{
          [](const DeterministicTable& k) {
            require(k.table != nullptr, "deterministic table: missing table");
            k.table->validate();
          },
          [](const Indicator&) {},
          [](const ScaledExpDecay& k) {
            require(std::isfinite(k.a) && k.a > 0,
                    "scaled exp decay: a must be > 0");
          },
          [](const ScaledTable& k) {
            require(k.table != nullptr, "scaled table: missing table");
            k.table->validate();
          },
          [](const BirthDeath& k) {
            require(k.state_cap >= 1, "birth-death: state_cap must be >= 1");
            require(k.initial >= 1 && k.initial <= k.state_cap,
                    "birth-death: initial must lie in [1, state_cap]");
            const auto cap = static_cast<std::size_t>(k.state_cap);
            require(k.birth_rates.size() == cap && k.death_rates.size() == cap,
                    "birth-death: need one birth and one death rate per state");
            for (std::size_t i = 0; i < cap; ++i) {
              require(std::isfinite(k.birth_rates[i]) && k.birth_rates[i] >= 0,
                      "birth-death: birth rates must be >= 0");
              require(std::isfinite(k.death_rates[i]) && k.death_rates[i] > 0,
                      "birth-death: death rates must be > 0");
            }
            require(k.max_jumps >= 1, "birth-death: max_jumps must be >= 1");
            require(k.max_time > 0, "birth-death: max_time must be > 0");
          },
          [](const SpikeTrain& k) {
            const auto hi = k.eta.upper_bound();
            require(k.eta.nonnegative() && hi && *hi <= 1.0,
                    "spike train: eta must be supported in [0, 1]");
          },
      },
      v_);
}

std::string KernelSpec::type_name() const {
  return std::visit(Overloaded{
                        [](const DeterministicTable&) { return "deterministic_table"; },
                        [](const Indicator&) { return "indicator"; },
                        [](const ScaledExpDecay&) { return "scaled_exp_decay"; },
                        [](const ScaledTable&) { return "scaled_table"; },
                        [](const BirthDeath&) { return "birth_death"; },
                        [](const SpikeTrain&) { return "spike_train"; },
                    },
                    v_);
}

PathSample KernelSpec::sample_path(RngStream& rng) const {
  return std::visit(
      Overloaded{
          [](const DeterministicTable& k) {
            return PathSample(PathSample::Step{k.table, 1.0});
          },
          [&](const Indicator& k) {
            return PathSample(PathSample::IndicatorPath{k.eta.sample(rng)});
          },
          [&](const ScaledExpDecay& k) {
            return PathSample(PathSample::ExpDecayPath{k.eta.sample(rng), k.a});
          },
          [&](const ScaledTable& k) {
            return PathSample(PathSample::Step{k.table, k.eta.sample(rng)});
          },
          [&](const BirthDeath& k) {
            PathSample::BirthDeathPath path;
            path.times.push_back(0.0);
            path.states.push_back(k.initial);
            int state = k.initial;
            double t = 0.0;
            std::size_t jumps = 0;
            while (state != 0) {
              const auto idx = static_cast<std::size_t>(state - 1);
              const double birth = state < k.state_cap ? k.birth_rates[idx] : 0.0;
              const double death = k.death_rates[idx];
              const double total = birth + death;
              t += rng.exponential(total);
              if (t > k.max_time || jumps >= k.max_jumps) {
                throw NonAbsorbedPath(
                    "birth-death path not absorbed within budget (E tau may be "
                    "infinite)",
                    PathSample(std::move(path)));
              }
              state += rng.uniform() * total < birth ? 1 : -1;
              ++jumps;
              path.times.push_back(t);
              path.states.push_back(state);
            }
            return PathSample(std::move(path));
          },
          [&](const SpikeTrain& k) {
            return PathSample(PathSample::SpikePath{k.eta.sample(rng)});
          },
      },
      v_);
}

bool KernelSpec::nonnegative() const {
  return std::visit(
      Overloaded{
          [](const DeterministicTable& k) { return k.table->nonnegative(); },
          [](const ScaledExpDecay& k) { return k.eta.nonnegative(); },
          [](const ScaledTable& k) {
            return k.eta.nonnegative() && k.table->nonnegative();
          },
          [](const auto&) { return true; },
      },
      v_);
}

double KernelSpec::tail_integral(double age) const {
  age = std::max(age, 0.0);
  return std::visit(
      Overloaded{
          [age](const DeterministicTable& k) {
            const auto end = k.table->support_end();
            return end ? std::max(*end - age, 0.0) : kInf;
          },
          [age](const Indicator& k) { return k.eta.stop_loss(age); },
          [age](const ScaledExpDecay& k) {
            const double m = k.eta.abs_mean();
            if (m == 0.0) return 0.0;
            return m * std::exp(-k.a * age) / k.a;
          },
          [age](const ScaledTable& k) {
            const auto end = k.table->support_end();
            return end ? std::max(*end - age, 0.0) : kInf;
          },
          [age](const BirthDeath& k) {
            // P_i{tau > x} = e_i' exp(Q x) 1 on the transient states, so the
            // tail integral is e_i' exp(Q A) (-Q)^{-1} 1.
            const int n = k.state_cap;
            Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
            for (int s = 1; s <= n; ++s) {
              const int i = s - 1;
              const double birth = s < n ? k.birth_rates[i] : 0.0;
              const double death = k.death_rates[i];
              q(i, i) = -(birth + death);
              if (s < n) q(i, i + 1) = birth;
              if (s > 1) q(i, i - 1) = death;
            }
            const Eigen::VectorXd remaining =
                (-q).partialPivLu().solve(Eigen::VectorXd::Ones(n));
            const Eigen::MatrixXd transition = (q * age).exp();
            return std::max(transition.row(k.initial - 1).dot(remaining), 0.0);
          },
          [age](const SpikeTrain& k) {
            // Spike k has length eta / (k^2 + 1) and lies in [k, k + 1).
            const double first = std::max(1.0, std::floor(age));
            const double sum_inv_sq = 1.0 / (first * first) + 1.0 / first;
            return k.eta.mean() * sum_inv_sq;
          },
      },
      v_);
}

std::vector<double> KernelSpec::fixed_discontinuities() const {
  if (const auto* d = std::get_if<DeterministicTable>(&v_))
    return d->table->breakpoints;
  if (const auto* s = std::get_if<ScaledTable>(&v_))
    return s->table->breakpoints;
  return {};
}

PathSample sample_path(const KernelSpec& spec, RngStream& rng) {
  return spec.sample_path(rng);
}
double eval_path(const PathSample& path, double t) { return path.eval(t); }
double sup_over_interval(const PathSample& path, double lo, double hi) {
  return path.sup_over_interval(lo, hi);
}
std::optional<double> absorption_time(const PathSample& path) {
  return path.absorption_time();
}

}  // namespace rpi
