#include "rpi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "rpi/errors.hpp"

namespace rpi {

namespace {

constexpr std::size_t kEnergyExactCap = 20000;
constexpr std::size_t kDistinctMatrixCap = 3000;

/// Fisher-Yates with our own uniform draws, so permutations do not depend on
/// the standard library's shuffle algorithm.
template <class T>
void shuffle(std::vector<T>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

double row_distance(const double* x, const double* y, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = x[k] - y[k];
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty())
    throw PreconditionError("empirical distribution needs at least one sample");
  for (double x : samples_)
    if (std::isnan(x)) throw PreconditionError("empirical distribution: NaN sample");
  std::sort(samples_.begin(), samples_.end());
}

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
  return static_cast<double>(it - samples_.begin()) / static_cast<double>(n());
}

double EmpiricalDistribution::mean() const {
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) /
         static_cast<double>(n());
}

double EmpiricalDistribution::variance() const {
  if (n() < 2) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (double x : samples_) s += (x - m) * (x - m);
  return s / static_cast<double>(n() - 1);
}

std::string to_string(TestMethod m) {
  switch (m) {
    case TestMethod::KsTwoSample: return "ks_two_sample";
    case TestMethod::KsOneSample: return "ks_one_sample";
    case TestMethod::EnergyPermutation: return "energy_permutation";
    case TestMethod::ChiSquare: return "chi_square";
    case TestMethod::ChiSquareHomogeneity: return "chi_square_homogeneity";
  }
  return "unknown";
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0)) return 1.0;
  if (lambda < 1.18) {
    // CDF series, fast for small lambda.
    const double c = M_PI * M_PI / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double k = 2.0 * j - 1.0;
      const double term = std::exp(-k * k * c);
      s += term;
      if (term < 1e-18 * s) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

TestResult ks_two_sample(const EmpiricalDistribution& a,
                         const EmpiricalDistribution& b) {
  const auto& xs = a.samples();
  const auto& ys = b.samples();
  const double n = static_cast<double>(xs.size());
  const double m = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  // Evaluate both right-continuous ECDFs after consuming every copy of the
  // next distinct value, so ties never open a spurious gap.
  while (i < xs.size() || j < ys.size()) {
    double v;
    if (j >= ys.size() || (i < xs.size() && xs[i] <= ys[j]))
      v = xs[i];
    else
      v = ys[j];
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  TestResult r;
  r.statistic = d;
  r.p_value = kolmogorov_sf(std::sqrt(n * m / (n + m)) * d);
  r.n = xs.size();
  r.m = ys.size();
  r.method = TestMethod::KsTwoSample;
  return r;
}

TestResult ks_one_sample(const EmpiricalDistribution& a,
                         const std::function<double(double)>& cdf) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double at_lo = cdf(-kInf);
  const double at_hi = cdf(kInf);
  if (!(std::abs(at_lo) <= 1e-9 && std::abs(at_hi - 1.0) <= 1e-9))
    throw PreconditionError("ks_one_sample: cdf must run from 0 to 1");
  const auto& xs = a.samples();
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    if (!(f >= 0.0 && f <= 1.0))
      throw PreconditionError("ks_one_sample: cdf value outside [0, 1]");
    if (f < prev - 1e-15)
      throw PreconditionError("ks_one_sample: cdf is not nondecreasing");
    prev = f;
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  TestResult r;
  r.statistic = d;
  r.p_value = kolmogorov_sf(std::sqrt(n) * d);
  r.n = xs.size();
  r.method = TestMethod::KsOneSample;
  return r;
}

double energy_statistic(const RowMatrix& a, const RowMatrix& b) {
  if (a.cols != b.cols || a.cols == 0)
    throw PreconditionError("energy distance: column counts differ");
  const std::size_t n = a.rows(), m = b.rows(), d = a.cols;
  double cross = 0.0, within_a = 0.0, within_b = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cross += row_distance(a.row(i), b.row(j), d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      within_a += row_distance(a.row(i), a.row(j), d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      within_b += row_distance(b.row(i), b.row(j), d);
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return 2.0 * cross / (nn * mm) - 2.0 * within_a / (nn * nn) -
         2.0 * within_b / (mm * mm);
}

namespace {

RowMatrix subsample_rows(const RowMatrix& x, std::size_t keep, RngStream& rng) {
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  shuffle(idx, rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  RowMatrix out;
  out.cols = x.cols;
  for (std::size_t r : idx) out.data.insert(out.data.end(), x.row(r), x.row(r) + x.cols);
  return out;
}

/// Pooled rows collapsed to distinct values: energy statistics only depend on
/// how many copies of each distinct row each sample holds.
struct DistinctRows {
  std::vector<std::size_t> id;     // pooled row -> distinct id
  std::vector<std::size_t> total;  // copies of each distinct row
  std::vector<std::size_t> first;  // one pooled row per distinct id
};

DistinctRows distinct_rows(const std::vector<const double*>& rows, std::size_t d) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t x, std::size_t y) {
    return std::lexicographical_compare(rows[x], rows[x] + d, rows[y], rows[y] + d);
  };
  std::stable_sort(order.begin(), order.end(), less);
  DistinctRows out;
  out.id.assign(rows.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || less(order[k - 1], order[k])) {
      out.total.push_back(0);
      out.first.push_back(order[k]);
    }
    out.id[order[k]] = out.total.size() - 1;
    ++out.total.back();
  }
  return out;
}

}  // namespace

TestResult energy_distance(const RowMatrix& a_in, const RowMatrix& b_in,
                           std::size_t n_permutations, RngStream& rng) {
  if (a_in.cols != b_in.cols || a_in.cols == 0)
    throw PreconditionError("energy distance: column counts differ");
  if (a_in.rows() == 0 || b_in.rows() == 0)
    throw PreconditionError("energy distance: empty sample");
  if (n_permutations < 19)
    throw PreconditionError("energy distance: need at least 19 permutations");

  TestResult result;
  result.method = TestMethod::EnergyPermutation;
  result.dof = n_permutations;

  RowMatrix a = a_in, b = b_in;
  const std::size_t pooled = a.rows() + b.rows();
  if (pooled > kEnergyExactCap) {
    RngStream sub = rng.child(0);
    const double frac = static_cast<double>(kEnergyExactCap) / static_cast<double>(pooled);
    const auto keep_a = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(frac * a.rows())));
    const auto keep_b = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(frac * b.rows())));
    a = subsample_rows(a, keep_a, sub);
    b = subsample_rows(b, keep_b, sub);
    result.subsampled = true;
  }
  const std::size_t n = a.rows(), m = b.rows(), d = a.cols, total = n + m;
  result.n = n;
  result.m = m;

  std::vector<const double*> rows;
  rows.reserve(total);
  for (std::size_t i = 0; i < n; ++i) rows.push_back(a.row(i));
  for (std::size_t i = 0; i < m; ++i) rows.push_back(b.row(i));

  const DistinctRows distinct = distinct_rows(rows, d);
  const std::size_t k = distinct.total.size();
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);

  // labels[i] = true when pooled row i belongs to the first sample.
  std::vector<char> labels(total, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<long>(n), 1);

  std::function<double(const std::vector<char>&)> statistic;
  std::vector<double> dist;
  if (k <= kDistinctMatrixCap) {
    dist.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        dist[i * k + j] = dist[j * k + i] =
            row_distance(rows[distinct.first[i]], rows[distinct.first[j]], d);
    // E = -w' D w with w_i = a_i / n - b_i / m.
    statistic = [&, k](const std::vector<char>& lab) {
      std::vector<std::size_t> in_a(k, 0);
      for (std::size_t i = 0; i < total; ++i)
        if (lab[i]) ++in_a[distinct.id[i]];
      std::vector<double> w(k);
      for (std::size_t i = 0; i < k; ++i)
        w[i] = static_cast<double>(in_a[i]) / nn -
               static_cast<double>(distinct.total[i] - in_a[i]) / mm;
      double q = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (w[i] == 0.0) continue;
        double row = 0.0;
        const double* di = dist.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) row += di[j] * w[j];
        q += w[i] * row;
      }
      return -q;
    };
  } else {
    statistic = [&](const std::vector<char>& lab) {
      double cross = 0.0, wa = 0.0, wb = 0.0;
      for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i + 1; j < total; ++j) {
          const double dij = row_distance(rows[i], rows[j], d);
          if (lab[i] && lab[j]) wa += dij;
          else if (!lab[i] && !lab[j]) wb += dij;
          else cross += dij;
        }
      return 2.0 * cross / (nn * mm) - 2.0 * wa / (nn * nn) - 2.0 * wb / (mm * mm);
    };
  }

  const double observed = statistic(labels);
  const double tie_slack = 1e-12 * std::max(1.0, std::abs(observed));
  std::size_t at_least = 0;
  RngStream perm = rng.child(1);
  std::vector<char> shuffled = labels;
  for (std::size_t p = 0; p < n_permutations; ++p) {
    shuffle(shuffled, perm);
    if (statistic(shuffled) >= observed - tie_slack) ++at_least;
  }
  result.statistic = std::max(observed, 0.0);
  result.p_value = static_cast<double>(1 + at_least) /
                   static_cast<double>(n_permutations + 1);
  return result;
}

TestResult chisq_gof_counts(const std::vector<long long>& observed,
                            const std::vector<double>& expected_probs,
                            double min_expected) {
  if (observed.size() != expected_probs.size() || observed.empty())
    throw PreconditionError("chi-square: observed and probabilities differ in length");
  double psum = 0.0;
  long long total = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] < 0) throw PreconditionError("chi-square: negative count");
    if (!(expected_probs[i] >= 0)) throw PreconditionError("chi-square: negative probability");
    psum += expected_probs[i];
    total += observed[i];
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw PreconditionError("chi-square: probabilities must sum to 1");

  TestResult r;
  r.method = TestMethod::ChiSquare;
  r.n = static_cast<std::size_t>(total);
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected_probs[i] == 0.0 && observed[i] > 0) {
      r.statistic = std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
      return r;
    }
  }

  struct Bin {
    double expected;
    double observed;
  };
  std::vector<Bin> bins;
  for (std::size_t i = 0; i < observed.size(); ++i)
    bins.push_back({expected_probs[i] * static_cast<double>(total),
                    static_cast<double>(observed[i])});
  auto merge = [&](std::size_t into, std::size_t from) {
    bins[into].expected += bins[from].expected;
    bins[into].observed += bins[from].observed;
    bins.erase(bins.begin() + static_cast<long>(from));
  };
  while (bins.size() > 1 && bins.back().expected < min_expected)
    merge(bins.size() - 2, bins.size() - 1);
  while (bins.size() > 1 && bins.front().expected < min_expected) merge(1, 0);
  for (std::size_t i = 1; i + 1 < bins.size();) {
    if (bins[i].expected < min_expected) merge(i + 1, i);
    else ++i;
  }
  if (bins.size() < 2 || bins.back().expected < min_expected ||
      bins.front().expected < min_expected)
    throw PreconditionError("chi-square: all mass pooled into one bin");

  double stat = 0.0;
  for (const auto& b : bins) {
    const double diff = b.observed - b.expected;
    stat += diff * diff / b.expected;
  }
  r.statistic = stat;
  r.dof = bins.size() - 1;
  r.p_value = boost::math::gamma_q(0.5 * static_cast<double>(r.dof), 0.5 * stat);
  return r;
}

TestResult chisq_homogeneity(const std::vector<long long>& a,
                             const std::vector<long long>& b,
                             double min_expected) {
  if (a.empty() || b.empty())
    throw PreconditionError("chi-square homogeneity: empty sample");
  const long long lo = std::min(*std::min_element(a.begin(), a.end()),
                                *std::min_element(b.begin(), b.end()));
  const long long hi = std::max(*std::max_element(a.begin(), a.end()),
                                *std::max_element(b.begin(), b.end()));
  const auto width = static_cast<std::size_t>(hi - lo + 1);
  std::vector<double> ca(width, 0.0), cb(width, 0.0);
  for (long long x : a) ca[static_cast<std::size_t>(x - lo)] += 1.0;
  for (long long x : b) cb[static_cast<std::size_t>(x - lo)] += 1.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double n = na + nb;

  // Columns in value order; merge until every expected cell is large enough.
  struct Col {
    double a, b;
  };
  std::vector<Col> cols;
  for (std::size_t i = 0; i < width; ++i)
    if (ca[i] + cb[i] > 0) cols.push_back({ca[i], cb[i]});
  auto small = [&](const Col& c) {
    const double tot = c.a + c.b;
    return tot * std::min(na, nb) / n < min_expected;
  };
  auto merge = [&](std::size_t into, std::size_t from) {
    cols[into].a += cols[from].a;
    cols[into].b += cols[from].b;
    cols.erase(cols.begin() + static_cast<long>(from));
  };
  while (cols.size() > 1 && small(cols.back())) merge(cols.size() - 2, cols.size() - 1);
  while (cols.size() > 1 && small(cols.front())) merge(1, 0);
  for (std::size_t i = 1; i + 1 < cols.size();) {
    if (small(cols[i])) merge(i + 1, i);
    else ++i;
  }

  TestResult r;
  r.method = TestMethod::ChiSquareHomogeneity;
  r.n = a.size();
  r.m = b.size();
  if (cols.size() < 2) {
    // Both samples sit in one pooled cell: no evidence of difference.
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  double stat = 0.0;
  for (const auto& c : cols) {
    const double tot = c.a + c.b;
    const double ea = tot * na / n, eb = tot * nb / n;
    stat += (c.a - ea) * (c.a - ea) / ea + (c.b - eb) * (c.b - eb) / eb;
  }
  r.statistic = stat;
  r.dof = cols.size() - 1;
  r.p_value = boost::math::gamma_q(0.5 * static_cast<double>(r.dof), 0.5 * stat);
  return r;
}

}  // namespace rpi
