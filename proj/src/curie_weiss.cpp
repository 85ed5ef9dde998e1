#include "msl/curie_weiss.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace msl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
  double top = -kInf;
  for (double x : v) top = std::max(top, x);
  if (top == -kInf) return -kInf;
  double acc = 0.0;
  for (double x : v)
    if (x != -kInf) acc += std::exp(x - top);
  return top + std::log(acc);
}

void require_in_domain(double m, const char* what) {
  if (!(m >= -1.0 - 1e-12 && m <= 1.0 + 1e-12))
    throw InvalidArgument(std::string(what) + ": magnetization " + std::to_string(m) + " outside [-1, 1]");
}

// P(+ | rest) for a plus spin in a configuration with k plus spins.
double plus_conditional(const CWModel& model, int k) {
  return cw_conditional(model, 1, magnetization_level(model.n, k));
}

// Probability that a single Glauber step flips `spin` given the running sum.
double flip_probability(const CWModel& model, int spin, long long sum) {
  const double field = model.J / model.n * static_cast<double>(sum - spin) - model.h;
  return logistic(-2.0 * spin * field);
}

std::string run_provenance(const char* chain, const CWModel& model, const ChainRunConfig& config,
                           const CounterRng& rng) {
  std::ostringstream prov;
  prov << "chain=" << chain << " n=" << model.n << " J=" << model.J << " h=" << model.h
       << " steps=" << config.steps << " burn_in=" << config.burn_in << " thinning=" << config.thinning
       << " seed=" << rng.seed() << " stream=" << rng.stream();
  return prov.str();
}

void check_run_config(const ChainRunConfig& config) {
  if (config.thinning == 0) throw InvalidArgument("thinning must be at least 1");
  if (config.burn_in > config.steps) throw InvalidArgument("burn-in exceeds step count");
}

}  // namespace

void CWModel::validate() const {
  if (n < 2) throw InvalidArgument("Curie-Weiss model needs n >= 2");
  if (!std::isfinite(J) || !std::isfinite(h)) throw InvalidArgument("Curie-Weiss parameters must be finite");
}

int grid_index(int n, double m) {
  if (n <= 0) throw InvalidArgument("grid_index: n must be positive");
  const double k = (m + 1.0) * n / 2.0;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 || r < 0 || r > n)
    throw InvalidArgument("magnetization " + std::to_string(m) + " is not on the grid for n=" + std::to_string(n));
  return static_cast<int>(r);
}

double log_binomial(int n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double entropy(int n, double m) {
  return log_binomial(n, grid_index(n, m)) / n;
}

double entropy_continuous(int n, double m) {
  require_in_domain(m, "entropy");
  const double k = std::clamp(n * (1.0 + m) / 2.0, 0.0, static_cast<double>(n));
  return log_binomial(n, k) / n;
}

double free_energy(const CWModel& model, double m) {
  return -0.5 * model.J * m * m + model.h * m - entropy(model.n, m);
}

double free_energy_continuous(const CWModel& model, double m) {
  return -0.5 * model.J * m * m + model.h * m - entropy_continuous(model.n, m);
}

double free_energy_gradient(const CWModel& model, double m) {
  const double d = 2.0 / model.n;
  return (free_energy_continuous(model, m + d / 2) - free_energy_continuous(model, m - d / 2)) / d;
}

std::vector<double> positive_stationary_points(const CWModel& model) {
  model.validate();
  const double d = 2.0 / model.n;
  const double lo = 1e-9, hi = 1.0 - d / 2;
  const int points = std::max(4000, 8 * model.n);
  std::vector<double> roots;
  double x0 = lo, g0 = free_energy_gradient(model, x0);
  for (int i = 1; i <= points; ++i) {
    const double x1 = lo + (hi - lo) * i / points;
    const double g1 = free_energy_gradient(model, x1);
    if ((g0 < 0.0) != (g1 < 0.0) && g0 != 0.0) {
      double a = x0, b = x1, ga = g0;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double c = 0.5 * (a + b);
        const double gc = free_energy_gradient(model, c);
        if ((gc < 0.0) == (ga < 0.0)) {
          a = c;
          ga = gc;
        } else {
          b = c;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    g0 = g1;
  }
  return roots;
}

M0Result find_m0(const CWModel& model) {
  const auto roots = positive_stationary_points(model);
  const double probe = 1e-7;
  for (auto it = roots.rbegin(); it != roots.rend(); ++it) {
    const double r = *it;
    if (free_energy_gradient(model, r - probe) < 0.0 && free_energy_gradient(model, r + probe) > 0.0) {
      M0Result out;
      out.m0_continuous = r;
      out.k = std::clamp(static_cast<int>(std::lround((r + 1.0) * model.n / 2.0)), 0, model.n);
      out.m0 = magnetization_level(model.n, out.k);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "find_m0: no positive free-energy minimum for J=" << model.J << " h=" << model.h << " n=" << model.n;
  throw InvalidArgument(msg.str());
}

QuadraticAnsatz quadratic_ansatz(const CWModel& model, double m0) {
  model.validate();
  const int n = model.n;
  const double d = 2.0 / n;
  if (m0 - d < -1.0 || m0 + d > 1.0) throw InvalidArgument("quadratic_ansatz: m0 too close to the boundary");
  const double s2 = (entropy_continuous(n, m0 + d) - 2.0 * entropy_continuous(n, m0) + entropy_continuous(n, m0 - d)) / (d * d);
  const double s1 = (entropy_continuous(n, m0 + d / 2) - entropy_continuous(n, m0 - d / 2)) / d;
  QuadraticAnsatz out{-model.J - s2, -model.J * m0 + model.h - s1};
  if (!(out.a > 0.0)) {
    std::ostringstream msg;
    msg << "quadratic_ansatz: a = " << out.a << " <= 0, m0 = " << m0 << " is not a free-energy minimum";
    throw InvalidArgument(msg.str());
  }
  return out;
}

MagnetizationPotential exact_phi(const CWModel& model) {
  model.validate();
  MagnetizationPotential phi{model.n, std::vector<double>(static_cast<std::size_t>(model.n) + 1), "exact", 0.0};
  for (int k = 0; k <= model.n; ++k)
    phi.values[static_cast<std::size_t>(k)] = free_energy(model, magnetization_level(model.n, k));
  return phi;
}

MagnetizationPotential taylor_phi(const CWModel& model, double m0, int K) {
  model.validate();
  if (K < 2) throw InvalidArgument("taylor_phi: K must be at least 2");
  if (K > 4) throw InvalidArgument("taylor_phi: K above 4 is not supported");
  const double d = 2.0 / model.n;
  if (m0 - 2 * d < -1.0 || m0 + 2 * d > 1.0) throw InvalidArgument("taylor_phi: m0 too close to the boundary");
  auto P = [&](double m) { return free_energy_continuous(model, m); };
  const double p0 = P(m0), p1 = P(m0 + d), m1 = P(m0 - d), p2 = P(m0 + 2 * d), m2 = P(m0 - 2 * d);
  const double d2 = (p1 - 2 * p0 + m1) / (d * d);
  const double d3 = (p2 - 2 * p1 + 2 * m1 - m2) / (2 * d * d * d);
  const double d4 = (p2 - 4 * p1 + 6 * p0 - 4 * m1 + m2) / (d * d * d * d);

  MagnetizationPotential phi{model.n, std::vector<double>(static_cast<std::size_t>(model.n) + 1),
                             "taylor" + std::to_string(K), static_cast<double>(K)};
  for (int k = 0; k <= model.n; ++k) {
    const double x = magnetization_level(model.n, k) - m0;
    double v = d2 * x * x / 2;
    if (K >= 3) v += d3 * x * x * x / 6;
    if (K >= 4) v += d4 * x * x * x * x / 24;
    phi.values[static_cast<std::size_t>(k)] = v;
  }
  return phi;
}

MagnetizationPotential truncated_phi(const CWModel& model, double m0, double a) {
  model.validate();
  if (!(a > 0.0)) throw InvalidArgument("truncated_phi: a must be positive");
  const double width = m0 / (4.0 * std::sqrt(a));
  MagnetizationPotential phi{model.n, std::vector<double>(static_cast<std::size_t>(model.n) + 1, kInf), "truncated",
                             width};
  int inside = 0;
  for (int k = 0; k <= model.n; ++k) {
    const double m = magnetization_level(model.n, k);
    if (std::abs(m - m0) < width) {
      phi.values[static_cast<std::size_t>(k)] = free_energy(model, m);
      ++inside;
    }
  }
  if (inside < 3)
    throw InvalidArgument("truncated_phi: window of half-width " + std::to_string(width) + " holds " +
                          std::to_string(inside) + " grid levels, need at least 3");
  return phi;
}

// MagnetizationDistribution --------------------------------------------------

MagnetizationDistribution::MagnetizationDistribution(int n, std::vector<double> log_weights)
    : n_(n), log_weights_(std::move(log_weights)) {
  if (n <= 0) throw InvalidArgument("MagnetizationDistribution: n must be positive");
  if (log_weights_.size() != static_cast<std::size_t>(n) + 1)
    throw InvalidArgument("MagnetizationDistribution: need n+1 class weights");
  for (double x : log_weights_)
    if (std::isnan(x) || x == kInf) throw InvalidArgument("MagnetizationDistribution: invalid class weight");
  log_normalizer_ = log_sum_exp(log_weights_);
  if (log_normalizer_ == -kInf) throw InvalidArgument("MagnetizationDistribution: all class weights are zero");
}

double MagnetizationDistribution::class_probability(int k) const {
  const double lw = log_weights_.at(static_cast<std::size_t>(k));
  return lw == -kInf ? 0.0 : std::exp(lw - log_normalizer_);
}

std::vector<double> MagnetizationDistribution::class_probabilities() const {
  std::vector<double> p(log_weights_.size());
  for (int k = 0; k <= n_; ++k) p[static_cast<std::size_t>(k)] = class_probability(k);
  return p;
}

double MagnetizationDistribution::configuration_probability(int k) const {
  const double lw = log_weights_.at(static_cast<std::size_t>(k));
  return lw == -kInf ? 0.0 : std::exp(lw - log_normalizer_ - log_binomial(n_, k));
}

DenseDistribution MagnetizationDistribution::to_dense() const {
  require_dense(n_);
  std::vector<double> probs(num_states(n_));
  std::vector<double> per_class(static_cast<std::size_t>(n_) + 1);
  for (int k = 0; k <= n_; ++k) per_class[static_cast<std::size_t>(k)] = configuration_probability(k);
  for (std::size_t s = 0; s < probs.size(); ++s) probs[s] = per_class[static_cast<std::size_t>(std::popcount(s))];
  return DenseDistribution(n_, std::move(probs), true);
}

MagnetizationDistribution metastable_distribution(const CWModel& model, const MagnetizationPotential& phi) {
  model.validate();
  if (phi.n != model.n || phi.values.size() != static_cast<std::size_t>(model.n) + 1)
    throw InvalidArgument("metastable_distribution: potential does not match the model size");
  std::vector<double> lw(phi.values.size());
  bool any = false;
  for (std::size_t k = 0; k < lw.size(); ++k) {
    const double v = phi.values[k];
    if (std::isnan(v)) throw InvalidArgument("metastable_distribution: NaN in potential");
    lw[k] = v == kInf ? -kInf : -model.n * v;
    any = any || v != kInf;
  }
  if (!any) throw InvalidArgument("metastable_distribution: potential is infinite everywhere");
  return MagnetizationDistribution(model.n, std::move(lw));
}

double cw_conditional(const CWModel& model, int sigma_u, double m) {
  if (sigma_u != 1 && sigma_u != -1) throw InvalidArgument("cw_conditional: spin must be +1 or -1");
  grid_index(model.n, m);
  return 0.5 * (1.0 + std::tanh(sigma_u * (model.J * m - model.h) - model.J / model.n));
}

double strong_eta_magnetization(const CWModel& model, const MagnetizationDistribution& nu) {
  model.validate();
  if (nu.n() != model.n) throw InvalidArgument("strong_eta_magnetization: size mismatch");
  const int n = model.n;
  const auto w = nu.class_probabilities();
  double total = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double p = plus_conditional(model, k);
    const double down = (1.0 - p) * k / n * w[static_cast<std::size_t>(k)];
    const double up = p * (n - k + 1.0) / n * w[static_cast<std::size_t>(k - 1)];
    total += std::abs(down - up);
  }
  return total;
}

double weak_eta_magnetization(const CWModel& model, const MagnetizationDistribution& nu) {
  model.validate();
  if (nu.n() != model.n) throw InvalidArgument("weak_eta_magnetization: size mismatch");
  const int n = model.n;
  const auto w = nu.class_probabilities();
  // Net flow across the edge (k-1, k), positive towards k.
  std::vector<double> net(static_cast<std::size_t>(n) + 2, 0.0);
  for (int k = 1; k <= n; ++k) {
    const double p = plus_conditional(model, k);
    net[static_cast<std::size_t>(k)] =
        p * (n - k + 1.0) / n * w[static_cast<std::size_t>(k - 1)] - (1.0 - p) * k / n * w[static_cast<std::size_t>(k)];
  }
  double total = 0.0;
  for (int k = 0; k <= n; ++k) total += std::abs(net[static_cast<std::size_t>(k)] - net[static_cast<std::size_t>(k) + 1]);
  return 0.5 * total;
}

// Sampling -------------------------------------------------------------------

SampleSet exact_magnetization_sampler(const MagnetizationDistribution& nu, std::size_t count, CounterRng& rng) {
  const int n = nu.n();
  auto cdf = nu.class_probabilities();
  std::partial_sum(cdf.begin(), cdf.end(), cdf.begin());
  SampleSet out;
  out.n = n;
  out.seed = rng.seed();
  out.chain = "exact-cw";
  out.provenance = "chain=exact-cw n=" + std::to_string(n) + " seed=" + std::to_string(rng.seed()) +
                   " stream=" + std::to_string(rng.stream());
  out.data.reserve(count * static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::vector<std::int8_t> row(static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < count; ++t) {
    const double r = rng.uniform() * cdf.back();
    auto k = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    if (k > n) {
      k = n;
      while (k > 0 && nu.class_probability(k) == 0.0) --k;
    }
    std::iota(order.begin(), order.end(), 0);
    std::fill(row.begin(), row.end(), std::int8_t{-1});
    for (int i = 0; i < k; ++i) {
      const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      row[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    }
    out.push_back(row);
  }
  return out;
}

SampleSet cw_glauber_fast(const CWModel& model, const SpinConfiguration& start, const ChainRunConfig& config,
                          CounterRng& rng) {
  model.validate();
  check_run_config(config);
  if (start.size() != model.n) throw InvalidArgument("cw_glauber_fast: start configuration has wrong length");
  const int n = model.n;
  SampleSet out;
  out.n = n;
  out.seed = rng.seed();
  out.chain = "glauber";
  out.provenance = run_provenance("glauber", model, config, rng);
  out.data.reserve(static_cast<std::size_t>((config.steps - config.burn_in) / config.thinning) *
                   static_cast<std::size_t>(n));

  std::vector<std::int8_t> sigma(start.spins().begin(), start.spins().end());
  long long sum = start.total();
  for (std::uint64_t t = 1; t <= config.steps; ++t) {
    const auto u = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)));
    const int s = sigma[u];
    if (rng.uniform() < flip_probability(model, s, sum)) {
      sigma[u] = static_cast<std::int8_t>(-s);
      sum -= 2 * s;
    }
    if (t > config.burn_in && (t - config.burn_in) % config.thinning == 0) out.push_back(sigma);
  }
  return out;
}

MagnetizationTrace cw_glauber_counts(const CWModel& model, int start_plus, const ChainRunConfig& config,
                                     CounterRng& rng) {
  model.validate();
  check_run_config(config);
  const int n = model.n;
  if (start_plus < 0 || start_plus > n) throw InvalidArgument("cw_glauber_counts: start count out of range");
  MagnetizationTrace trace;
  trace.n = n;
  trace.min_plus = trace.max_plus = start_plus;
  trace.plus_counts.reserve(static_cast<std::size_t>((config.steps - config.burn_in) / config.thinning));

  // Flip probabilities depend only on (spin, k); tabulate them once.
  std::vector<double> flip_plus(static_cast<std::size_t>(n) + 1), flip_minus(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const long long sum = 2LL * k - n;
    flip_plus[static_cast<std::size_t>(k)] = flip_probability(model, 1, sum);
    flip_minus[static_cast<std::size_t>(k)] = flip_probability(model, -1, sum);
  }
  int k = start_plus;
  for (std::uint64_t t = 1; t <= config.steps; ++t) {
    const bool plus = rng.below(static_cast<std::uint64_t>(n)) < static_cast<std::uint64_t>(k);
    const double p = plus ? flip_plus[static_cast<std::size_t>(k)] : flip_minus[static_cast<std::size_t>(k)];
    if (rng.uniform() < p) {
      k += plus ? -1 : 1;
      trace.min_plus = std::min(trace.min_plus, k);
      trace.max_plus = std::max(trace.max_plus, k);
    }
    if (t > config.burn_in && (t - config.burn_in) % config.thinning == 0) trace.plus_counts.push_back(k);
  }
  return trace;
}

std::vector<double> magnetization_histogram(const SampleSet& samples) {
  std::vector<double> hist(static_cast<std::size_t>(samples.n) + 1, 0.0);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    int k = 0;
    for (auto x : samples.row(t)) k += x > 0;
    hist[static_cast<std::size_t>(k)] += 1.0;
  }
  return hist;
}

std::vector<double> magnetization_histogram(const MagnetizationTrace& trace) {
  std::vector<double> hist(static_cast<std::size_t>(trace.n) + 1, 0.0);
  for (int k : trace.plus_counts) hist[static_cast<std::size_t>(k)] += 1.0;
  return hist;
}

}  // namespace msl
