#include "msl/chains.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "msl/parallel.hpp"

namespace msl {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InvalidArgument(std::string(what) + ": dimension mismatch");
}

double metropolis_flip(const IsingModel& model, StateIndex s, int u) {
  const double delta = -2.0 * spin_of(s, u) * model.local_field(s, u);
  return delta >= 0.0 ? 1.0 : std::exp(delta);
}

// Deflated, shifted power iteration on a symmetric operator with top eigenvector `top`.
template <typename Apply>
double deflated_power_gap(std::size_t states, const std::vector<double>& top, Apply&& apply, double tol,
                          std::size_t max_iters) {
  if (states < 2) throw InvalidArgument("spectral_gap: need at least two states");
  CounterRng rng(0x5eed, states);
  std::vector<double> v(states), w(states);
  for (auto& x : v) x = rng.uniform() - 0.5;

  auto deflate_normalize = [&](std::vector<double>& x) {
    const double proj = std::inner_product(x.begin(), x.end(), top.begin(), 0.0);
    for (std::size_t i = 0; i < states; ++i) x[i] -= proj * top[i];
    const double norm = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    if (norm == 0.0) throw InvalidArgument("spectral_gap: degenerate start vector");
    for (auto& xi : x) xi /= norm;
  };
  deflate_normalize(v);

  const double res_tol = std::sqrt(tol);
  double rho = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    apply(v, w);
    for (std::size_t i = 0; i < states; ++i) w[i] = 0.5 * (v[i] + w[i]);
    rho = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
    double res = 0.0;
    for (std::size_t i = 0; i < states; ++i) {
      const double r = w[i] - rho * v[i];
      res += r * r;
    }
    if (std::sqrt(res) < res_tol) break;
    deflate_normalize(w);
    std::swap(v, w);
  }
  // rho approximates (1 + lambda_2) / 2.
  return 2.0 * (1.0 - rho);
}

std::vector<double> sqrt_vector(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::sqrt(p[i]);
  return out;
}

}  // namespace

std::string to_string(KernelKind kind) { return kind == KernelKind::glauber ? "glauber" : "metropolis"; }

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "glauber") return KernelKind::glauber;
  if (name == "metropolis") return KernelKind::metropolis;
  throw InvalidArgument("unknown chain '" + name + "'");
}

// SpinKernel -----------------------------------------------------------------

SpinKernel::SpinKernel(int n, KernelKind kind, std::vector<double> flip, double omega_p)
    : n_(n), kind_(kind), flip_(std::move(flip)), omega_p_(omega_p) {
  require_dense(n);
  const std::size_t states = num_states();
  require_same_size(flip_.size(), states * static_cast<std::size_t>(n), "SpinKernel");
  stay_.resize(states);
  for (std::size_t s = 0; s < states; ++s) {
    double out = 0.0;
    for (int u = 0; u < n; ++u) out += flip_[s * static_cast<std::size_t>(n) + static_cast<std::size_t>(u)];
    if (out > 1.0 + 1e-12) throw InvalidArgument("SpinKernel: row mass exceeds 1");
    stay_[s] = std::max(0.0, 1.0 - out);
  }
}

double SpinKernel::transition(StateIndex from, StateIndex to) const {
  if (from == to) return stay(from);
  const StateIndex diff = from ^ to;
  if (std::popcount(diff) != 1) return 0.0;
  return flip(from, std::countr_zero(diff));
}

SpinKernel glauber_kernel(const IsingModel& model) {
  const int n = model.n();
  require_dense(n);
  const std::size_t states = num_states(n);
  std::vector<double> flip(states * static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(states); ++si) {
    const auto s = static_cast<StateIndex>(si);
    for (int u = 0; u < n; ++u)
      flip[s * static_cast<std::size_t>(n) + static_cast<std::size_t>(u)] =
          conditional(model, flip_bit(s, u), u) / n;
  }
  return SpinKernel(n, KernelKind::glauber, std::move(flip), 1.0 / n);
}

SpinKernel metropolis_kernel(const IsingModel& model) {
  const int n = model.n();
  require_dense(n);
  const std::size_t states = num_states(n);
  std::vector<double> flip(states * static_cast<std::size_t>(n));
  double omega = 1.0;
#pragma omp parallel for schedule(static) reduction(min : omega)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(states); ++si) {
    const auto s = static_cast<StateIndex>(si);
    for (int u = 0; u < n; ++u) {
      const double p = metropolis_flip(model, s, u) / n;
      flip[s * static_cast<std::size_t>(n) + static_cast<std::size_t>(u)] = p;
      omega = std::min(omega, p / conditional(model, flip_bit(s, u), u));
    }
  }
  if (n == 0) omega = 1.0;
  return SpinKernel(n, KernelKind::metropolis, std::move(flip), omega);
}

SpinKernel make_kernel(const IsingModel& model, KernelKind kind) {
  return kind == KernelKind::glauber ? glauber_kernel(model) : metropolis_kernel(model);
}

double analytic_omega_p(const IsingModel& model, KernelKind kind) {
  const double n = model.n();
  if (kind == KernelKind::glauber) return 1.0 / n;
  return (1.0 + std::exp(-2.0 * model.gamma())) / n;
}

// GenericChain ---------------------------------------------------------------

GenericChain::GenericChain(std::size_t states, std::vector<double> matrix, std::vector<double> stationary)
    : states_(states), matrix_(std::move(matrix)), stationary_(std::move(stationary)) {
  if (states == 0) throw InvalidArgument("GenericChain: empty state space");
  require_same_size(matrix_.size(), states * states, "GenericChain matrix");
  require_same_size(stationary_.size(), states, "GenericChain stationary");
  for (std::size_t i = 0; i < states; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      if (matrix_[i * states + j] < 0.0) throw InvalidArgument("GenericChain: negative transition probability");
      row += matrix_[i * states + j];
    }
    if (std::abs(row - 1.0) > 1e-12) throw InvalidArgument("GenericChain: rows must sum to 1");
  }
  const double total = std::accumulate(stationary_.begin(), stationary_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("GenericChain: stationary vector must sum to 1");
  for (std::size_t j = 0; j < states; ++j) {
    double flow = 0.0;
    for (std::size_t i = 0; i < states; ++i) flow += stationary_[i] * matrix_[i * states + j];
    if (std::abs(flow - stationary_[j]) > 1e-10) throw InvalidArgument("GenericChain: stationary vector is not invariant");
  }
}

GenericChain GenericChain::from_kernel(const SpinKernel& kernel, const DenseDistribution& mu) {
  if (kernel.n() > kMaxMatrixSpins)
    throw InvalidArgument("GenericChain::from_kernel: full matrices are capped at n=" + std::to_string(kMaxMatrixSpins));
  const std::size_t states = kernel.num_states();
  require_same_size(mu.size(), states, "GenericChain::from_kernel");
  std::vector<double> matrix(states * states, 0.0);
  for (std::size_t s = 0; s < states; ++s) {
    matrix[s * states + s] = kernel.stay(s);
    for (int u = 0; u < kernel.n(); ++u) matrix[s * states + flip_bit(s, u)] = kernel.flip(s, u);
  }
  return GenericChain(states, std::move(matrix), std::vector<double>(mu.probs().begin(), mu.probs().end()));
}

GenericChain make_generic_chain(std::size_t states, std::vector<double> matrix) {
  require_same_size(matrix.size(), states * states, "make_generic_chain");
  std::vector<double> pi(states, 1.0 / static_cast<double>(states)), next(states);
  for (int it = 0; it < 1000000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < states; ++i)
      for (std::size_t j = 0; j < states; ++j) next[j] += pi[i] * matrix[i * states + j];
    double diff = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      next[j] = 0.5 * (next[j] + pi[j]);
      diff += std::abs(next[j] - pi[j]);
    }
    std::swap(pi, next);
    if (diff < 1e-15) break;
  }
  const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (auto& p : pi) p /= total;
  return GenericChain(states, std::move(matrix), std::move(pi));
}

GenericChain random_reversible_chain(std::size_t states, double edge_probability, CounterRng& rng) {
  if (states < 2) throw InvalidArgument("random_reversible_chain: need at least two states");
  std::vector<double> target(states);
  for (auto& t : target) t = std::exp(2.0 * rng.uniform());
  const double total = std::accumulate(target.begin(), target.end(), 0.0);
  for (auto& t : target) t /= total;

  std::vector<char> adj(states * states, 0);
  for (std::size_t i = 0; i < states; ++i) {
    const std::size_t j = (i + 1) % states;
    if (i != j) adj[i * states + j] = adj[j * states + i] = 1;
  }
  for (std::size_t i = 0; i < states; ++i)
    for (std::size_t j = i + 1; j < states; ++j)
      if (rng.bernoulli(edge_probability)) adj[i * states + j] = adj[j * states + i] = 1;

  std::size_t max_degree = 0;
  for (std::size_t i = 0; i < states; ++i) {
    std::size_t d = 0;
    for (std::size_t j = 0; j < states; ++j) d += adj[i * states + j];
    max_degree = std::max(max_degree, d);
  }
  const double q = 1.0 / static_cast<double>(max_degree + 1);
  std::vector<double> matrix(states * states, 0.0);
  for (std::size_t i = 0; i < states; ++i) {
    double out = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      if (!adj[i * states + j]) continue;
      const double p = q * std::min(1.0, target[j] / target[i]);
      matrix[i * states + j] = p;
      out += p;
    }
    matrix[i * states + i] = 1.0 - out;
  }
  return GenericChain(states, std::move(matrix), std::move(target));
}

GenericChain cycle_walk(std::size_t states) {
  if (states < 3) throw InvalidArgument("cycle_walk: need at least three states");
  std::vector<double> matrix(states * states, 0.0);
  for (std::size_t i = 0; i < states; ++i) {
    matrix[i * states + (i + 1) % states] = 0.5;
    matrix[i * states + (i + states - 1) % states] = 0.5;
  }
  return GenericChain(states, std::move(matrix), std::vector<double>(states, 1.0 / static_cast<double>(states)));
}

// Metastability --------------------------------------------------------------

std::vector<double> step_distribution(std::span<const double> nu, const SpinKernel& kernel) {
  const std::size_t states = kernel.num_states();
  require_same_size(nu.size(), states, "step_distribution");
  const int n = kernel.n();
  std::vector<double> out(states);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ti = 0; ti < static_cast<std::ptrdiff_t>(states); ++ti) {
    const auto t = static_cast<StateIndex>(ti);
    double v = nu[t] * kernel.stay(t);
    for (int u = 0; u < n; ++u) {
      const StateIndex s = flip_bit(t, u);
      v += nu[s] * kernel.flip(s, u);
    }
    out[t] = v;
  }
  return out;
}

double weak_metastability(const DenseDistribution& nu, const SpinKernel& kernel) {
  const auto next = step_distribution(nu.probs(), kernel);
  return 0.5 * parallel_sum(next.size(), [&](std::size_t t) { return std::abs(next[t] - nu[t]); });
}

double l1_displacement(std::span<const double> nu, const GenericChain& chain) {
  const std::size_t L = chain.states();
  require_same_size(nu.size(), L, "l1_displacement");
  double total = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < L; ++i) v += nu[i] * chain(i, j);
    total += std::abs(v - nu[j]);
  }
  return total;
}

double weak_metastability(std::span<const double> nu, const GenericChain& chain) {
  return 0.5 * l1_displacement(nu, chain);
}

double strong_metastability(const DenseDistribution& nu, const SpinKernel& kernel) {
  require_same_size(nu.size(), kernel.num_states(), "strong_metastability");
  const int n = kernel.n();
  // Each unordered single-flip edge appears twice in the double sum; the 1/2 cancels.
  return parallel_sum(nu.size(), [&](std::size_t s) {
    double acc = 0.0;
    for (int u = 0; u < n; ++u) {
      const StateIndex t = flip_bit(s, u);
      if (t < s) continue;
      acc += std::abs(kernel.flip(s, u) * nu[s] - kernel.flip(t, u) * nu[t]);
    }
    return acc;
  });
}

double strong_metastability(std::span<const double> nu, const GenericChain& chain) {
  const std::size_t L = chain.states();
  require_same_size(nu.size(), L, "strong_metastability");
  double total = 0.0;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) total += std::abs(chain(j, i) * nu[j] - chain(i, j) * nu[i]);
  return total;
}

double detailed_balance_residual(const SpinKernel& kernel, const DenseDistribution& mu) {
  require_same_size(mu.size(), kernel.num_states(), "detailed_balance_residual");
  const int n = kernel.n();
  double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(mu.size()); ++si) {
    const auto s = static_cast<StateIndex>(si);
    for (int u = 0; u < n; ++u) {
      const StateIndex t = flip_bit(s, u);
      worst = std::max(worst, std::abs(kernel.flip(s, u) * mu[s] - kernel.flip(t, u) * mu[t]));
    }
  }
  return worst;
}

double detailed_balance_residual(const GenericChain& chain) {
  const auto mu = chain.stationary();
  double worst = 0.0;
  for (std::size_t i = 0; i < chain.states(); ++i)
    for (std::size_t j = i + 1; j < chain.states(); ++j)
      worst = std::max(worst, std::abs(chain(i, j) * mu[i] - chain(j, i) * mu[j]));
  return worst;
}

// Conductance ----------------------------------------------------------------

namespace {

void check_proper_subset(const StateSubset& a, std::size_t states) {
  require_same_size(a.states(), states, "conductance");
  const std::size_t c = a.count();
  if (c == 0 || c == states) throw InvalidArgument("conductance: subset must be nonempty and proper");
}

}  // namespace

double conductance(const SpinKernel& kernel, const DenseDistribution& mu, const StateSubset& a) {
  const std::size_t states = kernel.num_states();
  require_same_size(mu.size(), states, "conductance");
  check_proper_subset(a, states);
  const int n = kernel.n();
  const double flow = parallel_sum(states, [&](std::size_t s) {
    if (!a.contains(s)) return 0.0;
    double out = 0.0;
    for (int u = 0; u < n; ++u)
      if (!a.contains(flip_bit(s, u))) out += kernel.flip(s, u);
    return out * mu[s];
  });
  const double m = mass(mu, a);
  if (m <= 0.0) throw InvalidArgument("conductance: subset has zero mass");
  return flow / m;
}

double conductance(const GenericChain& chain, const StateSubset& a) {
  const std::size_t L = chain.states();
  check_proper_subset(a, L);
  const auto mu = chain.stationary();
  double flow = 0.0, m = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    if (!a.contains(j)) continue;
    m += mu[j];
    for (std::size_t i = 0; i < L; ++i)
      if (!a.contains(i)) flow += chain(j, i) * mu[j];
  }
  if (m <= 0.0) throw InvalidArgument("conductance: subset has zero mass");
  return flow / m;
}

ChainConductance chain_conductance(const GenericChain& chain) {
  const std::size_t L = chain.states();
  if (L > kMaxConductanceStates)
    throw InvalidArgument("chain_conductance: " + std::to_string(L) + " states exceeds the enumeration cap of " +
                          std::to_string(kMaxConductanceStates));
  if (L < 2) throw InvalidArgument("chain_conductance: need at least two states");
  const auto mu = chain.stationary();
  std::vector<double> q(L * L);
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t i = 0; i < L; ++i) q[j * L + i] = mu[j] * chain(j, i);

  // Walk subsets in Gray-code order so each step toggles one state.
  std::vector<char> in(L, 0);
  double flow = 0.0, m = 0.0;
  ChainConductance best{std::numeric_limits<double>::infinity(), 0};
  const std::uint64_t total = std::uint64_t{1} << L;
  for (std::uint64_t g = 1; g < total; ++g) {
    const auto k = static_cast<std::size_t>(std::countr_zero(g));
    if (!in[k]) {
      for (std::size_t i = 0; i < L; ++i) {
        if (i == k) continue;
        if (in[i]) flow -= q[i * L + k];
        else flow += q[k * L + i];
      }
      in[k] = 1;
      m += mu[k];
    } else {
      in[k] = 0;
      m -= mu[k];
      for (std::size_t i = 0; i < L; ++i) {
        if (i == k) continue;
        if (in[i]) flow += q[i * L + k];
        else flow -= q[k * L + i];
      }
    }
    if (m < 0.5 && m > 0.0) {
      const double value = flow / m;
      if (value < best.value) {
        std::uint64_t mask = 0;
        for (std::size_t i = 0; i < L; ++i)
          if (in[i]) mask |= std::uint64_t{1} << i;
        best = {value, mask};
      }
    }
  }
  if (best.argmin_mask == 0) throw InvalidArgument("chain_conductance: no subset with mass below 1/2");
  best.value = conductance(chain, StateSubset::from_mask(L, best.argmin_mask));
  return best;
}

// Spectral gap ---------------------------------------------------------------

double spectral_gap(const GenericChain& chain, double tol, std::size_t max_iters) {
  if (detailed_balance_residual(chain) > 1e-9) throw InvalidArgument("spectral_gap: chain is not reversible");
  const std::size_t L = chain.states();
  const auto mu = chain.stationary();
  for (double p : mu)
    if (p <= 0.0) throw InvalidArgument("spectral_gap: stationary distribution must be positive");
  const auto root = sqrt_vector(mu);
  return deflated_power_gap(
      L, root,
      [&](const std::vector<double>& v, std::vector<double>& w) {
        for (std::size_t i = 0; i < L; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < L; ++j) acc += root[i] * chain(i, j) / root[j] * v[j];
          w[i] = acc;
        }
      },
      tol, max_iters);
}

double spectral_gap(const SpinKernel& kernel, const DenseDistribution& mu, double tol, std::size_t max_iters) {
  if (detailed_balance_residual(kernel, mu) > 1e-9) throw InvalidArgument("spectral_gap: kernel is not reversible");
  const std::size_t states = kernel.num_states();
  for (double p : mu.probs())
    if (p <= 0.0) throw InvalidArgument("spectral_gap: stationary distribution must be positive");
  const auto root = sqrt_vector(mu.probs());
  const int n = kernel.n();
  return deflated_power_gap(
      states, root,
      [&](const std::vector<double>& v, std::vector<double>& w) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(states); ++si) {
          const auto s = static_cast<StateIndex>(si);
          double acc = kernel.stay(s) * v[s];
          for (int u = 0; u < n; ++u) {
            const StateIndex t = flip_bit(s, u);
            acc += root[s] * kernel.flip(s, u) / root[t] * v[t];
          }
          w[s] = acc;
        }
      },
      tol, max_iters);
}

// Constructions --------------------------------------------------------------

DenseDistribution restricted_distribution(const DenseDistribution& mu, const StateSubset& a) {
  require_same_size(a.states(), mu.size(), "restricted_distribution");
  const double m = mass(mu, a);
  if (m <= 0.0) throw InvalidArgument("restricted_distribution: subset has zero mass");
  std::vector<double> probs(mu.size(), 0.0);
  for (std::size_t s = 0; s < mu.size(); ++s)
    if (a.contains(s)) probs[s] = mu[s] / m;
  return DenseDistribution(mu.n(), std::move(probs), true);
}

std::uint64_t mixing_lower_bound(double tv_gap, double eta, double epsilon) {
  if (epsilon >= tv_gap) return 0;
  if (!(eta > 0.0)) throw InvalidArgument("mixing_lower_bound: eta must be positive");
  return static_cast<std::uint64_t>(std::ceil((tv_gap - epsilon) / eta));
}

TentExample tent_example(std::size_t L) {
  if (L < 4 || L % 2 != 0) throw InvalidArgument("tent_example: L must be even and at least 4");
  auto chain = cycle_walk(L);
  std::vector<double> nu(L);
  const double l = static_cast<double>(L);
  for (std::size_t k = 1; k <= L; ++k) {
    const double i = static_cast<double>(k);
    nu[k - 1] = (k <= L / 2) ? i * l : l * l - i * l;
  }
  const double z = std::accumulate(nu.begin(), nu.end(), 0.0);
  for (auto& p : nu) p /= z;
  const double weak = weak_metastability(nu, chain);
  const double strong = strong_metastability(nu, chain);
  return TentExample{std::move(chain), std::move(nu), z, weak, strong};
}

// Sampling -------------------------------------------------------------------

void SampleSet::push_back(std::span<const std::int8_t> sigma) {
  if (static_cast<int>(sigma.size()) != n) throw InvalidArgument("SampleSet: row length mismatch");
  data.insert(data.end(), sigma.begin(), sigma.end());
}

void SampleSet::validate() const {
  if (n <= 0) throw InvalidArgument("SampleSet: n must be positive");
  if (data.size() % static_cast<std::size_t>(n) != 0) throw InvalidArgument("SampleSet: ragged data");
  for (auto x : data)
    if (x != 1 && x != -1) throw InvalidArgument("SampleSet: entries must be +1 or -1");
}

ImplicitSampler::ImplicitSampler(IsingModel model, KernelKind kind)
    : model_(std::move(model)), kind_(kind), omega_p_(analytic_omega_p(model_, kind)) {
  if (model_.n() <= 0) throw InvalidArgument("ImplicitSampler: empty model");
}

bool ImplicitSampler::step(std::span<std::int8_t> sigma, CounterRng& rng) const {
  const int n = model_.n();
  const auto u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  const double x = -2.0 * sigma[static_cast<std::size_t>(u)] * model_.local_field(sigma, u);
  const double p = kind_ == KernelKind::glauber ? logistic(x) : (x >= 0.0 ? 1.0 : std::exp(x));
  if (rng.uniform() < p) {
    sigma[static_cast<std::size_t>(u)] = static_cast<std::int8_t>(-sigma[static_cast<std::size_t>(u)]);
    return true;
  }
  return false;
}

SampleSet run_chain(const ImplicitSampler& sampler, const SpinConfiguration& start, const ChainRunConfig& config,
                    CounterRng& rng) {
  const int n = sampler.model().n();
  if (start.size() != n) throw InvalidArgument("run_chain: start configuration has wrong length");
  if (config.thinning == 0) throw InvalidArgument("run_chain: thinning must be at least 1");
  if (config.burn_in > config.steps) throw InvalidArgument("run_chain: burn-in exceeds step count");

  SampleSet out;
  out.n = n;
  out.seed = rng.seed();
  out.chain = to_string(sampler.kind());
  std::ostringstream prov;
  prov << "chain=" << out.chain << " steps=" << config.steps << " burn_in=" << config.burn_in
       << " thinning=" << config.thinning << " seed=" << rng.seed() << " stream=" << rng.stream()
       << " omega_p=" << sampler.omega_p() << (sampler.kind() == KernelKind::metropolis ? " (analytic)" : "");
  out.provenance = prov.str();
  out.data.reserve(static_cast<std::size_t>((config.steps - config.burn_in) / config.thinning) *
                   static_cast<std::size_t>(n));

  std::vector<std::int8_t> sigma(start.spins().begin(), start.spins().end());
  for (std::uint64_t t = 1; t <= config.steps; ++t) {
    sampler.step(sigma, rng);
    if (t > config.burn_in && (t - config.burn_in) % config.thinning == 0) out.push_back(sigma);
  }
  return out;
}

SampleSet sample_dense(const DenseDistribution& nu, std::size_t count, CounterRng& rng) {
  const int n = nu.n();
  std::vector<double> cdf(nu.size());
  std::partial_sum(nu.probs().begin(), nu.probs().end(), cdf.begin());
  SampleSet out;
  out.n = n;
  out.seed = rng.seed();
  out.chain = "exact";
  out.provenance = "chain=exact seed=" + std::to_string(rng.seed()) + " stream=" + std::to_string(rng.stream());
  out.data.reserve(count * static_cast<std::size_t>(n));
  std::vector<std::int8_t> row(static_cast<std::size_t>(n));
  const double total = cdf.back();
  for (std::size_t k = 0; k < count; ++k) {
    const double r = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    auto s = static_cast<StateIndex>(it - cdf.begin());
    if (it == cdf.end()) {
      s = nu.size() - 1;
      while (s > 0 && nu[s] == 0.0) --s;
    }
    for (int u = 0; u < n; ++u) row[static_cast<std::size_t>(u)] = static_cast<std::int8_t>(spin_of(s, u));
    out.push_back(row);
  }
  return out;
}

}  // namespace msl
