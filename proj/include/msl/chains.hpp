#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msl/rng.hpp"
#include "msl/spin_models.hpp"

namespace msl {

enum class KernelKind { glauber, metropolis };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Single-site kernel over 2^n states stored row-sparse: n flip probabilities
/// and one self-loop probability per state.
class SpinKernel {
 public:
  SpinKernel(int n, KernelKind kind, std::vector<double> flip, double omega_p);

  int n() const { return n_; }
  KernelKind kind() const { return kind_; }
  std::size_t num_states() const { return std::size_t{1} << n_; }
  /// P(flip_u(s) | s).
  double flip(StateIndex s, int u) const { return flip_[s * static_cast<std::size_t>(n_) + static_cast<std::size_t>(u)]; }
  double stay(StateIndex s) const { return stay_[s]; }
  /// P(to | from) for arbitrary states (zero unless equal or one flip apart).
  double transition(StateIndex from, StateIndex to) const;
  /// Condition-1 constant: min over (s,u) of P(flip_u(s)|s) / mu(-s_u | rest).
  double omega_p() const { return omega_p_; }

 private:
  int n_;
  KernelKind kind_;
  std::vector<double> flip_;
  std::vector<double> stay_;
  double omega_p_;
};

SpinKernel glauber_kernel(const IsingModel& model);
SpinKernel metropolis_kernel(const IsingModel& model);
SpinKernel make_kernel(const IsingModel& model, KernelKind kind);

/// Analytic Condition-1 constant used when no dense scan is possible.
double analytic_omega_p(const IsingModel& model, KernelKind kind);

/// Dense L x L row-stochastic chain with its stationary distribution.
class GenericChain {
 public:
  /// matrix is row-major, matrix[i*L + j] = P(j | i).
  GenericChain(std::size_t states, std::vector<double> matrix, std::vector<double> stationary);

  std::size_t states() const { return states_; }
  double operator()(std::size_t from, std::size_t to) const { return matrix_[from * states_ + to]; }
  std::span<const double> matrix() const { return matrix_; }
  std::span<const double> stationary() const { return stationary_; }

  static GenericChain from_kernel(const SpinKernel& kernel, const DenseDistribution& mu);

 private:
  std::size_t states_;
  std::vector<double> matrix_;
  std::vector<double> stationary_;
};

/// Row-stochastic chain whose stationary distribution is found by power iteration.
GenericChain make_generic_chain(std::size_t states, std::vector<double> matrix);

/// Random reversible chain: Metropolis-Hastings towards random target weights with
/// proposals along a random connected graph (a ring plus extra edges).
GenericChain random_reversible_chain(std::size_t states, double edge_probability, CounterRng& rng);

/// Cycle random walk on L states (1/2 to each neighbour).
GenericChain cycle_walk(std::size_t states);

// Metastability measures -----------------------------------------------------

/// |nu - nu P|_TV.
double weak_metastability(const DenseDistribution& nu, const SpinKernel& kernel);
double weak_metastability(std::span<const double> nu, const GenericChain& chain);
/// ||nu - nu P||_1 (twice the TV value).
double l1_displacement(std::span<const double> nu, const GenericChain& chain);

/// 1/2 sum_{i,j} |P(i|j) nu(j) - P(j|i) nu(i)|.
double strong_metastability(const DenseDistribution& nu, const SpinKernel& kernel);
double strong_metastability(std::span<const double> nu, const GenericChain& chain);

/// max_{i,j} |P(j|i) mu(i) - P(i|j) mu(j)|.
double detailed_balance_residual(const SpinKernel& kernel, const DenseDistribution& mu);
double detailed_balance_residual(const GenericChain& chain);

/// nu P for the spin kernel.
std::vector<double> step_distribution(std::span<const double> nu, const SpinKernel& kernel);

// Conductance and spectra ----------------------------------------------------

/// Gamma(A) = sum_{j in A, i not in A} P(i|j) mu(j) / mu(A).
double conductance(const SpinKernel& kernel, const DenseDistribution& mu, const StateSubset& a);
double conductance(const GenericChain& chain, const StateSubset& a);

struct ChainConductance {
  double value;
  std::uint64_t argmin_mask;
};

inline constexpr std::size_t kMaxConductanceStates = 20;

/// min over A with mu(A) < 1/2 of Gamma(A), by exhaustive subset enumeration.
ChainConductance chain_conductance(const GenericChain& chain);

/// 1 - lambda_2 of a reversible chain.
///
/// Power iteration on (I + D^{1/2} P D^{-1/2}) / 2 deflated against sqrt(mu);
/// the shift keeps the spectrum in [0, 1] so periodic chains converge to
/// lambda_2 rather than to -1.
double spectral_gap(const GenericChain& chain, double tol = 1e-10, std::size_t max_iters = 1000000);
double spectral_gap(const SpinKernel& kernel, const DenseDistribution& mu, double tol = 1e-10,
                    std::size_t max_iters = 1000000);

DenseDistribution restricted_distribution(const DenseDistribution& mu, const StateSubset& a);

/// ceil((tv_gap - epsilon) / eta); 0 when the bound is vacuous (epsilon >= tv_gap).
std::uint64_t mixing_lower_bound(double tv_gap, double eta, double epsilon);

struct TentExample {
  GenericChain chain;
  std::vector<double> nu;
  double normalizer;
  double eta_weak;
  double eta_strong;
};

/// Tent distribution nu(i) ~ iL (i <= L/2), L^2 - iL (i > L/2), i = 1..L, on the cycle walk.
TentExample tent_example(std::size_t L);

// Sampling --------------------------------------------------------------------

/// M x n spin samples with provenance.
struct SampleSet {
  int n = 0;
  std::vector<std::int8_t> data;
  std::uint64_t seed = 0;
  std::string chain = "unknown";
  std::string provenance;

  std::size_t size() const { return n == 0 ? 0 : data.size() / static_cast<std::size_t>(n); }
  std::span<const std::int8_t> row(std::size_t t) const {
    return {data.data() + t * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  }
  void push_back(std::span<const std::int8_t> sigma);
  /// Throws unless every entry is +-1 and data.size() is a multiple of n.
  void validate() const;
};

/// Single-site update sampler closed over a model.
class ImplicitSampler {
 public:
  ImplicitSampler(IsingModel model, KernelKind kind);

  const IsingModel& model() const { return model_; }
  KernelKind kind() const { return kind_; }
  double omega_p() const { return omega_p_; }

  /// One site update in place; returns whether the spin flipped.
  bool step(std::span<std::int8_t> sigma, CounterRng& rng) const;

 private:
  IsingModel model_;
  KernelKind kind_;
  double omega_p_;
};

struct ChainRunConfig {
  std::uint64_t steps = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t thinning = 1;
};

/// Runs `steps` single-site updates; after `burn_in` records every `thinning`-th state.
SampleSet run_chain(const ImplicitSampler& sampler, const SpinConfiguration& start, const ChainRunConfig& config,
                    CounterRng& rng);

/// M i.i.d. draws from a dense distribution by inverse CDF.
SampleSet sample_dense(const DenseDistribution& nu, std::size_t count, CounterRng& rng);

}  // namespace msl
