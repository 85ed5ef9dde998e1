#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msl/chains.hpp"
#include "msl/rng.hpp"
#include "msl/spin_models.hpp"

namespace msl {

/// Fully connected ferromagnet: E = (J/n) sum_{i<j} s_i s_j - h sum_i s_i.
struct CWModel {
  int n = 0;
  double J = 0.0;
  double h = 0.0;

  void validate() const;
  IsingModel embed() const { return IsingModel::curie_weiss(n, J, h); }
};

/// m_k = -1 + 2k/n, k = number of +1 spins.
inline double magnetization_level(int n, int k) { return -1.0 + 2.0 * k / n; }
/// Index k of the grid level m; throws when m is off the grid.
int grid_index(int n, double m);

/// log C(n, k) through lgamma, defined for real k in [0, n].
double log_binomial(int n, double k);

/// S(m) = (1/n) log C(n, n(1+m)/2) on the grid.
double entropy(int n, double m);
/// Same expression at any m in [-1, 1].
double entropy_continuous(int n, double m);

/// Psi(m) = -(J/2) m^2 + h m - S(m) on the grid.
double free_energy(const CWModel& model, double m);
double free_energy_continuous(const CWModel& model, double m);

/// Centered difference (Psi(m + 1/n) - Psi(m - 1/n)) / (2/n) of the continuous free energy.
double free_energy_gradient(const CWModel& model, double m);

/// Roots of free_energy_gradient in (0, 1), ascending.
std::vector<double> positive_stationary_points(const CWModel& model);

struct M0Result {
  double m0 = 0.0;             // nearest grid level
  double m0_continuous = 0.0;  // root of the discrete gradient
  int k = 0;                   // grid index of m0
};

/// Largest positive local minimum of the free energy.
M0Result find_m0(const CWModel& model);

struct QuadraticAnsatz {
  double a = 0.0;
  /// -J m0 + h - S'(m0) with the centered difference for S'.
  double residual = 0.0;
};

/// a = -J - S''(m0) by second difference with step 2/n; throws unless a > 0.
QuadraticAnsatz quadratic_ansatz(const CWModel& model, double m0);

/// Phi on the n+1 grid levels; +infinity marks excluded levels.
struct MagnetizationPotential {
  int n = 0;
  std::vector<double> values;
  std::string family;
  /// K for Taylor families, window half-width for the truncated one, 0 otherwise.
  double parameter = 0.0;
};

MagnetizationPotential exact_phi(const CWModel& model);
/// sum_{k=2}^{K} Psi^(k)(m0) (m - m0)^k / k!, derivatives by central differences with step 2/n.
MagnetizationPotential taylor_phi(const CWModel& model, double m0, int K);
/// Psi(m) for |m - m0| < m0 / (4 sqrt(a)), +infinity elsewhere.
MagnetizationPotential truncated_phi(const CWModel& model, double m0, double a);

/// Distribution over magnetization classes, uniform within each class.
class MagnetizationDistribution {
 public:
  MagnetizationDistribution() = default;
  MagnetizationDistribution(int n, std::vector<double> log_weights);

  int n() const { return n_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  double log_normalizer() const { return log_normalizer_; }
  /// Mass of class k.
  double class_probability(int k) const;
  std::vector<double> class_probabilities() const;
  /// Probability of one configuration with k plus spins.
  double configuration_probability(int k) const;
  /// Full 2^n vector; n <= kMaxDenseSpins.
  DenseDistribution to_dense() const;

 private:
  int n_ = 0;
  std::vector<double> log_weights_;
  double log_normalizer_ = 0.0;
};

/// Class weights exp(-n Phi(m)).
MagnetizationDistribution metastable_distribution(const CWModel& model, const MagnetizationPotential& phi);

/// P(sigma_u | rest) for a configuration of magnetization m: (1 + tanh(sigma_u (J m - h) - J/n)) / 2.
double cw_conditional(const CWModel& model, int sigma_u, double m);

/// Strong metastability under Glauber dynamics, summed over the single-flip
/// edges between neighbouring magnetization classes. O(n).
double strong_eta_magnetization(const CWModel& model, const MagnetizationDistribution& nu);
/// TV distance between nu and nu P, through the lumped birth-death chain on classes. O(n).
double weak_eta_magnetization(const CWModel& model, const MagnetizationDistribution& nu);

/// M i.i.d. configurations: class from the class weights, then a uniform arrangement.
SampleSet exact_magnetization_sampler(const MagnetizationDistribution& nu, std::size_t count, CounterRng& rng);

/// Glauber dynamics on the CW model with the running spin sum as the local-field statistic.
SampleSet cw_glauber_fast(const CWModel& model, const SpinConfiguration& start, const ChainRunConfig& config,
                          CounterRng& rng);

struct MagnetizationTrace {
  int n = 0;
  /// Plus-spin counts at the recorded steps.
  std::vector<int> plus_counts;
  /// Extremes of the plus-spin count over every step, burn-in included.
  int min_plus = 0;
  int max_plus = 0;
};

/// Lumped Glauber chain on the plus-spin count; same law as the magnetization of cw_glauber_fast.
MagnetizationTrace cw_glauber_counts(const CWModel& model, int start_plus, const ChainRunConfig& config,
                                     CounterRng& rng);

/// Count of samples in each plus-spin class, length n+1.
std::vector<double> magnetization_histogram(const SampleSet& samples);
std::vector<double> magnetization_histogram(const MagnetizationTrace& trace);

}  // namespace msl
