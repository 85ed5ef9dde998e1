#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "msl/rng.hpp"

namespace msl {

/// Thrown for malformed inputs: dimension mismatches, out-of-range sites, caps.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using StateIndex = std::uint64_t;

/// Cap for row-sparse enumeration over all 2^n states.
inline constexpr int kMaxDenseSpins = 16;
/// Cap for full 2^n x 2^n transition matrices.
inline constexpr int kMaxMatrixSpins = 14;

/// Spin of site u in the canonical state index (bit u set <=> +1).
constexpr int spin_of(StateIndex s, int u) { return ((s >> u) & 1U) ? 1 : -1; }
constexpr StateIndex flip_bit(StateIndex s, int u) { return s ^ (StateIndex{1} << u); }
inline StateIndex num_states(int n) { return StateIndex{1} << n; }

void require_dense(int n);

class SpinConfiguration {
 public:
  SpinConfiguration() = default;
  explicit SpinConfiguration(std::vector<int> spins);
  static SpinConfiguration all(int n, int value);
  static SpinConfiguration from_index(StateIndex index, int n);

  int size() const { return static_cast<int>(spins_.size()); }
  int operator[](int u) const { return spins_[static_cast<std::size_t>(u)]; }
  std::span<const std::int8_t> spins() const { return spins_; }

  /// Requires size() <= 63.
  StateIndex index() const;
  SpinConfiguration flipped(int u) const;
  int total() const;

  bool operator==(const SpinConfiguration&) const = default;

 private:
  std::vector<std::int8_t> spins_;
};

struct Coupling {
  int u;
  int v;
  double value;
};

/// Pairwise binary energy E(s) = sum_{u<v} J_uv s_u s_v + sum_u h_u s_u; Gibbs weight exp(E).
class IsingModel {
 public:
  IsingModel() = default;
  /// Couplings are normalized to u < v; self-loops, duplicates and out-of-range sites throw.
  IsingModel(int n, std::vector<double> fields, std::vector<Coupling> couplings);

  static IsingModel zero(int n);
  /// Curie-Weiss embedding: J/n on every pair and field -h on every site.
  static IsingModel curie_weiss(int n, double J, double h);

  int n() const { return n_; }
  double field(int u) const { return fields_.at(static_cast<std::size_t>(u)); }
  std::span<const double> fields() const { return fields_; }
  const std::vector<Coupling>& couplings() const { return couplings_; }
  double coupling(int u, int v) const;
  std::span<const std::pair<int, double>> neighbors(int u) const {
    return adjacency_.at(static_cast<std::size_t>(u));
  }
  double gamma() const { return gamma_; }

  /// h_u + sum_j J_uj s_j for the state index s.
  double local_field(StateIndex s, int u) const;
  double local_field(const SpinConfiguration& sigma, int u) const;
  double local_field(std::span<const std::int8_t> sigma, int u) const;

 private:
  int n_ = 0;
  std::vector<double> fields_;
  std::vector<Coupling> couplings_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  double gamma_ = 0.0;
};

/// Probability vector over the 2^n canonically indexed states.
class DenseDistribution {
 public:
  DenseDistribution() = default;
  /// Validates nonnegativity and normalization to 1e-12 (after optional renormalization).
  DenseDistribution(int n, std::vector<double> probs, bool renormalize = false);

  int n() const { return n_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](StateIndex s) const { return probs_[s]; }
  std::span<const double> probs() const { return probs_; }

  static DenseDistribution uniform(int n);
  static DenseDistribution point_mass(int n, StateIndex s);

 private:
  int n_ = 0;
  std::vector<double> probs_;
};

/// Set of state indices, stored as a bitset.
class StateSubset {
 public:
  StateSubset() = default;
  explicit StateSubset(std::size_t states) : bits_(states, false) {}
  template <typename Pred>
  static StateSubset where(std::size_t states, Pred&& pred) {
    StateSubset a(states);
    for (std::size_t s = 0; s < states; ++s) a.bits_[s] = pred(static_cast<StateIndex>(s));
    return a;
  }
  static StateSubset from_mask(std::size_t states, std::uint64_t mask);

  std::size_t states() const { return bits_.size(); }
  bool contains(StateIndex s) const { return bits_[s]; }
  void insert(StateIndex s) { bits_[s] = true; }
  std::size_t count() const;
  StateSubset complement() const;

 private:
  std::vector<bool> bits_;
};

/// Positive-magnetization states (sum of spins > 0).
StateSubset positive_magnetization(int n);

double mass(const DenseDistribution& mu, const StateSubset& a);
double total_variation(std::span<const double> p, std::span<const double> q);

double energy(const IsingModel& model, const SpinConfiguration& sigma);
double energy(const IsingModel& model, StateIndex s);

/// P(sigma_u | rest) under the Gibbs distribution of the model.
double conditional(const IsingModel& model, const SpinConfiguration& sigma, int u);
double conditional(const IsingModel& model, StateIndex s, int u);

/// Numerically stable 1 / (1 + exp(-x)).
double logistic(double x);
/// Numerically stable log(1 + exp(x)).
double log1p_exp(double x);

DenseDistribution gibbs_distribution(const IsingModel& model);

double gamma_bound(const IsingModel& model);

struct RandomModelSpec {
  int n = 0;
  int degree = 0;
  double coupling_min = 0.0;
  double coupling_max = 0.0;
  double field_max = 0.0;
  /// When false every coupling is +|value| (ferromagnet).
  bool random_signs = true;
};

/// Random graph of maximum degree d (greedy stub matching), couplings uniform in
/// +-[coupling_min, coupling_max], fields uniform in [-field_max, field_max].
IsingModel random_model(const RandomModelSpec& spec, CounterRng& rng);

/// JSON text with keys n, fields, couplings ([u, v, value] triples).
std::string model_to_json(const IsingModel& model);
IsingModel model_from_json(const std::string& text);

}  // namespace msl
