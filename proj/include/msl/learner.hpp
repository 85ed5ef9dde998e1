#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "msl/chains.hpp"
#include "msl/spin_models.hpp"

namespace msl {

/// Distinct sample rows with their empirical (or exact) probabilities.
class WeightedSamples {
 public:
  WeightedSamples() = default;
  WeightedSamples(int n, std::vector<std::int8_t> rows, std::vector<double> weights);

  /// Merges duplicate rows; weights are counts / M.
  static WeightedSamples from_samples(const SampleSet& samples);
  /// Every state with positive mass, weighted by its probability.
  static WeightedSamples from_distribution(const DenseDistribution& nu);

  int n() const { return n_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const std::int8_t> row(std::size_t i) const {
    return {rows_.data() + i * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  int n_ = 0;
  std::vector<std::int8_t> rows_;
  std::vector<double> weights_;
};

/// Parameter slot of theta_uj inside node u's vector (slot 0 is the field).
inline std::size_t coupling_slot(int u, int j) { return static_cast<std::size_t>(1 + (j < u ? j : j - 1)); }
inline int slot_site(int u, std::size_t slot) {
  const int j = static_cast<int>(slot) - 1;
  return j < u ? j : j + 1;
}

/// Node-u vector of the model: field then couplings in increasing j.
std::vector<double> node_parameters(const IsingModel& model, int u);

/// Mean of log(1 + exp(-2 s_u (theta_u + sum_j theta_uj s_j))).
double pl_loss_node(std::span<const double> theta_u, const WeightedSamples& samples, int u);
std::vector<double> pl_gradient_node(std::span<const double> theta_u, const WeightedSamples& samples, int u);

/// Euclidean projection onto {x : |x|_1 <= radius}.
std::vector<double> project_l1(std::span<const double> v, double radius);

struct OptimizerConfig {
  double tol = 1e-8;
  int max_iters = 50000;
};

struct NodeFit {
  int node = 0;
  std::vector<double> theta;
  double loss = 0.0;
  /// |theta - P(theta - grad)|_2 at the returned point.
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected gradient descent from zero with Barzilai-Borwein trial steps and Armijo backtracking.
NodeFit fit_node(const WeightedSamples& samples, int u, double gamma, const OptimizerConfig& config = {});

struct PLEstimate {
  int n = 0;
  double gamma = 0.0;
  std::vector<NodeFit> nodes;
  /// max_{u,v} |theta_uv - theta_vu|.
  double symmetrization_gap = 0.0;

  /// theta_uv as estimated by node u.
  double coupling(int u, int v) const { return nodes.at(static_cast<std::size_t>(u)).theta[coupling_slot(u, v)]; }
  double field(int u) const { return nodes.at(static_cast<std::size_t>(u)).theta[0]; }
  bool converged() const;
};

PLEstimate fit_all(const WeightedSamples& samples, double gamma, const OptimizerConfig& config = {});

using EdgeSet = std::set<std::pair<int, int>>;

/// {(u,v) : max(|theta_uv|, |theta_vu|) > alpha / 2}.
EdgeSet structure_threshold(const PLEstimate& estimate, double alpha);
/// Edges with nonzero coupling.
EdgeSet edge_set(const IsingModel& model);

/// Averages theta_uv and theta_vu and the node fields into a model.
IsingModel symmetrize(const PLEstimate& estimate);

/// Per-node field minimizing the PL loss with couplings frozen to node u's
/// estimates on `edges` (zero elsewhere), constrained to [-h_max, h_max].
std::vector<double> fit_fields(const WeightedSamples& samples, const PLEstimate& estimate, const EdgeSet& edges,
                               double h_max, double tol = 1e-10);

/// max_{u<v} |theta_uv - theta*_uv| using node u's estimate for both orders.
double max_coupling_error(const PLEstimate& estimate, const IsingModel& truth);

// Curie-Weiss loss landscapes ---------------------------------------------------

struct LossSurface {
  std::vector<double> J_grid;
  std::vector<double> h_grid;
  /// values[i * h_grid.size() + j] at (J_grid[i], h_grid[j]).
  std::vector<double> values;
  double best_J = 0.0;
  double best_h = 0.0;
  double best_value = 0.0;
};

/// Mean CW negative log-likelihood per sample from a plus-count histogram of length n+1.
LossSurface mle_grid_cw(const std::vector<double>& histogram, const std::vector<double>& J_grid,
                        const std::vector<double>& h_grid);
LossSurface mle_grid_cw(const SampleSet& samples, const std::vector<double>& J_grid, const std::vector<double>& h_grid);

/// Node-averaged PL loss of the CW parameterization from a plus-count histogram.
LossSurface pl_grid_cw(const std::vector<double>& histogram, const std::vector<double>& J_grid,
                       const std::vector<double>& h_grid);
LossSurface pl_grid_cw(const SampleSet& samples, const std::vector<double>& J_grid, const std::vector<double>& h_grid);

/// lo, lo+step, ..., up to hi inclusive (within half a step).
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

}  // namespace msl
