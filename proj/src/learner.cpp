#include "msl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "msl/curie_weiss.hpp"
#include "msl/parallel.hpp"

namespace msl {

namespace {

void check_node(const WeightedSamples& samples, std::span<const double> theta_u, int u) {
  if (u < 0 || u >= samples.n()) throw InvalidArgument("node " + std::to_string(u) + " out of range");
  if (theta_u.size() != static_cast<std::size_t>(samples.n()))
    throw InvalidArgument("node parameter vector must have length n = " + std::to_string(samples.n()));
}

// theta_u + sum_j theta_uj s_j for one row.
double node_field(std::span<const double> theta_u, std::span<const std::int8_t> row, int u) {
  double x = theta_u[0];
  const int n = static_cast<int>(row.size());
  for (int j = 0; j < u; ++j) x += theta_u[static_cast<std::size_t>(j) + 1] * row[static_cast<std::size_t>(j)];
  for (int j = u + 1; j < n; ++j) x += theta_u[static_cast<std::size_t>(j)] * row[static_cast<std::size_t>(j)];
  return x;
}

// Loss and gradient in one pass over the rows.
double loss_and_gradient(std::span<const double> theta_u, const WeightedSamples& samples, int u,
                         std::vector<double>& grad) {
  const int n = samples.n();
  grad.assign(static_cast<std::size_t>(n), 0.0);
  double loss = 0.0;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const auto row = samples.row(t);
    const double w = samples.weight(t);
    const double s = row[static_cast<std::size_t>(u)];
    const double z = -2.0 * s * node_field(theta_u, row, u);
    loss += w * log1p_exp(z);
    const double c = -2.0 * s * logistic(z) * w;
    grad[0] += c;
    for (int j = 0; j < n; ++j)
      if (j != u) grad[coupling_slot(u, j)] += c * row[static_cast<std::size_t>(j)];
  }
  return loss;
}

void require_grids(const std::vector<double>& J_grid, const std::vector<double>& h_grid) {
  if (J_grid.empty() || h_grid.empty()) throw InvalidArgument("loss grid: J and h grids must be nonempty");
}

double histogram_total(const std::vector<double>& histogram) {
  if (histogram.size() < 3) throw InvalidArgument("loss grid: histogram needs n+1 >= 3 entries");
  const double total = std::accumulate(histogram.begin(), histogram.end(), 0.0);
  if (!(total > 0.0)) throw InvalidArgument("loss grid: no samples");
  return total;
}

template <typename Cell>
LossSurface evaluate_surface(const std::vector<double>& J_grid, const std::vector<double>& h_grid, Cell&& cell) {
  require_grids(J_grid, h_grid);
  LossSurface out{J_grid, h_grid, std::vector<double>(J_grid.size() * h_grid.size()), 0.0, 0.0, 0.0};
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(out.values.size()); ++c) {
    const auto i = static_cast<std::size_t>(c) / h_grid.size(), j = static_cast<std::size_t>(c) % h_grid.size();
    out.values[static_cast<std::size_t>(c)] = cell(J_grid[i], h_grid[j]);
  }
  const auto best = static_cast<std::size_t>(std::min_element(out.values.begin(), out.values.end()) - out.values.begin());
  out.best_J = J_grid[best / h_grid.size()];
  out.best_h = h_grid[best % h_grid.size()];
  out.best_value = out.values[best];
  return out;
}

}  // namespace

// WeightedSamples ------------------------------------------------------------

WeightedSamples::WeightedSamples(int n, std::vector<std::int8_t> rows, std::vector<double> weights)
    : n_(n), rows_(std::move(rows)), weights_(std::move(weights)) {
  if (n <= 0) throw InvalidArgument("WeightedSamples: n must be positive");
  if (rows_.size() != weights_.size() * static_cast<std::size_t>(n))
    throw InvalidArgument("WeightedSamples: rows and weights disagree");
  if (weights_.empty()) throw InvalidArgument("WeightedSamples: no samples");
}

WeightedSamples WeightedSamples::from_samples(const SampleSet& samples) {
  samples.validate();
  const std::size_t m = samples.size();
  if (m == 0) throw InvalidArgument("sample set is empty");
  const auto n = static_cast<std::size_t>(samples.n);
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::int8_t> rows;
  std::vector<double> counts;
  std::string key(n, '\0');
  for (std::size_t t = 0; t < m; ++t) {
    const auto r = samples.row(t);
    for (std::size_t i = 0; i < n; ++i) key[i] = static_cast<char>(r[i]);
    auto [it, inserted] = index.try_emplace(key, counts.size());
    if (inserted) {
      rows.insert(rows.end(), r.begin(), r.end());
      counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
  }
  for (auto& c : counts) c /= static_cast<double>(m);
  return WeightedSamples(samples.n, std::move(rows), std::move(counts));
}

WeightedSamples WeightedSamples::from_distribution(const DenseDistribution& nu) {
  const int n = nu.n();
  std::vector<std::int8_t> rows;
  std::vector<double> weights;
  for (StateIndex s = 0; s < nu.size(); ++s) {
    if (nu[s] <= 0.0) continue;
    for (int u = 0; u < n; ++u) rows.push_back(static_cast<std::int8_t>(spin_of(s, u)));
    weights.push_back(nu[s]);
  }
  return WeightedSamples(n, std::move(rows), std::move(weights));
}

std::vector<double> node_parameters(const IsingModel& model, int u) {
  const int n = model.n();
  if (u < 0 || u >= n) throw InvalidArgument("node out of range");
  std::vector<double> theta(static_cast<std::size_t>(n), 0.0);
  theta[0] = model.field(u);
  for (const auto& [j, value] : model.neighbors(u)) theta[coupling_slot(u, j)] = value;
  return theta;
}

// Loss -----------------------------------------------------------------------

double pl_loss_node(std::span<const double> theta_u, const WeightedSamples& samples, int u) {
  check_node(samples, theta_u, u);
  return parallel_sum(samples.size(), [&](std::size_t t) {
    const auto row = samples.row(t);
    const double s = row[static_cast<std::size_t>(u)];
    return samples.weight(t) * log1p_exp(-2.0 * s * node_field(theta_u, row, u));
  });
}

std::vector<double> pl_gradient_node(std::span<const double> theta_u, const WeightedSamples& samples, int u) {
  check_node(samples, theta_u, u);
  std::vector<double> grad;
  loss_and_gradient(theta_u, samples, u, grad);
  return grad;
}

std::vector<double> project_l1(std::span<const double> v, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("project_l1: radius must be positive");
  std::vector<double> out(v.begin(), v.end());
  double norm = 0.0;
  for (double x : v) norm += std::abs(x);
  if (norm <= radius) return out;

  std::vector<double> mag(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mag[i] = std::abs(v[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());
  double cumulative = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < mag.size(); ++j) {
    cumulative += mag[j];
    const double t = (cumulative - radius) / static_cast<double>(j + 1);
    if (mag[j] - t > 0.0) tau = t;
  }
  for (auto& x : out) x = std::copysign(std::max(std::abs(x) - tau, 0.0), x);
  return out;
}

// Optimizer ------------------------------------------------------------------

NodeFit fit_node(const WeightedSamples& samples, int u, double gamma, const OptimizerConfig& config) {
  if (!(gamma > 0.0)) throw InvalidArgument("fit_node: gamma must be positive");
  const auto n = static_cast<std::size_t>(samples.n());
  if (u < 0 || u >= samples.n()) throw InvalidArgument("fit_node: node out of range");

  NodeFit fit;
  fit.node = u;
  fit.theta.assign(n, 0.0);
  std::vector<double> grad, trial_grad, step_vec(n);
  double loss = loss_and_gradient(fit.theta, samples, u, grad);
  double alpha = 1.0;

  auto pg_norm = [&](const std::vector<double>& theta, const std::vector<double>& g) {
    std::vector<double> probe(n);
    for (std::size_t i = 0; i < n; ++i) probe[i] = theta[i] - g[i];
    const auto p = project_l1(probe, gamma);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (theta[i] - p[i]) * (theta[i] - p[i]);
    return std::sqrt(s);
  };

  int it = 0;
  fit.projected_gradient_norm = pg_norm(fit.theta, grad);
  while (fit.projected_gradient_norm >= config.tol && it < config.max_iters) {
    ++it;
    std::vector<double> trial;
    double trial_loss = 0.0;
    double a = alpha;
    bool accepted = false;
    for (int halvings = 0; halvings < 80; ++halvings, a *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) step_vec[i] = fit.theta[i] - a * grad[i];
      trial = project_l1(step_vec, gamma);
      double descent = 0.0;
      for (std::size_t i = 0; i < n; ++i) descent += grad[i] * (trial[i] - fit.theta[i]);
      trial_loss = loss_and_gradient(trial, samples, u, trial_grad);
      if (trial_loss <= loss + 1e-4 * descent) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    // Barzilai-Borwein step for the next trial.
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = trial[i] - fit.theta[i];
      const double y = trial_grad[i] - grad[i];
      ss += s * s;
      sy += s * y;
    }
    alpha = (sy > 0.0) ? std::clamp(ss / sy, 1e-10, 1e10) : std::min(1e10, 2.0 * a);

    fit.theta = std::move(trial);
    std::swap(grad, trial_grad);
    loss = trial_loss;
    fit.projected_gradient_norm = pg_norm(fit.theta, grad);
    if (ss == 0.0) break;
  }
  fit.loss = loss;
  fit.iterations = it;
  fit.converged = fit.projected_gradient_norm < config.tol;
  return fit;
}

bool PLEstimate::converged() const {
  return std::all_of(nodes.begin(), nodes.end(), [](const NodeFit& f) { return f.converged; });
}

PLEstimate fit_all(const WeightedSamples& samples, double gamma, const OptimizerConfig& config) {
  const int n = samples.n();
  PLEstimate est;
  est.n = n;
  est.gamma = gamma;
  est.nodes.resize(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (int u = 0; u < n; ++u) est.nodes[static_cast<std::size_t>(u)] = fit_node(samples, u, gamma, config);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      est.symmetrization_gap = std::max(est.symmetrization_gap, std::abs(est.coupling(u, v) - est.coupling(v, u)));
  return est;
}

// Structure and fields ---------------------------------------------------------

EdgeSet structure_threshold(const PLEstimate& estimate, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("structure_threshold: alpha must be positive");
  EdgeSet edges;
  for (int u = 0; u < estimate.n; ++u)
    for (int v = u + 1; v < estimate.n; ++v)
      if (std::max(std::abs(estimate.coupling(u, v)), std::abs(estimate.coupling(v, u))) > alpha / 2)
        edges.emplace(u, v);
  return edges;
}

EdgeSet edge_set(const IsingModel& model) {
  EdgeSet edges;
  for (const auto& c : model.couplings())
    if (c.value != 0.0) edges.emplace(std::min(c.u, c.v), std::max(c.u, c.v));
  return edges;
}

IsingModel symmetrize(const PLEstimate& estimate) {
  std::vector<double> fields(static_cast<std::size_t>(estimate.n));
  std::vector<Coupling> couplings;
  for (int u = 0; u < estimate.n; ++u) {
    fields[static_cast<std::size_t>(u)] = estimate.field(u);
    for (int v = u + 1; v < estimate.n; ++v) {
      const double value = 0.5 * (estimate.coupling(u, v) + estimate.coupling(v, u));
      if (value != 0.0) couplings.push_back({u, v, value});
    }
  }
  return IsingModel(estimate.n, std::move(fields), std::move(couplings));
}

std::vector<double> fit_fields(const WeightedSamples& samples, const PLEstimate& estimate, const EdgeSet& edges,
                               double h_max, double tol) {
  if (!(h_max > 0.0)) throw InvalidArgument("fit_fields: h_max must be positive");
  if (estimate.n != samples.n()) throw InvalidArgument("fit_fields: estimate and samples disagree on n");
  const int n = samples.n();
  std::vector<double> fields(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (int u = 0; u < n; ++u) {
    std::vector<double> theta(static_cast<std::size_t>(n), 0.0);
    for (int v = 0; v < n; ++v) {
      if (v == u) continue;
      if (edges.count({std::min(u, v), std::max(u, v)})) theta[coupling_slot(u, v)] = estimate.coupling(u, v);
    }
    auto f = [&](double h) {
      theta[0] = h;
      return pl_loss_node(theta, samples, u);
    };
    // Golden-section search on the convex scalar loss.
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = -h_max, b = h_max;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - r * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + r * (b - a);
        fd = f(d);
      }
    }
    double best = 0.5 * (a + b);
    // The interval only shrinks towards an endpoint when the optimum lies beyond it.
    if (best - (-h_max) < tol) best = -h_max;
    if (h_max - best < tol) best = h_max;
    fields[static_cast<std::size_t>(u)] = best;
  }
  return fields;
}

double max_coupling_error(const PLEstimate& estimate, const IsingModel& truth) {
  if (estimate.n != truth.n()) throw InvalidArgument("max_coupling_error: size mismatch");
  double worst = 0.0;
  for (int u = 0; u < estimate.n; ++u)
    for (int v = 0; v < estimate.n; ++v)
      if (u != v) worst = std::max(worst, std::abs(estimate.coupling(u, v) - truth.coupling(u, v)));
  return worst;
}

// Curie-Weiss landscapes -------------------------------------------------------

LossSurface mle_grid_cw(const std::vector<double>& histogram, const std::vector<double>& J_grid,
                        const std::vector<double>& h_grid) {
  const double total = histogram_total(histogram);
  const int n = static_cast<int>(histogram.size()) - 1;
  std::vector<double> log_count(histogram.size());
  for (int k = 0; k <= n; ++k) log_count[static_cast<std::size_t>(k)] = log_binomial(n, k);
  return evaluate_surface(J_grid, h_grid, [&](double J, double h) {
    auto energy_k = [&](int k) {
      const double s = 2.0 * k - n;
      return J / (2.0 * n) * (s * s - n) - h * s;
    };
    double top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) top = std::max(top, log_count[static_cast<std::size_t>(k)] + energy_k(k));
    double z = 0.0, mean_energy = 0.0;
    for (int k = 0; k <= n; ++k) {
      z += std::exp(log_count[static_cast<std::size_t>(k)] + energy_k(k) - top);
      mean_energy += histogram[static_cast<std::size_t>(k)] * energy_k(k);
    }
    return -mean_energy / total + top + std::log(z);
  });
}

LossSurface mle_grid_cw(const SampleSet& samples, const std::vector<double>& J_grid, const std::vector<double>& h_grid) {
  return mle_grid_cw(magnetization_histogram(samples), J_grid, h_grid);
}

LossSurface pl_grid_cw(const std::vector<double>& histogram, const std::vector<double>& J_grid,
                       const std::vector<double>& h_grid) {
  const double total = histogram_total(histogram);
  const int n = static_cast<int>(histogram.size()) - 1;
  return evaluate_surface(J_grid, h_grid, [&](double J, double h) {
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = histogram[static_cast<std::size_t>(k)];
      if (w == 0.0) continue;
      const double s = 2.0 * k - n;
      const double plus_field = J / n * (s - 1.0) - h;
      const double minus_field = J / n * (s + 1.0) - h;
      const double per_node = (static_cast<double>(k) / n) * log1p_exp(-2.0 * plus_field) +
                              (static_cast<double>(n - k) / n) * log1p_exp(2.0 * minus_field);
      acc += w * per_node;
    }
    return acc / total;
  });
}

LossSurface pl_grid_cw(const SampleSet& samples, const std::vector<double>& J_grid, const std::vector<double>& h_grid) {
  return pl_grid_cw(magnetization_histogram(samples), J_grid, h_grid);
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points == 0) throw InvalidArgument("linear_grid: need at least one point");
  if (points == 1) return {lo};
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

}  // namespace msl
