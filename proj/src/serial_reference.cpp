#include "msl/serial_reference.hpp"

#include <algorithm>
#include <cmath>

namespace msl::serial {

DenseDistribution gibbs_distribution(const IsingModel& model) {
  const int n = model.n();
  require_dense(n);
  std::vector<double> logw(num_states(n));
  double top = -INFINITY;
  for (StateIndex s = 0; s < logw.size(); ++s) {
    logw[s] = energy(model, s);
    top = std::max(top, logw[s]);
  }
  double z = 0.0;
  for (double& x : logw) {
    x = std::exp(x - top);
    z += x;
  }
  for (double& x : logw) x /= z;
  return DenseDistribution(n, std::move(logw), true);
}

std::vector<double> glauber_flip_table(const IsingModel& model) {
  const int n = model.n();
  require_dense(n);
  std::vector<double> flip(num_states(n) * static_cast<std::size_t>(n));
  for (StateIndex s = 0; s < num_states(n); ++s)
    for (int u = 0; u < n; ++u)
      flip[s * static_cast<std::size_t>(n) + static_cast<std::size_t>(u)] = conditional(model, flip_bit(s, u), u) / n;
  return flip;
}

double weak_metastability(const DenseDistribution& nu, const SpinKernel& kernel) {
  double total = 0.0;
  for (StateIndex t = 0; t < nu.size(); ++t) {
    double next = nu[t] * kernel.stay(t);
    for (int u = 0; u < kernel.n(); ++u) next += nu[flip_bit(t, u)] * kernel.flip(flip_bit(t, u), u);
    total += std::abs(next - nu[t]);
  }
  return 0.5 * total;
}

double strong_metastability(const DenseDistribution& nu, const SpinKernel& kernel) {
  double total = 0.0;
  for (StateIndex s = 0; s < nu.size(); ++s)
    for (int u = 0; u < kernel.n(); ++u) {
      const StateIndex t = flip_bit(s, u);
      total += std::abs(kernel.flip(s, u) * nu[s] - kernel.flip(t, u) * nu[t]);
    }
  return 0.5 * total;
}

double conductance(const SpinKernel& kernel, const DenseDistribution& mu, const StateSubset& a) {
  double flow = 0.0, m = 0.0;
  for (StateIndex s = 0; s < mu.size(); ++s) {
    if (!a.contains(s)) continue;
    m += mu[s];
    for (int u = 0; u < kernel.n(); ++u)
      if (!a.contains(flip_bit(s, u))) flow += kernel.flip(s, u) * mu[s];
  }
  return flow / m;
}

double pl_loss_node(std::span<const double> theta_u, const WeightedSamples& samples, int u) {
  double loss = 0.0;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const auto row = samples.row(t);
    double x = theta_u[0];
    for (int j = 0; j < samples.n(); ++j)
      if (j != u) x += theta_u[coupling_slot(u, j)] * row[static_cast<std::size_t>(j)];
    loss += samples.weight(t) * log1p_exp(-2.0 * row[static_cast<std::size_t>(u)] * x);
  }
  return loss;
}

std::vector<double> pl_gradient_node(std::span<const double> theta_u, const WeightedSamples& samples, int u) {
  std::vector<double> grad(theta_u.size(), 0.0);
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const auto row = samples.row(t);
    double x = theta_u[0];
    for (int j = 0; j < samples.n(); ++j)
      if (j != u) x += theta_u[coupling_slot(u, j)] * row[static_cast<std::size_t>(j)];
    const double s = row[static_cast<std::size_t>(u)];
    const double c = -2.0 * s * logistic(-2.0 * s * x) * samples.weight(t);
    grad[0] += c;
    for (int j = 0; j < samples.n(); ++j)
      if (j != u) grad[coupling_slot(u, j)] += c * row[static_cast<std::size_t>(j)];
  }
  return grad;
}

PLEstimate fit_all(const WeightedSamples& samples, double gamma, const OptimizerConfig& config) {
  PLEstimate est;
  est.n = samples.n();
  est.gamma = gamma;
  for (int u = 0; u < samples.n(); ++u) est.nodes.push_back(fit_node(samples, u, gamma, config));
  for (int u = 0; u < est.n; ++u)
    for (int v = u + 1; v < est.n; ++v)
      est.symmetrization_gap = std::max(est.symmetrization_gap, std::abs(est.coupling(u, v) - est.coupling(v, u)));
  return est;
}

}  // namespace msl::serial
