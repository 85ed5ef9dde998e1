#include "msl/spin_models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "json.hpp"

#include "msl/parallel.hpp"

namespace msl {

void require_dense(int n) {
  if (n < 1 || n > kMaxDenseSpins) {
    throw InvalidArgument("dense enumeration requires 1 <= n <= " + std::to_string(kMaxDenseSpins) +
                          ", got n=" + std::to_string(n));
  }
}

// ---------------------------------------------------------------------------
// SpinConfiguration

SpinConfiguration::SpinConfiguration(std::vector<int> spins) {
  spins_.reserve(spins.size());
  for (int s : spins) {
    if (s != 1 && s != -1) throw InvalidArgument("spin values must be -1 or +1");
    spins_.push_back(static_cast<std::int8_t>(s));
  }
}

SpinConfiguration SpinConfiguration::all(int n, int value) {
  return SpinConfiguration(std::vector<int>(static_cast<std::size_t>(n), value));
}

SpinConfiguration SpinConfiguration::from_index(StateIndex index, int n) {
  if (n < 0 || n > 63) throw InvalidArgument("state index encoding supports n <= 63");
  if (n < 63 && index >= (StateIndex{1} << n)) throw InvalidArgument("state index out of range");
  std::vector<int> spins(static_cast<std::size_t>(n));
  for (int u = 0; u < n; ++u) spins[static_cast<std::size_t>(u)] = spin_of(index, u);
  return SpinConfiguration(std::move(spins));
}

StateIndex SpinConfiguration::index() const {
  if (spins_.size() > 63) throw InvalidArgument("state index encoding supports n <= 63");
  StateIndex s = 0;
  for (std::size_t u = 0; u < spins_.size(); ++u) {
    if (spins_[u] > 0) s |= StateIndex{1} << u;
  }
  return s;
}

SpinConfiguration SpinConfiguration::flipped(int u) const {
  if (u < 0 || u >= size()) throw InvalidArgument("site out of range");
  SpinConfiguration c = *this;
  c.spins_[static_cast<std::size_t>(u)] = static_cast<std::int8_t>(-c.spins_[static_cast<std::size_t>(u)]);
  return c;
}

int SpinConfiguration::total() const {
  return std::accumulate(spins_.begin(), spins_.end(), 0);
}

// ---------------------------------------------------------------------------
// IsingModel

IsingModel::IsingModel(int n, std::vector<double> fields, std::vector<Coupling> couplings)
    : n_(n), fields_(std::move(fields)) {
  if (n < 1) throw InvalidArgument("model needs at least one spin");
  if (fields_.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("fields length " + std::to_string(fields_.size()) + " does not match n=" +
                          std::to_string(n));
  }
  std::set<std::pair<int, int>> seen;
  adjacency_.assign(static_cast<std::size_t>(n), {});
  couplings_.reserve(couplings.size());
  for (Coupling c : couplings) {
    if (c.u == c.v) throw InvalidArgument("self-coupling (" + std::to_string(c.u) + "," + std::to_string(c.v) + ")");
    if (c.u < 0 || c.v < 0 || c.u >= n || c.v >= n) throw InvalidArgument("coupling site out of range");
    if (c.u > c.v) std::swap(c.u, c.v);
    if (!seen.insert({c.u, c.v}).second) {
      throw InvalidArgument("duplicate coupling (" + std::to_string(c.u) + "," + std::to_string(c.v) + ")");
    }
    if (c.value == 0.0) continue;
    couplings_.push_back(c);
    adjacency_[static_cast<std::size_t>(c.u)].emplace_back(c.v, c.value);
    adjacency_[static_cast<std::size_t>(c.v)].emplace_back(c.u, c.value);
  }
  std::sort(couplings_.begin(), couplings_.end(),
            [](const Coupling& a, const Coupling& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
  for (int u = 0; u < n; ++u) {
    double g = std::abs(fields_[static_cast<std::size_t>(u)]);
    for (const auto& [v, w] : adjacency_[static_cast<std::size_t>(u)]) g += std::abs(w);
    gamma_ = std::max(gamma_, g);
  }
}

IsingModel IsingModel::zero(int n) { return IsingModel(n, std::vector<double>(static_cast<std::size_t>(n), 0.0), {}); }

IsingModel IsingModel::curie_weiss(int n, double J, double h) {
  std::vector<Coupling> cs;
  cs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) cs.push_back({u, v, J / n});
  return IsingModel(n, std::vector<double>(static_cast<std::size_t>(n), -h), std::move(cs));
}

double IsingModel::coupling(int u, int v) const {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) throw InvalidArgument("coupling site out of range");
  const auto& adj = adjacency_[static_cast<std::size_t>(u)];
  auto it = std::lower_bound(adj.begin(), adj.end(), std::pair<int, double>{v, -HUGE_VAL});
  return (it != adj.end() && it->first == v) ? it->second : 0.0;
}

double IsingModel::local_field(StateIndex s, int u) const {
  double f = fields_[static_cast<std::size_t>(u)];
  for (const auto& [v, w] : adjacency_[static_cast<std::size_t>(u)]) f += w * spin_of(s, v);
  return f;
}

double IsingModel::local_field(std::span<const std::int8_t> sigma, int u) const {
  double f = fields_[static_cast<std::size_t>(u)];
  for (const auto& [v, w] : adjacency_[static_cast<std::size_t>(u)]) f += w * sigma[static_cast<std::size_t>(v)];
  return f;
}

double IsingModel::local_field(const SpinConfiguration& sigma, int u) const {
  if (sigma.size() != n_) throw InvalidArgument("configuration length does not match model");
  if (u < 0 || u >= n_) throw InvalidArgument("site " + std::to_string(u) + " out of range");
  return local_field(sigma.spins(), u);
}

// ---------------------------------------------------------------------------
// Distributions and subsets

DenseDistribution::DenseDistribution(int n, std::vector<double> probs, bool renormalize)
    : n_(n), probs_(std::move(probs)) {
  require_dense(n);
  if (probs_.size() != num_states(n)) throw InvalidArgument("distribution length must be 2^n");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("distribution entries must be finite and >= 0");
    total += p;
  }
  if (renormalize) {
    if (total <= 0.0) throw InvalidArgument("cannot normalize a zero vector");
    for (double& p : probs_) p /= total;
  } else if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("distribution does not sum to 1 (sum=" + std::to_string(total) + ")");
  }
}

DenseDistribution DenseDistribution::uniform(int n) {
  require_dense(n);
  return DenseDistribution(n, std::vector<double>(num_states(n), 1.0 / static_cast<double>(num_states(n))));
}

DenseDistribution DenseDistribution::point_mass(int n, StateIndex s) {
  require_dense(n);
  std::vector<double> p(num_states(n), 0.0);
  p.at(s) = 1.0;
  return DenseDistribution(n, std::move(p));
}

StateSubset StateSubset::from_mask(std::size_t states, std::uint64_t mask) {
  if (states > 64) throw InvalidArgument("mask subsets support at most 64 states");
  StateSubset a(states);
  for (std::size_t s = 0; s < states; ++s) a.bits_[s] = (mask >> s) & 1U;
  return a;
}

std::size_t StateSubset::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

StateSubset StateSubset::complement() const {
  StateSubset c(bits_.size());
  for (std::size_t s = 0; s < bits_.size(); ++s) c.bits_[s] = !bits_[s];
  return c;
}

StateSubset positive_magnetization(int n) {
  return StateSubset::where(num_states(n), [n](StateIndex s) { return 2 * std::popcount(s) > n; });
}

double mass(const DenseDistribution& mu, const StateSubset& a) {
  if (a.states() != mu.size()) throw InvalidArgument("subset and distribution sizes differ");
  double m = 0.0;
  for (StateIndex s = 0; s < mu.size(); ++s)
    if (a.contains(s)) m += mu[s];
  return m;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidArgument("dimension mismatch in total variation");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

// ---------------------------------------------------------------------------
// Energies and conditionals

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1p_exp(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double energy(const IsingModel& model, StateIndex s) {
  double e = 0.0;
  for (const auto& c : model.couplings()) e += c.value * spin_of(s, c.u) * spin_of(s, c.v);
  for (int u = 0; u < model.n(); ++u) e += model.field(u) * spin_of(s, u);
  return e;
}

double energy(const IsingModel& model, const SpinConfiguration& sigma) {
  if (sigma.size() != model.n()) throw InvalidArgument("configuration length does not match model");
  double e = 0.0;
  for (const auto& c : model.couplings()) e += c.value * sigma[c.u] * sigma[c.v];
  for (int u = 0; u < model.n(); ++u) e += model.field(u) * sigma[u];
  return e;
}

double conditional(const IsingModel& model, const SpinConfiguration& sigma, int u) {
  return logistic(2.0 * sigma[u] * model.local_field(sigma, u));
}

double conditional(const IsingModel& model, StateIndex s, int u) {
  if (u < 0 || u >= model.n()) throw InvalidArgument("site " + std::to_string(u) + " out of range");
  return logistic(2.0 * spin_of(s, u) * model.local_field(s, u));
}

DenseDistribution gibbs_distribution(const IsingModel& model) {
  require_dense(model.n());
  const std::size_t states = num_states(model.n());
  std::vector<double> log_w(states);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(states); ++s) {
    log_w[static_cast<std::size_t>(s)] = energy(model, static_cast<StateIndex>(s));
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  const double z = parallel_sum(states, [&](std::size_t s) { return std::exp(log_w[s] - top); });
  std::vector<double> probs(states);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(states); ++s) {
    probs[static_cast<std::size_t>(s)] = std::exp(log_w[static_cast<std::size_t>(s)] - top) / z;
  }
  return DenseDistribution(model.n(), std::move(probs), true);
}

double gamma_bound(const IsingModel& model) {
  double g = 0.0;
  for (int u = 0; u < model.n(); ++u) {
    double row = std::abs(model.field(u));
    for (const auto& [v, w] : model.neighbors(u)) row += std::abs(w);
    g = std::max(g, row);
  }
  return g;
}

IsingModel random_model(const RandomModelSpec& spec, CounterRng& rng) {
  if (spec.n < 1) throw InvalidArgument("random_model needs n >= 1");
  if (spec.degree < 0 || spec.degree >= spec.n) {
    throw InvalidArgument("infeasible degree d=" + std::to_string(spec.degree) + " for n=" + std::to_string(spec.n));
  }
  if (spec.coupling_min < 0 || spec.coupling_max < spec.coupling_min || spec.field_max < 0) {
    throw InvalidArgument("invalid coupling/field ranges");
  }
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < spec.n; ++u)
    for (int v = u + 1; v < spec.n; ++v) pairs.emplace_back(u, v);
  for (std::size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[rng.below(i)]);

  std::vector<int> degree(static_cast<std::size_t>(spec.n), 0);
  std::vector<Coupling> couplings;
  for (const auto& [u, v] : pairs) {
    if (degree[static_cast<std::size_t>(u)] >= spec.degree || degree[static_cast<std::size_t>(v)] >= spec.degree) continue;
    ++degree[static_cast<std::size_t>(u)];
    ++degree[static_cast<std::size_t>(v)];
    double mag = spec.coupling_min + (spec.coupling_max - spec.coupling_min) * rng.uniform();
    if (mag == 0.0) mag = spec.coupling_max;
    const double sign = (spec.random_signs && rng.bernoulli(0.5)) ? -1.0 : 1.0;
    couplings.push_back({u, v, sign * mag});
  }
  std::vector<double> fields(static_cast<std::size_t>(spec.n));
  for (double& h : fields) h = spec.field_max * (2.0 * rng.uniform() - 1.0);
  return IsingModel(spec.n, std::move(fields), std::move(couplings));
}

// ---------------------------------------------------------------------------
// Model file format

std::string model_to_json(const IsingModel& model) {
  nlohmann::ordered_json j;
  j["n"] = model.n();
  j["fields"] = std::vector<double>(model.fields().begin(), model.fields().end());
  auto cs = nlohmann::ordered_json::array();
  for (const auto& c : model.couplings()) cs.push_back({c.u, c.v, c.value});
  j["couplings"] = cs;
  return j.dump(2);
}

IsingModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("fields")) {
    throw InvalidArgument("model file needs keys \"n\" and \"fields\"");
  }
  const int n = j.at("n").get<int>();
  auto fields = j.at("fields").get<std::vector<double>>();
  std::vector<Coupling> couplings;
  if (j.contains("couplings")) {
    for (const auto& c : j.at("couplings")) {
      if (!c.is_array() || c.size() != 3) throw InvalidArgument("each coupling must be [u, v, value]");
      const int u = c[0].get<int>();
      const int v = c[1].get<int>();
      if (u >= v) {
        throw InvalidArgument("coupling entries must satisfy u < v, got (" + std::to_string(u) + "," +
                              std::to_string(v) + ")");
      }
      couplings.push_back({u, v, c[2].get<double>()});
    }
  }
  return IsingModel(n, std::move(fields), std::move(couplings));
}

}  // namespace msl
