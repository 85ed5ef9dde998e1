#include "msl/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace msl {

namespace {

using json = nlohmann::ordered_json;

double f_logistic_loss(double x) { return log1p_exp(-2.0 * x); }
double f_logistic_loss_prime(double x) { return -2.0 * logistic(-2.0 * x); }

// P(s_u | s_-u) under nu; NaN when the pair (s, flip_u s) has no mass.
double nu_conditional(const DenseDistribution& nu, StateIndex s, int u) {
  const double a = nu[s], b = nu[flip_bit(s, u)];
  return a + b > 0.0 ? a / (a + b) : std::numeric_limits<double>::quiet_NaN();
}

std::string join_label(const std::string& label, const std::string& extra) {
  if (label.empty()) return extra;
  if (extra.empty()) return label;
  return label + " " + extra;
}

void require_match(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu) {
  if (kernel.n() != model.n() || nu.n() != model.n()) throw InvalidArgument("oracle: model, kernel and nu disagree on n");
}

}  // namespace

// OracleReport ---------------------------------------------------------------

void OracleReport::add(std::string instance, double bound, double achieved) {
  records.push_back({std::move(instance), bound, achieved});
}

void OracleReport::merge(const OracleReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
  if (other.statistical) {
    statistical = true;
    statistical_pass = statistical_pass && other.statistical_pass;
  }
}

double OracleReport::worst_slack() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : records) worst = std::min(worst, r.slack());
  return worst;
}

std::size_t OracleReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const OracleRecord& r) { return r.slack() < -kSlackTolerance; }));
}

bool OracleReport::pass() const { return statistical ? statistical_pass : violations() == 0; }

std::string OracleReport::to_json(bool include_records) const {
  json j;
  j["check"] = check;
  j["instances"] = instances();
  const double ws = worst_slack();
  j["worst_slack"] = std::isfinite(ws) ? json(ws) : json(nullptr);
  j["violations"] = violations();
  j["pass"] = pass();
  j["notes"] = notes;
  if (include_records) {
    json recs = json::array();
    for (const auto& r : records)
      recs.push_back({{"instance", r.instance}, {"bound", r.bound}, {"achieved", r.achieved}, {"slack", r.slack()}});
    j["records"] = std::move(recs);
  }
  return j.dump();
}

std::string reports_to_json(const std::vector<OracleReport>& reports) {
  json arr = json::array();
  bool all = true;
  for (const auto& r : reports) {
    arr.push_back(json::parse(r.to_json(false)));
    all = all && r.pass();
  }
  json out;
  out["pass"] = all;
  out["checks"] = std::move(arr);
  return out.dump(2);
}

// Population quantities ------------------------------------------------------

double conditional_tv_sum(const IsingModel& model, const DenseDistribution& nu) {
  if (nu.n() != model.n()) throw InvalidArgument("conditional_tv_sum: size mismatch");
  double total = 0.0;
  for (StateIndex s = 0; s < nu.size(); ++s) {
    if (nu[s] == 0.0) continue;
    for (int u = 0; u < model.n(); ++u)
      total += nu[s] * std::abs(nu_conditional(nu, s, u) - conditional(model, s, u));
  }
  return total;
}

double conditional_kl_sum(const IsingModel& model, const DenseDistribution& nu) {
  if (nu.n() != model.n()) throw InvalidArgument("conditional_kl_sum: size mismatch");
  double total = 0.0;
  for (StateIndex s = 0; s < nu.size(); ++s) {
    if (nu[s] == 0.0) continue;
    for (int u = 0; u < model.n(); ++u) total += nu[s] * std::log(nu_conditional(nu, s, u) / conditional(model, s, u));
  }
  return total;
}

double min_conditional(const IsingModel& model) {
  require_dense(model.n());
  double lo = 1.0;
  for (StateIndex s = 0; s < num_states(model.n()); ++s)
    for (int u = 0; u < model.n(); ++u) lo = std::min(lo, conditional(model, s, u));
  return lo;
}

// Checks ---------------------------------------------------------------------

OracleReport check_conditional_tv(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                            const std::string& label) {
  require_match(model, kernel, nu);
  OracleReport report{"conditional_tv"};
  const double eta = strong_metastability(nu, kernel);
  report.add(label, eta / kernel.omega_p(), conditional_tv_sum(model, nu));
  return report;
}

OracleReport check_conditional_kl(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                              const std::string& label) {
  require_match(model, kernel, nu);
  OracleReport report{"conditional_kl"};
  const double kl = conditional_kl_sum(model, nu);
  if (!std::isfinite(kl)) {
    report.notes.push_back("skipped " + label + ": infinite conditional KL");
    return report;
  }
  const double eta = strong_metastability(nu, kernel);
  report.add(label, 2.0 * eta / (kernel.omega_p() * min_conditional(model)), kl);
  return report;
}

OracleReport check_gradient_bound(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                                  const std::string& label) {
  require_match(model, kernel, nu);
  OracleReport report{"gradient_bound"};
  const double eta = strong_metastability(nu, kernel);
  const auto data = WeightedSamples::from_distribution(nu);
  for (int u = 0; u < model.n(); ++u) {
    const auto grad = pl_gradient_node(node_parameters(model, u), data, u);
    double inf = 0.0;
    for (double g : grad) inf = std::max(inf, std::abs(g));
    report.add(join_label(label, "u=" + std::to_string(u)), 4.0 * eta / kernel.omega_p(), inf);
  }
  return report;
}

OracleReport check_f_convexity(double gamma, const std::vector<ConvexityProbe>& probes) {
  OracleReport report{"f_convexity"};
  const double lower = std::exp(-2.0 * gamma);
  for (const auto& p : probes) {
    if (std::max(std::abs(p.x), std::abs(p.x + p.eps)) > gamma + 1e-15)
      throw InvalidArgument("check_f_convexity: probe outside [-gamma, gamma]");
    const double df = f_logistic_loss(p.x + p.eps) - f_logistic_loss(p.x) - p.eps * f_logistic_loss_prime(p.x);
    std::ostringstream tag;
    tag << "gamma=" << gamma << " x=" << p.x << " eps=" << p.eps;
    report.add(tag.str() + " upper", p.eps * p.eps / 2.0, df);
    report.add(tag.str() + " lower", -lower * p.eps * p.eps / 2.0, -df);
  }
  return report;
}

std::vector<ConvexityProbe> random_convexity_probes(double gamma, std::size_t count, CounterRng& rng) {
  std::vector<ConvexityProbe> probes;
  probes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = gamma * (2.0 * rng.uniform() - 1.0);
    const double y = gamma * (2.0 * rng.uniform() - 1.0);
    probes.push_back({x, y - x});
  }
  return probes;
}

OracleReport check_curvature(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu, int u,
                             const std::vector<double>& delta, const std::string& label) {
  require_match(model, kernel, nu);
  const auto n = static_cast<std::size_t>(model.n());
  if (delta.size() != n) throw InvalidArgument("check_curvature: delta must have length n");
  const double gamma = model.gamma();
  const auto theta = node_parameters(model, u);
  std::vector<double> moved(n);
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    moved[i] = theta[i] + delta[i];
    l1 += std::abs(moved[i]);
  }
  if (l1 > gamma + 1e-12) throw InvalidArgument("check_curvature: theta* + delta leaves the l1 ball of radius gamma");

  OracleReport report{"curvature"};
  const auto data = WeightedSamples::from_distribution(nu);
  const auto grad = pl_gradient_node(theta, data, u);
  double inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) inner += grad[i] * delta[i];
  const double curvature = pl_loss_node(moved, data, u) - pl_loss_node(theta, data, u) - inner;
  double coupling_inf = 0.0;
  for (std::size_t i = 1; i < n; ++i) coupling_inf = std::max(coupling_inf, std::abs(delta[i]));
  const double eta = strong_metastability(nu, kernel);
  const double bound = std::exp(-4.0 * gamma) / 2.0 * coupling_inf * coupling_inf -
                       4.0 * std::exp(-2.0 * gamma) * eta / kernel.omega_p();
  // Lower bound on the curvature: slack = curvature - bound.
  report.add(join_label(label, "u=" + std::to_string(u)), -bound, -curvature);
  return report;
}

std::vector<double> random_feasible_delta(const IsingModel& model, int u, double gamma, double scale, CounterRng& rng) {
  const auto theta = node_parameters(model, u);
  std::vector<double> target(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) target[i] = theta[i] + scale * (2.0 * rng.uniform() - 1.0);
  const auto projected = project_l1(target, gamma);
  std::vector<double> delta(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) delta[i] = projected[i] - theta[i];
  return delta;
}

OracleReport check_variance_closeness(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                                      int i, const SiteFunction& F, const std::string& label) {
  require_match(model, kernel, nu);
  if (i < 0 || i >= model.n()) throw InvalidArgument("check_variance_closeness: site out of range");
  const StateIndex clear = ~(StateIndex{1} << i);
  double lhs = 0.0, max_f = 0.0;
  for (StateIndex s = 0; s < nu.size(); ++s) {
    const double f = F(s & clear);
    max_f = std::max(max_f, std::abs(f));
    if (nu[s] == 0.0) continue;
    // P(+ | rest) under each distribution; Var = 4 p (1 - p) for a +-1 spin.
    const StateIndex plus = s | (StateIndex{1} << i);
    const double pm = conditional(model, plus, i);
    const double pn = nu_conditional(nu, plus, i);
    lhs += nu[s] * std::abs(f * (4.0 * pm * (1.0 - pm) - 4.0 * pn * (1.0 - pn)));
  }
  OracleReport report{"variance_closeness"};
  const double eta = strong_metastability(nu, kernel);
  report.add(join_label(label, "i=" + std::to_string(i)), 4.0 * eta / kernel.omega_p() * max_f, lhs);
  return report;
}

OracleReport check_pl_gap(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                          const PLGapConfig& config, CounterRng& rng, const std::string& label) {
  require_match(model, kernel, nu);
  if (config.samples == 0 || config.trials == 0) throw InvalidArgument("check_pl_gap: need samples and trials");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw InvalidArgument("check_pl_gap: delta must lie in (0, 1)");
  OracleReport report{"pl_gap"};
  report.statistical = true;
  const double gamma = std::max(model.gamma(), 1e-9);
  const double eta = strong_metastability(nu, kernel);
  const double bound = 2.0 * (1.0 + std::exp(2.0 * gamma)) * eta / kernel.omega_p() +
                       2.0 * gamma * std::sqrt(std::log(1.0 / config.delta) / (2.0 * static_cast<double>(config.samples)));
  std::size_t passed = 0;
  for (std::size_t t = 0; t < config.trials; ++t) {
    const auto data = WeightedSamples::from_samples(sample_dense(nu, config.samples, rng));
    const auto est = fit_all(data, gamma, config.optimizer);
    double gap = 0.0;
    for (int u = 0; u < model.n(); ++u)
      gap += pl_loss_node(node_parameters(model, u), data, u) - pl_loss_node(est.nodes[static_cast<std::size_t>(u)].theta, data, u);
    report.add(join_label(label, "trial=" + std::to_string(t)), bound, gap);
    if (gap <= bound + kSlackTolerance) ++passed;
  }
  const double trials = static_cast<double>(config.trials);
  const double required = 1.0 - config.delta - 3.0 * std::sqrt(config.delta * (1.0 - config.delta) / trials);
  report.statistical_pass = static_cast<double>(passed) / trials >= required;
  std::ostringstream note;
  note << label << " passed " << passed << "/" << config.trials << " trials, required fraction " << required;
  report.notes.push_back(note.str());
  return report;
}

DenseDistribution perturbed_distribution(const DenseDistribution& mu, double strength, CounterRng& rng) {
  std::vector<double> p(mu.size());
  for (std::size_t s = 0; s < p.size(); ++s) {
    const double e = -std::log(1.0 - rng.uniform());
    p[s] = mu[s] * std::pow(e, strength);
  }
  return DenseDistribution(mu.n(), std::move(p), true);
}

DenseDistribution smoothed(const DenseDistribution& nu, double weight) {
  std::vector<double> p(nu.size());
  const double u = 1.0 / static_cast<double>(nu.size());
  for (std::size_t s = 0; s < p.size(); ++s) p[s] = (1.0 - weight) * nu[s] + weight * u;
  return DenseDistribution(nu.n(), std::move(p), true);
}

// Suite ----------------------------------------------------------------------

std::vector<OracleReport> run_oracle_suite(const SuiteConfig& config) {
  if (config.min_n < 2 || config.max_n > 10 || config.min_n > config.max_n)
    throw InvalidArgument("oracle suite: need 2 <= min_n <= max_n <= 10");
  OracleReport tv_report{"conditional_tv"}, kl_report{"conditional_kl"}, gradient{"gradient_bound"}, curvature{"curvature"},
      variance{"variance_closeness"}, convexity{"f_convexity"}, pl_gap{"pl_gap"};
  kl_report.notes.push_back("boundary-supported nu smoothed with weight 1e-6 uniform");
  CounterRng rng(config.seed, 0);

  for (int n = config.min_n; n <= config.max_n; ++n) {
    for (std::size_t mi = 0; mi < config.models_per_n; ++mi) {
      RandomModelSpec spec{n, std::min(3, n - 1), 0.2, 0.8, 0.3, true};
      const auto model = random_model(spec, rng);
      const auto mu = gibbs_distribution(model);
      const std::size_t states = mu.size();

      std::vector<std::pair<std::string, DenseDistribution>> nus;
      nus.emplace_back("nu=mu", mu);
      nus.emplace_back("nu=mu_A[positive]", restricted_distribution(mu, positive_magnetization(n)));
      for (std::size_t k = 0; k < config.subsets; ++k) {
        StateSubset a(states);
        while (a.count() == 0 || a.count() == states) {
          a = StateSubset(states);
          for (StateIndex s = 0; s < states; ++s)
            if (rng.bernoulli(0.5)) a.insert(s);
        }
        nus.emplace_back("nu=mu_A[random#" + std::to_string(k) + "]", restricted_distribution(mu, a));
      }
      for (std::size_t k = 0; k < config.random_nu; ++k)
        nus.emplace_back("nu=perturbed#" + std::to_string(k), perturbed_distribution(mu, 1.0, rng));

      for (KernelKind kind : {KernelKind::glauber, KernelKind::metropolis}) {
        const auto kernel = make_kernel(model, kind);
        for (const auto& [name, nu] : nus) {
          const std::string tag = "n=" + std::to_string(n) + " model=" + std::to_string(mi) + " " + to_string(kind) + " " + name;
          tv_report.merge(check_conditional_tv(model, kernel, nu, tag));
          kl_report.merge(check_conditional_kl(model, kernel, smoothed(nu, 1e-6), tag));
          gradient.merge(check_gradient_bound(model, kernel, nu, tag));
          for (int u = 0; u < n; ++u) {
            for (double scale : {0.05, 0.5}) {
              const auto delta = random_feasible_delta(model, u, model.gamma(), scale, rng);
              curvature.merge(check_curvature(model, kernel, nu, u, delta, tag + " scale=" + std::to_string(scale)));
            }
            variance.merge(check_variance_closeness(model, kernel, nu, u, [](StateIndex) { return 1.0; }, tag + " F=1"));
            const std::uint64_t salt = rng();
            variance.merge(check_variance_closeness(
                model, kernel, nu, u,
                [salt](StateIndex s) { return (std::popcount(s * 0x9e3779b97f4a7c15ULL ^ salt) & 1) ? 1.0 : -1.0; },
                tag + " F=sign"));
          }
        }
        if (config.include_pl_gap && kind == KernelKind::glauber) {
          PLGapConfig gap;
          gap.samples = 2000;
          gap.trials = 20;
          pl_gap.merge(check_pl_gap(model, kernel, restricted_distribution(mu, positive_magnetization(n)), gap, rng,
                                    "n=" + std::to_string(n) + " model=" + std::to_string(mi) + " mu_A[positive]"));
        }
      }
    }
  }
  for (double gamma : {0.5, 1.0, 2.0})
    convexity.merge(check_f_convexity(gamma, random_convexity_probes(gamma, config.convexity_probes, rng)));

  std::vector<OracleReport> out{tv_report, kl_report, gradient, curvature, variance, convexity};
  if (config.include_pl_gap) out.push_back(pl_gap);
  return out;
}

}  // namespace msl
