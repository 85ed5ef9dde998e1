#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "msl/chains.hpp"
#include "msl/learner.hpp"
#include "msl/rng.hpp"
#include "msl/spin_models.hpp"

namespace msl {

inline constexpr double kSlackTolerance = 1e-9;

struct OracleRecord {
  std::string instance;
  double bound = 0.0;
  double achieved = 0.0;
  double slack() const { return bound - achieved; }
};

struct OracleReport {
  explicit OracleReport(std::string name = "") : check(std::move(name)) {}

  std::string check;
  std::vector<OracleRecord> records;
  std::vector<std::string> notes;
  /// Overrides the slack rule for statistical checks when set.
  bool statistical = false;
  bool statistical_pass = true;

  void add(std::string instance, double bound, double achieved);
  void merge(const OracleReport& other);
  std::size_t instances() const { return records.size(); }
  double worst_slack() const;
  std::size_t violations() const;
  bool pass() const;
  /// JSON object: check, instances, worst_slack, violations, pass, notes, records.
  std::string to_json(bool include_records = true) const;
};

/// sum_u sum_s nu(s) |nu(.|s_-u) - mu(.|s_-u)|_TV.
double conditional_tv_sum(const IsingModel& model, const DenseDistribution& nu);
/// sum_u E_nu KL(nu(.|s_-u) || mu(.|s_-u)).
double conditional_kl_sum(const IsingModel& model, const DenseDistribution& nu);
/// min over (s, u) of mu(s_u | s_-u).
double min_conditional(const IsingModel& model);

OracleReport check_conditional_tv(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                            const std::string& label = "");
OracleReport check_conditional_kl(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                              const std::string& label = "");
/// Population PL gradient at the true parameters, one record per node.
OracleReport check_gradient_bound(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                                  const std::string& label = "");

struct ConvexityProbe {
  double x;
  double eps;
};
/// Two records per probe: the upper bound eps^2/2 and the lower bound e^{-2 gamma} eps^2/2.
OracleReport check_f_convexity(double gamma, const std::vector<ConvexityProbe>& probes);
std::vector<ConvexityProbe> random_convexity_probes(double gamma, std::size_t count, CounterRng& rng);

/// delta L(Delta) >= (e^{-4 gamma}/2) |Delta_-u|_inf^2 - 4 e^{-2 gamma} eta / omega_P with gamma = model.gamma().
OracleReport check_curvature(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu, int u,
                             const std::vector<double>& delta, const std::string& label = "");
/// Random Delta with |theta*_u + Delta|_1 <= gamma.
std::vector<double> random_feasible_delta(const IsingModel& model, int u, double gamma, double scale, CounterRng& rng);

/// F is evaluated on states with bit i cleared, so it only sees s_-i.
using SiteFunction = std::function<double(StateIndex)>;
OracleReport check_variance_closeness(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                                      int i, const SiteFunction& F, const std::string& label = "");

struct PLGapConfig {
  std::size_t samples = 1000;
  double delta = 0.05;
  std::size_t trials = 20;
  OptimizerConfig optimizer{1e-8, 5000};
};

/// Empirical PL loss gap over repeated draws from nu; passes when the
/// fraction of satisfied trials is at least 1 - delta - 3 sqrt(delta (1 - delta) / trials).
OracleReport check_pl_gap(const IsingModel& model, const SpinKernel& kernel, const DenseDistribution& nu,
                          const PLGapConfig& config, CounterRng& rng, const std::string& label = "");

/// nu proportional to mu * Exp(1) noise raised to `strength`.
DenseDistribution perturbed_distribution(const DenseDistribution& mu, double strength, CounterRng& rng);
/// (1 - weight) nu + weight * uniform.
DenseDistribution smoothed(const DenseDistribution& nu, double weight);

struct SuiteConfig {
  int min_n = 3;
  int max_n = 6;
  std::uint64_t seed = 1;
  std::size_t models_per_n = 2;
  std::size_t random_nu = 10;
  std::size_t subsets = 12;
  std::size_t convexity_probes = 10000;
  bool include_pl_gap = false;
};

/// Runs every check over generated instances; one report per check.
std::vector<OracleReport> run_oracle_suite(const SuiteConfig& config);

std::string reports_to_json(const std::vector<OracleReport>& reports);

}  // namespace msl
