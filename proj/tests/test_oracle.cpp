#include <doctest.h>

#include <cmath>

#include "json.hpp"
#include "msl/oracle.hpp"

using namespace msl;

namespace {

struct Instance {
  IsingModel model;
  DenseDistribution mu;
  SpinKernel kernel;
};

Instance make_instance(int n, std::uint64_t seed) {
  CounterRng rng(seed);
  auto m = random_model({n, std::min(3, n - 1), 0.2, 0.8, 0.3, true}, rng);
  auto mu = gibbs_distribution(m);
  auto k = glauber_kernel(m);
  return {std::move(m), std::move(mu), std::move(k)};
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("report bookkeeping") {
  OracleReport r("demo");
  CHECK(r.pass());
  r.add("a", 1.0, 0.5);
  r.add("b", 1.0, 1.0 + 5e-10);
  CHECK(r.pass());
  CHECK(r.worst_slack() == doctest::Approx(-5e-10));
  r.add("c", 1.0, 1.1);
  CHECK_FALSE(r.pass());
  CHECK(r.violations() == 1);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["check"] == "demo");
  CHECK(j["instances"] == 3);
  CHECK(j["records"].size() == 3);
  CHECK(j["pass"] == false);
}

TEST_CASE("at nu = mu every population check is tight at zero") {
  const auto in = make_instance(5, 3);
  CHECK(conditional_tv_sum(in.model, in.mu) < 1e-12);
  CHECK(std::abs(conditional_kl_sum(in.model, in.mu)) < 1e-12);
  const auto g = check_gradient_bound(in.model, in.kernel, in.mu);
  CHECK(g.pass());
  for (const auto& r : g.records) CHECK(r.achieved < 1e-12);
  const auto v = check_variance_closeness(in.model, in.kernel, in.mu, 0, [](StateIndex) { return 1.0; });
  CHECK(v.records.front().achieved < 1e-12);
}

TEST_CASE("conditional TV bound on restricted measures") {
  const auto in = make_instance(4, 5);
  const std::uint64_t full = (std::uint64_t{1} << 16) - 1;
  for (std::uint64_t mask = 1; mask < full; mask += 97) {
    const auto a = StateSubset::from_mask(16, mask);
    const auto nu = restricted_distribution(in.mu, a);
    const auto r = check_conditional_tv(in.model, in.kernel, nu, "mask");
    CHECK(r.pass());
  }
}

TEST_CASE("convexity bounds at a hand-computed probe") {
  const auto r = check_f_convexity(0.1, {{0.0, 0.1}, {0.05, 0.0}});
  CHECK(r.pass());
  const double df = r.records[0].achieved;
  CHECK(df <= 0.005);
  CHECK(df >= std::exp(-0.2) * 0.005);
  CHECK(r.records[2].achieved == doctest::Approx(0.0));
  CHECK_THROWS_AS(check_f_convexity(0.1, {{0.09, 0.05}}), InvalidArgument);
}

TEST_CASE("curvature with zero perturbation and at equilibrium") {
  const auto in = make_instance(5, 8);
  const std::vector<double> zero(5, 0.0);
  const auto r0 = check_curvature(in.model, in.kernel, in.mu, 2, zero);
  CHECK(r0.pass());
  CHECK(r0.records.front().achieved == doctest::Approx(0.0));
  CounterRng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = random_feasible_delta(in.model, rep % 5, in.model.gamma(), 0.3, rng);
    CHECK(check_curvature(in.model, in.kernel, in.mu, rep % 5, d).pass());
  }
  std::vector<double> huge(5, 10.0);
  CHECK_THROWS_AS(check_curvature(in.model, in.kernel, in.mu, 0, huge), InvalidArgument);
}

TEST_CASE("gradient bound tracks eta across a restricted family") {
  const auto in = make_instance(6, 12);
  const auto nu = restricted_distribution(in.mu, positive_magnetization(6));
  const auto r = check_gradient_bound(in.model, in.kernel, nu);
  CHECK(r.pass());
  CHECK(r.instances() == 6);
}

TEST_CASE("PL gap holds at nu = mu") {
  const auto in = make_instance(4, 2);
  CounterRng rng(4);
  PLGapConfig cfg;
  cfg.samples = 2000;
  cfg.trials = 20;
  const auto r = check_pl_gap(in.model, in.kernel, in.mu, cfg, rng, "mu");
  CHECK(r.statistical);
  CHECK(r.pass());
}

TEST_CASE("full suite at small n passes") {
  SuiteConfig cfg;
  cfg.min_n = 3;
  cfg.max_n = 4;
  cfg.models_per_n = 1;
  cfg.random_nu = 3;
  cfg.subsets = 3;
  cfg.convexity_probes = 500;
  const auto reports = run_oracle_suite(cfg);
  CHECK(reports.size() == 6);
  for (const auto& r : reports) {
    CHECK_MESSAGE(r.pass(), r.check);
    CHECK(r.instances() > 0);
  }
  const auto j = nlohmann::json::parse(reports_to_json(reports));
  CHECK(j["pass"] == true);
}

}
