#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msl/spin_models.hpp"

using namespace msl;

namespace {

IsingModel small_model() {
  return IsingModel(4, {0.1, -0.2, 0.3, 0.0}, {{0, 1, 0.5}, {1, 2, -0.4}, {3, 2, 0.25}, {0, 3, 0.1}});
}

}  // namespace

TEST_SUITE("spin_models") {

TEST_CASE("state encoding round-trips") {
  for (int n : {1, 3, 7, 14}) {
    for (StateIndex s = 0; s < num_states(n); s += (n == 14 ? 37 : 1)) {
      const auto sigma = SpinConfiguration::from_index(s, n);
      CHECK(sigma.index() == s);
      for (int u = 0; u < n; ++u) CHECK(sigma[u] == spin_of(s, u));
    }
  }
  CHECK(SpinConfiguration::all(5, 1).index() == 31);
  CHECK(SpinConfiguration::all(5, -1).index() == 0);
  CHECK_THROWS_AS(SpinConfiguration({1, 0, -1}), InvalidArgument);
  CHECK_THROWS_AS(SpinConfiguration::from_index(8, 3), InvalidArgument);
}

TEST_CASE("model construction normalizes and rejects bad couplings") {
  const IsingModel m(3, {0, 0, 0}, {{2, 0, 0.7}});
  CHECK(m.coupling(0, 2) == doctest::Approx(0.7));
  CHECK(m.coupling(2, 0) == doctest::Approx(0.7));
  CHECK(m.coupling(0, 1) == 0.0);
  CHECK_THROWS_AS(IsingModel(3, {0, 0, 0}, {{1, 1, 0.2}}), InvalidArgument);
  CHECK_THROWS_AS(IsingModel(3, {0, 0, 0}, {{0, 1, 0.2}, {1, 0, 0.3}}), InvalidArgument);
  CHECK_THROWS_AS(IsingModel(3, {0, 0}, {}), InvalidArgument);
  CHECK_THROWS_AS(IsingModel(3, {0, 0, 0}, {{0, 3, 0.1}}), InvalidArgument);
}

TEST_CASE("energy matches a direct double sum") {
  const auto m = small_model();
  for (StateIndex s = 0; s < 16; ++s) {
    double e = 0.0;
    for (int u = 0; u < 4; ++u) {
      e += m.field(u) * spin_of(s, u);
      for (int v = u + 1; v < 4; ++v) e += m.coupling(u, v) * spin_of(s, u) * spin_of(s, v);
    }
    CHECK(energy(m, s) == doctest::Approx(e).epsilon(1e-14));
    CHECK(energy(m, SpinConfiguration::from_index(s, 4)) == doctest::Approx(e).epsilon(1e-14));
  }
}

TEST_CASE("conditionals agree with the Gibbs ratio and respect the gamma bounds") {
  CounterRng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 3 + rep;
    const auto m = random_model({n, std::min(3, n - 1), 0.2, 0.8, 0.5, true}, rng);
    const auto mu = gibbs_distribution(m);
    const double g = m.gamma();
    const double lo = 1.0 / (1.0 + std::exp(2 * g));
    const double hi = 1.0 / (1.0 + std::exp(-2 * g));
    for (StateIndex s = 0; s < num_states(n); ++s) {
      for (int u = 0; u < n; ++u) {
        const double c = conditional(m, s, u);
        CHECK(std::abs(c - mu[s] / (mu[s] + mu[flip_bit(s, u)])) < 1e-12);
        CHECK(c >= lo - 1e-15);
        CHECK(c <= hi + 1e-15);
      }
    }
  }
}

TEST_CASE("gibbs distribution sums to one and gamma is the max row l1 norm") {
  const auto m = small_model();
  const auto mu = gibbs_distribution(m);
  CHECK(std::accumulate(mu.probs().begin(), mu.probs().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  // node 1: 0.2 + 0.5 + 0.4
  CHECK(m.gamma() == doctest::Approx(1.1));
  CHECK(gamma_bound(m) == doctest::Approx(1.1));
}

TEST_CASE("gibbs survives large couplings") {
  const IsingModel m(2, {0, 0}, {{0, 1, 400.0}});
  const auto mu = gibbs_distribution(m);
  CHECK(mu[0] == doctest::Approx(0.5));
  CHECK(mu[3] == doctest::Approx(0.5));
  CHECK(log1p_exp(800.0) == doctest::Approx(800.0));
  CHECK(logistic(-800.0) >= 0.0);
}

TEST_CASE("random models respect the generator contract") {
  CounterRng a(5), b(5);
  const RandomModelSpec spec{16, 3, 0.6, 0.6, 0.0, true};
  const auto m1 = random_model(spec, a);
  const auto m2 = random_model(spec, b);
  CHECK(model_to_json(m1) == model_to_json(m2));
  for (int u = 0; u < 16; ++u) {
    CHECK(m1.neighbors(u).size() <= 3);
    for (const auto& [j, v] : m1.neighbors(u)) CHECK(std::abs(v) >= 0.6 - 1e-15);
  }
  CounterRng c(3);
  const auto indep = random_model({5, 0, 0.1, 0.2, 0.3, true}, c);
  CHECK(indep.couplings().empty());
  CHECK_THROWS_AS(random_model({4, 4, 0.1, 0.2, 0.0, true}, c), InvalidArgument);
}

TEST_CASE("model JSON round-trip and rejection") {
  const auto m = small_model();
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.n() == m.n());
  for (int u = 0; u < 4; ++u) {
    CHECK(back.field(u) == m.field(u));
    for (int v = 0; v < 4; ++v)
      if (u != v) CHECK(back.coupling(u, v) == m.coupling(u, v));
  }
  CHECK_THROWS_AS(model_from_json(R"({"n":2,"fields":[0,0],"couplings":[[1,1,0.2]]})"), InvalidArgument);
  CHECK_THROWS_AS(model_from_json(R"({"n":2,"fields":[0,0],"couplings":[[0,1,0.2],[0,1,0.1]]})"), InvalidArgument);
  CHECK_THROWS_AS(model_from_json("not json"), InvalidArgument);
}

TEST_CASE("subsets and distributions") {
  const auto pos = positive_magnetization(4);
  CHECK(pos.count() == 5);
  CHECK(pos.complement().count() == 11);
  const auto u = DenseDistribution::uniform(4);
  CHECK(mass(u, pos) == doctest::Approx(5.0 / 16));
  CHECK_THROWS_AS(DenseDistribution(2, {0.5, 0.5, 0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(DenseDistribution(2, {0.5, -0.5, 0.5, 0.5}, true), InvalidArgument);
  const DenseDistribution r(2, {1, 1, 1, 1}, true);
  CHECK(r[2] == doctest::Approx(0.25));
  CHECK(total_variation(u.probs(), DenseDistribution::point_mass(4, 0).probs()) == doctest::Approx(15.0 / 16));
  CHECK_THROWS_AS(require_dense(17), InvalidArgument);
}

}
