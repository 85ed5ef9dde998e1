#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "msl/chains.hpp"

using namespace msl;

namespace {

IsingModel model_for(int n, std::uint64_t seed) {
  CounterRng rng(seed);
  return random_model({n, std::min(n - 1, 3), 0.2, 0.9, 0.4, true}, rng);
}

DenseDistribution random_nu(int n, CounterRng& rng) {
  std::vector<double> p(num_states(n));
  for (auto& x : p) x = -std::log(1.0 - rng.uniform());
  return DenseDistribution(n, std::move(p), true);
}

// Second eigenvalue of the symmetrized reversible chain by dense eigensolve.
double eigen_gap(const GenericChain& c) {
  const auto L = static_cast<Eigen::Index>(c.states());
  Eigen::MatrixXd s(L, L);
  const auto pi = c.stationary();
  for (Eigen::Index i = 0; i < L; ++i)
    for (Eigen::Index j = 0; j < L; ++j)
      s(i, j) = std::sqrt(pi[static_cast<std::size_t>(i)] / pi[static_cast<std::size_t>(j)]) *
                c(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  return 1.0 - es.eigenvalues()(L - 2);
}

double brute_conductance(const GenericChain& c) {
  const std::size_t L = c.states();
  double best = 1e300;
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << L); ++mask) {
    double m = 0.0, flow = 0.0;
    for (std::size_t j = 0; j < L; ++j)
      if ((mask >> j) & 1U) m += c.stationary()[j];
    if (!(m < 0.5)) continue;
    for (std::size_t j = 0; j < L; ++j) {
      if (!((mask >> j) & 1U)) continue;
      for (std::size_t i = 0; i < L; ++i)
        if (!((mask >> i) & 1U)) flow += c(j, i) * c.stationary()[j];
    }
    best = std::min(best, flow / m);
  }
  return best;
}

}  // namespace

TEST_SUITE("chains") {

TEST_CASE("kernels are stochastic and satisfy detailed balance") {
  for (int n = 2; n <= 6; ++n) {
    const auto m = model_for(n, 100 + static_cast<std::uint64_t>(n));
    const auto mu = gibbs_distribution(m);
    for (auto kind : {KernelKind::glauber, KernelKind::metropolis}) {
      const auto k = make_kernel(m, kind);
      for (StateIndex s = 0; s < num_states(n); ++s) {
        double row = k.stay(s);
        for (int u = 0; u < n; ++u) row += k.flip(s, u);
        CHECK(std::abs(row - 1.0) < 1e-12);
      }
      CHECK(detailed_balance_residual(k, mu) < 1e-12);
      const auto next = step_distribution(mu.probs(), k);
      CHECK(total_variation(next, mu.probs()) < 1e-12);
    }
  }
}

TEST_CASE("Glauber flip probability and omega") {
  const auto m = model_for(4, 7);
  const auto k = glauber_kernel(m);
  for (StateIndex s = 0; s < 16; ++s)
    for (int u = 0; u < 4; ++u) CHECK(k.flip(s, u) == doctest::Approx(conditional(m, flip_bit(s, u), u) / 4));
  CHECK(k.omega_p() == doctest::Approx(0.25));
  CHECK(k.transition(0, 3) == 0.0);
  CHECK(k.transition(0, 1) == doctest::Approx(k.flip(0, 0)));
}

TEST_CASE("Metropolis omega matches the analytic minimum ratio") {
  for (int n = 2; n <= 6; ++n) {
    const auto m = model_for(n, 40 + static_cast<std::uint64_t>(n));
    const auto k = metropolis_kernel(m);
    CHECK(k.omega_p() >= analytic_omega_p(m, KernelKind::metropolis) - 1e-12);
    CHECK(k.omega_p() >= 1.0 / n - 1e-12);
    CHECK(analytic_omega_p(m, KernelKind::glauber) == doctest::Approx(1.0 / n));
  }
}

TEST_CASE("strong metastability dominates weak metastability") {
  CounterRng rng(9);
  for (int n : {3, 5}) {
    const auto m = model_for(n, 200 + static_cast<std::uint64_t>(n));
    for (auto kind : {KernelKind::glauber, KernelKind::metropolis}) {
      const auto k = make_kernel(m, kind);
      for (int rep = 0; rep < 100; ++rep) {
        const auto nu = random_nu(n, rng);
        CHECK(strong_metastability(nu, k) >= weak_metastability(nu, k) - 1e-15);
      }
    }
  }
}

TEST_CASE("stationary distribution has zero metastability") {
  const auto m = model_for(5, 3);
  const auto mu = gibbs_distribution(m);
  const auto k = glauber_kernel(m);
  CHECK(strong_metastability(mu, k) < 1e-14);
  CHECK(weak_metastability(mu, k) < 1e-14);
}

TEST_CASE("restricted Gibbs measures have strong eta equal to conductance") {
  for (int n : {2, 3, 4}) {
    const auto m = model_for(n, 300 + static_cast<std::uint64_t>(n));
    const auto mu = gibbs_distribution(m);
    const auto k = glauber_kernel(m);
    const std::uint64_t full = (std::uint64_t{1} << num_states(n)) - 1;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
      const auto a = StateSubset::from_mask(num_states(n), mask);
      const auto nu = restricted_distribution(mu, a);
      CHECK(std::abs(strong_metastability(nu, k) - conductance(k, mu, a)) < 1e-12);
    }
  }
}

TEST_CASE("GenericChain and SpinKernel agree") {
  const auto m = model_for(4, 17);
  const auto mu = gibbs_distribution(m);
  const auto k = metropolis_kernel(m);
  const auto g = GenericChain::from_kernel(k, mu);
  CounterRng rng(2);
  const auto nu = random_nu(4, rng);
  CHECK(strong_metastability(nu.probs(), g) == doctest::Approx(strong_metastability(nu, k)).epsilon(1e-12));
  CHECK(weak_metastability(nu.probs(), g) == doctest::Approx(weak_metastability(nu, k)).epsilon(1e-12));
  CHECK(l1_displacement(nu.probs(), g) == doctest::Approx(2 * weak_metastability(nu, k)).epsilon(1e-12));
  const auto a = positive_magnetization(4);
  CHECK(conductance(g, a) == doctest::Approx(conductance(k, mu, a)).epsilon(1e-12));
}

TEST_CASE("GenericChain validation") {
  CHECK_THROWS_AS(GenericChain(2, {0.5, 0.4, 0.5, 0.5}, {0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(GenericChain(2, {0.9, 0.1, 0.5, 0.5}, {0.5, 0.5}), InvalidArgument);
  const auto c = make_generic_chain(2, {0.9, 0.1, 0.5, 0.5});
  CHECK(c.stationary()[0] == doctest::Approx(5.0 / 6));
  CHECK_THROWS_AS(cycle_walk(2), InvalidArgument);
}

TEST_CASE("spectral gap matches a dense eigensolver") {
  CounterRng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t L = 3 + rng.below(10);
    const auto c = random_reversible_chain(L, 0.3, rng);
    CHECK(detailed_balance_residual(c) < 1e-12);
    CHECK(spectral_gap(c) == doctest::Approx(eigen_gap(c)).epsilon(1e-6));
  }
  // even cycle: lambda_2 = cos(2 pi / L), lambda_min = -1
  const auto cyc = cycle_walk(8);
  CHECK(spectral_gap(cyc) == doctest::Approx(1.0 - std::cos(2 * M_PI / 8)).epsilon(1e-6));
}

TEST_CASE("chain conductance matches brute force and the Cheeger sandwich") {
  CounterRng rng(33);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t L = 3 + rng.below(8);
    const auto c = random_reversible_chain(L, 0.4, rng);
    const auto phi = chain_conductance(c);
    CHECK(phi.value == doctest::Approx(brute_conductance(c)).epsilon(1e-12));
    const double gap = spectral_gap(c);
    CHECK(2 * phi.value >= gap - 1e-9);
    CHECK(gap >= phi.value * phi.value / 2 - 1e-9);
  }
  CHECK_THROWS_AS(chain_conductance(cycle_walk(21)), InvalidArgument);
}

TEST_CASE("tent example quantities") {
  for (std::size_t L : {4, 8, 16, 64}) {
    const auto t = tent_example(L);
    const double l = static_cast<double>(L);
    CHECK(t.normalizer == doctest::Approx(l * l * l / 4));
    CHECK(std::abs(t.eta_strong - l * l / (2 * t.normalizer)) < 1e-12);
    CHECK(std::abs(t.eta_weak - l / t.normalizer) < 1e-12);
  }
  CHECK_THROWS_AS(tent_example(5), InvalidArgument);
}

TEST_CASE("mixing lower bound") {
  CHECK(mixing_lower_bound(0.5, 0.1, 0.05) == 5);
  CHECK(mixing_lower_bound(0.05, 0.1, 0.1) == 0);
  CHECK_THROWS_AS(mixing_lower_bound(0.5, 0.0, 0.1), InvalidArgument);
}

TEST_CASE("run_chain on the zero model is unbiased") {
  const ImplicitSampler sampler(IsingModel::zero(8), KernelKind::glauber);
  CounterRng rng(4);
  const auto samples = run_chain(sampler, SpinConfiguration::all(8, 1), {400000, 1000, 50}, rng);
  CHECK(samples.size() == (400000 - 1000) / 50);
  for (int u = 0; u < 8; ++u) {
    double mean = 0.0;
    for (std::size_t t = 0; t < samples.size(); ++t) mean += samples.row(t)[static_cast<std::size_t>(u)];
    mean /= static_cast<double>(samples.size());
    // thinned samples at 50 steps are close to independent for 8 sites
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(samples.size())) * 1.5);
  }
}

TEST_CASE("run_chain determinism and validation") {
  CounterRng r(1);
  const auto m = random_model({6, 2, 0.3, 0.5, 0.1, true}, r);
  const ImplicitSampler s(m, KernelKind::metropolis);
  CounterRng a(77), b(77);
  const auto x = run_chain(s, SpinConfiguration::all(6, -1), {5000, 100, 7}, a);
  const auto y = run_chain(s, SpinConfiguration::all(6, -1), {5000, 100, 7}, b);
  CHECK(x.data == y.data);
  CHECK(x.seed == 77);
  CHECK_THROWS_AS(run_chain(s, SpinConfiguration::all(6, 1), {10, 0, 0}, a), InvalidArgument);
  CHECK_THROWS_AS(run_chain(s, SpinConfiguration::all(6, 1), {10, 11, 1}, a), InvalidArgument);
  CHECK_THROWS_AS(run_chain(s, SpinConfiguration::all(5, 1), {10, 0, 1}, a), InvalidArgument);
}

TEST_CASE("stuck ferromagnet stays in the positive well") {
  const auto m = IsingModel::curie_weiss(64, 2.0, 0.0);
  const ImplicitSampler s(m, KernelKind::glauber);
  CounterRng rng(8);
  const auto x = run_chain(s, SpinConfiguration::all(64, 1), {64 * 2000, 0, 64}, rng);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto row = x.row(t);
    CHECK(std::accumulate(row.begin(), row.end(), 0) > 0);
  }
}

TEST_CASE("sample_dense reproduces the target law") {
  const auto m = model_for(3, 5);
  const auto mu = gibbs_distribution(m);
  CounterRng rng(10);
  const std::size_t count = 200000;
  const auto x = sample_dense(mu, count, rng);
  CHECK(x.chain == "exact");
  std::vector<double> freq(8, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    StateIndex s = 0;
    for (int u = 0; u < 3; ++u)
      if (x.row(t)[static_cast<std::size_t>(u)] > 0) s |= StateIndex{1} << u;
    freq[s] += 1.0 / count;
  }
  for (StateIndex s = 0; s < 8; ++s) CHECK(std::abs(freq[s] - mu[s]) < 5 * std::sqrt(mu[s] / count) + 1e-6);
}

}
