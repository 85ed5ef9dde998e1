#include <doctest.h>

#include <cmath>

#include "msl/parallel.hpp"
#include "msl/serial_reference.hpp"

using namespace msl;

TEST_SUITE("parallel") {

TEST_CASE("parallel_sum is independent of the thread count") {
  auto fn = [](std::size_t i) { return 1.0 / (1.0 + static_cast<double>(i)); };
  set_threads(1);
  const double one = parallel_sum(100000, fn);
  set_threads(4);
  const double four = parallel_sum(100000, fn);
  set_threads(max_threads());
  CHECK(one == four);
}

TEST_CASE("OpenMP kernels agree with the serial reference") {
  CounterRng rng(77);
  for (int n : {4, 8, 10}) {
    const auto m = random_model({n, 3, 0.2, 0.7, 0.3, true}, rng);
    const auto mu = gibbs_distribution(m);
    const auto ref = serial::gibbs_distribution(m);
    for (StateIndex s = 0; s < mu.size(); ++s) CHECK(mu[s] == doctest::Approx(ref[s]).epsilon(1e-13));

    const auto k = glauber_kernel(m);
    const auto table = serial::glauber_flip_table(m);
    for (StateIndex s = 0; s < mu.size(); ++s)
      for (int u = 0; u < n; ++u) CHECK(k.flip(s, u) == table[s * static_cast<std::size_t>(n) + static_cast<std::size_t>(u)]);

    const auto a = positive_magnetization(n);
    const auto nu = restricted_distribution(mu, a);
    CHECK(strong_metastability(nu, k) == doctest::Approx(serial::strong_metastability(nu, k)).epsilon(1e-12));
    CHECK(weak_metastability(nu, k) == doctest::Approx(serial::weak_metastability(nu, k)).epsilon(1e-12));
    CHECK(conductance(k, mu, a) == doctest::Approx(serial::conductance(k, mu, a)).epsilon(1e-12));

    const auto data = WeightedSamples::from_samples(sample_dense(nu, 2000, rng));
    const auto theta = node_parameters(m, 1);
    CHECK(pl_loss_node(theta, data, 1) == doctest::Approx(serial::pl_loss_node(theta, data, 1)).epsilon(1e-13));
    const auto g = pl_gradient_node(theta, data, 1);
    const auto gs = serial::pl_gradient_node(theta, data, 1);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(gs[i]).epsilon(1e-12));

    const auto est = fit_all(data, 2.0);
    const auto est_ref = serial::fit_all(data, 2.0);
    for (int u = 0; u < n; ++u)
      for (std::size_t i = 0; i < est.nodes[static_cast<std::size_t>(u)].theta.size(); ++i)
        CHECK(est.nodes[static_cast<std::size_t>(u)].theta[i] ==
              doctest::Approx(est_ref.nodes[static_cast<std::size_t>(u)].theta[i]).epsilon(1e-9));
  }
}

}
