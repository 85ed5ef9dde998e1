#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "msl/parallel.hpp"
#include "msl/serial_reference.hpp"

using namespace msl;

namespace {

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

volatile double sink = 0.0;

void row(const char* name, double serial, double parallel) {
  std::printf("%-22s %12.6f %12.6f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 12;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  set_threads(resolve_threads(0));
  CounterRng rng(1);
  const auto model = random_model({n, 3, 0.2, 0.8, 0.3, true}, rng);
  const auto mu = gibbs_distribution(model);
  const auto kernel = glauber_kernel(model);
  const auto a = positive_magnetization(n);
  const auto nu = restricted_distribution(mu, a);
  const auto data = WeightedSamples::from_samples(sample_dense(nu, 100000, rng));
  const auto theta = node_parameters(model, 0);

  std::printf("n=%d threads=%d distinct_rows=%zu\n", n, max_threads(), data.size());
  std::printf("%-22s %12s %12s %9s\n", "kernel", "serial[s]", "openmp[s]", "speedup");
  row("gibbs_distribution", best_of(reps, [&] { sink = serial::gibbs_distribution(model)[0]; }),
      best_of(reps, [&] { sink = gibbs_distribution(model)[0]; }));
  row("strong_metastability", best_of(reps, [&] { sink = serial::strong_metastability(nu, kernel); }),
      best_of(reps, [&] { sink = strong_metastability(nu, kernel); }));
  row("weak_metastability", best_of(reps, [&] { sink = serial::weak_metastability(nu, kernel); }),
      best_of(reps, [&] { sink = weak_metastability(nu, kernel); }));
  row("conductance", best_of(reps, [&] { sink = serial::conductance(kernel, mu, a); }),
      best_of(reps, [&] { sink = conductance(kernel, mu, a); }));
  row("pl_loss_node", best_of(reps, [&] { sink = serial::pl_loss_node(theta, data, 0); }),
      best_of(reps, [&] { sink = pl_loss_node(theta, data, 0); }));
  row("fit_all", best_of(1, [&] { sink = serial::fit_all(data, 2.0).nodes[0].loss; }),
      best_of(1, [&] { sink = fit_all(data, 2.0).nodes[0].loss; }));
  return 0;
}
