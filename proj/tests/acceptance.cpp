#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "msl/chains.hpp"
#include "msl/curie_weiss.hpp"
#include "msl/learner.hpp"
#include "msl/oracle.hpp"

using namespace msl;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

DenseDistribution exponential_nu(int n, CounterRng& rng) {
  std::vector<double> p(num_states(n));
  for (auto& x : p) x = -std::log(1.0 - rng.uniform());
  return DenseDistribution(n, std::move(p), true);
}

StateSubset random_subset(std::size_t states, CounterRng& rng) {
  StateSubset a(states);
  while (a.count() == 0 || a.count() == states) {
    a = StateSubset(states);
    for (StateIndex s = 0; s < states; ++s)
      if (rng.bernoulli(0.5)) a.insert(s);
  }
  return a;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// 1 ---------------------------------------------------------------------------

Outcome tent() {
  Outcome out;
  double worst_weak = 0.0, worst_strong = 0.0, worst_l1 = 0.0;
  for (std::size_t L : {4, 8, 16, 64}) {
    const auto t = tent_example(L);
    const double l = static_cast<double>(L);
    worst_weak = std::max(worst_weak, std::abs(t.eta_weak - 2 * l / t.normalizer));
    worst_strong = std::max(worst_strong, std::abs(t.eta_strong - l * l / (2 * t.normalizer)));
    worst_l1 = std::max(worst_l1, std::abs(l1_displacement(t.nu, t.chain) - 2 * l / t.normalizer));
  }
  out.pass = worst_weak <= 1e-12 && worst_strong <= 1e-12;
  out.detail = "max|weak - 2L/Z| = " + fmt("%.3e", worst_weak) + ", max|strong - L^2/(2Z)| = " +
               fmt("%.3e", worst_strong) + ", max|l1 displacement - 2L/Z| = " + fmt("%.3e", worst_l1);
  return out;
}

// 2 ---------------------------------------------------------------------------

Outcome restricted_identity() {
  CounterRng rng(2002);
  double worst = 0.0;
  std::size_t subsets = 0;
  for (int m = 0; m < 20; ++m) {
    const auto model = random_model({4, 3, 0.1, 1.0, 0.5, true}, rng);
    const auto mu = gibbs_distribution(model);
    const auto kernel = glauber_kernel(model);
    for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << 16); ++mask) {
      const auto a = StateSubset::from_mask(16, mask);
      worst = std::max(worst, std::abs(strong_metastability(restricted_distribution(mu, a), kernel) -
                                       conductance(kernel, mu, a)));
      ++subsets;
    }
  }
  return {worst <= 1e-12, std::to_string(subsets) + " subsets, max deviation " + fmt("%.3e", worst)};
}

// 3 ---------------------------------------------------------------------------

Outcome conditional_tv_bound() {
  CounterRng rng(3003);
  OracleReport all("conditional_tv");
  for (int n = 3; n <= 6; ++n) {
    for (int mi = 0; mi < 3; ++mi) {
      const auto model = random_model({n, std::min(3, n - 1), 0.2, 0.9, 0.4, true}, rng);
      const auto mu = gibbs_distribution(model);
      for (KernelKind kind : {KernelKind::glauber, KernelKind::metropolis}) {
        const auto kernel = make_kernel(model, kind);
        if (n == 4) {
          for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << 16); ++mask)
            all.merge(check_conditional_tv(model, kernel, restricted_distribution(mu, StateSubset::from_mask(16, mask))));
        }
        for (int r = 0; r < 100; ++r) {
          const auto nu = r % 2 == 0 ? exponential_nu(n, rng) : perturbed_distribution(mu, 1.0 + r / 50.0, rng);
          all.merge(check_conditional_tv(model, kernel, nu));
        }
      }
    }
  }
  return {all.pass(), std::to_string(all.instances()) + " instances, " + std::to_string(all.violations()) +
                          " violations, worst slack " + fmt("%.3e", all.worst_slack())};
}

// 4 ---------------------------------------------------------------------------

Outcome cheeger() {
  CounterRng rng(4004);
  std::size_t chains = 0, bad = 0;
  double worst = std::numeric_limits<double>::infinity();
  auto check = [&](const GenericChain& c) {
    const double phi = chain_conductance(c).value;
    const double gap = spectral_gap(c);
    const double s = std::min(2 * phi - gap, gap - phi * phi / 2);
    worst = std::min(worst, s);
    if (s < -1e-9) ++bad;
    ++chains;
  };
  for (int i = 0; i < 50; ++i) check(random_reversible_chain(3 + rng.below(10), 0.3, rng));
  for (int n = 2; n <= 4; ++n) {
    for (int mi = 0; mi < 10; ++mi) {
      const auto model = random_model({n, n - 1, 0.1, 1.2, 0.5, mi % 2 == 0}, rng);
      check(GenericChain::from_kernel(glauber_kernel(model), gibbs_distribution(model)));
    }
  }
  return {bad == 0, std::to_string(chains) + " chains, " + std::to_string(bad) + " violations, worst slack " +
                        fmt("%.3e", worst)};
}

// 5 ---------------------------------------------------------------------------

// Mean-field fallback when the finite-difference families are undefined at small n:
// Taylor coefficients of the n -> infinity free energy at its minimizer.
struct MeanField {
  double m = 0.0;
  double d2 = 0.0, d3 = 0.0, d4 = 0.0;
};

MeanField mean_field(const CWModel& cw) {
  auto grad = [&](double m) { return -cw.J * m + cw.h + std::atanh(m); };
  auto curv = [&](double m) { return -cw.J + 1.0 / (1.0 - m * m); };
  std::vector<double> roots;
  const int points = 20000;
  double x0 = -1 + 1e-9, g0 = grad(x0);
  for (int i = 1; i <= points; ++i) {
    const double x1 = -1 + 1e-9 + (2 - 2e-9) * i / points;
    const double g1 = grad(x1);
    if ((g0 < 0) != (g1 < 0)) {
      double a = x0, b = x1;
      for (int it = 0; it < 200; ++it) {
        const double c = 0.5 * (a + b);
        if ((grad(c) < 0) == (grad(a) < 0)) a = c;
        else b = c;
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    g0 = g1;
  }
  double best = roots.front();
  for (double r : roots)
    if (curv(r) > 0 && r > best) best = r;
  const double q = 1.0 - best * best;
  return {best, curv(best), 2 * best / (q * q), (2 + 6 * best * best) / (q * q * q)};
}

std::vector<std::pair<std::string, MagnetizationDistribution>> cw_families(const CWModel& cw, int& fallbacks) {
  std::vector<std::pair<std::string, MagnetizationDistribution>> out;
  out.emplace_back("exact", metastable_distribution(cw, exact_phi(cw)));
  try {
    const auto r = find_m0(cw);
    const auto qa = quadratic_ansatz(cw, r.m0_continuous);
    auto t2 = metastable_distribution(cw, taylor_phi(cw, r.m0_continuous, 2));
    auto t4 = metastable_distribution(cw, taylor_phi(cw, r.m0_continuous, 4));
    auto tr = metastable_distribution(cw, truncated_phi(cw, r.m0_continuous, qa.a));
    out.emplace_back("taylor2", std::move(t2));
    out.emplace_back("taylor4", std::move(t4));
    out.emplace_back("truncated", std::move(tr));
    return out;
  } catch (const InvalidArgument&) {
    ++fallbacks;
  }
  const auto mf = mean_field(cw);
  MagnetizationPotential p2{cw.n, {}, "taylor2", 2}, p4{cw.n, {}, "taylor4", 4}, tr{cw.n, {}, "truncated", 0};
  std::vector<std::pair<double, int>> dist;
  for (int k = 0; k <= cw.n; ++k) {
    const double x = magnetization_level(cw.n, k) - mf.m;
    p2.values.push_back(mf.d2 * x * x / 2);
    p4.values.push_back(mf.d2 * x * x / 2 + mf.d3 * x * x * x / 6 + mf.d4 * x * x * x * x / 24);
    dist.emplace_back(std::abs(x), k);
  }
  std::sort(dist.begin(), dist.end());
  const double width = mf.m / (4 * std::sqrt(mf.d2));
  tr.values.assign(static_cast<std::size_t>(cw.n) + 1, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (i < 3 || dist[i].first < width)
      tr.values[static_cast<std::size_t>(dist[i].second)] = free_energy(cw, magnetization_level(cw.n, dist[i].second));
  out.emplace_back("taylor2", metastable_distribution(cw, p2));
  out.emplace_back("taylor4", metastable_distribution(cw, p4));
  out.emplace_back("truncated", metastable_distribution(cw, tr));
  return out;
}

Outcome magnetization_reduction() {
  double worst = 0.0;
  std::size_t cases = 0;
  int fallbacks = 0;
  for (int n : {6, 8, 10}) {
    for (double J : {0.5, 1.2}) {
      for (double h : {0.0, 0.04}) {
        const CWModel cw{n, J, h};
        const auto kernel = glauber_kernel(cw.embed());
        for (const auto& [name, nu] : cw_families(cw, fallbacks)) {
          worst = std::max(worst, std::abs(strong_eta_magnetization(cw, nu) - strong_metastability(nu.to_dense(), kernel)));
          ++cases;
        }
      }
    }
  }
  return {worst <= 1e-10, std::to_string(cases) + " distributions, max deviation " + fmt("%.3e", worst) + ", " +
                              std::to_string(fallbacks) + "/12 parameter sets used mean-field centers"};
}

// 6 ---------------------------------------------------------------------------

Outcome eta_scaling() {
  std::vector<double> logn, n_lin, log_t4, log_tr;
  for (int n : {64, 128, 256, 512, 1024}) {
    const CWModel cw{n, 1.2, 0.02};
    const auto r = find_m0(cw);
    const auto qa = quadratic_ansatz(cw, r.m0_continuous);
    const double t4 = strong_eta_magnetization(cw, metastable_distribution(cw, taylor_phi(cw, r.m0_continuous, 4)));
    const double tr = strong_eta_magnetization(cw, metastable_distribution(cw, truncated_phi(cw, r.m0_continuous, qa.a)));
    logn.push_back(std::log(n));
    n_lin.push_back(n);
    log_t4.push_back(std::log(t4));
    log_tr.push_back(std::log(tr));
  }
  const double s4 = slope(logn, log_t4);
  const double str = slope(n_lin, log_tr);
  bool decreasing = true;
  for (std::size_t i = 1; i < log_tr.size(); ++i) decreasing = decreasing && log_tr[i] < log_tr[i - 1];
  const bool pass = s4 >= -2.5 && s4 <= -1.5 && decreasing && str < 0;
  return {pass, "taylor4 log-log slope " + fmt("%.3f", s4) + ", truncated log-eta slope per spin " + fmt("%.4e", str) +
                    (decreasing ? ", truncated decreasing" : ", truncated NOT decreasing")};
}

// 7 ---------------------------------------------------------------------------

Outcome cw_stuck() {
  const CWModel cw{200, 1.2, 0.04};
  const std::uint64_t sweep = 200;
  const std::uint64_t samples = 200000;
  const ChainRunConfig config{100000 * sweep + samples * sweep, 100000 * sweep, sweep};
  CounterRng rng(7007);
  const auto trace = cw_glauber_counts(cw, cw.n, config, rng);
  const bool positive = 2 * trace.min_plus > cw.n;
  const auto hist = magnetization_histogram(trace);
  const auto Js = linear_grid(0.8, 1.6, 81);
  const auto hs = linear_grid(-0.2, 0.2, 81);
  const auto pl = pl_grid_cw(hist, Js, hs);
  const auto mle = mle_grid_cw(hist, Js, hs);
  const bool pl_ok = std::abs(pl.best_J - 1.2) <= 0.1 && pl.best_h > 0 && std::abs(pl.best_h - 0.04) <= 0.04;
  const bool mle_ok = mle.best_h < 0;
  std::ostringstream d;
  d << "M=" << trace.plus_counts.size() << ", min magnetization " << magnetization_level(cw.n, trace.min_plus)
    << (positive ? " (stayed positive)" : " (escaped)") << ", PL argmin (" << pl.best_J << ", " << pl.best_h << ")"
    << ", MLE argmin (" << mle.best_J << ", " << mle.best_h << ")";
  return {positive && pl_ok && mle_ok, d.str()};
}

// 8 ---------------------------------------------------------------------------

Outcome metastable_recovery() {
  const int n = 8;
  const std::size_t M = 100000;
  const double gamma = 1.0;
  int passed = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    CounterRng rng(8008, static_cast<std::uint64_t>(trial));
    const auto model = random_model({n, 3, 0.2, 0.3, 0.1, true}, rng);
    const auto mu = gibbs_distribution(model);
    const auto nu = restricted_distribution(mu, positive_magnetization(n));
    const double eta = strong_metastability(nu, glauber_kernel(model));
    double eps = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      const auto iid = WeightedSamples::from_samples(sample_dense(mu, M, rng));
      eps = std::max(eps, max_coupling_error(fit_all(iid, gamma), model));
    }
    const auto est = fit_all(WeightedSamples::from_samples(sample_dense(nu, M, rng)), gamma);
    const double err = max_coupling_error(est, model);
    const double bound = eps + 4 * std::exp(2 * gamma) * std::sqrt((1 + gamma) * eta * n);
    worst_ratio = std::max(worst_ratio, err / bound);
    if (model.gamma() <= gamma && err <= bound) ++passed;
  }
  return {passed == 20, std::to_string(passed) + "/20 instances within the bound, worst error/bound " +
                            fmt("%.3e", worst_ratio)};
}

// 9 ---------------------------------------------------------------------------

Outcome structure_recovery() {
  const int n = 16;
  const double alpha = 0.6, gamma = 2.0;
  const std::size_t M = 50000;
  int recovered = 0, bar_met = 0;
  double worst_eta = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    CounterRng rng(9009, static_cast<std::uint64_t>(trial));
    const auto model = random_model({n, 3, alpha, alpha, 0.0, true}, rng);
    const auto mu = gibbs_distribution(model);
    const auto kernel = glauber_kernel(model);
    // A = {mu >= tau}: drop the least likely states while their total mass stays tiny.
    std::vector<StateIndex> order(mu.size());
    std::iota(order.begin(), order.end(), StateIndex{0});
    std::sort(order.begin(), order.end(), [&](StateIndex a, StateIndex b) { return mu[a] < mu[b]; });
    StateSubset a(mu.size());
    double dropped = 0.0;
    std::size_t i = 0;
    while (i < order.size() && dropped + mu[order[i]] <= 2e-9) dropped += mu[order[i++]];
    for (; i < order.size(); ++i) a.insert(order[i]);
    const auto nu = restricted_distribution(mu, a);
    const double eta = strong_metastability(nu, kernel);
    worst_eta = std::max(worst_eta, eta);
    const double bar = 16 * std::exp(2 * gamma) * std::sqrt((1 + gamma) * eta / kernel.omega_p());
    if (alpha > bar && a.count() < mu.size()) ++bar_met;
    const auto est = fit_all(WeightedSamples::from_samples(sample_dense(nu, M, rng)), gamma);
    if (structure_threshold(est, alpha) == edge_set(model)) ++recovered;
  }
  return {recovered >= 19 && bar_met == 20, std::to_string(recovered) + "/20 exact recoveries, " +
                                                std::to_string(bar_met) + "/20 below the eta bar, max eta " +
                                                fmt("%.3e", worst_eta)};
}

// 10 --------------------------------------------------------------------------

Outcome oracle_suite() {
  SuiteConfig cfg;
  cfg.min_n = 3;
  cfg.max_n = 6;
  cfg.convexity_probes = 10000;
  const auto reports = run_oracle_suite(cfg);
  bool pass = true;
  std::ostringstream d;
  for (const auto& r : reports) {
    pass = pass && r.pass();
    d << r.check << " " << r.violations() << "/" << r.instances() << " ";
  }
  d << "(violations/instances)";
  return {pass, d.str()};
}

// 11 --------------------------------------------------------------------------

Outcome slow_mixing() {
  CounterRng rng(1111);
  std::size_t runs = 0, bad = 0;
  std::uint64_t largest_bound = 0;
  for (int mi = 0; mi < 10; ++mi) {
    const auto model = random_model({4, 3, 0.6, 1.4, 0.2, mi % 2 == 1}, rng);
    const auto mu = gibbs_distribution(model);
    std::vector<StateSubset> subsets{positive_magnetization(4)};
    for (int k = 0; k < 10; ++k) subsets.push_back(random_subset(16, rng));
    for (KernelKind kind : {KernelKind::glauber, KernelKind::metropolis}) {
      const auto kernel = make_kernel(model, kind);
      for (const auto& a : subsets) {
        const auto nu = restricted_distribution(mu, a);
        const double eta = weak_metastability(nu, kernel);
        const double gap = total_variation(nu.probs(), mu.probs());
        for (double eps : {0.05, 0.1}) {
          const auto bound = mixing_lower_bound(gap, eta, eps);
          largest_bound = std::max(largest_bound, bound);
          std::vector<double> p(nu.probs().begin(), nu.probs().end());
          std::uint64_t t = 0;
          while (total_variation(p, mu.probs()) > eps && t < 1000000) {
            p = step_distribution(p, kernel);
            ++t;
          }
          if (total_variation(p, mu.probs()) <= eps && t < bound) ++bad;
          ++runs;
        }
      }
    }
  }
  return {bad == 0, std::to_string(runs) + " runs, " + std::to_string(bad) + " reached epsilon early, largest bound " +
                        std::to_string(largest_bound) + " steps"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "tent example", 1, tent},
      {2, "restricted-measure identity", 10, restricted_identity},
      {3, "conditional TV bound", 60, conditional_tv_bound},
      {4, "Cheeger sandwich", 30, cheeger},
      {5, "magnetization-space reduction", 60, magnetization_reduction},
      {6, "eta scaling", 120, eta_scaling},
      {7, "CW learning from stuck dynamics", 300, cw_stuck},
      {8, "recovery from metastable samples", 300, metastable_recovery},
      {9, "structure recovery", 600, structure_recovery},
      {10, "oracle suite", 120, oracle_suite},
      {11, "slow mixing from restricted measures", 30, slow_mixing},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d %s: %s [%.2f s of %.0f s]%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
