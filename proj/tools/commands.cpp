#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "msl/chains.hpp"
#include "msl/curie_weiss.hpp"
#include "msl/learner.hpp"
#include "msl/oracle.hpp"
#include "msl/parallel.hpp"
#include "msl/sample_io.hpp"

namespace msl::cli {

namespace {

using json = nlohmann::ordered_json;

void prepare(const GlobalOptions& g) { set_threads(resolve_threads(g.threads)); }

std::string command_line(const GlobalOptions& g) {
  std::string out;
  for (const auto& a : g.argv) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// Ordered key/value provenance; the timestamp is always the last entry.
std::vector<std::pair<std::string, std::string>> provenance(const GlobalOptions& g) {
  return {{"tool", std::string("msl ") + kToolVersion},
          {"command", command_line(g)},
          {"seed", std::to_string(g.seed)},
          {"timestamp", timestamp()}};
}

std::string provenance_lines(const GlobalOptions& g) {
  std::string out;
  for (const auto& [k, v] : provenance(g)) out += k + "=" + v + "\n";
  return out;
}

json provenance_json(const GlobalOptions& g) {
  json j;
  for (const auto& [k, v] : provenance(g)) j[k] = v;
  return j;
}

void require_writable(const std::string& path, bool force) {
  if (path == "-") return;
  if (std::filesystem::exists(path) && !force)
    throw InvalidArgument("output '" + path + "' exists; pass --force to overwrite");
}

/// Writes to stdout for "-", else to the file (refusing to clobber without --force).
void emit(const std::string& path, bool force, const std::string& payload) {
  if (path == "-") {
    std::cout << payload;
    std::cout.flush();
    return;
  }
  require_writable(path, force);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << payload;
  if (!out) throw InvalidArgument("write to '" + path + "' failed");
}

std::string num(double x) {
  std::ostringstream s;
  s << std::setprecision(12) << x;
  return s.str();
}

class Csv {
 public:
  Csv(const GlobalOptions& g, const std::vector<std::string>& columns) {
    for (const auto& [k, v] : provenance(g)) text_ += "# " + k + "=" + v + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
    text_ += "\n";
  }
  void comment(const std::string& line) { text_ += "# " + line + "\n"; }
  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((text_ += (first ? "" : ",") + cell(cells), first = false), ...);
    text_ += "\n";
  }
  const std::string& str() const { return text_; }

 private:
  static std::string cell(double x) { return num(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::uint64_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  std::string text_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

IsingModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string model_payload(const GlobalOptions& g, const IsingModel& model) {
  json j;
  j["provenance"] = provenance_json(g);
  const auto body = json::parse(model_to_json(model));
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

SampleSet load_samples(const std::string& path) {
  auto s = read_samples(path);
  s.validate();
  if (s.size() == 0) throw InvalidArgument("sample file '" + path + "' contains no samples");
  return s;
}

StateSubset parse_subset(const std::string& spec, int n) {
  require_dense(n);
  const auto states = num_states(n);
  if (spec == "positive") return positive_magnetization(n);
  if (spec == "negative") return StateSubset::where(states, [n](StateIndex s) {
      int total = 0;
      for (int u = 0; u < n; ++u) total += spin_of(s, u);
      return total < 0;
    });
  if (spec.rfind("mask:", 0) == 0) {
    if (states > 64) throw InvalidArgument("--subset mask: needs n <= 6");
    std::uint64_t mask = 0;
    try {
      mask = std::stoull(spec.substr(5), nullptr, 16);
    } catch (const std::exception&) {
      throw InvalidArgument("--subset: bad hex mask '" + spec.substr(5) + "'");
    }
    return StateSubset::from_mask(states, mask);
  }
  throw InvalidArgument("--subset must be positive, negative or mask:<hex>, got '" + spec + "'");
}

/// Empirical distribution of a sample file over the 2^n states.
DenseDistribution empirical_distribution(const SampleSet& s) {
  require_dense(s.n);
  std::vector<double> p(num_states(s.n), 0.0);
  for (std::size_t t = 0; t < s.size(); ++t) {
    StateIndex idx = 0;
    const auto row = s.row(t);
    for (int u = 0; u < s.n; ++u)
      if (row[static_cast<std::size_t>(u)] > 0) idx |= StateIndex{1} << u;
    p[idx] += 1.0;
  }
  return DenseDistribution(s.n, std::move(p), true);
}

struct FamilyChoice {
  MagnetizationDistribution dist;
  double parameter = 0.0;
  double m0 = std::nan("");
  double a = std::nan("");
};

FamilyChoice build_family(const CWModel& cw, const std::string& family) {
  if (family == "exact") {
    return {metastable_distribution(cw, exact_phi(cw)), 0.0, std::nan(""), std::nan("")};
  }
  const auto r = find_m0(cw);
  const auto qa = quadratic_ansatz(cw, r.m0_continuous);
  if (family == "taylor2" || family == "taylor4") {
    const int K = family == "taylor2" ? 2 : 4;
    return {metastable_distribution(cw, taylor_phi(cw, r.m0_continuous, K)), static_cast<double>(K), r.m0, qa.a};
  }
  if (family == "truncated") {
    const auto phi = truncated_phi(cw, r.m0_continuous, qa.a);
    return {metastable_distribution(cw, phi), phi.parameter, r.m0, qa.a};
  }
  throw InvalidArgument("--family must be exact, taylor2, taylor4 or truncated, got '" + family + "'");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
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

void positive(const char* name, double v) {
  if (!(v > 0.0)) throw InvalidArgument(std::string("--") + name + " must be positive");
}

}  // namespace

// model ------------------------------------------------------------------------

void add_model_commands(CLI::App& app, GlobalOptions& global) {
  auto* model = app.add_subcommand("model", "Generate or inspect Ising models");
  model->require_subcommand(1);

  struct Gen {
    int n = 0;
    int degree = 3;
    double coupling_min = 0.2, coupling_max = 0.8, field_max = 0.0;
    bool ferro = false;
    std::string kind = "random";
    double J = 1.2, h = 0.0;
  };
  auto gen = std::make_shared<Gen>();
  auto* g = model->add_subcommand("gen", "Random sparse model or Curie-Weiss embedding");
  g->add_option("--n", gen->n, "Number of spins")->required();
  g->add_option("--kind", gen->kind, "random or curie-weiss")->check(CLI::IsMember({"random", "curie-weiss"}));
  g->add_option("--degree", gen->degree, "Maximum degree");
  g->add_option("--coupling-min", gen->coupling_min, "Smallest coupling magnitude");
  g->add_option("--coupling-max", gen->coupling_max, "Largest coupling magnitude");
  g->add_option("--field-max", gen->field_max, "Fields uniform in [-field-max, field-max]");
  g->add_flag("--ferro", gen->ferro, "All couplings positive");
  g->add_option("--J", gen->J, "Curie-Weiss coupling");
  g->add_option("--h", gen->h, "Curie-Weiss field");
  g->callback([gen, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    IsingModel m;
    if (gen->kind == "curie-weiss") {
      CWModel{gen->n, gen->J, gen->h}.validate();
      m = IsingModel::curie_weiss(gen->n, gen->J, gen->h);
    } else {
      CounterRng rng(global.seed);
      m = random_model({gen->n, gen->degree, gen->coupling_min, gen->coupling_max, gen->field_max, !gen->ferro}, rng);
    }
    emit(global.output, global.force, model_payload(global, m));
  });

  auto path = std::make_shared<std::string>();
  auto* s = model->add_subcommand("show", "Summary of a model file");
  s->add_option("--model", *path, "Model JSON")->required()->check(CLI::ExistingFile);
  s->callback([path, &global] {
    prepare(global);
    const auto m = load_model(*path);
    json j;
    j["provenance"] = provenance_json(global);
    j["n"] = m.n();
    j["edges"] = m.couplings().size();
    std::size_t max_degree = 0;
    for (int u = 0; u < m.n(); ++u) max_degree = std::max(max_degree, m.neighbors(u).size());
    j["max_degree"] = max_degree;
    j["gamma"] = m.gamma();
    if (m.n() <= kMaxDenseSpins) {
      const auto mu = gibbs_distribution(m);
      j["omega_glauber"] = glauber_kernel(m).omega_p();
      j["omega_metropolis"] = metropolis_kernel(m).omega_p();
      j["positive_mass"] = mass(mu, positive_magnetization(m.n()));
    } else {
      j["omega_metropolis_analytic"] = analytic_omega_p(m, KernelKind::metropolis);
    }
    emit(global.output, global.force, j.dump(2) + "\n");
  });
}

// sample -----------------------------------------------------------------------

void add_sample_commands(CLI::App& app, GlobalOptions& global) {
  auto* sample = app.add_subcommand("sample", "Draw samples from a chain or an exact sampler");
  sample->require_subcommand(1);

  struct Run {
    std::string model;
    std::uint64_t steps = 0, burn_in = 0, thinning = 1;
    std::string start = "plus";
    std::string format = "text";
  };
  for (const char* name : {"glauber", "metropolis"}) {
    auto opt = std::make_shared<Run>();
    auto* c = sample->add_subcommand(name, std::string(name) + " dynamics on a model file");
    c->add_option("--model", opt->model, "Model JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--steps", opt->steps, "Single-site updates")->required();
    c->add_option("--burn-in", opt->burn_in, "Updates before recording");
    c->add_option("--thinning", opt->thinning, "Record every k-th update");
    c->add_option("--start", opt->start, "plus, minus or random")->check(CLI::IsMember({"plus", "minus", "random"}));
    c->add_option("--format", opt->format, "text or binary")->check(CLI::IsMember({"text", "binary"}));
    const std::string chain = name;
    c->callback([opt, chain, &global] {
      prepare(global);
      require_writable(global.output, global.force);
      const auto m = load_model(opt->model);
      CounterRng rng(global.seed);
      SpinConfiguration start = SpinConfiguration::all(m.n(), opt->start == "minus" ? -1 : 1);
      if (opt->start == "random") {
        std::vector<int> spins(static_cast<std::size_t>(m.n()));
        CounterRng init(global.seed, 1);
        for (auto& x : spins) x = init.bernoulli(0.5) ? 1 : -1;
        start = SpinConfiguration(spins);
      }
      const ImplicitSampler sampler(m, kernel_kind_from_string(chain));
      auto samples = run_chain(sampler, start, {opt->steps, opt->burn_in, opt->thinning}, rng);
      samples.provenance = provenance_lines(global) + samples.provenance;
      const auto fmt = opt->format == "binary" ? SampleFormat::binary : SampleFormat::text;
      if (global.output == "-") {
        if (fmt == SampleFormat::binary) write_samples_binary(std::cout, samples);
        else write_samples_text(std::cout, samples);
      } else {
        write_samples(global.output, samples, fmt);
      }
    });
  }

  struct Exact {
    int n = 0;
    double J = 1.2, h = 0.04;
    std::string family = "exact";
    std::size_t count = 0;
    std::string format = "text";
  };
  auto ex = std::make_shared<Exact>();
  auto* e = sample->add_subcommand("exact-cw", "I.i.d. samples from a Curie-Weiss class law");
  e->add_option("--n", ex->n, "Number of spins")->required();
  e->add_option("--J", ex->J, "Coupling");
  e->add_option("--h", ex->h, "Field");
  e->add_option("--family", ex->family, "exact, taylor2, taylor4 or truncated");
  e->add_option("--count", ex->count, "Number of samples")->required();
  e->add_option("--format", ex->format, "text or binary")->check(CLI::IsMember({"text", "binary"}));
  e->callback([ex, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    const CWModel cw{ex->n, ex->J, ex->h};
    cw.validate();
    CounterRng rng(global.seed);
    auto samples = exact_magnetization_sampler(build_family(cw, ex->family).dist, ex->count, rng);
    samples.provenance = provenance_lines(global) + "family=" + ex->family + "\n" + samples.provenance;
    const auto fmt = ex->format == "binary" ? SampleFormat::binary : SampleFormat::text;
    if (global.output == "-") {
      if (fmt == SampleFormat::binary) write_samples_binary(std::cout, samples);
      else write_samples_text(std::cout, samples);
    } else {
      write_samples(global.output, samples, fmt);
    }
  });
}

// metastability ----------------------------------------------------------------

void add_metastability_commands(CLI::App& app, GlobalOptions& global) {
  auto* meta = app.add_subcommand("metastability", "Metastability measures of restricted or empirical distributions");
  meta->require_subcommand(1);

  struct Opt {
    std::string model;
    std::string chain = "glauber";
    std::string subset = "positive";
    std::string samples;
  };
  const std::pair<const char*, const char*> kinds[] = {
      {"weak", "Weak metastability, TV(nu, nu P)"},
      {"strong", "Strong metastability, summed net flow over single-flip edges"},
      {"conductance", "Edge flow out of the subset over its stationary mass"},
      {"gap", "Spectral gap of the chain"}};
  for (const auto& [name, help] : kinds) {
    auto opt = std::make_shared<Opt>();
    auto* c = meta->add_subcommand(name, help);
    c->add_option("--model", opt->model, "Model JSON (n <= 16)")->required()->check(CLI::ExistingFile);
    c->add_option("--chain", opt->chain, "glauber or metropolis")->check(CLI::IsMember({"glauber", "metropolis"}));
    c->add_option("--subset", opt->subset, "positive, negative or mask:<hex>");
    if (std::string(name) == "weak" || std::string(name) == "strong")
      c->add_option("--samples", opt->samples, "Use the empirical law of a sample file instead of mu_A")
          ->check(CLI::ExistingFile);
    const std::string what = name;
    c->callback([opt, what, &global] {
      prepare(global);
      require_writable(global.output, global.force);
      const auto m = load_model(opt->model);
      require_dense(m.n());
      const auto mu = gibbs_distribution(m);
      const auto kernel = make_kernel(m, kernel_kind_from_string(opt->chain));
      json j;
      j["provenance"] = provenance_json(global);
      j["measure"] = what;
      j["chain"] = opt->chain;
      j["omega_p"] = kernel.omega_p();
      if (what == "gap") {
        const double gap = spectral_gap(kernel, mu);
        j["spectral_gap"] = gap;
        if (num_states(m.n()) <= kMaxConductanceStates) {
          const auto phi = chain_conductance(GenericChain::from_kernel(kernel, mu));
          j["conductance"] = phi.value;
          j["cheeger_upper"] = 2 * phi.value;
          j["cheeger_lower"] = phi.value * phi.value / 2;
        }
      } else if (what == "conductance") {
        const auto a = parse_subset(opt->subset, m.n());
        j["subset"] = opt->subset;
        j["mu_A"] = mass(mu, a);
        j["conductance"] = conductance(kernel, mu, a);
      } else {
        DenseDistribution nu;
        if (!opt->samples.empty()) {
          nu = empirical_distribution(load_samples(opt->samples));
          j["nu"] = "empirical:" + opt->samples;
        } else {
          nu = restricted_distribution(mu, parse_subset(opt->subset, m.n()));
          j["nu"] = "mu_A:" + opt->subset;
        }
        const double eta = what == "weak" ? weak_metastability(nu, kernel) : strong_metastability(nu, kernel);
        const double tv = total_variation(nu.probs(), mu.probs());
        j["eta"] = eta;
        j["eta_over_omega"] = eta / kernel.omega_p();
        j["tv_to_mu"] = tv;
        if (eta > 0.0) {
          j["mixing_lower_bound_eps_0.05"] = mixing_lower_bound(tv, eta, 0.05);
          j["mixing_lower_bound_eps_0.1"] = mixing_lower_bound(tv, eta, 0.1);
        }
      }
      emit(global.output, global.force, j.dump(2) + "\n");
    });
  }
}

// cw ---------------------------------------------------------------------------

void add_cw_commands(CLI::App& app, GlobalOptions& global) {
  struct Opt {
    int n = 512;
    double J = 1.2, h = 0.04;
    std::string family = "taylor4";
    int n_min = 64;
  };
  auto opt = std::make_shared<Opt>();
  auto* cw = app.add_subcommand("cw", "Curie-Weiss free energy and metastable families");
  cw->require_subcommand(1);
  cw->add_option("--n", opt->n, "Number of spins");
  cw->add_option("--J", opt->J, "Coupling");
  cw->add_option("--h", opt->h, "Field");

  cw->add_subcommand("free-energy", "Psi(m) on the grid")->callback([opt, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    const CWModel model{opt->n, opt->J, opt->h};
    model.validate();
    Csv csv(global, {"k", "m", "psi"});
    for (int k = 0; k <= model.n; ++k) {
      const double m = magnetization_level(model.n, k);
      csv.row(k, m, free_energy(model, m));
    }
    emit(global.output, global.force, csv.str());
  });

  cw->add_subcommand("m0", "Positive metastable minimum and its curvature")->callback([opt, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    const CWModel model{opt->n, opt->J, opt->h};
    const auto r = find_m0(model);
    const auto qa = quadratic_ansatz(model, r.m0_continuous);
    json j;
    j["provenance"] = provenance_json(global);
    j["n"] = model.n;
    j["J"] = model.J;
    j["h"] = model.h;
    j["m0"] = r.m0;
    j["m0_continuous"] = r.m0_continuous;
    j["k"] = r.k;
    j["a"] = qa.a;
    j["first_order_residual"] = qa.residual;
    emit(global.output, global.force, j.dump(2) + "\n");
  });

  auto* scan = cw->add_subcommand("eta-scan", "Strong and weak eta over n = n-min, 2 n-min, ..., n");
  scan->add_option("--family", opt->family, "exact, taylor2, taylor4, truncated or all");
  scan->add_option("--n-min", opt->n_min, "Smallest n of the doubling scan");
  scan->callback([opt, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    if (opt->n_min < 2 || opt->n_min > opt->n) throw InvalidArgument("--n-min must lie in [2, n]");
    std::vector<std::string> families{opt->family};
    if (opt->family == "all") families = {"taylor2", "taylor4", "truncated"};
    Csv csv(global, {"n", "J", "h", "family", "K_or_width", "eta_strong", "eta_weak", "m0", "a"});
    for (const auto& family : families) {
      std::vector<double> logn, logeta;
      for (int n = opt->n_min; n <= opt->n; n *= 2) {
        const CWModel model{n, opt->J, opt->h};
        const auto f = build_family(model, family);
        const double strong = strong_eta_magnetization(model, f.dist);
        csv.row(n, opt->J, opt->h, family, f.parameter, strong, weak_eta_magnetization(model, f.dist), f.m0, f.a);
        logn.push_back(std::log(n));
        logeta.push_back(std::log(strong));
      }
      if (logn.size() >= 2)
        std::cerr << family << ": log-log slope of eta_strong vs n = " << num(loglog_slope(logn, logeta)) << "\n";
    }
    emit(global.output, global.force, csv.str());
  });
}

// learn ------------------------------------------------------------------------

void add_learn_commands(CLI::App& app, GlobalOptions& global) {
  struct Opt {
    std::string samples;
    double gamma = 0.0;
    double alpha = 0.0;
    double hmax = 0.0;
    double tol = 1e-8;
    int max_iters = 50000;
    std::string diagnostics;
    double J_min = 0.5, J_max = 1.5, h_min = -0.2, h_max = 0.2;
    std::size_t J_points = 101, h_points = 81;
  };
  auto opt = std::make_shared<Opt>();
  auto* learn = app.add_subcommand("learn", "Pseudo-likelihood learning from a sample file");
  learn->require_subcommand(1);
  learn->add_option("--samples", opt->samples, "Sample file (text or binary)")->required();
  learn->add_option("--tol", opt->tol, "Projected-gradient tolerance");
  learn->add_option("--max-iters", opt->max_iters, "Iteration cap per node");

  auto fit_estimate = [opt](const GlobalOptions& g, const WeightedSamples& data) {
    (void)g;
    positive("gamma", opt->gamma);
    return fit_all(data, opt->gamma, {opt->tol, opt->max_iters});
  };
  auto diagnostics = [opt](const GlobalOptions& g, const PLEstimate& est) {
    if (opt->diagnostics.empty()) return;
    json j;
    j["provenance"] = provenance_json(g);
    j["gamma"] = est.gamma;
    j["symmetrization_gap"] = est.symmetrization_gap;
    j["converged"] = est.converged();
    json nodes = json::array();
    for (const auto& node : est.nodes)
      nodes.push_back({{"node", node.node},
                       {"loss", node.loss},
                       {"projected_gradient_norm", node.projected_gradient_norm},
                       {"iterations", node.iterations},
                       {"converged", node.converged}});
    j["nodes"] = std::move(nodes);
    emit(opt->diagnostics, g.force, j.dump(2) + "\n");
  };

  auto* fit = learn->add_subcommand("fit", "Constrained PL fit of every node; writes the symmetrized model");
  fit->add_option("--gamma", opt->gamma, "l1 radius per node")->required();
  fit->add_option("--diagnostics", opt->diagnostics, "Per-node diagnostics JSON");
  fit->callback([opt, fit_estimate, diagnostics, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    if (!opt->diagnostics.empty()) require_writable(opt->diagnostics, global.force);
    const auto data = WeightedSamples::from_samples(load_samples(opt->samples));
    const auto est = fit_estimate(global, data);
    emit(global.output, global.force, model_payload(global, symmetrize(est)));
    diagnostics(global, est);
  });

  auto* structure = learn->add_subcommand("structure", "Edge set {max(|theta_uv|, |theta_vu|) > alpha / 2}");
  structure->add_option("--gamma", opt->gamma, "l1 radius per node")->required();
  structure->add_option("--alpha", opt->alpha, "Minimum coupling strength")->required();
  structure->add_option("--diagnostics", opt->diagnostics, "Per-node diagnostics JSON");
  structure->callback([opt, fit_estimate, diagnostics, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    positive("alpha", opt->alpha);
    const auto data = WeightedSamples::from_samples(load_samples(opt->samples));
    const auto est = fit_estimate(global, data);
    json j;
    j["provenance"] = provenance_json(global);
    j["n"] = est.n;
    j["alpha"] = opt->alpha;
    json edges = json::array();
    for (const auto& [u, v] : structure_threshold(est, opt->alpha)) edges.push_back({u, v});
    j["edges"] = std::move(edges);
    emit(global.output, global.force, j.dump(2) + "\n");
    diagnostics(global, est);
  });

  auto* fields = learn->add_subcommand("fields", "Refit fields on the recovered structure");
  fields->add_option("--gamma", opt->gamma, "l1 radius per node")->required();
  fields->add_option("--alpha", opt->alpha, "Minimum coupling strength")->required();
  fields->add_option("--hmax", opt->hmax, "Field bound")->required();
  fields->callback([opt, fit_estimate, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    positive("alpha", opt->alpha);
    positive("hmax", opt->hmax);
    const auto data = WeightedSamples::from_samples(load_samples(opt->samples));
    const auto est = fit_estimate(global, data);
    const auto edges = structure_threshold(est, opt->alpha);
    const auto h = fit_fields(data, est, edges, opt->hmax);
    std::vector<Coupling> couplings;
    for (const auto& [u, v] : edges) couplings.push_back({u, v, 0.5 * (est.coupling(u, v) + est.coupling(v, u))});
    emit(global.output, global.force, model_payload(global, IsingModel(est.n, h, std::move(couplings))));
  });

  for (const char* name : {"grid-mle", "grid-pl"}) {
    auto* g = learn->add_subcommand(
        name, std::string(name) == "grid-mle" ? "Curie-Weiss negative log-likelihood on a (J, h) grid"
                                               : "Curie-Weiss pseudo-likelihood loss on a (J, h) grid");
    g->add_option("--J-min", opt->J_min);
    g->add_option("--J-max", opt->J_max);
    g->add_option("--J-points", opt->J_points);
    g->add_option("--h-min", opt->h_min);
    g->add_option("--h-max", opt->h_max);
    g->add_option("--h-points", opt->h_points);
    const bool mle = std::string(name) == "grid-mle";
    g->callback([opt, mle, &global] {
      prepare(global);
      require_writable(global.output, global.force);
      const auto samples = load_samples(opt->samples);
      const auto Js = linear_grid(opt->J_min, opt->J_max, opt->J_points);
      const auto hs = linear_grid(opt->h_min, opt->h_max, opt->h_points);
      const auto surf = mle ? mle_grid_cw(samples, Js, hs) : pl_grid_cw(samples, Js, hs);
      Csv csv(global, {"J", "h", "loss"});
      for (std::size_t i = 0; i < Js.size(); ++i)
        for (std::size_t k = 0; k < hs.size(); ++k) csv.row(Js[i], hs[k], surf.values[i * hs.size() + k]);
      std::cerr << (mle ? "mle" : "pl") << " argmin J=" << num(surf.best_J) << " h=" << num(surf.best_h)
                << " loss=" << num(surf.best_value) << "\n";
      emit(global.output, global.force, csv.str());
    });
  }
}

// verify -----------------------------------------------------------------------

void add_verify_command(CLI::App& app, GlobalOptions& global) {
  auto cfg = std::make_shared<SuiteConfig>();
  auto* v = app.add_subcommand("verify", "Run the population oracle suite; exit 2 on any failure");
  v->add_option("--min-n", cfg->min_n, "Smallest system size");
  v->add_option("--max-n", cfg->max_n, "Largest system size (<= 10)");
  v->add_option("--models-per-n", cfg->models_per_n, "Random models per size");
  v->add_option("--random-nu", cfg->random_nu, "Perturbed distributions per model");
  v->add_option("--subsets", cfg->subsets, "Random restricted measures per model");
  v->add_option("--probes", cfg->convexity_probes, "Convexity probes per gamma");
  v->add_flag("--pl-gap", cfg->include_pl_gap, "Include the statistical loss-gap check");
  v->callback([cfg, &global] {
    prepare(global);
    require_writable(global.output, global.force);
    cfg->seed = global.seed;
    const auto reports = run_oracle_suite(*cfg);
    auto j = json::parse(reports_to_json(reports));
    json out;
    out["provenance"] = provenance_json(global);
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value();
    emit(global.output, global.force, out.dump(2) + "\n");
    std::size_t failed = 0;
    for (const auto& r : reports) failed += r.pass() ? 0 : 1;
    if (failed) throw VerificationFailure(std::to_string(failed) + " check(s) failed");
  });
}

// experiment -------------------------------------------------------------------

namespace {

struct Experiment {
  std::string preset;
  bool paper_scale = false;
  std::string out_dir = ".";
};

std::vector<double> run_histogram(const CWModel& cw, std::uint64_t burn_sweeps, std::uint64_t samples,
                                  std::uint64_t thinning, CounterRng& rng, int& min_plus) {
  // Chunked so that paper-scale runs never hold the whole trace.
  const auto n = static_cast<std::uint64_t>(cw.n);
  int k = cw.n;
  min_plus = cw.n;
  if (burn_sweeps > 0) {
    const auto burn = cw_glauber_counts(cw, cw.n, {burn_sweeps * n, burn_sweeps * n - 1, 1}, rng);
    k = burn.plus_counts.back();
    min_plus = burn.min_plus;
  }
  std::vector<double> hist(n + 1, 0.0);
  const std::uint64_t chunk = 1000000;
  for (std::uint64_t done = 0; done < samples;) {
    const std::uint64_t m = std::min(chunk, samples - done);
    const auto t = cw_glauber_counts(cw, k, {m * thinning, 0, thinning}, rng);
    for (int c : t.plus_counts) hist[static_cast<std::size_t>(c)] += 1.0;
    min_plus = std::min(min_plus, t.min_plus);
    k = t.plus_counts.back();
    done += m;
  }
  return hist;
}

}  // namespace

void add_experiment_command(CLI::App& app, GlobalOptions& global) {
  auto opt = std::make_shared<Experiment>();
  auto* e = app.add_subcommand("experiment", "Desk-scale figure presets (CSV into --out-dir)");
  e->add_option("--preset", opt->preset, "fig-meta-desk, fig-cw1-desk, fig-cw2-desk or fig-loss-desk")
      ->required()
      ->check(CLI::IsMember({"fig-meta-desk", "fig-cw1-desk", "fig-cw2-desk", "fig-loss-desk"}));
  e->add_flag("--paper-scale", opt->paper_scale, "Use the original figure sizes (very slow)");
  e->add_option("--out-dir", opt->out_dir, "Directory for the CSV output");
  e->callback([opt, &global] {
    prepare(global);
    std::filesystem::create_directories(opt->out_dir);
    const std::string path = (std::filesystem::path(opt->out_dir) / (opt->preset + ".csv")).string();
    require_writable(path, global.force);
    if (opt->paper_scale)
      std::cerr << "warning: --paper-scale runs the original figure sizes and can take days\n";
    CounterRng rng(global.seed);

    if (opt->preset == "fig-meta-desk") {
      const int n_max = opt->paper_scale ? 8192 : 1024;
      Csv csv(global, {"n", "J", "h", "family", "K_or_width", "eta_strong", "eta_weak", "m0", "a"});
      for (const std::string family : {"taylor2", "taylor4", "truncated"}) {
        for (int n = 64; n <= n_max; n *= 2) {
          const CWModel model{n, 1.2, 0.02};
          const auto f = build_family(model, family);
          csv.row(n, model.J, model.h, family, f.parameter, strong_eta_magnetization(model, f.dist),
                  weak_eta_magnetization(model, f.dist), f.m0, f.a);
        }
      }
      emit(path, global.force, csv.str());
      return;
    }

    const CWModel cw{opt->paper_scale ? 5000 : 200, 1.2, 0.04};
    const std::uint64_t burn_sweeps = 100000;
    const std::uint64_t total = opt->paper_scale ? 4000000000ULL : 200000ULL;
    const std::uint64_t thinning = opt->paper_scale ? 1 : static_cast<std::uint64_t>(cw.n);
    int min_plus = 0;
    const auto hist = run_histogram(cw, burn_sweeps, total, thinning, rng, min_plus);
    const auto Js = linear_grid(0.8, 1.6, 81);
    const auto hs = linear_grid(-0.2, 0.2, 81);

    if (opt->preset == "fig-cw1-desk") {
      // Independent stuck runs of increasing length.
      std::vector<std::uint64_t> sizes;
      for (std::uint64_t m = 1000; m < total; m *= 10) sizes.push_back(m);
      sizes.push_back(total);
      Csv csv(global, {"M", "pl_J", "pl_h", "pl_error", "mle_J", "mle_h", "mle_error", "min_magnetization"});
      for (std::uint64_t m : sizes) {
        int mp = min_plus;
        const auto hm = m == total ? hist : run_histogram(cw, burn_sweeps, m, thinning, rng, mp);
        const auto pl = pl_grid_cw(hm, Js, hs);
        const auto mle = mle_grid_cw(hm, Js, hs);
        csv.row(m, pl.best_J, pl.best_h, std::max(std::abs(pl.best_J - cw.J), std::abs(pl.best_h - cw.h)), mle.best_J,
                mle.best_h, std::max(std::abs(mle.best_J - cw.J), std::abs(mle.best_h - cw.h)),
                magnetization_level(cw.n, mp));
      }
      emit(path, global.force, csv.str());
    } else if (opt->preset == "fig-cw2-desk") {
      const auto exact =
          magnetization_histogram(exact_magnetization_sampler(metastable_distribution(cw, exact_phi(cw)), total, rng));
      const double m_total = std::accumulate(hist.begin(), hist.end(), 0.0);
      Csv csv(global, {"k", "m", "psi", "glauber_freq", "exact_freq"});
      for (int k = 0; k <= cw.n; ++k) {
        const double m = magnetization_level(cw.n, k);
        csv.row(k, m, free_energy(cw, m), hist[static_cast<std::size_t>(k)] / m_total,
                exact[static_cast<std::size_t>(k)] / static_cast<double>(total));
      }
      emit(path, global.force, csv.str());
    } else {
      const auto pl = pl_grid_cw(hist, Js, hs);
      const auto mle = mle_grid_cw(hist, Js, hs);
      Csv csv(global, {"J", "h", "mle_loss", "pl_loss"});
      csv.comment("mle_argmin J=" + num(mle.best_J) + " h=" + num(mle.best_h));
      csv.comment("pl_argmin J=" + num(pl.best_J) + " h=" + num(pl.best_h));
      for (std::size_t i = 0; i < Js.size(); ++i)
        for (std::size_t k = 0; k < hs.size(); ++k)
          csv.row(Js[i], hs[k], mle.values[i * hs.size() + k], pl.values[i * hs.size() + k]);
      emit(path, global.force, csv.str());
    }
  });
}

}  // namespace msl::cli
