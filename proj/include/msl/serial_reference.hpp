#pragma once

#include <span>
#include <vector>

#include "msl/chains.hpp"
#include "msl/learner.hpp"
#include "msl/spin_models.hpp"

/// Single-threaded plain-loop versions of the parallel kernels, kept as
/// references for tests and benchmarks.
namespace msl::serial {

DenseDistribution gibbs_distribution(const IsingModel& model);
std::vector<double> glauber_flip_table(const IsingModel& model);
double weak_metastability(const DenseDistribution& nu, const SpinKernel& kernel);
double strong_metastability(const DenseDistribution& nu, const SpinKernel& kernel);
double conductance(const SpinKernel& kernel, const DenseDistribution& mu, const StateSubset& a);
double pl_loss_node(std::span<const double> theta_u, const WeightedSamples& samples, int u);
std::vector<double> pl_gradient_node(std::span<const double> theta_u, const WeightedSamples& samples, int u);
PLEstimate fit_all(const WeightedSamples& samples, double gamma, const OptimizerConfig& config = {});

}  // namespace msl::serial
