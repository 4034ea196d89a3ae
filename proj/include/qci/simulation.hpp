#pragma once

#include "qci/distributions.hpp"
#include "qci/intervals.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qci {

enum class ExperimentType
{
  coverage,
  two_sample_coverage,
  mse,
  gld_bias
};

std::string to_string(ExperimentType t);

struct ExperimentSpec
{
  std::string name = "experiment";
  ExperimentType type = ExperimentType::coverage;
  DistributionModel generator{ Normal{} };
  //! second population for two-sample coverage; defaults to generator
  std::optional<DistributionModel> generator_y{};
  std::size_t n = 100;
  //! second sample size; 0 means equal to n
  std::size_t m = 0;
  //! sample sizes for mse and gld_bias; empty means {n}
  std::vector<std::size_t> n_list{};
  std::vector<double> u_grid{ 0.5 };
  //! paired with u_grid for two-sample coverage; empty means p = u
  std::vector<double> p_grid{};
  std::vector<MethodSpec> methods{};
  double level = 0.95;
  std::size_t replicates = 2000;
  std::uint64_t seed = 1;
  //! GLD parameterization for gld_bias
  GldParameterization parameterization = GldParameterization::fkml;
};

//! Throws ErrorCode::spec_validation naming the offending field.
void validate(const ExperimentSpec& spec);

//! Parses one experiment object or {"experiments": [...]}; validation
//! errors carry JSON-pointer paths such as /experiments/1/u. Keys at the
//! top level next to "experiments" are defaults for every experiment.
std::vector<ExperimentSpec> parse_experiments(const std::string& json_text,
                                              std::uint64_t default_seed = 1);
//! Fully resolved spec (defaults filled) as a JSON object string.
std::string spec_to_json(const ExperimentSpec& spec);

struct RunOptions
{
  //! 0 uses the hardware concurrency
  unsigned workers = 0;
};

struct CoverageCell
{
  std::string method;
  double u;
  double p; //!< equals u for one-sample runs
  std::size_t covered = 0;
  std::size_t effective = 0; //!< replicates minus failures
  std::size_t failures = 0;
  double coverage = 0.0;
  double mc_error = 0.0; //!< sqrt(c(1-c)/effective)
  double mean_std_width = 0.0;
};

struct CoverageReport
{
  std::vector<CoverageCell> cells; //!< method-major, then u
  std::size_t replicates = 0;
  std::size_t failures = 0;
  //! more than 2% of interval computations failed
  bool unreliable = false;
};

struct MseCell
{
  std::string method;
  std::size_t n;
  double u;
  double q_true;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0; //!< mean squared deviation from the mean
  double mse = 0.0;      //!< bias^2 + variance
  std::size_t effective = 0;
  std::size_t failures = 0;
};

struct MseReport
{
  std::vector<MseCell> cells;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  bool unreliable = false;
};

struct GldBiasCell
{
  std::size_t n;
  double u;
  double true_quantile;
  double mean_fitted = 0.0;
  //! 100 (mean - truth) / truth; the plain difference when absolute is set
  double percent_difference = 0.0;
  bool absolute = false; //!< truth is zero, percentage undefined
  std::size_t effective = 0;
  std::size_t failures = 0;
};

struct GldBiasReport
{
  std::vector<GldBiasCell> cells;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  bool unreliable = false;
};

//! Replicate r samples from RngStream{seed, r}; results do not depend on
//! the worker count.
CoverageReport run_coverage(const ExperimentSpec& spec,
                            const RunOptions& options = {});
CoverageReport run_two_sample_coverage(const ExperimentSpec& spec,
                                       const RunOptions& options = {});
//! qhat(u) = tau_hat / sqrt(u(1-u)) for each method against q(u).
MseReport run_mse(const ExperimentSpec& spec, const RunOptions& options = {});
GldBiasReport run_gld_bias(const ExperimentSpec& spec,
                           const RunOptions& options = {});

} // namespace qci
