#pragma once

// Replicated policy-vs-environment experiments, aggregation and emission of
// CSV traces and SVG charts.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bora/config.hpp"
#include "bora/gp.hpp"
#include "bora/policies.hpp"
#include "bora/svg.hpp"

namespace bora {

struct TraceRow {
  int t = 1;
  double budget = 0.0;
  Eigen::VectorXd amounts;
  double reward = 0.0;
  double cumulative = 0.0;
};

struct RunTrace {
  PolicyId policy = PolicyId::random;
  int run = 0;
  std::vector<TraceRow> rows;
};

// Everything shared by the policies of one run.
struct RunSetting {
  std::vector<double> budgets;
  std::vector<double> nu;               // bernoulli_jobs
  std::vector<ChannelParams> channels;  // linear_marketing
};

// Budget sequence of length `steps` and environment parameters for run `run`.
RunSetting make_run_setting(const ExperimentConfig& config, int run, int steps);

// Executes one (run, policy) cell for `steps` steps. When `history_out` is
// given it receives the policy's observation history.
RunTrace run_cell(const ExperimentConfig& config, const RunSetting& setting, int run,
                  PolicyId policy, int steps, ObservationHistory* history_out = nullptr);

// All runs x policies, ordered by (policy as listed, run). Cells run on
// `workers` threads; the result does not depend on the worker count.
std::vector<RunTrace> run_experiment(const ExperimentConfig& config, int workers = 1);

// BORA_WORKERS, or 1 when unset. Throws ConfigError on a malformed value.
int workers_from_env();

// Throws InvariantError if a row violates the budget equality or the
// cumulative column is not the prefix sum of rewards.
void audit_traces(std::span<const RunTrace> traces);

struct AggregateSeries {
  PolicyId policy = PolicyId::random;
  std::vector<double> mean;  // mean cumulative reward per step
  std::vector<double> sd;    // sample (n-1) standard deviation, 0 for one run
  int runs = 0;
};

// Per policy in first-appearance order. Throws DomainError on empty input or
// ragged horizons within a policy.
std::vector<AggregateSeries> aggregate(std::span<const RunTrace> traces);

std::string format_trace_csv(std::span<const RunTrace> traces);
std::string format_summary_csv(std::span<const AggregateSeries> aggregates);

// Writes trace.csv and summary.csv into out_dir (created if missing).
void emit_csv(std::span<const RunTrace> traces, std::span<const AggregateSeries> aggregates,
              const std::filesystem::path& out_dir);

struct ChartOptions {
  std::string title = "Cumulative reward";
  // Dashed reference curve (raw cumulative values); empty for none.
  std::vector<double> utopic;
};

// Chart data in log10 space: one mean line and +/- 1 sd band per policy, then
// the dashed utopic line when given. Nonpositive values become NaN gaps.
svg::Plot cumulative_chart_plot(std::span<const AggregateSeries> aggregates,
                                const ChartOptions& options);
std::string render_cumulative_chart(std::span<const AggregateSeries> aggregates,
                                    const ChartOptions& options);
// Writes cumulative_reward.svg into out_dir and returns its path.
std::filesystem::path emit_chart(std::span<const AggregateSeries> aggregates,
                                 const ChartOptions& options, const std::filesystem::path& out_dir);

// Posterior slice of a BORA surrogate over the budget segment x_1 + x_2 = b
// after `steps` decisions of run 0 (m = 2 only).
struct GpSlice {
  double budget = 0.0;
  std::vector<double> x1;
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> decision_x1;
  std::vector<double> decision_reward;
};

GpSlice compute_gp_slice(const ExperimentConfig& config, PolicyId policy, int steps,
                         int grid_points = 201);
std::string render_gp_slice(const GpSlice& slice, PolicyId policy, int steps);

// Outputs written by a full `run`.
struct RunOutputs {
  std::vector<RunTrace> traces;
  std::vector<AggregateSeries> aggregates;
};

RunOutputs run_and_emit(const ExperimentConfig& config, int workers);

}  // namespace bora
