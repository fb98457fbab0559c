#include "bora/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "bora/environments.hpp"
#include "bora/errors.hpp"
#include "bora/rng.hpp"
#include "bora/svg.hpp"

namespace bora {
namespace {

// Seed-path tags; fixed forever so traces stay reproducible across versions.
enum Stream : std::uint64_t {
  kBudgetStream = 1,
  kEnvParamStream = 2,
  kEnvStream = 3,
  kPolicyStream = 4,
  kSliceStream = 5,
};

std::uint64_t policy_tag(PolicyId id) { return static_cast<std::uint64_t>(id) + 1; }

void append_fixed(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 8);
  out.append(buf, res.ptr);
}

void append_significant(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  out.append(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out.flush()) throw IoError("failed writing '" + path.string() + "'");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

}  // namespace

RunSetting make_run_setting(const ExperimentConfig& config, int run, int steps) {
  RunSetting setting;
  BudgetProcess budgets(config.budget,
                        derive_seed({config.master_seed, static_cast<std::uint64_t>(run), kBudgetStream}));
  setting.budgets.reserve(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) setting.budgets.push_back(budgets.next_budget(t));
  if (config.case_kind == CaseKind::bernoulli_jobs) {
    setting.nu = config.job_difficulties();
  } else {
    const std::uint64_t seed =
        config.eta_seed ? derive_seed({*config.eta_seed, static_cast<std::uint64_t>(run)})
                        : derive_seed({config.master_seed, static_cast<std::uint64_t>(run), kEnvParamStream});
    Rng rng(seed);
    setting.channels = draw_channel_params(config.m, rng);
  }
  return setting;
}

RunTrace run_cell(const ExperimentConfig& config, const RunSetting& setting, int run,
                  PolicyId policy_id, int steps, ObservationHistory* history_out) {
  if (static_cast<int>(setting.budgets.size()) < steps) {
    throw DomainError("run_cell: budget sequence shorter than the horizon");
  }
  const auto r = static_cast<std::uint64_t>(run);
  const std::uint64_t env_seed = derive_seed({config.master_seed, r, policy_tag(policy_id), kEnvStream});
  const std::uint64_t policy_seed =
      derive_seed({config.master_seed, r, policy_tag(policy_id), kPolicyStream});

  BoraOptions options = config.bora;
  options.fit.wasserstein_p = config.wasserstein_p;
  auto policy = make_policy(policy_id, config.m, config.beta, policy_seed, options);

  std::optional<BernoulliJobsEnv> jobs;
  std::optional<LinearMarketingEnv> marketing;
  if (config.case_kind == CaseKind::bernoulli_jobs) {
    jobs.emplace(setting.nu, env_seed);
  } else {
    marketing.emplace(setting.channels, env_seed);
  }

  RunTrace trace;
  trace.policy = policy_id;
  trace.run = run;
  trace.rows.reserve(static_cast<std::size_t>(steps));
  double cumulative = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const double budget = setting.budgets[static_cast<std::size_t>(t - 1)];
    AllocationDecision decision = policy->decide(budget);
    ObservationRecord record{decision, 0.0, std::nullopt, t};
    if (jobs) {
      JobsOutcome outcome = jobs->step(decision);
      record.reward = outcome.reward;
      record.per_arm_outcomes = std::move(outcome.per_arm_outcomes);
    } else {
      record.reward = marketing->step(decision);
    }
    cumulative += record.reward;
    trace.rows.push_back({t, budget, decision.amounts(), record.reward, cumulative});
    policy->observe(record);
  }
  if (history_out) *history_out = policy->history();
  return trace;
}

std::vector<RunTrace> run_experiment(const ExperimentConfig& config, int workers) {
  config.validate();
  std::vector<RunSetting> settings;
  for (int r = 0; r < config.runs; ++r) settings.push_back(make_run_setting(config, r, config.horizon));

  const std::size_t n_policies = config.policies.size();
  const std::size_t cells = n_policies * static_cast<std::size_t>(config.runs);
  std::vector<RunTrace> traces(cells);
  std::vector<std::exception_ptr> errors(cells);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t cell = next++; cell < cells; cell = next++) {
      const std::size_t p = cell / static_cast<std::size_t>(config.runs);
      const int run = static_cast<int>(cell % static_cast<std::size_t>(config.runs));
      try {
        traces[cell] = run_cell(config, settings[static_cast<std::size_t>(run)], run,
                                config.policies[p], config.horizon);
      } catch (...) {
        errors[cell] = std::current_exception();
      }
    }
  };

  const int n_workers = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(cells, 1)));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return traces;
}

int workers_from_env() {
  const char* raw = std::getenv("BORA_WORKERS");
  if (!raw || !*raw) return 1;
  int value = 0;
  const std::string_view text(raw);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1) {
    throw ConfigError("BORA_WORKERS must be a positive integer, got '" + std::string(text) + "'");
  }
  return value;
}

void audit_traces(std::span<const RunTrace> traces) {
  for (const auto& trace : traces) {
    double cumulative = 0.0;
    for (const auto& row : trace.rows) {
      const double sum = row.amounts.sum();
      if (std::abs(sum - row.budget) > kSimplexTolerance || (row.amounts.array() < 0.0).any()) {
        throw InvariantError("audit: infeasible decision for " + std::string(to_string(trace.policy)) +
                             " run " + std::to_string(trace.run) + " t " + std::to_string(row.t));
      }
      cumulative += row.reward;
      if (std::abs(cumulative - row.cumulative) > 1e-9) {
        throw InvariantError("audit: cumulative reward is not the prefix sum at t " +
                             std::to_string(row.t));
      }
    }
  }
}

std::vector<AggregateSeries> aggregate(std::span<const RunTrace> traces) {
  if (traces.empty()) throw DomainError("aggregate: no traces");
  std::vector<AggregateSeries> out;
  std::vector<std::vector<const RunTrace*>> groups;
  for (const auto& trace : traces) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const AggregateSeries& a) { return a.policy == trace.policy; });
    if (it == out.end()) {
      out.push_back({trace.policy, {}, {}, 0});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&trace);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& members = groups[g];
    const std::size_t steps = members.front()->rows.size();
    for (const auto* m : members) {
      if (m->rows.size() != steps) throw DomainError("aggregate: runs have different horizons");
    }
    auto& series = out[g];
    series.runs = static_cast<int>(members.size());
    series.mean.assign(steps, 0.0);
    series.sd.assign(steps, 0.0);
    const double n = static_cast<double>(members.size());
    for (std::size_t t = 0; t < steps; ++t) {
      double sum = 0.0;
      for (const auto* m : members) sum += m->rows[t].cumulative;
      const double mean = sum / n;
      double squares = 0.0;
      for (const auto* m : members) {
        const double d = m->rows[t].cumulative - mean;
        squares += d * d;
      }
      series.mean[t] = mean;
      series.sd[t] = members.size() > 1 ? std::sqrt(squares / (n - 1.0)) : 0.0;
    }
  }
  return out;
}

std::string format_trace_csv(std::span<const RunTrace> traces) {
  std::string out = "policy,run,t,budget,reward,cumulative_reward,amounts\n";
  for (const auto& trace : traces) {
    for (const auto& row : trace.rows) {
      out += to_string(trace.policy);
      out += ',';
      out += std::to_string(trace.run);
      out += ',';
      out += std::to_string(row.t);
      out += ',';
      append_fixed(out, row.budget);
      out += ',';
      append_fixed(out, row.reward);
      out += ',';
      append_fixed(out, row.cumulative);
      out += ',';
      for (Eigen::Index i = 0; i < row.amounts.size(); ++i) {
        if (i) out += ';';
        append_significant(out, row.amounts[i]);
      }
      out += '\n';
    }
  }
  return out;
}

std::string format_summary_csv(std::span<const AggregateSeries> aggregates) {
  std::string out = "policy,t,mean_cumulative,sd_cumulative\n";
  for (const auto& series : aggregates) {
    for (std::size_t t = 0; t < series.mean.size(); ++t) {
      out += to_string(series.policy);
      out += ',';
      out += std::to_string(t + 1);
      out += ',';
      append_fixed(out, series.mean[t]);
      out += ',';
      append_fixed(out, series.sd[t]);
      out += '\n';
    }
  }
  return out;
}

void emit_csv(std::span<const RunTrace> traces, std::span<const AggregateSeries> aggregates,
              const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  write_file(out_dir / "trace.csv", format_trace_csv(traces));
  write_file(out_dir / "summary.csv", format_summary_csv(aggregates));
}

svg::Plot cumulative_chart_plot(std::span<const AggregateSeries> aggregates,
                                const ChartOptions& options) {
  if (aggregates.empty()) throw DomainError("emit_chart: no aggregates");
  const double gap = std::numeric_limits<double>::quiet_NaN();
  auto log_or_gap = [&](double v) { return v > 0.0 ? std::log10(v) : gap; };

  svg::Plot plot;
  plot.title = options.title;
  plot.x_label = "step t";
  plot.y_label = "log10 cumulative reward";

  double floor = std::numeric_limits<double>::infinity();
  for (const auto& series : aggregates) {
    for (double v : series.mean) {
      if (v > 0.0) floor = std::min(floor, std::log10(v));
    }
  }
  if (!std::isfinite(floor)) floor = 0.0;

  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    const auto& series = aggregates[i];
    svg::Line line;
    svg::Band band;
    line.label = std::string(to_string(series.policy));
    line.color = band.color = svg::palette(i);
    for (std::size_t t = 0; t < series.mean.size(); ++t) {
      const double x = static_cast<double>(t + 1);
      const double mean = log_or_gap(series.mean[t]);
      line.x.push_back(x);
      line.y.push_back(mean);
      band.x.push_back(x);
      if (std::isfinite(mean)) {
        const double lo = series.mean[t] - series.sd[t];
        band.lower.push_back(lo > 0.0 ? std::log10(lo) : floor);
        band.upper.push_back(std::log10(series.mean[t] + series.sd[t]));
      } else {
        band.lower.push_back(gap);
        band.upper.push_back(gap);
      }
    }
    plot.bands.push_back(std::move(band));
    plot.lines.push_back(std::move(line));
  }
  if (!options.utopic.empty()) {
    svg::Line ref;
    ref.label = "utopic";
    ref.color = "#7f7f7f";
    ref.dashed = true;
    for (std::size_t t = 0; t < options.utopic.size(); ++t) {
      ref.x.push_back(static_cast<double>(t + 1));
      ref.y.push_back(log_or_gap(options.utopic[t]));
    }
    plot.lines.push_back(std::move(ref));
  }
  return plot;
}

std::string render_cumulative_chart(std::span<const AggregateSeries> aggregates,
                                    const ChartOptions& options) {
  return svg::render(cumulative_chart_plot(aggregates, options));
}

std::filesystem::path emit_chart(std::span<const AggregateSeries> aggregates,
                                 const ChartOptions& options, const std::filesystem::path& out_dir) {
  const std::string svg_text = render_cumulative_chart(aggregates, options);
  ensure_dir(out_dir);
  const auto path = out_dir / "cumulative_reward.svg";
  write_file(path, svg_text);
  return path;
}

GpSlice compute_gp_slice(const ExperimentConfig& config, PolicyId policy, int steps,
                         int grid_points) {
  config.validate();
  if (config.m != 2) throw ConfigError("gp-slice needs an m = 2 configuration");
  if (policy != PolicyId::bora1 && policy != PolicyId::bora2 && policy != PolicyId::bora3) {
    throw ConfigError("gp-slice needs a BORA policy (bora1, bora2 or bora3)");
  }
  if (steps < 2) throw ConfigError("gp-slice needs --t >= 2 decisions to fit a GP");
  if (grid_points < 2) throw DomainError("gp-slice needs at least 2 grid points");

  const RunSetting setting = make_run_setting(config, 0, steps + 1);
  ObservationHistory history;
  run_cell(config, setting, 0, policy, steps, &history);

  BoraOptions options = config.bora;
  options.fit.wasserstein_p = config.wasserstein_p;
  Rng rng(derive_seed({config.master_seed, 0, policy_tag(policy), kSliceStream}));
  const GpModel model = policy == PolicyId::bora1   ? bora1_surrogate(history, rng, options)
                        : policy == PolicyId::bora2 ? bora2_surrogate(history, rng, options)
                                                    : bora3_surrogate(history, rng, options);

  GpSlice slice;
  slice.budget = setting.budgets[static_cast<std::size_t>(steps)];
  const double b = slice.budget;
  for (int k = 0; k < grid_points; ++k) {
    const double x1 = b * k / (grid_points - 1);
    Eigen::Vector2d query = policy == PolicyId::bora1 ? Eigen::Vector2d(x1, b - x1)
                                                      : Eigen::Vector2d(x1 / b, 1.0 - x1 / b);
    const Posterior post = model.posterior(query);
    slice.x1.push_back(x1);
    slice.mean.push_back(post.mean);
    slice.sd.push_back(std::sqrt(post.variance));
  }
  for (const auto& record : history) {
    slice.decision_x1.push_back(to_weight_vector(record.decision)[0] * b);
    slice.decision_reward.push_back(record.reward);
  }
  return slice;
}

std::string render_gp_slice(const GpSlice& slice, PolicyId policy, int steps) {
  svg::Plot plot;
  char budget_text[32];
  const auto res = std::to_chars(budget_text, budget_text + sizeof budget_text, slice.budget,
                                 std::chars_format::general, 6);
  plot.title = std::string(to_string(policy)) + " surrogate after " + std::to_string(steps) +
               " decisions on x1 + x2 = " + std::string(budget_text, res.ptr);
  plot.x_label = "x1 (budget to arm 1)";
  plot.y_label = "immediate reward";
  svg::Band band;
  band.x = slice.x1;
  for (std::size_t k = 0; k < slice.x1.size(); ++k) {
    band.lower.push_back(slice.mean[k] - 2.0 * slice.sd[k]);
    band.upper.push_back(slice.mean[k] + 2.0 * slice.sd[k]);
  }
  plot.bands.push_back(std::move(band));
  plot.lines.push_back({"posterior mean (band: +/- 2 sd)", slice.x1, slice.mean, "#1f77b4", false});
  plot.markers.push_back({"decisions", slice.decision_x1, slice.decision_reward, "#d62728"});
  return svg::render(plot);
}

RunOutputs run_and_emit(const ExperimentConfig& config, int workers) {
  RunOutputs out;
  out.traces = run_experiment(config, workers);
  audit_traces(out.traces);
  out.aggregates = aggregate(out.traces);
  emit_csv(out.traces, out.aggregates, config.out_dir);
  ChartOptions chart;
  chart.title = std::string(to_string(config.case_kind)) + " (m=" + std::to_string(config.m) +
                ", " + std::to_string(config.runs) + " runs)";
  if (config.case_kind == CaseKind::bernoulli_jobs) {
    chart.utopic = utopic_cumulative(config.case_kind, config.m, config.horizon);
  }
  emit_chart(out.aggregates, chart, config.out_dir);
  return out;
}

}  // namespace bora
