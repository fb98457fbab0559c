#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bora/errors.hpp"
#include "bora/harness.hpp"

using namespace bora;

namespace {

ExperimentConfig small_config(int runs, int horizon, std::vector<PolicyId> policies) {
  ExperimentConfig cfg;
  cfg.case_kind = CaseKind::bernoulli_jobs;
  cfg.m = 2;
  cfg.horizon = horizon;
  cfg.runs = runs;
  cfg.master_seed = 5;
  cfg.budget = ConstantBudget{33.9};
  cfg.nu = {25.0, 50.0};
  cfg.policies = std::move(policies);
  return cfg;
}

RunTrace synthetic(PolicyId p, int run, std::vector<double> rewards) {
  RunTrace tr{p, run, {}};
  double c = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    c += rewards[t];
    tr.rows.push_back({static_cast<int>(t + 1), 2.0, Eigen::Vector2d(1.0, 1.0), rewards[t], c});
  }
  return tr;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

// Tag balance, quoted attributes and entity sanity; enough to catch broken output.
bool well_formed_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool root_seen = false;
  while (i < doc.size()) {
    if (doc[i] == '&') {
      const auto semi = doc.find(';', i);
      if (semi == std::string::npos) return false;
      const auto ent = doc.substr(i, semi - i + 1);
      if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" && ent != "&apos;") return false;
      i = semi + 1;
      continue;
    }
    if (doc[i] != '<') {
      if (stack.empty() && !std::isspace(static_cast<unsigned char>(doc[i]))) return false;
      ++i;
      continue;
    }
    const auto close = doc.find('>', i);
    if (close == std::string::npos) return false;
    std::string tag = doc.substr(i + 1, close - i - 1);
    i = close + 1;
    if (tag.starts_with("?")) continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag.starts_with("/")) {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.ends_with("/");
    const std::string name = tag.substr(0, tag.find_first_of(" /"));
    if (name.empty()) return false;
    if (stack.empty()) {
      if (root_seen) return false;
      root_seen = true;
    }
    if (!self_closing) stack.push_back(name);
  }
  return root_seen && stack.empty();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("experiment shape and fairness") {
  const auto cfg = small_config(5, 12, {PolicyId::bora1, PolicyId::sbf, PolicyId::random});
  const auto traces = run_experiment(cfg);
  REQUIRE(traces.size() == 15);
  std::size_t rows = 0;
  for (const auto& t : traces) rows += t.rows.size();
  CHECK(rows == 5 * 12 * 3);
  // Ordered by (policy, run).
  CHECK(traces[0].policy == PolicyId::bora1);
  CHECK(traces[4].run == 4);
  CHECK(traces[5].policy == PolicyId::sbf);
  CHECK_NOTHROW(audit_traces(traces));

  auto uniform = small_config(3, 10, {PolicyId::random, PolicyId::sbf});
  uniform.budget = UniformBudget{10.0, 100.0};
  const auto ut = run_experiment(uniform);
  for (int run = 0; run < 3; ++run) {
    const auto& a = ut[static_cast<std::size_t>(run)];
    const auto& b = ut[static_cast<std::size_t>(3 + run)];
    for (std::size_t t = 0; t < a.rows.size(); ++t) CHECK(a.rows[t].budget == b.rows[t].budget);
  }
  CHECK(ut[0].rows[0].budget != ut[1].rows[0].budget);
}

TEST_CASE("results do not depend on the worker count") {
  const auto cfg = small_config(3, 10, {PolicyId::bora2, PolicyId::bora3, PolicyId::random});
  const auto one = format_trace_csv(run_experiment(cfg, 1));
  const auto four = format_trace_csv(run_experiment(cfg, 4));
  CHECK(one == four);
  CHECK(one == format_trace_csv(run_experiment(cfg, 1)));
}

TEST_CASE("policies do not perturb each other") {
  const auto alone = run_experiment(small_config(2, 8, {PolicyId::random}));
  const auto together = run_experiment(small_config(2, 8, {PolicyId::sbf, PolicyId::random}));
  CHECK(format_trace_csv(alone) == format_trace_csv(std::span(together).subspan(2)));
}

TEST_CASE("aggregation") {
  const std::vector<RunTrace> two{synthetic(PolicyId::random, 0, {4.0, 6.0}),
                                  synthetic(PolicyId::random, 1, {10.0, 10.0})};
  const auto agg = aggregate(two);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].mean[1] == doctest::Approx(15.0));
  CHECK(agg[0].sd[1] == doctest::Approx(std::sqrt(50.0)));
  CHECK(agg[0].runs == 2);

  const std::vector<RunTrace> swapped{two[1], two[0]};
  const auto agg2 = aggregate(swapped);
  CHECK(agg2[0].mean == agg[0].mean);
  CHECK(agg2[0].sd == agg[0].sd);

  const std::vector<RunTrace> one{synthetic(PolicyId::sbf, 0, {1.0, 0.0, 2.0})};
  const auto single = aggregate(one);
  for (double sd : single[0].sd) CHECK(sd == 0.0);

  CHECK_THROWS_AS(aggregate(std::vector<RunTrace>{}), DomainError);
  const std::vector<RunTrace> ragged{synthetic(PolicyId::sbf, 0, {1.0}), synthetic(PolicyId::sbf, 1, {1.0, 1.0})};
  CHECK_THROWS_AS(aggregate(ragged), DomainError);
}

TEST_CASE("audit catches broken rows") {
  auto bad = synthetic(PolicyId::random, 0, {1.0, 1.0});
  bad.rows[1].amounts = Eigen::Vector2d(1.0, 1.5);
  CHECK_THROWS_AS(audit_traces(std::vector<RunTrace>{bad}), InvariantError);
  auto drift = synthetic(PolicyId::random, 0, {1.0, 1.0});
  drift.rows[1].cumulative = 2.5;
  CHECK_THROWS_AS(audit_traces(std::vector<RunTrace>{drift}), InvariantError);
}

TEST_CASE("csv format") {
  CHECK(format_trace_csv({}) == "policy,run,t,budget,reward,cumulative_reward,amounts\n");
  CHECK(format_summary_csv({}) == "policy,t,mean_cumulative,sd_cumulative\n");

  RunTrace tr{PolicyId::bora2, 3, {}};
  tr.rows.push_back({1, 33.9, Eigen::Vector2d(25.0, 8.9), 1.178, 1.178});
  tr.rows.push_back({2, 33.9, Eigen::Vector2d(1.0 / 3.0, 33.9 - 1.0 / 3.0), 2.0, 3.178});
  const auto csv = format_trace_csv(std::vector<RunTrace>{tr});
  const auto lines = split(csv, '\n');
  REQUIRE(lines.size() == 3);
  CHECK(lines[1] == "bora2,3,1,33.90000000,1.17800000,1.17800000,25;8.9");
  CHECK(lines[2] == "bora2,3,2,33.90000000,2.00000000,3.17800000,0.333333333;33.5666667");
  CHECK(csv.find('\r') == std::string::npos);

  const auto summary = format_summary_csv(aggregate(std::vector<RunTrace>{tr}));
  CHECK(split(summary, '\n')[2] == "bora2,2,3.17800000,0.00000000");
}

TEST_CASE("csv round trip reproduces the cumulative column") {
  const auto cfg = small_config(2, 15, {PolicyId::random, PolicyId::sbf});
  const auto csv = format_trace_csv(run_experiment(cfg));
  const auto lines = split(csv, '\n');
  std::string key;
  double running = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    REQUIRE(f.size() == 7);
    const auto k = f[0] + "/" + f[1];
    if (k != key) key = k, running = 0.0;
    running += std::stod(f[4]);
    CHECK(std::abs(running - std::stod(f[5])) < 1e-9);
    double amount_sum = 0.0;
    for (const auto& a : split(f[6], ';')) amount_sum += std::stod(a);
    CHECK(std::abs(amount_sum - std::stod(f[3])) < 1e-6);
  }
}

TEST_CASE("cumulative chart") {
  const std::vector<RunTrace> traces{synthetic(PolicyId::sbf, 0, {0.0, 0.0, 1.0, 2.0}),
                                     synthetic(PolicyId::bora1, 0, {1.0, 2.0, 1.0, 2.0})};
  const auto agg = aggregate(traces);
  ChartOptions opts;
  opts.utopic = utopic_cumulative(CaseKind::bernoulli_jobs, 2, 100);
  const auto plot = cumulative_chart_plot(agg, opts);
  REQUIRE(plot.lines.size() == 3);
  CHECK(std::isnan(plot.lines[0].y[0]));
  CHECK(std::isnan(plot.lines[0].y[1]));
  CHECK(plot.lines[0].y[3] == doctest::Approx(std::log10(3.0)));
  CHECK(plot.lines[2].dashed);
  CHECK(plot.lines[2].y.back() == doctest::Approx(2.30103).epsilon(1e-5));
  // One run: the band collapses onto the mean.
  CHECK(plot.bands[1].lower[2] == plot.bands[1].upper[2]);

  const auto svg = render_cumulative_chart(agg, opts);
  CHECK(well_formed_xml(svg));
  CHECK(svg.find("stroke-dasharray") != std::string::npos);

  const std::vector<RunTrace> zeros{synthetic(PolicyId::sbf, 0, {0.0, 0.0, 0.0})};
  CHECK(well_formed_xml(render_cumulative_chart(aggregate(zeros), {})));
  CHECK_THROWS_AS(render_cumulative_chart({}, {}), DomainError);

  svg::Plot tricky;
  tricky.title = "a < b & \"c\"";
  tricky.lines.push_back({"x>y", {1.0, 2.0}, {1.0, 2.0}});
  CHECK(well_formed_xml(svg::render(tricky)));
  CHECK(!well_formed_xml("<svg><g></svg>"));
}

TEST_CASE("emission writes the expected files") {
  const auto dir = std::filesystem::temp_directory_path() / "bora_emit_test";
  std::filesystem::remove_all(dir);
  auto cfg = small_config(2, 6, {PolicyId::random, PolicyId::sbf});
  cfg.out_dir = dir / "nested";
  const auto out = run_and_emit(cfg, 1);
  CHECK(slurp(cfg.out_dir / "trace.csv") == format_trace_csv(out.traces));
  CHECK(slurp(cfg.out_dir / "summary.csv") == format_summary_csv(out.aggregates));
  CHECK(well_formed_xml(slurp(cfg.out_dir / "cumulative_reward.svg")));
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(emit_csv({}, {}, "/proc/definitely/not/writable"), IoError);
}

TEST_CASE("posterior slice") {
  auto cfg = small_config(1, 10, {PolicyId::bora1});
  const auto slice = compute_gp_slice(cfg, PolicyId::bora1, 5, 101);
  CHECK(slice.budget == 33.9);
  CHECK(slice.x1.size() == 101);
  CHECK(slice.x1.back() == doctest::Approx(33.9));
  CHECK(slice.decision_x1.size() == 5);
  for (double s : slice.sd) CHECK(s >= 0.0);
  const auto svg = render_gp_slice(slice, PolicyId::bora1, 5);
  CHECK(well_formed_xml(svg));
  std::size_t markers = 0;
  for (auto p = svg.find("class=\"marker\""); p != std::string::npos; p = svg.find("class=\"marker\"", p + 1)) ++markers;
  CHECK(markers == 5);
  CHECK(svg.find("<polygon") != std::string::npos);

  // Decisions in the slice are the ones the experiment made.
  const auto traces = run_experiment(small_config(1, 5, {PolicyId::bora2}));
  const auto slice2 = compute_gp_slice(small_config(1, 5, {PolicyId::bora2}), PolicyId::bora2, 5);
  for (int t = 0; t < 5; ++t) {
    CHECK(slice2.decision_x1[static_cast<std::size_t>(t)] ==
          doctest::Approx(traces[0].rows[static_cast<std::size_t>(t)].amounts[0]));
  }

  CHECK_THROWS_AS(compute_gp_slice(cfg, PolicyId::sbf, 5), ConfigError);
  cfg.m = 3;
  cfg.nu = {};
  CHECK_THROWS_AS(compute_gp_slice(cfg, PolicyId::bora1, 5), ConfigError);
}

TEST_CASE("worker count from the environment") {
  ::unsetenv("BORA_WORKERS");
  CHECK(workers_from_env() == 1);
  ::setenv("BORA_WORKERS", "8", 1);
  CHECK(workers_from_env() == 8);
  ::setenv("BORA_WORKERS", "zero", 1);
  CHECK_THROWS_AS(workers_from_env(), ConfigError);
  ::setenv("BORA_WORKERS", "0", 1);
  CHECK_THROWS_AS(workers_from_env(), ConfigError);
  ::unsetenv("BORA_WORKERS");
}
