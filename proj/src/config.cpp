#include "bora/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bora/errors.hpp"

namespace bora {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

ConfigScalar parse_scalar(std::string_view token, int line) {
  token = trim(token);
  if (token.empty()) fail(line, "missing value");
  if (token.front() == '"') {
    if (token.size() < 2 || token.back() != '"') fail(line, "unterminated string");
    return std::string(token.substr(1, token.size() - 2));
  }
  if (token == "true") return true;
  if (token == "false") return false;
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) fail(line, "cannot parse value '" + std::string(token) + "'");
  return value;
}

ConfigValue parse_value(std::string_view token, int line) {
  token = trim(token);
  if (!token.empty() && token.front() == '[') {
    if (token.back() != ']') fail(line, "unterminated array");
    std::vector<ConfigScalar> items;
    std::string_view body = trim(token.substr(1, token.size() - 2));
    while (!body.empty()) {
      std::size_t cut = 0;
      bool quoted = false;
      while (cut < body.size() && (quoted || body[cut] != ',')) {
        if (body[cut] == '"') quoted = !quoted;
        ++cut;
      }
      const auto item = trim(body.substr(0, cut));
      if (!item.empty()) items.push_back(parse_scalar(item, line));
      body = cut < body.size() ? trim(body.substr(cut + 1)) : std::string_view{};
    }
    return items;
  }
  auto scalar = parse_scalar(token, line);
  return std::visit([](auto&& v) -> ConfigValue { return v; }, scalar);
}

// Typed accessors over the flattened key map.
class Reader {
public:
  explicit Reader(std::map<std::string, ConfigValue> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string string(const std::string& key) {
    const auto& v = take(key);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw ConfigError("key '" + key + "' must be a string");
  }

  double number(const std::string& key) {
    const auto& v = take(key);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw ConfigError("key '" + key + "' must be a number");
  }

  std::int64_t integer(const std::string& key) {
    const double d = number(key);
    if (std::floor(d) != d || std::abs(d) > 9.0e15) {
      throw ConfigError("key '" + key + "' must be an integer");
    }
    return static_cast<std::int64_t>(d);
  }

  std::vector<double> numbers(const std::string& key) {
    const auto& v = take(key);
    const auto* items = std::get_if<std::vector<ConfigScalar>>(&v);
    if (!items) throw ConfigError("key '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& item : *items) {
      const auto* d = std::get_if<double>(&item);
      if (!d) throw ConfigError("key '" + key + "' must be an array of numbers");
      out.push_back(*d);
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    const auto& v = take(key);
    const auto* items = std::get_if<std::vector<ConfigScalar>>(&v);
    if (!items) throw ConfigError("key '" + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : *items) {
      const auto* s = std::get_if<std::string>(&item);
      if (!s) throw ConfigError("key '" + key + "' must be an array of strings");
      out.push_back(*s);
    }
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
  }

private:
  const ConfigValue& take(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::map<std::string, ConfigValue> values_;
  std::set<std::string> used_;
};

int positive_int(Reader& r, const std::string& key, int minimum) {
  const auto v = r.integer(key);
  if (v < minimum || v > 1'000'000) {
    throw ConfigError("key '" + key + "' must be an integer >= " + std::to_string(minimum));
  }
  return static_cast<int>(v);
}

BudgetMode budget_from(Reader& r) {
  const std::string mode = r.string("budget.mode");
  const auto params = r.numbers("budget.params");
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi) {
      throw ConfigError("budget.params for mode '" + mode + "' needs " + std::to_string(lo) +
                        (lo == hi ? "" : "-" + std::to_string(hi)) + " values");
    }
  };
  if (mode == "constant") {
    need(1, 1);
    return ConstantBudget{params[0]};
  }
  if (mode == "uniform") {
    need(2, 2);
    return UniformBudget{params[0], params[1]};
  }
  if (mode == "gaussian" || mode == "held_gaussian") {
    need(2, 3);
    const double floor = params.size() == 3 ? params[2] : 1.0;
    if (mode == "gaussian") return GaussianBudget{params[0], params[1], floor};
    return HeldGaussianBudget{params[0], params[1], floor};
  }
  throw ConfigError("budget.mode must be constant, uniform, gaussian or held_gaussian");
}

}  // namespace

std::map<std::string, ConfigValue> parse_config_text(std::string_view text) {
  std::map<std::string, ConfigValue> values;
  std::string table;
  int line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed table header");
      table = std::string(trim(line.substr(1, line.size() - 2)));
      if (table.empty()) fail(line_no, "empty table name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
    if (values.count(full)) fail(line_no, "duplicate key '" + full + "'");
    values.emplace(full, parse_value(line.substr(eq + 1), line_no));
  }
  return values;
}

std::vector<double> ExperimentConfig::job_difficulties() const {
  if (!nu.empty()) return nu;
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = 25.0 * (i + 1);
  return out;
}

void ExperimentConfig::validate() const {
  if (m < 2) throw ConfigError("m must be >= 2");
  if (horizon < 1) throw ConfigError("T must be >= 1");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (policies.empty()) throw ConfigError("policies must name at least one policy");
  for (std::size_t i = 0; i < policies.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (policies[i] == policies[j]) {
        throw ConfigError("policy '" + std::string(to_string(policies[i])) + "' listed twice");
      }
    }
  }
  validate_budget_mode(budget);
  if (!(wasserstein_p > 0.0) || !std::isfinite(wasserstein_p)) {
    throw ConfigError("wasserstein_p must be in (0, inf)");
  }
  if (beta.mode == BetaSchedule::Mode::fixed && !(beta.fixed_value >= 0.0)) {
    throw ConfigError("beta.value must be >= 0");
  }
  if (case_kind == CaseKind::bernoulli_jobs) {
    if (!nu.empty() && static_cast<int>(nu.size()) != m) {
      throw ConfigError("env.nu has " + std::to_string(nu.size()) + " entries but m = " +
                        std::to_string(m));
    }
    for (double v : nu) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("env.nu entries must be positive");
    }
    if (eta_seed) throw ConfigError("env.eta_seed only applies to linear_marketing");
  } else {
    if (!nu.empty()) throw ConfigError("env.nu only applies to bernoulli_jobs");
    if (std::find(policies.begin(), policies.end(), PolicyId::sbf) != policies.end()) {
      throw ConfigError(
          "sbf needs per-arm binary outcomes and cannot be used as-is on linear_marketing");
    }
  }
  if (bora.n_init < 2) throw ConfigError("gp.n_init must be >= 2");
  if (bora.fit.starts < 1 || bora.fit.max_evals_per_start < 1) {
    throw ConfigError("gp.starts and gp.max_evals_per_start must be >= 1");
  }
  if (!(bora.fit.min_signal > 0.0 && bora.fit.min_signal < bora.fit.max_signal)) {
    throw ConfigError("gp.min_signal must be positive and below the signal ceiling");
  }
  if (!(bora.fit.min_relative_lengthscale > 0.0 &&
        bora.fit.min_relative_lengthscale < bora.fit.max_relative_lengthscale)) {
    throw ConfigError("gp.min_lengthscale must be positive and below the lengthscale ceiling");
  }
  if (bora.search.candidates < 1 || bora.search.refine_top < 0) {
    throw ConfigError("search.candidates must be >= 1 and search.refine_top >= 0");
  }
}

ExperimentConfig config_from_text(std::string_view text) {
  Reader r(parse_config_text(text));
  ExperimentConfig cfg;
  const std::string kind = r.string("case");
  if (kind == "bernoulli_jobs") {
    cfg.case_kind = CaseKind::bernoulli_jobs;
  } else if (kind == "linear_marketing") {
    cfg.case_kind = CaseKind::linear_marketing;
  } else {
    throw ConfigError("case must be bernoulli_jobs or linear_marketing, got '" + kind + "'");
  }
  cfg.m = positive_int(r, "m", 2);
  cfg.horizon = positive_int(r, "T", 1);
  cfg.runs = positive_int(r, "runs", 1);
  const auto seed = r.integer("master_seed");
  if (seed < 0) throw ConfigError("master_seed must be nonnegative");
  cfg.master_seed = static_cast<std::uint64_t>(seed);
  cfg.budget = budget_from(r);
  if (r.has("env.nu")) cfg.nu = r.numbers("env.nu");
  if (r.has("env.eta_seed")) {
    const auto eta = r.integer("env.eta_seed");
    if (eta < 0) throw ConfigError("env.eta_seed must be nonnegative");
    cfg.eta_seed = static_cast<std::uint64_t>(eta);
  }
  if (r.has("policies")) {
    cfg.policies.clear();
    for (const auto& name : r.strings("policies")) cfg.policies.push_back(parse_policy_id(name));
  }
  if (r.has("beta.mode")) {
    const auto mode = r.string("beta.mode");
    if (mode == "fixed") {
      cfg.beta.mode = BetaSchedule::Mode::fixed;
    } else if (mode != "randomized") {
      throw ConfigError("beta.mode must be fixed or randomized");
    }
  }
  if (r.has("beta.value")) cfg.beta.fixed_value = r.number("beta.value");
  if (r.has("wasserstein_p")) cfg.wasserstein_p = r.number("wasserstein_p");
  if (r.has("out_dir")) cfg.out_dir = r.string("out_dir");
  if (r.has("gp.n_init")) cfg.bora.n_init = positive_int(r, "gp.n_init", 2);
  if (r.has("gp.starts")) cfg.bora.fit.starts = positive_int(r, "gp.starts", 1);
  if (r.has("gp.max_evals_per_start")) {
    cfg.bora.fit.max_evals_per_start = positive_int(r, "gp.max_evals_per_start", 1);
  }
  if (r.has("gp.noise_floor")) cfg.bora.fit.noise_floor = r.number("gp.noise_floor");
  if (r.has("gp.min_signal")) cfg.bora.fit.min_signal = r.number("gp.min_signal");
  if (r.has("gp.min_lengthscale")) {
    cfg.bora.fit.min_relative_lengthscale = r.number("gp.min_lengthscale");
  }
  if (r.has("search.candidates")) cfg.bora.search.candidates = positive_int(r, "search.candidates", 1);
  if (r.has("search.refine_top")) cfg.bora.search.refine_top = positive_int(r, "search.refine_top", 0);
  r.reject_unused();
  cfg.bora.fit.wasserstein_p = cfg.wasserstein_p;
  if (!(cfg.bora.fit.noise_floor > 0.0)) throw ConfigError("gp.noise_floor must be positive");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_text(buffer.str());
}

}  // namespace bora
