#include "mlmpc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mlmpc/io.hpp"

namespace mlmpc {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::map<std::string, std::string> default_values(const std::string& experiment) {
  std::map<std::string, std::string> v = {
      {"seed", "0"},
      {"out_dir", "out"},
      {"metric_c_in", "0.1"},
      {"metric_c_fn", "10"},
      {"policy_prefix", "0"},
      {"n_eigs", "10"},
      {"llr_threshold", "0.2"},
      {"poly_degree", "3"},
      {"gp_restarts", "3"},
      {"gp_max_iter", "150"},
  };
  if (experiment == "fig1-demo") {
    v["grid_per_dim"] = "32";
    return v;
  }
  if (experiment == "linear-singular" || experiment == "linear-bemporad" ||
      experiment == "linear-quadcon") {
    v["grid_per_dim"] = "20";
    v["domain"] = experiment == "linear-singular" ? "2.0" : "4.0";
    if (experiment == "linear-quadcon") {
      // Balanced scales keep the policy term from drowning the second
      // state direction, which this problem genuinely needs.
      v["metric_c_in"] = "1";
      v["metric_c_fn"] = "1";
    }
    return v;
  }
  if (experiment == "cstr") {
    v["n_init"] = "200";
    v["rollout"] = "20";
    v["n_train"] = "3000";
    v["ca_lo"] = "0.1";
    v["ca_hi"] = "0.9";
    v["tr_lo"] = "0.0";
    v["tr_hi"] = "0.55";
    v["r0_lo"] = "0.1";
    v["r0_hi"] = "0.9";
    v["parametrization"] = "alpha";
    v["horizon"] = "20";
    v["u_min"] = "-2";
    v["u_max"] = "2";
    v["rate_bound"] = "0.5";
    v["dt"] = "0.05";
    v["substeps"] = "10";
    v["gp_subsample"] = "800";
    v["mlp_epochs"] = "2000";
    v["mlp_batch"] = "128";
    v["mlp_lr"] = "0.001";
    v["saturation_tol"] = "0.001";
    v["sigma"] = "0.01";
    v["sim_steps"] = "180";
    v["transient_steps"] = "20";
    v["schedule"] = "0:0.5,60:0.3,120:0.7";
    v["sim_start_ca"] = "0.5";
    v["sim_start_tr"] = "0.42857142857142855";
    return v;
  }
  throw std::invalid_argument("unknown experiment '" + experiment + "'");
}

}  // namespace

const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names = {
      "fig1-demo", "linear-singular", "linear-bemporad", "linear-quadcon",
      "cstr"};
  return names;
}

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment) {
  ExperimentConfig cfg;
  cfg.experiment_ = experiment;
  cfg.values_ = default_values(experiment);
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& experiment,
                                        const std::filesystem::path& path) {
  ExperimentConfig cfg = defaults(experiment);
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open " + path.string());
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: " + path.string() + ":" +
                               std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "experiment") {
      if (value != experiment) {
        throw std::runtime_error("config: " + path.string() + " is for '" +
                                 value + "', requested '" + experiment + "'");
      }
      continue;
    }
    cfg.set(key, value);
  }
  return cfg;
}

bool ExperimentConfig::has(const std::string& key) const {
  return values_.count(key) != 0;
}

double ExperimentConfig::number(const std::string& key) const {
  const std::string& raw = text(key);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(raw, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != raw.size()) {
    throw std::runtime_error("config: " + experiment_ + "." + key +
                             " is not a number: '" + raw + "'");
  }
  return v;
}

long ExperimentConfig::integer(const std::string& key) const {
  const std::string& raw = text(key);
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(raw, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != raw.size()) {
    throw std::runtime_error("config: " + experiment_ + "." + key +
                             " is not an integer: '" + raw + "'");
  }
  return v;
}

std::string ExperimentConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw std::runtime_error("config: " + experiment_ + " has no key '" + key +
                             "'");
  }
  return it->second;
}

bool ExperimentConfig::flag(const std::string& key) const {
  const std::string raw = text(key);
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw std::runtime_error("config: " + experiment_ + "." + key +
                           " is not a boolean: '" + raw + "'");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw std::runtime_error("config: unknown key '" + key + "' for " +
                             experiment_);
  }
  it->second = value;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "experiment=" << experiment_ << '\n';
  for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
  return os.str();
}

std::string ExperimentConfig::hash() const {
  return hash_hex(fnv1a_hash(canonical()));
}

}  // namespace mlmpc
