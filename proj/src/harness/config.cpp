#include "hcraft/harness/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hcraft/common/errors.hpp"
#include "hcraft/env/registry.hpp"

namespace hcraft::harness {

namespace pt = boost::property_tree;

namespace {

/// Reads typed values from one section and remembers which keys were used.
class Section {
 public:
  Section(const pt::ptree& root, std::string name, std::string origin)
      : name_(std::move(name)), origin_(std::move(origin)) {
    if (const auto child = root.get_child_optional(name_)) tree_ = *child;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    used_.insert(key);
    const auto v = tree_.get_optional<std::string>(key);
    if (!v) return;
    try {
      out = convert<T>(*v);
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": [" + name_ + "] " + key + " = '" + *v + "' is not a valid value");
    }
  }

  void finish() const {
    for (const auto& [key, value] : tree_) {
      if (!used_.count(key)) throw ConfigError(origin_ + ": unknown key '" + key + "' in [" + name_ + "]");
    }
  }

 private:
  template <typename T>
  static T convert(const std::string& s) {
    if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "yes" || s == "1") return true;
      if (s == "false" || s == "no" || s == "0") return false;
      throw std::invalid_argument(s);
    } else {
      std::istringstream in(s);
      T v{};
      in >> v;
      if (!in || !(in >> std::ws).eof()) throw std::invalid_argument(s);
      return v;
    }
  }

  pt::ptree tree_;
  std::string name_;
  std::string origin_;
  std::set<std::string> used_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string distance_mode_name(reward::DistanceMode m) { return m == reward::DistanceMode::kCombat ? "combat" : "mining"; }

}  // namespace

const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> v = {"pure-rl", "pure-code", "zero-shot", "iter-2", "iter-2-no-sp", "iter-3"};
  return v;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const std::string& origin) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::set<std::string> sections = {"run", "env", "reward", "ppo", "agents", "backend", "ablate"};
  for (const auto& [name, child] : root) {
    if (!sections.count(name)) throw ConfigError(origin + ": unknown section [" + name + "]");
    if (child.data().size() > 0 && child.empty()) throw ConfigError(origin + ": key '" + name + "' outside a section");
  }

  RunConfig cfg;
  std::string data, output, seeds, fixture, variants;

  Section run(root, "run", origin);
  run.read("id", cfg.run_id);
  run.read("task", cfg.task_id);
  run.read("data", data);
  run.read("output_dir", output);
  run.read("seeds", seeds);
  run.finish();
  if (!data.empty()) cfg.data_file = resolve(base_dir, data);
  if (!output.empty()) cfg.output_dir = resolve(base_dir, output);
  if (!seeds.empty()) {
    cfg.seeds.clear();
    for (const auto& s : split_list(seeds)) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        cfg.seeds.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError(origin + ": [run] seeds entry '" + s + "' is not a non-negative integer");
      }
    }
  }

  auto& rl = cfg.agents.rl;
  Section env(root, "env", origin);
  env.read("num_rays", rl.env_options.num_rays);
  env.read("fan_degrees", rl.env_options.fan_degrees);
  env.read("max_range", rl.env_options.max_range);
  env.read("mob_move_prob", rl.env_options.mob_move_prob);
  env.finish();

  std::string distance_mode = distance_mode_name(rl.reward.distance_mode);
  Section rew(root, "reward", origin);
  rew.read("success_weight", rl.reward.success_weight);
  rew.read("clip", rl.reward.clip_enabled);
  rew.read("clip_weight", rl.reward.clip_weight);
  rew.read("distance", rl.reward.distance_enabled);
  rew.read("distance_mode", distance_mode);
  rew.read("distance_target", rl.reward.distance_target);
  rew.read("distance_weight", rl.reward.distance_weight);
  rew.finish();
  if (distance_mode == "combat") rl.reward.distance_mode = reward::DistanceMode::kCombat;
  else if (distance_mode == "mining") rl.reward.distance_mode = reward::DistanceMode::kMining;
  else throw ConfigError(origin + ": [reward] distance_mode must be combat or mining");

  Section ppo(root, "ppo", origin);
  ppo.read("frames", cfg.agents.rl_frames);
  ppo.read("rollout_length", rl.rollout_length);
  ppo.read("epochs", rl.hyper.epochs);
  ppo.read("minibatch", rl.hyper.minibatch);
  ppo.read("clip", rl.hyper.clip);
  ppo.read("entropy_coef", rl.hyper.entropy_coef);
  ppo.read("value_coef", rl.hyper.value_coef);
  ppo.read("learning_rate", rl.adam.lr);
  ppo.read("max_grad_norm", rl.adam.max_grad_norm);
  ppo.read("gamma", rl.gamma);
  ppo.read("lambda", rl.lambda);
  ppo.read("hidden_dim", rl.hidden_dim);
  ppo.read("eval_interval", rl.eval_interval);
  ppo.read("eval_greedy", rl.eval_greedy);
  ppo.finish();

  Section ag(root, "agents", origin);
  ag.read("max_rounds", cfg.agents.max_rounds);
  ag.read("inner_attempts", cfg.agents.inner_attempts);
  ag.read("success_threshold", cfg.agents.success_threshold);
  ag.read("planning_tips", cfg.agents.planning_tips);
  ag.read("code_only", cfg.agents.code_only);
  ag.read("plan_retries", cfg.agents.plan_retries);
  ag.read("fast_retries", cfg.agents.fast_retries);
  ag.read("probes", cfg.agents.probes);
  ag.read("eval_episodes", cfg.agents.eval_episodes);
  ag.read("critic", cfg.critic);
  ag.finish();
  rl.eval_episodes = cfg.agents.eval_episodes;

  Section be(root, "backend", origin);
  be.read("kind", cfg.backend.kind);
  be.read("fixture", fixture);
  be.read("endpoint", cfg.backend.endpoint);
  be.read("model", cfg.backend.model);
  be.read("key_env", cfg.backend.key_env);
  be.read("temperature", cfg.backend.temperature);
  be.read("timeout_seconds", cfg.backend.timeout_seconds);
  be.read("retries", cfg.backend.retries);
  be.finish();
  if (!fixture.empty()) cfg.backend.fixture = resolve(base_dir, fixture);

  Section ab(root, "ablate", origin);
  ab.read("variants", variants);
  ab.finish();
  cfg.variants = split_list(variants);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str(), std::filesystem::absolute(path).parent_path(), path.string());
  cfg.config_file = path;
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.run_id.empty() || cfg.run_id.find_first_of("/\\") != std::string::npos || cfg.run_id[0] == '.') {
    throw ConfigError("[run] id must be a plain directory name");
  }
  if (cfg.task_id.empty()) throw ConfigError("[run] task is required");
  if (cfg.data_file.empty()) throw ConfigError("[run] data is required");
  if (cfg.seeds.empty()) throw ConfigError("[run] seeds must list at least one seed");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    throw ConfigError("[run] seeds must be distinct");
  }
  const auto registry = env::Registry::load(cfg.data_file);
  registry.task(cfg.task_id);
  if (cfg.critic != "rules" && cfg.critic != "backend") throw ConfigError("[agents] critic must be rules or backend");

  auto opts = cfg.agents;
  if (opts.max_rounds < 1 || opts.inner_attempts < 1 || opts.probes < 1 || opts.eval_episodes < 1 || opts.rl_frames < 1 ||
      opts.plan_retries < 0 || opts.fast_retries < 0) {
    throw ConfigError("[agents]/[ppo] budgets must be positive");
  }
  if (!(opts.success_threshold >= 0.0 && opts.success_threshold <= 1.0)) {
    throw ConfigError("[agents] success_threshold must lie in [0, 1]");
  }
  if (opts.rl_frames < opts.rl.rollout_length) throw ConfigError("[ppo] frames must cover at least one rollout");
  opts.rl.validate();

  const auto& b = cfg.backend;
  if (b.kind == "scripted") {
    if (b.fixture.empty()) throw ConfigError("[backend] scripted backends need a fixture");
    agents::ScriptedBackend::from_file(b.fixture);
  } else if (b.kind == "http") {
    agents::HttpBackend::Options o{b.endpoint, b.model, b.key_env, b.temperature, b.timeout_seconds, b.retries};
    agents::HttpBackend probe(o);
  } else {
    throw ConfigError("[backend] kind must be scripted or http");
  }
  for (const auto& v : cfg.variants) {
    const auto& known = known_variants();
    if (std::find(known.begin(), known.end(), v) == known.end()) throw ConfigError("unknown ablation variant '" + v + "'");
  }
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  const auto& a = cfg.agents;
  const auto& rl = a.rl;
  auto flag = [](bool b) { return b ? "true" : "false"; };
  os << "[run]\nid = " << cfg.run_id << "\ntask = " << cfg.task_id << "\ndata = " << cfg.data_file.string()
     << "\noutput_dir = " << cfg.output_dir.string() << "\nseeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) os << (i ? ", " : "") << cfg.seeds[i];
  os << "\n\n[env]\nnum_rays = " << rl.env_options.num_rays << "\nfan_degrees = " << rl.env_options.fan_degrees
     << "\nmax_range = " << rl.env_options.max_range << "\nmob_move_prob = " << rl.env_options.mob_move_prob
     << "\n\n[reward]\nsuccess_weight = " << rl.reward.success_weight << "\nclip = " << flag(rl.reward.clip_enabled)
     << "\nclip_weight = " << rl.reward.clip_weight << "\ndistance = " << flag(rl.reward.distance_enabled)
     << "\ndistance_mode = " << distance_mode_name(rl.reward.distance_mode)
     << "\ndistance_target = " << rl.reward.distance_target << "\ndistance_weight = " << rl.reward.distance_weight
     << "\n\n[ppo]\nframes = " << a.rl_frames << "\nrollout_length = " << rl.rollout_length
     << "\nepochs = " << rl.hyper.epochs << "\nminibatch = " << rl.hyper.minibatch << "\nclip = " << rl.hyper.clip
     << "\nentropy_coef = " << rl.hyper.entropy_coef << "\nvalue_coef = " << rl.hyper.value_coef
     << "\nlearning_rate = " << rl.adam.lr << "\nmax_grad_norm = " << rl.adam.max_grad_norm << "\ngamma = " << rl.gamma
     << "\nlambda = " << rl.lambda << "\nhidden_dim = " << rl.hidden_dim << "\neval_interval = " << rl.eval_interval
     << "\neval_greedy = " << flag(rl.eval_greedy)
     << "\n\n[agents]\nmax_rounds = " << a.max_rounds << "\ninner_attempts = " << a.inner_attempts
     << "\nsuccess_threshold = " << a.success_threshold << "\nplanning_tips = " << flag(a.planning_tips)
     << "\ncode_only = " << flag(a.code_only) << "\nplan_retries = " << a.plan_retries
     << "\nfast_retries = " << a.fast_retries << "\nprobes = " << a.probes << "\neval_episodes = " << a.eval_episodes
     << "\ncritic = " << cfg.critic << "\n\n[backend]\nkind = " << cfg.backend.kind
     << "\nfixture = " << cfg.backend.fixture.string() << "\nendpoint = " << cfg.backend.endpoint
     << "\nmodel = " << cfg.backend.model << "\nkey_env = " << cfg.backend.key_env
     << "\ntemperature = " << cfg.backend.temperature << "\ntimeout_seconds = " << cfg.backend.timeout_seconds
     << "\nretries = " << cfg.backend.retries << "\n\n[ablate]\nvariants = ";
  for (std::size_t i = 0; i < cfg.variants.size(); ++i) os << (i ? ", " : "") << cfg.variants[i];
  os << "\n";
  return os.str();
}

}  // namespace hcraft::harness
