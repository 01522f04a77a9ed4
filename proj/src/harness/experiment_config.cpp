// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness/experiment_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "cfmimo/harness/units.hpp"

namespace cfmimo::harness {

using nlohmann::json;

namespace {

template <typename E>
using Names = std::vector<std::pair<const char*, E>>;

const Names<Algorithm> kAlgorithms{{"sf-maddpg", Algorithm::kSfMaddpg},
                                   {"maddpg", Algorithm::kMaddpg},
                                   {"fractional", Algorithm::kFractional},
                                   {"random", Algorithm::kRandom}};
const Names<phy::PrecoderKind> kPrecoders{{"mr", phy::PrecoderKind::kMr}, {"rzf", phy::PrecoderKind::kRzf}};
const Names<phy::PathlossModel> kPathloss{{"log-distance", phy::PathlossModel::kLogDistance},
                                          {"cost231-wi", phy::PathlossModel::kCost231WalfischIkegami}};
const Names<phy::CovarianceModel> kCovariance{{"uncorrelated", phy::CovarianceModel::kUncorrelated},
                                              {"local-scattering", phy::CovarianceModel::kLocalScattering}};
const Names<marl::PolicyGradient> kGradients{{"pathwise", marl::PolicyGradient::kPathwise},
                                             {"likelihood-ratio", marl::PolicyGradient::kLikelihoodRatio},
                                             {"deterministic", marl::PolicyGradient::kDeterministic}};
const Names<marl::AdvantageReward> kAdvantage{{"mixed", marl::AdvantageReward::kMixed},
                                              {"extrinsic", marl::AdvantageReward::kExtrinsic}};
const Names<policy::WeightMode> kWeights{{"hypernet", policy::WeightMode::kHypernet},
                                         {"finite-pool", policy::WeightMode::kFinitePool}};
const Names<gnn::PoolKind> kPools{{"max", gnn::PoolKind::kMax}, {"sum", gnn::PoolKind::kSum}};

template <typename E>
const char* name_of(const Names<E>& names, E v) {
  for (const auto& [n, e] : names)
    if (e == v) return n;
  return "?";
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

class Reader {
 public:
  explicit Reader(const std::map<std::string, std::string>& origins) : origins_(origins) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ConfigError(where(path) + ": " + (path.empty() ? "config" : path) + ": " + what);
  }

  void keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
        std::string list;
        for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        fail(join(path, k), "unknown key (expected one of: " + list + ")");
      }
    }
  }

  /// The sub-object at key, or nullptr when absent.
  const json* object(const json& o, const std::string& path, const char* key,
                     std::initializer_list<const char*> allowed) const {
    if (!o.contains(key)) return nullptr;
    const json& v = o.at(key);
    keys(v, join(path, key), allowed);
    return &v;
  }

  void size(const json& o, const std::string& path, const char* key, std::size_t& out, std::size_t min = 0) const {
    if (!o.contains(key)) return;
    const json& v = o.at(key);
    const std::string p = join(path, key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      fail(p, "expected a nonnegative integer, got " + v.dump());
    const auto x = v.get<std::uint64_t>();
    if (x < min) fail(p, "must be at least " + std::to_string(min));
    out = static_cast<std::size_t>(x);
  }

  void real(const json& o, const std::string& path, const char* key, double& out) const {
    if (!o.contains(key)) return;
    const json& v = o.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) fail(join(path, key), "expected a finite number, got " + v.dump());
    out = v.get<double>();
  }

  void flag(const json& o, const std::string& path, const char* key, bool& out) const {
    if (!o.contains(key)) return;
    const json& v = o.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false, got " + v.dump());
    out = v.get<bool>();
  }

  void text(const json& o, const std::string& path, const char* key, std::string& out) const {
    if (!o.contains(key)) return;
    const json& v = o.at(key);
    if (!v.is_string()) fail(join(path, key), "expected a string, got " + v.dump());
    out = v.get<std::string>();
  }

  // Numbers are SI (watts, meters); strings carry a unit.
  template <typename Parse>
  void quantity(const json& o, const std::string& path, const char* key, double& out, Parse parse,
                const char* kind) const {
    if (!o.contains(key)) return;
    const json& v = o.at(key);
    const std::string p = join(path, key);
    if (v.is_number()) {
      real(o, path, key, out);
    } else if (v.is_string()) {
      try {
        out = parse(v.get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail(p, e.what());
      }
    } else {
      fail(p, std::string("expected a ") + kind + " (number or string with unit), got " + v.dump());
    }
  }
  void power(const json& o, const std::string& path, const char* key, double& out) const {
    quantity(o, path, key, out, parse_power, "power");
  }
  void length(const json& o, const std::string& path, const char* key, double& out) const {
    quantity(o, path, key, out, parse_length, "length");
  }

  void sizes(const json& o, const std::string& path, const char* key, std::vector<std::size_t>& out,
             std::size_t min = 1) const {
    if (!o.contains(key)) return;
    const json& v = o.at(key);
    const std::string p = join(path, key);
    if (!v.is_array()) fail(p, "expected an array of integers");
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_unsigned() || v[i].get<std::uint64_t>() < min)
        fail(p + "[" + std::to_string(i) + "]", "expected an integer >= " + std::to_string(min) + ", got " + v[i].dump());
      r.push_back(static_cast<std::size_t>(v[i].get<std::uint64_t>()));
    }
    out = std::move(r);
  }

  template <typename E>
  void choice(const json& o, const std::string& path, const char* key, E& out, const Names<E>& names) const {
    if (!o.contains(key)) return;
    const json& v = o.at(key);
    std::string list;
    for (const auto& [n, e] : names) {
      if (v.is_string() && v.get<std::string>() == n) {
        out = e;
        return;
      }
      list += (list.empty() ? "" : ", ") + std::string(n);
    }
    fail(join(path, key), "expected one of " + list + ", got " + v.dump());
  }

 private:
  std::string where(std::string path) const {
    while (true) {
      if (auto it = origins_.find(path); it != origins_.end()) return it->second;
      if (path.empty()) break;
      const auto cut = path.find_last_of(".[");
      path = cut == std::string::npos ? "" : path.substr(0, cut);
    }
    if (auto it = origins_.find(""); it != origins_.end()) return it->second;
    return "config";
  }

  const std::map<std::string, std::string>& origins_;
};

void read_env(const Reader& r, const json& e, env::EnvConfig& c) {
  const std::string p = "env";
  r.keys(e, p,
         {"M", "K", "N", "area_min", "area_max", "wraparound", "d_min", "p_ap_max", "p_an_max", "noise_power",
          "pilot_power", "tau_p", "tau_c", "max_step", "episode_length", "precoder", "mc_draws_train", "mc_draws_eval",
          "mc_threads", "pathloss", "covariance"});
  r.size(e, p, "M", c.M, 1);
  r.size(e, p, "K", c.K, 1);
  r.size(e, p, "N", c.N, 1);
  r.length(e, p, "area_min", c.area_min);
  r.length(e, p, "area_max", c.area_max);
  r.flag(e, p, "wraparound", c.wraparound);
  r.length(e, p, "d_min", c.d_min);
  r.power(e, p, "p_ap_max", c.p_ap_max);
  r.power(e, p, "p_an_max", c.p_an_max);
  r.power(e, p, "noise_power", c.noise_power);
  r.power(e, p, "pilot_power", c.pilot_power);
  r.size(e, p, "tau_p", c.tau_p);
  r.size(e, p, "tau_c", c.tau_c, 1);
  r.length(e, p, "max_step", c.max_step);
  r.size(e, p, "episode_length", c.episode_length, 1);
  r.choice(e, p, "precoder", c.precoder, kPrecoders);
  r.size(e, p, "mc_draws_train", c.mc_draws_train, 1);
  r.size(e, p, "mc_draws_eval", c.mc_draws_eval, 1);
  r.size(e, p, "mc_threads", c.mc_threads, 1);
  if (const json* pl = r.object(e, p, "pathloss",
                                {"model", "intercept_db", "slope_db", "carrier_mhz", "bs_height_m", "ms_height_m",
                                 "roof_height_m", "street_width_m", "building_separation_m", "street_orientation_deg",
                                 "metropolitan"})) {
    const std::string q = "env.pathloss";
    auto& l = c.pathloss;
    r.choice(*pl, q, "model", l.model, kPathloss);
    r.real(*pl, q, "intercept_db", l.intercept_db);
    r.real(*pl, q, "slope_db", l.slope_db);
    r.real(*pl, q, "carrier_mhz", l.carrier_mhz);
    r.real(*pl, q, "bs_height_m", l.bs_height_m);
    r.real(*pl, q, "ms_height_m", l.ms_height_m);
    r.real(*pl, q, "roof_height_m", l.roof_height_m);
    r.real(*pl, q, "street_width_m", l.street_width_m);
    r.real(*pl, q, "building_separation_m", l.building_separation_m);
    r.real(*pl, q, "street_orientation_deg", l.street_orientation_deg);
    r.flag(*pl, q, "metropolitan", l.metropolitan);
  }
  if (const json* cv =
          r.object(e, p, "covariance", {"model", "angular_spread_deg", "antenna_spacing", "quadrature"})) {
    const std::string q = "env.covariance";
    r.choice(*cv, q, "model", c.covariance.model, kCovariance);
    r.real(*cv, q, "angular_spread_deg", c.covariance.angular_spread_deg);
    r.real(*cv, q, "antenna_spacing", c.covariance.antenna_spacing);
    r.size(*cv, q, "quadrature", c.covariance.quadrature, 1);
  }
}

void read_train(const Reader& r, const json& t, marl::TrainerConfig& c) {
  const std::string p = "train";
  r.keys(t, p,
         {"replay_capacity", "batch_size", "warmup_episodes", "update_every", "updates_per_round", "sigma",
          "sigma_decay", "sigma_min", "temperature", "temperature_decay", "temperature_min", "plateau_window",
          "checkpoint_every", "mlp_hidden", "mlp_slope", "learner", "dhpn", "gnn"});
  r.size(t, p, "replay_capacity", c.replay_capacity, 1);
  r.size(t, p, "batch_size", c.batch_size, 1);
  r.size(t, p, "warmup_episodes", c.warmup_episodes);
  r.size(t, p, "update_every", c.update_every, 1);
  r.size(t, p, "updates_per_round", c.updates_per_round, 1);
  r.real(t, p, "sigma", c.sigma);
  r.real(t, p, "sigma_decay", c.sigma_decay);
  r.real(t, p, "sigma_min", c.sigma_min);
  r.real(t, p, "temperature", c.temperature);
  r.real(t, p, "temperature_decay", c.temperature_decay);
  r.real(t, p, "temperature_min", c.temperature_min);
  r.size(t, p, "plateau_window", c.plateau_window);
  r.size(t, p, "checkpoint_every", c.checkpoint_every);
  r.sizes(t, p, "mlp_hidden", c.mlp_hidden);
  r.real(t, p, "mlp_slope", c.mlp_slope);
  if (c.sigma < 0.0 || c.sigma_min < 0.0) r.fail("train.sigma", "exploration noise must be nonnegative");
  if (!(c.temperature > 0.0) || !(c.temperature_min > 0.0))
    r.fail("train.temperature", "Gumbel temperatures must be positive");

  if (const json* l = r.object(t, p, "learner",
                               {"gamma_m", "gamma_ex", "gamma_a", "tau", "lr", "actor_lr", "inner_step", "clip",
                                "critic_hidden", "reward", "mix_intrinsic", "policy_gradient", "advantage_reward",
                                "fresh_mixed_reward", "reward_anchor", "action_l2", "fd_length"})) {
    const std::string q = "train.learner";
    auto& c2 = c.learner;
    r.real(*l, q, "gamma_m", c2.gamma_m);
    r.real(*l, q, "gamma_ex", c2.gamma_ex);
    r.real(*l, q, "gamma_a", c2.gamma_a);
    r.real(*l, q, "tau", c2.tau);
    r.real(*l, q, "lr", c2.lr);
    r.real(*l, q, "actor_lr", c2.actor_lr);
    r.real(*l, q, "inner_step", c2.inner_step);
    r.real(*l, q, "clip", c2.clip);
    r.sizes(*l, q, "critic_hidden", c2.critic_hidden);
    r.flag(*l, q, "mix_intrinsic", c2.mix_intrinsic);
    r.choice(*l, q, "policy_gradient", c2.gradient, kGradients);
    r.choice(*l, q, "advantage_reward", c2.advantage_reward, kAdvantage);
    r.flag(*l, q, "fresh_mixed_reward", c2.fresh_mixed_reward);
    r.real(*l, q, "reward_anchor", c2.reward_anchor);
    r.real(*l, q, "action_l2", c2.action_l2);
    r.real(*l, q, "fd_length", c2.fd_length);
    if (const json* w = r.object(*l, q, "reward", {"embed_width", "heads", "mixer_width"})) {
      const std::string s = q + ".reward";
      r.size(*w, s, "embed_width", c2.reward.embed_width, 1);
      r.size(*w, s, "heads", c2.reward.heads, 1);
      r.size(*w, s, "mixer_width", c2.reward.mixer_width, 1);
      if (c2.reward.embed_width % c2.reward.heads != 0) r.fail(s + ".heads", "must divide embed_width");
    }
    for (const auto& [name, v] : {std::pair{"gamma_m", c2.gamma_m}, {"gamma_ex", c2.gamma_ex}, {"gamma_a", c2.gamma_a}})
      if (v < 0.0 || v > 1.0) r.fail(q + "." + name, "discount must lie in [0, 1]");
    if (c2.tau < 0.0 || c2.tau > 1.0) r.fail(q + ".tau", "polyak rate must lie in [0, 1]");
    if (!(c2.lr > 0.0) || !(c2.actor_lr > 0.0)) r.fail(q + ".lr", "learning rates must be positive");
    if (!(c2.clip > 0.0)) r.fail(q + ".clip", "gradient clip must be positive");
    if (!(c2.fd_length > 0.0)) r.fail(q + ".fd_length", "must be positive");
  }
  if (const json* d = r.object(t, p, "dhpn", {"weights", "d_r", "hyper_hidden", "head_widths", "pool_size", "recurrent"})) {
    const std::string q = "train.dhpn";
    r.choice(*d, q, "weights", c.dhpn.mode, kWeights);
    r.size(*d, q, "d_r", c.dhpn.d_r, 1);
    r.size(*d, q, "hyper_hidden", c.dhpn.hyper_hidden, 1);
    r.sizes(*d, q, "head_widths", c.dhpn.head_widths);
    r.size(*d, q, "pool_size", c.dhpn.pool_size, 1);
    r.flag(*d, q, "recurrent", c.dhpn.recurrent);
  }
  if (const json* g = r.object(t, p, "gnn",
                               {"encoder_width", "layer_widths", "heads", "key_width", "top_k", "threshold", "pool",
                                "straight_through"})) {
    const std::string q = "train.gnn";
    auto& c3 = c.dhpn.gnn;
    r.size(*g, q, "encoder_width", c3.encoder_width, 1);
    r.sizes(*g, q, "layer_widths", c3.layer_widths);
    r.size(*g, q, "heads", c3.heads, 1);
    r.size(*g, q, "key_width", c3.key_width, 1);
    r.size(*g, q, "top_k", c3.top_k, 1);
    r.real(*g, q, "threshold", c3.threshold);
    r.choice(*g, q, "pool", c3.pool, kPools);
    r.flag(*g, q, "straight_through", c3.straight_through);
  }
}

}  // namespace

std::string to_string(Algorithm a) { return name_of(kAlgorithms, a); }

Algorithm parse_algorithm(const std::string& name) {
  for (const auto& [n, a] : kAlgorithms)
    if (name == n) return a;
  throw ConfigError("unknown algorithm '" + name + "' (sf-maddpg, maddpg, fractional, random)");
}

marl::TrainerConfig ExperimentConfig::trainer_config(std::uint64_t seed, const std::string& dir) const {
  marl::TrainerConfig t = trainer;
  t.seed = seed;
  t.output_dir = dir;
  t.max_episodes = episodes;
  t.actor = features.permutation ? marl::ActorKind::kDhpn : marl::ActorKind::kMlp;
  t.dhpn.use_gnn = features.gnn;
  t.dhpn.joint = features.joint;
  t.learner.intrinsic = features.intrinsic;
  return t;
}

ExperimentConfig preset(Algorithm a) {
  ExperimentConfig c;
  c.algorithm = a;
  c.env.M = 4;
  c.env.K = 3;
  c.env.N = 2;
  auto& t = c.trainer;
  t.batch_size = 64;
  t.update_every = 4;
  t.sigma = 0.3;
  t.sigma_decay = 0.995;
  t.sigma_min = 0.05;
  t.plateau_window = 0;
  t.dhpn.d_r = 32;
  t.dhpn.hyper_hidden = 32;
  t.dhpn.head_widths = {64, 32};
  t.learner.gradient = marl::PolicyGradient::kPathwise;
  if (a != Algorithm::kSfMaddpg) {
    c.features.permutation = false;
    c.features.intrinsic = false;
  }
  if (a == Algorithm::kMaddpg) t.learner.gradient = marl::PolicyGradient::kDeterministic;
  return c;
}

std::map<std::string, std::string> locate_keys(const std::string& text, const std::string& source) {
  struct Frame {
    bool object;
    std::string path;
    std::size_t index = 0;
    std::string key;
    bool expect_key = true;
  };
  std::map<std::string, std::string> out;
  std::vector<Frame> stack;
  std::size_t line = 1;
  const auto here = [&] { return source + ":" + std::to_string(line); };
  const auto value_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    return f.object ? join(f.path, f.key) : f.path + "[" + std::to_string(f.index) + "]";
  };
  // Object members are located at their key; array elements and the root at their first character.
  const auto mark_value = [&] {
    if (stack.empty() || !stack.back().object) out.emplace(value_path(), here());
  };
  out.emplace("", source);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        s += text[i];
      }
      if (!stack.empty() && stack.back().object && stack.back().expect_key) {
        stack.back().key = s;
        stack.back().expect_key = false;
        out.emplace(value_path(), here());
      } else {
        mark_value();
      }
    } else if (c == '{' || c == '[') {
      mark_value();
      Frame f;
      f.object = c == '{';
      f.path = value_path();
      stack.push_back(std::move(f));
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object)
          stack.back().expect_key = true;
        else
          ++stack.back().index;
      }
    } else if (!std::isspace(static_cast<unsigned char>(c)) && c != ':') {
      mark_value();
      while (i + 1 < text.size() && std::string_view(",}]\n \t\r").find(text[i + 1]) == std::string_view::npos) ++i;
    }
  }
  return out;
}

void apply_override(json& doc, const std::string& assignment, std::map<std::string, std::string>* origins) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set " + assignment + ": expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  if (!doc.is_object()) doc = json::object();
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set " + assignment + ": empty key component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    json& next = (*node)[part];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("--set " + assignment + ": '" + part + "' is not an object");
    node = &next;
    start = dot + 1;
  }
  if (origins) (*origins)[key] = "--set " + assignment;
}

ExperimentConfig parse_experiment(const json& doc, const std::map<std::string, std::string>& origins) {
  const Reader r(origins);
  r.keys(doc, "",
         {"algorithm", "features", "seeds", "episodes", "eval_episodes", "eval_full_draws", "output_dir", "env",
          "train"});
  Algorithm a = Algorithm::kSfMaddpg;
  r.choice(doc, "", "algorithm", a, kAlgorithms);
  ExperimentConfig c = preset(a);
  if (const json* f = r.object(doc, "", "features", {"permutation", "gnn", "intrinsic", "joint"})) {
    r.flag(*f, "features", "permutation", c.features.permutation);
    r.flag(*f, "features", "gnn", c.features.gnn);
    r.flag(*f, "features", "intrinsic", c.features.intrinsic);
    r.flag(*f, "features", "joint", c.features.joint);
  }
  if (c.features.gnn && !c.features.permutation)
    r.fail("features.gnn", "the communication backbone needs the permutation actor");
  if (doc.contains("seeds")) {
    const json& s = doc.at("seeds");
    if (!s.is_array() || s.empty()) r.fail("seeds", "expected a nonempty array of nonnegative integers");
    c.seeds.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_unsigned()) r.fail("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
      c.seeds.push_back(s[i].get<std::uint64_t>());
    }
  }
  r.size(doc, "", "episodes", c.episodes, 1);
  r.size(doc, "", "eval_episodes", c.eval_episodes);
  r.flag(doc, "", "eval_full_draws", c.eval_full_draws);
  r.text(doc, "", "output_dir", c.output_dir);
  if (doc.contains("env")) read_env(r, doc.at("env"), c.env);
  if (doc.contains("train")) read_train(r, doc.at("train"), c.trainer);
  try {
    c.env.validate();
  } catch (const ConfigError& e) {
    r.fail("env", e.what());
  }
  return c;
}

namespace {

json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n');
    std::string msg = e.what();
    if (const auto cut = msg.find("syntax error"); cut != std::string::npos) msg = msg.substr(cut);
    throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
  }
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& text, const std::string& source) {
  return parse_experiment(parse_text(text, source), locate_keys(text, source));
}

json to_json(const ExperimentConfig& c) {
  const auto& e = c.env;
  const auto& t = c.trainer;
  const auto& l = t.learner;
  const auto& g = t.dhpn.gnn;
  json doc;
  doc["algorithm"] = to_string(c.algorithm);
  doc["features"] = {{"permutation", c.features.permutation},
                     {"gnn", c.features.gnn},
                     {"intrinsic", c.features.intrinsic},
                     {"joint", c.features.joint}};
  doc["seeds"] = c.seeds;
  doc["episodes"] = c.episodes;
  doc["eval_episodes"] = c.eval_episodes;
  doc["eval_full_draws"] = c.eval_full_draws;
  doc["output_dir"] = c.output_dir;
  doc["env"] = {{"M", e.M},
                {"K", e.K},
                {"N", e.N},
                {"area_min", e.area_min},
                {"area_max", e.area_max},
                {"wraparound", e.wraparound},
                {"d_min", e.d_min},
                {"p_ap_max", e.p_ap_max},
                {"p_an_max", e.p_an_max},
                {"noise_power", e.noise_power},
                {"pilot_power", e.pilot_power},
                {"tau_p", e.tau_p},
                {"tau_c", e.tau_c},
                {"max_step", e.max_step},
                {"episode_length", e.episode_length},
                {"precoder", name_of(kPrecoders, e.precoder)},
                {"mc_draws_train", e.mc_draws_train},
                {"mc_draws_eval", e.mc_draws_eval},
                {"mc_threads", e.mc_threads}};
  doc["env"]["pathloss"] = {{"model", name_of(kPathloss, e.pathloss.model)},
                            {"intercept_db", e.pathloss.intercept_db},
                            {"slope_db", e.pathloss.slope_db},
                            {"carrier_mhz", e.pathloss.carrier_mhz},
                            {"bs_height_m", e.pathloss.bs_height_m},
                            {"ms_height_m", e.pathloss.ms_height_m},
                            {"roof_height_m", e.pathloss.roof_height_m},
                            {"street_width_m", e.pathloss.street_width_m},
                            {"building_separation_m", e.pathloss.building_separation_m},
                            {"street_orientation_deg", e.pathloss.street_orientation_deg},
                            {"metropolitan", e.pathloss.metropolitan}};
  doc["env"]["covariance"] = {{"model", name_of(kCovariance, e.covariance.model)},
                              {"angular_spread_deg", e.covariance.angular_spread_deg},
                              {"antenna_spacing", e.covariance.antenna_spacing},
                              {"quadrature", e.covariance.quadrature}};
  json train = {{"replay_capacity", t.replay_capacity},
                {"batch_size", t.batch_size},
                {"warmup_episodes", t.warmup_episodes},
                {"update_every", t.update_every},
                {"updates_per_round", t.updates_per_round},
                {"sigma", t.sigma},
                {"sigma_decay", t.sigma_decay},
                {"sigma_min", t.sigma_min},
                {"temperature", t.temperature},
                {"temperature_decay", t.temperature_decay},
                {"temperature_min", t.temperature_min},
                {"plateau_window", t.plateau_window},
                {"checkpoint_every", t.checkpoint_every},
                {"mlp_hidden", t.mlp_hidden},
                {"mlp_slope", t.mlp_slope}};
  train["learner"] = {{"gamma_m", l.gamma_m},
                      {"gamma_ex", l.gamma_ex},
                      {"gamma_a", l.gamma_a},
                      {"tau", l.tau},
                      {"lr", l.lr},
                      {"actor_lr", l.actor_lr},
                      {"inner_step", l.inner_step},
                      {"clip", l.clip},
                      {"critic_hidden", l.critic_hidden},
                      {"reward",
                       {{"embed_width", l.reward.embed_width},
                        {"heads", l.reward.heads},
                        {"mixer_width", l.reward.mixer_width}}},
                      {"mix_intrinsic", l.mix_intrinsic},
                      {"policy_gradient", name_of(kGradients, l.gradient)},
                      {"advantage_reward", name_of(kAdvantage, l.advantage_reward)},
                      {"fresh_mixed_reward", l.fresh_mixed_reward},
                      {"reward_anchor", l.reward_anchor},
                      {"action_l2", l.action_l2},
                      {"fd_length", l.fd_length}};
  train["dhpn"] = {{"weights", name_of(kWeights, t.dhpn.mode)},
                   {"d_r", t.dhpn.d_r},
                   {"hyper_hidden", t.dhpn.hyper_hidden},
                   {"head_widths", t.dhpn.head_widths},
                   {"pool_size", t.dhpn.pool_size},
                   {"recurrent", t.dhpn.recurrent}};
  train["gnn"] = {{"encoder_width", g.encoder_width},
                  {"layer_widths", g.layer_widths},
                  {"heads", g.heads},
                  {"key_width", g.key_width},
                  {"top_k", g.top_k},
                  {"threshold", g.threshold},
                  {"pool", name_of(kPools, g.pool)},
                  {"straight_through", g.straight_through}};
  doc["train"] = std::move(train);
  return doc;
}

ExperimentConfig load_experiment_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc = parse_text(text, path);
  auto origins = locate_keys(text, path);
  for (const auto& o : overrides) apply_override(doc, o, &origins);
  return parse_experiment(doc, origins);
}

}  // namespace cfmimo::harness
