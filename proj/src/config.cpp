#include "rme/config.hpp"

#include "rme/error.hpp"
#include "rme/io.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>

namespace rme {
namespace {

struct BadValue {
  std::string why;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw BadValue{"expected a finite number"};
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw BadValue{"expected a non-negative integer"};
  return out;
}

int to_int(const std::string& v) {
  const std::uint64_t u = to_u64(v);
  if (u > 1000000000ULL) throw BadValue{"integer out of range"};
  return static_cast<int>(u);
}

bool to_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw BadValue{"expected a boolean"};
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t end = v.find(',', pos);
    if (end == std::string::npos) end = v.size();
    std::string item = trim(std::string_view(v).substr(pos, end - pos));
    if (item.empty()) throw BadValue{"empty list item"};
    out.push_back(item);
    pos = end + 1;
  }
  return out;
}

std::array<double, 3> to_alpha(const std::string& v) {
  auto items = to_list(v);
  if (items.size() != 3) throw BadValue{"expected three comma-separated weights"};
  return {to_double(items[0]), to_double(items[1]), to_double(items[2])};
}

using Setter = std::function<void(Config&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // admm
    t["admm.alpha"] = [](Config& c, const std::string& v) { c.admm.alpha = to_alpha(v); };
    t["admm.lambda"] = [](Config& c, const std::string& v) { c.admm.lambda = to_double(v); };
    t["admm.mu"] = [](Config& c, const std::string& v) { c.admm.mu = to_double(v); };
    t["admm.theta"] = [](Config& c, const std::string& v) { c.admm.theta = to_double(v); };
    t["admm.beta"] = [](Config& c, const std::string& v) { c.admm.beta = to_double(v); };
    t["admm.rho"] = [](Config& c, const std::string& v) { c.admm.rho = to_double(v); };
    t["admm.growth"] = [](Config& c, const std::string& v) { c.admm.growth = to_double(v); };
    t["admm.penalty_cap"] = [](Config& c, const std::string& v) { c.admm.penalty_cap = to_double(v); };
    t["admm.delta"] = [](Config& c, const std::string& v) { c.admm.delta = to_double(v); };
    t["admm.max_iters"] = [](Config& c, const std::string& v) { c.admm.max_iters = to_int(v); };
    t["admm.tol"] = [](Config& c, const std::string& v) { c.admm.tol = to_double(v); };
    t["admm.check_invariants"] = [](Config& c, const std::string& v) { c.admm.check_invariants = to_bool(v); };
    // halrtc
    t["halrtc.alpha"] = [](Config& c, const std::string& v) { c.halrtc.alpha = to_alpha(v); };
    t["halrtc.rho"] = [](Config& c, const std::string& v) { c.halrtc.rho = to_double(v); };
    t["halrtc.max_iters"] = [](Config& c, const std::string& v) { c.halrtc.max_iters = to_int(v); };
    t["halrtc.tol"] = [](Config& c, const std::string& v) { c.halrtc.tol = to_double(v); };
    // train
    t["train.epochs"] = [](Config& c, const std::string& v) { c.train.epochs = to_int(v); };
    t["train.batch_size"] = [](Config& c, const std::string& v) { c.train.batch_size = to_u64(v); };
    t["train.lr"] = [](Config& c, const std::string& v) { c.train.lr = to_double(v); };
    t["train.lr_decay"] = [](Config& c, const std::string& v) { c.train.lr_decay = to_double(v); };
    t["train.seed"] = [](Config& c, const std::string& v) { c.train.seed = to_u64(v); };
    t["train.val_fraction"] = [](Config& c, const std::string& v) { c.train.val_fraction = to_double(v); };
    t["train.n_scenes"] = [](Config& c, const std::string& v) { c.train_scenes = to_u64(v); };
    t["train.sparsity"] = [](Config& c, const std::string& v) { c.train_sparsity = to_double(v); };
    // scene
    t["scene.h"] = [](Config& c, const std::string& v) { c.scene.h = to_u64(v); };
    t["scene.w"] = [](Config& c, const std::string& v) { c.scene.w = to_u64(v); };
    t["scene.k_bands"] = [](Config& c, const std::string& v) { c.scene.k_bands = to_u64(v); };
    t["scene.n_transmitters"] = [](Config& c, const std::string& v) { c.scene.n_transmitters = to_u64(v); };
    t["scene.n_exp_min"] = [](Config& c, const std::string& v) { c.scene.n_exp_min = to_double(v); };
    t["scene.n_exp_max"] = [](Config& c, const std::string& v) { c.scene.n_exp_max = to_double(v); };
    t["scene.shadow_sigma"] = [](Config& c, const std::string& v) { c.scene.shadow_sigma = to_double(v); };
    t["scene.shadow_corr"] = [](Config& c, const std::string& v) { c.scene.shadow_corr = to_double(v); };
    t["scene.n_obstructions"] = [](Config& c, const std::string& v) { c.scene.n_obstructions = to_u64(v); };
    t["scene.obstruction_depth"] = [](Config& c, const std::string& v) { c.scene.obstruction_depth = to_double(v); };
    t["scene.seed"] = [](Config& c, const std::string& v) { c.scene.seed = to_u64(v); };
    // model
    t["model.k_blocks"] = [](Config& c, const std::string& v) { c.model.k_blocks = to_u64(v); };
    t["model.mu"] = [](Config& c, const std::string& v) { c.model.mu = to_double(v); };
    t["model.theta"] = [](Config& c, const std::string& v) { c.model.theta = to_double(v); };
    t["model.beta"] = [](Config& c, const std::string& v) { c.model.beta = to_double(v); };
    t["model.delta"] = [](Config& c, const std::string& v) { c.model.delta = to_double(v); };
    t["model.rho"] = [](Config& c, const std::string& v) { c.model.rho = to_double(v); };
    t["model.omega"] = [](Config& c, const std::string& v) { c.model.omega = to_double(v); };
    t["model.hidden_channels"] = [](Config& c, const std::string& v) { c.model.hidden_channels = to_u64(v); };
    t["model.residual"] = [](Config& c, const std::string& v) { c.model.residual = to_bool(v); };
    t["model.weight_std"] = [](Config& c, const std::string& v) { c.model.weight_std = to_double(v); };
    t["model.zero_weights"] = [](Config& c, const std::string& v) { c.model.zero_weights = to_bool(v); };
    t["model.seed"] = [](Config& c, const std::string& v) { c.model.seed = to_u64(v); };
    // baselines and evaluation
    t["rbf.shape"] = [](Config& c, const std::string& v) { c.rbf.shape = to_double(v); };
    t["rbf.center"] = [](Config& c, const std::string& v) { c.rbf.center = to_bool(v); };
    t["eval.outage_threshold"] = [](Config& c, const std::string& v) { c.outage_threshold = to_double(v); };
    // sweep
    t["sweep.methods"] = [](Config& c, const std::string& v) { c.sweep.methods = to_list(v); };
    t["sweep.sparsities"] = [](Config& c, const std::string& v) {
      c.sweep.sparsities.clear();
      for (const auto& s : to_list(v)) c.sweep.sparsities.push_back(to_double(s));
    };
    t["sweep.seeds"] = [](Config& c, const std::string& v) {
      c.sweep.seeds.clear();
      for (const auto& s : to_list(v)) c.sweep.seeds.push_back(to_u64(s));
    };
    t["sweep.n_scenes"] = [](Config& c, const std::string& v) { c.sweep.n_scenes = to_u64(v); };
    t["sweep.scene_seed"] = [](Config& c, const std::string& v) { c.sweep.scene_seed = to_u64(v); };
    t["sweep.model"] = [](Config& c, const std::string& v) { c.sweep.model = v; };
    return t;
  }();
  return table;
}

} // namespace

Config parse_config(std::string_view text) {
  Config cfg;
  const auto& table = setters();
  std::size_t lineno = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) throw_config(where + ": expected key=value");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    auto it = table.find(key);
    if (it == table.end()) throw_config(where + ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const BadValue& e) {
      throw_config(where + ": bad value for '" + key + "': " + e.why);
    }
  }
  cfg.model.k_bands = cfg.scene.k_bands;
  cfg.model.grid = std::max(cfg.scene.h, cfg.scene.w);
  return cfg;
}

Config load_config(const std::string& path) {
  const io::Bytes raw = io::read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

} // namespace rme
