#pragma once

// Scenario + hyperparameter configuration: a small TOML subset (sections,
// scalar keys, one-line arrays), the built-in defaults, and a canonical JSON
// rendering used for hashing run manifests.

#include "ajam/agents.hpp"
#include "ajam/common.hpp"
#include "ajam/environment.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace ajam {

struct Config {
  Scenario scenario = Scenario::reference();
  Hyperparameters hyper{};
};

namespace cfg {

using Scalar = std::variant<double, bool, std::string>;
struct Value {
  bool is_array = false;
  std::vector<Scalar> items;
  int line = 0;
};

using Table = std::map<std::string, Value>;  // "section.key" -> value

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

[[noreturn]] inline void fail(const std::string& origin, int line, const std::string& what) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

inline Scalar parse_scalar(std::string tok, const std::string& origin, int line, const std::string& key) {
  tok = trim(tok);
  if (tok.empty()) fail(origin, line, "missing value for '" + key + "'");
  if (tok == "true") return true;
  if (tok == "false") return false;
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') fail(origin, line, "unterminated string for '" + key + "'");
    return tok.substr(1, tok.size() - 2);
  }
  std::string clean;
  for (char c : tok)
    if (c != '_') clean += c;
  double v = 0.0;
  const char* b = clean.data();
  const char* e = b + clean.size();
  if (*b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e) fail(origin, line, "malformed value for '" + key + "': " + tok);
  return v;
}

inline Table parse(const std::string& text, const std::string& origin) {
  Table t;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) fail(origin, line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      for (char c : section)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
          fail(origin, line, "malformed section name '" + section + "'");
      t.emplace(section + ".", Value{false, {}, line});  // marks the section as present
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(origin, line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail(origin, line, "empty key");
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
        fail(origin, line, "malformed key '" + key + "'");
    if (section.empty()) fail(origin, line, "key '" + key + "' outside any section");
    const std::string full = section + "." + key;
    std::string rhs = trim(s.substr(eq + 1));
    Value v;
    v.line = line;
    if (!rhs.empty() && rhs.front() == '[') {
      if (rhs.back() != ']') fail(origin, line, "unterminated array for '" + full + "'");
      v.is_array = true;
      const std::string body = trim(rhs.substr(1, rhs.size() - 2));
      if (!body.empty()) {
        std::string item;
        std::istringstream items(body);
        while (std::getline(items, item, ',')) {
          if (trim(item).empty()) continue;
          v.items.push_back(parse_scalar(item, origin, line, full));
        }
      }
    } else {
      v.items.push_back(parse_scalar(rhs, origin, line, full));
    }
    if (!t.emplace(full, std::move(v)).second) fail(origin, line, "duplicate key '" + full + "'");
  }
  return t;
}

/// Consumes keys from a parsed table, with type checks naming the key.
class Reader {
 public:
  Reader(Table t, std::string origin) : t_(std::move(t)), origin_(std::move(origin)) {}

  bool has_section(const std::string& s) const { return t_.count(s + ".") > 0; }

  std::vector<std::string> sections_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : t_)
      if (k.back() == '.' && k.size() > prefix.size() + 1 && k.rfind(prefix, 0) == 0)
        out.push_back(k.substr(0, k.size() - 1));
    return out;
  }

  bool num(const std::string& key, double& out) {
    const Value* v = take(key);
    if (!v) return false;
    if (v->is_array || !std::holds_alternative<double>(v->items[0])) bad(*v, key, "a number");
    out = std::get<double>(v->items[0]);
    return true;
  }

  bool integer(const std::string& key, int& out) {
    double d = 0;
    const Value* v = peek(key);
    if (!num(key, d)) return false;
    if (d != std::floor(d) || std::abs(d) > 1e9) bad(*v, key, "an integer");
    out = static_cast<int>(d);
    return true;
  }

  bool boolean(const std::string& key, bool& out) {
    const Value* v = take(key);
    if (!v) return false;
    if (v->is_array || !std::holds_alternative<bool>(v->items[0])) bad(*v, key, "true or false");
    out = std::get<bool>(v->items[0]);
    return true;
  }

  bool str(const std::string& key, std::string& out) {
    const Value* v = take(key);
    if (!v) return false;
    if (v->is_array || !std::holds_alternative<std::string>(v->items[0])) bad(*v, key, "a string");
    out = std::get<std::string>(v->items[0]);
    return true;
  }

  bool nums(const std::string& key, std::vector<double>& out) {
    const Value* v = take(key);
    if (!v) return false;
    if (!v->is_array) bad(*v, key, "an array of numbers");
    out.clear();
    for (const auto& s : v->items) {
      if (!std::holds_alternative<double>(s)) bad(*v, key, "an array of numbers");
      out.push_back(std::get<double>(s));
    }
    return true;
  }

  bool strs(const std::string& key, std::vector<std::string>& out) {
    const Value* v = take(key);
    if (!v) return false;
    if (!v->is_array) bad(*v, key, "an array of strings");
    out.clear();
    for (const auto& s : v->items) {
      if (!std::holds_alternative<std::string>(s)) bad(*v, key, "an array of strings");
      out.push_back(std::get<std::string>(s));
    }
    return true;
  }

  bool point(const std::string& key, Point& out) {
    std::vector<double> xy;
    const Value* v = peek(key);
    if (!nums(key, xy)) return false;
    if (xy.size() != 2) bad(*v, key, "a [x, y] pair");
    out = {xy[0], xy[1]};
    return true;
  }

  void reject_leftovers() const {
    for (const auto& [k, v] : t_)
      if (k.back() != '.' && !used_.count(k)) fail(origin_, v.line, "unknown key '" + k + "'");
    for (const auto& [k, v] : t_)
      if (k.back() == '.' && !known_sections_.count(k.substr(0, k.size() - 1)))
        fail(origin_, v.line, "unknown section '" + k.substr(0, k.size() - 1) + "'");
  }

  void known_section(const std::string& s) { known_sections_.insert(s); }
  const std::string& origin() const { return origin_; }
  int line_of(const std::string& key) const {
    auto it = t_.find(key);
    return it == t_.end() ? 0 : it->second.line;
  }

 private:
  const Value* peek(const std::string& key) const {
    auto it = t_.find(key);
    return it == t_.end() ? nullptr : &it->second;
  }
  const Value* take(const std::string& key) {
    const Value* v = peek(key);
    if (v) used_.insert(key);
    return v;
  }
  [[noreturn]] void bad(const Value& v, const std::string& key, const char* want) const {
    fail(origin_, v.line, "'" + key + "' must be " + want);
  }

  Table t_;
  std::string origin_;
  std::set<std::string> used_;
  std::set<std::string> known_sections_;
};

}  // namespace cfg

/// Parses configuration text. Missing keys keep their defaults; unknown keys
/// and sections are rejected; constraint violations name the offending key.
inline Config parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  cfg::Reader r(cfg::parse(text, origin), origin);
  Config c;
  Scenario& sc = c.scenario;
  Hyperparameters& hp = c.hyper;
  for (const char* s : {"geometry", "radio", "jammers", "timescale", "uncertainty", "training"}) r.known_section(s);

  auto& g = sc.geometry;
  r.point("geometry.tx_km", g.tx);
  r.point("geometry.rx_km", g.rx);
  r.num("geometry.d0_km", g.d0_km);
  r.num("geometry.tau", g.tau);

  auto& rp = sc.radio;
  r.integer("radio.n_channels", rp.n_channels);
  r.num("radio.bandwidth_hz", rp.bandwidth_hz);
  r.nums("radio.power_levels_dbm", rp.power_levels_dbm);
  {
    std::vector<std::string> names;
    std::vector<double> orders;
    const bool hn = r.strs("radio.modulation_names", names);
    const bool ho = r.nums("radio.modulation_orders", orders);
    if (hn || ho) {
      if (!(hn && ho) || names.size() != orders.size())
        cfg::fail(origin, r.line_of(hn ? "radio.modulation_names" : "radio.modulation_orders"),
                  "radio.modulation_names and radio.modulation_orders must be given together with equal length");
      rp.modulations.clear();
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (orders[i] != std::floor(orders[i])) throw ConfigError("radio.modulation_orders: orders must be integers");
        rp.modulations.push_back({names[i], static_cast<int>(orders[i])});
      }
    }
  }
  r.nums("radio.demod_thresholds_db", rp.demod_thresholds_db);
  r.num("radio.floor_threshold_db", rp.floor_threshold_db);
  r.num("radio.noise_dbm", rp.noise_dbm);
  r.num("radio.throughput_threshold_bps", rp.throughput_threshold_bps);
  r.boolean("radio.rayleigh_fading", rp.rayleigh_fading);
  r.nums("radio.bucket_rewards", rp.bucket_rewards);
  r.num("radio.floor_reward", rp.floor_reward);
  r.num("radio.suboptimal_penalty", rp.suboptimal_penalty);
  r.num("radio.state_ref_w", rp.state_ref_w);

  // Jammers: [jammers] count resizes the default list; [jammers.N] edits entry N (1-based).
  {
    int count = sc.n_jammers();
    r.integer("jammers.count", count);
    if (count < 0) throw ConfigError("jammers.count: must be >= 0");
    const std::size_t defaults = sc.jammers.size();
    sc.jammers.resize(static_cast<std::size_t>(count));
    std::vector<bool> period_set(sc.jammers.size(), false);
    for (const std::string& s : r.sections_with_prefix("jammers.")) {
      const std::string idx = s.substr(8);
      int n = 0;
      auto res = std::from_chars(idx.data(), idx.data() + idx.size(), n);
      if (res.ec != std::errc{} || res.ptr != idx.data() + idx.size() || n < 1 || n > count)
        throw ConfigError("[" + s + "]: jammer index must be in 1.." + std::to_string(count));
      r.known_section(s);
      JammerSpec& j = sc.jammers[static_cast<std::size_t>(n - 1)];
      std::string kind;
      if (r.str(s + ".kind", kind)) {
        if (kind == "cognitive") j.kind = JammerKind::Cognitive;
        else if (kind == "comb") j.kind = JammerKind::CombSweep;
        else throw ConfigError(s + ".kind: expected \"cognitive\" or \"comb\"");
      } else if (static_cast<std::size_t>(n) > defaults) {
        throw ConfigError(s + ".kind: required for jammers beyond the defaults");
      }
      r.point(s + ".position_km", j.position);
      r.num(s + ".power_dbm", j.power_dbm);
      r.num(s + ".detect_threshold_dbm", j.detect_threshold_dbm);
      r.integer(s + ".teeth", j.comb.teeth);
      r.integer(s + ".spacing", j.comb.spacing);
      r.integer(s + ".phase", j.comb.phase);
      period_set[static_cast<std::size_t>(n - 1)] = r.integer(s + ".period", j.comb.period);
      std::string dir;
      if (r.str(s + ".direction", dir)) {
        if (dir == "ascending") j.comb.descending = false;
        else if (dir == "descending") j.comb.descending = true;
        else throw ConfigError(s + ".direction: expected \"ascending\" or \"descending\"");
      }
    }
    for (std::size_t i = 0; i < sc.jammers.size(); ++i)
      if (!period_set[i] && sc.jammers[i].kind == JammerKind::CombSweep) sc.jammers[i].comb.period = rp.n_channels;
  }

  auto& ts = sc.timescale;
  r.integer("timescale.total_ms", ts.total_ms);
  r.integer("timescale.long_ms", ts.long_ms);
  r.integer("timescale.short_ms", ts.short_ms);

  r.num("uncertainty.epsilon_w", sc.uncertainty.eps_per_jammer_w);
  {
    std::string ball;
    if (r.str("uncertainty.ball", ball)) {
      if (ball == "box") sc.uncertainty.ball = BallKind::Box;
      else if (ball == "l2") sc.uncertainty.ball = BallKind::L2;
      else throw ConfigError("uncertainty.ball: expected \"box\" or \"l2\"");
    }
  }

  r.integer("training.episodes", hp.episodes);
  r.num("training.lr", hp.lr);
  r.num("training.lr_decay", hp.lr_decay);
  r.num("training.lr_floor", hp.lr_floor);
  r.num("training.gamma", hp.gamma);
  r.integer("training.batch", hp.batch);
  r.integer("training.buffer_frequency", hp.buffer_frequency);
  r.integer("training.buffer_power", hp.buffer_power);
  r.integer("training.buffer_modulation", hp.buffer_modulation);
  r.integer("training.target_sync", hp.target_sync);
  r.num("training.explore_start", hp.explore_start);
  r.num("training.explore_end", hp.explore_end);
  r.num("training.explore_fraction", hp.explore_fraction);
  r.integer("training.pgd_steps", hp.pgd_steps);
  r.num("training.pgd_step_frac", hp.pgd_step_frac);
  r.num("training.pgd_delta", hp.pgd_delta);
  r.num("training.compression", hp.compression);
  r.num("training.omega_frequency", hp.omega_frequency);
  r.num("training.omega_power", hp.omega_power);
  r.num("training.omega_modulation", hp.omega_modulation);
  r.integer("training.hidden", hp.hidden);
  r.integer("training.depth", hp.depth);
  r.num("training.reward_unit_bps", hp.reward_unit_bps);
  r.num("training.grad_clip", hp.grad_clip);

  r.reject_leftovers();
  sc.validate();
  hp.validate();
  return c;
}

inline Config parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

/// Fully resolved configuration as JSON with sorted keys.
inline nlohmann::json config_json(const Config& c) {
  using nlohmann::json;
  const Scenario& sc = c.scenario;
  json j;
  j["geometry"] = {{"tx_km", {sc.geometry.tx.x_km, sc.geometry.tx.y_km}},
                   {"rx_km", {sc.geometry.rx.x_km, sc.geometry.rx.y_km}},
                   {"d0_km", sc.geometry.d0_km},
                   {"tau", sc.geometry.tau}};
  json mods = json::array();
  for (const auto& m : sc.radio.modulations) mods.push_back({{"name", m.name}, {"order", m.order}});
  j["radio"] = {{"n_channels", sc.radio.n_channels},
                {"bandwidth_hz", sc.radio.bandwidth_hz},
                {"power_levels_dbm", sc.radio.power_levels_dbm},
                {"modulations", mods},
                {"demod_thresholds_db", sc.radio.demod_thresholds_db},
                {"floor_threshold_db", sc.radio.floor_threshold_db},
                {"noise_dbm", sc.radio.noise_dbm},
                {"throughput_threshold_bps", sc.radio.throughput_threshold_bps},
                {"rayleigh_fading", sc.radio.rayleigh_fading},
                {"bucket_rewards", sc.radio.bucket_rewards},
                {"floor_reward", sc.radio.floor_reward},
                {"suboptimal_penalty", sc.radio.suboptimal_penalty},
                {"state_ref_w", sc.radio.state_ref_w}};
  json jam = json::array();
  for (const auto& x : sc.jammers) {
    json e = {{"kind", x.kind == JammerKind::Cognitive ? "cognitive" : "comb"},
              {"position_km", {x.position.x_km, x.position.y_km}},
              {"power_dbm", x.power_dbm}};
    if (x.kind == JammerKind::Cognitive) {
      e["detect_threshold_dbm"] = x.detect_threshold_dbm;
    } else {
      e["teeth"] = x.comb.teeth;
      e["spacing"] = x.comb.spacing;
      e["direction"] = x.comb.descending ? "descending" : "ascending";
      e["phase"] = x.comb.phase;
      e["period"] = x.comb.period;
    }
    jam.push_back(e);
  }
  j["jammers"] = jam;
  j["timescale"] = {{"total_ms", sc.timescale.total_ms},
                    {"long_ms", sc.timescale.long_ms},
                    {"short_ms", sc.timescale.short_ms}};
  j["uncertainty"] = {{"epsilon_w", sc.uncertainty.eps_per_jammer_w},
                      {"epsilon_channel_w", sc.channel_radius_w()},
                      {"ball", sc.uncertainty.ball == BallKind::Box ? "box" : "l2"}};
  const Hyperparameters& h = c.hyper;
  j["training"] = {{"episodes", h.episodes},
                   {"lr", h.lr},
                   {"lr_decay", h.lr_decay},
                   {"lr_floor", h.lr_floor},
                   {"gamma", h.gamma},
                   {"batch", h.batch},
                   {"buffer_frequency", h.buffer_frequency},
                   {"buffer_power", h.buffer_power},
                   {"buffer_modulation", h.buffer_modulation},
                   {"target_sync", h.target_sync},
                   {"explore_start", h.explore_start},
                   {"explore_end", h.explore_end},
                   {"explore_fraction", h.explore_fraction},
                   {"pgd_steps", h.pgd_steps},
                   {"pgd_step_frac", h.pgd_step_frac},
                   {"pgd_delta", h.pgd_delta},
                   {"compression", h.compression},
                   {"omega_frequency", h.omega_frequency},
                   {"omega_power", h.omega_power},
                   {"omega_modulation", h.omega_modulation},
                   {"hidden", h.hidden},
                   {"depth", h.depth},
                   {"reward_unit_bps", h.reward_unit_bps},
                   {"grad_clip", h.grad_clip}};
  return j;
}

inline std::uint64_t config_hash(const Config& c) { return fnv1a(config_json(c).dump()); }

inline std::string hex64(std::uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = d[v & 0xf];
  return s;
}

}  // namespace ajam
