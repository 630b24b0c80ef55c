/**
 * @file config.hpp
 * @brief Key/value configuration files (INI-style sections) and the
 *        experiment description they populate.
 */
#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfmimo/metrics.hpp"
#include "cfmimo/ota_ibt.hpp"

namespace cfmimo {

enum class SweepKind { None, Rtot, Overlap };

struct ExperimentConfig {
  ScenarioConfig scenario;
  double kappa = 0.967;
  std::vector<Method> methods = {Method::CombOta};
  int blocks = 10;
  int drops = 20;
  double r_tot = 300.0;
  SweepKind sweep = SweepKind::None;
  std::vector<double> rtot_points;
  std::vector<int> overlap_points;  // |K^DL-UL| values; ue_count follows
  std::uint64_t seed = 1;
  IbtOptions ibt;
  int centralized_iters = 20;
  PrecoderInit precoder_init = PrecoderInit::Random;
  bool wide_sinr = false;
  int threads = 1;

  void validate() const {
    if (drops < 1) throw std::invalid_argument("drops must be >= 1");
    if (blocks < 1) throw std::invalid_argument("blocks must be >= 1");
    if (methods.empty()) throw std::invalid_argument("at least one method required");
    if (sweep == SweepKind::Rtot && rtot_points.size() < 2)
      throw std::invalid_argument("rtot sweep needs at least 2 points");
    if (sweep == SweepKind::Overlap && overlap_points.size() < 2)
      throw std::invalid_argument("overlap sweep needs at least 2 points");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must be in (0,1]");
  }
};

// ---------------------------------------------------------------------------
// INI-style parsing: [section] headers, key = value lines, '#' or ';'
// comments. Keys are stored as "section.key".

class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text) {
    ConfigFile cf;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cut = line.find_first_of("#;");
      if (cut != std::string::npos) line.erase(cut);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw std::invalid_argument("bad section at line " + std::to_string(lineno));
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("expected key = value at line " + std::to_string(lineno));
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      cf.values_[section.empty() ? key : section + "." + key] = value;
    }
    return cf;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "") const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::stod(it->second);
  }

  long get_int(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::stol(it->second);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("bad boolean for " + key + ": " + v);
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

/// Applies a parsed configuration on top of an existing (preset or default)
/// experiment description. UE indices in dl_set / ul_set are 1-based in the
/// file.
inline void apply_config(const ConfigFile& cf, ExperimentConfig& cfg) {
  auto& sc = cfg.scenario;
  sc.ap_count = static_cast<int>(cf.get_int("scenario.ap_count", sc.ap_count));
  sc.ue_count = static_cast<int>(cf.get_int("scenario.ue_count", sc.ue_count));
  sc.ap_antennas = static_cast<int>(cf.get_int("scenario.ap_antennas", sc.ap_antennas));
  sc.ue_antennas = static_cast<int>(cf.get_int("scenario.ue_antennas", sc.ue_antennas));
  sc.area = cf.get_double("scenario.area", sc.area);
  sc.ap_spacing = cf.get_double("scenario.ap_spacing", sc.ap_spacing);
  sc.rho_ap_dbm = cf.get_double("scenario.rho_ap_dbm", sc.rho_ap_dbm);
  sc.rho_ue_dbm = cf.get_double("scenario.rho_ue_dbm", sc.rho_ue_dbm);
  if (cf.has("scenario.noise_dbm")) {
    sc.noise_ap_dbm = cf.get_double("scenario.noise_dbm", sc.noise_ap_dbm);
    sc.noise_ue_dbm = sc.noise_ap_dbm;
  }
  sc.noise_ap_dbm = cf.get_double("scenario.noise_ap_dbm", sc.noise_ap_dbm);
  sc.noise_ue_dbm = cf.get_double("scenario.noise_ue_dbm", sc.noise_ue_dbm);
  sc.min_distance = cf.get_double("scenario.min_distance", sc.min_distance);
  sc.dl_count = static_cast<int>(cf.get_int("scenario.dl_count", sc.dl_count));
  sc.ul_count = static_cast<int>(cf.get_int("scenario.ul_count", sc.ul_count));
  if (cf.has("scenario.dl_set")) {
    sc.dl_set.clear();
    for (const auto& s : cf.get_list("scenario.dl_set")) sc.dl_set.push_back(std::stoi(s) - 1);
  }
  if (cf.has("scenario.ul_set")) {
    sc.ul_set.clear();
    for (const auto& s : cf.get_list("scenario.ul_set")) sc.ul_set.push_back(std::stoi(s) - 1);
  }

  cfg.kappa = cf.get_double("channel.kappa", cfg.kappa);

  if (cf.has("run.methods")) {
    cfg.methods.clear();
    for (const auto& name : cf.get_list("run.methods")) cfg.methods.push_back(parse_method(name));
  }
  cfg.blocks = static_cast<int>(cf.get_int("run.blocks", cfg.blocks));
  cfg.drops = static_cast<int>(cf.get_int("run.drops", cfg.drops));
  cfg.r_tot = cf.get_double("run.r_tot", cfg.r_tot);
  cfg.seed = static_cast<std::uint64_t>(cf.get_int("run.seed", static_cast<long>(cfg.seed)));
  cfg.centralized_iters =
      static_cast<int>(cf.get_int("run.centralized_iters", cfg.centralized_iters));
  cfg.wide_sinr = cf.get_bool("run.wide_sinr", cfg.wide_sinr);
  cfg.threads = static_cast<int>(cf.get_int("run.threads", cfg.threads));
  cfg.ibt.gamma_br = cf.get_double("run.gamma_br", cfg.ibt.gamma_br);
  cfg.ibt.gamma_decay = cf.get_double("run.gamma_decay", cfg.ibt.gamma_decay);
  cfg.ibt.gamma_min = cf.get_double("run.gamma_min", cfg.ibt.gamma_min);
  cfg.ibt.literal_scaling = cf.get_bool("run.literal_scaling", cfg.ibt.literal_scaling);
  cfg.ibt.ul_combiners_post_scaling =
      cf.get_bool("run.ul_combiners_post_scaling", cfg.ibt.ul_combiners_post_scaling);

  const std::string init = cf.get_string("run.precoder_init", "");
  if (init == "matched") cfg.precoder_init = PrecoderInit::Matched;
  else if (init == "random") cfg.precoder_init = PrecoderInit::Random;
  else if (!init.empty()) throw std::invalid_argument("bad precoder_init: " + init);

  const std::string sweep = cf.get_string("run.sweep", "");
  if (sweep == "none") cfg.sweep = SweepKind::None;
  else if (sweep == "rtot") cfg.sweep = SweepKind::Rtot;
  else if (sweep == "overlap") cfg.sweep = SweepKind::Overlap;
  else if (!sweep.empty()) throw std::invalid_argument("bad sweep kind: " + sweep);

  if (cf.has("run.rtot_points")) {
    cfg.rtot_points.clear();
    for (const auto& s : cf.get_list("run.rtot_points")) cfg.rtot_points.push_back(std::stod(s));
  }
  if (cf.has("run.overlap_points")) {
    cfg.overlap_points.clear();
    for (const auto& s : cf.get_list("run.overlap_points"))
      cfg.overlap_points.push_back(std::stoi(s));
  }
}

// ---------------------------------------------------------------------------
// Figure presets

inline ExperimentConfig preset_fig3() {
  ExperimentConfig cfg;
  cfg.scenario = ScenarioConfig{};  // 25 APs, M=8, N=4, 32 UEs, all DL and UL
  cfg.methods = {Method::Centralized, Method::SepOta, Method::SepLocal, Method::CombOta,
                 Method::CombLocal};
  cfg.blocks = 10;
  cfg.drops = 100;
  cfg.r_tot = 300.0;
  return cfg;
}

inline ExperimentConfig preset_fig4() {
  ExperimentConfig cfg;
  cfg.scenario.ue_count = 44;
  cfg.scenario.dl_count = 32;
  cfg.scenario.ul_count = 32;
  cfg.methods = {Method::SepOta,  Method::SepLocal,       Method::CombOta,
                 Method::CombLocal, Method::CombPairedOta, Method::CombPairedLocal};
  cfg.blocks = 10;
  cfg.drops = 100;
  cfg.sweep = SweepKind::Rtot;
  cfg.rtot_points = {100, 200, 300, 400, 500, 600, 700, 800, 900};
  return cfg;
}

inline ExperimentConfig preset_fig5() {
  ExperimentConfig cfg;
  cfg.scenario.dl_count = 32;
  cfg.scenario.ul_count = 32;
  cfg.methods = {Method::SepOta,  Method::SepLocal,       Method::CombOta,
                 Method::CombLocal, Method::CombPairedOta, Method::CombPairedLocal};
  cfg.blocks = 10;
  cfg.drops = 100;
  cfg.r_tot = 300.0;
  cfg.sweep = SweepKind::Overlap;
  cfg.overlap_points = {0, 4, 8, 12, 16, 20, 24, 28, 32};
  return cfg;
}

/// Reduced-size protocol for continuous integration: same schedule, 9 APs.
inline ExperimentConfig preset_desk() {
  ExperimentConfig cfg;
  cfg.scenario.ap_count = 9;
  cfg.scenario.ap_antennas = 4;
  cfg.scenario.ue_antennas = 2;
  cfg.scenario.ue_count = 12;
  cfg.methods = {Method::Centralized, Method::SepOta, Method::SepLocal, Method::CombOta,
                 Method::CombLocal};
  cfg.blocks = 10;
  cfg.drops = 20;
  // Keep the training fraction of the full-size protocol: 96/300.
  cfg.r_tot = 3.0 * 12 * 300.0 / 96.0;
  return cfg;
}

inline ExperimentConfig make_preset(const std::string& name) {
  if (name == "fig3") return preset_fig3();
  if (name == "fig4") return preset_fig4();
  if (name == "fig5") return preset_fig5();
  if (name == "desk") return preset_desk();
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace cfmimo
