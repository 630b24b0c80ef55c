/**
 * @file scenario.hpp
 * @brief Network geometry, DL/UL service sets, and DL-UL UE pairing.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// Placeholder index for the missing side of an unbalanced DL/UL pair.
inline constexpr int kPhantom = -1;

struct ScenarioConfig {
  int ap_count = 25;
  int ue_count = 32;
  int ap_antennas = 8;
  int ue_antennas = 4;
  double area = 0.0;  // square side in meters; 0 derives ap_spacing * sqrt(ap_count)
  double ap_spacing = 20.0;
  double rho_ap_dbm = 30.0;
  double rho_ue_dbm = 20.0;
  double noise_ap_dbm = -95.0;
  double noise_ue_dbm = -95.0;
  double min_distance = 1.0;  // floor applied to AP-UE distances

  // Explicit 0-based memberships win over the counts; empty memberships fall
  // back to uniformly random sets of the requested sizes (-1 = every UE).
  std::vector<int> dl_set;
  std::vector<int> ul_set;
  int dl_count = -1;
  int ul_count = -1;
};

struct Scenario {
  int ap_count = 0;
  int ue_count = 0;
  int ap_antennas = 0;
  int ue_antennas = 0;
  std::vector<Point> ap_positions;
  std::vector<Point> ue_positions;
  std::vector<int> dl_set;  // sorted, 0-based
  std::vector<int> ul_set;
  double rho_ap = 0.0;    // watts
  double rho_ue = 0.0;    // watts
  double noise_ap = 0.0;  // watts
  double noise_ue = 0.0;  // watts
  double min_distance = 1.0;

  // Derived partition of the UE set.
  std::vector<int> dl_ul_set;
  std::vector<int> dl_only_set;
  std::vector<int> ul_only_set;
  std::vector<bool> in_dl;
  std::vector<bool> in_ul;

  double ap_ue_distance(int b, int k) const {
    return std::max(distance(ap_positions[b], ue_positions[k]), min_distance);
  }
};

struct Pairing {
  struct Pair {
    int dl_ue = kPhantom;
    int ul_ue = kPhantom;
  };
  std::vector<Pair> pairs;
  std::vector<int> group_of;               // UE index -> pair index
  std::vector<std::vector<int>> members;   // pair index -> real UEs
  std::vector<bool> active;                // true iff both sides are real

  int size() const { return static_cast<int>(pairs.size()); }
};

namespace detail {

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline void derive_sets(Scenario& s) {
  const int k = s.ue_count;
  s.in_dl.assign(k, false);
  s.in_ul.assign(k, false);
  for (int u : s.dl_set) s.in_dl[u] = true;
  for (int u : s.ul_set) s.in_ul[u] = true;
  s.dl_ul_set.clear();
  s.dl_only_set.clear();
  s.ul_only_set.clear();
  for (int u = 0; u < k; ++u) {
    if (s.in_dl[u] && s.in_ul[u]) s.dl_ul_set.push_back(u);
    else if (s.in_dl[u]) s.dl_only_set.push_back(u);
    else if (s.in_ul[u]) s.ul_only_set.push_back(u);
    else throw std::invalid_argument("UE " + std::to_string(u + 1) + " is in neither service set");
  }
}

inline void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

}  // namespace detail

inline Scenario build_scenario(const ScenarioConfig& cfg, Rng rng) {
  if (cfg.ue_count < 1) throw std::invalid_argument("ue_count must be >= 1");
  if (cfg.ap_count < 1) throw std::invalid_argument("ap_count must be >= 1");
  if (cfg.ap_antennas < 1 || cfg.ue_antennas < 1)
    throw std::invalid_argument("antenna counts must be >= 1");

  const int grid = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.ap_count))));
  if (grid * grid != cfg.ap_count)
    throw std::invalid_argument("ap_count must be a perfect square for grid placement");

  Scenario s;
  s.ap_count = cfg.ap_count;
  s.ue_count = cfg.ue_count;
  s.ap_antennas = cfg.ap_antennas;
  s.ue_antennas = cfg.ue_antennas;
  s.rho_ap = dbm_to_watt(cfg.rho_ap_dbm);
  s.rho_ue = dbm_to_watt(cfg.rho_ue_dbm);
  s.noise_ap = dbm_to_watt(cfg.noise_ap_dbm);
  s.noise_ue = dbm_to_watt(cfg.noise_ue_dbm);
  s.min_distance = cfg.min_distance;
  if (s.rho_ap <= 0 || s.rho_ue <= 0 || s.noise_ap <= 0 || s.noise_ue <= 0)
    throw std::invalid_argument("powers and noise variances must be strictly positive");

  const double area = cfg.area > 0.0 ? cfg.area : cfg.ap_spacing * grid;

  // APs centered in the cells of a uniform grid.
  s.ap_positions.reserve(cfg.ap_count);
  const double cell = area / grid;
  for (int j = 0; j < grid; ++j)
    for (int i = 0; i < grid; ++i)
      s.ap_positions.push_back({cell / 2 + cell * i, cell / 2 + cell * j});

  Rng pos_rng = rng.fork(stream::kScenario);
  s.ue_positions.reserve(cfg.ue_count);
  for (int u = 0; u < cfg.ue_count; ++u) {
    const double x = pos_rng.uniform(0.0, area);
    const double y = pos_rng.uniform(0.0, area);
    s.ue_positions.push_back({x, y});
  }

  if (!cfg.dl_set.empty() || !cfg.ul_set.empty()) {
    s.dl_set = detail::sorted_unique(cfg.dl_set);
    s.ul_set = detail::sorted_unique(cfg.ul_set);
    for (int u : s.dl_set)
      if (u < 0 || u >= cfg.ue_count) throw std::invalid_argument("dl_set index out of range");
    for (int u : s.ul_set)
      if (u < 0 || u >= cfg.ue_count) throw std::invalid_argument("ul_set index out of range");
  } else {
    const int k = cfg.ue_count;
    const int dl = cfg.dl_count < 0 ? k : cfg.dl_count;
    const int ul = cfg.ul_count < 0 ? k : cfg.ul_count;
    if (dl > k || ul > k) throw std::invalid_argument("service-set size exceeds ue_count");
    const int overlap = dl + ul - k;
    if (overlap < 0)
      throw std::invalid_argument("dl_count + ul_count must cover the UE set");
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    detail::shuffle(perm, pos_rng);
    for (int i = 0; i < dl; ++i) s.dl_set.push_back(perm[i]);                 // overlap + DL-only
    for (int i = 0; i < overlap; ++i) s.ul_set.push_back(perm[i]);            // overlap
    for (int i = dl; i < k; ++i) s.ul_set.push_back(perm[i]);                 // UL-only
    std::sort(s.dl_set.begin(), s.dl_set.end());
    std::sort(s.ul_set.begin(), s.ul_set.end());
  }

  detail::derive_sets(s);  // also rejects DL u UL != K
  return s;
}

/// Pairs DL and UL UEs into virtual multicast groups: DL-UL UEs are
/// self-paired, DL-only and UL-only UEs are matched in ascending index
/// order, leftovers take a phantom partner. The output is ordered by the
/// DL member index, phantom-DL pairs last (Fig.-1 convention).
inline Pairing pair_ues(const Scenario& s) {
  Pairing p;
  for (int u : s.dl_ul_set) p.pairs.push_back({u, u});
  const std::size_t n_cross = std::min(s.dl_only_set.size(), s.ul_only_set.size());
  for (std::size_t i = 0; i < n_cross; ++i)
    p.pairs.push_back({s.dl_only_set[i], s.ul_only_set[i]});
  for (std::size_t i = n_cross; i < s.dl_only_set.size(); ++i)
    p.pairs.push_back({s.dl_only_set[i], kPhantom});
  for (std::size_t i = n_cross; i < s.ul_only_set.size(); ++i)
    p.pairs.push_back({kPhantom, s.ul_only_set[i]});

  std::sort(p.pairs.begin(), p.pairs.end(), [](const Pairing::Pair& a, const Pairing::Pair& b) {
    if ((a.dl_ue == kPhantom) != (b.dl_ue == kPhantom)) return b.dl_ue == kPhantom;
    if (a.dl_ue != b.dl_ue) return a.dl_ue < b.dl_ue;
    return a.ul_ue < b.ul_ue;
  });

  p.group_of.assign(s.ue_count, -1);
  p.members.resize(p.pairs.size());
  p.active.resize(p.pairs.size());
  for (std::size_t g = 0; g < p.pairs.size(); ++g) {
    const auto& pr = p.pairs[g];
    if (pr.dl_ue != kPhantom) {
      p.group_of[pr.dl_ue] = static_cast<int>(g);
      p.members[g].push_back(pr.dl_ue);
    }
    if (pr.ul_ue != kPhantom && pr.ul_ue != pr.dl_ue) {
      p.group_of[pr.ul_ue] = static_cast<int>(g);
      p.members[g].push_back(pr.ul_ue);
    }
    p.active[g] = pr.dl_ue != kPhantom && pr.ul_ue != kPhantom;
  }
  return p;
}

}  // namespace cfmimo
