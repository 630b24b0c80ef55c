/**
 * @file channel.hpp
 * @brief Per-(AP,UE) MIMO channels: log-distance path loss, Rayleigh
 *        small-scale fading, first-order Gauss-Markov time evolution.
 */
#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfmimo/linalg.hpp"
#include "cfmimo/scenario.hpp"

namespace cfmimo {

/// Large-scale fading coefficient in dB at distance d meters.
inline double large_scale_db(double d) {
  if (d <= 0.0) throw std::invalid_argument("distance must be positive");
  return -30.5 - 36.7 * std::log10(d);
}

struct ChannelState {
  int ap_count = 0;
  int ue_count = 0;
  std::vector<CMat> h;  // (b * ue_count + k), each M x N, UL convention
  RMat delta;           // B x K large-scale coefficients, linear scale
  long block = 0;

  const CMat& at(int b, int k) const { return h[static_cast<std::size_t>(b) * ue_count + k]; }
  CMat& at(int b, int k) { return h[static_cast<std::size_t>(b) * ue_count + k]; }
};

inline ChannelState init_channel(const Scenario& s, Rng rng) {
  ChannelState st;
  st.ap_count = s.ap_count;
  st.ue_count = s.ue_count;
  st.delta.resize(s.ap_count, s.ue_count);
  st.h.reserve(static_cast<std::size_t>(s.ap_count) * s.ue_count);

  Rng draw = rng.fork(stream::kChannelInit);
  for (int b = 0; b < s.ap_count; ++b) {
    for (int k = 0; k < s.ue_count; ++k) {
      st.delta(b, k) = db_to_linear(large_scale_db(s.ap_ue_distance(b, k)));
      st.h.push_back(cn_matrix(s.ap_antennas, s.ue_antennas, st.delta(b, k), draw));
    }
  }
  return st;
}

/// Flattened channel dump for cross-implementation regression: one row per
/// (AP, UE) link with column-major re/im entry pairs.
inline std::string channel_trace_csv(const ChannelState& st) {
  std::string csv = "block,ap,ue,entries_re_im\n";
  char buf[64];
  for (int b = 0; b < st.ap_count; ++b)
    for (int k = 0; k < st.ue_count; ++k) {
      csv += std::to_string(st.block) + "," + std::to_string(b + 1) + "," +
             std::to_string(k + 1);
      const CMat& h = st.at(b, k);
      for (Eigen::Index j = 0; j < h.cols(); ++j)
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
          std::snprintf(buf, sizeof(buf), ",%.17g,%.17g", h(i, j).real(), h(i, j).imag());
          csv += buf;
        }
      csv += "\n";
    }
  return csv;
}

/// One Gauss-Markov step: H[t+1] = kappa * H[t] + sqrt(1 - kappa^2) * Hnew,
/// innovations drawn at the per-link large-scale variance so the process is
/// stationary in distribution.
inline ChannelState evolve_channel(const ChannelState& st, double kappa, Rng rng) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  ChannelState next = st;
  next.block = st.block + 1;
  const double w = std::sqrt(1.0 - kappa * kappa);
  if (w == 0.0) return next;

  Rng draw = rng.fork(stream::kChannelEvolve).fork(static_cast<std::uint64_t>(next.block));
  for (int b = 0; b < st.ap_count; ++b) {
    for (int k = 0; k < st.ue_count; ++k) {
      const CMat& cur = st.at(b, k);
      next.at(b, k) = kappa * cur + w * cn_matrix(cur.rows(), cur.cols(), st.delta(b, k), draw);
    }
  }
  return next;
}

}  // namespace cfmimo
