/**
 * @file metrics.hpp
 * @brief Genie SINR evaluation, sum rates, training-overhead table, and the
 *        overhead-adjusted effective DL-UL sum rate.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cfmimo/mmse_design.hpp"

namespace cfmimo {

enum class Method {
  Centralized,
  SepOta,
  SepLocal,
  CombOta,
  CombLocal,
  CombPairedOta,
  CombPairedLocal,
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Centralized: return "centralized";
    case Method::SepOta: return "sep-ota";
    case Method::SepLocal: return "sep-local";
    case Method::CombOta: return "comb-ota";
    case Method::CombLocal: return "comb-local";
    case Method::CombPairedOta: return "comb-paired-ota";
    case Method::CombPairedLocal: return "comb-paired-local";
  }
  return "?";
}

inline Method parse_method(const std::string& name) {
  for (Method m : {Method::Centralized, Method::SepOta, Method::SepLocal, Method::CombOta,
                   Method::CombLocal, Method::CombPairedOta, Method::CombPairedLocal})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown method: " + name);
}

struct RateReport {
  RVec gamma_dl;     // per UE, 0 outside the DL set
  RVec gamma_ul;     // per UE, 0 outside the UL set
  double r_dl = 0.0;
  double r_ul = 0.0;
  double r_ibt = 0.0;
  double r_tot = 0.0;
  double r_eff = 0.0;
  long block = 0;
};

/// DL SINR of UE k under the scaled data beams. Streams belonging to k are
/// signal, every other transmitted stream is interference.
inline double dl_sinr(const ChannelState& ch, const DlDataBeams& beams, const CVec& v_k, int k,
                      double sigma2_ue) {
  const double vn2 = v_k.squaredNorm();
  if (vn2 == 0.0) return 0.0;
  double signal = 0.0;
  double interference = 0.0;
  for (std::size_t j = 0; j < beams.owner.size(); ++j) {
    const CVec f = effective_dl_channel(ch, beams.w, k, static_cast<int>(j));
    const double p = std::norm(v_k.dot(f));  // |v^H f|^2
    if (beams.owner[j] == k) signal += p;
    else interference += p;
  }
  return signal / (interference + sigma2_ue * vn2);
}

/// UL SINR of UE k: APs combine coherently; noise is colored by the combiner
/// norms at every AP.
inline double ul_sinr(const ChannelState& ch, const UlDataBeams& beams, int k,
                      double sigma2_ap) {
  int idx = -1;
  for (std::size_t i = 0; i < beams.ue.size(); ++i)
    if (beams.ue[i] == k) idx = static_cast<int>(i);
  if (idx < 0) throw std::invalid_argument("UE is not in the UL set");

  double noise = 0.0;
  for (int b = 0; b < ch.ap_count; ++b) noise += sigma2_ap * beams.w[b][idx].squaredNorm();
  if (noise == 0.0) return 0.0;  // all-zero combiners

  double signal = 0.0;
  double interference = 0.0;
  for (std::size_t i = 0; i < beams.ue.size(); ++i) {
    // g_{ue_i, k} = sum_b H_{b, ue_i}^H w_{b,k}
    CVec g = CVec::Zero(beams.v[i].size());
    for (int b = 0; b < ch.ap_count; ++b)
      g.noalias() += ch.at(b, beams.ue[i]).adjoint() * beams.w[b][idx];
    const double p = std::norm(g.dot(beams.v[i]));  // |g^H v|^2
    if (static_cast<int>(i) == idx) signal += p;
    else interference += p;
  }
  return signal / (interference + noise);
}

/// Minimum orthogonal training resources consumed by one IBT iteration.
inline double ibt_resources(Method m, const Scenario& s) {
  const double k = static_cast<double>(s.ue_count);
  const double dl = static_cast<double>(s.dl_set.size());
  const double ul = static_cast<double>(s.ul_set.size());
  switch (m) {
    case Method::Centralized: return k * s.ue_antennas + dl + ul;
    case Method::SepOta: return 3.0 * (dl + ul);
    case Method::SepLocal: return 2.0 * (dl + ul);
    case Method::CombOta: return 3.0 * k;
    case Method::CombLocal: return 2.0 * k;
    case Method::CombPairedOta: return 3.0 * std::max(dl, ul);
    case Method::CombPairedLocal: return 2.0 * std::max(dl, ul);
  }
  throw std::invalid_argument("unknown method");
}

inline double effective_rate(double r_dl, double r_ul, double r_ibt, double r_tot) {
  if (!(r_tot > 0.0)) throw std::invalid_argument("r_tot must be positive");
  if (r_ibt < 0.0 || r_ibt > r_tot) throw std::invalid_argument("r_ibt outside [0, r_tot]");
  return (1.0 - r_ibt / r_tot) * (r_dl + r_ul) / 2.0;
}

/// Full per-block report from the data beams and the true channel.
inline RateReport evaluate_block(const ChannelState& ch, const Scenario& s,
                                 const DataBeams& beams, const std::vector<CVec>& v_dl,
                                 double r_ibt, double r_tot, long block) {
  RateReport rep;
  rep.block = block;
  rep.gamma_dl = RVec::Zero(s.ue_count);
  rep.gamma_ul = RVec::Zero(s.ue_count);
  for (int k : s.dl_set) {
    rep.gamma_dl[k] = dl_sinr(ch, beams.dl, v_dl[k], k, s.noise_ue);
    rep.r_dl += std::log2(1.0 + rep.gamma_dl[k]);
  }
  for (int k : s.ul_set) {
    rep.gamma_ul[k] = ul_sinr(ch, beams.ul, k, s.noise_ap);
    rep.r_ul += std::log2(1.0 + rep.gamma_ul[k]);
  }
  rep.r_ibt = r_ibt;
  rep.r_tot = r_tot;
  rep.r_eff = effective_rate(rep.r_dl, rep.r_ul, r_ibt, r_tot);
  return rep;
}

}  // namespace cfmimo
