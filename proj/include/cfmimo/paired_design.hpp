/**
 * @file paired_design.hpp
 * @brief Perfect-CSI paired design: one multicast precoder per DL-UL pair,
 *        group-MSE objective, closed-form combiners, and projected gradient
 *        steps on the per-AP precoders.
 */
#pragma once

#include <vector>

#include "cfmimo/mmse_design.hpp"

namespace cfmimo {

struct PairedBeamformerState {
  std::vector<std::vector<CVec>> w;  // [B][G] multicast precoders
  std::vector<CVec> v;               // [K] combiners
};

/// m_{k,g} = sum_b H_{b,k}^H w_{b,g}; group-level analogue of f_{k,j}.
inline CVec paired_effective_channel(const ChannelState& ch,
                                     const std::vector<std::vector<CVec>>& w_g, int k, int g) {
  return effective_dl_channel(ch, w_g, k, g);
}

/// Closed-form combiner of UE k against its own pair beam. Every pair's beam
/// enters the covariance, including phantom-padded pairs.
inline CVec update_combiner_paired(const ChannelState& ch,
                                   const std::vector<std::vector<CVec>>& w_g, int k,
                                   const Pairing& pairing, double sigma2_ue) {
  const CMat m = effective_channel_matrix(ch, w_g, k);
  CMat a = m * m.adjoint();
  a.diagonal().array() += sigma2_ue;
  return a.ldlt().solve(m.col(pairing.group_of[k]));
}

/// Sum of per-UE group MSEs in closed form.
inline double gmse(const ChannelState& ch, const std::vector<std::vector<CVec>>& w_g,
                   const std::vector<CVec>& v, const Pairing& pairing, double sigma2_ue) {
  double total = 0.0;
  for (int k = 0; k < ch.ue_count; ++k) {
    const CMat m = effective_channel_matrix(ch, w_g, k);
    const CVec cross = m.adjoint() * v[k];
    const int gk = pairing.group_of[k];
    for (Eigen::Index g = 0; g < cross.size(); ++g) {
      const Complex e = std::conj(cross[g]) - (g == gk ? 1.0 : 0.0);
      total += std::norm(e);
    }
    total += sigma2_ue * v[k].squaredNorm();
  }
  return total;
}

/// Conjugate gradient of the summed group MSE with respect to w_{b,g}
/// (real-gradient convention: d/dt gmse(w + t u) = Re(u^H grad)).
inline CVec gradient_paired(const ChannelState& ch, const std::vector<CVec>& v,
                            const std::vector<std::vector<CVec>>& w_g, int b, int g,
                            const Pairing& pairing) {
  const auto hv = detail::effective_ul_channels(ch, v);
  CVec acc = CVec::Zero(hv[b][0].size());
  for (int k : pairing.members[g]) acc += hv[b][k];
  for (int k = 0; k < ch.ue_count; ++k) {
    Complex s = hv[b][k].dot(w_g[b][g]);  // own-AP quadratic term
    for (int bb = 0; bb < ch.ap_count; ++bb)
      if (bb != b) s += hv[bb][k].dot(w_g[bb][g]);  // cross-AP coupling
    acc.noalias() -= hv[b][k] * s;
  }
  return -2.0 * acc;
}

/// Gradient step followed by per-AP power normalization. The default rule
/// makes the transmit power exactly rho_ap; the literal variant divides by
/// the squared norm of the summed precoders instead.
inline std::vector<CVec> gradient_step_project(const std::vector<CVec>& w_prev,
                                               const std::vector<CVec>& grads, double alpha,
                                               double rho_ap, bool literal_scaling = false,
                                               Flags* flags = nullptr) {
  std::vector<CVec> w(w_prev.size());
  double power = 0.0;
  CVec sum = CVec::Zero(w_prev[0].size());
  for (std::size_t g = 0; g < w_prev.size(); ++g) {
    w[g] = w_prev[g] - alpha * grads[g];
    power += w[g].squaredNorm();
    sum += w[g];
  }
  double factor = 0.0;
  if (literal_scaling) {
    const double d = sum.squaredNorm();
    factor = d > 0.0 ? rho_ap / d : 0.0;
  } else {
    factor = power > 0.0 ? std::sqrt(rho_ap / power) : 0.0;
  }
  if (factor == 0.0 && flags) flags->degenerate = true;
  for (auto& wg : w) wg *= factor;
  return w;
}

/// Step size scale / L with L a local Lipschitz surrogate built from the
/// current effective UL channels.
inline double default_step_size(const ChannelState& ch, const std::vector<CVec>& v,
                                double scale = 0.1) {
  const auto hv = detail::effective_ul_channels(ch, v);
  double lmax = 0.0;
  for (int b = 0; b < ch.ap_count; ++b) {
    double acc = 0.0;
    for (int k = 0; k < ch.ue_count; ++k) acc += hv[b][k].squaredNorm();
    lmax = std::max(lmax, acc);
  }
  return lmax > 0.0 ? scale / lmax : scale;
}

/// Data-phase scaling for the paired design: pairs without a DL member do
/// not transmit DL data; the pair beam doubles as UL combiner for the UL
/// member.
inline DataBeams scale_for_data_paired(const PairedBeamformerState& st, const Scenario& s,
                                       const Pairing& pairing, const DesignOptions& opts = {}) {
  DataBeams out;
  const int b_count = s.ap_count;

  std::vector<int> dl_groups;
  for (int g = 0; g < pairing.size(); ++g)
    if (pairing.pairs[g].dl_ue != kPhantom) {
      dl_groups.push_back(g);
      out.dl.owner.push_back(pairing.pairs[g].dl_ue);
    }

  out.dl.w.assign(b_count, std::vector<CVec>(dl_groups.size()));
  RVec ap_factor = RVec::Zero(b_count);
  for (int b = 0; b < b_count; ++b) {
    double p = 0.0;
    for (int g : dl_groups) p += st.w[b][g].squaredNorm();
    if (p > 0.0) ap_factor[b] = opts.literal_scaling ? s.rho_ap / p : std::sqrt(s.rho_ap / p);
    else if (!dl_groups.empty()) out.flags.degenerate = true;
    for (std::size_t j = 0; j < dl_groups.size(); ++j)
      out.dl.w[b][j] = ap_factor[b] * st.w[b][dl_groups[j]];
  }

  out.ul.ue = s.ul_set;
  out.ul.v.resize(s.ul_set.size());
  out.ul.w.assign(b_count, std::vector<CVec>(s.ul_set.size()));
  for (std::size_t i = 0; i < s.ul_set.size(); ++i) {
    const int k = s.ul_set[i];
    const int g = pairing.group_of[k];
    const double nrm = st.v[k].norm();
    if (nrm > 0.0) {
      out.ul.v[i] = std::sqrt(s.rho_ue) * st.v[k] / nrm;
    } else {
      out.ul.v[i] = CVec::Zero(st.v[k].size());
      out.flags.degenerate = true;
    }
    for (int b = 0; b < b_count; ++b) {
      const double c = opts.ul_combiners_post_scaling && ap_factor[b] > 0.0 ? ap_factor[b] : 1.0;
      out.ul.w[b][i] = c * st.w[b][g];
    }
  }
  return out;
}

}  // namespace cfmimo
