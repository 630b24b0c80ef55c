/**
 * @file mmse_design.hpp
 * @brief Perfect-CSI combined DL-UL design: alternating minimization of the
 *        network sum MSE with closed-form UE combiners and dual-regularized
 *        per-AP precoders, plus the DL/UL scaling rules for data
 *        transmission.
 *
 * Every UE is treated as a DL UE during the design; service sets only enter
 * at data-scaling time, where UL-only precoders are discarded and DL
 * combiners are reused as UL precoders.
 */
#pragma once

#include <vector>

#include "cfmimo/channel.hpp"
#include "cfmimo/linalg.hpp"

namespace cfmimo {

struct BeamformerState {
  std::vector<std::vector<CVec>> w;  // [B][K] DL precoders, M each
  std::vector<CVec> v;               // [K] DL combiners, N each
  RVec lambda;                       // [B] per-AP dual variables
};

/// Beams actually used in the data phases.
struct DlDataBeams {
  std::vector<std::vector<CVec>> w;  // [B][J] scaled precoders
  std::vector<int> owner;            // [J] UE served by stream j
};

struct UlDataBeams {
  std::vector<int> ue;               // UL UEs, ascending
  std::vector<CVec> v;               // [|UL|] UE-side UL precoders
  std::vector<std::vector<CVec>> w;  // [B][|UL|] AP-side UL combiners
};

struct DataBeams {
  DlDataBeams dl;
  UlDataBeams ul;
  Flags flags;
};

enum class SweepMode { Jacobi, GaussSeidel };
enum class PrecoderInit { Matched, Random };

struct DesignOptions {
  double gamma_br = 0.5;              // best-response relaxation
  SweepMode sweep = SweepMode::Jacobi;
  double bisect_tol = 1e-12;
  int bisect_iters = 200;
  double pinv_cutoff = kPinvCutoff;
  // Literal text rules reproduced behind a flag: amplitude-multiplier AP
  // scaling and post-scaling precoder reuse as UL combiners.
  bool literal_scaling = false;
  bool ul_combiners_post_scaling = false;
};

// ---------------------------------------------------------------------------
// Effective channels

/// f_{k,j} = sum_b H_{b,k}^H w_{b,j}.
inline CVec effective_dl_channel(const ChannelState& ch,
                                 const std::vector<std::vector<CVec>>& w, int k, int j) {
  CVec f = CVec::Zero(ch.at(0, k).cols());
  for (int b = 0; b < ch.ap_count; ++b) f.noalias() += ch.at(b, k).adjoint() * w[b][j];
  return f;
}

/// N x J matrix whose columns are f_{k,j} for every beam j.
inline CMat effective_channel_matrix(const ChannelState& ch,
                                     const std::vector<std::vector<CVec>>& w, int k) {
  const auto beams = static_cast<Eigen::Index>(w[0].size());
  CMat f = CMat::Zero(ch.at(0, k).cols(), beams);
  for (int b = 0; b < ch.ap_count; ++b) {
    const CMat ha = ch.at(b, k).adjoint();
    for (Eigen::Index j = 0; j < beams; ++j) f.col(j).noalias() += ha * w[b][j];
  }
  return f;
}

// ---------------------------------------------------------------------------
// Alternating updates

/// Closed-form MMSE combiner for UE k given all precoders.
inline CVec update_combiner(const ChannelState& ch, const std::vector<std::vector<CVec>>& w,
                            int k, double sigma2_ue) {
  const CMat f = effective_channel_matrix(ch, w, k);
  CMat a = f * f.adjoint();
  a.diagonal().array() += sigma2_ue;
  return a.ldlt().solve(f.col(k));
}

inline CVec best_response_update(const CVec& w_opt, const CVec& w_prev, double gamma) {
  return (1.0 - gamma) * w_prev + gamma * w_opt;
}

struct ApPrecoderUpdate {
  std::vector<CVec> w;  // optimal precoders for this AP, one per UE
  double lambda = 0.0;
  Flags flags;
};

namespace detail {

/// h_{b,k} = H_{b,k} v_k for every (b, k).
inline std::vector<std::vector<CVec>> effective_ul_channels(const ChannelState& ch,
                                                            const std::vector<CVec>& v) {
  std::vector<std::vector<CVec>> hv(ch.ap_count, std::vector<CVec>(ch.ue_count));
  for (int b = 0; b < ch.ap_count; ++b)
    for (int k = 0; k < ch.ue_count; ++k) hv[b][k] = ch.at(b, k) * v[k];
  return hv;
}

/// Optimal {w_{b,k}}_k for AP b with the other APs' precoders frozen.
/// hv holds h_{b,k} network-wide; w_other provides the coupling terms.
inline ApPrecoderUpdate ap_precoder_update(const std::vector<std::vector<CVec>>& hv,
                                           const std::vector<std::vector<CVec>>& w_other, int b,
                                           double rho_ap, const DesignOptions& opts) {
  const int ap_count = static_cast<int>(hv.size());
  const int ue_count = static_cast<int>(hv[b].size());
  const auto m = hv[b][0].size();

  CMat phi = CMat::Zero(m, m);
  for (int k = 0; k < ue_count; ++k) phi.noalias() += hv[b][k] * hv[b][k].adjoint();
  const HermitianEig eig = HermitianEig::compute(phi);

  // rhs_k = h_{b,k} - xi_{b,k}, with the cross-AP term
  // xi_{b,k} = sum_{bb != b} Phi_{b,bb} w_{bb,k} expanded through the h's.
  std::vector<CVec> coeff(ue_count);  // U^H rhs_k
  for (int k = 0; k < ue_count; ++k) {
    CVec rhs = hv[b][k];
    for (int kk = 0; kk < ue_count; ++kk) {
      Complex s(0.0, 0.0);
      for (int bb = 0; bb < ap_count; ++bb)
        if (bb != b) s += hv[bb][kk].dot(w_other[bb][k]);  // h^H w
      rhs.noalias() -= hv[b][kk] * s;
    }
    coeff[k] = eig.U.adjoint() * rhs;
  }

  const double d_max = eig.d.size() ? std::max(std::abs(eig.d[0]), std::abs(eig.d[eig.d.size() - 1])) : 0.0;
  auto power_at = [&](double lambda) {
    const double cutoff = opts.pinv_cutoff * std::max(d_max, lambda);
    double p = 0.0;
    for (int k = 0; k < ue_count; ++k)
      for (Eigen::Index i = 0; i < eig.d.size(); ++i) {
        const double den = eig.d[i] + lambda;
        if (std::abs(den) > cutoff) p += std::norm(coeff[k][i]) / (den * den);
      }
    return p;
  };

  ApPrecoderUpdate out;
  const DualSolution dual = bisect_dual(power_at, rho_ap, opts.bisect_tol, opts.bisect_iters);
  out.lambda = dual.lambda;
  out.flags.bisection_failed = !dual.converged;

  out.w.resize(ue_count);
  const double cutoff = opts.pinv_cutoff * std::max(d_max, dual.lambda);
  for (int k = 0; k < ue_count; ++k) {
    CVec c = coeff[k];
    for (Eigen::Index i = 0; i < eig.d.size(); ++i) {
      const double den = eig.d[i] + dual.lambda;
      c[i] = (std::abs(den) > cutoff) ? c[i] / den : Complex(0.0, 0.0);
    }
    out.w[k] = eig.U * c;
  }
  return out;
}

}  // namespace detail

/// Single-AP update of the UE-specific design (the other APs keep w_prev).
inline ApPrecoderUpdate update_ap_precoders(const ChannelState& ch, const std::vector<CVec>& v,
                                            const std::vector<std::vector<CVec>>& w_prev, int b,
                                            double rho_ap, const DesignOptions& opts = {}) {
  return detail::ap_precoder_update(detail::effective_ul_channels(ch, v), w_prev, b, rho_ap,
                                    opts);
}

/// Network sum MSE in closed form (expectation over symbols and noise).
inline double sum_mse(const ChannelState& ch, const std::vector<std::vector<CVec>>& w,
                      const std::vector<CVec>& v, double sigma2_ue) {
  double total = 0.0;
  for (int k = 0; k < ch.ue_count; ++k) {
    const CMat f = effective_channel_matrix(ch, w, k);
    const CVec cross = f.adjoint() * v[k];  // cross[j] = (v_k^H f_{k,j})^*
    for (Eigen::Index j = 0; j < cross.size(); ++j) {
      const Complex e = std::conj(cross[j]) - (j == k ? 1.0 : 0.0);
      total += std::norm(e);
    }
    total += sigma2_ue * v[k].squaredNorm();
  }
  return total;
}

struct AlternateResult {
  BeamformerState state;
  std::vector<double> mse_trace;  // after each half-step
  Flags flags;
};

/// Alternating optimization of Eq.-style sum-MSE: combiners in closed form,
/// then per-AP precoders with best-response relaxation.
inline AlternateResult alternate(const ChannelState& ch, BeamformerState init, int iters,
                                 double rho_ap, double sigma2_ue,
                                 const DesignOptions& opts = {}) {
  AlternateResult res;
  res.state = std::move(init);
  if (res.state.lambda.size() != ch.ap_count) res.state.lambda = RVec::Zero(ch.ap_count);

  for (int it = 0; it < iters; ++it) {
    for (int k = 0; k < ch.ue_count; ++k)
      res.state.v[k] = update_combiner(ch, res.state.w, k, sigma2_ue);
    res.mse_trace.push_back(sum_mse(ch, res.state.w, res.state.v, sigma2_ue));

    const auto hv = detail::effective_ul_channels(ch, res.state.v);
    if (opts.sweep == SweepMode::Jacobi) {
      const auto w_prev = res.state.w;
      for (int b = 0; b < ch.ap_count; ++b) {
        auto up = detail::ap_precoder_update(hv, w_prev, b, rho_ap, opts);
        res.flags.merge(up.flags);
        res.state.lambda[b] = up.lambda;
        for (int k = 0; k < ch.ue_count; ++k)
          res.state.w[b][k] = best_response_update(up.w[k], w_prev[b][k], opts.gamma_br);
      }
    } else {
      for (int b = 0; b < ch.ap_count; ++b) {
        auto up = detail::ap_precoder_update(hv, res.state.w, b, rho_ap, opts);
        res.flags.merge(up.flags);
        res.state.lambda[b] = up.lambda;
        for (int k = 0; k < ch.ue_count; ++k)
          res.state.w[b][k] = best_response_update(up.w[k], res.state.w[b][k], opts.gamma_br);
      }
    }
    res.mse_trace.push_back(sum_mse(ch, res.state.w, res.state.v, sigma2_ue));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Initialization

inline BeamformerState init_beamformers(const ChannelState& ch, double rho_ap,
                                        PrecoderInit mode, Rng rng) {
  BeamformerState st;
  const auto m = ch.at(0, 0).rows();
  const auto n = ch.at(0, 0).cols();
  st.w.assign(ch.ap_count, std::vector<CVec>(ch.ue_count));
  st.v.assign(ch.ue_count, CVec::Unit(n, 0));
  st.lambda = RVec::Zero(ch.ap_count);

  Rng draw = rng.fork(stream::kPrecoderInit);
  const double per_beam = rho_ap / ch.ue_count;
  for (int b = 0; b < ch.ap_count; ++b) {
    for (int k = 0; k < ch.ue_count; ++k) {
      CVec dir = (mode == PrecoderInit::Matched) ? CVec(ch.at(b, k).col(0))
                                                 : cn_vector(m, 1.0, draw);
      const double nrm = dir.norm();
      st.w[b][k] = nrm > 0 ? CVec(std::sqrt(per_beam) * dir / nrm) : CVec::Zero(m);
    }
  }
  return st;
}

/// Fixed unit combiner per UE with a small seeded perturbation; the UEs have
/// no CSI before the first DL training phase.
inline std::vector<CVec> init_combiners(int ue_count, int ue_antennas, Rng rng) {
  std::vector<CVec> v(ue_count);
  Rng draw = rng.fork(stream::kCombinerInit);
  for (int k = 0; k < ue_count; ++k) {
    CVec u = CVec::Unit(ue_antennas, 0) + 0.1 * cn_vector(ue_antennas, 1.0, draw);
    v[k] = u / u.norm();
  }
  return v;
}

// ---------------------------------------------------------------------------
// Data-phase scaling

/// DL: drop UL-only precoders and rescale each AP to full power.
/// UL: reuse DL combiners as unit-power UL precoders and DL precoders as UL
/// combiners.
inline DataBeams scale_for_data(const BeamformerState& st, const Scenario& s,
                                const DesignOptions& opts = {}) {
  DataBeams out;
  const int b_count = s.ap_count;

  out.dl.owner = s.dl_set;
  out.dl.w.assign(b_count, std::vector<CVec>(s.dl_set.size()));
  RVec ap_factor = RVec::Zero(b_count);
  for (int b = 0; b < b_count; ++b) {
    double p = 0.0;
    for (int k : s.dl_set) p += st.w[b][k].squaredNorm();
    if (p > 0.0) {
      ap_factor[b] = opts.literal_scaling ? s.rho_ap / p : std::sqrt(s.rho_ap / p);
    } else if (!s.dl_set.empty()) {
      out.flags.degenerate = true;  // AP transmits nothing
    }
    for (std::size_t j = 0; j < s.dl_set.size(); ++j)
      out.dl.w[b][j] = ap_factor[b] * st.w[b][s.dl_set[j]];
  }

  out.ul.ue = s.ul_set;
  out.ul.v.resize(s.ul_set.size());
  out.ul.w.assign(b_count, std::vector<CVec>(s.ul_set.size()));
  for (std::size_t i = 0; i < s.ul_set.size(); ++i) {
    const int k = s.ul_set[i];
    const double nrm = st.v[k].norm();
    if (nrm > 0.0) {
      out.ul.v[i] = std::sqrt(s.rho_ue) * st.v[k] / nrm;
    } else {
      out.ul.v[i] = CVec::Zero(st.v[k].size());
      out.flags.degenerate = true;  // UE transmits nothing, SINR 0
    }
    for (int b = 0; b < b_count; ++b) {
      const double c = opts.ul_combiners_post_scaling && ap_factor[b] > 0.0 ? ap_factor[b] : 1.0;
      out.ul.w[b][i] = c * st.w[b][k];
    }
  }
  return out;
}

}  // namespace cfmimo
