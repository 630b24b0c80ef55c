/**
 * @file ota_ibt.hpp
 * @brief Over-the-air iterative bi-directional training: orthogonal pilot
 *        books, DL / UL-1 / UL-2 training signals, pilot-domain estimators
 *        for combiners, precoders, and multicast gradients, and the
 *        per-resource-block schedule.
 *
 * Phase order within a block is a strict contract: DL training, combiner
 * update, UL-1, UL-2 (skipped by the local variants), precoder or gradient
 * update, UL data, DL data. The first block carries one extra UL-1 so the
 * APs can bootstrap precoders before any DL training happened.
 */
#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "cfmimo/metrics.hpp"
#include "cfmimo/paired_design.hpp"

namespace cfmimo {

// ---------------------------------------------------------------------------
// Pilots

struct PilotBook {
  CMat p;  // tau x count, unit-modulus entries, exactly orthogonal columns

  int tau() const { return static_cast<int>(p.rows()); }
  int count() const { return static_cast<int>(p.cols()); }
  CVec pilot(int j) const { return p.col(j); }
};

/// DFT pilot book: p_j^H p_j = tau, p_i^H p_j = 0 for i != j.
inline PilotBook make_pilots(int count, int tau) {
  if (count > tau) throw std::invalid_argument("pilot count cannot exceed pilot length");
  PilotBook book;
  book.p.resize(tau, count);
  for (int j = 0; j < count; ++j)
    for (int n = 0; n < tau; ++n) {
      const double phase = -2.0 * std::numbers::pi * j * n / tau;
      book.p(n, j) = Complex(std::cos(phase), std::sin(phase));
    }
  return book;
}

// ---------------------------------------------------------------------------
// Training signals

/// DL training: every AP superimposes its precoded pilots; UE k receives an
/// N x tau matrix through its own channels plus noise.
inline std::vector<CMat> dl_training(const ChannelState& ch,
                                     const std::vector<std::vector<CVec>>& w,
                                     const PilotBook& pilots, double sigma2_ue, Rng rng) {
  std::vector<CMat> y(ch.ue_count);
  for (int k = 0; k < ch.ue_count; ++k) {
    const CMat f = effective_channel_matrix(ch, w, k);  // N x J
    Rng noise = rng.fork(static_cast<std::uint64_t>(k));
    y[k] = f * pilots.p.adjoint();
    if (sigma2_ue > 0.0) y[k] += cn_matrix(y[k].rows(), y[k].cols(), sigma2_ue, noise);
  }
  return y;
}

/// Pilot power normalization: largest per-column transmit power over all UEs
/// and both UL signal types, relative to the UE budget. Pass y_dl = nullptr
/// when only UL-1 is transmitted.
inline double compute_beta(const std::vector<CVec>& v, const std::vector<CMat>* y_dl,
                           double rho_ue) {
  double worst = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double vn2 = v[k].squaredNorm();
    worst = std::max(worst, vn2);  // UL-1 columns: |p| = 1
    if (y_dl != nullptr) {
      const CVec proj = (*y_dl)[k].adjoint() * v[k];  // per-column v^H y
      for (Eigen::Index n = 0; n < proj.size(); ++n)
        worst = std::max(worst, vn2 * std::norm(proj[n]));
    }
  }
  return worst > 0.0 ? worst / rho_ue : 1.0;
}

struct UlSignals {
  std::vector<CMat> y1;  // per AP, M x tau
  std::vector<CMat> y2;  // per AP, M x tau; empty for local variants
};

/// UL-1 and (optionally) UL-2 training. pilot_of[k] selects the pilot column
/// each UE modulates (its own index, or its pair's).
inline UlSignals ul_training(const ChannelState& ch, const std::vector<CVec>& v,
                             const std::vector<CMat>* y_dl, const PilotBook& pilots,
                             const std::vector<int>& pilot_of, double beta, double sigma2_ap,
                             Rng rng, bool with_ul2) {
  UlSignals out;
  const double inv_sqrt_beta = 1.0 / std::sqrt(beta);
  out.y1.resize(ch.ap_count);
  if (with_ul2) out.y2.resize(ch.ap_count);

  for (int b = 0; b < ch.ap_count; ++b) {
    CMat y1 = CMat::Zero(ch.at(b, 0).rows(), pilots.tau());
    CMat y2 = with_ul2 ? CMat::Zero(ch.at(b, 0).rows(), pilots.tau()) : CMat();
    for (int k = 0; k < ch.ue_count; ++k) {
      const CVec hv = ch.at(b, k) * v[k];
      y1.noalias() += inv_sqrt_beta * hv * pilots.p.col(pilot_of[k]).adjoint();
      if (with_ul2 && y_dl != nullptr) {
        const Eigen::RowVectorXcd proj = v[k].adjoint() * (*y_dl)[k];  // 1 x tau
        y2.noalias() += inv_sqrt_beta * hv * proj;
      }
    }
    Rng noise1 = rng.fork(2 * static_cast<std::uint64_t>(b));
    if (sigma2_ap > 0.0) y1 += cn_matrix(y1.rows(), y1.cols(), sigma2_ap, noise1);
    out.y1[b] = std::move(y1);
    if (with_ul2) {
      Rng noise2 = rng.fork(2 * static_cast<std::uint64_t>(b) + 1);
      if (sigma2_ap > 0.0) y2 += cn_matrix(y2.rows(), y2.cols(), sigma2_ap, noise2);
      out.y2[b] = std::move(y2);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pilot-domain estimators

/// Combiner from the DL training observation alone: pinv(Y Y^H) Y p.
inline CVec estimate_combiner_ota(const CMat& y_dl, const CVec& pilot,
                                  double cutoff = kPinvCutoff, Flags* flags = nullptr) {
  if (y_dl.isZero(0.0)) {
    if (flags) flags->degenerate = true;
    return CVec::Zero(y_dl.rows());
  }
  const CMat gram = y_dl * y_dl.adjoint();
  return pinv_apply(gram, y_dl * pilot, cutoff);
}

/// One precoder from the UL training observations at a fixed dual variable.
/// Pass y2 = nullptr for the local variant (every UL-2 term zeroed).
inline CVec estimate_precoder_ota(const CMat& y1, const CMat* y2, const CVec& pilot,
                                  const CVec& w_prev, double lambda_b, double beta,
                                  double sigma2_ap, double cutoff = kPinvCutoff,
                                  Flags* flags = nullptr) {
  const double tau = static_cast<double>(pilot.size());
  const double sqrt_beta = std::sqrt(beta);

  CMat a = y1 * y1.adjoint();
  a.diagonal().array() += tau * (beta * lambda_b - sigma2_ap);

  CVec rhs = y1 * (sqrt_beta * pilot + y1.adjoint() * w_prev) - tau * sigma2_ap * w_prev;
  if (y2 != nullptr) rhs.noalias() -= sqrt_beta * (*y2 * pilot);

  const HermitianEig eig = HermitianEig::compute(a);
  if (flags) {
    const double max_abs =
        std::max(std::abs(eig.d[0]), std::abs(eig.d[eig.d.size() - 1]));
    if (eig.d[0] < -cutoff * max_abs) flags->indefinite_matrix = true;
  }
  return eig_solve_shifted(eig, rhs, 0.0, cutoff);
}

/// Multicast gradient estimate from the UL observations (pair pilot domain).
inline CVec estimate_gradient_ota(const CMat& y1, const CMat* y2, const CVec& pilot_g,
                                  double beta) {
  const double tau = static_cast<double>(pilot_g.size());
  CVec g = y1 * pilot_g;
  if (y2 != nullptr) g.noalias() -= *y2 * pilot_g;
  return (2.0 / (tau * std::sqrt(beta))) * g;
}

struct ApOtaPrecoderUpdate {
  std::vector<CVec> w;  // Eq.-style optimum per UE, before best response
  double lambda = 0.0;
  Flags flags;
};

/// Joint estimate of AP b's precoders with the dual variable found by local
/// bisection on the pilot-estimated transmit power.
inline ApOtaPrecoderUpdate estimate_ap_precoders_ota(
    const CMat& y1, const CMat* y2, const PilotBook& pilots,
    const std::vector<CVec>& w_prev_b, double beta, double sigma2_ap, double rho_ap,
    double bisect_tol = 1e-12, int bisect_iters = 200, double cutoff = kPinvCutoff) {
  const int ue_count = static_cast<int>(w_prev_b.size());
  const double tau = static_cast<double>(pilots.tau());
  const double sqrt_beta = std::sqrt(beta);

  const CMat gram = y1 * y1.adjoint();
  const HermitianEig eig = HermitianEig::compute(gram);
  const double d_max =
      std::max(std::abs(eig.d[0]), std::abs(eig.d[eig.d.size() - 1]));

  std::vector<CVec> coeff(ue_count);
  for (int k = 0; k < ue_count; ++k) {
    CVec rhs = y1 * (sqrt_beta * pilots.p.col(k) + y1.adjoint() * w_prev_b[k]) -
               tau * sigma2_ap * w_prev_b[k];
    if (y2 != nullptr) rhs.noalias() -= sqrt_beta * (*y2 * pilots.p.col(k));
    coeff[k] = eig.U.adjoint() * rhs;
  }

  auto power_at = [&](double lambda) {
    const double shift = tau * (beta * lambda - sigma2_ap);
    const double cut = cutoff * std::max(d_max, std::abs(shift));
    double p = 0.0;
    for (int k = 0; k < ue_count; ++k)
      for (Eigen::Index i = 0; i < eig.d.size(); ++i) {
        const double den = eig.d[i] + shift;
        if (std::abs(den) > cut) p += std::norm(coeff[k][i]) / (den * den);
      }
    return p;
  };

  ApOtaPrecoderUpdate out;
  const DualSolution dual = bisect_dual(power_at, rho_ap, bisect_tol, bisect_iters);
  out.lambda = dual.lambda;
  out.flags.bisection_failed = !dual.converged;

  const double shift = tau * (beta * dual.lambda - sigma2_ap);
  if (eig.d[0] + shift < -cutoff * std::max(d_max, std::abs(shift)))
    out.flags.indefinite_matrix = true;

  out.w.resize(ue_count);
  const double cut = cutoff * std::max(d_max, std::abs(shift));
  for (int k = 0; k < ue_count; ++k) {
    CVec c = coeff[k];
    for (Eigen::Index i = 0; i < eig.d.size(); ++i) {
      const double den = eig.d[i] + shift;
      c[i] = (std::abs(den) > cut) ? c[i] / den : Complex(0.0, 0.0);
    }
    out.w[k] = eig.U * c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-resource-block schedule

struct IbtOptions {
  // Best-response relaxation schedule. A fixed gamma leaves the parallel
  // per-AP updates oscillation-limited once the cross-AP coupling is strong
  // (large networks); the decaying sequence gamma <- gamma (1 - decay *
  // gamma) converges per block while the floor preserves tracking on
  // time-varying channels. gamma_decay = 0 reproduces a fixed relaxation.
  double gamma_br = 1.0;
  double gamma_decay = 0.3;
  double gamma_min = 0.1;
  bool literal_scaling = false;
  bool ul_combiners_post_scaling = false;
  std::optional<double> force_beta;  // pin beta (noise-free equivalence tests)
  double alpha_scale = 1.0;          // multicast gradient step: alpha_scale / L
  double pinv_cutoff = kPinvCutoff;
  double bisect_tol = 1e-12;
  int bisect_iters = 200;

  DesignOptions design() const {
    DesignOptions d;
    d.gamma_br = gamma_br;
    d.literal_scaling = literal_scaling;
    d.ul_combiners_post_scaling = ul_combiners_post_scaling;
    d.pinv_cutoff = pinv_cutoff;
    d.bisect_tol = bisect_tol;
    d.bisect_iters = bisect_iters;
    return d;
  }
};

struct BlockRecord {
  long block = 0;
  RateReport report;
  double beta = 1.0;
  RVec lambda;        // per AP; empty for gradient-based methods
  double design_mse = 0.0;
  double resources = 0.0;  // training resources consumed this block
  Flags flags;
};

struct IbtRun {
  std::vector<BlockRecord> blocks;
  double init_resources = 0.0;  // extra first-block UL-1, outside Table-1 count
  BeamformerState ue_state;
  PairedBeamformerState paired_state;
  Flags flags;
};

/// Per-block trace of a training run: block index, method, beta, per-AP
/// duals, resource counter, per-UE SINRs.
inline std::string ibt_trace_csv(const std::vector<BlockRecord>& blocks, Method method) {
  std::string csv = "block,method,beta,resources,design_mse,degenerate,lambda...,gamma_dl...,gamma_ul...\n";
  char buf[80];
  for (const auto& rec : blocks) {
    csv += std::to_string(rec.block) + "," + to_string(method);
    std::snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g,%d", rec.beta, rec.resources,
                  rec.design_mse, rec.flags.any() ? 1 : 0);
    csv += buf;
    for (Eigen::Index b = 0; b < rec.lambda.size(); ++b) {
      std::snprintf(buf, sizeof(buf), ",%.10g", rec.lambda[b]);
      csv += buf;
    }
    for (const RVec* g : {&rec.report.gamma_dl, &rec.report.gamma_ul})
      for (Eigen::Index k = 0; k < g->size(); ++k) {
        std::snprintf(buf, sizeof(buf), ",%.10g", (*g)[k]);
        csv += buf;
      }
    csv += "\n";
  }
  return csv;
}

/// Executes the combined DL-UL schedule for one of the four comb methods.
/// channels[t] is the realization used throughout block t; channels[0] is
/// the pre-training state shared with the delayed centralized baseline.
inline IbtRun run_ibt(const Scenario& s, const std::vector<ChannelState>& channels,
                      Method method, int blocks, double r_tot, Rng rng,
                      const IbtOptions& opts = {}) {
  if (blocks < 1) throw std::invalid_argument("blocks must be >= 1");
  if (static_cast<int>(channels.size()) < blocks + 1)
    throw std::invalid_argument("channel stream shorter than the block count");

  const bool paired =
      method == Method::CombPairedOta || method == Method::CombPairedLocal;
  const bool with_ul2 = method == Method::CombOta || method == Method::CombPairedOta;
  if (!paired && method != Method::CombOta && method != Method::CombLocal)
    throw std::invalid_argument("run_ibt handles the combined methods only");

  IbtRun run;
  const Pairing pairing = paired ? pair_ues(s) : Pairing{};
  const int streams = paired ? pairing.size() : s.ue_count;
  const PilotBook pilots = make_pilots(streams, streams);
  std::vector<int> pilot_of(s.ue_count);
  for (int k = 0; k < s.ue_count; ++k) pilot_of[k] = paired ? pairing.group_of[k] : k;

  std::vector<CVec> v = init_combiners(s.ue_count, s.ue_antennas, rng);
  std::vector<std::vector<CVec>> w(
      s.ap_count, std::vector<CVec>(streams, CVec::Zero(s.ap_antennas)));
  RVec lambda = RVec::Zero(s.ap_count);
  double gamma = opts.gamma_br;

  const double table_resources = ibt_resources(method, s);

  // Each AP knows the shared beta, so it rescales its received UL signals by
  // sqrt(beta) before estimation (noise variance grows to beta * sigma2_AP).
  // The estimators then behave at every beta exactly as they do at beta = 1;
  // without the compensation the residual beta factors in the precoder
  // estimate slow the convergence far below the perfect-CSI recursion.
  auto update_precoders = [&](const ChannelState& ch, const UlSignals& sig, double beta,
                              Flags& flags) {
    const double comp = std::sqrt(beta);
    for (int b = 0; b < s.ap_count; ++b) {
      const CMat y1 = comp * sig.y1[b];
      CMat y2;
      const bool have_y2 = with_ul2 && !sig.y2.empty();
      if (have_y2) y2 = comp * sig.y2[b];

      if (!paired) {
        auto up = estimate_ap_precoders_ota(y1, have_y2 ? &y2 : nullptr, pilots, w[b], 1.0,
                                            beta * s.noise_ap, s.rho_ap, opts.bisect_tol,
                                            opts.bisect_iters, opts.pinv_cutoff);
        flags.merge(up.flags);
        lambda[b] = up.lambda;
        for (int k = 0; k < s.ue_count; ++k)
          w[b][k] = best_response_update(up.w[k], w[b][k], gamma);
      } else {
        const double alpha = default_step_size(ch, v, opts.alpha_scale);
        std::vector<CVec> grads(streams);
        for (int g = 0; g < streams; ++g) {
          // Eq.-(22)-style estimate descends when added, so feed its negation
          // to the subtract-then-project step.
          const CVec est =
              estimate_gradient_ota(y1, have_y2 ? &y2 : nullptr, pilots.p.col(g), 1.0);
          grads[g] = -est;
        }
        w[b] = gradient_step_project(w[b], grads, alpha, s.rho_ap, opts.literal_scaling,
                                     &flags);
      }
    }
    gamma = std::max(opts.gamma_min, gamma * (1.0 - opts.gamma_decay * gamma));
  };

  // First-block bootstrap: UL-1 with the initial combiners, precoder update
  // with every UL-2 term zero.
  {
    const ChannelState& ch = channels[1];
    const double beta0 =
        opts.force_beta.value_or(compute_beta(v, nullptr, s.rho_ue));
    Rng noise = rng.fork(stream::kNoiseUl1).fork(0);
    const UlSignals sig =
        ul_training(ch, v, nullptr, pilots, pilot_of, beta0, s.noise_ap, noise, false);
    Flags flags;
    update_precoders(ch, sig, beta0, flags);
    run.flags.merge(flags);
    run.init_resources = pilots.tau();
  }

  for (int t = 1; t <= blocks; ++t) {
    const ChannelState& ch = channels[t];
    BlockRecord rec;
    rec.block = t;

    // 1) DL training and combiner update at every UE.
    Rng dl_noise = rng.fork(stream::kNoiseDl).fork(static_cast<std::uint64_t>(t));
    const std::vector<CMat> y_dl = dl_training(ch, w, pilots, s.noise_ue, dl_noise);
    for (int k = 0; k < s.ue_count; ++k)
      v[k] = estimate_combiner_ota(y_dl[k], pilots.p.col(pilot_of[k]), opts.pinv_cutoff,
                                   &rec.flags);
    rec.resources += pilots.tau();

    // 2-3) UL-1 (+ UL-2 for the OTA variants) and precoder/gradient update.
    rec.beta = opts.force_beta.value_or(
        compute_beta(v, with_ul2 ? &y_dl : nullptr, s.rho_ue));
    Rng ul_noise = rng.fork(stream::kNoiseUl1).fork(static_cast<std::uint64_t>(t));
    const UlSignals sig = ul_training(ch, v, with_ul2 ? &y_dl : nullptr, pilots, pilot_of,
                                      rec.beta, s.noise_ap, ul_noise, with_ul2);
    rec.resources += pilots.tau() * (with_ul2 ? 2.0 : 1.0);
    update_precoders(ch, sig, rec.beta, rec.flags);
    rec.lambda = paired ? RVec() : lambda;

    // 4-5) Data transmissions, evaluated against the true channel.
    DataBeams beams;
    if (paired) {
      PairedBeamformerState st{w, v};
      beams = scale_for_data_paired(st, s, pairing, opts.design());
      rec.design_mse = gmse(ch, w, v, pairing, s.noise_ue);
    } else {
      BeamformerState st{w, v, lambda};
      beams = scale_for_data(st, s, opts.design());
      rec.design_mse = sum_mse(ch, w, v, s.noise_ue);
    }
    rec.flags.merge(beams.flags);
    rec.report = evaluate_block(ch, s, beams, v, table_resources, r_tot, t);

    run.flags.merge(rec.flags);
    run.blocks.push_back(std::move(rec));
  }

  if (paired) run.paired_state = PairedBeamformerState{w, v};
  else run.ue_state = BeamformerState{w, v, lambda};
  return run;
}

}  // namespace cfmimo
