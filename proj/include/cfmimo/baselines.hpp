/**
 * @file baselines.hpp
 * @brief Reference designs: centralized global-CSI beamforming with a
 *        one-block backhaul delay, and separate DL / UL training instances.
 */
#pragma once

#include <vector>

#include "cfmimo/ota_ibt.hpp"

namespace cfmimo {

/// Scenario view over a UE subset; the subset becomes the full service set
/// of the requested direction.
inline Scenario restrict_scenario(const Scenario& s, const std::vector<int>& ues, bool as_dl) {
  Scenario sub = s;
  sub.ue_count = static_cast<int>(ues.size());
  sub.ue_positions.clear();
  for (int k : ues) sub.ue_positions.push_back(s.ue_positions[k]);
  sub.dl_set.clear();
  sub.ul_set.clear();
  for (int i = 0; i < sub.ue_count; ++i) (as_dl ? sub.dl_set : sub.ul_set).push_back(i);
  detail::derive_sets(sub);
  return sub;
}

inline ChannelState restrict_channel(const ChannelState& ch, const std::vector<int>& ues) {
  ChannelState sub;
  sub.ap_count = ch.ap_count;
  sub.ue_count = static_cast<int>(ues.size());
  sub.block = ch.block;
  sub.delta.resize(ch.ap_count, sub.ue_count);
  sub.h.reserve(static_cast<std::size_t>(ch.ap_count) * ues.size());
  for (int b = 0; b < ch.ap_count; ++b)
    for (std::size_t i = 0; i < ues.size(); ++i) {
      sub.h.push_back(ch.at(b, ues[i]));
      sub.delta(b, static_cast<int>(i)) = ch.delta(b, ues[i]);
    }
  return sub;
}

// ---------------------------------------------------------------------------
// Centralized baseline

struct CentralizedResult {
  DataBeams beams;
  std::vector<CVec> v_dl;  // full UE indexing, zero outside the DL set
  Flags flags;
};

/// Global-CSI design on the supplied (delayed) channel. DL beams come from
/// the alternating sum-MSE design restricted to the DL set; UL combiners are
/// network-wide MMSE over the stacked AP antennas, alternated with
/// matched-filter UE precoders at full UE power.
inline CentralizedResult centralized_design(const ChannelState& ch, const Scenario& s,
                                            int iters, PrecoderInit init, Rng rng,
                                            const DesignOptions& base_opts = {}) {
  CentralizedResult out;
  const int n = s.ue_antennas;
  out.v_dl.assign(s.ue_count, CVec::Zero(n));

  DesignOptions opts = base_opts;
  opts.sweep = SweepMode::GaussSeidel;  // the CU iterates with full information
  opts.gamma_br = 1.0;

  if (!s.dl_set.empty()) {
    const ChannelState sub = restrict_channel(ch, s.dl_set);
    BeamformerState st = init_beamformers(sub, s.rho_ap, init, rng);
    AlternateResult res = alternate(sub, std::move(st), iters, s.rho_ap, s.noise_ue, opts);
    out.flags.merge(res.flags);

    out.beams.dl.owner = s.dl_set;
    out.beams.dl.w.assign(s.ap_count, std::vector<CVec>(s.dl_set.size()));
    for (int b = 0; b < s.ap_count; ++b) {
      double p = 0.0;
      for (std::size_t j = 0; j < s.dl_set.size(); ++j) p += res.state.w[b][j].squaredNorm();
      const double factor = p > 0.0 ? std::sqrt(s.rho_ap / p) : 0.0;
      if (factor == 0.0) out.flags.degenerate = true;
      for (std::size_t j = 0; j < s.dl_set.size(); ++j)
        out.beams.dl.w[b][j] = factor * res.state.w[b][j];
    }
    for (std::size_t j = 0; j < s.dl_set.size(); ++j)
      out.v_dl[s.dl_set[j]] = res.state.v[j];
  }

  if (!s.ul_set.empty()) {
    const int ul_count = static_cast<int>(s.ul_set.size());
    const int m = s.ap_antennas;
    const int stacked = s.ap_count * m;

    // UE precoder init: dominant eigenvector of the stacked Gram matrix.
    std::vector<CVec> v(ul_count);
    for (int i = 0; i < ul_count; ++i) {
      const int k = s.ul_set[i];
      CMat gram = CMat::Zero(n, n);
      for (int b = 0; b < s.ap_count; ++b)
        gram.noalias() += ch.at(b, k).adjoint() * ch.at(b, k);
      const HermitianEig eig = HermitianEig::compute(gram);
      v[i] = std::sqrt(s.rho_ue) * eig.U.col(eig.U.cols() - 1);
    }

    std::vector<CVec> g(ul_count, CVec::Zero(stacked));
    for (int it = 0; it < std::max(iters, 1); ++it) {
      std::vector<CVec> c(ul_count, CVec::Zero(stacked));
      for (int i = 0; i < ul_count; ++i)
        for (int b = 0; b < s.ap_count; ++b)
          c[i].segment(b * m, m) = ch.at(b, s.ul_set[i]) * v[i];
      CMat a = CMat::Zero(stacked, stacked);
      for (int i = 0; i < ul_count; ++i) a.noalias() += c[i] * c[i].adjoint();
      a.diagonal().array() += s.noise_ap;
      const auto ldlt = a.ldlt();
      for (int i = 0; i < ul_count; ++i) g[i] = ldlt.solve(c[i]);

      if (it + 1 < std::max(iters, 1)) {
        for (int i = 0; i < ul_count; ++i) {
          CVec dir = CVec::Zero(n);
          for (int b = 0; b < s.ap_count; ++b)
            dir.noalias() += ch.at(b, s.ul_set[i]).adjoint() * g[i].segment(b * m, m);
          const double nrm = dir.norm();
          if (nrm > 0.0) v[i] = std::sqrt(s.rho_ue) * dir / nrm;
          else out.flags.degenerate = true;
        }
      }
    }

    out.beams.ul.ue = s.ul_set;
    out.beams.ul.v = v;
    out.beams.ul.w.assign(s.ap_count, std::vector<CVec>(ul_count));
    for (int b = 0; b < s.ap_count; ++b)
      for (int i = 0; i < ul_count; ++i) out.beams.ul.w[b][i] = g[i].segment(b * m, m);
  }

  out.beams.flags = out.flags;
  return out;
}

/// Centralized baseline over a block sequence: design on channels[t-1],
/// evaluate on channels[t] (one resource block of backhaul delay).
inline std::vector<BlockRecord> run_centralized(const Scenario& s,
                                                const std::vector<ChannelState>& channels,
                                                int blocks, double r_tot, int iters, Rng rng,
                                                PrecoderInit init = PrecoderInit::Random,
                                                const DesignOptions& opts = {}) {
  if (static_cast<int>(channels.size()) < blocks + 1)
    throw std::invalid_argument("channel stream shorter than the block count");
  const double r_ibt = ibt_resources(Method::Centralized, s);
  std::vector<BlockRecord> out;
  for (int t = 1; t <= blocks; ++t) {
    CentralizedResult res = centralized_design(channels[t - 1], s, iters, init,
                                               rng.fork(static_cast<std::uint64_t>(t)), opts);
    BlockRecord rec;
    rec.block = t;
    rec.beta = 1.0;
    rec.resources = r_ibt;
    rec.flags = res.flags;
    rec.report = evaluate_block(channels[t], s, res.beams, res.v_dl, r_ibt, r_tot, t);
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Separate DL / UL training baseline

/// Two independent training instances per block: one serving the DL set
/// (beams used for DL data), one serving the UL set (beams reused for UL
/// data). Pilot books are disjoint in time, so the instances never interact.
inline std::vector<BlockRecord> run_separate(const Scenario& s,
                                             const std::vector<ChannelState>& channels,
                                             bool with_ul2, int blocks, double r_tot, Rng rng,
                                             const IbtOptions& opts = {}) {
  const Method merged = with_ul2 ? Method::SepOta : Method::SepLocal;
  const Method sub_method = with_ul2 ? Method::CombOta : Method::CombLocal;
  const double r_ibt = ibt_resources(merged, s);

  std::vector<BlockRecord> out(blocks);
  for (int t = 1; t <= blocks; ++t) {
    auto& rec = out[t - 1];
    rec.block = t;
    rec.resources = 0.0;
  }

  auto run_side = [&](const std::vector<int>& ues, bool as_dl, std::uint64_t tag) {
    if (ues.empty()) return;
    const Scenario sub = restrict_scenario(s, ues, as_dl);
    std::vector<ChannelState> sub_ch;
    sub_ch.reserve(channels.size());
    for (const auto& ch : channels) sub_ch.push_back(restrict_channel(ch, ues));
    const IbtRun run = run_ibt(sub, sub_ch, sub_method, blocks, r_tot, rng.fork(tag), opts);
    for (int t = 0; t < blocks; ++t) {
      auto& rec = out[t];
      const auto& sub_rec = run.blocks[t];
      rec.resources += sub_rec.resources;
      rec.beta = sub_rec.beta;
      rec.flags.merge(sub_rec.flags);
      if (as_dl) {
        rec.report.r_dl = sub_rec.report.r_dl;
        rec.report.gamma_dl = RVec::Zero(s.ue_count);
        for (std::size_t i = 0; i < ues.size(); ++i)
          rec.report.gamma_dl[ues[i]] = sub_rec.report.gamma_dl[static_cast<int>(i)];
      } else {
        rec.report.r_ul = sub_rec.report.r_ul;
        rec.report.gamma_ul = RVec::Zero(s.ue_count);
        for (std::size_t i = 0; i < ues.size(); ++i)
          rec.report.gamma_ul[ues[i]] = sub_rec.report.gamma_ul[static_cast<int>(i)];
      }
    }
  };

  run_side(s.dl_set, true, 0);
  run_side(s.ul_set, false, 1);

  for (auto& rec : out) {
    if (rec.report.gamma_dl.size() == 0) rec.report.gamma_dl = RVec::Zero(s.ue_count);
    if (rec.report.gamma_ul.size() == 0) rec.report.gamma_ul = RVec::Zero(s.ue_count);
    rec.report.block = rec.block;
    rec.report.r_ibt = r_ibt;
    rec.report.r_tot = r_tot;
    rec.report.r_eff = effective_rate(rec.report.r_dl, rec.report.r_ul, r_ibt, r_tot);
  }
  return out;
}

}  // namespace cfmimo
