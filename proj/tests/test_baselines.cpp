#include "test_util.hpp"

using namespace cfmimo;

namespace {

Scenario grid_scenario(int ue_count, int dl_count, int ul_count, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.ap_count = 4;
  cfg.ue_count = ue_count;
  cfg.ap_antennas = 3;
  cfg.ue_antennas = 2;
  cfg.dl_count = dl_count;
  cfg.ul_count = ul_count;
  return build_scenario(cfg, Rng(seed));
}

std::vector<ChannelState> channel_stream(const Scenario& s, int blocks, double kappa, Rng rng) {
  std::vector<ChannelState> channels;
  channels.push_back(init_channel(s, rng));
  for (int t = 1; t <= blocks; ++t)
    channels.push_back(evolve_channel(channels.back(), kappa, rng));
  return channels;
}

}  // namespace

TEST_CASE("static channel makes the backhaul delay harmless") {
  const Scenario s = grid_scenario(4, 4, 4, 1);
  const auto channels = channel_stream(s, 3, 1.0, Rng(2));  // kappa = 1: frozen
  const auto recs =
      run_centralized(s, channels, 3, 100.0, 10, Rng(3), PrecoderInit::Matched);

  // with a frozen channel every block sees the same design problem; the
  // delayed design equals the non-delayed one, so rates are block-invariant
  REQUIRE(recs.size() == 3);
  for (const auto& rec : recs) {
    REQUIRE(rec.report.r_dl == Approx(recs[0].report.r_dl).epsilon(1e-9));
    REQUIRE(rec.report.r_ul == Approx(recs[0].report.r_ul).epsilon(1e-9));
  }

  CentralizedResult direct =
      centralized_design(channels[3], s, 10, PrecoderInit::Matched, Rng(3).fork(3));
  const RateReport rep = evaluate_block(channels[3], s, direct.beams, direct.v_dl,
                                        ibt_resources(Method::Centralized, s), 100.0, 3);
  REQUIRE(rep.r_dl == Approx(recs[2].report.r_dl).epsilon(1e-9));
}

TEST_CASE("channel aging degrades the delayed centralized design") {
  // paired comparison over drops: same design, evaluated on the stale vs the
  // fresh channel
  int wins = 0;
  const int drops = 100;
  double mean_fresh = 0.0, mean_stale = 0.0;
  for (int d = 0; d < drops; ++d) {
    const Scenario s = grid_scenario(4, 4, 4, 100 + d);
    Rng rng = Rng(500).fork(d);
    const auto channels = channel_stream(s, 1, 0.967, rng);
    CentralizedResult des =
        centralized_design(channels[0], s, 8, PrecoderInit::Random, rng.fork(77));
    const RateReport stale = evaluate_block(channels[1], s, des.beams, des.v_dl, 0.0, 100.0, 1);
    const RateReport fresh = evaluate_block(channels[0], s, des.beams, des.v_dl, 0.0, 100.0, 1);
    mean_fresh += fresh.r_dl + fresh.r_ul;
    mean_stale += stale.r_dl + stale.r_ul;
    wins += (fresh.r_dl + fresh.r_ul) > (stale.r_dl + stale.r_ul);
  }
  REQUIRE(mean_stale < mean_fresh);
  REQUIRE(wins > drops / 2);
}

TEST_CASE("centralized power budgets after scaling") {
  const Scenario s = grid_scenario(5, 4, 3, 4);
  const auto channels = channel_stream(s, 1, 0.967, Rng(5));
  CentralizedResult des =
      centralized_design(channels[0], s, 10, PrecoderInit::Random, Rng(6));

  for (int b = 0; b < s.ap_count; ++b) {
    double p = 0.0;
    for (const CVec& w : des.beams.dl.w[b]) p += w.squaredNorm();
    REQUIRE(p == Approx(s.rho_ap).epsilon(1e-9));
  }
  for (const CVec& v : des.beams.ul.v)
    REQUIRE(v.squaredNorm() == Approx(s.rho_ue).epsilon(1e-9));
}

TEST_CASE("separate training reports the merged overheads") {
  const Scenario s = grid_scenario(6, 4, 4, 7);
  const auto channels = channel_stream(s, 2, 0.967, Rng(8));

  const auto ota = run_separate(s, channels, true, 2, 200.0, Rng(9));
  const auto local = run_separate(s, channels, false, 2, 200.0, Rng(9));
  for (const auto& rec : ota) {
    REQUIRE(rec.resources == Approx(3.0 * (4 + 4)));
    REQUIRE(rec.report.r_ibt == Approx(ibt_resources(Method::SepOta, s)));
    REQUIRE(rec.report.r_eff ==
            Approx(effective_rate(rec.report.r_dl, rec.report.r_ul, rec.report.r_ibt, 200.0)));
  }
  for (const auto& rec : local) REQUIRE(rec.resources == Approx(2.0 * (4 + 4)));
}

TEST_CASE("separate training with full overlap doubles the combined overhead") {
  const Scenario s = grid_scenario(4, 4, 4, 10);
  REQUIRE(ibt_resources(Method::SepOta, s) ==
          Approx(2.0 * ibt_resources(Method::CombOta, s)));
}

TEST_CASE("an empty UL set degenerates to a DL-only instance") {
  ScenarioConfig cfg;
  cfg.ap_count = 4;
  cfg.ue_count = 3;
  cfg.ap_antennas = 3;
  cfg.ue_antennas = 2;
  cfg.dl_set = {0, 1, 2};
  cfg.ul_set = {};
  const Scenario s = build_scenario(cfg, Rng(11));
  const auto channels = channel_stream(s, 2, 0.967, Rng(12));
  const auto recs = run_separate(s, channels, true, 2, 100.0, Rng(13));
  for (const auto& rec : recs) {
    REQUIRE(rec.report.r_ul == 0.0);
    REQUIRE(rec.report.r_dl > 0.0);
    REQUIRE(rec.resources == Approx(3.0 * 3));
  }
}

TEST_CASE("the two separate instances are fully isolated") {
  // moving the UL-only UEs around must not change the DL instance's rates:
  // the DL side trains and transmits over its own UEs only
  ScenarioConfig cfg;
  cfg.ap_count = 4;
  cfg.ue_count = 4;
  cfg.ap_antennas = 3;
  cfg.ue_antennas = 2;
  cfg.dl_set = {0, 1};
  cfg.ul_set = {2, 3};
  const Scenario s = build_scenario(cfg, Rng(14));

  Scenario moved = s;
  moved.ue_positions[2].x += 25.0;
  moved.ue_positions[3].y += 25.0;

  const auto ch_a = channel_stream(s, 2, 0.967, Rng(15));
  const auto ch_b = channel_stream(moved, 2, 0.967, Rng(15));

  const auto ra = run_separate(s, ch_a, true, 2, 100.0, Rng(16));
  const auto rb = run_separate(moved, ch_b, true, 2, 100.0, Rng(16));
  for (std::size_t t = 0; t < ra.size(); ++t)
    REQUIRE(ra[t].report.r_dl == rb[t].report.r_dl);  // bitwise: same stream & forks
}
