#include "test_util.hpp"

using namespace cfmimo;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.scenario.ap_count = 4;
  cfg.scenario.ue_count = 4;
  cfg.scenario.ap_antennas = 3;
  cfg.scenario.ue_antennas = 2;
  cfg.methods = {Method::CombOta, Method::CombLocal};
  cfg.blocks = 2;
  cfg.drops = 3;
  cfg.r_tot = 100.0;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("configuration files parse into experiments") {
  const std::string text = R"(
# comment
[scenario]
ap_count = 9
ue_count = 6
ap_antennas = 4
ue_antennas = 2
dl_set = 1, 2, 3, 5   ; 1-based indices
ul_set = 1, 3, 4
noise_dbm = -92

[channel]
kappa = 0.9

[run]
methods = comb-ota, sep-local
blocks = 4
drops = 7
r_tot = 150
seed = 42
gamma_br = 0.25
)";
  ExperimentConfig cfg;
  apply_config(ConfigFile::parse(text), cfg);
  REQUIRE(cfg.scenario.ap_count == 9);
  REQUIRE(cfg.scenario.ue_count == 6);
  REQUIRE(cfg.scenario.dl_set == std::vector<int>{0, 1, 2, 4});
  REQUIRE(cfg.scenario.ul_set == std::vector<int>{0, 2, 3});
  REQUIRE(cfg.scenario.noise_ap_dbm == -92.0);
  REQUIRE(cfg.kappa == 0.9);
  REQUIRE(cfg.methods == std::vector<Method>{Method::CombOta, Method::SepLocal});
  REQUIRE(cfg.blocks == 4);
  REQUIRE(cfg.drops == 7);
  REQUIRE(cfg.r_tot == 150.0);
  REQUIRE(cfg.seed == 42);
  REQUIRE(cfg.ibt.gamma_br == 0.25);
}

TEST_CASE("malformed configuration lines are rejected") {
  REQUIRE_THROWS_AS(ConfigFile::parse("[run\nblocks = 3\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(ConfigFile::parse("blocks 3\n"), std::invalid_argument);
  ExperimentConfig cfg;
  REQUIRE_THROWS_AS(apply_config(ConfigFile::parse("[run]\nmethods = zf\n"), cfg),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(apply_config(ConfigFile::parse("[run]\nsweep = sideways\n"), cfg),
                    std::invalid_argument);
}

TEST_CASE("presets describe the reference protocols") {
  const ExperimentConfig fig3 = make_preset("fig3");
  REQUIRE(fig3.scenario.ap_count == 25);
  REQUIRE(fig3.scenario.ap_antennas == 8);
  REQUIRE(fig3.scenario.ue_antennas == 4);
  REQUIRE(fig3.scenario.ue_count == 32);
  REQUIRE(fig3.r_tot == 300.0);
  REQUIRE(fig3.blocks == 10);
  REQUIRE(fig3.methods.size() == 5);
  REQUIRE(fig3.kappa == Approx(0.967));

  const ExperimentConfig fig4 = make_preset("fig4");
  REQUIRE(fig4.scenario.ue_count == 44);
  REQUIRE(fig4.scenario.dl_count == 32);
  REQUIRE(fig4.scenario.ul_count == 32);
  REQUIRE(fig4.sweep == SweepKind::Rtot);
  REQUIRE(fig4.rtot_points.front() == 100.0);
  REQUIRE(fig4.rtot_points.back() == 900.0);

  const ExperimentConfig fig5 = make_preset("fig5");
  REQUIRE(fig5.sweep == SweepKind::Overlap);
  REQUIRE(fig5.overlap_points.front() == 0);
  REQUIRE(fig5.overlap_points.back() == 32);

  const ExperimentConfig desk = make_preset("desk");
  REQUIRE(desk.scenario.ap_count == 9);
  // training fraction preserved: 3|K| / r_tot == 96 / 300
  REQUIRE(3.0 * desk.scenario.ue_count / desk.r_tot == Approx(96.0 / 300.0));

  REQUIRE_THROWS_AS(make_preset("fig9"), std::invalid_argument);
}

TEST_CASE("identical seeds give byte-identical CSV output") {
  const ExperimentConfig cfg = tiny_config();
  const ExperimentResult a = run_experiment(cfg);
  const ExperimentResult b = run_experiment(cfg);
  REQUIRE(a.results_csv == b.results_csv);
  REQUIRE(a.summary_csv == b.summary_csv);
  REQUIRE(a.results_csv.find("seed,drop,block,method,r_ibt,r_tot,r_dl,r_ul,r_eff\n") == 0);
}

TEST_CASE("per-drop rows do not depend on the batch context") {
  const ExperimentConfig cfg = tiny_config();
  const ExperimentResult batch = run_experiment(cfg);
  const auto alone = run_drop(cfg, 1, cfg.r_tot);

  int matched = 0;
  for (const auto& row : batch.rows) {
    if (row.drop != 1) continue;
    const auto it = std::find_if(alone.begin(), alone.end(), [&](const ResultRow& r) {
      return r.method == row.method && r.block == row.block;
    });
    REQUIRE(it != alone.end());
    REQUIRE(it->r_eff == row.r_eff);
    REQUIRE(it->r_dl == row.r_dl);
    ++matched;
  }
  REQUIRE(matched == cfg.blocks * static_cast<int>(cfg.methods.size()));
}

TEST_CASE("threaded execution reproduces the sequential rows") {
  ExperimentConfig cfg = tiny_config();
  const ExperimentResult seq = run_experiment(cfg);
  cfg.threads = 3;
  const ExperimentResult par = run_experiment(cfg);
  REQUIRE(seq.results_csv == par.results_csv);
}

TEST_CASE("rtot sweep re-derives effective rates and zeroes infeasible points") {
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {Method::CombOta};  // r_ibt = 12
  cfg.sweep = SweepKind::Rtot;
  cfg.rtot_points = {10.0, 24.0, 120.0};  // first point below r_ibt
  const ExperimentResult res = run_experiment(cfg);

  REQUIRE(res.rows.size() == static_cast<std::size_t>(cfg.drops) * cfg.rtot_points.size());
  for (const auto& row : res.rows) {
    REQUIRE(row.block == cfg.blocks);
    if (row.r_tot == 10.0) REQUIRE(row.r_eff == 0.0);
    if (row.r_tot == 120.0)
      REQUIRE(row.r_eff == Approx((1.0 - row.r_ibt / 120.0) * (row.r_dl + row.r_ul) / 2.0));
  }
}

TEST_CASE("overlap sweep adjusts the UE population per point") {
  ExperimentConfig cfg = tiny_config();
  cfg.scenario.ue_count = 6;
  cfg.scenario.dl_count = 4;
  cfg.scenario.ul_count = 4;
  cfg.methods = {Method::CombPairedOta};
  cfg.sweep = SweepKind::Overlap;
  cfg.overlap_points = {0, 2, 4};
  const ExperimentResult res = run_experiment(cfg);

  for (const auto& row : res.rows) {
    REQUIRE((row.overlap == 0 || row.overlap == 2 || row.overlap == 4));
    REQUIRE(row.block == cfg.blocks);
  }
  // |K| = dl + ul - overlap: 8, 6, 4
  REQUIRE(res.results_csv.find(",overlap") != std::string::npos);
  REQUIRE(res.summary.size() == 3);
}

TEST_CASE("summary carries mean and standard error per coordinate") {
  const ExperimentConfig cfg = tiny_config();
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.summary.size() == cfg.methods.size() * static_cast<std::size_t>(cfg.blocks));
  for (const auto& srow : res.summary) {
    REQUIRE(srow.drops == cfg.drops);
    REQUIRE(srow.se_r_eff >= 0.0);
  }

  // cross-check one mean against the raw rows
  const auto& first = res.summary.front();
  double acc = 0.0;
  int n = 0;
  for (const auto& row : res.rows)
    if (row.method == first.method && static_cast<double>(row.block) == first.coordinate) {
      acc += row.r_eff;
      ++n;
    }
  REQUIRE(n == cfg.drops);
  REQUIRE(first.mean_r_eff == Approx(acc / n));
}

TEST_CASE("paired margins are computed over common drops") {
  const ExperimentConfig cfg = tiny_config();
  const ExperimentResult res = run_experiment(cfg);
  const PairedMargin m =
      paired_margin(res.rows, Method::CombOta, Method::CombLocal,
                    [&](const ResultRow& r) { return r.block == cfg.blocks; });
  REQUIRE(m.n == cfg.drops);

  double acc = 0.0;
  for (int d = 0; d < cfg.drops; ++d) {
    double a = 0.0, b = 0.0;
    for (const auto& row : res.rows) {
      if (row.drop != d || row.block != cfg.blocks) continue;
      if (row.method == Method::CombOta) a = row.r_eff;
      if (row.method == Method::CombLocal) b = row.r_eff;
    }
    acc += a - b;
  }
  REQUIRE(m.mean == Approx(acc / cfg.drops));
}
