/**
 * @file simulate.cpp
 * @brief Experiment runner CLI for the cell-free combined DL-UL training
 *        simulator.
 */
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cfmimo/cfmimo.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link-level simulator for combined DL-UL distributed beamforming "
               "in cell-free massive MIMO"};

  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int drops = 0;
  bool literal_scaling = false;
  bool plot_script = false;
  int threads = 0;

  app.add_option("--config", config_path, "configuration file (key = value sections)");
  app.add_option("--preset", preset, "fig3 | fig4 | fig5 | desk")
      ->check(CLI::IsMember({"fig3", "fig4", "fig5", "desk"}));
  app.add_option("--seed", seed, "root seed")->each([&](const std::string&) { seed_given = true; });
  app.add_option("--drops", drops, "Monte Carlo drops");
  app.add_option("--out", out_dir, "output directory for results.csv / summary.csv");
  app.add_flag("--literal-scaling", literal_scaling,
               "use the literal amplitude-normalization scaling rules");
  app.add_flag("--plot-script", plot_script, "also emit a gnuplot script");
  bool trace = false;
  app.add_flag("--trace", trace,
               "also dump drop-0 per-block training traces and channels");
  app.add_option("--threads", threads, "parallel drops");

  CLI11_PARSE(app, argc, argv);

  try {
    cfmimo::ExperimentConfig cfg =
        preset.empty() ? cfmimo::ExperimentConfig{} : cfmimo::make_preset(preset);
    if (!config_path.empty())
      cfmimo::apply_config(cfmimo::ConfigFile::parse(read_file(config_path)), cfg);
    if (preset.empty() && config_path.empty()) {
      std::cerr << "error: provide --config and/or --preset\n";
      return 2;
    }
    if (seed_given) cfg.seed = seed;
    if (drops > 0) cfg.drops = drops;
    if (threads > 0) cfg.threads = threads;
    if (literal_scaling) cfg.ibt.literal_scaling = true;

    const cfmimo::ExperimentResult result = cfmimo::run_experiment(cfg);

    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      cfmimo::write_outputs(result, out_dir, plot_script);
      if (trace) {
        // drop-0 diagnostics: raw channels plus per-block training traces
        // for the combined methods in the run
        cfmimo::Rng drop_rng = cfmimo::Rng(cfg.seed).fork(cfmimo::stream::kDropBase);
        const cfmimo::Scenario s = cfmimo::build_scenario(cfg.scenario, drop_rng);
        std::vector<cfmimo::ChannelState> channels;
        channels.push_back(cfmimo::init_channel(s, drop_rng));
        for (int t = 1; t <= cfg.blocks; ++t)
          channels.push_back(cfmimo::evolve_channel(channels.back(), cfg.kappa, drop_rng));
        cfmimo::write_file(out_dir + "/channels_drop0.csv",
                           cfmimo::channel_trace_csv(channels.back()));
        for (cfmimo::Method m : cfg.methods) {
          if (m == cfmimo::Method::Centralized || m == cfmimo::Method::SepOta ||
              m == cfmimo::Method::SepLocal)
            continue;
          cfmimo::Rng method_rng = drop_rng.fork(cfmimo::stream::kMethod)
                                       .fork(static_cast<std::uint64_t>(m) + 1);
          const double r_tot = std::max(cfg.r_tot, cfmimo::ibt_resources(m, s));
          const cfmimo::IbtRun run =
              cfmimo::run_ibt(s, channels, m, cfg.blocks, r_tot, method_rng, cfg.ibt);
          cfmimo::write_file(out_dir + "/trace_" + cfmimo::to_string(m) + ".csv",
                             cfmimo::ibt_trace_csv(run.blocks, m));
        }
      }
      std::cout << "wrote " << out_dir << "/results.csv (" << result.rows.size() << " rows)\n";
    } else {
      std::cout << result.summary_csv;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
