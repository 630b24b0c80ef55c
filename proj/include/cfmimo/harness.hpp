/**
 * @file harness.hpp
 * @brief Experiment runner: Monte Carlo drops over seeded substreams,
 *        figure-protocol sweeps, aggregation, and CSV emission.
 */
#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <thread>

#include "cfmimo/baselines.hpp"
#include "cfmimo/config.hpp"

namespace cfmimo {

struct ResultRow {
  std::uint64_t seed = 0;
  int drop = 0;
  long block = 0;
  Method method = Method::CombOta;
  double r_ibt = 0.0;
  double r_tot = 0.0;
  double r_dl = 0.0;
  double r_ul = 0.0;
  double r_eff = 0.0;
  int overlap = 0;  // |K^DL-UL| of this row's scenario
  RVec gamma_dl;
  RVec gamma_ul;
};

struct SummaryRow {
  Method method = Method::CombOta;
  double coordinate = 0.0;  // block, r_tot, or overlap depending on sweep
  double mean_r_eff = 0.0;
  double se_r_eff = 0.0;
  double mean_r_dl = 0.0;
  double mean_r_ul = 0.0;
  int drops = 0;
};

struct ExperimentResult {
  SweepKind sweep = SweepKind::None;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::string results_csv;
  std::string summary_csv;
};

// ---------------------------------------------------------------------------
// Single-drop execution (also the per-drop isolation seam)

/// Runs every configured method over one drop. The drop owns an independent
/// substream keyed by its index, so execution order across drops is
/// irrelevant. eval_r_tot is the block size used while simulating; sweep
/// expansion re-derives effective rates afterwards.
inline std::vector<ResultRow> run_drop(const ExperimentConfig& cfg, int drop,
                                       double eval_r_tot) {
  Rng drop_rng = Rng(cfg.seed).fork(stream::kDropBase + static_cast<std::uint64_t>(drop));
  const Scenario s = build_scenario(cfg.scenario, drop_rng);
  const int overlap = static_cast<int>(s.dl_ul_set.size());

  std::vector<ChannelState> channels;
  channels.reserve(cfg.blocks + 1);
  channels.push_back(init_channel(s, drop_rng));
  for (int t = 1; t <= cfg.blocks; ++t)
    channels.push_back(evolve_channel(channels.back(), cfg.kappa, drop_rng));

  std::vector<ResultRow> rows;
  for (Method method : cfg.methods) {
    Rng method_rng = drop_rng.fork(stream::kMethod).fork(static_cast<std::uint64_t>(method) + 1);
    std::vector<BlockRecord> records;
    switch (method) {
      case Method::Centralized:
        records = run_centralized(s, channels, cfg.blocks, eval_r_tot, cfg.centralized_iters,
                                  method_rng, cfg.precoder_init, cfg.ibt.design());
        break;
      case Method::SepOta:
      case Method::SepLocal:
        records = run_separate(s, channels, method == Method::SepOta, cfg.blocks, eval_r_tot,
                               method_rng, cfg.ibt);
        break;
      default: {
        IbtRun run = run_ibt(s, channels, method, cfg.blocks, eval_r_tot, method_rng, cfg.ibt);
        records = std::move(run.blocks);
        break;
      }
    }
    for (const auto& rec : records) {
      ResultRow row;
      row.seed = cfg.seed;
      row.drop = drop;
      row.block = rec.block;
      row.method = method;
      row.r_ibt = rec.report.r_ibt;
      row.r_tot = rec.report.r_tot;
      row.r_dl = rec.report.r_dl;
      row.r_ul = rec.report.r_ul;
      row.r_eff = rec.report.r_eff;
      row.overlap = overlap;
      row.gamma_dl = rec.report.gamma_dl;
      row.gamma_ul = rec.report.gamma_ul;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace detail {

inline std::vector<ResultRow> run_all_drops(const ExperimentConfig& cfg, double eval_r_tot) {
  std::vector<std::vector<ResultRow>> slots(cfg.drops);
  const int threads = std::max(1, std::min(cfg.threads, cfg.drops));
  if (threads == 1) {
    for (int d = 0; d < cfg.drops; ++d) slots[d] = run_drop(cfg, d, eval_r_tot);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int d = t; d < cfg.drops; d += threads) slots[d] = run_drop(cfg, d, eval_r_tot);
      });
    for (auto& th : pool) th.join();
  }
  std::vector<ResultRow> rows;
  for (auto& slot : slots)
    for (auto& row : slot) rows.push_back(std::move(row));
  return rows;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline void summarize(std::vector<ResultRow>& rows, ExperimentResult& out,
                      const std::function<double(const ResultRow&)>& coordinate) {
  std::sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    if (a.drop != b.drop) return a.drop < b.drop;
    if (a.method != b.method) return a.method < b.method;
    return coordinate(a) < coordinate(b);
  });

  struct Acc {
    double sum = 0, sum2 = 0, sum_dl = 0, sum_ul = 0;
    int n = 0;
  };
  std::map<std::pair<int, double>, Acc> acc;  // (method, coordinate)
  for (const auto& row : rows) {
    auto& a = acc[{static_cast<int>(row.method), coordinate(row)}];
    a.sum += row.r_eff;
    a.sum2 += row.r_eff * row.r_eff;
    a.sum_dl += row.r_dl;
    a.sum_ul += row.r_ul;
    a.n += 1;
  }
  for (const auto& [key, a] : acc) {
    SummaryRow srow;
    srow.method = static_cast<Method>(key.first);
    srow.coordinate = key.second;
    srow.drops = a.n;
    srow.mean_r_eff = a.sum / a.n;
    srow.mean_r_dl = a.sum_dl / a.n;
    srow.mean_r_ul = a.sum_ul / a.n;
    const double var = a.n > 1 ? (a.sum2 - a.sum * a.sum / a.n) / (a.n - 1) : 0.0;
    srow.se_r_eff = a.n > 1 ? std::sqrt(std::max(var, 0.0) / a.n) : 0.0;
    out.summary.push_back(srow);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment entry point

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult out;
  out.sweep = cfg.sweep;

  if (cfg.sweep == SweepKind::None) {
    out.rows = detail::run_all_drops(cfg, cfg.r_tot);
    detail::summarize(out.rows, out,
                      [](const ResultRow& r) { return static_cast<double>(r.block); });
  } else if (cfg.sweep == SweepKind::Rtot) {
    // Beam dynamics do not depend on the block size, so simulate once at the
    // largest point and re-derive the effective rate per point. Points too
    // small to hold the training burst report rate zero.
    const double eval_r_tot = *std::max_element(cfg.rtot_points.begin(), cfg.rtot_points.end());
    std::vector<ResultRow> base = detail::run_all_drops(cfg, eval_r_tot);
    for (const auto& row : base) {
      if (row.block != cfg.blocks) continue;
      for (double point : cfg.rtot_points) {
        ResultRow expanded = row;
        expanded.r_tot = point;
        expanded.r_eff = row.r_ibt <= point
                             ? effective_rate(row.r_dl, row.r_ul, row.r_ibt, point)
                             : 0.0;
        out.rows.push_back(std::move(expanded));
      }
    }
    detail::summarize(out.rows, out, [](const ResultRow& r) { return r.r_tot; });
  } else {
    if (cfg.scenario.dl_count < 0 || cfg.scenario.ul_count < 0)
      throw std::invalid_argument("overlap sweep requires dl_count and ul_count");
    for (int ov : cfg.overlap_points) {
      ExperimentConfig point_cfg = cfg;
      point_cfg.scenario.ue_count = cfg.scenario.dl_count + cfg.scenario.ul_count - ov;
      point_cfg.scenario.dl_set.clear();
      point_cfg.scenario.ul_set.clear();
      std::vector<ResultRow> base = detail::run_all_drops(point_cfg, cfg.r_tot);
      for (auto& row : base)
        if (row.block == cfg.blocks) out.rows.push_back(std::move(row));
    }
    detail::summarize(out.rows, out,
                      [](const ResultRow& r) { return static_cast<double>(r.overlap); });
  }

  // results.csv
  {
    std::string& csv = out.results_csv;
    csv = "seed,drop,block,method,r_ibt,r_tot,r_dl,r_ul,r_eff";
    if (cfg.sweep == SweepKind::Overlap) csv += ",overlap";
    const bool wide = cfg.wide_sinr && cfg.sweep != SweepKind::Overlap;
    if (wide)
      for (int part = 0; part < 2; ++part)
        for (int k = 1; k <= cfg.scenario.ue_count; ++k)
          csv += (part == 0 ? ",gamma_dl_" : ",gamma_ul_") + std::to_string(k);
    csv += "\n";
    for (const auto& row : out.rows) {
      csv += std::to_string(row.seed) + "," + std::to_string(row.drop) + "," +
             std::to_string(row.block) + "," + to_string(row.method) + "," +
             detail::format_double(row.r_ibt) + "," + detail::format_double(row.r_tot) + "," +
             detail::format_double(row.r_dl) + "," + detail::format_double(row.r_ul) + "," +
             detail::format_double(row.r_eff);
      if (cfg.sweep == SweepKind::Overlap) csv += "," + std::to_string(row.overlap);
      if (wide) {
        for (Eigen::Index k = 0; k < row.gamma_dl.size(); ++k)
          csv += "," + detail::format_double(row.gamma_dl[k]);
        for (Eigen::Index k = 0; k < row.gamma_ul.size(); ++k)
          csv += "," + detail::format_double(row.gamma_ul[k]);
      }
      csv += "\n";
    }
  }

  // summary.csv
  {
    const char* coord_name = cfg.sweep == SweepKind::None    ? "block"
                             : cfg.sweep == SweepKind::Rtot ? "r_tot"
                                                            : "overlap";
    std::string& csv = out.summary_csv;
    csv = std::string("method,") + coord_name + ",drops,mean_r_eff,se_r_eff,mean_r_dl,mean_r_ul\n";
    for (const auto& srow : out.summary) {
      csv += std::string(to_string(srow.method)) + "," + detail::format_double(srow.coordinate) +
             "," + std::to_string(srow.drops) + "," + detail::format_double(srow.mean_r_eff) +
             "," + detail::format_double(srow.se_r_eff) + "," +
             detail::format_double(srow.mean_r_dl) + "," + detail::format_double(srow.mean_r_ul) +
             "\n";
    }
  }
  return out;
}

/// Mean and standard error of the per-drop difference r_eff(a) - r_eff(b) at
/// one coordinate (block or sweep point). Drops are paired: every method saw
/// the same channels within a drop.
struct PairedMargin {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

inline PairedMargin paired_margin(const std::vector<ResultRow>& rows, Method a, Method b,
                                  const std::function<bool(const ResultRow&)>& at) {
  std::map<int, std::pair<double, double>> per_drop;  // drop -> (a, b)
  std::map<int, std::pair<bool, bool>> seen;
  for (const auto& row : rows) {
    if (!at(row)) continue;
    if (row.method == a) {
      per_drop[row.drop].first = row.r_eff;
      seen[row.drop].first = true;
    } else if (row.method == b) {
      per_drop[row.drop].second = row.r_eff;
      seen[row.drop].second = true;
    }
  }
  PairedMargin m;
  double sum = 0.0, sum2 = 0.0;
  for (const auto& [drop, pair] : per_drop) {
    if (!seen[drop].first || !seen[drop].second) continue;
    const double d = pair.first - pair.second;
    sum += d;
    sum2 += d * d;
    ++m.n;
  }
  if (m.n == 0) return m;
  m.mean = sum / m.n;
  if (m.n > 1) {
    const double var = (sum2 - sum * sum / m.n) / (m.n - 1);
    m.se = std::sqrt(std::max(var, 0.0) / m.n);
  }
  return m;
}

// ---------------------------------------------------------------------------
// File emission

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

inline std::string gnuplot_script(const ExperimentResult& result) {
  const char* xlabel = result.sweep == SweepKind::None    ? "resource block t"
                       : result.sweep == SweepKind::Rtot ? "r_tot"
                                                          : "|K^{DL-UL}|";
  std::string s;
  s += "set datafile separator ','\n";
  s += "set key below\n";
  s += std::string("set xlabel '") + xlabel + "'\n";
  s += "set ylabel 'effective DL-UL sum rate [bps/Hz]'\n";
  s += "set terminal pngcairo size 900,540\n";
  s += "set output 'rates.png'\n";
  std::vector<std::string> methods;
  for (const auto& srow : result.summary) {
    const std::string name = to_string(srow.method);
    if (std::find(methods.begin(), methods.end(), name) == methods.end())
      methods.push_back(name);
  }
  s += "plot ";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (i) s += ", \\\n     ";
    s += "'summary.csv' using 2:(strcol(1) eq '" + methods[i] +
         "' ? $4 : NaN) with linespoints title '" + methods[i] + "'";
  }
  s += "\n";
  return s;
}

inline void write_outputs(const ExperimentResult& result, const std::string& dir,
                          bool plot_script = false) {
  write_file(dir + "/results.csv", result.results_csv);
  write_file(dir + "/summary.csv", result.summary_csv);
  if (plot_script) write_file(dir + "/plot.gp", gnuplot_script(result));
}

}  // namespace cfmimo
