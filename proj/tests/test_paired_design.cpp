#include "test_util.hpp"

using namespace cfmimo;
using testutil::rel_err;

namespace {

// All-self-paired setup shared by the reduction tests.
struct SelfPaired {
  Scenario s;
  Pairing pairing;
  ChannelState ch;
  std::vector<std::vector<CVec>> w;
};

SelfPaired self_paired_instance(Rng& rng, int b_count = 2, int k_count = 3, int m = 3,
                                int n = 2) {
  SelfPaired out;
  std::vector<int> all(k_count);
  std::iota(all.begin(), all.end(), 0);
  out.s = testutil::direct_scenario(b_count, k_count, m, n, all, all);
  out.pairing = pair_ues(out.s);
  out.ch = testutil::random_channel(b_count, k_count, m, n, rng);
  out.w = testutil::random_beams(b_count, k_count, m, rng);
  return out;
}

}  // namespace

TEST_CASE("self-paired combiner equals the UE-specific combiner") {
  Rng rng(31);
  const SelfPaired sp = self_paired_instance(rng);
  const double sigma2 = 0.4;
  for (int k = 0; k < 3; ++k) {
    const CVec paired = update_combiner_paired(sp.ch, sp.w, k, sp.pairing, sigma2);
    const CVec ue_specific = update_combiner(sp.ch, sp.w, k, sigma2);
    REQUIRE(rel_err(paired, ue_specific) < 1e-12);
  }
}

TEST_CASE("self-paired G-MSE equals the UE-specific sum MSE") {
  Rng rng(32);
  const SelfPaired sp = self_paired_instance(rng);
  const auto v = testutil::random_combiners(3, 2, rng);
  const double sigma2 = 0.2;
  REQUIRE(rel_err(gmse(sp.ch, sp.w, v, sp.pairing, sigma2),
                  sum_mse(sp.ch, sp.w, v, sigma2)) < 1e-12);
}

TEST_CASE("single pair reduces to the rank-one closed form") {
  Rng rng(33);
  const Scenario s = testutil::direct_scenario(1, 1, 3, 2, {0}, {0});
  const Pairing pairing = pair_ues(s);
  const ChannelState ch = testutil::random_channel(1, 1, 3, 2, rng);
  const auto w = testutil::random_beams(1, 1, 3, rng);
  const double sigma2 = 0.6;

  const CVec m = paired_effective_channel(ch, w, 0, 0);
  const CVec expected = m / (m.squaredNorm() + sigma2);
  REQUIRE(rel_err(update_combiner_paired(ch, w, 0, pairing, sigma2), expected) < 1e-12);
}

TEST_CASE("phantom-padded beams still interfere in the combiner covariance") {
  Rng rng(34);
  // UE 0 is DL-UL, UE 1 is DL-only: two pairs, the second padded by a phantom.
  const Scenario s = testutil::direct_scenario(1, 2, 3, 2, {0, 1}, {0});
  const Pairing pairing = pair_ues(s);
  REQUIRE(pairing.size() == 2);
  REQUIRE(pairing.pairs[1].ul_ue == kPhantom);

  const ChannelState ch = testutil::random_channel(1, 2, 3, 2, rng);
  auto w = testutil::random_beams(1, 2, 3, rng);
  const CVec before = update_combiner_paired(ch, w, 0, pairing, 0.3);
  w[0][1] *= 5.0;  // boost only the phantom-padded pair's beam
  const CVec after = update_combiner_paired(ch, w, 0, pairing, 0.3);
  REQUIRE(rel_err(after, before) > 1e-3);
}

TEST_CASE("G-MSE plug-in value with everything off") {
  Rng rng(35);
  const SelfPaired sp = self_paired_instance(rng);
  std::vector<std::vector<CVec>> w(2, std::vector<CVec>(3, CVec::Zero(3)));
  std::vector<CVec> v(3, CVec::Zero(2));
  REQUIRE(gmse(sp.ch, w, v, sp.pairing, 0.5) == Approx(3.0));  // |K|
}

TEST_CASE("G-MSE matches a Monte Carlo estimate") {
  Rng rng(36);
  const Scenario s = testutil::direct_scenario(2, 3, 3, 2, {0, 1}, {1, 2});
  const Pairing pairing = pair_ues(s);
  const ChannelState ch = testutil::random_channel(2, 3, 3, 2, rng);
  const auto w = testutil::random_beams(2, pairing.size(), 3, rng);
  const auto v = testutil::random_combiners(3, 2, rng);
  const double sigma2 = 0.4;

  const double closed = gmse(ch, w, v, pairing, sigma2);

  std::vector<CMat> m(3);
  for (int k = 0; k < 3; ++k) m[k] = effective_channel_matrix(ch, w, k);
  Rng mc(77);
  const int draws = 500000;
  double acc = 0.0;
  for (int it = 0; it < draws; ++it) {
    CVec d(pairing.size());
    for (int g = 0; g < pairing.size(); ++g) d[g] = mc.cnormal(1.0);
    for (int k = 0; k < 3; ++k) {
      Complex e = v[k].dot(m[k] * d) - d[pairing.group_of[k]];
      CVec z(2);
      for (int i = 0; i < 2; ++i) z[i] = mc.cnormal(sigma2);
      e += v[k].dot(z);
      acc += std::norm(e);
    }
  }
  REQUIRE(acc / draws == Approx(closed).epsilon(0.01));
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(37);
  for (int trial = 0; trial < 4; ++trial) {
    Rng inst = rng.fork(trial);
    const int b_count = 2 + trial % 2;
    // odd trials use an unbalanced partition, so a phantom-padded pair with a
    // single real member enters the objective
    const Scenario s = trial % 2 == 0
                           ? testutil::direct_scenario(b_count, 4, 3, 2, {0, 1, 2}, {1, 2, 3})
                           : testutil::direct_scenario(b_count, 4, 3, 2, {0, 1, 2, 3}, {1, 3});
    const Pairing pairing = pair_ues(s);
    const ChannelState ch = testutil::random_channel(b_count, 4, 3, 2, inst);
    auto w = testutil::random_beams(b_count, pairing.size(), 3, inst);
    const auto v = testutil::random_combiners(4, 2, inst);

    const int b = trial % b_count;
    const int g = trial % pairing.size();
    const CVec grad = gradient_paired(ch, v, w, b, g, pairing);

    const double h = 1e-6;
    for (int dir = 0; dir < 20; ++dir) {
      CVec u = cn_vector(3, 1.0, inst);
      u /= u.norm();
      auto w_plus = w, w_minus = w;
      w_plus[b][g] += h * u;
      w_minus[b][g] -= h * u;
      const double fd = (gmse(ch, w_plus, v, pairing, 0.3) -
                         gmse(ch, w_minus, v, pairing, 0.3)) /
                        (2 * h);
      const double analytic = std::real(u.dot(grad));  // Re(u^H grad)
      REQUIRE(fd == Approx(analytic).epsilon(1e-5).margin(1e-8));
    }
  }
}

TEST_CASE("zero combiners give a zero gradient") {
  Rng rng(38);
  const Scenario s = testutil::direct_scenario(2, 2, 3, 2, {0, 1}, {0, 1});
  const Pairing pairing = pair_ues(s);
  const ChannelState ch = testutil::random_channel(2, 2, 3, 2, rng);
  const auto w = testutil::random_beams(2, 2, 3, rng);
  const std::vector<CVec> v(2, CVec::Zero(2));
  REQUIRE(gradient_paired(ch, v, w, 0, 0, pairing).norm() == 0.0);
}

TEST_CASE("gradient step with zero step size only projects") {
  Rng rng(39);
  auto w_prev = testutil::random_beams(1, 2, 3, rng)[0];
  const std::vector<CVec> grads(2, CVec::Ones(3));
  const double rho = 0.7;
  const auto w = gradient_step_project(w_prev, grads, 0.0, rho);
  double p = 0.0;
  for (const auto& wg : w) p += wg.squaredNorm();
  REQUIRE(rel_err(p, rho) < 1e-12);
  // directions untouched
  REQUIRE(std::abs(w[0].normalized().dot(w_prev[0].normalized())) == Approx(1.0).margin(1e-12));
}

TEST_CASE("single-pair projection lands on the power budget") {
  Rng rng(40);
  std::vector<CVec> w_prev{cn_vector(3, 1.0, rng)};
  std::vector<CVec> grads{cn_vector(3, 1.0, rng)};
  const auto w = gradient_step_project(w_prev, grads, 0.05, 2.0);
  REQUIRE(rel_err(w[0].squaredNorm(), 2.0) < 1e-12);
}

TEST_CASE("literal projection divides by the squared norm of the beam sum") {
  Rng rng(41);
  std::vector<CVec> w_prev{cn_vector(3, 1.0, rng), cn_vector(3, 1.0, rng)};
  std::vector<CVec> grads(2, CVec::Zero(3));
  const double rho = 1.3;
  const auto w = gradient_step_project(w_prev, grads, 0.1, rho, true);
  const CVec sum = w_prev[0] + w_prev[1];
  const double expected = rho / sum.squaredNorm();
  REQUIRE(rel_err(w[0], CVec(expected * w_prev[0])) < 1e-12);
}

TEST_CASE("projected gradient descends the G-MSE after a burn-in") {
  Rng rng(42);
  const Scenario s = testutil::direct_scenario(2, 3, 3, 2, {0, 1}, {1, 2}, 1.0, 0.1);
  const Pairing pairing = pair_ues(s);
  const ChannelState ch = testutil::random_channel(2, 3, 3, 2, rng);
  auto v = testutil::random_combiners(3, 2, rng);
  for (auto& vk : v) vk *= 0.3;

  auto w = testutil::random_beams(2, pairing.size(), 3, rng);
  for (int b = 0; b < 2; ++b)
    w[b] = gradient_step_project(w[b], std::vector<CVec>(pairing.size(), CVec::Zero(3)), 0.0,
                                 s.rho_ap);

  const double alpha = default_step_size(ch, v);
  std::vector<double> trace;
  for (int it = 0; it < 200; ++it) {
    for (int b = 0; b < 2; ++b) {
      std::vector<CVec> grads(pairing.size());
      for (int g = 0; g < pairing.size(); ++g) grads[g] = gradient_paired(ch, v, w, b, g, pairing);
      w[b] = gradient_step_project(w[b], grads, alpha, s.rho_ap);
    }
    trace.push_back(gmse(ch, w, v, pairing, s.noise_ue));
  }
  for (std::size_t i = 6; i < trace.size(); ++i) REQUIRE(trace[i] <= trace[i - 1] + 1e-9);
  REQUIRE(trace.back() < trace.front());
}
