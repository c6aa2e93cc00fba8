// Reward paradigms: novelty, coverage, curiosity, concepts, reconstruction.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "explore/rewards.hpp"
#include "helpers.hpp"

using namespace explore;
using namespace explore::rewards;
using testref::near;

namespace {

// Long-double mirror of the eps-floored KL, summed in reverse index order so
// it cannot share accumulation order with the production code.
double kl_reference(const std::vector<double>& p, const std::vector<double>& q,
                    double eps = 1e-6) {
  long double qnorm = 0.0L;
  for (double v : q) qnorm += std::max<long double>(v, eps);
  long double kl = 0.0L;
  for (size_t i = p.size(); i-- > 0;) {
    if (p[i] <= 0.0) continue;
    const long double qq = std::max<long double>(q[i], eps) / qnorm;
    kl += static_cast<long double>(p[i]) * std::log(static_cast<long double>(p[i]) / qq);
  }
  return static_cast<double>(kl);
}

std::vector<double> random_dist(Rng& rng, size_t n, bool with_zeros) {
  std::vector<double> d(n);
  double sum = 0.0;
  for (auto& v : d) {
    v = with_zeros && rng.uniform() < 0.3 ? 0.0 : rng.uniform() + 1e-3;
    sum += v;
  }
  if (sum <= 0.0) d[0] = sum = 1.0;
  for (auto& v : d) v /= sum;
  return d;
}

}  // namespace

TEST_CASE("novelty: inverse-sqrt visit payout") {
  NoveltyState s;
  s.scale = 1.0;
  const Vec2 a{0.1, 0.1}, b{3.0, 0.0};

  CHECK(near(novelty_update_and_reward(s, a), 1.0, 1e-12));
  CHECK(near(novelty_update_and_reward(s, a), 1.0 / std::sqrt(2.0), 1e-12));
  CHECK(near(novelty_update_and_reward(s, a), 1.0 / std::sqrt(3.0), 1e-12));
  CHECK(near(novelty_update_and_reward(s, a), 0.5, 1e-12));  // fourth visit

  SUBCASE("oscillating between two cells") {
    NoveltyState o;
    o.scale = 1.0;
    const double r = novelty_update_and_reward(o, a) + novelty_update_and_reward(o, b) +
                     novelty_update_and_reward(o, a) + novelty_update_and_reward(o, b);
    CHECK(near(r, 2.0 + 2.0 / std::sqrt(2.0), 1e-12));
  }

  SUBCASE("per-cell rewards strictly decrease; counts sum to steps") {
    NoveltyState p;
    p.scale = 0.7;
    Rng rng(11);
    double prev = 1e300;
    int steps = 0;
    for (int t = 0; t < 120; ++t, ++steps) {
      const double r = novelty_update_and_reward(p, a);
      CHECK(r < prev);
      CHECK(r > 0.0);
      prev = r;
      if (rng.uniform() < 0.4) {  // interleave other cells
        novelty_update_and_reward(p, {rng.uniform() * 8, rng.uniform() * 8});
        ++steps;
      }
    }
    int total = 0;
    for (const auto& [k, n] : p.counts) total += n;
    CHECK(total == steps);
  }

  SUBCASE("positions bin on the coarse grid") {
    NoveltyState g;
    g.cell_width = 0.5;
    CHECK(g.grid_cell({0.2, -0.2}) == CellCoord{0, 0});
    CHECK(g.grid_cell({0.6, 1.4}) == CellCoord{1, 3});
    novelty_update_and_reward(g, {0.2, 0.0});
    CHECK(g.count({-0.1, 0.1}) == 1);
    CHECK(g.count({0.6, 0.0}) == 0);
  }
}

TEST_CASE("area coverage: pays scale times newly seen area and telescopes") {
  CoverageState s;
  s.area_scale = 1.0;
  CHECK(area_coverage_reward(s, 0.0) == 0.0);
  CHECK(near(area_coverage_reward(s, 3 * 0.25 * 0.25), 0.1875, 1e-12));
  CHECK(near(s.area_m2, 0.1875, 1e-12));
  CHECK_THROWS_AS(area_coverage_reward(s, -0.1), std::invalid_argument);

  SUBCASE("sum of rewards telescopes to scale * (A_T - A_0), 100 runs") {
    Rng rng(77);
    for (int run = 0; run < 100; ++run) {
      CoverageState c;
      c.area_scale = 0.25 + rng.uniform();
      const double a0 = c.area_m2;
      double paid = 0.0;
      const int t_max = 5 + rng.uniform_int(0, 40);
      for (int t = 0; t < t_max; ++t) {
        const double gain = rng.uniform() < 0.3 ? 0.0 : rng.uniform() * 0.4;
        paid += area_coverage_reward(c, gain);
      }
      CHECK(near(paid, c.area_scale * (c.area_m2 - a0), 1e-9));
    }
  }
}

TEST_CASE("smooth coverage: mean inverse-sqrt region density") {
  CoverageState s;
  s.scale = 1.0;
  const CellCoord r0{0, 0}, r1{1, 0};

  const std::vector<CellCoord> first{r0};
  CHECK(near(smooth_coverage_reward(s, first), 1.0, 1e-12));

  // Bring r0 to four visits, then view {r0, r1}: counts become {4, 1}.
  smooth_coverage_reward(s, first);
  smooth_coverage_reward(s, first);
  const std::vector<CellCoord> pair{r0, r1};
  CHECK(near(smooth_coverage_reward(s, pair), 0.75, 1e-12));

  CHECK(smooth_coverage_reward(s, std::span<const CellCoord>{}) == 0.0);

  SUBCASE("stays positive whenever anything is in view") {
    CoverageState p;
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
      std::vector<CellCoord> view;
      const int n = 1 + rng.uniform_int(0, 5);
      for (int i = 0; i < n; ++i) view.push_back({rng.uniform_int(0, 3), rng.uniform_int(0, 3)});
      CHECK(smooth_coverage_reward(p, view) > 0.0);
    }
  }

  SUBCASE("keeps paying on revisits where area coverage goes silent") {
    CoverageState dense, area;
    dense.scale = 1.0;
    area.area_scale = 1.0;
    const std::vector<CellCoord> view{r0};
    smooth_coverage_reward(dense, view);
    area_coverage_reward(area, 0.0625);
    // Second pass over the same region: no new area.
    CHECK(smooth_coverage_reward(dense, view) > 0.0);
    CHECK(area_coverage_reward(area, 0.0) == 0.0);
  }
}

TEST_CASE("curiosity: squared prediction error with per-action updates") {
  SUBCASE("zero-initialized model pays the squared feature norm") {
    CuriosityModel m(4, 2, 0.1, 1.0);
    const std::vector<double> phi{1.0, 0.0, 1.0, 0.0};
    const std::vector<double> next{0.0, 1.0, 0.0, 1.0};
    CHECK(near(m.reward_and_update(phi, 0, next), 2.0, 1e-12));
  }

  SUBCASE("a perfectly predicted transition pays zero and is a no-op") {
    CuriosityModel m(3, 1, 0.5, 2.0);
    const std::vector<double> phi{1.0, 0.0, 0.0};
    const std::vector<double> zero{0.0, 0.0, 0.0};
    CHECK(m.reward_and_update(phi, 0, zero) == 0.0);  // prediction is 0 at init
    CHECK(m.reward_and_update(phi, 0, zero) == 0.0);  // gradient was zero
  }

  SUBCASE("repeating one transition drives the error down monotonically") {
    CuriosityModel m(5, 3, 0.05, 1.0);
    std::vector<double> phi{0.0, 1.0, 0.0, 0.0, 1.0};
    std::vector<double> next{1.0, 0.0, 0.0, 1.0, 0.0};
    double prev = m.reward_and_update(phi, 1, next);
    for (int i = 0; i < 60; ++i) {
      const double r = m.reward_and_update(phi, 1, next);
      CHECK(r <= prev + 1e-12);
      prev = r;
    }
    CHECK(prev < 0.05);
  }

  SUBCASE("actions learn independently") {
    CuriosityModel m(2, 2, 0.2, 1.0);
    const std::vector<double> phi{1.0, 0.0}, next{0.0, 1.0};
    for (int i = 0; i < 50; ++i) m.reward_and_update(phi, 0, next);
    const auto trained = m.predict(phi, 0);
    const auto fresh = m.predict(phi, 1);
    CHECK(near(trained[1], 1.0, 0.05));
    CHECK(fresh[0] == 0.0);
    CHECK(fresh[1] == 0.0);
  }

  SUBCASE("rejects bad dimensions") {
    CHECK_THROWS_AS(CuriosityModel(0, 2, 0.1, 1.0), std::invalid_argument);
    CuriosityModel m(3, 2, 0.1, 1.0);
    CHECK_THROWS_AS(m.predict(std::vector<double>{1.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(m.predict(std::vector<double>(3, 0.0), 5), std::invalid_argument);
  }
}

TEST_CASE("one_hot_patch_feature: layout and norm") {
  const std::vector<uint8_t> states{0, 1, 2, 1};
  const auto phi = one_hot_patch_feature(states, 3, 12);
  REQUIRE(phi.size() == 4 * 3 + 12);
  for (size_t c = 0; c < states.size(); ++c) {
    for (int s = 0; s < 3; ++s) {
      CHECK(phi[c * 3 + s] == (states[c] == s ? 1.0 : 0.0));
    }
  }
  CHECK(phi[12 + 3] == 1.0);
  const double norm2 = std::inner_product(phi.begin(), phi.end(), phi.begin(), 0.0);
  CHECK(near(norm2, 5.0, 1e-12));  // one per cell plus the heading bit
}

TEST_CASE("discover_concepts: recovers planted blobs") {
  // Oracle: the construction itself. Three separated centers with +-0.1
  // jitter; a correct clustering must place one centroid near each center.
  const std::vector<std::vector<double>> centers{
      {0.0, 0.0, 0.0}, {10.0, 0.0, 5.0}, {0.0, 10.0, -5.0}};
  Rng rng(31);
  std::vector<std::vector<double>> samples;
  for (int i = 0; i < 120; ++i) {
    const auto& c = centers[i % 3];
    samples.push_back({c[0] + (rng.uniform() - 0.5) * 0.2,
                       c[1] + (rng.uniform() - 0.5) * 0.2,
                       c[2] + (rng.uniform() - 0.5) * 0.2});
  }

  const auto space = discover_concepts(samples, 3, 50, 9001);
  REQUIRE(space.k == 3);
  REQUIRE(space.dim == 3);
  std::vector<bool> used(3, false);
  for (const auto& center : centers) {
    int match = -1;
    for (int c = 0; c < 3; ++c) {
      double d2 = 0.0;
      for (int j = 0; j < 3; ++j) {
        d2 += (space.centroids[c][j] - center[j]) * (space.centroids[c][j] - center[j]);
      }
      if (d2 < 0.25 * 0.25 && !used[c]) match = c;
    }
    REQUIRE(match >= 0);
    used[match] = true;
  }
  // Inertia is bounded by the jitter: every point sits within ~0.11 of its
  // blob mean per axis, nowhere near the >= 10 separation between blobs.
  CHECK(space.inertia <= 5.0);

  SUBCASE("deterministic per seed") {
    const auto again = discover_concepts(samples, 3, 50, 9001);
    CHECK(again.centroids == space.centroids);
    const auto other = discover_concepts(samples, 3, 50, 9002);
    CHECK(near(other.inertia, space.inertia, 0.5));  // same blobs either way
  }
}

TEST_CASE("discover_concepts: inertia trace is non-increasing across 50 runs") {
  Rng rng(404);
  for (int run = 0; run < 50; ++run) {
    const int n = 12 + rng.uniform_int(0, 30);
    const int dim = 2 + rng.uniform_int(0, 4);
    std::vector<std::vector<double>> samples(n, std::vector<double>(dim));
    for (auto& s : samples)
      for (auto& v : s) v = rng.uniform() * 10.0 - 5.0;
    const int k = 1 + rng.uniform_int(0, std::min(n - 1, 5));

    std::vector<double> trace;
    const auto space = discover_concepts(samples, k, 25, 1000 + run, &trace);
    REQUIRE(!trace.empty());
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-9);
    CHECK(near(space.inertia, trace.back(), 1e-9));
  }
}

TEST_CASE("discover_concepts: k = 1 yields the sample mean; errors rejected") {
  const std::vector<std::vector<double>> samples{{1.0, 3.0}, {2.0, 5.0}, {6.0, 1.0}};
  const auto space = discover_concepts(samples, 1, 10, 1);
  REQUIRE(space.k == 1);
  CHECK(near(space.centroids[0][0], 3.0, 1e-12));
  CHECK(near(space.centroids[0][1], 3.0, 1e-12));

  CHECK_THROWS_AS(discover_concepts({}, 2, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(discover_concepts(samples, 0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(discover_concepts(samples, 4, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(
      discover_concepts({{1.0, 2.0}, {1.0}}, 1, 10, 1), std::invalid_argument);
}

TEST_CASE("nearest_concept and true_concept_distribution") {
  ConceptSpace space;
  space.k = 4;
  space.dim = 2;
  space.centroids = {{0.0, 0.0}, {4.0, 0.0}, {0.0, 4.0}, {4.0, 4.0}};

  const std::vector<double> sig{3.4, 0.2};
  CHECK(nearest_concept(sig, space) == 1);

  auto d = true_concept_distribution(sig, space, 1);
  CHECK(d == std::vector<double>{0.0, 1.0, 0.0, 0.0});

  d = true_concept_distribution(sig, space, 3);
  CHECK(near(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12));
  CHECK(near(d[1], 1.0 / 3, 1e-12));
  CHECK(near(d[0], 1.0 / 3, 1e-12));
  CHECK(near(d[3], 1.0 / 3, 1e-12));
  CHECK(d[2] == 0.0);

  SUBCASE("ties break toward the lower index") {
    const std::vector<double> mid{2.0, 0.0};  // equidistant from 0 and 1
    const auto t = true_concept_distribution(mid, space, 1);
    CHECK(t[0] == 1.0);
    CHECK(t[1] == 0.0);
  }

  SUBCASE("j out of range rejected") {
    CHECK_THROWS_AS(true_concept_distribution(sig, space, 0), std::invalid_argument);
    CHECK_THROWS_AS(true_concept_distribution(sig, space, 5), std::invalid_argument);
  }
}

TEST_CASE("kl_divergence: fixtures and reference oracle") {
  const std::vector<double> u4(4, 0.25);
  CHECK(near(kl_divergence(u4, u4), 0.0, 1e-12));

  const std::vector<double> point{1.0, 0.0, 0.0, 0.0};
  CHECK(near(kl_divergence(point, u4), std::log(4.0), 1e-12));

  SUBCASE("matches a long-double reverse-order mirror on random inputs") {
    Rng rng(606);
    for (int i = 0; i < 100; ++i) {
      const size_t n = 2 + rng.uniform_int(0, 10);
      const auto p = random_dist(rng, n, true);
      const auto q = random_dist(rng, n, i % 2 == 0);
      CHECK(near(kl_divergence(p, q), kl_reference(p, q), 1e-12));
      CHECK(kl_divergence(p, q) >= -1e-12);
    }
  }

  SUBCASE("zero q entries are floored, not fatal") {
    const std::vector<double> q{1.0, 0.0};
    const std::vector<double> p{0.5, 0.5};
    const double kl = kl_divergence(p, q);
    CHECK(std::isfinite(kl));
    CHECK(near(kl, kl_reference(p, q), 1e-12));
  }

  SUBCASE("rejects unnormalized or mismatched inputs") {
    CHECK_THROWS_AS(kl_divergence(std::vector<double>{0.5, 0.4}, u4),
                    std::invalid_argument);
    const std::vector<double> bad{0.5, 0.4};
    const std::vector<double> ok{0.5, 0.5};
    CHECK_THROWS_AS(kl_divergence(bad, ok), std::invalid_argument);
    CHECK_THROWS_AS(kl_divergence(ok, bad), std::invalid_argument);
    CHECK_THROWS_AS(kl_divergence({}, {}), std::invalid_argument);
  }
}

TEST_CASE("reconstruction: rewards loss deltas on period boundaries") {
  ReconstructionTask task;
  task.query_cells = {{0, 0}};
  task.true_dists = {{1.0, 0.0}};
  task.period = 5;
  task.scale = 1.0;

  // KL({1,0} || {e^-0.4, 1-e^-0.4}) = 0.4 exactly.
  const std::vector<std::vector<double>> pred04{
      {std::exp(-0.4), 1.0 - std::exp(-0.4)}};
  CHECK(near(reconstruction_loss(task, pred04), 0.4, 1e-12));

  SUBCASE("improvement pays the drop") {
    task.has_last = true;
    task.last_loss = 0.9;
    CHECK(near(reconstruction_reward(task, pred04, 5), 0.5, 1e-12));
    CHECK(near(task.last_loss, 0.4, 1e-12));
    CHECK(task.query_losses.size() == 1);
    CHECK(near(task.query_losses[0], 0.4, 1e-12));
  }

  SUBCASE("no change pays zero; perfect prediction pays the full backlog") {
    task.has_last = true;
    task.last_loss = 0.4;
    CHECK(near(reconstruction_reward(task, pred04, 10), 0.0, 1e-12));

    const std::vector<std::vector<double>> perfect{{1.0, 0.0}};
    // q has a zero entry; the eps floor keeps the loss tiny but not exactly 0.
    const double r = reconstruction_reward(task, perfect, 15);
    CHECK(near(r, 0.4 - task.last_loss, 1e-9));
    CHECK(task.last_loss < 1e-5);
  }

  SUBCASE("off-boundary steps pay nothing and leave state alone") {
    task.has_last = true;
    task.last_loss = 0.9;
    for (int t : {1, 2, 3, 4, 6, 123}) {
      CHECK(reconstruction_reward(task, pred04, t) == 0.0);
      CHECK(task.last_loss == 0.9);
    }
  }

  SUBCASE("first evaluation arms the baseline without paying") {
    CHECK(reconstruction_reward(task, pred04, 0) == 0.0);
    CHECK(task.has_last);
    CHECK(near(task.last_loss, 0.4, 1e-12));
    // Scaled delta on the next boundary.
    task.scale = 2.0;
    const std::vector<std::vector<double>> pred01{
        {std::exp(-0.1), 1.0 - std::exp(-0.1)}};
    CHECK(near(reconstruction_reward(task, pred01, 5), 2.0 * 0.3, 1e-12));
  }

  SUBCASE("loss is the mean over queries; mismatch rejected") {
    ReconstructionTask two;
    two.true_dists = {{1.0, 0.0}, {0.0, 1.0}};
    const std::vector<std::vector<double>> preds{
        {std::exp(-0.4), 1.0 - std::exp(-0.4)},
        {1.0 - std::exp(-0.8), std::exp(-0.8)}};
    CHECK(near(reconstruction_loss(two, preds), 0.6, 1e-12));
    CHECK_THROWS_AS(reconstruction_loss(two, {preds[0]}), std::invalid_argument);
  }
}

TEST_CASE("concept space serialization round-trips") {
  const std::vector<std::vector<double>> samples{
      {0.125, -3.5}, {2.0, 0.3}, {4.75, 1.0}, {-1.5, 2.25}};
  const auto space = discover_concepts(samples, 2, 20, 42);
  const auto text = serialize_concepts(space);
  const auto back = deserialize_concepts(text);
  CHECK(back.k == space.k);
  CHECK(back.dim == space.dim);
  CHECK(back.centroids == space.centroids);
  CHECK(back.inertia == space.inertia);

  const std::string path = "concepts_roundtrip_test.json";
  save_concepts(space, path);
  const auto loaded = load_concepts(path);
  CHECK(loaded.centroids == space.centroids);
  std::remove(path.c_str());
}
