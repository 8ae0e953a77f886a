#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "efhc/linalg.hpp"
#include "efhc/mixing.hpp"
#include "support/generators.hpp"

using namespace efhc;

TEST_CASE("metropolis weight values") {
  CHECK(metropolis_weight(1, 1) == doctest::Approx(0.5));
  CHECK(metropolis_weight(3, 4) == doctest::Approx(0.2));
  CHECK(metropolis_weight(4, 3) == metropolis_weight(3, 4));
  for (int d = 1; d <= 10; ++d)
    CHECK(metropolis_weight(d, d) == doctest::Approx(1.0 / (1.0 + d)));
  CHECK_THROWS_AS(metropolis_weight(0, 1), std::invalid_argument);
}

TEST_CASE("single broadcast on a pair activates the edge") {
  const auto snap = testsup::snapshot_from_edges(2, {{0, 1}});
  BroadcastFlags flags;
  flags.v = {1, 0};
  const MixingMatrix p = build_transition_matrix(snap, flags);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(0, 1) == doctest::Approx(0.5));
  CHECK(p(1, 0) == doctest::Approx(0.5));
  CHECK(p(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("no events yields the identity matrix") {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    const GraphSnapshot snap = testsup::random_snapshot(rng, 6);
    BroadcastFlags flags;
    flags.v.assign(6, 0);
    const MixingMatrix p = build_transition_matrix(snap, flags);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) CHECK(p(i, j) == (i == j ? 1.0 : 0.0));
    CHECK(p.info_edges.empty());
  }
}

TEST_CASE("middle broadcast on a 3-path") {
  // Degrees (1, 2, 1); both edges carry since the middle device broadcast.
  // beta_01 = beta_12 = min(1/2, 1/3) = 1/3.
  const auto snap = testsup::snapshot_from_edges(3, {{0, 1}, {1, 2}});
  BroadcastFlags flags;
  flags.v = {0, 1, 0};
  const MixingMatrix p = build_transition_matrix(snap, flags);

  const double third = 1.0 / 3.0;
  CHECK(p(0, 0) == doctest::Approx(2.0 * third));
  CHECK(p(0, 1) == doctest::Approx(third));
  CHECK(p(0, 2) == 0.0);
  CHECK(p(1, 0) == doctest::Approx(third));
  CHECK(p(1, 1) == doctest::Approx(third));
  CHECK(p(1, 2) == doctest::Approx(third));
  CHECK(p(2, 0) == 0.0);
  CHECK(p(2, 1) == doctest::Approx(third));
  CHECK(p(2, 2) == doctest::Approx(2.0 * third));

  const TransitionReport rep = verify_transition(p, third);
  CHECK(rep.pass());
}

TEST_CASE("forced edges activate only that link") {
  const auto snap = testsup::snapshot_from_edges(3, {{0, 1}, {1, 2}});
  BroadcastFlags flags;
  flags.v = {0, 0, 0};
  flags.forced_edges = {Edge(0, 1)};
  const MixingMatrix p = build_transition_matrix(snap, flags);
  CHECK(p(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(p(1, 2) == 0.0);  // device 1's other neighbor is not contacted
  CHECK(p(2, 2) == 1.0);
  CHECK(p.info_edges.size() == 1);
}

TEST_CASE("forced edge outside the snapshot is rejected") {
  const auto snap = testsup::snapshot_from_edges(3, {{0, 1}});
  BroadcastFlags flags;
  flags.v = {0, 0, 0};
  flags.forced_edges = {Edge(1, 2)};
  CHECK_THROWS_AS(build_transition_matrix(snap, flags), std::invalid_argument);
}

TEST_CASE("verifier pass/fail behavior") {
  SUBCASE("identity passes") {
    const MixingMatrix p = MixingMatrix::identity(4);
    CHECK(verify_transition(p, 0.1).pass());
  }
  SUBCASE("bad row sum fails double stochasticity") {
    MixingMatrix p = MixingMatrix::identity(2);
    p.w = {0.6, 0.5, 0.5, 0.5};  // row 0 sums to 1.1
    const TransitionReport rep = verify_transition(p, 0.1);
    CHECK_FALSE(rep.row_stochastic);
    CHECK_FALSE(rep.pass());
    CHECK(rep.summary().find("FAIL") != std::string::npos);
  }
  SUBCASE("asymmetry is caught") {
    MixingMatrix p = MixingMatrix::identity(2);
    p.w = {0.5, 0.5, 0.4, 0.6};
    p.info_edges = {Edge(0, 1)};
    CHECK_FALSE(verify_transition(p, 0.1).symmetric);
  }
  SUBCASE("support mismatch is caught") {
    MixingMatrix p = MixingMatrix::identity(2);
    p.info_edges = {Edge(0, 1)};  // claims an exchange the matrix lacks
    CHECK_FALSE(verify_transition(p, 0.1).support_ok);
  }
}

TEST_CASE("random matrices satisfy all transition-weight properties") {
  Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const int m = 2 + static_cast<int>(bounded_int(rng, 19));
    const GraphSnapshot snap = testsup::random_snapshot(rng, m);
    const BroadcastFlags flags = testsup::random_flags(rng, snap);
    const MixingMatrix p = build_transition_matrix(snap, flags);
    const TransitionReport rep = verify_transition(p, 1.0 / m);
    REQUIRE_MESSAGE(rep.pass(), rep.summary());
  }
}

TEST_CASE("mixing preserves the column mean") {
  Rng rng(99);
  for (int t = 0; t < 50; ++t) {
    const int m = 2 + static_cast<int>(bounded_int(rng, 15));
    const GraphSnapshot snap = testsup::random_snapshot(rng, m);
    const BroadcastFlags flags = testsup::random_flags(rng, snap);
    const MixingMatrix p = build_transition_matrix(snap, flags);

    const int n = 5;
    std::vector<Vec> w(static_cast<std::size_t>(m), Vec(n));
    for (auto& row : w)
      for (double& v : row) v = 2.0 * uniform_double(rng) - 1.0;

    Vec mean_before(n, 0.0), mean_after(n, 0.0);
    for (const auto& row : w) axpy(1.0 / m, row, mean_before);
    for (int i = 0; i < m; ++i) {
      Vec out(n, 0.0);
      for (int j = 0; j < m; ++j) axpy(p(i, j), w[static_cast<std::size_t>(j)], out);
      axpy(1.0 / m, out, mean_after);
    }
    for (int d = 0; d < n; ++d)
      CHECK(std::fabs(mean_after[static_cast<std::size_t>(d)] -
                      mean_before[static_cast<std::size_t>(d)]) <= 1e-12);
  }
}

TEST_CASE("products of 1000 transition matrices stay doubly stochastic") {
  const int m = 12;
  Rng rng(7);
  std::vector<double> prod(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) prod[static_cast<std::size_t>(i) * m + i] = 1.0;

  for (int t = 0; t < 1000; ++t) {
    const GraphSnapshot snap = testsup::random_snapshot(rng, m);
    const BroadcastFlags flags = testsup::random_flags(rng, snap);
    const MixingMatrix p = build_transition_matrix(snap, flags);
    std::vector<double> next(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < m; ++l) {
        const double pil = p(i, l);
        if (pil == 0.0) continue;
        for (int j = 0; j < m; ++j)
          next[static_cast<std::size_t>(i) * m + j] += pil * prod[static_cast<std::size_t>(l) * m + j];
      }
    prod = std::move(next);
  }

  for (int i = 0; i < m; ++i) {
    double row = 0.0, col = 0.0;
    for (int j = 0; j < m; ++j) {
      row += prod[static_cast<std::size_t>(i) * m + j];
      col += prod[static_cast<std::size_t>(j) * m + i];
    }
    CHECK(std::fabs(row - 1.0) <= 1e-10);
    CHECK(std::fabs(col - 1.0) <= 1e-10);
  }
}

TEST_CASE("csv dump emits m rows of m comma-separated entries") {
  const MixingMatrix p = MixingMatrix::identity(2);
  std::ostringstream os;
  write_matrix_csv(os, p);
  CHECK(os.str() == "1,0\n0,1\n");
}
