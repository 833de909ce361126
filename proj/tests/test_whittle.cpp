#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "bcor/rng.hpp"
#include "bcor/whittle.hpp"
#include "doctest.h"

using namespace bcor;

namespace {

ArmSnapshot make_arm(double p00, double p01, double p10, double p11) {
  ArmSnapshot a;
  a.p[0][0] = p00;
  a.p[0][1] = p01;
  a.p[1][0] = p10;
  a.p[1][1] = p11;
  return a;
}

ArmSnapshot random_arm(Rng& rng) {
  return make_arm(rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform());
}

}  // namespace

TEST_CASE("value iteration reduces to immediate rewards when gamma ~ 0") {
  WhittleConfig cfg(1e-12);
  ArmSnapshot arm = make_arm(0.3, 0.8, 0.4, 0.9);
  QValues q = value_iteration(arm, 0.25, cfg);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      CHECK(q.q[s][a] == doctest::Approx(s - 0.25 * a).epsilon(1e-12));
}

TEST_CASE("equal continuations make the q-gap exactly minus the penalty") {
  // When p[s][1] == p[s][0] the continuation terms cancel and
  // Q(s,1) - Q(s,0) = -m for every penalty m.
  WhittleConfig cfg;
  ArmSnapshot arm = make_arm(0.4, 0.4, 0.7, 0.7);
  for (double m : {-2.0, -0.3, 0.0, 0.3, 5.0}) {
    QValues q = value_iteration(arm, m, cfg);
    CHECK(q.q[0][1] - q.q[0][0] == doctest::Approx(-m).epsilon(1e-10));
    CHECK(q.q[1][1] - q.q[1][0] == doctest::Approx(-m).epsilon(1e-10));
  }
}

TEST_CASE("exact solver reproduces hand-derived fixed points") {
  // Deterministic arm (passive -> 0, active -> 1), gamma 0.9, penalty 0.5:
  // active is optimal everywhere, V(1) = 0.5/0.1 = 5, V(0) = -0.5 + 4.5 = 4.
  QValues q = solve_q_exact(make_arm(0.0, 1.0, 0.0, 1.0), 0.5, 0.9);
  CHECK(q.q[0][0] == doctest::Approx(3.6).epsilon(1e-12));
  CHECK(q.q[0][1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(q.q[1][0] == doctest::Approx(4.6).epsilon(1e-12));
  CHECK(q.q[1][1] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(q.v[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(q.v[1] == doctest::Approx(5.0).epsilon(1e-12));

  // State-independent transitions p = 0.5: passive optimal at m = 0.2,
  // V(s) = s + gamma * 0.5/(1 - gamma) = s + 4.5.
  QValues r = solve_q_exact(make_arm(0.5, 0.5, 0.5, 0.5), 0.2, 0.9);
  CHECK(r.q[0][0] == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(r.q[0][1] == doctest::Approx(4.3).epsilon(1e-12));
  CHECK(r.q[1][0] == doctest::Approx(5.5).epsilon(1e-12));
  CHECK(r.q[1][1] == doctest::Approx(5.3).epsilon(1e-12));
}

TEST_CASE("value iteration agrees with the exact solver within vi_tol") {
  WhittleConfig cfg;
  Rng rng(21);
  double worst = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    ArmSnapshot arm = random_arm(rng);
    double m = -11.0 + 22.0 * rng.uniform();
    QValues vi = value_iteration(arm, m, cfg);
    QValues ex = solve_q_exact(arm, m, cfg.gamma);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        worst = std::max(worst, std::abs(vi.q[s][a] - ex.q[s][a]));
  }
  CHECK(worst <= cfg.vi_tol);
}

TEST_CASE("deterministic restart arm has index gamma in both states") {
  // For p[s][0] = 0, p[s][1] = 1 the gap is gamma - m regardless of state,
  // so the index is exactly gamma.
  WhittleConfig cfg;
  ArmSnapshot arm = make_arm(0.0, 1.0, 0.0, 1.0);
  CHECK(std::abs(whittle_index(arm, 0, cfg) - 0.9) <= cfg.bs_tol);
  CHECK(std::abs(whittle_index(arm, 1, cfg) - 0.9) <= cfg.bs_tol);
  bool crossed = false;
  double g0 = whittle_index_grid_oracle(arm, 0, 0.9, 1e-4, &crossed);
  CHECK(crossed);
  CHECK(std::abs(g0 - 0.9) <= 1e-4);
}

TEST_CASE("action-independent arms have index zero") {
  WhittleConfig cfg;
  WhittleDiagnostics diag;
  Rng rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    double p0 = rng.uniform(), p1 = rng.uniform();
    ArmSnapshot arm = make_arm(p0, p0, p1, p1);
    CHECK(std::abs(whittle_index(arm, rep % 2, cfg, &diag)) <= cfg.bs_tol);
  }
  CHECK(diag.indexability_failures == 0);
}

TEST_CASE("bisection tracks the grid oracle on random arms") {
  WhittleConfig cfg;
  Rng rng(23);
  for (int rep = 0; rep < 40; ++rep) {
    ArmSnapshot arm = random_arm(rng);
    int s = rep % 2;
    double idx = whittle_index(arm, s, cfg);
    bool crossed = false;
    double ref = whittle_index_grid_oracle(arm, s, cfg.gamma, 1e-4, &crossed);
    CAPTURE(rep);
    CHECK(crossed);
    CHECK(std::abs(idx - ref) <= 3e-4);
  }
}

TEST_CASE("index grows with the active success probability") {
  WhittleConfig cfg;
  double prev = -100.0, first = 0.0, last = 0.0;
  for (int j = 0; j <= 10; ++j) {
    double q = 0.3 + 0.05 * j;
    double idx = whittle_index(make_arm(0.2, q, 0.3, 0.85), 0, cfg);
    CHECK(idx >= prev - 2.0 * cfg.bs_tol);
    if (j == 0) first = idx;
    if (j == 10) last = idx;
    prev = idx;
  }
  CHECK(last - first > 0.05);
}

TEST_CASE("non-crossing brackets fall back to the nearest endpoint") {
  // The restart arm's index is 0.9; brackets that exclude it have no sign
  // change, so the solver returns the endpoint and flags the failure.
  ArmSnapshot arm = make_arm(0.0, 1.0, 0.0, 1.0);
  WhittleConfig above;
  above.bracket_lo = 2.0;
  above.bracket_hi = 3.0;
  WhittleDiagnostics diag;
  CHECK(whittle_index(arm, 0, above, &diag) == 2.0);
  CHECK(diag.indexability_failures == 1);
  WhittleConfig below;
  below.bracket_lo = -0.5;
  below.bracket_hi = -0.1;
  CHECK(whittle_index(arm, 0, below, &diag) == -0.1);
  CHECK(diag.indexability_failures == 2);
}

TEST_CASE("config validation rejects bad parameters") {
  WhittleConfig cfg;
  cfg.gamma = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = WhittleConfig();
  cfg.vi_tol = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = WhittleConfig();
  cfg.bracket_lo = cfg.bracket_hi;
  CHECK_THROWS(cfg.validate());
  cfg = WhittleConfig();
  cfg.vi_max_iters = 0;
  CHECK_THROWS(cfg.validate());
  CHECK_NOTHROW(WhittleConfig().validate());
}

TEST_CASE("select_top_b breaks ties toward lower arm indices") {
  CHECK(select_top_b({0.5, 0.7, 0.5, 0.7, 0.2}, 3) ==
        ActionVector{1, 1, 0, 1, 0});
  CHECK(select_top_b({1.0, 1.0, 1.0}, 2) == ActionVector{1, 1, 0});
  CHECK(select_top_b({0.3, 0.1}, 2) == ActionVector{1, 1});
  CHECK(select_top_b({0.3, 0.1}, 0) == ActionVector{0, 0});
  CHECK_THROWS(select_top_b({0.3, 0.1}, 3));
}

TEST_CASE("policy equals per-arm index computation plus top-B selection") {
  WhittleConfig cfg;
  Rng rng(24);
  for (int rep = 0; rep < 25; ++rep) {
    int n = 8;
    std::vector<ArmSnapshot> arms;
    SystemState states;
    for (int i = 0; i < n; ++i) {
      arms.push_back(random_arm(rng));
      states.push_back(int(rng.bernoulli(0.5)));
    }
    std::vector<double> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = whittle_index(arms[i], states[i], cfg);
    ActionVector want = select_top_b(idx, 3);

    WhittleMemo memo;
    WhittleDiagnostics diag;
    ActionVector fast = whittle_policy(arms, states, 3, cfg, &memo, &diag);
    CHECK(fast == want);

    ActionVector plain = whittle_policy(arms, states, 3, cfg, nullptr, nullptr,
                                        {/*use_memo=*/false,
                                         /*early_termination=*/false});
    CHECK(plain == want);
  }
}

TEST_CASE("second policy call against a warm memo does no value iteration") {
  WhittleConfig cfg;
  Rng rng(25);
  std::vector<ArmSnapshot> arms;
  SystemState states;
  for (int i = 0; i < 60; ++i) {
    arms.push_back(random_arm(rng));
    states.push_back(int(rng.bernoulli(0.5)));
  }
  WhittleMemo memo;
  WhittleDiagnostics diag;
  ActionVector first = whittle_policy(arms, states, 4, cfg, &memo, &diag);
  CHECK(diag.early_skips > 0);  // early termination engages at this size
  long long sweeps_after_first = diag.vi_sweeps;
  ActionVector second = whittle_policy(arms, states, 4, cfg, &memo, &diag);
  CHECK(second == first);
  CHECK(diag.vi_sweeps == sweeps_after_first);
  CHECK(diag.memo_hits >= 60);
}

TEST_CASE("memo quantization ignores sub-picoscale noise only") {
  WhittleMemo memo;
  memo.store(make_arm(0.5, 0.25, 0.125, 0.75), 1, 0.42, true);
  CHECK(memo.find(make_arm(0.5 + 1e-13, 0.25, 0.125, 0.75), 1) != nullptr);
  CHECK(memo.find(make_arm(0.5 + 1e-11, 0.25, 0.125, 0.75), 1) == nullptr);
  CHECK(memo.find(make_arm(0.5, 0.25, 0.125, 0.75), 0) == nullptr);
  CHECK(memo.size() == 1);
}

TEST_CASE("policy validates its arguments") {
  WhittleConfig cfg;
  std::vector<ArmSnapshot> arms{make_arm(0.1, 0.9, 0.1, 0.9)};
  CHECK_THROWS(whittle_policy(arms, {0, 1}, 1, cfg));
  CHECK_THROWS(whittle_policy(arms, {0}, 0, cfg));
  CHECK_THROWS(whittle_policy(arms, {0}, 2, cfg));
}
