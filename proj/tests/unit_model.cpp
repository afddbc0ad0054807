#include <doctest.h>

#include "behc/model.hpp"

#include <cmath>
#include <stdexcept>

using namespace behc;

TEST_SUITE("model") {

TEST_CASE("state evolution covers the unit-battery rule") {
  // s' = min(s - x + e, 1)
  CHECK(state_evolution(0, 0, 0) == 0);
  CHECK(state_evolution(0, 0, 1) == 1);
  CHECK(state_evolution(1, 0, 0) == 1);
  CHECK(state_evolution(1, 0, 1) == 1);  // energy into a full battery is lost
  CHECK(state_evolution(1, 1, 0) == 0);
  CHECK(state_evolution(1, 1, 1) == 1);
  CHECK_THROWS_AS(state_evolution(0, 1, 0), std::invalid_argument);  // x requires charge
  CHECK_THROWS_AS(state_evolution(2, 0, 0), std::invalid_argument);
}

TEST_CASE("strategy maps attempts through the battery") {
  CHECK(strategy_f(0, 0) == 0);
  CHECK(strategy_f(0, 1) == 1);  // attempt succeeds only when charged
  CHECK(strategy_f(1, 0) == 0);
  CHECK(strategy_f(3, 1) == 0);  // any deferral sends zero
  CHECK_THROWS_AS(strategy_f(-1, 0), std::invalid_argument);
}

TEST_CASE("noiseless law values and normalization") {
  for (double eta : {0.15, 0.5, 0.85}) {
    const HarvestParam h = make_harvest(eta);
    // recharge happens with probability eta exactly when x == s
    CHECK(noiseless_law(h, 0, 0, 0) == doctest::Approx(1.0 - eta).epsilon(1e-15));
    CHECK(noiseless_law(h, 1, 0, 0) == doctest::Approx(eta).epsilon(1e-15));
    CHECK(noiseless_law(h, 0, 1, 1) == doctest::Approx(1.0 - eta).epsilon(1e-15));
    CHECK(noiseless_law(h, 1, 1, 1) == doctest::Approx(eta).epsilon(1e-15));
    // a zero sent from a full battery keeps it full surely
    CHECK(noiseless_law(h, 0, 0, 1) == 0.0);
    CHECK(noiseless_law(h, 1, 0, 1) == 1.0);
    for (int s = 0; s <= 1; ++s)
      for (int x = 0; x <= s; ++x)
        CHECK(noiseless_law(h, 0, x, s) + noiseless_law(h, 1, x, s) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(noiseless_law(make_harvest(0.5), 0, 1, 0), std::invalid_argument);
}

TEST_CASE("modified law boosts only zero inputs entering the last node") {
  const HarvestParam h = make_harvest(0.3);
  const int n = 4;
  for (int q = 0; q <= n; ++q)
    for (int s = 0; s <= 1; ++s)
      for (int x = 0; x <= s; ++x) {
        const bool boosted = (x == 0) && (q == n - 1 || q == n);
        for (int sp = 0; sp <= 1; ++sp) {
          const double got = modified_law(h, n, sp, x, s, q);
          const double want = boosted ? (sp == 1 ? 1.0 : 0.0) : noiseless_law(h, sp, x, s);
          CHECK(got == doctest::Approx(want).epsilon(1e-15));
        }
      }
}

TEST_CASE("battery marginal follows the geometric decay") {
  const double eta = 0.4;
  const HarvestParam h = make_harvest(eta);
  const int n = 6;
  for (int q = 0; q <= n; ++q) {
    const int umax = q < n ? q : n;
    for (int u = 0; u <= umax; ++u) {
      CHECK(marginal_pi(GraphKind::LowerBound, h, n, u, q) ==
            doctest::Approx(std::pow(1.0 - eta, u + 1)).epsilon(1e-14));
      const double want_ub = q == n ? 0.0 : std::pow(1.0 - eta, u + 1);
      CHECK(marginal_pi(GraphKind::UpperBound, h, n, u, q) == doctest::Approx(want_ub).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(marginal_pi(GraphKind::LowerBound, h, 3, 3, 1), std::out_of_range);
}

TEST_CASE("aux index sets have the ladder shape") {
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
    const int n = 3;
    const AuxSets aux = make_aux_sets(kind, n);
    for (int q = 0; q <= n; ++q) {
      CHECK(aux.u_max(q) == (q < n ? q : n));
      CHECK(aux.u_set(q).size() == static_cast<size_t>(aux.u_max(q)) + 1);
      for (int u = 0; u <= aux.u_max(q); ++u) {
        const auto up = aux.uplus_set(u, q);
        if (q < n) {
          REQUIRE(up.size() == 2);
          CHECK(up[0] == 0);
          CHECK(up[1] == u + 1);
        } else if (kind == GraphKind::LowerBound) {
          REQUIRE(up.size() == 1);  // forced attempt at the last node
          CHECK(up[0] == 0);
        } else {
          REQUIRE(up.size() == 2);  // the boosted construction may keep deferring
          CHECK(up[0] == 0);
          CHECK(up[1] == 1);
        }
        CHECK(aux.contains_u(u, q));
        CHECK(aux.contains_uplus(up[0], u, q));
      }
      CHECK_FALSE(aux.contains_u(aux.u_max(q) + 1, q));
    }
  }
}

TEST_CASE("pow_int matches std::pow on the used range") {
  for (double b : {0.1, 0.5, 0.93})
    for (int e : {0, 1, 2, 17, 60})
      CHECK(pow_int(b, e) == doctest::Approx(std::pow(b, e)).epsilon(1e-13));
  CHECK(pow_int(0.7, 0) == 1.0);
  CHECK_THROWS_AS(pow_int(0.5, -1), std::invalid_argument);
}

TEST_CASE("binary entropy endpoints, symmetry, and spot values") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.11) == doctest::Approx(binary_entropy(0.89)).epsilon(1e-15));
  CHECK(binary_entropy(0.11) == doctest::Approx(0.499915958164528).epsilon(1e-12));
  CHECK(binary_entropy(0.25) == doctest::Approx(0.811278124459133).epsilon(1e-12));
  CHECK_THROWS_AS(binary_entropy(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(binary_entropy(1.01), std::invalid_argument);
}

TEST_CASE("parameter constructors validate their ranges") {
  CHECK_THROWS_AS(make_harvest(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_harvest(1.1), std::invalid_argument);
  CHECK(make_harvest(0.25).eta_bar() == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(make_bsc(-0.2), std::invalid_argument);
  const DMC bsc = make_bsc(0.1);
  CHECK(bsc(0, 0) == doctest::Approx(0.9));
  CHECK(bsc(1, 0) == doctest::Approx(0.1));
  CHECK(bsc(0, 1) == doctest::Approx(0.1));
  CHECK(bsc(1, 1) == doctest::Approx(0.9));
  CHECK_THROWS_AS(make_dmc(1.2, 0.5), std::invalid_argument);
}

}  // TEST_SUITE
