#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "midc/game.hpp"
#include "midc/model.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace midc;

namespace {
const SystemModel& model() {
  static const SystemModel m = fixtures::study_system();
  return m;
}
}  // namespace

TEST_CASE("curvatures match frozen values and the sampled-cost fit") {
  const auto frozen = fixtures::study_curvatures();
  for (std::size_t i = 0; i < model().adjacents.size(); ++i) {
    const auto& ad = model().adjacents[i];
    const AdCurvature c = ad_curvature(ad, -0.2);
    CAPTURE(ad.id);
    REQUIRE_FALSE(c.degenerate);
    REQUIRE(c.u == Catch::Approx(frozen[i]).epsilon(1e-12));

    // Independent route: sample the physical regulation cost at three droop
    // values and read the curvature off the interpolating quadratic.
    auto cost = [&](double k) {
      return oracles::ad_regulation_cost(ad, -0.2, k);
    };
    const auto q = oracles::fit_quadratic(100.0, cost(100.0), 200.0,
                                          cost(200.0), 300.0, cost(300.0));
    REQUIRE(q.c2 == Catch::Approx(c.u).epsilon(1e-9));
    REQUIRE(std::abs(q.c0) < 1e-8);
    REQUIRE(std::abs(q.c1) < 1e-10);
  }
}

TEST_CASE("zero deviation gives a degenerate curvature") {
  const AdCurvature c = ad_curvature(model().adjacents[0], 0.0);
  REQUIRE(c.degenerate);
  REQUIRE(c.u == 0.0);
}

TEST_CASE("required total droop per fault") {
  const auto f1 = apply_fault(model(), model().fault_by_id("F1"));
  const auto f8 = apply_fault(model(), model().fault_by_id("F8"));
  REQUIRE(required_total_droop(f1, -0.2).value == Catch::Approx(705.0));
  REQUIRE(required_total_droop(f1, -0.2).support_needed);
  REQUIRE(required_total_droop(f8, -0.2).value == Catch::Approx(1505.0));

  FaultScenario idle{"idle", 0.0, std::nullopt, 1.0};
  const auto r = required_total_droop(apply_fault(model(), idle), -0.2);
  REQUIRE(r.value == Catch::Approx(-995.0));
  REQUIRE_FALSE(r.support_needed);

  REQUIRE_THROWS_AS(required_total_droop(f1, 0.0), DomainError);
}

TEST_CASE("best response is the projected price-over-curvature point") {
  const auto& ad1 = model().adjacents[0];
  const AdCurvature c = ad_curvature(ad1, -0.2);
  const Interval b = derive_droop_bounds(ad1, -0.2);

  REQUIRE(best_response_droop(2.2541783350999243, c, b) ==
          Catch::Approx(162.88).margin(5e-3));
  REQUIRE(best_response_droop(0.0, c, b) == 0.0);
  REQUIRE(best_response_droop(7.0, c, b) == 380.0);  // 505.8 unprojected

  AdCurvature degenerate{"x", 0.0, true};
  REQUIRE_THROWS_AS(best_response_droop(1.0, degenerate, b), DomainError);
}

TEST_CASE("best response minimizes the modified disutility over the grid") {
  for (const auto& ad : model().adjacents) {
    const AdCurvature c = ad_curvature(ad, -0.2);
    const Interval b = derive_droop_bounds(ad, -0.2);
    for (const double gamma : {0.3, 1.7, 2.75, 4.4, 6.0, 9.5}) {
      const double k_opt = best_response_droop(gamma, c, b);
      const double f_opt = eval_modified_ad_disutility(gamma, k_opt, c.u);
      auto f = [&](double k) {
        return eval_modified_ad_disutility(gamma, k, c.u);
      };
      CAPTURE(ad.id, gamma);
      REQUIRE(oracles::grid_confirms_minimum(f, b.lo, b.hi, f_opt, 1000,
                                             1e-12));
    }
  }
}

TEST_CASE("best response is monotone in the price") {
  for (const auto& ad : model().adjacents) {
    const AdCurvature c = ad_curvature(ad, -0.2);
    const Interval b = derive_droop_bounds(ad, -0.2);
    double prev = -1.0;
    bool was_interior = false;
    for (int j = 0; j <= 100; ++j) {
      const double gamma = 0.08 * j;
      const double k = best_response_droop(gamma, c, b);
      REQUIRE(k >= prev);
      if (was_interior && k > b.lo && k < b.hi) REQUIRE(k > prev);
      was_interior = k > b.lo && k < b.hi;
      prev = k;
    }
  }
}

TEST_CASE("steady frequency") {
  const auto f1 = apply_fault(model(), model().fault_by_id("F1"));
  const auto row = fixtures::exact_equilibria()[0];
  const std::vector<double> k(row.k, row.k + 4);
  REQUIRE(steady_frequency(f1, k) == Catch::Approx(-0.2).margin(1e-4));

  FaultScenario idle{"idle", 0.0, std::nullopt, 1.0};
  REQUIRE(steady_frequency(apply_fault(model(), idle), {0, 0, 0, 0}) == 0.0);

  REQUIRE(steady_frequency(f1, {0, 0, 0, 0}) ==
          Catch::Approx(-0.3575418994413408).epsilon(1e-12));

  SystemModel gutted = model();
  for (auto& g : gutted.main.generators) g.k_g = 0.0;
  FaultScenario f{"f", 100.0, std::nullopt, 1.0};
  REQUIRE_THROWS_AS(steady_frequency(apply_fault(gutted, f), {0, 0, 0, 0}),
                    DomainError);
}

TEST_CASE("price update picks the reward-minimizing response coefficient") {
  const MainSystem& main = model().main;
  const PriceState prev{3.0, 7};

  SECTION("deviation above target uses the small coefficient") {
    // omega_hat below the target (too little droop): raise the price slowly.
    const PriceState next = price_update(prev, -0.2, -0.35, main, 900.0);
    REQUIRE(next.gamma == Catch::Approx(3.0 + 10.0 * 0.15).epsilon(1e-12));
    REQUIRE(next.round == 8);
  }
  SECTION("deviation below target uses the large coefficient") {
    const PriceState next = price_update(prev, -0.2, -0.1, main, 900.0);
    REQUIRE(next.gamma == Catch::Approx(3.0 - 20.0 * 0.1).epsilon(1e-12));
  }
  SECTION("fixed point at the target") {
    REQUIRE(price_update(prev, -0.2, -0.2, main, 900.0).gamma == 3.0);
  }
  SECTION("clamped to the admissible price set") {
    REQUIRE(price_update({0.5, 0}, -0.2, -0.1, main, 900.0).gamma == 0.0);
    REQUIRE(price_update({9.9, 0}, -0.2, -0.9, main, 900.0).gamma == 10.0);
  }
  SECTION("negative droop sum is rejected") {
    REQUIRE_THROWS_AS(price_update(prev, -0.2, -0.3, main, -1.0),
                      DomainError);
  }
  SECTION("over-frequency target mirrors the axis") {
    // Redundancy event: frequency rides high, support is still short when
    // the deviation overshoots the (positive) target.
    REQUIRE(price_update(prev, 0.2, 0.35, main, 900.0).gamma ==
            Catch::Approx(3.0 + 10.0 * 0.15).epsilon(1e-12));
    REQUIRE(price_update(prev, 0.2, 0.1, main, 900.0).gamma ==
            Catch::Approx(3.0 - 20.0 * 0.1).epsilon(1e-12));
    REQUIRE(price_update(prev, 0.2, 0.2, main, 900.0).gamma == 3.0);
  }
  SECTION("brute force over the coefficient range agrees") {
    for (const double omega_hat : {-0.35, -0.1}) {
      const double chosen =
          price_update(prev, -0.2, omega_hat, main, 900.0).gamma;
      double best_cost = 1e300, best_gamma = 0.0;
      for (int j = 0; j <= 1000; ++j) {
        const double a = main.a_min + (main.a_max - main.a_min) * j / 1000.0;
        const double g =
            main.gamma_set.clamp(prev.gamma + a * (-0.2 - omega_hat));
        if (900.0 * g < best_cost) {
          best_cost = 900.0 * g;
          best_gamma = g;
        }
      }
      REQUIRE(chosen == Catch::Approx(best_gamma).epsilon(1e-12));
    }
  }
}

TEST_CASE("modified disutility values") {
  const auto ex = fixtures::exact_equilibria()[0];
  const double u1 = fixtures::study_curvatures()[0];

  REQUIRE(eval_modified_ad_disutility(ex.gamma, ex.k[0], u1) ==
          Catch::Approx(-183.58251680170395).margin(1e-9));
  // Interior optimum value is -gamma^2/(4u).
  const double k_opt = ex.gamma / (2.0 * u1);
  REQUIRE(eval_modified_ad_disutility(ex.gamma, k_opt, u1) ==
          Catch::Approx(-ex.gamma * ex.gamma / (4.0 * u1)).epsilon(1e-12));
  REQUIRE(eval_modified_ad_disutility(ex.gamma, 0.0, u1) == 0.0);
}

TEST_CASE("original disutility term arithmetic") {
  const auto& ads = model().adjacents;
  SECTION("equal droop splits the reward evenly") {
    const std::vector<double> k(4, 250.0);
    for (std::size_t i = 0; i < 4; ++i) {
      const double v = eval_original_ad_disutility(1000.0, k, i, ads[i], -0.2);
      const double cost = oracles::ad_regulation_cost(ads[i], -0.2, 250.0);
      REQUIRE(v == Catch::Approx(-250.0 + cost).epsilon(1e-12));
    }
  }
  SECTION("zero droop contributes and costs nothing") {
    const std::vector<double> k{0.0, 100.0, 100.0, 100.0};
    REQUIRE(eval_original_ad_disutility(1000.0, k, 0, ads[0], -0.2) == 0.0);
  }
  SECTION("equilibrium share matches the published row arithmetic") {
    const auto ex = fixtures::exact_equilibria()[0];
    const std::vector<double> k(ex.k, ex.k + 4);
    const double v = eval_original_ad_disutility(ex.reward, k, 0, ads[0], -0.2);
    const double share = -ex.reward * ex.k[0] / ex.required;
    const double cost = oracles::ad_regulation_cost(ads[0], -0.2, ex.k[0]);
    REQUIRE(v == Catch::Approx(share + cost).epsilon(1e-10));
  }
  SECTION("with reward priced at gamma the original equals the modified") {
    const std::vector<double> k{150.0, 260.0, 410.0, 90.0};
    const double gamma = 3.3;
    double k_sum = 0.0;
    for (double x : k) k_sum += x;
    for (std::size_t i = 0; i < 4; ++i) {
      const double u = ad_curvature(ads[i], -0.2).u;
      REQUIRE(eval_original_ad_disutility(gamma * k_sum, k, i, ads[i], -0.2) ==
              Catch::Approx(eval_modified_ad_disutility(gamma, k[i], u))
                  .epsilon(1e-10));
    }
  }
  SECTION("zero total droop is rejected") {
    REQUIRE_THROWS_AS(
        eval_original_ad_disutility(10.0, {0, 0, 0, 0}, 0, ads[0], -0.2),
        DomainError);
  }
}

TEST_CASE("am disutility") {
  const auto f1 = apply_fault(model(), model().fault_by_id("F1"));
  REQUIRE(eval_am_disutility(0.0, f1, 0.0) == 0.0);
  const double base = eval_am_disutility(0.0, f1, -0.2);
  REQUIRE(base == Catch::Approx(2039.8).epsilon(1e-12));
  REQUIRE(eval_am_disutility(500.0, f1, -0.2) ==
          Catch::Approx(base + 500.0).epsilon(1e-12));

  // The tripped unit regulates nothing: the no-trip cost is higher.
  FaultScenario idle{"idle", 320.0, std::nullopt, 1.0};
  REQUIRE(eval_am_disutility(0.0, apply_fault(model(), idle), -0.2) >
          base + 100.0 * 0.04 - 1e-9);
}

TEST_CASE("lcc power order follows the droop law") {
  const LccParams& lcc1 = model().adjacents[0].lcc;
  const LccParams& lcc4 = model().adjacents[3].lcc;

  REQUIRE(lcc_power_order(lcc1, 162.88, -0.2) ==
          Catch::Approx(677.576).epsilon(1e-12));
  REQUIRE(lcc_power_order(lcc1, 0.0, -0.2) == 645.0);
  const double at_cap = lcc_power_order(lcc1, 380.0, -0.2);
  REQUIRE(at_cap == Catch::Approx(721.0).epsilon(1e-12));
  REQUIRE(at_cap <= lcc1.signed_bounds().hi);

  // Receiving end: supporting a shortage shrinks the import magnitude.
  const double re_order = lcc_power_order(lcc4, 395.0, -0.2);
  REQUIRE(re_order == Catch::Approx(-421.0).epsilon(1e-12));
  REQUIRE(lcc4.signed_bounds().contains(re_order, 1e-9));
}

TEST_CASE("individual rationality of the best response") {
  for (const auto& ad : model().adjacents) {
    const AdCurvature c = ad_curvature(ad, -0.2);
    const Interval b = derive_droop_bounds(ad, -0.2);
    for (int j = 1; j <= 60; ++j) {
      const double gamma = 0.15 * j;
      const double k = best_response_droop(gamma, c, b);
      CAPTURE(ad.id, gamma);
      REQUIRE(eval_modified_ad_disutility(gamma, k, c.u) < 0.0);
    }
  }
}

TEST_CASE("original-game gradient at the equilibrium is the price share") {
  const auto ex = fixtures::exact_equilibria()[0];
  const std::vector<double> k(ex.k, ex.k + 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const double g = original_droop_gradient(ex.reward, k, i,
                                             model().adjacents[i], -0.2);
    REQUIRE(g == Catch::Approx(ex.gamma * ex.k[i] / ex.required)
                     .epsilon(1e-9));
    REQUIRE(g > 0.0);
  }
}
