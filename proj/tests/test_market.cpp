#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dvpp/market.hpp"

using namespace dvpp::market;

namespace {

// Two periods, price anywhere in [10, 30], 5 MW firm capability, no
// renewables, no storage: offer 5 MW in both periods. With a budget of two
// both prices can drop to 10, with one only one can, with zero none can.
UncertainProfile flat_profile(double gamma) {
  UncertainProfile u;
  u.periods = {{10.0, 30.0, 0.0, 0.0}, {10.0, 30.0, 0.0, 0.0}};
  u.gamma = gamma;
  return u;
}

PortfolioSummary firm5() {
  PortfolioSummary s;
  s.firm_mw = 5.0;
  s.penalty_eur_mwh = 100.0;
  return s;
}

}  // namespace

TEST_CASE("worked two-period offer under each uncertainty budget") {
  OfferSchedule g2 = solve_robust_offer(flat_profile(2.0), firm5());
  REQUIRE(g2.offer_mw.size() == 2);
  CHECK(g2.offer_mw[0] == doctest::Approx(5.0));
  CHECK(g2.offer_mw[1] == doctest::Approx(5.0));
  CHECK(g2.worst_case_revenue_eur == doctest::Approx(100.0).epsilon(1e-9));

  OfferSchedule g1 = solve_robust_offer(flat_profile(1.0), firm5());
  CHECK(g1.worst_case_revenue_eur == doctest::Approx(150.0).epsilon(1e-9));

  OfferSchedule g0 = solve_robust_offer(flat_profile(0.0), firm5());
  CHECK(g0.worst_case_revenue_eur == doctest::Approx(200.0).epsilon(1e-9));
}

TEST_CASE("worst-case revenue never improves as the budget grows") {
  double prev = 1e300;
  for (double gamma : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    OfferSchedule s = solve_robust_offer(flat_profile(gamma), firm5());
    CHECK(s.worst_case_revenue_eur <= prev + 1e-9);
    prev = s.worst_case_revenue_eur;
  }
}

TEST_CASE("offers stay within guaranteed deliverability") {
  // Renewable interval [2, 8]: only the guaranteed 2 MW may be committed on
  // top of the firm 1 MW.
  UncertainProfile u;
  u.periods = {{20.0, 40.0, 2.0, 8.0}};
  u.gamma = 1.0;
  PortfolioSummary s;
  s.firm_mw = 1.0;
  s.penalty_eur_mwh = 500.0;
  OfferSchedule o = solve_robust_offer(u, s);
  REQUIRE(o.offer_mw.size() == 1);
  CHECK(o.offer_mw[0] == doctest::Approx(3.0));
  CHECK(o.worst_case_revenue_eur == doctest::Approx(60.0));
}

TEST_CASE("storage shifts committed energy into the valuable period") {
  // First period is certainly worth 40, second 10. A 5 MWh / 5 MW store
  // with nothing else backs a 5 MW offer in period one only.
  UncertainProfile u;
  u.periods = {{40.0, 40.0, 0.0, 0.0}, {10.0, 10.0, 0.0, 0.0}};
  u.gamma = 0.0;
  PortfolioSummary s;
  s.storage_power_mw = 5.0;
  s.storage_energy_mwh = 5.0;
  s.storage_initial_mwh = 5.0;
  s.penalty_eur_mwh = 1000.0;
  OfferSchedule o = solve_robust_offer(u, s);
  REQUIRE(o.offer_mw.size() == 2);
  CHECK(o.offer_mw[0] == doctest::Approx(5.0));
  CHECK(o.offer_mw[1] == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(o.worst_case_revenue_eur == doctest::Approx(200.0));
  // The energy plan cannot discharge more than the store holds.
  double planned = 0.0;
  for (double d : o.deliverable_base_mw) planned += std::max(0.0, d);
  CHECK(planned <= 5.0 + 1e-6);
}

TEST_CASE("a pool with nothing to sell is rejected") {
  UncertainProfile u = flat_profile(1.0);
  PortfolioSummary s;  // all zero
  CHECK_THROWS_AS(solve_robust_offer(u, s), InfeasibleProfileError);
}

TEST_CASE("profile validation rejects inverted intervals and bad budgets") {
  UncertainProfile u = flat_profile(1.0);
  u.periods[0].price_low_eur = 50.0;  // above the high end
  CHECK_THROWS_AS(u.validate(), std::invalid_argument);

  UncertainProfile g = flat_profile(-1.0);
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);

  UncertainProfile a = flat_profile(1.0);
  a.periods[1].avail_low_mw = 3.0;
  a.periods[1].avail_high_mw = 1.0;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);

  CHECK_NOTHROW(flat_profile(1.5).validate());
}

TEST_CASE("settlement pays delivery and charges shortfall") {
  OfferSchedule o;
  o.offer_mw = {5.0, 5.0};
  o.deliverable_base_mw = {5.0, 2.0};
  o.penalty_eur_mwh = 100.0;
  // Second period: only 2 firm + 1 realized renewable = 3 of 5 delivered.
  Settlement st = settle(o, {30.0, 30.0}, {0.0, 1.0});
  CHECK(st.shortfall_mwh == doctest::Approx(2.0));
  CHECK(st.revenue_eur == doctest::Approx(30.0 * 5 + 30.0 * 3 - 100.0 * 2));
}

TEST_CASE("sampled realizations respect the uncertainty set and repeat exactly") {
  UncertainProfile u;
  u.periods = {{10.0, 30.0, 1.0, 4.0}, {15.0, 25.0, 0.0, 2.0}, {5.0, 45.0, 2.0, 6.0}};
  u.gamma = 1.0;
  for (int i = 0; i < 50; ++i) {
    SampledRealization r = sample_realization(u, 42, i);
    REQUIRE(r.price_eur.size() == u.periods.size());
    double budget_used = 0.0;
    for (size_t t = 0; t < u.periods.size(); ++t) {
      const auto& pd = u.periods[t];
      double mid = 0.5 * (pd.price_low_eur + pd.price_high_eur);
      CHECK(r.price_eur[t] >= pd.price_low_eur - 1e-9);
      CHECK(r.price_eur[t] <= mid + 1e-9);  // adverse side only
      CHECK(r.avail_mw[t] >= pd.avail_low_mw - 1e-9);
      CHECK(r.avail_mw[t] <= pd.avail_high_mw + 1e-9);
      double half = 0.5 * (pd.price_high_eur - pd.price_low_eur);
      if (half > 0.0) budget_used += (mid - r.price_eur[t]) / half;
    }
    CHECK(budget_used <= u.gamma + 1e-9);
  }
  SampledRealization a = sample_realization(u, 7, 3);
  SampledRealization b = sample_realization(u, 7, 3);
  CHECK(a.price_eur == b.price_eur);
  CHECK(a.avail_mw == b.avail_mw);
  SampledRealization c = sample_realization(u, 8, 3);
  bool differs = (a.price_eur != c.price_eur) || (a.avail_mw != c.avail_mw);
  CHECK(differs);
}

TEST_CASE("certificate: no sampled scenario beats the worst-case bound") {
  UncertainProfile u;
  u.periods = {{10.0, 30.0, 1.0, 4.0}, {15.0, 25.0, 0.0, 2.0},
               {5.0, 45.0, 2.0, 6.0}, {20.0, 20.0, 0.5, 0.5}};
  u.gamma = 2.0;
  PortfolioSummary s;
  s.firm_mw = 2.0;
  s.storage_power_mw = 1.0;
  s.storage_energy_mwh = 2.0;
  s.storage_initial_mwh = 1.0;
  s.penalty_eur_mwh = 200.0;
  OfferSchedule o = solve_robust_offer(u, s);
  for (int i = 0; i < 500; ++i) {
    SampledRealization r = sample_realization(u, 99, i);
    Settlement st = settle(o, r.price_eur, r.avail_mw);
    CHECK(st.revenue_eur >= o.worst_case_revenue_eur - 1e-6);
  }
}
