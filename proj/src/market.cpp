#include "dvpp/market.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dvpp/simplex.hpp"

namespace dvpp::market {

void UncertainProfile::validate() const {
  if (periods.empty()) throw std::invalid_argument("profile has no periods");
  for (size_t t = 0; t < periods.size(); ++t) {
    const auto& p = periods[t];
    if (p.price_low_eur > p.price_high_eur)
      throw std::invalid_argument("period " + std::to_string(t + 1) +
                                  ": price interval inverted");
    if (p.avail_low_mw > p.avail_high_mw || p.avail_low_mw < 0.0)
      throw std::invalid_argument("period " + std::to_string(t + 1) +
                                  ": availability interval invalid");
  }
  if (gamma < 0.0 || gamma > static_cast<double>(periods.size()))
    throw std::invalid_argument("gamma must lie in [0, n_periods]");
}

OfferSchedule solve_robust_offer(const UncertainProfile& profile,
                                 const PortfolioSummary& units) {
  profile.validate();
  const int T = static_cast<int>(profile.periods.size());

  // Deliverability ceiling per period under worst-case availability; storage
  // shifting can raise individual periods within the energy budget.
  bool any_capability = units.firm_mw > 0.0 || units.storage_power_mw > 0.0;
  for (const auto& p : profile.periods)
    any_capability = any_capability || p.avail_low_mw > 0.0;
  if (!any_capability)
    throw InfeasibleProfileError(
        "no deliverable capability in any period (zero ceilings)");

  // Variables (all >= 0):
  //   x_t      offer                                   [0..T)
  //   z        budget dual scalar                      [T]
  //   q_t      per-period budget dual                  [T+1 .. 2T]
  //   dis_t    storage discharge                       [2T+1 .. 3T]
  //   chg_t    storage charge                          [3T+1 .. 4T]
  //   e_t      storage energy at end of period t       [4T+1 .. 5T]
  // Worst-case revenue = sum mid_t x_t - gamma z - sum q_t, maximized.
  const int xi = 0, zi = T, qi = T + 1, di = 2 * T + 1, ci = 3 * T + 1,
            ei = 4 * T + 1;
  const int nv = 5 * T + 1;
  lp::Problem lpp;
  lpp.n_vars = nv;
  lpp.c.assign(nv, 0.0);
  for (int t = 0; t < T; ++t) {
    const auto& p = profile.periods[t];
    double mid = 0.5 * (p.price_low_eur + p.price_high_eur);
    lpp.c[xi + t] = -mid;  // maximize => minimize negative
    lpp.c[qi + t] = 1.0;
  }
  lpp.c[zi] = profile.gamma;

  auto row = [&](lp::Relation rel, double rhs, const std::string& label) {
    lp::Row r;
    r.a.assign(nv, 0.0);
    r.rel = rel;
    r.rhs = rhs;
    r.label = label;
    lpp.rows.push_back(std::move(r));
    return &lpp.rows.back();
  };

  for (int t = 0; t < T; ++t) {
    const auto& p = profile.periods[t];
    const std::string pt = "period " + std::to_string(t + 1);
    // Price-budget dual cover: z + q_t >= dev_t x_t.
    double dev = 0.5 * (p.price_high_eur - p.price_low_eur);
    auto* r = row(lp::Relation::ge, 0.0, pt + ": budget dual cover");
    r->a[zi] = 1.0;
    r->a[qi + t] = 1.0;
    r->a[xi + t] = -dev;
    // Offer cap: x_t <= firm + a_low_t + dis_t - chg_t.
    auto* r2 = row(lp::Relation::le, units.firm_mw + p.avail_low_mw,
                   pt + ": offer beyond deliverable ceiling");
    r2->a[xi + t] = 1.0;
    r2->a[di + t] = -1.0;
    r2->a[ci + t] = 1.0;
    // Storage power limits.
    auto* r3 = row(lp::Relation::le, units.storage_power_mw,
                   pt + ": discharge power limit");
    r3->a[di + t] = 1.0;
    auto* r4 = row(lp::Relation::le, units.storage_power_mw,
                   pt + ": charge power limit");
    r4->a[ci + t] = 1.0;
    // Energy balance: e_t = e_{t-1} + chg_t - dis_t (1 h periods).
    auto* r5 = row(lp::Relation::eq,
                   (t == 0) ? units.storage_initial_mwh : 0.0,
                   pt + ": storage energy balance");
    r5->a[ei + t] = 1.0;
    r5->a[ci + t] = -1.0;
    r5->a[di + t] = 1.0;
    if (t > 0) r5->a[ei + t - 1] = -1.0;
    // Energy capacity: e_t <= capacity (e_t >= 0 is implicit).
    auto* r6 = row(lp::Relation::le, units.storage_energy_mwh,
                   pt + ": storage capacity");
    r6->a[ei + t] = 1.0;
    // Charging draws on the firm + guaranteed renewable capability left
    // after serving the offer: chg_t + x_t <= firm + a_low_t + dis_t is the
    // same row as the offer cap, so nothing extra is needed.
  }

  lp::Solution sol = lp::solve(lpp);
  if (sol.status != lp::Status::optimal)
    throw InfeasibleProfileError("offer optimization failed unexpectedly");

  OfferSchedule out;
  out.offer_mw.resize(T);
  out.deliverable_base_mw.resize(T);
  out.penalty_eur_mwh = units.penalty_eur_mwh;
  for (int t = 0; t < T; ++t) {
    out.offer_mw[t] = sol.x[xi + t];
    out.deliverable_base_mw[t] =
        units.firm_mw + sol.x[di + t] - sol.x[ci + t];
  }
  out.worst_case_revenue_eur = -sol.objective;
  return out;
}

Settlement settle(const OfferSchedule& schedule,
                  const std::vector<double>& realized_price_eur,
                  const std::vector<double>& realized_avail_mw) {
  Settlement s;
  const size_t T = schedule.offer_mw.size();
  if (realized_price_eur.size() != T || realized_avail_mw.size() != T)
    throw std::invalid_argument("settlement input size mismatch");
  for (size_t t = 0; t < T; ++t) {
    double deliverable =
        std::max(0.0, schedule.deliverable_base_mw[t] + realized_avail_mw[t]);
    double delivered = std::min(schedule.offer_mw[t], deliverable);
    double short_mwh = schedule.offer_mw[t] - delivered;
    s.revenue_eur += realized_price_eur[t] * delivered -
                     schedule.penalty_eur_mwh * short_mwh;
    s.shortfall_mwh += short_mwh;
  }
  return s;
}

SampledRealization sample_realization(const UncertainProfile& profile,
                                      std::uint64_t seed, int index) {
  const int T = static_cast<int>(profile.periods.size());
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (index + 1));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // Price deviation weights eta_t in [0,1], scaled so their sum stays within
  // the budget; availability is free inside its interval.
  std::vector<double> eta(T);
  double total = 0.0;
  for (double& e : eta) {
    e = u01(rng);
    total += e;
  }
  if (total > profile.gamma && total > 0.0) {
    double k = profile.gamma / total;
    for (double& e : eta) e *= k;
  }
  SampledRealization r;
  r.price_eur.resize(T);
  r.avail_mw.resize(T);
  for (int t = 0; t < T; ++t) {
    const auto& p = profile.periods[t];
    double mid = 0.5 * (p.price_low_eur + p.price_high_eur);
    double dev = 0.5 * (p.price_high_eur - p.price_low_eur);
    r.price_eur[t] = mid - eta[t] * dev;  // adverse side for a seller
    r.avail_mw[t] = p.avail_low_mw + u01(rng) * (p.avail_high_mw - p.avail_low_mw);
  }
  return r;
}

}  // namespace dvpp::market
