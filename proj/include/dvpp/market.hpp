#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dvpp::market {

struct InfeasibleProfileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PeriodInterval {
  double price_low_eur = 0.0;
  double price_high_eur = 0.0;
  double avail_low_mw = 0.0;   // guaranteed renewable availability
  double avail_high_mw = 0.0;
};

// Day-ahead uncertainty description: per-period intervals plus the budget
// gamma bounding how many periods may sit at their adverse bound at once.
struct UncertainProfile {
  std::vector<PeriodInterval> periods;
  double gamma = 0.0;

  void validate() const;  // throws std::invalid_argument
};

// What the pool can firmly deliver, aggregated.
struct PortfolioSummary {
  double firm_mw = 0.0;            // dispatchable capability, every period
  double storage_power_mw = 0.0;   // charge/discharge power limit
  double storage_energy_mwh = 0.0; // usable energy capacity
  double storage_initial_mwh = 0.0;
  double penalty_eur_mwh = 0.0;    // shortfall penalty rate at settlement
};

struct OfferSchedule {
  std::vector<double> offer_mw;
  // Firm + planned storage contribution per period; realized deliverability
  // adds the realized renewable availability on top.
  std::vector<double> deliverable_base_mw;
  double worst_case_revenue_eur = 0.0;
  double penalty_eur_mwh = 0.0;
};

// Robust day-ahead offer: maximize worst-case revenue over the price budget
// set, with offers capped at what the pool can deliver even at the low end
// of the availability intervals (so committed energy is always deliverable).
// Reformulated by duality into a single LP.
OfferSchedule solve_robust_offer(const UncertainProfile& profile,
                                 const PortfolioSummary& units);

struct Settlement {
  double revenue_eur = 0.0;
  double shortfall_mwh = 0.0;
};

// Ex-post settlement: paid for delivered energy up to the offer, penalized
// for the undelivered remainder.
Settlement settle(const OfferSchedule& schedule,
                  const std::vector<double>& realized_price_eur,
                  const std::vector<double>& realized_avail_mw);

// Deterministic sampler over the uncertainty set (prices on the budget set,
// availability anywhere in its interval) for certifying the worst-case bound.
struct SampledRealization {
  std::vector<double> price_eur;
  std::vector<double> avail_mw;
};
SampledRealization sample_realization(const UncertainProfile& profile,
                                      std::uint64_t seed, int index);

}  // namespace dvpp::market
