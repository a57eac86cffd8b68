#pragma once

#include <limits>
#include <string>
#include <vector>

namespace dvpp::unit {

enum class Technology { pv, st, w, hyd, bio, cf_tps, cc_tps, n_tps, ps_hpp, geo };

enum class Interface { pe, sg, sg_ig_pe };

// How the primary resource constrains dispatch.
enum class DispatchClass {
  a_hard_limited,      // output permanently capped by the available resource
  b_brief_overshoot,   // may exceed the cap briefly (rotor kinetic buffer)
  c_storage_backed,    // inherent storage decouples output from the resource
  d_unconstrained,     // resource never binds (fuel on demand)
  e_bidirectional      // storage that can absorb as well as produce
};

DispatchClass dispatch_class(Technology t);
const char* technology_name(Technology t);
bool technology_from_name(const std::string& name, Technology* out);
// Typical rotating-inertia constant for synchronous plant of this kind.
double default_inertia(Technology t);

struct TechSpec {
  Technology tech = Technology::hyd;
  double response_time_s = 0.0;     // time to ~95% of a step
  double inherent_storage_s = 0.0;  // seconds of rated output; inf = unconstrained
  Interface interface = Interface::sg;

  // First-order tracking constant; response time = 3 tau (95% settling).
  double lag_tau_s() const { return response_time_s / 3.0; }
  bool synchronous() const { return interface != Interface::pe; }

  static TechSpec defaults(Technology t);
  // Checks the values against the per-technology plausible ranges.
  void validate() const;  // throws std::invalid_argument
};

struct UnitParams {
  std::string id;
  TechSpec spec;
  double rating_mw = 0.0;
  double storage_capacity_mwh = 0.0;  // classes C/E
  double inertia_h_s = 0.0;           // rotating inertia, s on unit base (SG only)
  double cost_eur_mwh = 0.0;
  int bus = 0;
  bool dvpp_member = false;
  // Class B overshoot window: factor above p_avail and the time budget.
  double overload_factor = 1.2;
  double overload_budget_max_s = 10.0;

  void validate() const;
};

struct UnitState {
  double p_out_mw = 0.0;
  double p_cmd_mw = 0.0;       // scheduled setpoint (dispatch channel)
  double p_freq_cmd_mw = 0.0;  // frequency-service offset (may release reserve)
  double p_avail_mw = 0.0;     // primary-resource availability
  double energy_stored_mwh = 0.0;
  double overload_budget_s = 10.0;  // remaining class-B overshoot time
  double reserve_fraction = 0.0;    // deloading reserve in [0, 1)
  bool online = true;
  bool saturated = false;  // last step hit a clamp
};

struct Headroom {
  double up_mw = 0.0;
  double down_mw = 0.0;
};

// Initial state consistent with the parameters: p_out = p_cmd clamped,
// full overload budget, storage as given.
UnitState initial_state(const UnitParams& p, double p_cmd_mw, double p_avail_mw,
                        double reserve_fraction, double energy_mwh);

// Advance the first-order tracking dynamics by dt and apply the
// dispatch-class clamp rules. Pure; requires dt <= tau/2.
UnitState step_unit(const UnitState& s, const UnitParams& p, double dt);

UnitState set_availability(UnitState s, double p_avail_mw);

// Remaining frequency-service range around the current operating point.
// up counts the deloading reserve as releasable (it exists for this purpose);
// down reaches the class floor (negative floor only for bidirectional units).
Headroom headroom(const UnitState& s, const UnitParams& p);

// Frequency-service range around the dispatch target instead of the moving
// output. The service command adds onto the schedule, so its clamp must not
// shrink as the unit follows it - bounding by remaining-above-output would
// throttle the unit to halfway between schedule and ceiling.
Headroom service_band(const UnitState& s, const UnitParams& p);

// The ceiling the scheduled setpoint may use (reserve withheld).
double dispatch_ceiling(const UnitState& s, const UnitParams& p);

constexpr double kInfStorage = std::numeric_limits<double>::infinity();

}  // namespace dvpp::unit
