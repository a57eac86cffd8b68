#pragma once

#include <stdexcept>
#include <vector>

#include "dvpp/units.hpp"

namespace dvpp::freq {

struct ZeroInertiaConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Centre-of-inertia frequency state for the whole scenario: one swing
// equation aggregating every online synchronous machine, with load damping.
struct FreqModel {
  double h_sys_s = 5.0;      // aggregate inertia constant, s on system base
  double d_load = 1.0;       // load damping, pu power per pu frequency
  double f_nominal_hz = 50.0;
  double delta_f_hz = 0.0;

  // Fallback when every synchronous machine is offline: a grid-forming
  // converter imposes first-order frequency dynamics instead of the swing
  // equation (no converter internals modelled).
  bool grid_forming_fallback = false;
  double grid_forming_tau_s = 0.1;

  double delta_omega_pu() const { return delta_f_hz / f_nominal_hz; }
};

// Advance by dt with net accelerating power p_gen - p_load (both pu on the
// system base). Uses the exact exponential update of the linear ODE
//   2 h dw/dt = p - d w
// over the step (inputs held constant), so the result is step-size robust.
// Requires dt in (0, 10 ms]. Throws ZeroInertiaConfigError when h_sys = 0 and
// no grid-forming fallback is configured.
FreqModel step_frequency(const FreqModel& m, double p_gen_total_pu,
                         double p_load_total_pu, double dt);

struct InertiaContribution {
  unit::TechSpec spec;
  bool online = true;
  double rating_mw = 0.0;
  double inertia_h_s = 0.0;  // unit-base inertia constant
};

// Rating-weighted inertia over online synchronous-interfaced units,
// expressed on s_base. Power-electronic interfaces contribute nothing.
double online_inertia(const std::vector<InertiaContribution>& units,
                      double s_base_mva);

}  // namespace dvpp::freq
