#pragma once

#include <optional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvpp/tf.hpp"

namespace dvpp::coord {

struct NoHeadroomError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AllUnitsFailedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Aggregate dynamic ancillary-service specification for the whole pool:
// desired response from -delta_omega (pu) to delta_P (pu),
//   C_des(s) = droop_d + inertia_h * s / (1 + filter_tau * s).
struct DvppSpec {
  double droop_d = 25.0;     // pu power per pu frequency deviation
  double inertia_h = 10.0;   // pu power per pu RoCoF (a 2H equivalent)
  double filter_tau_s = 0.05;  // derivative realization filter

  tf::Rational desired_response() const;
  void validate() const;  // throws std::invalid_argument
};

enum class Pool { single, fast, slow };

// What the designer needs to know about each unit.
struct CandidateUnit {
  std::string id;
  double lag_tau_s = 0.0;      // nominal first-order tracking constant
  double headroom_up_mw = 0.0;
};

// One unit's dynamic share m_i(s) of the aggregate specification.
struct ParticipationFactor {
  std::string unit_id;
  tf::Rational filter;         // m_i(s)
  double static_weight = 0.0;  // share within its pool
  Pool pool = Pool::single;
  double headroom_mw = 0.0;    // snapshot the weights were computed from
  double lag_tau_s = 0.0;
};

struct FactorDesign {
  std::vector<ParticipationFactor> factors;
  double split_tau_s = 0.0;  // complementary-filter constant; 0 = single pool
  bool degraded = false;     // a pool emptied and bandwidth respect was lost
  std::string warning;
};

struct DesignOptions {
  // Force the complementary-filter constant (seconds); 0 = automatic.
  double split_tau_s = 0.0;
  // Minimum tau ratio between neighbours that triggers a fast/slow split.
  double pool_gap_ratio = 10.0;
  // Properness-guard poles are placed at 10x the unit bandwidth but never
  // below this, keeping the in-band error negligible.
  double aug_pole_min_rad_s = 500.0;
  // First-order smoothing of the broadcast input before the compensator
  // (seconds); 0 disables it. A broadcast arriving as a zero-order hold is a
  // staircase, and each riser excites the compensator lead as an impulse.
  // Matching this constant to the broadcast period turns the staircase into
  // a continuous signal so kicks occur only at genuine disturbances.
  double input_smooth_tau_s = 0.0;
};

// Partition the pool by tracking bandwidth, give the slow pool the low-pass
// 1/(1 + T s) and the fast pool its complement, weight units inside each pool
// by headroom, and guarantee sum_i m_i(s) = 1 identically.
FactorDesign design_participation(const std::vector<CandidateUnit>& units,
                                  const DvppSpec& spec,
                                  const DesignOptions& opts = {});

// Remove one unit and redistribute its share inside its pool (by the stored
// headroom snapshot, or current_headroom_mw when provided). If the pool
// empties, every survivor falls back to a static weight and the design is
// flagged degraded: sum m_i = 1 again but bandwidth separation is gone.
FactorDesign renormalize_on_failure(
    const FactorDesign& design, const std::string& failed_unit,
    const std::map<std::string, double>* current_headroom_mw = nullptr);

// Local matching controller K_i = m_i * C_des / G_i realized as a discrete
// filter at the device step.
struct LocalController {
  std::string unit_id;
  tf::Rational k;           // continuous prototype (proper by construction)
  tf::DiscreteFilter filt;  // bilinear realization
  double f_nominal_hz = 50.0;
  double stale_timeout_s = 0.5;
  // Input-smoother pole mapped to the device step: 1 passes the raw input.
  double input_smooth_alpha = 1.0;
  double u_smooth = 0.0;
  double last_output_pu = 0.0;
  bool stale = false;
  bool saturated = false;
};

LocalController make_local_controller(const ParticipationFactor& factor,
                                      const DvppSpec& spec,
                                      double unit_lag_tau_s, double dt,
                                      const DesignOptions& opts = {});

struct BroadcastSignal {
  double delta_f_hz = 0.0;
  double timestamp_s = 0.0;
  double staleness_s = 0.0;  // age of the measurement at use time
};

// One device-tick update: drive the filter with -delta_omega (pu), clamp the
// command to the unit's current headroom (pu), feed the clamped value back
// (anti-windup). A stale broadcast freezes the output and sets the flag.
double local_control_step(LocalController& c, const BroadcastSignal& b,
                          double headroom_up_pu, double headroom_down_pu);

struct AggregateFit {
  double max_rel_error = 0.0;
  // (omega, relative error) over the evaluation grid.
  std::vector<std::pair<double, double>> profile;
};

// Frequency-domain check that the closed pool meets the specification:
// max over the grid of |sum_i K_i(jw) G_i(jw) - C_des(jw)| / |C_des(jw)|.
AggregateFit evaluate_aggregate(const std::vector<ParticipationFactor>& factors,
                                const DvppSpec& spec,
                                const std::vector<LocalController>& controllers,
                                double omega_min = 1e-3, double omega_max = 1e2,
                                int n_points = 200);

// Cadences of the four nested control layers. Each layer's closed loop is
// the plant the next (slower) layer acts on.
struct LayerSchedule {
  double device_s = 0.010;
  double freq_service_s = 0.100;
  double redispatch_s = 60.0;
  double market_s = 3600.0;

  void validate() const;  // periods strictly increasing, adjacent ratio >= 10
};

LayerSchedule hierarchical_layers();

}  // namespace dvpp::coord
