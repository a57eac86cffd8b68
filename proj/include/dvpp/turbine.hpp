#pragma once

#include <string>
#include <vector>

namespace dvpp::turbine {

// Analytic exponential power-coefficient curve.
// cp(lambda, beta) = c1 (c2/li - c3 beta - c4) e^(-c5/li) + c6 lambda,
//   1/li = 1/(lambda + 0.08 beta) - 0.035/(beta^3 + 1),
// clamped to [0, betz].
struct CpCurve {
  double c1 = 0.5176, c2 = 116.0, c3 = 0.4, c4 = 5.0, c5 = 21.0, c6 = 0.0068;
  double lambda_opt = 8.1;   // tip-speed ratio of the maximum
  double cp_max = 0.48;      // value at (lambda_opt, 0)
  double betz = 16.0 / 27.0;

  double operator()(double lambda, double beta_deg) const;
};

struct TurbineParams {
  double rotor_inertia_kgm2 = 2.0e7;
  double rated_power_mw = 2.5;
  double rated_speed_rad_s = 1.1314;  // mechanical speed at rated operation
  double rotor_radius_m = 63.0;
  double air_density_kgm3 = 1.225;
  CpCurve cp;

  // Electrical torque loop.
  double torque_lag_s = 0.05;
  double torque_max_pu = 1.5;
  // Pitch loop: PI on speed error with actuator lag and rate limit.
  double pitch_kp_deg_per_pu = 50.0;
  double pitch_ki_deg_per_pu_s = 12.0;
  double pitch_max_deg = 30.0;
  double pitch_rate_deg_per_s = 10.0;
  double pitch_lag_s = 0.2;
  // Rotor speed envelope (hard limits) and the over-speed setpoint the
  // second strategy regulates to when speed alone cannot shed enough power.
  double omega_min_pu = 0.5;
  double omega_max_pu = 1.2;
  double os2_speed_ref_pu = 1.15;
  // Feasibility margin kept below the aerodynamic peak so the deloaded
  // operating point stays on the stable branch.
  double demand_margin = 0.98;

  // J w_rated^2 / P_rated: seconds of rated power stored at rated speed x2.
  double mech_time_s() const;
  // Wind speed at which peak-cp aero power equals the rating.
  double rated_wind_mps() const;
  void validate() const;  // throws std::invalid_argument
};

enum class Strategy { os1, os2 };

struct TurbineState {
  Strategy strategy = Strategy::os1;
  double omega_pu = 1.0;     // rotor speed / rated speed
  double t_g_pu = 0.0;       // generator torque / (P_rated / w_rated)
  double v_wind_mps = 12.0;
  double p_ref_pu = 0.7;     // demanded electrical power
  double beta_deg = 0.0;     // actual pitch angle
  double pitch_integ_deg = 0.0;
  bool infeasible_demand = false;  // demand above what the wind can supply
  bool speed_limited = false;      // hit a hard speed limit this step

  // Electrical output: always the product of speed and torque.
  double p_out_pu() const { return omega_pu * t_g_pu; }
};

// Aerodynamic power in pu of rated, at rotor speed omega (pu) and pitch beta.
double aero_power(const TurbineParams& p, double v_mps, double omega_pu,
                  double beta_deg);

// Maximum aero power reachable inside the speed envelope at this wind, in pu
// (not capped at the rating).
double aero_ceiling(const TurbineParams& p, double v_mps);

// What the unit can actually deliver sustained: aero ceiling with the
// stability margin, capped at the rating.
double available_power(const TurbineParams& p, double v_mps);

// Speed the first strategy regulates to: optimal tip speed below rated,
// rated speed above.
double nominal_speed_pu(const TurbineParams& p, double v_mps);

// Exact steady operating point for the strategy at (v, p0).
TurbineState init_steady(const TurbineParams& p, Strategy strategy,
                         double v_mps, double p0_pu);

// One integration step (dt <= 10 ms): torque lag, pitch PI + actuator, and a
// second-order (Heun) rotor speed update.
TurbineState step_turbine(const TurbineState& s, const TurbineParams& p,
                          double dt);

struct StepTrace {
  double v_mps = 0.0;
  double dp_ref_pu = 0.0;  // signed step size
  bool infeasible = false;
  std::vector<double> time_s;
  std::vector<double> response;  // (p_out - p0) / dp_ref
  double final_value = 0.0;
  double settling_time_s = 0.0;  // entry into the +-2% band around the final value
  double max_speed_dev_pu = 0.0; // peak |omega - initial reference| during trace
};

struct StepExperiment {
  Strategy strategy = Strategy::os1;
  double base_power_pu = 0.7;
  std::vector<StepTrace> traces;  // 3 wind speeds x 6 steps
};

// The bidirectional step-response experiment grid: wind 8/12/16 m/s, steps
// of +-0.1/0.2/0.3 pu from the 70%-power operating point.
StepExperiment run_step_experiment(const TurbineParams& p, Strategy strategy);

// CSV with columns time_s, v_mps, dp_ref, dp_normalized, infeasible.
std::string experiment_csv(const StepExperiment& e);

}  // namespace dvpp::turbine
