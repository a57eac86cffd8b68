#include "dvpp/turbine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dvpp::turbine {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double CpCurve::operator()(double lambda, double beta_deg) const {
  if (lambda <= 0.0) return 0.0;
  double beta = std::max(0.0, beta_deg);
  double inv_li = 1.0 / (lambda + 0.08 * beta) - 0.035 / (beta * beta * beta + 1.0);
  double cp;
  if (inv_li <= 0.0) {
    cp = c6 * lambda;  // far above the useful tip-speed range
  } else {
    cp = c1 * (c2 * inv_li - c3 * beta - c4) * std::exp(-c5 * inv_li) +
         c6 * lambda;
  }
  return std::clamp(cp, 0.0, betz);
}

double TurbineParams::mech_time_s() const {
  return rotor_inertia_kgm2 * rated_speed_rad_s * rated_speed_rad_s /
         (rated_power_mw * 1e6);
}

double TurbineParams::rated_wind_mps() const {
  double area = kPi * rotor_radius_m * rotor_radius_m;
  double k = 0.5 * air_density_kgm3 * area * cp.cp_max;
  return std::cbrt(rated_power_mw * 1e6 / k);
}

void TurbineParams::validate() const {
  if (!(rotor_inertia_kgm2 > 0.0) || !(rated_power_mw > 0.0) ||
      !(rated_speed_rad_s > 0.0) || !(rotor_radius_m > 0.0) ||
      !(air_density_kgm3 > 0.0))
    throw std::invalid_argument("turbine: physical parameters must be > 0");
  if (cp.cp_max <= 0.0 || cp.cp_max > cp.betz || cp.betz > 0.5926)
    throw std::invalid_argument("turbine: cp curve violates the Betz bound");
  if (omega_min_pu <= 0.0 || omega_max_pu <= omega_min_pu)
    throw std::invalid_argument("turbine: bad speed envelope");
  if (os2_speed_ref_pu >= omega_max_pu || os2_speed_ref_pu <= omega_min_pu)
    throw std::invalid_argument("turbine: os2 speed setpoint outside envelope");
}

double aero_power(const TurbineParams& p, double v_mps, double omega_pu,
                  double beta_deg) {
  if (v_mps <= 0.0) return 0.0;
  double omega_rad = omega_pu * p.rated_speed_rad_s;
  double lambda = omega_rad * p.rotor_radius_m / v_mps;
  double area = kPi * p.rotor_radius_m * p.rotor_radius_m;
  double pw = 0.5 * p.air_density_kgm3 * area * p.cp(lambda, beta_deg) *
              v_mps * v_mps * v_mps;
  return pw / (p.rated_power_mw * 1e6);
}

double aero_ceiling(const TurbineParams& p, double v_mps) {
  if (v_mps <= 0.0) return 0.0;
  // Peak cp occurs at the optimal tip speed; if that speed is outside the
  // envelope, the best reachable point sits on the envelope edge.
  double omega_opt_pu =
      p.cp.lambda_opt * v_mps / p.rotor_radius_m / p.rated_speed_rad_s;
  double w = std::clamp(omega_opt_pu, p.omega_min_pu, p.omega_max_pu);
  return aero_power(p, v_mps, w, 0.0);
}

double available_power(const TurbineParams& p, double v_mps) {
  return std::min(1.0, p.demand_margin * aero_ceiling(p, v_mps));
}

double nominal_speed_pu(const TurbineParams& p, double v_mps) {
  double omega_opt_pu =
      p.cp.lambda_opt * v_mps / p.rotor_radius_m / p.rated_speed_rad_s;
  return std::clamp(omega_opt_pu, p.omega_min_pu, 1.0);
}

namespace {

// Monotone-decreasing root find for the pitch angle that sheds aero power
// down to the target at fixed speed.
double solve_beta(const TurbineParams& p, double v, double omega_pu,
                  double target_pu) {
  double lo = 0.0, hi = p.pitch_max_deg;
  if (aero_power(p, v, omega_pu, lo) <= target_pu) return lo;
  if (aero_power(p, v, omega_pu, hi) >= target_pu) return hi;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (aero_power(p, v, omega_pu, mid) > target_pu) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Over-speed-branch rotor speed where aero power equals the target at zero
// pitch; returns omega_max when even the envelope edge cannot shed enough.
double solve_overspeed(const TurbineParams& p, double v, double target_pu) {
  double omega_opt_pu =
      p.cp.lambda_opt * v / p.rotor_radius_m / p.rated_speed_rad_s;
  double lo = std::clamp(omega_opt_pu, p.omega_min_pu, p.omega_max_pu);
  double hi = p.omega_max_pu;
  if (aero_power(p, v, hi, 0.0) >= target_pu) return hi;
  if (aero_power(p, v, lo, 0.0) <= target_pu) return lo;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (aero_power(p, v, mid, 0.0) > target_pu) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double clamp_demand(const TurbineParams& p, double v, double p_ref,
                    bool* infeasible) {
  double lim = available_power(p, v);
  if (infeasible) *infeasible = p_ref > lim + 1e-9;
  return std::clamp(p_ref, 0.0, lim);
}

}  // namespace

TurbineState init_steady(const TurbineParams& p, Strategy strategy,
                         double v_mps, double p0_pu) {
  p.validate();
  TurbineState s;
  s.strategy = strategy;
  s.v_wind_mps = v_mps;
  s.p_ref_pu = p0_pu;
  bool infeasible = false;
  double dem = clamp_demand(p, v_mps, p0_pu, &infeasible);
  s.infeasible_demand = infeasible;
  if (strategy == Strategy::os1) {
    s.omega_pu = nominal_speed_pu(p, v_mps);
    s.beta_deg = solve_beta(p, v_mps, s.omega_pu, dem);
  } else {
    double w = solve_overspeed(p, v_mps, dem);
    if (w > p.os2_speed_ref_pu) {
      // Speed alone cannot shed to the target inside the policy envelope;
      // pin the speed and let the pitch make up the rest.
      s.omega_pu = p.os2_speed_ref_pu;
      s.beta_deg = solve_beta(p, v_mps, s.omega_pu, dem);
    } else {
      s.omega_pu = w;
      s.beta_deg = 0.0;
    }
  }
  s.t_g_pu = dem / s.omega_pu;
  s.pitch_integ_deg = s.beta_deg;
  return s;
}

TurbineState step_turbine(const TurbineState& s0, const TurbineParams& p,
                          double dt) {
  if (!(dt > 0.0) || dt > 0.010 + 1e-12)
    throw std::invalid_argument("step_turbine: dt must be in (0, 10 ms]");
  TurbineState s = s0;
  const double v = s.v_wind_mps;
  bool infeasible = false;
  const double dem = clamp_demand(p, v, s.p_ref_pu, &infeasible);
  s.infeasible_demand = infeasible;

  // Electrical torque tracks the constant-power command through a fast lag.
  const double w_meas = std::max(s.omega_pu, 0.3);
  const double t_cmd = std::clamp(dem / w_meas, 0.0, p.torque_max_pu);
  s.t_g_pu += (dt / p.torque_lag_s) * (t_cmd - s.t_g_pu);

  // Pitch PI on the speed error. Conditional integration: stop integrating
  // into a clamp.
  const double w_ref = (s.strategy == Strategy::os1)
                           ? nominal_speed_pu(p, v)
                           : p.os2_speed_ref_pu;
  const double err = s.omega_pu - w_ref;
  double beta_unsat = p.pitch_kp_deg_per_pu * err + s.pitch_integ_deg;
  const bool hi_clamp = beta_unsat > p.pitch_max_deg;
  const bool lo_clamp = beta_unsat < 0.0;
  if (!(hi_clamp && err > 0.0) && !(lo_clamp && err < 0.0))
    s.pitch_integ_deg += p.pitch_ki_deg_per_pu_s * err * dt;
  double beta_cmd = std::clamp(p.pitch_kp_deg_per_pu * err + s.pitch_integ_deg,
                               0.0, p.pitch_max_deg);
  // Actuator: first-order lag with slew limit.
  double dbeta = std::clamp((beta_cmd - s.beta_deg) / p.pitch_lag_s,
                            -p.pitch_rate_deg_per_s, p.pitch_rate_deg_per_s);
  s.beta_deg = std::clamp(s.beta_deg + dt * dbeta, 0.0, p.pitch_max_deg);

  // Rotor: M dw/dt = T_aero - T_g, integrated with Heun's method.
  const double m = p.mech_time_s();
  auto domega = [&](double w) {
    double ww = std::max(w, 0.3);
    return (aero_power(p, v, ww, s.beta_deg) / ww - s.t_g_pu) / m;
  };
  const double k1 = domega(s.omega_pu);
  const double k2 = domega(s.omega_pu + dt * k1);
  double w_next = s.omega_pu + 0.5 * dt * (k1 + k2);
  s.speed_limited = false;
  if (w_next > p.omega_max_pu) {
    w_next = p.omega_max_pu;
    s.speed_limited = true;
  } else if (w_next < p.omega_min_pu) {
    w_next = p.omega_min_pu;
    s.speed_limited = true;
  }
  s.omega_pu = w_next;
  return s;
}

StepExperiment run_step_experiment(const TurbineParams& p, Strategy strategy) {
  p.validate();
  StepExperiment e;
  e.strategy = strategy;
  e.base_power_pu = 0.7;
  const double speeds[] = {8.0, 12.0, 16.0};
  const double steps[] = {-0.3, -0.2, -0.1, 0.1, 0.2, 0.3};
  const double dt = 0.010;
  const double duration_s = 80.0;
  const int log_every = 20;  // 0.2 s samples
  for (double v : speeds) {
    for (double dp : steps) {
      StepTrace tr;
      tr.v_mps = v;
      tr.dp_ref_pu = dp;
      TurbineState s = init_steady(p, strategy, v, e.base_power_pu);
      const double w_ref0 = s.omega_pu;
      const double p0 = s.p_out_pu();
      s.p_ref_pu = e.base_power_pu + dp;
      {
        bool infeasible = false;
        clamp_demand(p, v, s.p_ref_pu, &infeasible);
        tr.infeasible = infeasible;
      }
      const int n = static_cast<int>(std::lround(duration_s / dt));
      tr.time_s.push_back(0.0);
      tr.response.push_back(0.0);
      for (int k = 1; k <= n; ++k) {
        s = step_turbine(s, p, dt);
        tr.max_speed_dev_pu =
            std::max(tr.max_speed_dev_pu, std::abs(s.omega_pu - w_ref0));
        if (k % log_every == 0) {
          tr.time_s.push_back(k * dt);
          tr.response.push_back((s.p_out_pu() - p0) / dp);
        }
      }
      tr.final_value = tr.response.back();
      const double band = 0.02 * std::max(1.0, std::abs(tr.final_value));
      double settle = 0.0;
      for (size_t i = 0; i < tr.response.size(); ++i)
        if (std::abs(tr.response[i] - tr.final_value) > band)
          settle = tr.time_s[i];
      tr.settling_time_s = settle;
      e.traces.push_back(std::move(tr));
    }
  }
  return e;
}

std::string experiment_csv(const StepExperiment& e) {
  std::ostringstream os;
  os << "time_s,v_mps,dp_ref,dp_normalized,infeasible\n";
  os.setf(std::ios::fmtflags(0), std::ios::floatfield);
  os.precision(10);
  for (const auto& tr : e.traces)
    for (size_t i = 0; i < tr.time_s.size(); ++i)
      os << tr.time_s[i] << ',' << tr.v_mps << ',' << tr.dp_ref_pu << ','
         << tr.response[i] << ',' << (tr.infeasible ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace dvpp::turbine
