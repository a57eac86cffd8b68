#include "dvpp/frequency.hpp"

#include <cmath>

namespace dvpp::freq {

FreqModel step_frequency(const FreqModel& m, double p_gen_total_pu,
                         double p_load_total_pu, double dt) {
  if (!(dt > 0.0) || dt > 0.010 + 1e-12)
    throw std::invalid_argument("step_frequency: dt must be in (0, 10 ms]");
  FreqModel out = m;
  const double p = p_gen_total_pu - p_load_total_pu;
  double w = m.delta_omega_pu();
  if (m.h_sys_s > 0.0) {
    // 2h w' = p - d w  ->  w' = (p - d w)/(2h): linear, solve exactly over dt.
    const double two_h = 2.0 * m.h_sys_s;
    if (m.d_load > 1e-12) {
      const double w_inf = p / m.d_load;
      w = w_inf + (w - w_inf) * std::exp(-m.d_load * dt / two_h);
    } else {
      w += p * dt / two_h;
    }
  } else if (m.grid_forming_fallback) {
    // First-order converter-imposed dynamics toward the droop equilibrium.
    const double d = std::max(m.d_load, 1e-9);
    const double w_inf = p / d;
    w = w_inf + (w - w_inf) * std::exp(-dt / std::max(m.grid_forming_tau_s, 1e-6));
  } else {
    throw ZeroInertiaConfigError(
        "no synchronous inertia online and no grid-forming fallback configured");
  }
  out.delta_f_hz = w * m.f_nominal_hz;
  return out;
}

double online_inertia(const std::vector<InertiaContribution>& units,
                      double s_base_mva) {
  double num = 0.0;
  for (const auto& u : units) {
    if (!u.online) continue;
    if (!u.spec.synchronous()) continue;
    num += u.inertia_h_s * u.rating_mw;
  }
  return num / s_base_mva;
}

}  // namespace dvpp::freq
