#include "dvpp/units.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dvpp::unit {

namespace {

struct TechRow {
  Technology tech;
  const char* name;
  double resp_lo, resp_hi;       // seconds
  double store_lo, store_hi;     // seconds of rated output
  Interface iface;
  double default_h_s;            // rotating inertia for SG plant
};

constexpr double kHour = 3600.0, kDay = 86400.0, kWeek = 7.0 * kDay,
                 kMonth = 30.0 * kDay;
constexpr double kInf = std::numeric_limits<double>::infinity();

const TechRow kTable[] = {
    {Technology::pv, "PV", 0.1, 5.0, 0.0, 0.0, Interface::pe, 0.0},
    {Technology::st, "ST", 15 * 60.0, 4 * kHour, 0.0, 24 * kHour, Interface::sg, 4.0},
    {Technology::w, "W", 0.0005, 1.0, 0.0, 0.0, Interface::sg_ig_pe, 0.0},
    {Technology::hyd, "HYD", 2 * 60.0, 5 * 60.0, 4 * kHour, 16 * kHour, Interface::sg, 4.0},
    {Technology::bio, "BIO", 10 * 60.0, 6 * kHour, kWeek, 4 * kWeek, Interface::sg, 5.0},
    {Technology::cf_tps, "CF_TPS", 80 * 60.0, 8 * kHour, kMonth, 3 * kMonth, Interface::sg, 6.0},
    {Technology::cc_tps, "CC_TPS", 5 * 60.0, 3 * kHour, kMonth, 3 * kMonth, Interface::sg, 5.0},
    {Technology::n_tps, "N_TPS", 12 * kHour, 48 * kHour, kMonth, 3 * kMonth, Interface::sg, 6.0},
    {Technology::ps_hpp, "PS_HPP", 2 * 60.0, 5 * 60.0, 4 * kHour, 16 * kHour, Interface::sg, 4.0},
    {Technology::geo, "GEO", 30.0, 2 * 60.0, kInf, kInf, Interface::sg, 3.0},
};

const TechRow& row(Technology t) {
  for (const TechRow& r : kTable)
    if (r.tech == t) return r;
  throw std::invalid_argument("unknown technology");
}

}  // namespace

DispatchClass dispatch_class(Technology t) {
  switch (t) {
    case Technology::pv: return DispatchClass::a_hard_limited;
    case Technology::w: return DispatchClass::b_brief_overshoot;
    case Technology::st: return DispatchClass::c_storage_backed;
    case Technology::ps_hpp: return DispatchClass::e_bidirectional;
    default: return DispatchClass::d_unconstrained;
  }
}

const char* technology_name(Technology t) { return row(t).name; }

bool technology_from_name(const std::string& name, Technology* out) {
  for (const TechRow& r : kTable) {
    if (name == r.name) {
      *out = r.tech;
      return true;
    }
  }
  return false;
}

TechSpec TechSpec::defaults(Technology t) {
  const TechRow& r = row(t);
  TechSpec s;
  s.tech = t;
  s.response_time_s = std::sqrt(r.resp_lo * r.resp_hi);
  s.inherent_storage_s =
      std::isinf(r.store_hi) ? kInf : std::sqrt(std::max(r.store_lo, 1.0) * std::max(r.store_hi, 1.0));
  if (r.store_hi == 0.0) s.inherent_storage_s = 0.0;
  s.interface = r.iface;
  return s;
}

void TechSpec::validate() const {
  const TechRow& r = row(tech);
  const double tol = 1e-9;
  if (!(response_time_s > 0.0))
    throw std::invalid_argument(std::string(r.name) +
                                ": response time must be positive");
  if (response_time_s < r.resp_lo * (1 - tol) ||
      response_time_s > r.resp_hi * (1 + tol))
    throw std::invalid_argument(std::string(r.name) + ": response time " +
                                std::to_string(response_time_s) +
                                " s outside plausible range [" +
                                std::to_string(r.resp_lo) + ", " +
                                std::to_string(r.resp_hi) + "]");
  if (inherent_storage_s < 0.0)
    throw std::invalid_argument(std::string(r.name) + ": negative storage");
  if (std::isinf(r.store_hi)) return;  // unconstrained resource
  if (inherent_storage_s > r.store_hi * (1 + tol) + tol)
    throw std::invalid_argument(std::string(r.name) + ": storage " +
                                std::to_string(inherent_storage_s) +
                                " s above plausible maximum " +
                                std::to_string(r.store_hi));
}

double default_inertia(Technology t) { return row(t).default_h_s; }

void UnitParams::validate() const {
  spec.validate();
  if (id.empty()) throw std::invalid_argument("unit id must not be empty");
  if (!(rating_mw > 0.0))
    throw std::invalid_argument(id + ": rating must be positive");
  if (storage_capacity_mwh < 0.0)
    throw std::invalid_argument(id + ": negative storage capacity");
  if (inertia_h_s < 0.0)
    throw std::invalid_argument(id + ": negative inertia constant");
  if (overload_factor < 1.0)
    throw std::invalid_argument(id + ": overload factor below 1");
  if (overload_budget_max_s < 0.0)
    throw std::invalid_argument(id + ": negative overload budget");
  DispatchClass c = dispatch_class(spec.tech);
  if ((c == DispatchClass::c_storage_backed ||
       c == DispatchClass::e_bidirectional) &&
      storage_capacity_mwh == 0.0)
    throw std::invalid_argument(id + ": storage-backed unit needs capacity");
}

namespace {

// Instantaneous output bounds for the combined command, given the channel
// split: the dispatch channel stops at the deloading ceiling, the
// frequency-service channel may release the reserve up to full availability.
struct Bounds {
  double lo, hi;
};

Bounds class_bounds(const UnitState& s, const UnitParams& p, double freq_up_req) {
  const DispatchClass c = dispatch_class(p.spec.tech);
  const double r = s.reserve_fraction;
  switch (c) {
    case DispatchClass::a_hard_limited: {
      double base_ceiling = std::min(p.rating_mw, s.p_avail_mw * (1.0 - r));
      double release = std::clamp(freq_up_req, 0.0, s.p_avail_mw - base_ceiling);
      return {0.0, std::min(p.rating_mw, base_ceiling + release)};
    }
    case DispatchClass::b_brief_overshoot: {
      double base_ceiling = std::min(p.rating_mw, s.p_avail_mw * (1.0 - r));
      double release = std::clamp(freq_up_req, 0.0, s.p_avail_mw - base_ceiling);
      double hi = std::min(p.rating_mw, base_ceiling + release);
      // Kinetic-buffer overshoot: an explicit request above the available
      // power is honoured while the time budget lasts.
      double req = std::max(s.p_cmd_mw, s.p_cmd_mw + s.p_freq_cmd_mw);
      if (req > s.p_avail_mw && s.overload_budget_s > 0.0)
        hi = std::min(p.overload_factor * s.p_avail_mw,
                      std::min(p.overload_factor * p.rating_mw, req));
      return {0.0, hi};
    }
    case DispatchClass::c_storage_backed: {
      double hi = (s.energy_stored_mwh > 0.0)
                      ? p.rating_mw
                      : std::min(p.rating_mw, s.p_avail_mw);
      return {0.0, hi};
    }
    case DispatchClass::d_unconstrained:
      return {0.0, p.rating_mw};
    case DispatchClass::e_bidirectional: {
      double hi = (s.energy_stored_mwh > 0.0) ? p.rating_mw : 0.0;
      double lo = (s.energy_stored_mwh < p.storage_capacity_mwh) ? -p.rating_mw
                                                                 : 0.0;
      return {lo, hi};
    }
  }
  return {0.0, p.rating_mw};
}

}  // namespace

UnitState initial_state(const UnitParams& p, double p_cmd_mw, double p_avail_mw,
                        double reserve_fraction, double energy_mwh) {
  UnitState s;
  s.p_cmd_mw = p_cmd_mw;
  s.p_avail_mw = std::max(0.0, p_avail_mw);
  s.reserve_fraction = std::clamp(reserve_fraction, 0.0, 0.999);
  s.energy_stored_mwh = std::clamp(energy_mwh, 0.0, p.storage_capacity_mwh);
  s.overload_budget_s = p.overload_budget_max_s;
  const Bounds b = class_bounds(s, p, 0.0);
  s.p_out_mw = std::clamp(p_cmd_mw, b.lo, b.hi);
  return s;
}

double dispatch_ceiling(const UnitState& s, const UnitParams& p) {
  const DispatchClass c = dispatch_class(p.spec.tech);
  if (c == DispatchClass::a_hard_limited || c == DispatchClass::b_brief_overshoot)
    return std::min(p.rating_mw, s.p_avail_mw * (1.0 - s.reserve_fraction));
  return class_bounds(s, p, 0.0).hi;
}

UnitState step_unit(const UnitState& s0, const UnitParams& p, double dt) {
  UnitState s = s0;
  if (!s.online) {
    s.p_out_mw = 0.0;
    s.saturated = false;
    return s;
  }
  const double tau = p.spec.lag_tau_s();
  // Explicit update is only adequate well below the tracking constant.  The
  // relative slack keeps the dt == tau/2 boundary inclusive under rounding.
  if (!(dt > 0.0) || dt > 0.5 * tau * (1.0 + 1e-9))
    throw std::invalid_argument(p.id + ": dt " + std::to_string(dt) +
                                " too coarse for tau " + std::to_string(tau));
  const Bounds b = class_bounds(s, p, s.p_freq_cmd_mw);
  const double request = s.p_cmd_mw + s.p_freq_cmd_mw;
  const double target = std::clamp(request, b.lo, b.hi);
  s.saturated = std::abs(target - request) > 1e-9;

  double p_next = s.p_out_mw + (dt / tau) * (target - s.p_out_mw);
  // The resource cap is physical: a drop in availability takes effect at
  // once instead of waiting out the lag.
  p_next = std::clamp(p_next, b.lo, b.hi);
  if (std::abs(p_next - (s.p_out_mw + (dt / tau) * (target - s.p_out_mw))) > 1e-12)
    s.saturated = true;

  const DispatchClass c = dispatch_class(p.spec.tech);
  if (c == DispatchClass::b_brief_overshoot) {
    // Budget drains second-for-second while above the availability cap and
    // recovers at the same rate while genuinely below it; sitting pinned at
    // the cap does neither.
    if (p_next > s.p_avail_mw + 1e-9) {
      s.overload_budget_s = std::max(0.0, s.overload_budget_s - dt);
      if (s.overload_budget_s <= 0.0) {
        p_next = std::min(p_next, s.p_avail_mw);
        s.saturated = true;
      }
    } else if (p_next < s.p_avail_mw - 1e-9) {
      s.overload_budget_s =
          std::min(p.overload_budget_max_s, s.overload_budget_s + dt);
    }
  }
  if (c == DispatchClass::c_storage_backed) {
    // The resource recharges storage; output draws from it.
    double inflow_mw = s.p_avail_mw;
    double de = (inflow_mw - p_next) * dt / 3600.0;
    double e = s.energy_stored_mwh + de;
    if (e < 0.0) {
      // Storage empty: output falls back to what the resource provides.
      p_next = std::min(p_next, inflow_mw + s.energy_stored_mwh * 3600.0 / dt);
      e = 0.0;
      s.saturated = true;
    }
    s.energy_stored_mwh = std::min(e, p.storage_capacity_mwh);
  } else if (c == DispatchClass::e_bidirectional) {
    double e = s.energy_stored_mwh - p_next * dt / 3600.0;
    if (e < 0.0) {
      p_next = s.energy_stored_mwh * 3600.0 / dt;
      e = 0.0;
      s.saturated = true;
    } else if (e > p.storage_capacity_mwh) {
      p_next -= (e - p.storage_capacity_mwh) * 3600.0 / dt;
      e = p.storage_capacity_mwh;
      s.saturated = true;
    }
    s.energy_stored_mwh = e;
  }
  s.p_out_mw = p_next;
  return s;
}

UnitState set_availability(UnitState s, double p_avail_mw) {
  s.p_avail_mw = std::max(0.0, p_avail_mw);
  return s;
}

Headroom headroom(const UnitState& s, const UnitParams& p) {
  if (!s.online) return {0.0, 0.0};
  // Full reserve release is available to the frequency-service channel.
  const Bounds b = class_bounds(s, p, p.rating_mw);
  Headroom h;
  h.up_mw = std::max(0.0, b.hi - s.p_out_mw);
  h.down_mw = std::max(0.0, s.p_out_mw - b.lo);
  return h;
}

Headroom service_band(const UnitState& s, const UnitParams& p) {
  if (!s.online) return {0.0, 0.0};
  const Bounds b = class_bounds(s, p, p.rating_mw);
  Headroom h;
  h.up_mw = std::max(0.0, b.hi - s.p_cmd_mw);
  h.down_mw = std::max(0.0, s.p_cmd_mw - b.lo);
  return h;
}

}  // namespace dvpp::unit
