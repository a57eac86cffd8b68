#include "dvpp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "dvpp/frequency.hpp"
#include "dvpp/network.hpp"
#include "dvpp/redispatch.hpp"
#include "dvpp/units.hpp"

namespace dvpp::sim {

namespace {

bool integer_multiple(double slow, double fast) {
  const double r = slow / fast;
  return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Exact Ornstein-Uhlenbeck transition over one step: mean reversion to the
// anchor plus the stationary-consistent noise increment.
double ou_step(double value, double anchor, double tau_s, double sigma, double dt,
               std::mt19937_64& rng) {
  const double a = std::exp(-dt / tau_s);
  std::normal_distribution<double> n(0.0, 1.0);
  return anchor + (value - anchor) * a + sigma * std::sqrt(1.0 - a * a) * n(rng);
}

struct RtUnit {
  unit::UnitParams params;
  unit::UnitState state;
  int bus_pos = 0;  // position in network.buses
};

struct RtController {
  coord::LocalController lc;
  int unit = -1;  // index into the unit vector
};

}  // namespace

void SimConfig::validate() const {
  if (dt_device_s <= 0 || dt_device_s > 0.010 + 1e-12)
    throw std::invalid_argument("device step must be in (0, 10 ms]");
  if (duration_s <= 0) throw std::invalid_argument("duration must be positive");
  const double steps[] = {dt_device_s, dt_freq_s, dt_redispatch_s, dt_market_s};
  const char* names[] = {"device", "freq-service", "redispatch", "market"};
  for (int i = 0; i + 1 < 4; ++i) {
    if (steps[i + 1] < 10.0 * steps[i] - 1e-12)
      throw std::invalid_argument(std::string("layer periods must keep a decade: ") +
                                  names[i + 1] + " vs " + names[i]);
    if (!integer_multiple(steps[i + 1], steps[i]))
      throw std::invalid_argument(std::string("layer periods must nest: ") +
                                  names[i + 1] + " vs " + names[i]);
  }
  if (trace_sample_s <= 0 || !integer_multiple(trace_sample_s, dt_device_s))
    throw std::invalid_argument("trace sample must be a multiple of the device step");
  if (redispatch_threshold_frac < 0 || broadcast_timeout_s <= 0)
    throw std::invalid_argument("negative threshold or timeout");
  if (availability_noise_sigma_mw < 0 || availability_noise_tau_s <= 0)
    throw std::invalid_argument("bad availability noise parameters");
}

int SimTrace::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::string SimTrace::to_csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i)
    os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string dispatch_csv(const std::vector<DispatchLogRow>& rows) {
  std::ostringstream os;
  os << "time_s,unit_id,p_set_mw,reserve_mw,status,objective_eur\n";
  for (const auto& r : rows) {
    os << fmt(r.time_s) << "," << r.unit_id << "," << fmt(r.p_set_mw) << ","
       << fmt(r.reserve_mw) << "," << r.status << "," << fmt(r.objective_eur) << "\n";
  }
  return os.str();
}

std::string metrics_csv(const Metrics& m) {
  std::ostringstream os;
  os << "metric,value\n";
  os << "nadir_hz," << fmt(m.nadir_hz) << "\n";
  os << "rocof_max_hz_s," << fmt(m.rocof_max_hz_s) << "\n";
  os << "settling_time_s," << fmt(m.settling_time_s) << "\n";
  os << "steady_state_dev_hz," << fmt(m.steady_state_dev_hz) << "\n";
  os << "unserved_energy_mwh," << fmt(m.unserved_energy_mwh) << "\n";
  return os.str();
}

Metrics compute_metrics(const SimTrace& trace) {
  if (trace.disturbance_time_s < 0)
    throw NoDisturbanceError("trace carries no disturbance marker");
  const int t_col = trace.column("time_s");
  const int f_col = trace.column("delta_f_hz");
  const int r_col = trace.column("rocof_hz_s");
  if (t_col < 0 || f_col < 0)
    throw std::invalid_argument("trace lacks time_s/delta_f_hz columns");

  Metrics m;
  m.unserved_energy_mwh = trace.unserved_energy_mwh;
  double t_last = trace.disturbance_time_s;
  double f_last = 0.0;
  bool any = false;
  for (const auto& row : trace.rows) {
    if (row[t_col] < trace.disturbance_time_s) continue;
    any = true;
    t_last = row[t_col];
    f_last = row[f_col];
    m.nadir_hz = std::max(m.nadir_hz, std::abs(row[f_col]));
    if (r_col >= 0) m.rocof_max_hz_s = std::max(m.rocof_max_hz_s, std::abs(row[r_col]));
  }
  if (!any) throw NoDisturbanceError("no trace samples after the disturbance");
  m.steady_state_dev_hz = f_last;

  // First entry into the +-10% band around the final deviation that is never
  // left again.
  const double band = std::max(0.1 * std::abs(f_last), 1e-12);
  double entered = t_last;
  bool inside = false;
  for (const auto& row : trace.rows) {
    if (row[t_col] < trace.disturbance_time_s) continue;
    const bool in = std::abs(row[f_col] - f_last) <= band;
    if (in && !inside) entered = row[t_col];
    inside = in;
  }
  m.settling_time_s = inside ? entered - trace.disturbance_time_s
                             : t_last - trace.disturbance_time_s;
  return m;
}

SimResult run(const scenario::Scenario& sc, const coord::DvppSpec& spec,
              const std::vector<events::Event>& evs, const SimConfig& cfg) {
  cfg.validate();
  sc.validate();
  spec.validate();

  const double dt = cfg.dt_device_s;
  const double s_base = sc.network.s_base_mva;
  const long n_ticks = std::lround(cfg.duration_s / dt);
  const long freq_every = std::lround(cfg.dt_freq_s / dt);
  const long market_every = std::lround(cfg.dt_market_s / dt);
  const long sample_every = std::lround(cfg.trace_sample_s / dt);

  SimResult out;
  net::Network netw = sc.network;
  std::vector<bool> line_on(netw.lines.size(), true);

  // --- units -----------------------------------------------------------
  std::vector<RtUnit> units;
  units.reserve(sc.units.size());
  for (const auto& u : sc.units) {
    RtUnit rt;
    rt.params = u.params;
    rt.state = unit::initial_state(u.params, u.p_set_mw, u.p_avail_mw,
                                   u.reserve_fraction, u.energy_mwh);
    rt.bus_pos = netw.bus_index(u.params.bus);
    units.push_back(std::move(rt));
  }
  auto unit_by_id = [&](const std::string& id) -> int {
    for (std::size_t i = 0; i < units.size(); ++i)
      if (units[i].params.id == id) return static_cast<int>(i);
    return -1;
  };
  std::vector<int> pool;  // indices of pool members, scenario order
  for (std::size_t i = 0; i < units.size(); ++i)
    if (units[i].params.dvpp_member) pool.push_back(static_cast<int>(i));

  // --- aggregate inertia ------------------------------------------------
  auto system_inertia = [&]() {
    std::vector<freq::InertiaContribution> contribs;
    for (const auto& rt : units)
      contribs.push_back({rt.params.spec, rt.state.online, rt.params.rating_mw,
                          rt.params.inertia_h_s});
    return freq::online_inertia(contribs, s_base);
  };

  freq::FreqModel fm;
  fm.h_sys_s = system_inertia();
  fm.d_load = sc.d_load;
  fm.f_nominal_hz = sc.f_nominal_hz;
  fm.grid_forming_fallback = cfg.grid_forming_fallback;

  // --- participation design and local controllers -----------------------
  coord::DesignOptions opts;
  opts.split_tau_s = sc.split_tau_s;
  // Broadcasts arrive as a zero-order hold; smooth over one broadcast period
  // so the compensator lead acts on the underlying signal, not on the risers.
  opts.input_smooth_tau_s = cfg.dt_freq_s;
  coord::DvppSpec cur_spec = spec;
  coord::BroadcastSignal bcast{0.0, 0.0, 0.0};

  auto candidates_now = [&]() {
    std::vector<coord::CandidateUnit> cand;
    for (int i : pool) {
      const auto& rt = units[i];
      if (!rt.state.online) continue;
      cand.push_back({rt.params.id, rt.params.spec.lag_tau_s(),
                      unit::headroom(rt.state, rt.params).up_mw});
    }
    return cand;
  };

  coord::FactorDesign design = coord::design_participation(candidates_now(), cur_spec, opts);
  std::vector<RtController> ctrls;
  auto rebuild_controllers = [&]() {
    ctrls.clear();
    const double u0 = -bcast.delta_f_hz / sc.f_nominal_hz;
    for (const auto& f : design.factors) {
      const int ui = unit_by_id(f.unit_id);
      if (ui < 0 || !units[ui].state.online) continue;
      RtController rc;
      rc.unit = ui;
      rc.lc = coord::make_local_controller(f, cur_spec, units[ui].params.spec.lag_tau_s(),
                                           dt, opts);
      rc.lc.f_nominal_hz = sc.f_nominal_hz;
      rc.lc.stale_timeout_s = cfg.broadcast_timeout_s;
      const double y0 = rc.lc.k(tf::Complex(0.0, 0.0)).real() * u0;
      rc.lc.filt.preload(u0, y0);
      rc.lc.u_smooth = u0;
      rc.lc.last_output_pu = y0;
      ctrls.push_back(std::move(rc));
    }
  };
  rebuild_controllers();
  if (design.degraded) out.warnings.push_back("participation design degraded: " + design.warning);

  // --- schedule restoration (redispatch layer) ---------------------------
  double dvpp_target = 0.0;
  for (int i : pool) dvpp_target += units[i].state.p_cmd_mw;

  redispatch::RedispatchTrigger trigger;
  trigger.period_s = cfg.dt_redispatch_s;
  trigger.availability_threshold_frac = cfg.redispatch_threshold_frac;
  for (int i : pool) trigger.pool_rating_mw += units[i].params.rating_mw;

  auto pool_avail = [&]() {
    double a = 0.0;
    for (int i : pool)
      if (units[i].state.online) a += units[i].state.p_avail_mw;
    return a;
  };
  double avail_at_solve = pool_avail();
  bool pool_member_failed = false;

  auto restore_schedule = [&](double t) {
    std::vector<int> on;
    for (int i : pool)
      if (units[i].state.online) on.push_back(i);
    if (on.empty()) return;

    std::vector<double> ceil_mw(on.size()), set_mw(on.size());
    double total = 0.0;
    bool changed = false;
    for (std::size_t j = 0; j < on.size(); ++j) {
      const auto& rt = units[on[j]];
      ceil_mw[j] = unit::dispatch_ceiling(rt.state, rt.params);
      set_mw[j] = std::clamp(rt.state.p_cmd_mw, 0.0, ceil_mw[j]);
      if (set_mw[j] != rt.state.p_cmd_mw) changed = true;
      total += set_mw[j];
    }
    double gap = dvpp_target - total;
    bool degraded = false;
    if (std::abs(gap) > 1e-9) {
      double room = 0.0;
      for (std::size_t j = 0; j < on.size(); ++j)
        room += gap > 0 ? ceil_mw[j] - set_mw[j] : set_mw[j];
      if (room < std::abs(gap) - 1e-9) degraded = true;
      const double frac = room > 0 ? std::min(1.0, std::abs(gap) / room) : 0.0;
      for (std::size_t j = 0; j < on.size(); ++j) {
        const double move = frac * (gap > 0 ? ceil_mw[j] - set_mw[j] : -set_mw[j]);
        if (std::abs(move) > 0) changed = true;
        set_mw[j] += move;
      }
    }
    double objective = 0.0;
    for (std::size_t j = 0; j < on.size(); ++j)
      objective += units[on[j]].params.cost_eur_mwh * set_mw[j];
    const char* status = degraded ? "degraded" : (changed ? "restored" : "held");
    for (std::size_t j = 0; j < on.size(); ++j) {
      units[on[j]].state.p_cmd_mw = set_mw[j];
      out.dispatch.push_back({t, units[on[j]].params.id, set_mw[j],
                              ceil_mw[j] - set_mw[j], status, objective});
    }
    if (degraded)
      out.warnings.push_back("t=" + fmt(t) + ": pool headroom short of schedule target");
    trigger.mark_solved(t);
    avail_at_solve = pool_avail();
    pool_member_failed = false;
  };

  // --- trace layout -------------------------------------------------------
  SimTrace& trace = out.trace;
  trace.f_nominal_hz = sc.f_nominal_hz;
  trace.columns = {"time_s", "delta_f_hz", "rocof_hz_s"};
  for (const auto& rt : units) trace.columns.push_back("p_" + rt.params.id + "_mw");
  for (const auto& rt : units) {
    if (rt.params.dvpp_member) {
      trace.columns.push_back("dp_" + rt.params.id + "_pu");
      trace.columns.push_back("sat_" + rt.params.id);
    }
  }
  for (const auto& l : sc.network.lines)
    trace.columns.push_back("flow_" + std::to_string(l.from) + "_" +
                            std::to_string(l.to) + "_mw");
  trace.columns.push_back("dvpp_dp_mw");

  auto active_network = [&]() {
    net::Network n = netw;
    n.lines.clear();
    for (std::size_t l = 0; l < netw.lines.size(); ++l)
      if (line_on[l]) n.lines.push_back(netw.lines[l]);
    return n;
  };
  net::Network cur_net = active_network();

  auto sample_row = [&](double t, double rocof) {
    std::vector<double> row;
    row.reserve(trace.columns.size());
    row.push_back(t);
    row.push_back(fm.delta_f_hz);
    row.push_back(rocof);
    for (const auto& rt : units) row.push_back(rt.state.online ? rt.state.p_out_mw : 0.0);
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (!units[i].params.dvpp_member) continue;
      double dp = 0.0, sat = 0.0;
      for (const auto& rc : ctrls) {
        if (rc.unit == static_cast<int>(i)) {
          dp = rc.lc.last_output_pu;
          sat = (rc.lc.saturated || rc.lc.stale) ? 1.0 : 0.0;
        }
      }
      row.push_back(dp);
      row.push_back(sat);
    }
    Eigen::VectorXd inj = Eigen::VectorXd::Zero(static_cast<int>(netw.buses.size()));
    for (std::size_t b = 0; b < netw.buses.size(); ++b)
      inj(static_cast<int>(b)) -= netw.buses[b].load_mw;
    for (const auto& rt : units)
      if (rt.state.online) inj(rt.bus_pos) += rt.state.p_out_mw;
    const net::DcFlow flow = net::solve_dc(cur_net, inj);
    int active = 0;
    for (std::size_t l = 0; l < netw.lines.size(); ++l)
      row.push_back(line_on[l] ? flow.flow_mw(active++) : 0.0);
    double dvpp_dp = 0.0;
    for (int i : pool)
      if (units[i].state.online) dvpp_dp += units[i].state.p_freq_cmd_mw;
    row.push_back(dvpp_dp);
    trace.rows.push_back(std::move(row));
  };

  // --- events -------------------------------------------------------------
  std::vector<events::Event> script = evs;  // already sorted by the parser
  std::stable_sort(script.begin(), script.end(),
                   [](const events::Event& a, const events::Event& b) {
                     return a.time_s < b.time_s;
                   });
  std::size_t next_event = 0;
  std::string last_event = "none";

  auto apply_event = [&](const events::Event& ev, double t) {
    last_event = ev.describe();
    trace.event_log.push_back("applied_t=" + fmt(t) + " scheduled_t=" + fmt(ev.time_s) +
                              " " + ev.describe());
    if (trace.disturbance_time_s < 0) trace.disturbance_time_s = t;
    switch (ev.kind) {
      case events::Kind::unit_trip: {
        const int ui = unit_by_id(ev.unit_id);
        if (ui < 0) throw std::invalid_argument("unit_trip: unknown unit '" + ev.unit_id + "'");
        if (!units[ui].state.online) break;
        units[ui].state.online = false;
        units[ui].state.p_out_mw = 0.0;
        units[ui].state.p_freq_cmd_mw = 0.0;
        fm.h_sys_s = system_inertia();
        if (units[ui].params.dvpp_member) {
          pool_member_failed = true;
          std::map<std::string, double> hr;
          for (int i : pool) {
            if (i == ui || !units[i].state.online) continue;
            hr[units[i].params.id] = unit::headroom(units[i].state, units[i].params).up_mw;
          }
          design = coord::renormalize_on_failure(design, ev.unit_id, &hr);
          rebuild_controllers();
          if (design.degraded)
            out.warnings.push_back("t=" + fmt(t) + ": " + design.warning);
        }
        break;
      }
      case events::Kind::availability_change: {
        const int ui = unit_by_id(ev.unit_id);
        if (ui < 0)
          throw std::invalid_argument("availability_change: unknown unit '" + ev.unit_id + "'");
        units[ui].state = unit::set_availability(units[ui].state, ev.value_mw);
        break;
      }
      case events::Kind::load_step: {
        const int b = netw.bus_index(ev.bus);
        netw.buses[b].load_mw += ev.delta_mw;
        cur_net.buses[b].load_mw += ev.delta_mw;
        break;
      }
      case events::Kind::line_outage: {
        const int l = netw.find_line(ev.from, ev.to);
        if (l < 0)
          throw std::invalid_argument("line_outage: no line " + std::to_string(ev.from) +
                                      "-" + std::to_string(ev.to));
        line_on[l] = false;
        cur_net = active_network();
        if (!cur_net.connected())
          throw net::SingularNetworkError("line outage " + std::to_string(ev.from) + "-" +
                                          std::to_string(ev.to) + " at t=" + fmt(t) +
                                          " splits the network");
        break;
      }
      case events::Kind::spec_change: {
        coord::DvppSpec ns = cur_spec;
        if (ev.droop_d >= 0) ns.droop_d = ev.droop_d;
        if (ev.inertia_h >= 0) ns.inertia_h = ev.inertia_h;
        if (ev.filter_tau_s >= 0) ns.filter_tau_s = ev.filter_tau_s;
        ns.validate();
        cur_spec = ns;
        design = coord::design_participation(candidates_now(), cur_spec, opts);
        rebuild_controllers();
        break;
      }
    }
  };

  // --- availability noise ---------------------------------------------------
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> noise_anchor(units.size(), 0.0);
  std::vector<int> noisy;  // pool units whose source wanders (classes A/B)
  if (cfg.availability_noise_sigma_mw > 0) {
    for (int i : pool) {
      const auto c = unit::dispatch_class(units[i].params.spec.tech);
      if (c == unit::DispatchClass::a_hard_limited ||
          c == unit::DispatchClass::b_brief_overshoot) {
        noisy.push_back(i);
        noise_anchor[i] = units[i].state.p_avail_mw;
      }
    }
  }

  double last_rocof = 0.0;

  try {
    for (long k = 0; k <= n_ticks; ++k) {
      const double t = static_cast<double>(k) * dt;

      while (next_event < script.size() && script[next_event].time_s <= t + 1e-9) {
        apply_event(script[next_event], t);
        ++next_event;
      }

      if (k < n_ticks) {
        if (k % market_every == 0) {
          // Market layer: the committed pool schedule stays what the scenario
          // (or a future offer run) set; nothing to refresh inside one run.
        }
        if (cfg.redispatch_enabled &&
            trigger.should_solve(t, std::abs(pool_avail() - avail_at_solve),
                                 pool_member_failed)) {
          restore_schedule(t);
        }
        if (k % freq_every == 0) bcast = {fm.delta_f_hz, t, 0.0};
      }

      if (k % sample_every == 0 || k == n_ticks) sample_row(t, last_rocof);
      if (k == n_ticks) break;

      // Device layer: local controllers, unit dynamics, then the shared
      // frequency state.
      for (auto& rc : ctrls) {
        auto& rt = units[rc.unit];
        if (!rt.state.online) continue;
        coord::BroadcastSignal b = bcast;
        b.staleness_s = t - bcast.timestamp_s;
        const unit::Headroom hr = unit::service_band(rt.state, rt.params);
        const double dp_pu = coord::local_control_step(rc.lc, b, hr.up_mw / s_base,
                                                       hr.down_mw / s_base);
        rt.state.p_freq_cmd_mw = dp_pu * s_base;
      }
      if (!noisy.empty() && (k % freq_every == 0)) {
        for (int i : noisy) {
          const double a = ou_step(units[i].state.p_avail_mw, noise_anchor[i],
                                   cfg.availability_noise_tau_s,
                                   cfg.availability_noise_sigma_mw, cfg.dt_freq_s, rng);
          units[i].state = unit::set_availability(units[i].state, a);
        }
      }
      double p_gen = 0.0, p_load = 0.0;
      for (auto& rt : units) {
        rt.state = unit::step_unit(rt.state, rt.params, dt);
        if (rt.state.online) p_gen += rt.state.p_out_mw;
      }
      for (const auto& b : netw.buses) p_load += b.load_mw;
      const double f_prev = fm.delta_f_hz;
      fm = freq::step_frequency(fm, p_gen / s_base, p_load / s_base, dt);
      last_rocof = (fm.delta_f_hz - f_prev) / dt;
      trace.unserved_energy_mwh += std::max(0.0, p_load - p_gen) * dt / 3600.0;
    }
  } catch (const NoDisturbanceError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(e.what()) + " [last applied event: " +
                             last_event + "]");
  }

  return out;
}

}  // namespace dvpp::sim
