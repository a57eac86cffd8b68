// Command-line front end: scenario simulation, rotor-strategy step
// experiments, robust day-ahead offers, planning redispatch and input
// validation.
//
// Exit codes: 0 success, 1 runtime/model error, 2 missing input,
// 3 validation error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dvpp/events.hpp"
#include "dvpp/market.hpp"
#include "dvpp/redispatch.hpp"
#include "dvpp/scenario.hpp"
#include "dvpp/sim.hpp"
#include "dvpp/turbine.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kMissingInput = 2;
constexpr int kValidationError = 3;

struct MissingInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// --scenario accepts a built-in name (type1, type2_south, type2_north, type3)
// or a path to a scenario file.
dvpp::scenario::Scenario load_scenario_arg(const std::string& arg) {
  dvpp::scenario::Kind kind;
  if (dvpp::scenario::kind_from_name(arg, &kind)) return dvpp::scenario::builtin(kind);
  if (!fs::exists(arg)) throw MissingInputError("scenario file not found: " + arg);
  return dvpp::scenario::load_file(arg);
}

std::vector<dvpp::events::Event> load_events_arg(const std::string& arg) {
  if (!fs::exists(arg)) throw MissingInputError("events file not found: " + arg);
  return dvpp::events::load_file(arg);
}

// Cross-checks that a script only references things the scenario has.
void check_events_against(const dvpp::scenario::Scenario& sc,
                          const std::vector<dvpp::events::Event>& evs) {
  for (const auto& ev : evs) {
    switch (ev.kind) {
      case dvpp::events::Kind::unit_trip:
      case dvpp::events::Kind::availability_change:
        if (!sc.find_unit(ev.unit_id))
          throw std::invalid_argument("event references unknown unit '" + ev.unit_id + "'");
        break;
      case dvpp::events::Kind::load_step:
        sc.network.bus_index(ev.bus);
        break;
      case dvpp::events::Kind::line_outage:
        if (sc.network.find_line(ev.from, ev.to) < 0)
          throw std::invalid_argument("event references unknown line " +
                                      std::to_string(ev.from) + "-" + std::to_string(ev.to));
        break;
      case dvpp::events::Kind::spec_change:
        break;
    }
  }
}

dvpp::market::UncertainProfile parse_market_profile(const dvpp::textio::Document& doc,
                                                    dvpp::market::PortfolioSummary* pf) {
  using dvpp::textio::entry_double;
  const auto* port = doc.find("portfolio");
  if (!port) throw dvpp::textio::ParseError(doc.source + ": missing [portfolio] section");
  dvpp::market::UncertainProfile profile;
  for (const auto& e : port->entries) {
    if (e.key == "gamma") profile.gamma = entry_double(e, doc.source);
    else if (e.key == "penalty_eur_mwh") pf->penalty_eur_mwh = entry_double(e, doc.source);
    else if (e.key == "firm_mw") pf->firm_mw = entry_double(e, doc.source);
    else if (e.key == "storage_power_mw") pf->storage_power_mw = entry_double(e, doc.source);
    else if (e.key == "storage_energy_mwh") pf->storage_energy_mwh = entry_double(e, doc.source);
    else if (e.key == "storage_initial_mwh") pf->storage_initial_mwh = entry_double(e, doc.source);
    else dvpp::textio::fail_at(doc.source, e.line, "unknown portfolio key '" + e.key + "'");
  }
  const auto* periods = doc.find("periods");
  if (!periods) throw dvpp::textio::ParseError(doc.source + ": missing [periods] section");
  dvpp::market::PeriodInterval cur;
  bool open = false;
  for (const auto& e : periods->entries) {
    if (e.key == "period") {
      if (open) profile.periods.push_back(cur);
      cur = {};
      open = true;
    } else if (!open) {
      dvpp::textio::fail_at(doc.source, e.line, "expected 'period = <n>' first");
    } else if (e.key == "price_low_eur") {
      cur.price_low_eur = entry_double(e, doc.source);
    } else if (e.key == "price_high_eur") {
      cur.price_high_eur = entry_double(e, doc.source);
    } else if (e.key == "avail_low_mw") {
      cur.avail_low_mw = entry_double(e, doc.source);
    } else if (e.key == "avail_high_mw") {
      cur.avail_high_mw = entry_double(e, doc.source);
    } else {
      dvpp::textio::fail_at(doc.source, e.line, "unknown period key '" + e.key + "'");
    }
  }
  if (open) profile.periods.push_back(cur);
  profile.validate();
  return profile;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& scenario_arg, const std::string& events_arg,
                 const std::string& out_dir, double duration, std::uint64_t seed,
                 double spec_droop, double spec_inertia, double dt_device,
                 double trace_sample, bool no_redispatch, bool grid_forming,
                 double noise_sigma) {
  dvpp::scenario::Scenario sc = load_scenario_arg(scenario_arg);
  std::vector<dvpp::events::Event> evs;
  if (!events_arg.empty()) {
    evs = load_events_arg(events_arg);
    check_events_against(sc, evs);
  }
  dvpp::coord::DvppSpec spec = sc.pool_spec;
  if (spec_droop >= 0) spec.droop_d = spec_droop;
  if (spec_inertia >= 0) spec.inertia_h = spec_inertia;

  dvpp::sim::SimConfig cfg;
  cfg.duration_s = duration;
  cfg.seed = seed;
  if (dt_device > 0) cfg.dt_device_s = dt_device;
  if (trace_sample > 0) cfg.trace_sample_s = trace_sample;
  cfg.redispatch_enabled = !no_redispatch;
  cfg.grid_forming_fallback = grid_forming;
  cfg.availability_noise_sigma_mw = noise_sigma;

  const dvpp::sim::SimResult res = dvpp::sim::run(sc, spec, evs, cfg);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "trace.csv", res.trace.to_csv());
  write_file(fs::path(out_dir) / "dispatch.csv", dvpp::sim::dispatch_csv(res.dispatch));

  std::ostringstream echo;
  echo << "scenario = " << dvpp::scenario::kind_name(sc.kind) << " (" << sc.name << ")\n"
       << "events = " << (events_arg.empty() ? "none" : events_arg) << "\n"
       << "duration_s = " << fmt(cfg.duration_s) << "\n"
       << "dt_device_s = " << fmt(cfg.dt_device_s) << "\n"
       << "dt_freq_s = " << fmt(cfg.dt_freq_s) << "\n"
       << "dt_redispatch_s = " << fmt(cfg.dt_redispatch_s) << "\n"
       << "dt_market_s = " << fmt(cfg.dt_market_s) << "\n"
       << "trace_sample_s = " << fmt(cfg.trace_sample_s) << "\n"
       << "seed = " << cfg.seed << "\n"
       << "droop_d_pu = " << fmt(spec.droop_d) << "\n"
       << "inertia_h_s = " << fmt(spec.inertia_h) << "\n"
       << "filter_tau_s = " << fmt(spec.filter_tau_s) << "\n"
       << "redispatch_enabled = " << (cfg.redispatch_enabled ? "true" : "false") << "\n"
       << "grid_forming_fallback = " << (cfg.grid_forming_fallback ? "true" : "false") << "\n"
       << "availability_noise_sigma_mw = " << fmt(cfg.availability_noise_sigma_mw) << "\n";
  write_file(fs::path(out_dir) / "config.txt", echo.str());

  std::ostringstream log;
  for (const auto& line : res.trace.event_log) log << line << "\n";
  write_file(fs::path(out_dir) / "events.log", log.str());

  std::cout << "trace rows: " << res.trace.rows.size() << "\n";
  for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
  if (res.trace.disturbance_time_s >= 0) {
    const dvpp::sim::Metrics m = dvpp::sim::compute_metrics(res.trace);
    write_file(fs::path(out_dir) / "metrics.csv", dvpp::sim::metrics_csv(m));
    std::cout << "nadir_hz = " << fmt(m.nadir_hz) << "\n"
              << "rocof_max_hz_s = " << fmt(m.rocof_max_hz_s) << "\n"
              << "settling_time_s = " << fmt(m.settling_time_s) << "\n"
              << "steady_state_dev_hz = " << fmt(m.steady_state_dev_hz) << "\n"
              << "unserved_energy_mwh = " << fmt(m.unserved_energy_mwh) << "\n";
  } else {
    std::cout << "no disturbance in this run; metrics skipped\n";
  }
  std::cout << "wrote " << out_dir << "\n";
  return kOk;
}

int cmd_step_experiment(const std::string& strategy_arg, const std::string& out_dir) {
  dvpp::turbine::Strategy strategy;
  if (strategy_arg == "os1") {
    strategy = dvpp::turbine::Strategy::os1;
  } else if (strategy_arg == "os2") {
    strategy = dvpp::turbine::Strategy::os2;
  } else {
    throw std::invalid_argument("--strategy must be os1 or os2");
  }
  dvpp::turbine::TurbineParams params;
  const dvpp::turbine::StepExperiment exp =
      dvpp::turbine::run_step_experiment(params, strategy);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / ("steps_" + strategy_arg + ".csv"),
             dvpp::turbine::experiment_csv(exp));

  std::ostringstream sum;
  sum << "v_mps,dp_ref_pu,infeasible,final_value_pu,settling_time_s,max_speed_dev_pu\n";
  for (const auto& tr : exp.traces) {
    sum << fmt(tr.v_mps) << "," << fmt(tr.dp_ref_pu) << "," << (tr.infeasible ? 1 : 0)
        << "," << fmt(tr.final_value) << "," << fmt(tr.settling_time_s) << ","
        << fmt(tr.max_speed_dev_pu) << "\n";
  }
  write_file(fs::path(out_dir) / ("summary_" + strategy_arg + ".csv"), sum.str());

  int infeasible = 0;
  for (const auto& tr : exp.traces) infeasible += tr.infeasible ? 1 : 0;
  std::cout << "strategy " << strategy_arg << ": " << exp.traces.size() << " step traces, "
            << infeasible << " demand-limited\n"
            << "wrote " << out_dir << "\n";
  return kOk;
}

int cmd_offer(const std::string& market_arg, const std::string& out_dir, int samples,
              std::uint64_t seed) {
  if (!fs::exists(market_arg)) throw MissingInputError("market file not found: " + market_arg);
  dvpp::market::PortfolioSummary portfolio;
  const dvpp::market::UncertainProfile profile =
      parse_market_profile(dvpp::textio::parse_file(market_arg), &portfolio);

  const dvpp::market::OfferSchedule offer =
      dvpp::market::solve_robust_offer(profile, portfolio);

  // Certificate: no sampled realization from the uncertainty set may fall
  // below the declared worst case.
  double min_rev = offer.worst_case_revenue_eur;
  bool certified = true;
  for (int i = 0; i < samples; ++i) {
    const auto real = dvpp::market::sample_realization(profile, seed, i);
    const auto s = dvpp::market::settle(offer, real.price_eur, real.avail_mw);
    min_rev = std::min(min_rev, s.revenue_eur);
    if (s.revenue_eur < offer.worst_case_revenue_eur - 1e-6) certified = false;
  }

  std::ostringstream csv;
  csv << "period,offer_mw,deliverable_base_mw\n";
  for (std::size_t t = 0; t < offer.offer_mw.size(); ++t)
    csv << (t + 1) << "," << fmt(offer.offer_mw[t]) << ","
        << fmt(offer.deliverable_base_mw[t]) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "offer.csv", csv.str());
  }

  std::cout << csv.str();
  std::cout << "worst_case_revenue_eur = " << fmt(offer.worst_case_revenue_eur) << "\n";
  std::cout << "certificate_samples = " << samples << "\n";
  std::cout << "certificate_min_revenue_eur = " << fmt(min_rev) << "\n";
  std::cout << "certified = " << (certified ? "true" : "false") << "\n";
  if (!out_dir.empty()) std::cout << "wrote " << out_dir << "\n";
  return certified ? kOk : kRuntimeError;
}

int cmd_redispatch(const std::string& scenario_arg, const std::string& out_dir,
                   double target, double reserve, bool n1_lines,
                   const std::vector<std::string>& unit_outages) {
  const dvpp::scenario::Scenario sc = load_scenario_arg(scenario_arg);

  dvpp::redispatch::DispatchProblem prob;
  prob.network = sc.network;
  prob.reserve_requirement_mw = reserve;
  prob.fixed_injection_mw =
      Eigen::VectorXd::Zero(static_cast<int>(sc.network.buses.size()));
  for (std::size_t b = 0; b < sc.network.buses.size(); ++b)
    prob.fixed_injection_mw(static_cast<int>(b)) -= sc.network.buses[b].load_mw;

  double pool_set = 0.0;
  for (const auto& u : sc.units) {
    if (!u.params.dvpp_member) {
      prob.fixed_injection_mw(sc.network.bus_index(u.params.bus)) += u.p_set_mw;
      continue;
    }
    pool_set += u.p_set_mw;
    const auto st = dvpp::unit::initial_state(u.params, u.p_set_mw, u.p_avail_mw,
                                              u.reserve_fraction, u.energy_mwh);
    prob.units.push_back({u.params.id, u.params.bus, u.params.cost_eur_mwh, 0.0,
                          dvpp::unit::dispatch_ceiling(st, u.params)});
  }
  prob.target_mw = target >= 0 ? target : pool_set;
  if (n1_lines) {
    for (std::size_t l = 0; l < sc.network.lines.size(); ++l)
      prob.line_contingencies.push_back(static_cast<int>(l));
  }
  for (const auto& id : unit_outages) {
    bool member = false;
    for (const auto& u : prob.units) member = member || u.id == id;
    if (!member) throw std::invalid_argument("unit outage '" + id + "' is not a pool unit");
    prob.unit_contingencies.push_back(id);
  }

  const dvpp::redispatch::DispatchSolution sol = dvpp::redispatch::solve_redispatch(prob);

  const char* status = sol.status == dvpp::redispatch::DispatchStatus::optimal
                           ? "optimal"
                           : (sol.status == dvpp::redispatch::DispatchStatus::degraded
                                  ? "degraded"
                                  : "infeasible");
  std::cout << "status = " << status << "\n";
  if (sol.status == dvpp::redispatch::DispatchStatus::infeasible) {
    for (const auto& b : sol.binding) std::cout << "unsatisfiable: " << b << "\n";
    return kRuntimeError;
  }
  std::ostringstream csv;
  csv << "unit_id,p_set_mw,reserve_mw\n";
  for (const auto& u : prob.units) {
    csv << u.id << "," << fmt(sol.p_set_mw.at(u.id)) << ","
        << fmt(sol.reserve_mw.count(u.id) ? sol.reserve_mw.at(u.id) : 0.0) << "\n";
  }
  std::cout << csv.str();
  std::cout << "objective_eur_per_h = " << fmt(sol.objective_eur_per_h) << "\n";
  for (const auto& s : sol.skipped) std::cout << "skipped contingency: " << s << "\n";

  const auto report = dvpp::redispatch::validate_dispatch(prob, sol);
  std::cout << "independent check = " << (report.feasible ? "pass" : "FAIL") << "\n";
  for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "redispatch.csv", csv.str());
    std::cout << "wrote " << out_dir << "\n";
  }
  return report.feasible ? kOk : kRuntimeError;
}

int cmd_validate(const std::string& scenario_arg, const std::string& events_arg) {
  const dvpp::scenario::Scenario sc = load_scenario_arg(scenario_arg);
  std::cout << "scenario " << dvpp::scenario::kind_name(sc.kind) << " '" << sc.name
            << "': " << sc.network.buses.size() << " buses, " << sc.network.lines.size()
            << " lines, " << sc.units.size() << " units (" << sc.pool_members().size()
            << " pool members), load " << fmt(sc.total_load_mw()) << " MW\n";
  if (!events_arg.empty()) {
    const auto evs = load_events_arg(events_arg);
    check_events_against(sc, evs);
    std::cout << "events: " << evs.size() << " entries, all references resolve\n";
  }
  std::cout << "validation passed\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual power plant pool simulator"};
  app.require_subcommand(1);

  std::string scenario_arg, events_arg, out_dir, strategy_arg = "os1", market_arg;
  double duration = 60.0, spec_droop = -1.0, spec_inertia = -1.0;
  double dt_device = -1.0, trace_sample = -1.0, target = -1.0, reserve = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int samples = 1000;
  bool no_redispatch = false, grid_forming = false, n1_lines = false;
  std::vector<std::string> unit_outages;

  auto* sim = app.add_subcommand("simulate", "Run a scenario with scripted events");
  sim->add_option("--scenario", scenario_arg, "Built-in name or scenario file")->required();
  sim->add_option("--events", events_arg, "Event script file");
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--duration", duration, "Simulated seconds (default 60)");
  sim->add_option("--seed", seed, "Availability-noise seed");
  sim->add_option("--spec-droop", spec_droop, "Override pool droop (pu)");
  sim->add_option("--spec-inertia", spec_inertia, "Override pool inertia (s)");
  sim->add_option("--dt-device", dt_device, "Device step (s)");
  sim->add_option("--trace-sample", trace_sample, "Trace sample period (s)");
  sim->add_flag("--no-redispatch", no_redispatch, "Disable the restoration layer");
  sim->add_flag("--grid-forming", grid_forming, "Grid-forming fallback at zero inertia");
  sim->add_option("--noise-sigma", noise_sigma, "Availability noise sigma (MW)");

  auto* step = app.add_subcommand("step-experiment", "Rotor-strategy step responses");
  step->add_option("--strategy", strategy_arg, "os1 or os2")->required();
  step->add_option("--out", out_dir, "Output directory")->required();

  auto* offer = app.add_subcommand("offer", "Robust day-ahead offer");
  offer->add_option("--market", market_arg, "Market description file")->required();
  offer->add_option("--out", out_dir, "Output directory");
  offer->add_option("--samples", samples, "Certificate sample count");
  offer->add_option("--seed", seed, "Certificate sampler seed");

  auto* red = app.add_subcommand("redispatch", "Security-constrained pool dispatch");
  red->add_option("--scenario", scenario_arg, "Built-in name or scenario file")->required();
  red->add_option("--out", out_dir, "Output directory");
  red->add_option("--target", target, "Pool total (MW); default: scheduled sum");
  red->add_option("--reserve", reserve, "Total reserve floor (MW)");
  red->add_flag("--n1", n1_lines, "Include every single-line contingency");
  red->add_option("--unit-outage", unit_outages, "Pool unit outage case (repeatable)");

  auto* val = app.add_subcommand("validate", "Check scenario and event files");
  val->add_option("--scenario", scenario_arg, "Built-in name or scenario file")->required();
  val->add_option("--events", events_arg, "Event script file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(scenario_arg, events_arg, out_dir, duration, seed, spec_droop,
                          spec_inertia, dt_device, trace_sample, no_redispatch,
                          grid_forming, noise_sigma);
    if (step->parsed()) return cmd_step_experiment(strategy_arg, out_dir);
    if (offer->parsed()) return cmd_offer(market_arg, out_dir, samples, seed);
    if (red->parsed())
      return cmd_redispatch(scenario_arg, out_dir, target, reserve, n1_lines, unit_outages);
    if (val->parsed()) return cmd_validate(scenario_arg, events_arg);
  } catch (const MissingInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingInput;
  } catch (const dvpp::textio::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
