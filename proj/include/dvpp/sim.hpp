#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvpp/coordination.hpp"
#include "dvpp/events.hpp"
#include "dvpp/scenario.hpp"

namespace dvpp::sim {

struct NoDisturbanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Multi-rate schedule and engine options. The four layer periods must nest as
// integer multiples with at least a decade between neighbours, so each layer
// can treat the faster one underneath as settled.
struct SimConfig {
  double dt_device_s = 0.010;
  double dt_freq_s = 0.100;
  double dt_redispatch_s = 60.0;
  double dt_market_s = 3600.0;
  double duration_s = 60.0;
  double trace_sample_s = 0.100;
  std::uint64_t seed = 0;

  bool redispatch_enabled = true;       // schedule-restoration layer on/off
  double redispatch_threshold_frac = 0.05;  // availability move that triggers
  double broadcast_timeout_s = 0.5;
  bool grid_forming_fallback = false;   // survive an all-converter grid

  // Ornstein-Uhlenbeck perturbation of source availability (wind/solar pool
  // units). sigma = 0 keeps every run noise-free; the seed only feeds this.
  double availability_noise_sigma_mw = 0.0;
  double availability_noise_tau_s = 30.0;

  void validate() const;  // throws std::invalid_argument
};

struct SimTrace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> event_log;     // one line per applied event
  double disturbance_time_s = -1.0;       // first applied event; < 0 = none
  double f_nominal_hz = 50.0;
  double unserved_energy_mwh = 0.0;       // integral of uncovered load

  int column(const std::string& name) const;  // -1 when absent
  std::string to_csv() const;
};

// Frequency-quality summary over the post-disturbance window.
struct Metrics {
  double nadir_hz = 0.0;            // max |delta_f|
  double rocof_max_hz_s = 0.0;      // max |df/dt| over one device tick
  double settling_time_s = 0.0;     // entry into the +-10% band around the
                                    // final deviation, never left again
  double steady_state_dev_hz = 0.0; // final deviation (signed)
  double unserved_energy_mwh = 0.0;
};

// Throws NoDisturbanceError when the trace carries no disturbance marker.
Metrics compute_metrics(const SimTrace& trace);

struct DispatchLogRow {
  double time_s = 0.0;
  std::string unit_id;
  double p_set_mw = 0.0;
  double reserve_mw = 0.0;   // dispatch margin left below the unit ceiling
  std::string status;        // held | restored | degraded
  double objective_eur = 0.0;  // pool schedule cost at this solve
};

struct SimResult {
  SimTrace trace;
  std::vector<DispatchLogRow> dispatch;
  std::vector<std::string> warnings;
};

std::string dispatch_csv(const std::vector<DispatchLogRow>& rows);
std::string metrics_csv(const Metrics& m);

// Run the scenario with the given aggregate specification (usually
// sc.pool_spec, possibly overridden) and scripted events. Deterministic:
// identical inputs give byte-identical traces. Each event is applied exactly
// once, at the first device tick at or after its timestamp.
//
// Per tick the layers act in fixed order - market, schedule restoration,
// frequency-service broadcast, device dynamics - and only the layers whose
// period divides the tick time run. Module errors propagate with the
// simulation time and last event attached.
SimResult run(const scenario::Scenario& sc, const coord::DvppSpec& spec,
              const std::vector<events::Event>& evs, const SimConfig& cfg);

}  // namespace dvpp::sim
