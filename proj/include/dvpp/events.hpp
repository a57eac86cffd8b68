#pragma once

#include <string>
#include <vector>

#include "dvpp/textfile.hpp"

namespace dvpp::events {

enum class Kind { unit_trip, availability_change, load_step, line_outage, spec_change };

const char* kind_name(Kind k);

// One scripted disturbance. Fields beyond (time, kind) are kind-specific:
//   unit_trip            unit_id
//   availability_change  unit_id, value_mw (new availability)
//   load_step            bus, delta_mw (added to the bus load)
//   line_outage          from, to
//   spec_change          droop_d_pu / inertia_h_s / filter_tau_s (< 0 = keep)
struct Event {
  double time_s = 0.0;
  Kind kind = Kind::unit_trip;
  std::string unit_id;
  int bus = 0;
  int from = 0;
  int to = 0;
  double value_mw = 0.0;
  double delta_mw = 0.0;
  double droop_d = -1.0;
  double inertia_h = -1.0;
  double filter_tau_s = -1.0;
  int source_line = 0;

  std::string describe() const;
};

// Parse an [events] document; result is sorted by time (stable for ties).
std::vector<Event> from_document(const textio::Document& doc);
std::vector<Event> load_file(const std::string& path);

}  // namespace dvpp::events
