#include "dvpp/events.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace dvpp::events {

namespace {

bool kind_from_name(const std::string& name, Kind* out) {
  for (Kind k : {Kind::unit_trip, Kind::availability_change, Kind::load_step,
                 Kind::line_outage, Kind::spec_change}) {
    if (name == kind_name(k)) {
      *out = k;
      return true;
    }
  }
  return false;
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::unit_trip: return "unit_trip";
    case Kind::availability_change: return "availability_change";
    case Kind::load_step: return "load_step";
    case Kind::line_outage: return "line_outage";
    case Kind::spec_change: return "spec_change";
  }
  return "unit_trip";
}

std::string Event::describe() const {
  std::ostringstream os;
  os << kind_name(kind);
  switch (kind) {
    case Kind::unit_trip: os << " " << unit_id; break;
    case Kind::availability_change:
      os << " " << unit_id << " -> " << value_mw << " MW";
      break;
    case Kind::load_step: os << " bus " << bus << " " << delta_mw << " MW"; break;
    case Kind::line_outage: os << " line " << from << "-" << to; break;
    case Kind::spec_change:
      os << " droop=" << droop_d << " inertia=" << inertia_h;
      break;
  }
  return os.str();
}

std::vector<Event> from_document(const textio::Document& doc) {
  const std::string& src = doc.source;
  const textio::Section* sec = doc.find("events");
  if (!sec) throw textio::ParseError(src + ": missing [events] section");

  std::vector<Event> out;
  Event* cur = nullptr;
  bool have_time = false;
  for (const auto& e : sec->entries) {
    if (e.key == "event") {
      if (cur && !have_time)
        textio::fail_at(src, cur->source_line, "event is missing 'time_s'");
      Event ev;
      if (!kind_from_name(e.value, &ev.kind))
        textio::fail_at(src, e.line, "unknown event kind '" + e.value + "'");
      ev.source_line = e.line;
      out.push_back(ev);
      cur = &out.back();
      have_time = false;
      continue;
    }
    if (!cur) textio::fail_at(src, e.line, "expected 'event = <kind>' first");
    if (e.key == "time_s") {
      cur->time_s = textio::entry_double(e, src);
      if (cur->time_s < 0) textio::fail_at(src, e.line, "event time must be >= 0");
      have_time = true;
    } else if (e.key == "unit") {
      cur->unit_id = e.value;
    } else if (e.key == "bus") {
      cur->bus = static_cast<int>(textio::entry_long(e, src));
    } else if (e.key == "from") {
      cur->from = static_cast<int>(textio::entry_long(e, src));
    } else if (e.key == "to") {
      cur->to = static_cast<int>(textio::entry_long(e, src));
    } else if (e.key == "value_mw") {
      cur->value_mw = textio::entry_double(e, src);
    } else if (e.key == "delta_mw") {
      cur->delta_mw = textio::entry_double(e, src);
    } else if (e.key == "droop_d_pu") {
      cur->droop_d = textio::entry_double(e, src);
    } else if (e.key == "inertia_h_s") {
      cur->inertia_h = textio::entry_double(e, src);
    } else if (e.key == "filter_tau_s") {
      cur->filter_tau_s = textio::entry_double(e, src);
    } else {
      textio::fail_at(src, e.line, "unknown event key '" + e.key + "'");
    }
  }
  if (cur && !have_time)
    textio::fail_at(src, cur->source_line, "event is missing 'time_s'");

  // Kind-specific required fields.
  for (const auto& ev : out) {
    switch (ev.kind) {
      case Kind::unit_trip:
      case Kind::availability_change:
        if (ev.unit_id.empty())
          textio::fail_at(src, ev.source_line, "event needs 'unit = <id>'");
        break;
      case Kind::load_step:
        if (ev.bus == 0) textio::fail_at(src, ev.source_line, "event needs 'bus'");
        break;
      case Kind::line_outage:
        if (ev.from == 0 || ev.to == 0)
          textio::fail_at(src, ev.source_line, "event needs 'from' and 'to'");
        break;
      case Kind::spec_change:
        if (ev.droop_d < 0 && ev.inertia_h < 0 && ev.filter_tau_s < 0)
          textio::fail_at(src, ev.source_line, "spec_change changes nothing");
        break;
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const Event& a, const Event& b) { return a.time_s < b.time_s; });
  return out;
}

std::vector<Event> load_file(const std::string& path) {
  return from_document(textio::parse_file(path));
}

}  // namespace dvpp::events
