#include "dvpp/scenario.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dvpp::scenario {

namespace {

// ---------------------------------------------------------------------------
// Built-in study-case text. These strings are the single source of truth; the
// files shipped under scenarios/ are byte-identical copies (a test enforces
// this) and external files go through the same parser.
// ---------------------------------------------------------------------------

constexpr const char* kType1Text =
    R"(# Seven-bus island ring with a mixed hydro / wind / solar pool.
# One gas plant and one biogas plant run outside the pool.

[scenario]
kind = type1
name = island-ring
f_nominal_hz = 50
s_base_mva = 100
slack_bus = 1
d_load_pu = 1.0

[dvpp]
droop_d_pu = 25
inertia_h_s = 6
filter_tau_s = 0.08

[buses]
bus = 1
level = transmission
load_mw = 0

bus = 2
level = transmission
load_mw = 15

bus = 3
level = transmission
load_mw = 10

bus = 4
level = transmission
load_mw = 25

bus = 5
level = transmission
load_mw = 10

bus = 6
level = transmission
load_mw = 15

bus = 7
level = transmission
load_mw = 10

[lines]
line = 1 2
reactance_pu = 0.10
limit_mw = 60

line = 2 3
reactance_pu = 0.10
limit_mw = 60

line = 3 4
reactance_pu = 0.12
limit_mw = 60

line = 4 5
reactance_pu = 0.12
limit_mw = 60

line = 5 6
reactance_pu = 0.10
limit_mw = 60

line = 6 7
reactance_pu = 0.10
limit_mw = 60

line = 7 1
reactance_pu = 0.10
limit_mw = 60

line = 2 6
reactance_pu = 0.30
limit_mw = 40

[units]
unit = cc1
tech = CC_TPS
bus = 1
rating_mw = 60
response_time_s = 600
inertia_h_s = 5
cost_eur_mwh = 70
p_set_mw = 51
p_avail_mw = 60

unit = hyd1
tech = HYD
bus = 3
rating_mw = 30
response_time_s = 180
inertia_h_s = 4
cost_eur_mwh = 30
p_set_mw = 14
p_avail_mw = 30
pool_member = yes

unit = bio1
tech = BIO
bus = 4
rating_mw = 12
response_time_s = 900
inertia_h_s = 5
cost_eur_mwh = 55
p_set_mw = 10
p_avail_mw = 12

unit = pv1
tech = PV
bus = 5
rating_mw = 15
response_time_s = 0.3
inertia_h_s = 0
cost_eur_mwh = 0
p_set_mw = 0
p_avail_mw = 12
reserve_fraction = 0.1667
pool_member = yes

unit = w1
tech = W
bus = 6
rating_mw = 20
response_time_s = 0.3
inertia_h_s = 0
cost_eur_mwh = 5
p_set_mw = 10
p_avail_mw = 16
reserve_fraction = 0.125
pool_member = yes
)";

constexpr const char* kType2SouthText =
    R"(# Thirteen-bus grid, transmission ring with three distribution feeders.
# Solar-dominated pool backed by a solar-thermal plant with heat storage.

[scenario]
kind = type2_south
name = south-solar
f_nominal_hz = 50
s_base_mva = 100
slack_bus = 1
d_load_pu = 1.0

[dvpp]
droop_d_pu = 20
inertia_h_s = 5
filter_tau_s = 0.10

[buses]
bus = 1
level = transmission
load_mw = 0

bus = 2
level = transmission
load_mw = 10

bus = 3
level = transmission
load_mw = 15

bus = 4
level = transmission
load_mw = 10

bus = 5
level = transmission
load_mw = 20

bus = 6
level = transmission
load_mw = 10

bus = 7
level = transmission
load_mw = 5

bus = 8
level = distribution
load_mw = 5

bus = 9
level = distribution
load_mw = 5

bus = 10
level = distribution
load_mw = 5

bus = 11
level = distribution
load_mw = 5

bus = 12
level = distribution
load_mw = 5

bus = 13
level = distribution
load_mw = 5

[lines]
line = 1 2
reactance_pu = 0.08
limit_mw = 80

line = 2 3
reactance_pu = 0.08
limit_mw = 80

line = 3 4
reactance_pu = 0.08
limit_mw = 80

line = 4 5
reactance_pu = 0.08
limit_mw = 80

line = 5 6
reactance_pu = 0.08
limit_mw = 80

line = 6 7
reactance_pu = 0.08
limit_mw = 80

line = 7 1
reactance_pu = 0.08
limit_mw = 80

line = 3 7
reactance_pu = 0.20
limit_mw = 50

line = 2 8
reactance_pu = 0.15
limit_mw = 30

line = 8 9
reactance_pu = 0.15
limit_mw = 30

line = 4 10
reactance_pu = 0.15
limit_mw = 30

line = 10 11
reactance_pu = 0.15
limit_mw = 30

line = 6 12
reactance_pu = 0.15
limit_mw = 30

line = 12 13
reactance_pu = 0.15
limit_mw = 30

[units]
unit = cc1
tech = CC_TPS
bus = 1
rating_mw = 70
response_time_s = 900
inertia_h_s = 5
cost_eur_mwh = 65
p_set_mw = 60
p_avail_mw = 70

unit = st1
tech = ST
bus = 5
rating_mw = 25
response_time_s = 3600
inertia_h_s = 4
cost_eur_mwh = 20
p_set_mw = 15
p_avail_mw = 10
storage_capacity_mwh = 100
energy_mwh = 80
pool_member = yes

unit = pv1
tech = PV
bus = 9
rating_mw = 20
response_time_s = 0.3
inertia_h_s = 0
cost_eur_mwh = 0
p_set_mw = 10
p_avail_mw = 16
reserve_fraction = 0.125
pool_member = yes

unit = pv2
tech = PV
bus = 11
rating_mw = 15
response_time_s = 0.45
inertia_h_s = 0
cost_eur_mwh = 0
p_set_mw = 8
p_avail_mw = 12
reserve_fraction = 0.1667
pool_member = yes

unit = bio1
tech = BIO
bus = 13
rating_mw = 15
response_time_s = 1200
inertia_h_s = 5
cost_eur_mwh = 50
p_set_mw = 7
p_avail_mw = 15
)";

constexpr const char* kType2NorthText =
    R"(# Thirteen-bus grid, transmission ring with three distribution feeders.
# Wind-dominated pool backed by a pumped-storage plant.

[scenario]
kind = type2_north
name = north-wind
f_nominal_hz = 50
s_base_mva = 100
slack_bus = 1
d_load_pu = 1.0

[dvpp]
droop_d_pu = 22
inertia_h_s = 8
filter_tau_s = 0.08

[buses]
bus = 1
level = transmission
load_mw = 0

bus = 2
level = transmission
load_mw = 10

bus = 3
level = transmission
load_mw = 15

bus = 4
level = transmission
load_mw = 15

bus = 5
level = transmission
load_mw = 20

bus = 6
level = transmission
load_mw = 10

bus = 7
level = transmission
load_mw = 10

bus = 8
level = distribution
load_mw = 5

bus = 9
level = distribution
load_mw = 5

bus = 10
level = distribution
load_mw = 5

bus = 11
level = distribution
load_mw = 5

bus = 12
level = distribution
load_mw = 5

bus = 13
level = distribution
load_mw = 5

[lines]
line = 1 2
reactance_pu = 0.08
limit_mw = 80

line = 2 3
reactance_pu = 0.08
limit_mw = 80

line = 3 4
reactance_pu = 0.08
limit_mw = 80

line = 4 5
reactance_pu = 0.08
limit_mw = 80

line = 5 6
reactance_pu = 0.08
limit_mw = 80

line = 6 7
reactance_pu = 0.08
limit_mw = 80

line = 7 1
reactance_pu = 0.08
limit_mw = 80

line = 3 7
reactance_pu = 0.20
limit_mw = 50

line = 2 8
reactance_pu = 0.15
limit_mw = 30

line = 8 9
reactance_pu = 0.15
limit_mw = 30

line = 4 10
reactance_pu = 0.15
limit_mw = 30

line = 10 11
reactance_pu = 0.15
limit_mw = 30

line = 6 12
reactance_pu = 0.15
limit_mw = 30

line = 12 13
reactance_pu = 0.15
limit_mw = 30

[units]
unit = cf1
tech = CF_TPS
bus = 1
rating_mw = 80
response_time_s = 4800
inertia_h_s = 6
cost_eur_mwh = 45
p_set_mw = 50
p_avail_mw = 80

unit = ps1
tech = PS_HPP
bus = 3
rating_mw = 30
response_time_s = 180
inertia_h_s = 4
cost_eur_mwh = 40
p_set_mw = 16
p_avail_mw = 30
storage_capacity_mwh = 120
energy_mwh = 60
pool_member = yes

unit = w1
tech = W
bus = 7
rating_mw = 50
response_time_s = 0.6
inertia_h_s = 0
cost_eur_mwh = 5
p_set_mw = 30
p_avail_mw = 40
reserve_fraction = 0.1
pool_member = yes

unit = w2
tech = W
bus = 8
rating_mw = 25
response_time_s = 0.3
inertia_h_s = 0
cost_eur_mwh = 5
p_set_mw = 14
p_avail_mw = 20
reserve_fraction = 0.1
pool_member = yes
)";

constexpr const char* kType3Text =
    R"(# Eleven-bus isolated island: eight-bus ring with three spurs.
# Geothermal-anchored pool with pumped storage, solar thermal and PV.

[scenario]
kind = type3
name = volcanic-island
f_nominal_hz = 50
s_base_mva = 100
slack_bus = 1
d_load_pu = 1.0

[dvpp]
droop_d_pu = 15
inertia_h_s = 4
filter_tau_s = 0.10

[buses]
bus = 1
level = transmission
load_mw = 0

bus = 2
level = transmission
load_mw = 5

bus = 3
level = transmission
load_mw = 5

bus = 4
level = transmission
load_mw = 8

bus = 5
level = transmission
load_mw = 6

bus = 6
level = transmission
load_mw = 5

bus = 7
level = transmission
load_mw = 6

bus = 8
level = transmission
load_mw = 4

bus = 9
level = distribution
load_mw = 2

bus = 10
level = distribution
load_mw = 2

bus = 11
level = distribution
load_mw = 2

[lines]
line = 1 2
reactance_pu = 0.10
limit_mw = 40

line = 2 3
reactance_pu = 0.10
limit_mw = 40

line = 3 4
reactance_pu = 0.10
limit_mw = 40

line = 4 5
reactance_pu = 0.10
limit_mw = 40

line = 5 6
reactance_pu = 0.10
limit_mw = 40

line = 6 7
reactance_pu = 0.10
limit_mw = 40

line = 7 8
reactance_pu = 0.10
limit_mw = 40

line = 8 1
reactance_pu = 0.10
limit_mw = 40

line = 2 9
reactance_pu = 0.20
limit_mw = 15

line = 5 10
reactance_pu = 0.20
limit_mw = 15

line = 7 11
reactance_pu = 0.20
limit_mw = 15

[units]
unit = geo1
tech = GEO
bus = 1
rating_mw = 30
response_time_s = 60
inertia_h_s = 3
cost_eur_mwh = 15
p_set_mw = 24
p_avail_mw = 30
pool_member = yes

unit = ps1
tech = PS_HPP
bus = 4
rating_mw = 15
response_time_s = 150
inertia_h_s = 4
cost_eur_mwh = 35
p_set_mw = 7
p_avail_mw = 15
storage_capacity_mwh = 60
energy_mwh = 30
pool_member = yes

unit = st1
tech = ST
bus = 5
rating_mw = 12
response_time_s = 2700
inertia_h_s = 4
cost_eur_mwh = 25
p_set_mw = 10
p_avail_mw = 6
storage_capacity_mwh = 50
energy_mwh = 40
pool_member = yes

unit = pv1
tech = PV
bus = 9
rating_mw = 10
response_time_s = 0.3
inertia_h_s = 0
cost_eur_mwh = 0
p_set_mw = 4
p_avail_mw = 8
reserve_fraction = 0.25
pool_member = yes
)";

struct RecordView {
  const textio::Entry* head = nullptr;
  std::map<std::string, const textio::Entry*> fields;
};

// Slice a section into records delimited by `record_key` entries.
std::vector<RecordView> records(const textio::Section& sec,
                                const std::string& record_key,
                                const std::string& source) {
  std::vector<RecordView> out;
  for (const auto& e : sec.entries) {
    if (e.key == record_key) {
      out.push_back(RecordView{&e, {}});
      continue;
    }
    if (out.empty())
      textio::fail_at(source, e.line,
                      "expected '" + record_key + " = ...' before '" + e.key + "'");
    if (!out.back().fields.emplace(e.key, &e).second)
      textio::fail_at(source, e.line, "duplicate key '" + e.key + "' in record");
  }
  return out;
}

const textio::Entry* get(const RecordView& r, const std::string& key) {
  const auto it = r.fields.find(key);
  return it == r.fields.end() ? nullptr : it->second;
}

const textio::Entry& require(const RecordView& r, const std::string& key,
                             const std::string& source) {
  const textio::Entry* e = get(r, key);
  if (!e)
    textio::fail_at(source, r.head->line,
                    "record '" + r.head->key + " = " + r.head->value +
                        "' is missing key '" + key + "'");
  return *e;
}

double get_double(const RecordView& r, const std::string& key, double fallback,
                  const std::string& source) {
  const textio::Entry* e = get(r, key);
  return e ? textio::entry_double(*e, source) : fallback;
}

const textio::Section& require_section(const textio::Document& doc,
                                       const std::string& name) {
  const textio::Section* s = doc.find(name);
  if (!s) throw textio::ParseError(doc.source + ": missing [" + name + "] section");
  return *s;
}

// Plain key = value sections ([scenario], [dvpp]) as a lookup map.
std::map<std::string, const textio::Entry*> as_map(const textio::Section& sec,
                                                   const std::string& source) {
  std::map<std::string, const textio::Entry*> out;
  for (const auto& e : sec.entries) {
    if (!out.emplace(e.key, &e).second)
      textio::fail_at(source, e.line, "duplicate key '" + e.key + "'");
  }
  return out;
}

double map_double(const std::map<std::string, const textio::Entry*>& m,
                  const std::string& key, double fallback, const std::string& source) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : textio::entry_double(*it->second, source);
}

}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::type1: return "type1";
    case Kind::type2_south: return "type2_south";
    case Kind::type2_north: return "type2_north";
    case Kind::type3: return "type3";
  }
  return "type1";
}

bool kind_from_name(const std::string& name, Kind* out) {
  for (Kind k : {Kind::type1, Kind::type2_south, Kind::type2_north, Kind::type3}) {
    if (name == kind_name(k)) {
      *out = k;
      return true;
    }
  }
  return false;
}

std::vector<const UnitSetup*> Scenario::pool_members() const {
  std::vector<const UnitSetup*> out;
  for (const auto& u : units)
    if (u.params.dvpp_member) out.push_back(&u);
  return out;
}

double Scenario::total_load_mw() const {
  double sum = 0.0;
  for (const auto& b : network.buses) sum += b.load_mw;
  return sum;
}

double Scenario::total_set_mw() const {
  double sum = 0.0;
  for (const auto& u : units) sum += u.p_set_mw;
  return sum;
}

const UnitSetup* Scenario::find_unit(const std::string& id) const {
  for (const auto& u : units)
    if (u.params.id == id) return &u;
  return nullptr;
}

void Scenario::validate() const {
  network.validate();
  if (!network.connected())
    throw std::invalid_argument("scenario '" + name + "': network is not connected");
  if (units.empty()) throw std::invalid_argument("scenario '" + name + "': no units");

  std::set<std::string> ids;
  for (const auto& u : units) {
    u.params.validate();
    if (!ids.insert(u.params.id).second)
      throw std::invalid_argument("duplicate unit id '" + u.params.id + "'");
    network.bus_index(u.params.bus);  // throws on unknown bus
    if (u.p_set_mw < -u.params.rating_mw || u.p_set_mw > u.params.rating_mw)
      throw std::invalid_argument("unit '" + u.params.id + "': p_set beyond rating");
    if (u.p_avail_mw < 0)
      throw std::invalid_argument("unit '" + u.params.id + "': negative availability");
    if (u.reserve_fraction < 0 || u.reserve_fraction >= 1)
      throw std::invalid_argument("unit '" + u.params.id + "': reserve outside [0,1)");
    if (u.energy_mwh < 0 || u.energy_mwh > u.params.storage_capacity_mwh + 1e-9)
      throw std::invalid_argument("unit '" + u.params.id + "': energy beyond capacity");
    const unit::UnitState s =
        unit::initial_state(u.params, u.p_set_mw, u.p_avail_mw, u.reserve_fraction,
                            u.energy_mwh);
    if (std::abs(s.p_out_mw - u.p_set_mw) > 1e-9)
      throw std::invalid_argument("unit '" + u.params.id +
                                  "': p_set violates its dispatch-class bounds");
  }
  pool_spec.validate();
  if (pool_members().empty())
    throw std::invalid_argument("scenario '" + name + "': pool has no members");

  if (std::abs(total_set_mw() - total_load_mw()) > 1e-6)
    throw std::invalid_argument("scenario '" + name +
                                "': initial dispatch does not balance the load");

  // Base-case flows must respect every line limit.
  std::map<int, double> inj;
  for (const auto& b : network.buses) inj[b.id] -= b.load_mw;
  for (const auto& u : units) inj[u.params.bus] += u.p_set_mw;
  const net::DcFlow flow = net::solve_dc(network, inj);
  for (std::size_t l = 0; l < network.lines.size(); ++l) {
    if (std::abs(flow.flow_mw(static_cast<int>(l))) >
        network.lines[l].limit_mw + 1e-6)
      throw std::invalid_argument("scenario '" + name + "': base flow exceeds limit on line " +
                                  std::to_string(network.lines[l].from) + "-" +
                                  std::to_string(network.lines[l].to));
  }
}

Scenario from_document(const textio::Document& doc) {
  const std::string& src = doc.source;
  Scenario sc;

  const auto head = as_map(require_section(doc, "scenario"), src);
  if (const auto it = head.find("kind"); it != head.end()) {
    if (!kind_from_name(it->second->value, &sc.kind))
      textio::fail_at(src, it->second->line, "unknown kind '" + it->second->value + "'");
  } else {
    throw textio::ParseError(src + ": [scenario] is missing 'kind'");
  }
  if (const auto it = head.find("name"); it != head.end()) sc.name = it->second->value;
  sc.f_nominal_hz = map_double(head, "f_nominal_hz", 50.0, src);
  sc.network.s_base_mva = map_double(head, "s_base_mva", 100.0, src);
  sc.d_load = map_double(head, "d_load_pu", 1.0, src);
  if (const auto it = head.find("slack_bus"); it != head.end())
    sc.network.slack_bus = static_cast<int>(textio::entry_long(*it->second, src));
  else
    throw textio::ParseError(src + ": [scenario] is missing 'slack_bus'");

  const auto pool = as_map(require_section(doc, "dvpp"), src);
  sc.pool_spec.droop_d = map_double(pool, "droop_d_pu", sc.pool_spec.droop_d, src);
  sc.pool_spec.inertia_h = map_double(pool, "inertia_h_s", sc.pool_spec.inertia_h, src);
  sc.pool_spec.filter_tau_s =
      map_double(pool, "filter_tau_s", sc.pool_spec.filter_tau_s, src);
  sc.split_tau_s = map_double(pool, "split_tau_s", 0.0, src);

  for (const auto& rec : records(require_section(doc, "buses"), "bus", src)) {
    net::Bus b;
    b.id = static_cast<int>(textio::entry_long(*rec.head, src));
    const textio::Entry& level = require(rec, "level", src);
    if (level.value == "transmission") {
      b.level = net::VoltageLevel::transmission;
    } else if (level.value == "distribution") {
      b.level = net::VoltageLevel::distribution;
    } else {
      textio::fail_at(src, level.line, "level must be transmission or distribution");
    }
    b.load_mw = textio::entry_double(require(rec, "load_mw", src), src);
    sc.network.buses.push_back(b);
  }

  for (const auto& rec : records(require_section(doc, "lines"), "line", src)) {
    const auto ends = textio::split_fields(rec.head->value);
    if (ends.size() != 2)
      textio::fail_at(src, rec.head->line, "line record needs 'line = <from> <to>'");
    net::Line l;
    try {
      l.from = std::stoi(ends[0]);
      l.to = std::stoi(ends[1]);
    } catch (const std::exception&) {
      textio::fail_at(src, rec.head->line, "line endpoints must be bus ids");
    }
    l.reactance_pu = textio::entry_double(require(rec, "reactance_pu", src), src);
    l.limit_mw = textio::entry_double(require(rec, "limit_mw", src), src);
    sc.network.lines.push_back(l);
  }

  for (const auto& rec : records(require_section(doc, "units"), "unit", src)) {
    UnitSetup u;
    u.params.id = rec.head->value;
    if (u.params.id.empty())
      textio::fail_at(src, rec.head->line, "unit record needs an id");
    const textio::Entry& tech = require(rec, "tech", src);
    unit::Technology t;
    if (!unit::technology_from_name(tech.value, &t))
      textio::fail_at(src, tech.line, "unknown technology '" + tech.value + "'");
    u.params.spec = unit::TechSpec::defaults(t);
    u.params.spec.response_time_s =
        get_double(rec, "response_time_s", u.params.spec.response_time_s, src);
    u.params.bus = static_cast<int>(textio::entry_long(require(rec, "bus", src), src));
    u.params.rating_mw = textio::entry_double(require(rec, "rating_mw", src), src);
    u.params.inertia_h_s = get_double(rec, "inertia_h_s", unit::default_inertia(t), src);
    u.params.cost_eur_mwh = get_double(rec, "cost_eur_mwh", 0.0, src);
    u.params.storage_capacity_mwh = get_double(rec, "storage_capacity_mwh", 0.0, src);
    u.params.overload_factor = get_double(rec, "overload_factor", 1.2, src);
    u.params.overload_budget_max_s = get_double(rec, "overload_budget_s", 10.0, src);
    if (const textio::Entry* e = get(rec, "pool_member"))
      u.params.dvpp_member = textio::entry_bool(*e, src);
    u.p_set_mw = textio::entry_double(require(rec, "p_set_mw", src), src);
    u.p_avail_mw = get_double(rec, "p_avail_mw", u.params.rating_mw, src);
    u.reserve_fraction = get_double(rec, "reserve_fraction", 0.0, src);
    u.energy_mwh = get_double(rec, "energy_mwh", 0.0, src);
    sc.units.push_back(std::move(u));
  }

  try {
    sc.validate();
  } catch (const std::invalid_argument& err) {
    throw textio::ParseError(src + ": " + err.what());
  } catch (const net::NetworkError& err) {
    throw textio::ParseError(src + ": " + err.what());
  }
  return sc;
}

Scenario load_file(const std::string& path) {
  return from_document(textio::parse_file(path));
}

std::string builtin_text(Kind k) {
  switch (k) {
    case Kind::type1: return kType1Text;
    case Kind::type2_south: return kType2SouthText;
    case Kind::type2_north: return kType2NorthText;
    case Kind::type3: return kType3Text;
  }
  return kType1Text;
}

Scenario builtin(Kind k) {
  return from_document(
      textio::parse_string(builtin_text(k), std::string("builtin:") + kind_name(k)));
}

}  // namespace dvpp::scenario
