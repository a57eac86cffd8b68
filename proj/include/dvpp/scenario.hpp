#pragma once

#include <string>
#include <vector>

#include "dvpp/coordination.hpp"
#include "dvpp/network.hpp"
#include "dvpp/textfile.hpp"
#include "dvpp/units.hpp"

namespace dvpp::scenario {

// Four built-in study cases, distinguished by portfolio mix and grid shape:
//  - type1:       7-bus island ring, mixed hydro/wind/solar pool
//  - type2_south: 13-bus two-level grid, solar-dominated pool with thermal
//                 storage
//  - type2_north: 13-bus two-level grid, wind-dominated pool with pumped
//                 hydro
//  - type3:       11-bus isolated island, geothermal/storage pool
enum class Kind { type1, type2_south, type2_north, type3 };

const char* kind_name(Kind k);
bool kind_from_name(const std::string& name, Kind* out);

// One unit together with its starting operating point.
struct UnitSetup {
  unit::UnitParams params;
  double p_set_mw = 0.0;          // scheduled output
  double p_avail_mw = 0.0;        // source availability at t = 0
  double reserve_fraction = 0.0;  // deloading margin kept for frequency support
  double energy_mwh = 0.0;        // initial storage content
};

struct Scenario {
  Kind kind = Kind::type1;
  std::string name;
  net::Network network;
  std::vector<UnitSetup> units;
  coord::DvppSpec pool_spec;       // aggregate response the pool advertises
  double split_tau_s = 0.0;        // optional pool-split override (0 = auto)
  double d_load = 1.0;             // load frequency sensitivity, pu/pu
  double f_nominal_hz = 50.0;

  // Derived views.
  std::vector<const UnitSetup*> pool_members() const;
  double total_load_mw() const;
  double total_set_mw() const;
  const UnitSetup* find_unit(const std::string& id) const;

  // Structural checks beyond per-field validation: balanced start, known
  // buses, solvable network, base flows within limits.
  void validate() const;
};

// Parse a scenario document (see scenarios/*.dvpp for the schema).
Scenario from_document(const textio::Document& doc);
Scenario load_file(const std::string& path);

// Built-in copies of the four study cases. `builtin_text` is the exact text
// shipped under scenarios/, and `builtin` parses it through the same reader
// used for external files.
std::string builtin_text(Kind k);
Scenario builtin(Kind k);

}  // namespace dvpp::scenario
