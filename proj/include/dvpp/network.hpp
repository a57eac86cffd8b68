#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvpp::net {

enum class VoltageLevel { transmission, distribution };

struct Bus {
  int id = 0;
  VoltageLevel level = VoltageLevel::transmission;
  double load_mw = 0.0;
};

struct Line {
  int from = 0;
  int to = 0;
  double reactance_pu = 0.1;  // > 0
  double limit_mw = 0.0;      // thermal limit, symmetric
};

struct NetworkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Thrown when the slack-reduced susceptance matrix cannot be factorised,
// i.e. some buses have no path to the slack.
struct SingularNetworkError : NetworkError {
  using NetworkError::NetworkError;
};

struct Network {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  int slack_bus = 0;        // bus id
  double s_base_mva = 100;

  int bus_index(int bus_id) const;  // throws NetworkError on unknown id
  int slack_index() const { return bus_index(slack_bus); }
  int find_line(int from, int to) const;  // -1 if absent (either orientation)

  // Structural checks: ids unique, endpoints exist, reactances positive,
  // slack present. Throws NetworkError.
  void validate() const;

  // Connected components over a line subset (true = in service).
  // Returns component index per bus position.
  std::vector<int> components(const std::vector<bool>& line_in_service) const;
  bool connected() const;
};

struct DcFlow {
  Eigen::VectorXd angle_rad;  // per bus position, slack = 0
  Eigen::VectorXd flow_mw;    // per line position, positive from -> to
  double slack_injection_mw = 0.0;  // balance absorbed by the slack bus
};

// Injections in MW per bus position (generation minus load). Any imbalance is
// absorbed at the slack. Throws SingularNetworkError on a split network.
DcFlow solve_dc(const Network& net, const Eigen::VectorXd& injection_mw);
DcFlow solve_dc(const Network& net, const std::map<int, double>& injection_mw);

Eigen::VectorXd injection_vector(const Network& net,
                                 const std::map<int, double>& by_bus_id);

// Power transfer distribution factors: rows = lines, cols = buses.
// Entry (l, b) is the MW change on line l per MW injected at bus b and
// withdrawn at the slack. Slack column is identically zero.
Eigen::MatrixXd ptdf(const Network& net);

struct OutageFlows {
  bool islanded = false;        // outage splits the network
  Eigen::VectorXd flow_mw;      // per line position; 0 on the outaged line
};

// Post-contingency flows after removing one line, same injections.
// Computed from a fresh factorisation of the reduced network, not from
// distribution-factor updates, so it stays exact for any topology.
OutageFlows line_outage_flows(const Network& net,
                              const Eigen::VectorXd& injection_mw,
                              int outaged_line);

}  // namespace dvpp::net
