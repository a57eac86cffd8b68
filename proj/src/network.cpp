#include "dvpp/network.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dvpp::net {

int Network::bus_index(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  throw NetworkError("unknown bus id " + std::to_string(bus_id));
}

int Network::find_line(int from, int to) const {
  for (size_t i = 0; i < lines.size(); ++i) {
    const Line& l = lines[i];
    if ((l.from == from && l.to == to) || (l.from == to && l.to == from))
      return static_cast<int>(i);
  }
  return -1;
}

void Network::validate() const {
  if (buses.empty()) throw NetworkError("network has no buses");
  std::set<int> ids;
  for (const Bus& b : buses)
    if (!ids.insert(b.id).second)
      throw NetworkError("duplicate bus id " + std::to_string(b.id));
  if (!ids.count(slack_bus))
    throw NetworkError("slack bus " + std::to_string(slack_bus) +
                       " is not a network bus");
  for (size_t i = 0; i < lines.size(); ++i) {
    const Line& l = lines[i];
    if (!ids.count(l.from) || !ids.count(l.to))
      throw NetworkError("line " + std::to_string(i) +
                         " references an unknown bus");
    if (l.from == l.to)
      throw NetworkError("line " + std::to_string(i) + " is a self-loop");
    if (!(l.reactance_pu > 0.0))
      throw NetworkError("line " + std::to_string(i) +
                         " needs a positive reactance");
    if (l.limit_mw < 0.0)
      throw NetworkError("line " + std::to_string(i) +
                         " has a negative limit");
  }
  if (s_base_mva <= 0.0) throw NetworkError("s_base must be positive");
}

std::vector<int> Network::components(
    const std::vector<bool>& line_in_service) const {
  const int n = static_cast<int>(buses.size());
  std::vector<int> comp(n, -1);
  int next = 0;
  std::vector<int> stack;
  for (int start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (size_t li = 0; li < lines.size(); ++li) {
        if (!line_in_service[li]) continue;
        int a = bus_index(lines[li].from), b = bus_index(lines[li].to);
        int v = -1;
        if (a == u) v = b;
        else if (b == u) v = a;
        else continue;
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

bool Network::connected() const {
  std::vector<bool> all(lines.size(), true);
  auto comp = components(all);
  return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

namespace {

// Reduced susceptance matrix (slack row/column deleted) plus the map from
// reduced index to bus position.
struct Reduced {
  Eigen::MatrixXd b;
  std::vector<int> pos;  // reduced index -> bus position
  std::vector<int> red;  // bus position -> reduced index (-1 for slack)
};

Reduced reduced_susceptance(const Network& net,
                            const std::vector<bool>& in_service) {
  const int n = static_cast<int>(net.buses.size());
  const int slack = net.slack_index();
  Reduced r;
  r.red.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (i == slack) continue;
    r.red[i] = static_cast<int>(r.pos.size());
    r.pos.push_back(i);
  }
  const int m = n - 1;
  r.b = Eigen::MatrixXd::Zero(m, m);
  for (size_t li = 0; li < net.lines.size(); ++li) {
    if (!in_service[li]) continue;
    const Line& l = net.lines[li];
    double y = 1.0 / l.reactance_pu;
    int a = net.bus_index(l.from), b = net.bus_index(l.to);
    int ra = r.red[a], rb = r.red[b];
    if (ra >= 0) r.b(ra, ra) += y;
    if (rb >= 0) r.b(rb, rb) += y;
    if (ra >= 0 && rb >= 0) {
      r.b(ra, rb) -= y;
      r.b(rb, ra) -= y;
    }
  }
  return r;
}

void throw_singular(const Network& net, const std::vector<bool>& in_service) {
  auto comp = net.components(in_service);
  int slack_comp = comp[net.slack_index()];
  std::ostringstream os;
  os << "network splits from the slack bus; unreachable buses:";
  for (size_t i = 0; i < net.buses.size(); ++i)
    if (comp[i] != slack_comp) os << ' ' << net.buses[i].id;
  throw SingularNetworkError(os.str());
}

DcFlow solve_dc_subset(const Network& net, const Eigen::VectorXd& injection_mw,
                       const std::vector<bool>& in_service) {
  const int n = static_cast<int>(net.buses.size());
  if (injection_mw.size() != n)
    throw NetworkError("injection vector size mismatch");
  {
    auto comp = net.components(in_service);
    int slack_comp = comp[net.slack_index()];
    for (int c : comp)
      if (c != slack_comp) throw_singular(net, in_service);
  }
  DcFlow out;
  out.angle_rad = Eigen::VectorXd::Zero(n);
  if (n > 1) {
    Reduced r = reduced_susceptance(net, in_service);
    Eigen::VectorXd p(n - 1);
    for (int k = 0; k < n - 1; ++k)
      p(k) = injection_mw(r.pos[k]) / net.s_base_mva;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(r.b);
    if (ldlt.info() != Eigen::Success) throw_singular(net, in_service);
    Eigen::VectorXd theta = ldlt.solve(p);
    for (int k = 0; k < n - 1; ++k) out.angle_rad(r.pos[k]) = theta(k);
  }
  out.flow_mw = Eigen::VectorXd::Zero(static_cast<int>(net.lines.size()));
  for (size_t li = 0; li < net.lines.size(); ++li) {
    if (!in_service[li]) continue;
    const Line& l = net.lines[li];
    double dtheta =
        out.angle_rad(net.bus_index(l.from)) - out.angle_rad(net.bus_index(l.to));
    out.flow_mw(static_cast<int>(li)) =
        dtheta / l.reactance_pu * net.s_base_mva;
  }
  // The slack picks up whatever balances the rest of the system; report the
  // total it actually injects.
  out.slack_injection_mw = -(injection_mw.sum() - injection_mw(net.slack_index()));
  return out;
}

}  // namespace

DcFlow solve_dc(const Network& net, const Eigen::VectorXd& injection_mw) {
  std::vector<bool> all(net.lines.size(), true);
  return solve_dc_subset(net, injection_mw, all);
}

DcFlow solve_dc(const Network& net, const std::map<int, double>& injection_mw) {
  return solve_dc(net, injection_vector(net, injection_mw));
}

Eigen::VectorXd injection_vector(const Network& net,
                                 const std::map<int, double>& by_bus_id) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<int>(net.buses.size()));
  for (const auto& [bus_id, mw] : by_bus_id) v(net.bus_index(bus_id)) += mw;
  return v;
}

Eigen::MatrixXd ptdf(const Network& net) {
  net.validate();
  const int n = static_cast<int>(net.buses.size());
  const int m = static_cast<int>(net.lines.size());
  std::vector<bool> all(net.lines.size(), true);
  {
    auto comp = net.components(all);
    for (int c : comp)
      if (c != comp[net.slack_index()]) throw_singular(net, all);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, n);
  if (n <= 1) return out;
  Reduced r = reduced_susceptance(net, all);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(r.b);
  if (ldlt.info() != Eigen::Success) throw_singular(net, all);
  // Column b of the reduced inverse gives angles for a unit injection at b
  // withdrawn at the slack.
  Eigen::MatrixXd theta =
      ldlt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
  for (int li = 0; li < m; ++li) {
    const Line& l = net.lines[li];
    int ra = r.red[net.bus_index(l.from)];
    int rb = r.red[net.bus_index(l.to)];
    for (int col = 0; col < n - 1; ++col) {
      double ta = (ra >= 0) ? theta(ra, col) : 0.0;
      double tb = (rb >= 0) ? theta(rb, col) : 0.0;
      out(li, r.pos[col]) = (ta - tb) / l.reactance_pu;
    }
  }
  return out;
}

OutageFlows line_outage_flows(const Network& net,
                              const Eigen::VectorXd& injection_mw,
                              int outaged_line) {
  if (outaged_line < 0 || outaged_line >= static_cast<int>(net.lines.size()))
    throw NetworkError("line index out of range");
  std::vector<bool> in_service(net.lines.size(), true);
  in_service[outaged_line] = false;
  OutageFlows out;
  auto comp = net.components(in_service);
  int slack_comp = comp[net.slack_index()];
  for (int c : comp) {
    if (c != slack_comp) {
      out.islanded = true;
      out.flow_mw = Eigen::VectorXd::Zero(static_cast<int>(net.lines.size()));
      return out;
    }
  }
  DcFlow f = solve_dc_subset(net, injection_mw, in_service);
  out.flow_mw = f.flow_mw;
  return out;
}

}  // namespace dvpp::net
