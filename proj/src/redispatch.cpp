#include "dvpp/redispatch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dvpp/simplex.hpp"

namespace dvpp::redispatch {

namespace {
// Deduplicated, sorted unit-contingency ids (deterministic row order).
std::vector<std::string> unit_contingency_order(const DispatchProblem& p) {
  std::vector<std::string> ids = p.unit_contingencies;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}
}  // namespace

void DispatchProblem::validate() const {
  network.validate();
  if (fixed_injection_mw.size() != static_cast<int>(network.buses.size()))
    throw std::invalid_argument("fixed injection size mismatch");
  for (const auto& u : units) {
    if (u.p_min_mw > u.p_max_mw + 1e-12)
      throw std::invalid_argument(u.id + ": p_min above p_max");
    (void)network.bus_index(u.bus);
  }
  for (int li : line_contingencies)
    if (li < 0 || li >= static_cast<int>(network.lines.size()))
      throw std::invalid_argument("contingency line index out of range");
  for (const auto& id : unit_contingencies) {
    bool found = false;
    for (const auto& u : units) found = found || (u.id == id);
    if (!found)
      throw std::invalid_argument("contingency unit '" + id + "' unknown");
  }
  if (reserve_requirement_mw < 0.0)
    throw std::invalid_argument("reserve requirement must be >= 0");
}

namespace {

// Fixed redistribution shares for a unit outage: survivors pick up the lost
// output in proportion to their size. Keeping the shares constant keeps the
// post-contingency flow constraints linear in (p, r).
std::vector<double> outage_shares(const std::vector<DispatchUnit>& units,
                                  size_t out_idx) {
  std::vector<double> g(units.size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < units.size(); ++i)
    if (i != out_idx) total += std::max(0.0, units[i].p_max_mw);
  if (total <= 0.0) return g;
  for (size_t i = 0; i < units.size(); ++i)
    if (i != out_idx) g[i] = std::max(0.0, units[i].p_max_mw) / total;
  return g;
}

struct Formulation {
  lp::Problem prob;
  size_t nu = 0;  // variables: p_0..p_{nu-1} (shifted), r_0..r_{nu-1}
  std::vector<double> shift;  // p_i = shift_i + x_i
  bool with_reserve_rows = true;
};

Formulation build(const DispatchProblem& p, bool with_reserve_rows,
                  const Eigen::MatrixXd& base_ptdf,
                  const std::vector<std::pair<int, Eigen::MatrixXd>>& cont_ptdf,
                  std::vector<std::string>* skipped) {
  // Units are ordered by id so equal-cost optima resolve lexicographically
  // under the deterministic pivoting rule.
  Formulation f;
  f.with_reserve_rows = with_reserve_rows;
  const size_t nu = p.units.size();
  f.nu = nu;
  const int nv = static_cast<int>(2 * nu);
  f.prob.n_vars = nv;
  f.prob.c.assign(nv, 0.0);
  f.shift.resize(nu);
  for (size_t i = 0; i < nu; ++i) {
    f.prob.c[i] = p.units[i].cost_eur_mwh;
    f.shift[i] = p.units[i].p_min_mw;
  }

  auto row = [&](lp::Relation rel, double rhs, const std::string& label) {
    lp::Row r;
    r.a.assign(nv, 0.0);
    r.rel = rel;
    r.rhs = rhs;
    r.label = label;
    f.prob.rows.push_back(std::move(r));
    return &f.prob.rows.back();
  };

  // Balance: sum p_i = target.
  {
    double rhs = p.target_mw;
    for (size_t i = 0; i < nu; ++i) rhs -= f.shift[i];
    auto* r = row(lp::Relation::eq, rhs, "power balance = target");
    for (size_t i = 0; i < nu; ++i) r->a[i] = 1.0;
  }
  // Upper bounds p_i <= p_max; reserve deliverability r_i <= p_max - p_i.
  for (size_t i = 0; i < nu; ++i) {
    auto* r = row(lp::Relation::le, p.units[i].p_max_mw - f.shift[i],
                  p.units[i].id + ": setpoint cap");
    r->a[i] = 1.0;
    auto* r2 = row(lp::Relation::le, p.units[i].p_max_mw - f.shift[i],
                   p.units[i].id + ": reserve beyond headroom");
    r2->a[i] = 1.0;
    r2->a[nu + i] = 1.0;
  }

  // Line limits for a PTDF matrix.
  auto add_flow_rows = [&](const Eigen::MatrixXd& S, const std::string& tag,
                           int skip_line) {
    const int m = static_cast<int>(p.network.lines.size());
    for (int l = 0; l < m; ++l) {
      if (l == skip_line) continue;
      double limit = p.network.lines[l].limit_mw;
      if (limit <= 0.0) continue;  // unlimited line
      double fixed = 0.0;
      for (int b = 0; b < p.fixed_injection_mw.size(); ++b)
        fixed += S(l, b) * p.fixed_injection_mw(b);
      std::vector<double> coef(nu, 0.0);
      double shift_flow = 0.0;
      for (size_t i = 0; i < nu; ++i) {
        double s = S(l, p.network.bus_index(p.units[i].bus));
        coef[i] = s;
        shift_flow += s * f.shift[i];
      }
      std::ostringstream hi, lo;
      hi << "line " << p.network.lines[l].from << "-" << p.network.lines[l].to
         << " " << tag << " upper limit";
      lo << "line " << p.network.lines[l].from << "-" << p.network.lines[l].to
         << " " << tag << " lower limit";
      auto* rh = row(lp::Relation::le, limit - fixed - shift_flow, hi.str());
      for (size_t i = 0; i < nu; ++i) rh->a[i] = coef[i];
      auto* rl = row(lp::Relation::ge, -limit - fixed - shift_flow, lo.str());
      for (size_t i = 0; i < nu; ++i) rl->a[i] = coef[i];
    }
  };

  add_flow_rows(base_ptdf, "base", -1);
  for (const auto& [li, S] : cont_ptdf) {
    std::ostringstream tag;
    tag << "after outage of line " << p.network.lines[li].from << "-"
        << p.network.lines[li].to;
    add_flow_rows(S, tag.str(), li);
  }

  // Unit outages: survivors replace the lost output in fixed shares, each
  // share backed by that survivor's held reserve.
  for (const auto& out_id : unit_contingency_order(p)) {
    size_t j = 0;
    for (; j < nu; ++j)
      if (p.units[j].id == out_id) break;
    auto g = outage_shares(p.units, j);
    double gsum = 0.0;
    for (double x : g) gsum += x;
    if (gsum <= 0.0) {
      if (skipped)
        skipped->push_back("unit outage " + out_id + ": no survivors");
      continue;
    }
    // Reserve coverage: g_i p_j <= r_i per survivor, sum_{i!=j} r_i >= p_j.
    for (size_t i = 0; i < nu; ++i) {
      if (i == j || g[i] == 0.0) continue;
      // g_i (shift_j + x_j) - r_i <= 0
      auto* r = row(lp::Relation::le, -g[i] * f.shift[j],
                    p.units[i].id + ": reserve short for outage of " + out_id);
      r->a[j] = g[i];
      r->a[nu + i] = -1.0;
    }
    {
      // sum_{i!=j} r_i - x_j >= shift_j
      auto* r = row(lp::Relation::ge, f.shift[j],
                    "survivor reserve covers outage of " + out_id);
      for (size_t i = 0; i < nu; ++i)
        if (i != j) r->a[nu + i] = 1.0;
      r->a[j] = -1.0;
    }
    // Post-contingency line flows with p_i' = p_i + g_i p_j (i != j), 0 for
    // j: survivors keep their own column, unit j's column becomes the
    // share-weighted blend of the survivors' sensitivities.
    const int m = static_cast<int>(p.network.lines.size());
    for (int l = 0; l < m; ++l) {
      double limit = p.network.lines[l].limit_mw;
      if (limit <= 0.0) continue;
      double fixed = 0.0;
      for (int b = 0; b < p.fixed_injection_mw.size(); ++b)
        fixed += base_ptdf(l, b) * p.fixed_injection_mw(b);
      std::vector<double> coef(nu, 0.0);
      double shift_flow = 0.0;
      for (size_t i = 0; i < nu; ++i) {
        double s;
        if (i == j) {
          s = 0.0;
          for (size_t k = 0; k < nu; ++k)
            if (k != j)
              s += g[k] * base_ptdf(l, p.network.bus_index(p.units[k].bus));
        } else {
          s = base_ptdf(l, p.network.bus_index(p.units[i].bus));
        }
        coef[i] = s;
        shift_flow += s * f.shift[i];
      }
      std::ostringstream hi, lo;
      hi << "line " << p.network.lines[l].from << "-" << p.network.lines[l].to
         << " upper limit after outage of unit " << out_id;
      lo << "line " << p.network.lines[l].from << "-" << p.network.lines[l].to
         << " lower limit after outage of unit " << out_id;
      auto* rh = row(lp::Relation::le, limit - fixed - shift_flow, hi.str());
      for (size_t i = 0; i < nu; ++i) rh->a[i] = coef[i];
      auto* rl = row(lp::Relation::ge, -limit - fixed - shift_flow, lo.str());
      for (size_t i = 0; i < nu; ++i) rl->a[i] = coef[i];
    }
  }

  if (with_reserve_rows && p.reserve_requirement_mw > 0.0) {
    auto* r = row(lp::Relation::ge, p.reserve_requirement_mw,
                  "total reserve floor");
    for (size_t i = 0; i < nu; ++i) r->a[nu + i] = 1.0;
  }
  return f;
}

}  // namespace

DispatchSolution solve_redispatch(const DispatchProblem& input) {
  DispatchProblem p = input;
  p.validate();
  std::sort(p.units.begin(), p.units.end(),
            [](const DispatchUnit& a, const DispatchUnit& b) {
              return a.id < b.id;
            });

  DispatchSolution sol;
  const Eigen::MatrixXd base_ptdf = net::ptdf(p.network);

  // Per-line-contingency PTDF matrices; islanding cases are skipped loudly.
  std::vector<std::pair<int, Eigen::MatrixXd>> cont_ptdf;
  {
    std::vector<int> lcs = p.line_contingencies;
    std::sort(lcs.begin(), lcs.end());
    lcs.erase(std::unique(lcs.begin(), lcs.end()), lcs.end());
    for (int li : lcs) {
      net::Network reduced = p.network;
      reduced.lines.erase(reduced.lines.begin() + li);
      std::vector<bool> in_service(p.network.lines.size(), true);
      in_service[li] = false;
      auto comp = p.network.components(in_service);
      bool split = false;
      for (int c : comp) split = split || (c != comp[p.network.slack_index()]);
      if (split) {
        std::ostringstream os;
        os << "line outage " << p.network.lines[li].from << "-"
           << p.network.lines[li].to << ": islands the network";
        sol.skipped.push_back(os.str());
        continue;
      }
      // Build the reduced PTDF, then re-embed as a full-width matrix with a
      // zero row for the outaged line.
      Eigen::MatrixXd rp = net::ptdf(reduced);
      Eigen::MatrixXd full = Eigen::MatrixXd::Zero(
          static_cast<int>(p.network.lines.size()), rp.cols());
      int rr = 0;
      for (int l = 0; l < static_cast<int>(p.network.lines.size()); ++l) {
        if (l == li) continue;
        full.row(l) = rp.row(rr++);
      }
      cont_ptdf.emplace_back(li, std::move(full));
    }
  }

  Formulation f = build(p, true, base_ptdf, cont_ptdf, &sol.skipped);
  lp::Solution s = lp::solve(f.prob);
  bool degraded = false;
  if (s.status != lp::Status::optimal && p.reserve_requirement_mw > 0.0) {
    // Try again without the static reserve floor; if that makes it feasible
    // the dispatch is usable but under-secured.
    Formulation f2 = build(p, false, base_ptdf, cont_ptdf, nullptr);
    lp::Solution s2 = lp::solve(f2.prob);
    if (s2.status == lp::Status::optimal) {
      s = std::move(s2);
      f = std::move(f2);
      degraded = true;
    }
  }
  if (s.status != lp::Status::optimal) {
    sol.status = DispatchStatus::infeasible;
    sol.binding = s.infeasible_rows;
    return sol;
  }
  sol.status = degraded ? DispatchStatus::degraded : DispatchStatus::optimal;
  if (degraded) sol.binding.push_back("total reserve floor (relaxed)");
  sol.objective_eur_per_h = 0.0;
  Eigen::VectorXd inj = p.fixed_injection_mw;
  for (size_t i = 0; i < p.units.size(); ++i) {
    double pi = f.shift[i] + s.x[i];
    double ri = s.x[f.nu + i];
    sol.p_set_mw[p.units[i].id] = pi;
    sol.reserve_mw[p.units[i].id] = ri;
    sol.objective_eur_per_h += p.units[i].cost_eur_mwh * pi;
    inj(p.network.bus_index(p.units[i].bus)) += pi;
  }
  net::DcFlow base = net::solve_dc(p.network, inj);
  sol.base_flow_mw = base.flow_mw;
  sol.worst_contingency_flow_mw = base.flow_mw.cwiseAbs();
  for (const auto& [li, S] : cont_ptdf) {
    (void)S;
    net::OutageFlows of = net::line_outage_flows(p.network, inj, li);
    if (of.islanded) continue;
    sol.worst_contingency_flow_mw =
        sol.worst_contingency_flow_mw.cwiseMax(of.flow_mw.cwiseAbs());
  }
  for (const auto& out_id : unit_contingency_order(p)) {
    Eigen::VectorXd inj2 = p.fixed_injection_mw;
    size_t j = 0;
    for (; j < p.units.size(); ++j)
      if (p.units[j].id == out_id) break;
    auto g = outage_shares(p.units, j);
    double pj = sol.p_set_mw[out_id];
    for (size_t i = 0; i < p.units.size(); ++i) {
      if (i == j) continue;
      inj2(p.network.bus_index(p.units[i].bus)) +=
          sol.p_set_mw[p.units[i].id] + g[i] * pj;
    }
    net::DcFlow fpost = net::solve_dc(p.network, inj2);
    sol.worst_contingency_flow_mw =
        sol.worst_contingency_flow_mw.cwiseMax(fpost.flow_mw.cwiseAbs());
  }
  return sol;
}

ValidationReport validate_dispatch(const DispatchProblem& input,
                                   const DispatchSolution& s, double tol_mw) {
  DispatchProblem p = input;
  p.validate();
  ValidationReport rep;
  auto fail = [&](const std::string& msg) {
    rep.feasible = false;
    rep.violations.push_back(msg);
  };
  double total = 0.0;
  for (const auto& u : p.units) {
    auto it = s.p_set_mw.find(u.id);
    if (it == s.p_set_mw.end()) {
      fail(u.id + ": no setpoint in solution");
      continue;
    }
    double pi = it->second;
    total += pi;
    if (pi < u.p_min_mw - tol_mw || pi > u.p_max_mw + tol_mw)
      fail(u.id + ": setpoint outside bounds");
    double ri = 0.0;
    if (auto rit = s.reserve_mw.find(u.id); rit != s.reserve_mw.end())
      ri = rit->second;
    if (ri < -tol_mw) fail(u.id + ": negative reserve");
    if (pi + ri > u.p_max_mw + tol_mw) fail(u.id + ": reserve beyond headroom");
  }
  if (std::abs(total - p.target_mw) > tol_mw)
    fail("setpoints do not sum to the target");
  if (s.status == DispatchStatus::optimal && p.reserve_requirement_mw > 0.0) {
    double rtot = 0.0;
    for (const auto& kv : s.reserve_mw) rtot += kv.second;
    if (rtot < p.reserve_requirement_mw - tol_mw)
      fail("total reserve below the floor");
  }

  // Flows from fresh angle solutions.
  Eigen::VectorXd inj = p.fixed_injection_mw;
  for (const auto& u : p.units)
    if (auto it = s.p_set_mw.find(u.id); it != s.p_set_mw.end())
      inj(p.network.bus_index(u.bus)) += it->second;
  net::DcFlow base = net::solve_dc(p.network, inj);
  for (size_t l = 0; l < p.network.lines.size(); ++l) {
    double lim = p.network.lines[l].limit_mw;
    if (lim <= 0.0) continue;
    if (std::abs(base.flow_mw(static_cast<int>(l))) > lim + tol_mw) {
      std::ostringstream os;
      os << "line " << p.network.lines[l].from << "-" << p.network.lines[l].to
         << " over limit in base case";
      fail(os.str());
    }
  }
  for (int li : p.line_contingencies) {
    net::OutageFlows of = net::line_outage_flows(p.network, inj, li);
    if (of.islanded) continue;
    for (size_t l = 0; l < p.network.lines.size(); ++l) {
      double lim = p.network.lines[l].limit_mw;
      if (lim <= 0.0 || static_cast<int>(l) == li) continue;
      if (std::abs(of.flow_mw(static_cast<int>(l))) > lim + tol_mw) {
        std::ostringstream os;
        os << "line " << p.network.lines[l].from << "-"
           << p.network.lines[l].to << " over limit after line outage "
           << p.network.lines[li].from << "-" << p.network.lines[li].to;
        fail(os.str());
      }
    }
  }
  std::vector<DispatchUnit> sorted = p.units;
  std::sort(sorted.begin(), sorted.end(),
            [](const DispatchUnit& a, const DispatchUnit& b) {
              return a.id < b.id;
            });
  for (const auto& out_id : unit_contingency_order(p)) {
    size_t j = 0;
    for (; j < sorted.size(); ++j)
      if (sorted[j].id == out_id) break;
    auto g = outage_shares(sorted, j);
    double pj = 0.0;
    if (auto it = s.p_set_mw.find(out_id); it != s.p_set_mw.end())
      pj = it->second;
    double cover = 0.0;
    Eigen::VectorXd inj2 = p.fixed_injection_mw;
    for (size_t i = 0; i < sorted.size(); ++i) {
      if (i == j) continue;
      double ri = 0.0;
      if (auto rit = s.reserve_mw.find(sorted[i].id); rit != s.reserve_mw.end())
        ri = rit->second;
      cover += ri;
      double pi = 0.0;
      if (auto it = s.p_set_mw.find(sorted[i].id); it != s.p_set_mw.end())
        pi = it->second;
      inj2(p.network.bus_index(sorted[i].bus)) += pi + g[i] * pj;
      if (g[i] * pj > ri + tol_mw)
        fail(sorted[i].id + ": reserve under its share for outage of " + out_id);
    }
    if (cover < pj - tol_mw)
      fail("survivor reserve does not cover outage of " + out_id);
    net::DcFlow fpost = net::solve_dc(p.network, inj2);
    for (size_t l = 0; l < p.network.lines.size(); ++l) {
      double lim = p.network.lines[l].limit_mw;
      if (lim <= 0.0) continue;
      if (std::abs(fpost.flow_mw(static_cast<int>(l))) > lim + tol_mw) {
        std::ostringstream os;
        os << "line " << p.network.lines[l].from << "-"
           << p.network.lines[l].to << " over limit after outage of unit "
           << out_id;
        fail(os.str());
      }
    }
  }
  return rep;
}

bool RedispatchTrigger::should_solve(double now_s,
                                     double availability_change_mw,
                                     bool unit_failed) const {
  if (unit_failed) return true;
  if (pool_rating_mw > 0.0 &&
      std::abs(availability_change_mw) >
          availability_threshold_frac * pool_rating_mw)
    return true;
  return now_s - last_solve_s >= period_s - 1e-9;
}

}  // namespace dvpp::redispatch
