#pragma once

#include <map>
#include <string>
#include <vector>

#include "dvpp/network.hpp"

namespace dvpp::redispatch {

struct DispatchUnit {
  std::string id;
  int bus = 0;
  double cost_eur_mwh = 0.0;
  double p_min_mw = 0.0;
  double p_max_mw = 0.0;  // from current availability and class limits
};

struct DispatchProblem {
  net::Network network;
  std::vector<DispatchUnit> units;
  // Injections that are not decision variables (background generation minus
  // load), per bus position.
  Eigen::VectorXd fixed_injection_mw;
  double target_mw = 0.0;  // sum of unit setpoints (market commitment)
  std::vector<int> line_contingencies;           // line positions
  std::vector<std::string> unit_contingencies;   // unit ids
  double reserve_requirement_mw = 0.0;           // static floor (>= 0)

  void validate() const;  // throws std::invalid_argument
};

enum class DispatchStatus { optimal, infeasible, degraded };

struct DispatchSolution {
  DispatchStatus status = DispatchStatus::infeasible;
  std::map<std::string, double> p_set_mw;
  std::map<std::string, double> reserve_mw;
  Eigen::VectorXd base_flow_mw;               // per line
  Eigen::VectorXd worst_contingency_flow_mw;  // per line, max |flow| over cases
  double objective_eur_per_h = 0.0;
  std::vector<std::string> binding;   // infeasible: unsatisfiable constraints
  std::vector<std::string> skipped;   // contingencies dropped (islanding)
};

// Security-constrained economic dispatch: min sum cost_i p_i subject to the
// power balance, unit bounds, base-case and post-contingency line limits and
// the reserve rules. Unit outages redistribute the lost output to survivors
// in fixed rating-proportional shares, each backed by held reserve. If only
// the reserve rows make the problem infeasible they are dropped and the
// result is flagged degraded.
DispatchSolution solve_redispatch(const DispatchProblem& p);

struct ValidationReport {
  bool feasible = true;
  std::vector<std::string> violations;
};

// Independent feasibility check of a solution against the problem, using
// fresh angle-based flow solutions rather than the solver's PTDF algebra.
ValidationReport validate_dispatch(const DispatchProblem& p,
                                   const DispatchSolution& s,
                                   double tol_mw = 1e-6);

// When to run the solver: on a fixed cadence, and immediately when
// availability moves by more than a threshold or a unit fails.
struct RedispatchTrigger {
  double period_s = 60.0;
  double availability_threshold_frac = 0.05;  // of the pool rating
  double pool_rating_mw = 0.0;
  double last_solve_s = -1e300;

  bool should_solve(double now_s, double availability_change_mw,
                    bool unit_failed) const;
  void mark_solved(double now_s) { last_solve_s = now_s; }
};

}  // namespace dvpp::redispatch
