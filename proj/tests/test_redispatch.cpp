#include <Eigen/Dense>
#include <string>
#include <vector>

#include "doctest.h"
#include "dvpp/redispatch.hpp"

using namespace dvpp::redispatch;
using dvpp::net::Network;
using dvpp::net::VoltageLevel;

namespace {

// Two buses joined by one line; load sits at bus 1 (the slack).
DispatchProblem two_bus(double line_limit) {
  DispatchProblem p;
  p.network.buses = {{1, VoltageLevel::transmission, 10.0},
                     {2, VoltageLevel::transmission, 0.0}};
  p.network.lines = {{1, 2, 0.1, line_limit}};
  p.network.slack_bus = 1;
  p.units = {{"g1", 2, 10.0, 0.0, 8.0}, {"g2", 1, 20.0, 0.0, 10.0}};
  p.fixed_injection_mw = Eigen::VectorXd::Zero(2);
  p.fixed_injection_mw(0) = -10.0;
  p.target_mw = 10.0;
  return p;
}

}  // namespace

TEST_CASE("merit order when the wire does not bind") {
  DispatchProblem p = two_bus(100.0);
  DispatchSolution s = solve_redispatch(p);
  REQUIRE(s.status == DispatchStatus::optimal);
  CHECK(s.p_set_mw.at("g1") == doctest::Approx(8.0));
  CHECK(s.p_set_mw.at("g2") == doctest::Approx(2.0));
  CHECK(s.objective_eur_per_h == doctest::Approx(120.0));
  CHECK(validate_dispatch(p, s).feasible);
}

TEST_CASE("binding line limit forces out-of-merit generation") {
  DispatchProblem p = two_bus(6.0);
  DispatchSolution s = solve_redispatch(p);
  REQUIRE(s.status == DispatchStatus::optimal);
  CHECK(s.p_set_mw.at("g1") == doctest::Approx(6.0));
  CHECK(s.p_set_mw.at("g2") == doctest::Approx(4.0));
  CHECK(s.objective_eur_per_h == doctest::Approx(140.0));
  CHECK(std::abs(s.base_flow_mw(0)) <= 6.0 + 1e-9);
  CHECK(validate_dispatch(p, s).feasible);
}

TEST_CASE("line contingency is priced into the dispatch") {
  // Triangle: cheap plant at the slack, expensive plant at the load bus.
  // Losing line 2-3 funnels everything over 1-3 (limit 9), so at least
  // 3 MW must be produced locally even though it costs triple.
  DispatchProblem p;
  p.network.buses = {{1, VoltageLevel::transmission, 0.0},
                     {2, VoltageLevel::transmission, 0.0},
                     {3, VoltageLevel::transmission, 12.0}};
  p.network.lines = {{1, 2, 0.1, 100.0}, {2, 3, 0.1, 100.0}, {1, 3, 0.1, 9.0}};
  p.network.slack_bus = 1;
  p.units = {{"g1", 1, 10.0, 0.0, 12.0}, {"g2", 3, 30.0, 0.0, 12.0}};
  p.fixed_injection_mw = Eigen::VectorXd::Zero(3);
  p.fixed_injection_mw(2) = -12.0;
  p.target_mw = 12.0;

  DispatchSolution unsecured = solve_redispatch(p);
  REQUIRE(unsecured.status == DispatchStatus::optimal);
  CHECK(unsecured.p_set_mw.at("g1") == doctest::Approx(12.0));
  CHECK(unsecured.objective_eur_per_h == doctest::Approx(120.0));

  p.line_contingencies = {1};  // lose 2-3
  DispatchSolution secured = solve_redispatch(p);
  REQUIRE(secured.status == DispatchStatus::optimal);
  CHECK(secured.p_set_mw.at("g1") == doctest::Approx(9.0));
  CHECK(secured.p_set_mw.at("g2") == doctest::Approx(3.0));
  CHECK(secured.objective_eur_per_h == doctest::Approx(180.0));
  CHECK(secured.worst_contingency_flow_mw(2) <= 9.0 + 1e-6);
  CHECK(validate_dispatch(p, secured).feasible);
}

TEST_CASE("unit contingency must be backed by survivor reserve") {
  DispatchProblem p = two_bus(100.0);
  p.unit_contingencies = {"g1"};
  DispatchSolution s = solve_redispatch(p);
  REQUIRE(s.status == DispatchStatus::optimal);
  // Cheap unit still runs full because the survivor can hold 8 MW of reserve.
  CHECK(s.p_set_mw.at("g1") == doctest::Approx(8.0));
  CHECK(s.reserve_mw.at("g2") == doctest::Approx(8.0));
  CHECK(validate_dispatch(p, s).feasible);
}

TEST_CASE("impossible reserve floor degrades instead of failing") {
  DispatchProblem p = two_bus(100.0);
  p.reserve_requirement_mw = 30.0;  // headroom tops out at 8 MW
  DispatchSolution s = solve_redispatch(p);
  REQUIRE(s.status == DispatchStatus::degraded);
  bool flagged = false;
  for (const auto& b : s.binding) flagged = flagged || b.find("relaxed") != std::string::npos;
  CHECK(flagged);
  // The dispatch itself is still usable and checks out.
  CHECK(s.p_set_mw.at("g1") == doctest::Approx(8.0));
  CHECK(validate_dispatch(p, s).feasible);
}

TEST_CASE("target beyond installed capability is reported infeasible") {
  DispatchProblem p = two_bus(100.0);
  p.target_mw = 25.0;
  DispatchSolution s = solve_redispatch(p);
  REQUIRE(s.status == DispatchStatus::infeasible);
  CHECK(!s.binding.empty());
}

TEST_CASE("islanding contingency is skipped loudly, not silently ignored") {
  DispatchProblem p = two_bus(100.0);
  p.line_contingencies = {0};  // the only line: outage would island bus 2
  DispatchSolution s = solve_redispatch(p);
  REQUIRE(s.status == DispatchStatus::optimal);
  REQUIRE(!s.skipped.empty());
  CHECK(s.skipped[0].find("islands") != std::string::npos);
}

TEST_CASE("validator rejects doctored solutions") {
  DispatchProblem p = two_bus(6.0);
  DispatchSolution s = solve_redispatch(p);
  REQUIRE(s.status == DispatchStatus::optimal);

  DispatchSolution wrong_sum = s;
  wrong_sum.p_set_mw["g1"] = 7.0;  // sum now 11
  ValidationReport r1 = validate_dispatch(p, wrong_sum);
  CHECK(!r1.feasible);

  DispatchSolution overflow = s;
  overflow.p_set_mw["g1"] = 8.0;  // pushes 8 MW over the 6 MW line
  overflow.p_set_mw["g2"] = 2.0;
  ValidationReport r2 = validate_dispatch(p, overflow);
  CHECK(!r2.feasible);
  bool line_named = false;
  for (const auto& v : r2.violations)
    line_named = line_named || v.find("line 1-2") != std::string::npos;
  CHECK(line_named);
}

TEST_CASE("solver reruns are deterministic") {
  DispatchProblem p = two_bus(6.0);
  p.unit_contingencies = {"g1"};
  DispatchSolution a = solve_redispatch(p);
  DispatchSolution b = solve_redispatch(p);
  REQUIRE(a.status == b.status);
  CHECK(a.objective_eur_per_h == b.objective_eur_per_h);
  for (const auto& [id, v] : a.p_set_mw) CHECK(b.p_set_mw.at(id) == v);
  for (const auto& [id, v] : a.reserve_mw) CHECK(b.reserve_mw.at(id) == v);
}

TEST_CASE("trigger fires on cadence, threshold crossing and unit failure") {
  RedispatchTrigger t;
  t.period_s = 60.0;
  t.availability_threshold_frac = 0.05;
  t.pool_rating_mw = 100.0;
  CHECK(t.should_solve(0.0, 0.0, false));  // never solved yet
  t.mark_solved(0.0);
  CHECK(!t.should_solve(30.0, 0.0, false));
  CHECK(!t.should_solve(30.0, 4.0, false));   // below 5 MW threshold
  CHECK(t.should_solve(30.0, 6.0, false));    // above it
  CHECK(t.should_solve(30.0, -6.0, false));   // sign does not matter
  CHECK(t.should_solve(30.0, 0.0, true));     // failure forces a solve
  CHECK(t.should_solve(60.0, 0.0, false));    // cadence reached
}
