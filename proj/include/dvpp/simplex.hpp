#pragma once

#include <string>
#include <vector>

namespace dvpp::lp {

enum class Relation { le, eq, ge };

struct Row {
  std::vector<double> a;  // dense coefficients over the structural variables
  Relation rel = Relation::le;
  double rhs = 0.0;
  std::string label;  // used in infeasibility diagnostics
};

// minimize c'x  subject to the rows,  x >= 0.
// Bounded or shifted variables are the caller's concern.
struct Problem {
  int n_vars = 0;
  std::vector<double> c;
  std::vector<Row> rows;
};

enum class Status { optimal, infeasible, unbounded };

struct Solution {
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  // Labels of rows that could not be satisfied (phase-1 residual).
  std::vector<std::string> infeasible_rows;
};

// Dense two-phase tableau simplex with Bland's rule: deterministic, immune
// to cycling, exact enough for the desk-scale problems this project builds.
Solution solve(const Problem& p, double tol = 1e-9);

}  // namespace dvpp::lp
