#include "dvpp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dvpp::lp {

namespace {

struct Tableau {
  int m = 0, n = 0;                 // rows, total columns (incl. artificials)
  std::vector<std::vector<double>> a;  // m rows of n coefficients
  std::vector<double> b;            // rhs, kept >= 0
  std::vector<double> obj;          // reduced-cost row
  double obj_val = 0.0;
  std::vector<int> basis;           // basic column per row
  int n_struct = 0;                 // structural variable count
  int art_begin = 0;                // first artificial column

  void pivot(int pr, int pc) {
    double piv = a[pr][pc];
    for (int j = 0; j < n; ++j) a[pr][j] /= piv;
    b[pr] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == pr) continue;
      double f = a[i][pc];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) a[i][j] -= f * a[pr][j];
      b[i] -= f * b[pr];
    }
    double f = obj[pc];
    if (f != 0.0) {
      for (int j = 0; j < n; ++j) obj[j] -= f * a[pr][j];
      obj_val -= f * b[pr];
    }
    basis[pr] = pc;
  }

  // Bland's rule: smallest eligible entering column, leaving row by minimum
  // ratio with smallest basic index breaking ties. Returns optimal|unbounded.
  Status run(double tol, const std::vector<bool>& allowed) {
    for (;;) {
      int pc = -1;
      for (int j = 0; j < n; ++j) {
        if (!allowed[j]) continue;
        if (obj[j] < -tol) {
          pc = j;
          break;
        }
      }
      if (pc < 0) return Status::optimal;
      int pr = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        if (a[i][pc] > tol) {
          double ratio = b[i] / a[i][pc];
          if (pr < 0 || ratio < best - 1e-12 ||
              (std::abs(ratio - best) <= 1e-12 && basis[i] < basis[pr])) {
            pr = i;
            best = ratio;
          }
        }
      }
      if (pr < 0) return Status::unbounded;
      pivot(pr, pc);
    }
  }
};

}  // namespace

Solution solve(const Problem& p, double tol) {
  const int m = static_cast<int>(p.rows.size());
  const int n0 = p.n_vars;
  if (static_cast<int>(p.c.size()) != n0)
    throw std::invalid_argument("simplex: cost size mismatch");

  // Count auxiliary columns.
  int n_slack = 0;
  for (const Row& r : p.rows)
    if (r.rel != Relation::eq) ++n_slack;

  Tableau t;
  t.m = m;
  t.n_struct = n0;
  t.n = n0 + n_slack + m;  // one artificial per row (unused ones stay zero)
  t.art_begin = n0 + n_slack;
  t.a.assign(m, std::vector<double>(t.n, 0.0));
  t.b.assign(m, 0.0);
  t.basis.assign(m, -1);

  int slack_col = n0;
  std::vector<int> art_of_row(m, -1);
  for (int i = 0; i < m; ++i) {
    const Row& r = p.rows[i];
    if (static_cast<int>(r.a.size()) != n0)
      throw std::invalid_argument("simplex: row size mismatch");
    double sign = (r.rhs < 0.0) ? -1.0 : 1.0;
    Relation rel = r.rel;
    if (sign < 0.0) {
      if (rel == Relation::le) rel = Relation::ge;
      else if (rel == Relation::ge) rel = Relation::le;
    }
    for (int j = 0; j < n0; ++j) t.a[i][j] = sign * r.a[j];
    t.b[i] = sign * r.rhs;
    if (rel == Relation::le) {
      t.a[i][slack_col] = 1.0;
      t.basis[i] = slack_col;
      ++slack_col;
    } else if (rel == Relation::ge) {
      t.a[i][slack_col] = -1.0;
      ++slack_col;
    }
    if (t.basis[i] < 0) {
      int art = t.art_begin + i;
      t.a[i][art] = 1.0;
      t.basis[i] = art;
      art_of_row[i] = art;
    }
  }

  std::vector<bool> allowed(t.n, true);

  // Phase 1: minimize the sum of artificials.
  t.obj.assign(t.n, 0.0);
  t.obj_val = 0.0;
  bool need_phase1 = false;
  for (int i = 0; i < m; ++i) {
    if (art_of_row[i] < 0) continue;
    need_phase1 = true;
    for (int j = 0; j < t.n; ++j)
      if (j != art_of_row[i]) t.obj[j] -= t.a[i][j];
    t.obj_val -= t.b[i];
  }
  Solution out;
  if (need_phase1) {
    Status st = t.run(tol, allowed);
    (void)st;  // phase 1 is bounded below by 0
    double infeas = -t.obj_val;  // obj_val tracks -(current phase-1 objective)
    if (infeas > 1e-7) {
      out.status = Status::infeasible;
      for (int i = 0; i < m; ++i)
        if (t.basis[i] >= t.art_begin && t.b[i] > 1e-7)
          out.infeasible_rows.push_back(p.rows[t.basis[i] - t.art_begin].label);
      return out;
    }
    // Drive lingering zero-level artificials out of the basis when possible.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < t.art_begin) continue;
      int pc = -1;
      for (int j = 0; j < t.art_begin; ++j) {
        if (std::abs(t.a[i][j]) > tol) {
          pc = j;
          break;
        }
      }
      if (pc >= 0) t.pivot(i, pc);
      // else: redundant row; the artificial stays basic at zero.
    }
  }
  for (int j = t.art_begin; j < t.n; ++j) allowed[j] = false;

  // Phase 2: real objective, re-derived for the current basis.
  t.obj.assign(t.n, 0.0);
  for (int j = 0; j < n0; ++j) t.obj[j] = p.c[j];
  t.obj_val = 0.0;
  for (int i = 0; i < m; ++i) {
    int bj = t.basis[i];
    if (bj < n0 && p.c[bj] != 0.0) {
      double f = p.c[bj];
      for (int j = 0; j < t.n; ++j) t.obj[j] -= f * t.a[i][j];
      t.obj_val -= f * t.b[i];
    }
  }
  Status st = t.run(tol, allowed);
  if (st == Status::unbounded) {
    out.status = Status::unbounded;
    return out;
  }
  out.status = Status::optimal;
  out.x.assign(n0, 0.0);
  for (int i = 0; i < m; ++i)
    if (t.basis[i] < n0) out.x[t.basis[i]] = t.b[i];
  out.objective = 0.0;
  for (int j = 0; j < n0; ++j) out.objective += p.c[j] * out.x[j];
  return out;
}

}  // namespace dvpp::lp
