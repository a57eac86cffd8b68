#include "dvpp/tf.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dvpp::tf {

int degree(const Poly& p, double tol) {
  for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k)
    if (std::abs(p[k]) > tol) return k;
  return -1;  // zero polynomial
}

Poly trim(const Poly& p, double tol) {
  int d = degree(p, tol);
  if (d < 0) return {0.0};
  return Poly(p.begin(), p.begin() + d + 1);
}

Poly add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

Poly mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {0.0};
  Poly r(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly scale(const Poly& p, double k) {
  Poly r = p;
  for (double& c : r) c *= k;
  return r;
}

Complex eval(const Poly& p, Complex x) {
  Complex acc(0.0, 0.0);
  for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k) acc = acc * x + p[k];
  return acc;
}

std::vector<Complex> roots(const Poly& poly, double tol, int max_iter) {
  Poly p = trim(poly);
  int n = degree(p);
  if (n <= 0) return {};
  // Monic copy.
  std::vector<Complex> c(n + 1);
  for (int k = 0; k <= n; ++k) c[k] = p[k] / p[n];
  auto f = [&](Complex x) {
    Complex acc(0.0, 0.0);
    for (int k = n; k >= 0; --k) acc = acc * x + c[k];
    return acc;
  };
  // Deterministic starting points spread on a circle that is neither real
  // nor a root of unity (classic (0.4 + 0.9i)^k seeding).
  std::vector<Complex> z(n);
  const Complex seed(0.4, 0.9);
  Complex acc(1.0, 0.0);
  // Radius heuristic: 1 + max |c_k| keeps the start outside typical root moduli.
  double r = 0.0;
  for (int k = 0; k < n; ++k) r = std::max(r, std::abs(c[k]));
  r = std::max(1.0, std::pow(1.0 + r, 1.0 / n));
  for (int k = 0; k < n; ++k) {
    acc *= seed;
    z[k] = r * acc;
  }
  for (int it = 0; it < max_iter; ++it) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      Complex denom(1.0, 0.0);
      for (int j = 0; j < n; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      if (std::abs(denom) < 1e-300) denom = Complex(1e-300, 0.0);
      Complex delta = f(z[i]) / denom;
      z[i] -= delta;
      worst = std::max(worst, std::abs(delta));
    }
    if (worst < tol) break;
  }
  // Snap conjugate-symmetric results: tiny imaginary parts are artefacts.
  for (auto& zi : z)
    if (std::abs(zi.imag()) < 1e-9 * std::max(1.0, std::abs(zi.real())))
      zi = Complex(zi.real(), 0.0);
  std::sort(z.begin(), z.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return z;
}

Rational Rational::constant(double k) { return {{k}, {1.0}}; }

Rational Rational::lag(double tau) { return {{1.0}, {1.0, tau}}; }

Rational Rational::washout(double gain, double tau) {
  return {{0.0, gain}, {1.0, tau}};
}

Complex Rational::operator()(Complex s) const {
  return eval(num, s) / eval(den, s);
}

Rational Rational::operator+(const Rational& o) const {
  return Rational{add(mul(num, o.den), mul(o.num, den)), mul(den, o.den)}
      .normalized();
}

Rational Rational::operator-(const Rational& o) const {
  return *this + (o * -1.0);
}

Rational Rational::operator*(const Rational& o) const {
  return Rational{mul(num, o.num), mul(den, o.den)}.normalized();
}

Rational Rational::operator*(double k) const {
  return Rational{scale(num, k), den};
}

int Rational::relative_degree() const {
  return degree(den, 1e-13) - degree(num, 1e-13);
}

std::vector<Complex> Rational::poles() const { return roots(den); }

bool Rational::stable(double margin) const {
  for (const auto& p : poles())
    if (p.real() > -margin) return false;
  return true;
}

Rational Rational::normalized() const {
  Poly n = trim(num), d = trim(den);
  int dd = degree(d);
  if (dd < 0) throw std::invalid_argument("rational: zero denominator");
  double lead = d[dd];
  return {scale(n, 1.0 / lead), scale(d, 1.0 / lead)};
}

DiscreteFilter DiscreteFilter::bilinear(const Rational& h, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("bilinear: dt must be positive");
  Rational r = h.normalized();
  if (!r.is_proper())
    throw std::invalid_argument("bilinear: improper transfer function");
  int n = degree(r.den);
  const double alpha = 2.0 / dt;
  // Substitute s = alpha (z-1)/(z+1) and clear (z+1)^n:
  //   N(z) = sum_k num[k] alpha^k (z-1)^k (z+1)^(n-k), same for D.
  Poly zm1{-1.0, 1.0}, zp1{1.0, 1.0};
  auto lift = [&](const Poly& c) {
    Poly out(static_cast<size_t>(n) + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
      double ck = (k < static_cast<int>(c.size())) ? c[k] : 0.0;
      if (ck == 0.0) continue;
      Poly term{1.0};
      for (int i = 0; i < k; ++i) term = mul(term, zm1);
      for (int i = 0; i < n - k; ++i) term = mul(term, zp1);
      out = add(out, scale(term, ck * std::pow(alpha, k)));
    }
    out.resize(static_cast<size_t>(n) + 1, 0.0);
    return out;
  };
  Poly N = lift(r.num), D = lift(r.den);
  if (std::abs(D[n]) < 1e-300)
    throw std::invalid_argument("bilinear: degenerate discretisation");
  DiscreteFilter f;
  f.dt_ = dt;
  f.b_.resize(n + 1);
  f.a_.resize(n + 1);
  // Causal difference equation in z^-1: coefficient of z^-i is the z^(n-i) one.
  for (int i = 0; i <= n; ++i) {
    f.b_[i] = N[n - i] / D[n];
    f.a_[i] = D[n - i] / D[n];
  }
  f.u_hist_.assign(n + 1, 0.0);
  f.y_hist_.assign(n + 1, 0.0);
  return f;
}

double DiscreteFilter::step(double u) {
  bool sat = false;
  const double inf = std::numeric_limits<double>::infinity();
  return step_clamped(u, -inf, inf, &sat);
}

double DiscreteFilter::step_clamped(double u, double lo, double hi,
                                    bool* saturated) {
  const size_t n = b_.size() - 1;
  // Shift histories (index = delay).
  for (size_t i = n; i >= 1; --i) {
    u_hist_[i] = u_hist_[i - 1];
    y_hist_[i] = y_hist_[i - 1];
  }
  u_hist_[0] = u;
  double y = b_[0] * u;
  for (size_t i = 1; i <= n; ++i) y += b_[i] * u_hist_[i] - a_[i] * y_hist_[i];
  bool sat = false;
  if (y > hi) {
    y = hi;
    sat = true;
  } else if (y < lo) {
    y = lo;
    sat = true;
  }
  y_hist_[0] = y;
  if (saturated) *saturated = sat;
  return y;
}

void DiscreteFilter::reset() {
  std::fill(u_hist_.begin(), u_hist_.end(), 0.0);
  std::fill(y_hist_.begin(), y_hist_.end(), 0.0);
}

void DiscreteFilter::preload(double u0, double y0) {
  std::fill(u_hist_.begin(), u_hist_.end(), u0);
  std::fill(y_hist_.begin(), y_hist_.end(), y0);
}

Complex DiscreteFilter::at_omega(double omega) const {
  Complex z = std::exp(Complex(0.0, omega * dt_));
  Complex nb(0.0, 0.0), na(0.0, 0.0);
  Complex zi(1.0, 0.0);
  for (size_t i = 0; i < b_.size(); ++i) {
    nb += b_[i] * zi;
    na += a_[i] * zi;
    zi /= z;  // z^-i
  }
  return nb / na;
}

std::vector<Complex> DiscreteFilter::z_poles() const {
  // a_ are z^-i coefficients; the z-polynomial has them reversed.
  Poly p(a_.rbegin(), a_.rend());
  return roots(p);
}

bool DiscreteFilter::stable(double tol) const {
  for (const auto& z : z_poles())
    if (std::abs(z) > 1.0 + tol) return false;
  return true;
}

}  // namespace dvpp::tf
