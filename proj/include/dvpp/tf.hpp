#pragma once

#include <complex>
#include <vector>

namespace dvpp::tf {

// Polynomial with real coefficients in ascending powers: c[k] * x^k.
using Poly = std::vector<double>;
using Complex = std::complex<double>;

int degree(const Poly& p, double tol = 0.0);
Poly trim(const Poly& p, double tol = 1e-13);
Poly add(const Poly& a, const Poly& b);
Poly mul(const Poly& a, const Poly& b);
Poly scale(const Poly& p, double k);
Complex eval(const Poly& p, Complex x);

// All complex roots via the Durand-Kerner simultaneous iteration.
// Deterministic: fixed starting configuration, fixed iteration cap.
std::vector<Complex> roots(const Poly& p, double tol = 1e-12, int max_iter = 500);

// Proper rational function num(s)/den(s), both ascending.
struct Rational {
  Poly num{0.0};
  Poly den{1.0};

  static Rational constant(double k);
  // 1 / (1 + tau s)
  static Rational lag(double tau);
  // gain * s / (1 + tau s)
  static Rational washout(double gain, double tau);

  Complex operator()(Complex s) const;
  Complex at_jomega(double omega) const { return (*this)(Complex(0.0, omega)); }

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator*(double k) const;

  // deg(den) - deg(num); >= 0 means proper.
  int relative_degree() const;
  bool is_proper() const { return relative_degree() >= 0; }

  // Poles in the s-plane.
  std::vector<Complex> poles() const;
  bool stable(double margin = 0.0) const;  // all poles strictly left of -margin

  // Cancel common leading/trailing structure and normalise den so its
  // highest-order coefficient is 1. Keeps the function value unchanged.
  Rational normalized() const;
};

// Discrete-time IIR filter obtained from a proper Rational by the bilinear
// (Tustin) map s = (2/dt)(z-1)/(z+1). Direct-form I with explicit history so
// the realised output can be clamped and the clamped value fed back
// (conditional integration anti-windup).
class DiscreteFilter {
 public:
  DiscreteFilter() = default;
  static DiscreteFilter bilinear(const Rational& h, double dt);

  double step(double u);
  // Clamp the realised output to [lo, hi]; the clamped value enters the
  // recursion history, so saturation does not wind the internal state up.
  double step_clamped(double u, double lo, double hi, bool* saturated = nullptr);

  void reset();
  // Preload history as if the filter had been resting at the operating point
  // (u0, y0) forever. Only exact for dc-consistent pairs.
  void preload(double u0, double y0);

  // Frequency response at e^{j omega dt}.
  Complex at_omega(double omega) const;
  std::vector<Complex> z_poles() const;
  bool stable(double tol = 1e-9) const;  // all z-poles inside the unit circle

  double dt() const { return dt_; }
  const std::vector<double>& b() const { return b_; }
  const std::vector<double>& a() const { return a_; }

 private:
  std::vector<double> b_;  // feedforward, index = delay
  std::vector<double> a_;  // feedback, a_[0] == 1
  std::vector<double> u_hist_, y_hist_;
  double dt_ = 0.0;
};

}  // namespace dvpp::tf
