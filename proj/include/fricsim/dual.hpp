#pragma once

// Forward-mode dual numbers. A Dual carries a value and a single tangent
// component; evaluating a function on (x + eps * p) yields f(x) in the real
// part and J(x) p in the tangent part.

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Core>

namespace fricsim {

struct Dual {
  double re = 0.0;
  double eps = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : re(value) {}  // NOLINT: implicit by design of scalar promotion
  constexpr Dual(double value, double tangent) : re(value), eps(tangent) {}

  Dual& operator+=(const Dual& o) { re += o.re; eps += o.eps; return *this; }
  Dual& operator-=(const Dual& o) { re -= o.re; eps -= o.eps; return *this; }
  Dual& operator*=(const Dual& o) { eps = eps * o.re + re * o.eps; re *= o.re; return *this; }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.re;
    eps = (eps * o.re - re * o.eps) * inv * inv;
    re *= inv;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.re, -a.eps}; }
inline Dual operator+(const Dual& a) { return a; }

inline Dual operator+(Dual a, double b) { a.re += b; return a; }
inline Dual operator+(double a, Dual b) { b.re += a; return b; }
inline Dual operator-(Dual a, double b) { a.re -= b; return a; }
inline Dual operator-(double a, const Dual& b) { return {a - b.re, -b.eps}; }
inline Dual operator*(const Dual& a, double b) { return {a.re * b, a.eps * b}; }
inline Dual operator*(double a, const Dual& b) { return {a * b.re, a * b.eps}; }
inline Dual operator/(const Dual& a, double b) { return {a.re / b, a.eps / b}; }
inline Dual operator/(double a, const Dual& b) {
  const double inv = 1.0 / b.re;
  return {a * inv, -a * b.eps * inv * inv};
}

// Comparisons look at the real part only, so real and dual evaluation always
// take the same branch.
inline bool operator<(const Dual& a, const Dual& b) { return a.re < b.re; }
inline bool operator>(const Dual& a, const Dual& b) { return a.re > b.re; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.re <= b.re; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.re >= b.re; }
inline bool operator==(const Dual& a, const Dual& b) { return a.re == b.re; }
inline bool operator!=(const Dual& a, const Dual& b) { return a.re != b.re; }
inline bool operator<(const Dual& a, double b) { return a.re < b; }
inline bool operator>(const Dual& a, double b) { return a.re > b; }
inline bool operator<=(const Dual& a, double b) { return a.re <= b; }
inline bool operator>=(const Dual& a, double b) { return a.re >= b; }
inline bool operator<(double a, const Dual& b) { return a < b.re; }
inline bool operator>(double a, const Dual& b) { return a > b.re; }
inline bool operator<=(double a, const Dual& b) { return a <= b.re; }
inline bool operator>=(double a, const Dual& b) { return a >= b.re; }

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.re);
  return {s, a.eps / (2.0 * s)};
}
inline Dual log(const Dual& a) { return {std::log(a.re), a.eps / a.re}; }
inline Dual log1p(const Dual& a) { return {std::log1p(a.re), a.eps / (1.0 + a.re)}; }
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.re);
  return {e, e * a.eps};
}
inline Dual pow(const Dual& a, double p) {
  const double v = std::pow(a.re, p);
  return {v, p * std::pow(a.re, p - 1.0) * a.eps};
}
inline Dual sin(const Dual& a) { return {std::sin(a.re), std::cos(a.re) * a.eps}; }
inline Dual cos(const Dual& a) { return {std::cos(a.re), -std::sin(a.re) * a.eps}; }
inline Dual abs(const Dual& a) { return a.re < 0.0 ? -a : a; }
inline Dual fabs(const Dual& a) { return abs(a); }

// Ties resolve to the first argument (and so does its tangent).
inline Dual min(const Dual& a, const Dual& b) { return b.re < a.re ? b : a; }
inline Dual max(const Dual& a, const Dual& b) { return b.re > a.re ? b : a; }

inline bool isfinite(const Dual& a) { return std::isfinite(a.re) && std::isfinite(a.eps); }
inline bool isnan(const Dual& a) { return std::isnan(a.re) || std::isnan(a.eps); }
inline bool isinf(const Dual& a) { return std::isinf(a.re) || std::isinf(a.eps); }

inline std::ostream& operator<<(std::ostream& os, const Dual& a) {
  return os << a.re << "+" << a.eps << "e";
}

}  // namespace fricsim

namespace Eigen {
template <>
struct NumTraits<fricsim::Dual> : NumTraits<double> {
  using Real = fricsim::Dual;
  using NonInteger = fricsim::Dual;
  using Nested = fricsim::Dual;
  using Literal = fricsim::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 2,
    MulCost = 3
  };
};
}  // namespace Eigen

namespace fricsim {

/// Real part of a scalar; identity for double.
inline double value(double x) { return x; }
inline double value(const Dual& x) { return x.re; }

/// Tangent part of a scalar; zero for double.
inline double tangent(double) { return 0.0; }
inline double tangent(const Dual& x) { return x.eps; }

template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <class T>
using Mat3 = Eigen::Matrix<T, 3, 3>;

using DualVec = Vec<Dual>;

inline DualVec make_dual(const Eigen::VectorXd& x, const Eigen::VectorXd& dir) {
  DualVec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = Dual(x[i], dir[i]);
  return out;
}

inline Eigen::VectorXd real_part(const DualVec& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i].re;
  return out;
}

inline Eigen::VectorXd tangent_part(const DualVec& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i].eps;
  return out;
}

template <class T, int R, int C>
Eigen::Matrix<double, R, C> real_part(const Eigen::Matrix<T, R, C>& m) {
  Eigen::Matrix<double, R, C> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) out.data()[i] = value(m.data()[i]);
  return out;
}

/// Jacobian-vector product J(x) p of a residual written generically over the
/// scalar type. `fn` must accept a DualVec and return a DualVec.
template <class Fn>
Eigen::VectorXd jvp(Fn&& fn, const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
  return tangent_part(fn(make_dual(x, p)));
}

}  // namespace fricsim
