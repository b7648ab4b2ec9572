#pragma once

// Extended-exponent arithmetic. A value is m * 2^e with a double mantissa and
// a 64-bit exponent, so moduli like exp(1e12) stay representable. Relative
// precision is that of double.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>

namespace eclab {

using cplx = std::complex<double>;

class XReal {
 public:
  XReal() = default;
  XReal(double v) : m_(v), e_(0) { normalize(); }  // NOLINT(implicit)
  static XReal from_parts(double m, std::int64_t e) {
    XReal r;
    r.m_ = m;
    r.e_ = e;
    r.normalize();
    return r;
  }

  double mantissa() const { return m_; }
  std::int64_t exponent() const { return e_; }
  bool is_zero() const { return m_ == 0.0; }
  bool is_finite() const { return std::isfinite(m_); }
  int sign() const { return (m_ > 0) - (m_ < 0); }

  // Saturates to +-inf / 0 outside the double range.
  double to_double() const {
    if (m_ == 0.0) return 0.0;
    if (e_ > 2000) return m_ > 0 ? HUGE_VAL : -HUGE_VAL;
    if (e_ < -2000) return 0.0;
    return std::ldexp(m_, static_cast<int>(e_));
  }
  // log2 |x|; -inf for zero.
  double log2_abs() const {
    if (m_ == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log2(std::fabs(m_)) + static_cast<double>(e_);
  }
  double log_abs() const { return log2_abs() * 0.69314718055994530942; }
  double log10_abs() const { return log2_abs() * 0.30102999566398119521; }

  XReal operator-() const { return from_parts(-m_, e_); }
  XReal abs() const { return from_parts(std::fabs(m_), e_); }

  friend XReal operator*(const XReal& a, const XReal& b) {
    return from_parts(a.m_ * b.m_, a.e_ + b.e_);
  }
  friend XReal operator/(const XReal& a, const XReal& b) {
    return from_parts(a.m_ / b.m_, a.e_ - b.e_);
  }
  friend XReal operator+(const XReal& a, const XReal& b) {
    if (a.m_ == 0.0) return b;
    if (b.m_ == 0.0) return a;
    std::int64_t d = a.e_ - b.e_;
    if (d > 80) return a;
    if (d < -80) return b;
    if (d >= 0) return from_parts(a.m_ + std::ldexp(b.m_, static_cast<int>(-d)), a.e_);
    return from_parts(std::ldexp(a.m_, static_cast<int>(d)) + b.m_, b.e_);
  }
  friend XReal operator-(const XReal& a, const XReal& b) { return a + (-b); }
  XReal& operator+=(const XReal& o) { return *this = *this + o; }
  XReal& operator*=(const XReal& o) { return *this = *this * o; }

  friend bool operator<(const XReal& a, const XReal& b) { return (a - b).m_ < 0.0; }
  friend bool operator>(const XReal& a, const XReal& b) { return b < a; }
  friend bool operator<=(const XReal& a, const XReal& b) { return !(b < a); }
  friend bool operator>=(const XReal& a, const XReal& b) { return !(a < b); }

  XReal sqrt() const {
    if (m_ <= 0.0) return XReal(m_ < 0 ? std::nan("") : 0.0);
    // make the exponent even before halving it
    double m = m_;
    std::int64_t e = e_;
    if (e & 1) {
      m *= 2.0;
      e -= 1;
    }
    return from_parts(std::sqrt(m), e / 2);
  }
  XReal pow(std::uint64_t n) const;
  XReal ldexp(std::int64_t k) const { return from_parts(m_, e_ + k); }

  static XReal exp(double x);  // e^x for any finite x
  static XReal exp2(double x);

  // "1.234e+56789" style, exact enough to read back with parse().
  std::string to_string(int digits = 17) const;
  static XReal parse(const std::string& s);

 private:
  void normalize() {
    if (m_ == 0.0 || !std::isfinite(m_)) {
      if (m_ == 0.0) e_ = 0;
      return;
    }
    int k = 0;
    m_ = std::frexp(m_, &k);
    e_ += k;
  }

  double m_ = 0.0;
  std::int64_t e_ = 0;
};

class XComplex {
 public:
  XComplex() = default;
  XComplex(cplx v) : m_(v), e_(0) { normalize(); }  // NOLINT(implicit)
  XComplex(double v) : XComplex(cplx(v, 0.0)) {}     // NOLINT(implicit)
  static XComplex from_parts(cplx m, std::int64_t e) {
    XComplex r;
    r.m_ = m;
    r.e_ = e;
    r.normalize();
    return r;
  }

  cplx mantissa() const { return m_; }
  std::int64_t exponent() const { return e_; }
  bool is_zero() const { return m_ == cplx(0.0, 0.0); }
  bool is_finite() const { return std::isfinite(m_.real()) && std::isfinite(m_.imag()); }

  cplx to_complex() const {
    if (is_zero()) return {0.0, 0.0};
    if (e_ > 2000) return {m_.real() * HUGE_VAL, m_.imag() * HUGE_VAL};
    if (e_ < -2000) return {0.0, 0.0};
    int k = static_cast<int>(e_);
    return {std::ldexp(m_.real(), k), std::ldexp(m_.imag(), k)};
  }
  XReal norm() const { return XReal::from_parts(std::norm(m_), 2 * e_); }
  XReal abs() const { return XReal::from_parts(std::abs(m_), e_); }
  double log2_abs() const { return abs().log2_abs(); }
  XComplex conj() const { return from_parts(std::conj(m_), e_); }
  XReal real() const { return XReal::from_parts(m_.real(), e_); }
  XReal imag() const { return XReal::from_parts(m_.imag(), e_); }

  XComplex operator-() const { return from_parts(-m_, e_); }
  friend XComplex operator*(const XComplex& a, const XComplex& b) {
    return from_parts(a.m_ * b.m_, a.e_ + b.e_);
  }
  friend XComplex operator*(const XComplex& a, const XReal& b) {
    return from_parts(a.m_ * b.mantissa(), a.e_ + b.exponent());
  }
  friend XComplex operator/(const XComplex& a, const XComplex& b) {
    return from_parts(a.m_ / b.m_, a.e_ - b.e_);
  }
  friend XComplex operator+(const XComplex& a, const XComplex& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    std::int64_t d = a.e_ - b.e_;
    if (d > 80) return a;
    if (d < -80) return b;
    if (d >= 0) return from_parts(a.m_ + scale(b.m_, -d), a.e_);
    return from_parts(scale(a.m_, d) + b.m_, b.e_);
  }
  friend XComplex operator-(const XComplex& a, const XComplex& b) { return a + (-b); }
  XComplex& operator+=(const XComplex& o) { return *this = *this + o; }
  XComplex& operator*=(const XComplex& o) { return *this = *this * o; }

  XComplex pow(std::uint64_t n) const;

 private:
  static cplx scale(cplx v, std::int64_t k) {
    int ki = static_cast<int>(k);
    return {std::ldexp(v.real(), ki), std::ldexp(v.imag(), ki)};
  }
  void normalize() {
    double big = std::max(std::fabs(m_.real()), std::fabs(m_.imag()));
    if (big == 0.0) {
      e_ = 0;
      return;
    }
    if (!std::isfinite(big)) return;
    int k = 0;
    (void)std::frexp(big, &k);
    m_ = scale(m_, -k);
    e_ += k;
  }

  cplx m_{0.0, 0.0};
  std::int64_t e_ = 0;
};

inline XReal abs(const XComplex& z) { return z.abs(); }
inline XReal max(const XReal& a, const XReal& b) { return a < b ? b : a; }
inline XReal min(const XReal& a, const XReal& b) { return a < b ? a : b; }

}  // namespace eclab
