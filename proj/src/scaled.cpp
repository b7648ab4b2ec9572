#include "eclab/scaled.hpp"

#include <cstdio>
#include <stdexcept>

namespace eclab {

XReal XReal::pow(std::uint64_t n) const {
  XReal result(1.0);
  XReal base = *this;
  while (n) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return result;
}

XComplex XComplex::pow(std::uint64_t n) const {
  XComplex result(1.0);
  XComplex base = *this;
  while (n) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return result;
}

XReal XReal::exp2(double x) {
  double k = std::floor(x);
  return from_parts(std::exp2(x - k), static_cast<std::int64_t>(k));
}

XReal XReal::exp(double x) { return exp2(x * 1.44269504088896340736); }

std::string XReal::to_string(int digits) const {
  if (m_ == 0.0) return "0";
  if (!std::isfinite(m_)) return std::isnan(m_) ? "nan" : (m_ > 0 ? "inf" : "-inf");
  double l10 = log10_abs();
  double dexp = std::floor(l10);
  double frac = l10 - dexp;
  // the fractional part carries fewer good digits once the exponent is large
  int lost = dexp == 0.0 ? 0 : static_cast<int>(std::ceil(std::log10(std::fabs(dexp) + 1.0)));
  int keep = std::max(3, digits - lost);
  double mant = std::pow(10.0, frac);
  if (mant >= 10.0) {
    mant /= 10.0;
    dexp += 1.0;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.*fe%+.0f", m_ < 0 ? "-" : "", keep - 1, mant, dexp);
  return buf;
}

XReal XReal::parse(const std::string& s) {
  auto pos = s.find_first_of("eE");
  double mant = 0.0;
  double dexp = 0.0;
  try {
    if (pos == std::string::npos) return XReal(std::stod(s));
    mant = std::stod(s.substr(0, pos));
    dexp = std::stod(s.substr(pos + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse extended real: " + s);
  }
  if (mant == 0.0) return XReal(0.0);
  XReal r = exp2(dexp * 3.32192809488736234787);
  return r * XReal(mant);
}

}  // namespace eclab
