#include "eclab/gauss.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include "eclab/errors.hpp"

namespace eclab {

namespace {

template <int N>
GaussRule build() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& ax = G::abscissa();
  const auto& wt = G::weights();
  GaussRule r;
  // boost stores the nonnegative half; N is even here so zero is not a node
  for (std::size_t i = ax.size(); i-- > 0;) {
    r.x.push_back(-ax[i]);
    r.w.push_back(wt[i]);
  }
  for (std::size_t i = 0; i < ax.size(); ++i) {
    r.x.push_back(ax[i]);
    r.w.push_back(wt[i]);
  }
  return r;
}

}  // namespace

const GaussRule& gauss_rule(int order) {
  static const GaussRule r4 = build<4>();
  static const GaussRule r8 = build<8>();
  static const GaussRule r16 = build<16>();
  static const GaussRule r32 = build<32>();
  switch (order) {
    case 4:
      return r4;
    case 8:
      return r8;
    case 16:
      return r16;
    case 32:
      return r32;
    default:
      throw ParameterError("unsupported Gauss-Legendre order");
  }
}

void append_panel(const GaussRule& rule, double a, double b, std::vector<double>& nodes,
                  std::vector<double>& weights) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    nodes.push_back(mid + half * rule.x[i]);
    weights.push_back(half * rule.w[i]);
  }
}

}  // namespace eclab
