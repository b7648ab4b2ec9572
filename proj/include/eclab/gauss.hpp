#pragma once

#include <vector>

namespace eclab {

// Gauss-Legendre nodes and weights on [-1, 1], ascending.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Supported orders: 4, 8, 16, 32.
const GaussRule& gauss_rule(int order);

// Appends the nodes/weights of the rule mapped to [a, b].
void append_panel(const GaussRule& rule, double a, double b, std::vector<double>& nodes,
                  std::vector<double>& weights);

}  // namespace eclab
