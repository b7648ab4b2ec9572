#pragma once

// Holomorphic functions as expression trees over polynomial atoms.
//
// Atoms are p(a*z + b) with complex coefficients; interior nodes are sum,
// product, scalar multiple and nonnegative integer power. Powers are
// evaluated by repeated squaring in extended-exponent arithmetic, so
// 1 + X^M with M ~ 2^40 costs a few dozen multiplications.

#include <complex>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "eclab/scaled.hpp"

namespace eclab {

enum class HoloOp { Poly, Sum, Product, Scale, Power };

// Value and first derivative at a point.
struct Jet {
  XComplex v;
  XComplex d;
};

class HoloFunc;
struct HoloAccess;

namespace detail {
struct HoloNode;
}

// Per-evaluation memo for subtrees that occur more than once in a DAG.
class EvalCache {
 public:
  void clear() {
    values_.clear();
    jets_.clear();
  }

 private:
  friend class HoloFunc;
  std::unordered_map<const detail::HoloNode*, XComplex> values_;
  std::unordered_map<const detail::HoloNode*, Jet> jets_;
};

class HoloFunc {
 public:
  // The zero function.
  HoloFunc();

  static HoloFunc constant(cplx c);
  static HoloFunc identity();
  // p(a*z + b) with p(w) = sum_k coeffs[k] w^k.
  static HoloFunc poly(std::vector<cplx> coeffs, cplx a = 1.0, cplx b = 0.0);
  static HoloFunc sum(std::vector<HoloFunc> terms);
  static HoloFunc product(std::vector<HoloFunc> factors);
  static HoloFunc scaled(cplx c, const HoloFunc& f);
  static HoloFunc power(const HoloFunc& f, std::uint64_t n);

  friend HoloFunc operator+(const HoloFunc& f, const HoloFunc& g) { return sum({f, g}); }
  friend HoloFunc operator-(const HoloFunc& f, const HoloFunc& g) {
    return sum({f, scaled(-1.0, g)});
  }
  friend HoloFunc operator*(const HoloFunc& f, const HoloFunc& g) { return product({f, g}); }
  friend HoloFunc operator*(cplx c, const HoloFunc& f) { return scaled(c, f); }

  double validity_radius() const { return validity_; }
  HoloFunc with_validity(double r) const;

  // Domain-checked evaluation. The double result may overflow to inf for huge
  // values; eval_x never does.
  cplx operator()(cplx z) const { return eval(z); }
  cplx eval(cplx z) const { return eval_x(z).to_complex(); }
  XComplex eval_x(cplx z) const;
  XComplex eval_x(cplx z, EvalCache& cache) const;
  Jet jet(cplx z) const;
  Jet jet(cplx z, EvalCache& cache) const;

  HoloFunc derivative() const;
  // z -> f(alpha*z + beta), rewritten into the atoms.
  HoloFunc precompose_affine(cplx alpha, cplx beta) const;

  // Upper bound on the polynomial degree (saturates at UINT64_MAX).
  std::uint64_t degree() const;
  bool is_zero() const;
  bool is_constant() const;
  // Structural check plus a derivative probe on a small circle.
  bool is_nonconstant(double probe_radius = 0.5) const;
  bool structurally_equal(const HoloFunc& other) const;
  std::size_t node_count() const;

  HoloOp op() const;
  const std::vector<cplx>& coeffs() const;  // Poly only
  cplx affine_a() const;
  cplx affine_b() const;
  cplx scale_factor() const;      // Scale only
  std::uint64_t exponent() const;  // Power only
  const std::vector<HoloFunc>& children() const;

  nlohmann::json to_json() const;
  static HoloFunc from_json(const nlohmann::json& j);

 private:
  friend struct HoloAccess;
  explicit HoloFunc(std::shared_ptr<const detail::HoloNode> node, double validity)
      : node_(std::move(node)), validity_(validity) {}
  void check_domain(cplx z) const;
  static double derived_validity(const detail::HoloNode& n);

  std::shared_ptr<const detail::HoloNode> node_;
  double validity_;
};

namespace detail {
struct HoloNode {
  HoloOp op = HoloOp::Poly;
  std::vector<cplx> coeffs;  // Poly
  cplx a{1.0, 0.0};
  cplx b{0.0, 0.0};
  cplx c{1.0, 0.0};  // Scale
  std::uint64_t n = 0;  // Power
  std::vector<HoloFunc> kids;
  // structural summary, filled in when the node is built
  bool zero = false;
  bool constant = false;
  std::uint64_t deg = 0;
  std::uint64_t size = 1;
};
}  // namespace detail

// A map into C^2, the lift of a map into E1 x E2.
struct HoloPair {
  HoloFunc g1;
  HoloFunc g2;

  double validity_radius() const;
  nlohmann::json to_json() const;
  static HoloPair from_json(const nlohmann::json& j);
};

nlohmann::json complex_to_json(cplx z);
cplx complex_from_json(const nlohmann::json& j);

}  // namespace eclab
