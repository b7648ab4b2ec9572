#include "eclab/holo.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "eclab/errors.hpp"

namespace eclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using detail::HoloNode;

std::shared_ptr<HoloNode> make_node(HoloOp op) {
  auto n = std::make_shared<HoloNode>();
  n->op = op;
  return n;
}

void trim(std::vector<cplx>& c) {
  while (c.size() > 1 && c.back() == cplx(0.0, 0.0)) c.pop_back();
  if (c.empty()) c.push_back(0.0);
}

// Value of p(w). Horner directly when |w| <= 1, otherwise on the reversed
// polynomial in 1/w with the w^n factor kept in extended range.
XComplex poly_value(const std::vector<cplx>& c, cplx w) {
  const std::size_t n = c.size() - 1;
  if (n == 0) return XComplex(c[0]);
  if (std::abs(w) <= 1.0) {
    cplx p = c[n];
    for (std::size_t k = n; k-- > 0;) p = p * w + c[k];
    return XComplex(p);
  }
  cplx t = 1.0 / w;
  cplx q = c[0];
  for (std::size_t k = 1; k <= n; ++k) q = q * t + c[k];
  return XComplex(q) * XComplex(w).pow(n);
}

// p(w) and dp/dw.
void poly_jet(const std::vector<cplx>& c, cplx w, XComplex& val, XComplex& der) {
  const std::size_t n = c.size() - 1;
  if (n == 0) {
    val = XComplex(c[0]);
    der = XComplex();
    return;
  }
  if (std::abs(w) <= 1.0) {
    cplx p = c[n];
    cplx dp = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      dp = dp * w + p;
      p = p * w + c[k];
    }
    val = XComplex(p);
    der = XComplex(dp);
    return;
  }
  // p(w) = w^n q(t), p'(w) = w^(n-1) (n q(t) - t q'(t)), t = 1/w
  cplx t = 1.0 / w;
  cplx q = c[0];
  cplx dq = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    dq = dq * t + q;
    q = q * t + c[k];
  }
  XComplex wn1 = XComplex(w).pow(n - 1);
  val = XComplex(q) * wn1 * XComplex(w);
  der = XComplex(static_cast<double>(n) * q - t * dq) * wn1;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  return s < a ? std::numeric_limits<std::uint64_t>::max() : s;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > std::numeric_limits<std::uint64_t>::max() / b) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

void seal(HoloNode& n) {
  n.size = 1;
  switch (n.op) {
    case HoloOp::Poly:
      n.constant = n.coeffs.size() == 1;
      n.zero = n.constant && n.coeffs[0] == cplx(0.0, 0.0);
      n.deg = n.coeffs.size() - 1;
      return;
    case HoloOp::Sum:
      n.zero = n.constant = true;
      n.deg = 0;
      for (const auto& k : n.kids) {
        n.zero = n.zero && k.is_zero();
        n.constant = n.constant && k.is_constant();
        n.deg = std::max(n.deg, k.degree());
        n.size = sat_add(n.size, k.node_count());
      }
      return;
    case HoloOp::Product: {
      bool all_const = true;
      n.zero = false;
      n.deg = 0;
      for (const auto& k : n.kids) {
        n.zero = n.zero || k.is_zero();
        all_const = all_const && k.is_constant();
        n.deg = sat_add(n.deg, k.degree());
        n.size = sat_add(n.size, k.node_count());
      }
      n.constant = n.zero || all_const;
      return;
    }
    case HoloOp::Scale:
      n.zero = n.c == cplx(0.0, 0.0) || n.kids[0].is_zero();
      n.constant = n.kids[0].is_constant();
      n.deg = n.kids[0].degree();
      n.size = sat_add(1, n.kids[0].node_count());
      return;
    case HoloOp::Power:
      n.zero = n.kids[0].is_zero();
      n.constant = n.kids[0].is_constant();
      n.deg = sat_mul(n.kids[0].degree(), n.n);
      n.size = sat_add(1, n.kids[0].node_count());
      return;
  }
}

bool shared(const std::shared_ptr<const HoloNode>& p) { return p.use_count() > 1; }

}  // namespace

HoloFunc::HoloFunc() : HoloFunc(constant(0.0)) {}

HoloFunc HoloFunc::constant(cplx c) { return poly({c}); }

HoloFunc HoloFunc::identity() { return poly({0.0, 1.0}); }

HoloFunc HoloFunc::poly(std::vector<cplx> coeffs, cplx a, cplx b) {
  for (const auto& c : coeffs)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw ParameterError("polynomial coefficient is not finite");
  trim(coeffs);
  auto n = make_node(HoloOp::Poly);
  if (coeffs.size() == 1) {
    a = 1.0;
    b = 0.0;
  }
  n->coeffs = std::move(coeffs);
  n->a = a;
  n->b = b;
  seal(*n);
  return HoloFunc(std::move(n), kInf);
}

double HoloFunc::derived_validity(const HoloNode& n) {
  double v = kInf;
  for (const auto& k : n.kids) v = std::min(v, k.validity_);
  return v;
}

HoloFunc HoloFunc::sum(std::vector<HoloFunc> terms) {
  std::vector<HoloFunc> kept;
  double validity = kInf;
  for (auto& t : terms) {
    validity = std::min(validity, t.validity_);
    if (!t.is_zero()) kept.push_back(std::move(t));
  }
  if (kept.empty()) return constant(0.0).with_validity(validity);
  if (kept.size() == 1) return kept[0].with_validity(validity);
  auto n = make_node(HoloOp::Sum);
  n->kids = std::move(kept);
  seal(*n);
  return HoloFunc(std::move(n), validity);
}

HoloFunc HoloFunc::product(std::vector<HoloFunc> factors) {
  double validity = kInf;
  for (const auto& f : factors) validity = std::min(validity, f.validity_);
  for (const auto& f : factors)
    if (f.is_zero()) return constant(0.0).with_validity(validity);
  if (factors.empty()) return constant(1.0);
  if (factors.size() == 1) return factors[0].with_validity(validity);
  auto n = make_node(HoloOp::Product);
  n->kids = std::move(factors);
  seal(*n);
  return HoloFunc(std::move(n), validity);
}

HoloFunc HoloFunc::scaled(cplx c, const HoloFunc& f) {
  if (c == cplx(0.0, 0.0) || f.is_zero()) return constant(0.0).with_validity(f.validity_);
  if (c == cplx(1.0, 0.0)) return f;
  auto n = make_node(HoloOp::Scale);
  n->c = c;
  n->kids = {f};
  seal(*n);
  return HoloFunc(std::move(n), f.validity_);
}

HoloFunc HoloFunc::power(const HoloFunc& f, std::uint64_t e) {
  if (e == 0) return constant(1.0).with_validity(f.validity_);
  if (e == 1) return f;
  auto n = make_node(HoloOp::Power);
  n->n = e;
  n->kids = {f};
  seal(*n);
  return HoloFunc(std::move(n), f.validity_);
}

HoloFunc HoloFunc::with_validity(double r) const {
  if (!(r > 0.0)) throw ParameterError("validity radius must be positive");
  return HoloFunc(node_, r);
}

void HoloFunc::check_domain(cplx z) const {
  if (!(std::abs(z) < validity_))
    throw DomainError("point outside the validity disc (|z| = " + std::to_string(std::abs(z)) +
                      ", radius " + std::to_string(validity_) + ")");
}

namespace {

XComplex value_rec(const std::shared_ptr<const HoloNode>& np, cplx z,
                   std::unordered_map<const HoloNode*, XComplex>& memo);

XComplex value_node(const HoloNode& n, cplx z, std::unordered_map<const HoloNode*, XComplex>& memo);

}  // namespace

// The recursion lives in HoloFunc so it can reach node_; the helpers above
// are thin shims.
XComplex HoloFunc::eval_x(cplx z) const {
  EvalCache cache;
  return eval_x(z, cache);
}

XComplex HoloFunc::eval_x(cplx z, EvalCache& cache) const {
  check_domain(z);
  return value_rec(node_, z, cache.values_);
}

namespace {

XComplex value_rec(const std::shared_ptr<const HoloNode>& np, cplx z,
                   std::unordered_map<const HoloNode*, XComplex>& memo) {
  const HoloNode& n = *np;
  if (n.op == HoloOp::Poly) return poly_value(n.coeffs, n.a * z + n.b);
  if (shared(np)) {
    auto it = memo.find(&n);
    if (it != memo.end()) return it->second;
    XComplex v = value_node(n, z, memo);
    memo.emplace(&n, v);
    return v;
  }
  return value_node(n, z, memo);
}

}  // namespace

// Access to the node pointer of a child for the free recursion helpers.
struct HoloAccess {
  static const std::shared_ptr<const HoloNode>& node(const HoloFunc& f) { return f.node_; }
};

namespace {

XComplex value_node(const HoloNode& n, cplx z, std::unordered_map<const HoloNode*, XComplex>& memo) {
  switch (n.op) {
    case HoloOp::Poly:
      return poly_value(n.coeffs, n.a * z + n.b);
    case HoloOp::Sum: {
      XComplex s;
      for (const auto& k : n.kids) s += value_rec(HoloAccess::node(k), z, memo);
      return s;
    }
    case HoloOp::Product: {
      XComplex p(1.0);
      for (const auto& k : n.kids) p *= value_rec(HoloAccess::node(k), z, memo);
      return p;
    }
    case HoloOp::Scale:
      return XComplex(n.c) * value_rec(HoloAccess::node(n.kids[0]), z, memo);
    case HoloOp::Power:
      return value_rec(HoloAccess::node(n.kids[0]), z, memo).pow(n.n);
  }
  return XComplex();
}

Jet jet_rec(const std::shared_ptr<const HoloNode>& np, cplx z,
            std::unordered_map<const HoloNode*, Jet>& memo);

Jet jet_node(const HoloNode& n, cplx z, std::unordered_map<const HoloNode*, Jet>& memo) {
  switch (n.op) {
    case HoloOp::Poly: {
      Jet j;
      poly_jet(n.coeffs, n.a * z + n.b, j.v, j.d);
      j.d = j.d * XComplex(n.a);
      return j;
    }
    case HoloOp::Sum: {
      Jet s;
      for (const auto& k : n.kids) {
        Jet c = jet_rec(HoloAccess::node(k), z, memo);
        s.v += c.v;
        s.d += c.d;
      }
      return s;
    }
    case HoloOp::Product: {
      const std::size_t m = n.kids.size();
      std::vector<Jet> js;
      js.reserve(m);
      for (const auto& k : n.kids) js.push_back(jet_rec(HoloAccess::node(k), z, memo));
      // prefix/suffix products avoid dividing by a vanishing factor
      std::vector<XComplex> suffix(m + 1, XComplex(1.0));
      for (std::size_t i = m; i-- > 0;) suffix[i] = suffix[i + 1] * js[i].v;
      XComplex prefix(1.0);
      XComplex d;
      for (std::size_t i = 0; i < m; ++i) {
        d += prefix * js[i].d * suffix[i + 1];
        prefix = prefix * js[i].v;
      }
      return {prefix, d};
    }
    case HoloOp::Scale: {
      Jet c = jet_rec(HoloAccess::node(n.kids[0]), z, memo);
      return {XComplex(n.c) * c.v, XComplex(n.c) * c.d};
    }
    case HoloOp::Power: {
      Jet c = jet_rec(HoloAccess::node(n.kids[0]), z, memo);
      XComplex p = c.v.pow(n.n - 1);
      return {p * c.v, XComplex(static_cast<double>(n.n)) * p * c.d};
    }
  }
  return {};
}

Jet jet_rec(const std::shared_ptr<const HoloNode>& np, cplx z,
            std::unordered_map<const HoloNode*, Jet>& memo) {
  const HoloNode& n = *np;
  if (n.op != HoloOp::Poly && shared(np)) {
    auto it = memo.find(&n);
    if (it != memo.end()) return it->second;
    Jet j = jet_node(n, z, memo);
    memo.emplace(&n, j);
    return j;
  }
  return jet_node(n, z, memo);
}

}  // namespace

Jet HoloFunc::jet(cplx z) const {
  EvalCache cache;
  return jet(z, cache);
}

Jet HoloFunc::jet(cplx z, EvalCache& cache) const {
  check_domain(z);
  return jet_rec(node_, z, cache.jets_);
}

namespace {
// Per-call memo tables for the DAG rewrites, so shared subtrees are visited once.
template <class Map>
struct MemoScope {
  static thread_local Map* active;
  Map own;
  bool root;
  MemoScope() : root(active == nullptr) {
    if (root) active = &own;
  }
  ~MemoScope() {
    if (root) active = nullptr;
  }
  Map& map() { return *active; }
};
template <class Map>
thread_local Map* MemoScope<Map>::active = nullptr;

using DerivMemo = std::unordered_map<const HoloNode*, HoloFunc>;
struct AffineMemo : std::unordered_map<const HoloNode*, HoloFunc> {};
struct PairHash {
  std::size_t operator()(const std::pair<const HoloNode*, const HoloNode*>& p) const {
    return std::hash<const void*>()(p.first) * 31u ^ std::hash<const void*>()(p.second);
  }
};
using EqualMemo = std::unordered_set<std::pair<const HoloNode*, const HoloNode*>, PairHash>;
}  // namespace

HoloFunc HoloFunc::derivative() const {
  MemoScope<DerivMemo> scope;
  auto& memo = scope.map();
  if (auto it = memo.find(node_.get()); it != memo.end()) return it->second.with_validity(validity_);
  const HoloNode& n = *node_;
  HoloFunc d;
  switch (n.op) {
    case HoloOp::Poly: {
      if (n.coeffs.size() == 1) {
        d = constant(0.0);
        break;
      }
      std::vector<cplx> dc(n.coeffs.size() - 1);
      for (std::size_t k = 1; k < n.coeffs.size(); ++k)
        dc[k - 1] = static_cast<double>(k) * n.coeffs[k] * n.a;
      d = poly(std::move(dc), n.a, n.b);
      break;
    }
    case HoloOp::Sum: {
      std::vector<HoloFunc> terms;
      for (const auto& k : n.kids) terms.push_back(k.derivative());
      d = sum(std::move(terms));
      break;
    }
    case HoloOp::Product: {
      std::vector<HoloFunc> terms;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        HoloFunc di = n.kids[i].derivative();
        if (di.is_zero()) continue;
        std::vector<HoloFunc> fs;
        for (std::size_t j = 0; j < n.kids.size(); ++j) fs.push_back(j == i ? di : n.kids[j]);
        terms.push_back(product(std::move(fs)));
      }
      d = sum(std::move(terms));
      break;
    }
    case HoloOp::Scale:
      d = scaled(n.c, n.kids[0].derivative());
      break;
    case HoloOp::Power: {
      const HoloFunc& f = n.kids[0];
      HoloFunc df = f.derivative();
      d = scaled(static_cast<double>(n.n), product({power(f, n.n - 1), df}));
      break;
    }
  }
  memo.emplace(node_.get(), d);
  return d.with_validity(validity_);
}

HoloFunc HoloFunc::precompose_affine(cplx alpha, cplx beta) const {
  if (alpha == cplx(0.0, 0.0)) throw ParameterError("affine precomposition needs alpha != 0");
  MemoScope<AffineMemo> scope;
  auto& memo = scope.map();
  const HoloNode& n = *node_;
  HoloFunc out;
  auto hit = memo.find(node_.get());
  if (hit != memo.end()) {
    out = hit->second;
  } else {
  switch (n.op) {
    case HoloOp::Poly:
      out = n.coeffs.size() == 1 ? *this : poly(n.coeffs, n.a * alpha, n.a * beta + n.b);
      break;
    case HoloOp::Sum:
    case HoloOp::Product: {
      std::vector<HoloFunc> kids;
      for (const auto& k : n.kids) kids.push_back(k.precompose_affine(alpha, beta));
      out = n.op == HoloOp::Sum ? sum(std::move(kids)) : product(std::move(kids));
      break;
    }
    case HoloOp::Scale:
      out = scaled(n.c, n.kids[0].precompose_affine(alpha, beta));
      break;
    case HoloOp::Power:
      out = power(n.kids[0].precompose_affine(alpha, beta), n.n);
      break;
  }
  memo.emplace(node_.get(), out);
  }
  double v = kInf;
  if (std::isfinite(validity_)) {
    v = (validity_ - std::abs(beta)) / std::abs(alpha);
    if (!(v > 0.0)) throw ParameterError("precomposition leaves no valid disc around 0");
  }
  return out.with_validity(v);
}

std::uint64_t HoloFunc::degree() const { return node_->deg; }

bool HoloFunc::is_zero() const { return node_->zero; }

bool HoloFunc::is_constant() const { return node_->constant; }

bool HoloFunc::is_nonconstant(double probe_radius) const {
  if (is_constant()) return false;
  double r = std::min(probe_radius, 0.5 * validity_);
  HoloFunc d = derivative();
  EvalCache cache;
  for (int k = 0; k < 17; ++k) {
    cplx z = k == 16 ? cplx(0.0, 0.0) : std::polar(r, 2.0 * M_PI * (k + 0.37) / 16.0);
    cache.clear();
    if (!d.eval_x(z, cache).is_zero()) return true;
  }
  return false;
}

bool HoloFunc::structurally_equal(const HoloFunc& other) const {
  if (validity_ != other.validity_) return false;
  if (node_ == other.node_) return true;
  MemoScope<EqualMemo> scope;
  auto key = std::make_pair(node_.get(), other.node_.get());
  if (scope.map().count(key)) return true;
  const HoloNode& a = *node_;
  const HoloNode& b = *other.node_;
  if (a.op != b.op || a.kids.size() != b.kids.size()) return false;
  switch (a.op) {
    case HoloOp::Poly:
      if (a.coeffs != b.coeffs || a.a != b.a || a.b != b.b) return false;
      break;
    case HoloOp::Scale:
      if (a.c != b.c) return false;
      break;
    case HoloOp::Power:
      if (a.n != b.n) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.kids.size(); ++i)
    if (!a.kids[i].structurally_equal(b.kids[i])) return false;
  scope.map().insert(key);
  return true;
}

std::size_t HoloFunc::node_count() const { return static_cast<std::size_t>(node_->size); }

HoloOp HoloFunc::op() const { return node_->op; }
const std::vector<cplx>& HoloFunc::coeffs() const { return node_->coeffs; }
cplx HoloFunc::affine_a() const { return node_->a; }
cplx HoloFunc::affine_b() const { return node_->b; }
cplx HoloFunc::scale_factor() const { return node_->c; }
std::uint64_t HoloFunc::exponent() const { return node_->n; }
const std::vector<HoloFunc>& HoloFunc::children() const { return node_->kids; }

nlohmann::json complex_to_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

cplx complex_from_json(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("expected a complex number as [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

nlohmann::json HoloFunc::to_json() const {
  const HoloNode& n = *node_;
  nlohmann::json j;
  auto kids = [&] {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& k : n.kids) a.push_back(k.to_json());
    return a;
  };
  switch (n.op) {
    case HoloOp::Poly: {
      j["op"] = "poly";
      nlohmann::json cs = nlohmann::json::array();
      for (const auto& c : n.coeffs) cs.push_back(complex_to_json(c));
      j["coeffs"] = cs;
      if (n.a != cplx(1.0, 0.0) || n.b != cplx(0.0, 0.0)) {
        j["a"] = complex_to_json(n.a);
        j["b"] = complex_to_json(n.b);
      }
      break;
    }
    case HoloOp::Sum:
      j["op"] = "sum";
      j["children"] = kids();
      break;
    case HoloOp::Product:
      j["op"] = "prod";
      j["children"] = kids();
      break;
    case HoloOp::Scale:
      j["op"] = "scale";
      j["coeffs"] = nlohmann::json::array({complex_to_json(n.c)});
      j["children"] = kids();
      break;
    case HoloOp::Power:
      j["op"] = "pow";
      j["n"] = n.n;
      j["children"] = kids();
      break;
  }
  double dv = derived_validity(n);
  if (validity_ != dv) {
    if (std::isfinite(validity_))
      j["validity_radius"] = validity_;
    else
      j["validity_radius"] = nullptr;
  }
  return j;
}

HoloFunc HoloFunc::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("op") || !j["op"].is_string())
    throw ConfigError("function node needs a string 'op'");
  const std::string op = j["op"].get<std::string>();
  auto children = [&]() {
    std::vector<HoloFunc> ks;
    if (!j.contains("children") || !j["children"].is_array())
      throw ConfigError("'" + op + "' node needs a 'children' array");
    for (const auto& c : j["children"]) ks.push_back(from_json(c));
    return ks;
  };
  auto one_child = [&]() {
    auto ks = children();
    if (ks.size() != 1) throw ConfigError("'" + op + "' node takes exactly one child");
    return ks[0];
  };
  auto node = make_node(HoloOp::Poly);
  if (op == "poly") {
    if (!j.contains("coeffs") || !j["coeffs"].is_array() || j["coeffs"].empty())
      throw ConfigError("poly node needs a nonempty 'coeffs' array");
    std::vector<cplx> cs;
    for (const auto& c : j["coeffs"]) cs.push_back(complex_from_json(c));
    cplx a = j.contains("a") ? complex_from_json(j["a"]) : cplx(1.0, 0.0);
    cplx b = j.contains("b") ? complex_from_json(j["b"]) : cplx(0.0, 0.0);
    // bypass trimming so the round trip is exact
    node->coeffs = std::move(cs);
    node->a = a;
    node->b = b;
  } else if (op == "sum" || op == "prod") {
    node->op = op == "sum" ? HoloOp::Sum : HoloOp::Product;
    node->kids = children();
    if (node->kids.empty()) throw ConfigError("'" + op + "' node needs children");
  } else if (op == "scale") {
    node->op = HoloOp::Scale;
    if (!j.contains("coeffs") || !j["coeffs"].is_array() || j["coeffs"].size() != 1)
      throw ConfigError("scale node needs 'coeffs' with one entry");
    node->c = complex_from_json(j["coeffs"][0]);
    node->kids = {one_child()};
  } else if (op == "pow") {
    node->op = HoloOp::Power;
    if (!j.contains("n") || !j["n"].is_number_unsigned())
      throw ConfigError("pow node needs a nonnegative integer 'n'");
    node->n = j["n"].get<std::uint64_t>();
    node->kids = {one_child()};
  } else {
    throw ConfigError("unknown function op '" + op + "'");
  }
  double v = derived_validity(*node);
  if (j.contains("validity_radius")) {
    const auto& vr = j["validity_radius"];
    if (vr.is_null())
      v = kInf;
    else if (vr.is_number() && vr.get<double>() > 0.0)
      v = vr.get<double>();
    else
      throw ConfigError("validity_radius must be a positive number or null");
  }
  seal(*node);
  return HoloFunc(std::move(node), v);
}

double HoloPair::validity_radius() const { return std::min(g1.validity_radius(), g2.validity_radius()); }

nlohmann::json HoloPair::to_json() const { return nlohmann::json::array({g1.to_json(), g2.to_json()}); }

HoloPair HoloPair::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("a map is a JSON array of two functions");
  return {HoloFunc::from_json(j[0]), HoloFunc::from_json(j[1])};
}

}  // namespace eclab
