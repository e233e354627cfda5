#include "abmgp/prune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "abmgp/errors.hpp"

namespace abmgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExactLimit = 9007199254740992.0;  // 2^53

// Enclosure of the values eval() can produce. Endpoint arithmetic uses the
// same rounded operations as eval, and rounding is monotone, so the bounds
// are sound for the floating-point results themselves. `exact` additionally
// promises every value is an integer small enough that no rounding happens,
// which is what licenses the linear regrouping used for comparisons.
struct Box {
  double lo;
  double hi;
  bool exact;
};

Box unbounded() { return {-kInf, kInf, false}; }

Box checked(double lo, double hi, bool exact) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return unbounded();
  return {lo, hi, exact && std::fabs(lo) <= kExactLimit && std::fabs(hi) <= kExactLimit};
}

Box truth_box(std::optional<bool> v) {
  if (!v) return {0.0, 1.0, true};
  return *v ? Box{1.0, 1.0, true} : Box{0.0, 0.0, true};
}

bool is_integer(double v) { return std::nearbyint(v) == v && std::fabs(v) <= kExactLimit; }

std::optional<bool> truth_of(const Box& b) {
  if (b.lo == 0.0 && b.hi == 0.0) return false;
  if (b.lo > 0.0 || b.hi < 0.0) return true;
  return std::nullopt;
}

std::size_t end_of(std::span<const Node> nodes, std::size_t i) {
  std::size_t need = 1;
  while (need > 0) {
    need = need - 1 + static_cast<std::size_t>(arity(nodes[i].op));
    ++i;
  }
  return i;
}

/// Decide `lhs op rhs` from a bound on lhs - rhs.
std::optional<bool> decide_difference(Op op, double lo, double hi) {
  switch (op) {
    case Op::Gt:
      if (lo > 0.0) return true;
      if (hi <= 0.0) return false;
      break;
    case Op::Ge:
      if (lo >= 0.0) return true;
      if (hi < 0.0) return false;
      break;
    case Op::Lt:
      if (hi < 0.0) return true;
      if (lo >= 0.0) return false;
      break;
    case Op::Le:
      if (hi <= 0.0) return true;
      if (lo > 0.0) return false;
      break;
    case Op::Eq:
      if (lo == 0.0 && hi == 0.0) return true;
      if (lo > 0.0 || hi < 0.0) return false;
      break;
    case Op::Ne:
      if (lo == 0.0 && hi == 0.0) return false;
      if (lo > 0.0 || hi < 0.0) return true;
      break;
    default:
      break;
  }
  return std::nullopt;
}

std::optional<bool> decide_boxes(Op op, const Box& l, const Box& r) {
  switch (op) {
    case Op::Gt:
      if (l.lo > r.hi) return true;
      if (l.hi <= r.lo) return false;
      break;
    case Op::Ge:
      if (l.lo >= r.hi) return true;
      if (l.hi < r.lo) return false;
      break;
    case Op::Lt:
      if (l.hi < r.lo) return true;
      if (l.lo >= r.hi) return false;
      break;
    case Op::Le:
      if (l.hi <= r.lo) return true;
      if (l.lo > r.hi) return false;
      break;
    case Op::Eq:
      if (l.lo == l.hi && r.lo == r.hi && l.lo == r.lo) return true;
      if (l.hi < r.lo || l.lo > r.hi) return false;
      break;
    case Op::Ne:
      if (l.lo == l.hi && r.lo == r.hi && l.lo == r.lo) return false;
      if (l.hi < r.lo || l.lo > r.hi) return true;
      break;
    default:
      break;
  }
  return std::nullopt;
}

class Analyzer {
 public:
  explicit Analyzer(const VarRanges& ranges) : ranges_(ranges) {}

  Box box(std::span<const Node> nodes, std::size_t& i) const {
    const Node& n = nodes[i++];
    switch (n.op) {
      case Op::Const:
        return {n.value, n.value, is_integer(n.value)};
      case Op::Var: {
        const VarRange& r = range(n.name);
        return checked(r.lo, r.hi, r.integral);
      }
      case Op::Neg: {
        Box a = box(nodes, i);
        return {-a.hi, -a.lo, a.exact};
      }
      case Op::Not:
        return truth_box(negate(truth_of(box(nodes, i))));
      case Op::And: {
        auto a = truth_of(box(nodes, i));
        auto b = truth_of(box(nodes, i));
        if ((a && !*a) || (b && !*b)) return truth_box(false);
        if (a && b) return truth_box(true);
        return truth_box(std::nullopt);
      }
      case Op::Or: {
        auto a = truth_of(box(nodes, i));
        auto b = truth_of(box(nodes, i));
        if ((a && *a) || (b && *b)) return truth_box(true);
        if (a && b) return truth_box(false);
        return truth_box(std::nullopt);
      }
      case Op::Add: {
        Box a = box(nodes, i), b = box(nodes, i);
        return checked(a.lo + b.lo, a.hi + b.hi, a.exact && b.exact);
      }
      case Op::Sub: {
        Box a = box(nodes, i), b = box(nodes, i);
        return checked(a.lo - b.hi, a.hi - b.lo, a.exact && b.exact);
      }
      case Op::Mul: {
        Box a = box(nodes, i), b = box(nodes, i);
        if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) return unbounded();
        const double p[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
        return checked(*std::min_element(p, p + 4), *std::max_element(p, p + 4), a.exact && b.exact);
      }
      case Op::Div: {
        Box a = box(nodes, i), b = box(nodes, i);
        if (b.lo == 0.0 && b.hi == 0.0) return {1.0, 1.0, true};
        if (b.lo <= 0.0 && b.hi >= 0.0) return unbounded();
        if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) return unbounded();
        const double q[] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
        return checked(*std::min_element(q, q + 4), *std::max_element(q, q + 4), false);
      }
      default: {  // comparisons
        const std::size_t lhs = i;
        Box l = box(nodes, i);
        const std::size_t rhs = i;
        Box r = box(nodes, i);
        auto v = decide_boxes(n.op, l, r);
        if (!v && l.exact && r.exact) v = decide_linear(n.op, nodes, lhs, rhs);
        return truth_box(v);
      }
    }
  }

  Box box(const Expr& e) const {
    std::size_t i = 0;
    return box(e.nodes(), i);
  }

 private:
  static std::optional<bool> negate(std::optional<bool> v) {
    if (!v) return v;
    return !*v;
  }

  const VarRange& range(const std::string& name) const {
    const VarRange* r = ranges_.find(name);
    if (!r) throw DataError("no range given for variable '" + name + "'");
    return *r;
  }

  struct Linear {
    std::map<std::string, double> coef;
    double constant = 0.0;
    double residual_lo = 0.0;
    double residual_hi = 0.0;
  };

  void linear(std::span<const Node> nodes, std::size_t& i, double scale, Linear& out) const {
    const Node& n = nodes[i];
    switch (n.op) {
      case Op::Const:
        out.constant += scale * n.value;
        ++i;
        return;
      case Op::Var:
        out.coef[n.name] += scale;
        ++i;
        return;
      case Op::Add:
      case Op::Sub:
        ++i;
        linear(nodes, i, scale, out);
        linear(nodes, i, n.op == Op::Add ? scale : -scale, out);
        return;
      case Op::Neg:
        ++i;
        linear(nodes, i, -scale, out);
        return;
      case Op::Mul: {
        const std::size_t a = i + 1;
        const std::size_t b = end_of(nodes, a);
        if (nodes[a].op == Op::Const) {
          i = b;
          linear(nodes, i, scale * nodes[a].value, out);
          return;
        }
        if (nodes[b].op == Op::Const) {
          i = a;
          linear(nodes, i, scale * nodes[b].value, out);
          ++i;
          return;
        }
        break;
      }
      default:
        break;
    }
    Box b = box(nodes, i);
    out.residual_lo += scale >= 0.0 ? scale * b.lo : scale * b.hi;
    out.residual_hi += scale >= 0.0 ? scale * b.hi : scale * b.lo;
  }

  // Bound on lhs - rhs as an exact linear form over the variables, using
  // ordering facts to pair up terms with opposite signs. Every ordering of
  // the applicable facts gives a sound bound; the intersection is kept.
  std::optional<bool> decide_linear(Op op, std::span<const Node> nodes, std::size_t lhs, std::size_t rhs) const {
    Linear form;
    std::size_t i = lhs;
    linear(nodes, i, 1.0, form);
    i = rhs;
    linear(nodes, i, -1.0, form);

    std::vector<std::size_t> applicable;
    for (std::size_t f = 0; f < ranges_.facts.size(); ++f) {
      const auto& fact = ranges_.facts[f];
      auto g = form.coef.find(fact.greater);
      auto l = form.coef.find(fact.lesser);
      if (g != form.coef.end() && l != form.coef.end() && g->second * l->second < 0.0) applicable.push_back(f);
    }
    if (applicable.size() > 6) applicable.resize(6);

    double lo = -kInf, hi = kInf;
    auto consider = [&](const std::vector<std::size_t>& order) {
      auto coef = form.coef;
      double acc_lo = form.constant + form.residual_lo;
      double acc_hi = form.constant + form.residual_hi;
      for (std::size_t f : order) {
        const auto& fact = ranges_.facts[f];
        double& cg = coef[fact.greater];
        double& cl = coef[fact.lesser];
        if (cg * cl >= 0.0) continue;
        const double m = std::min(std::fabs(cg), std::fabs(cl));
        const VarRange& g = range(fact.greater);
        const VarRange& l = range(fact.lesser);
        // greater - lesser lies in [max(0, g.lo - l.hi), g.hi - l.lo].
        const double d_lo = std::max(0.0, g.lo - l.hi);
        const double d_hi = g.hi - l.lo;
        if (cg > 0.0) {
          acc_lo += m * d_lo;
          acc_hi += m * d_hi;
          cg -= m;
          cl += m;
        } else {
          acc_lo -= m * d_hi;
          acc_hi -= m * d_lo;
          cg += m;
          cl -= m;
        }
      }
      for (const auto& [name, c] : coef) {
        if (c == 0.0) continue;
        const VarRange& r = range(name);
        acc_lo += c > 0.0 ? c * r.lo : c * r.hi;
        acc_hi += c > 0.0 ? c * r.hi : c * r.lo;
      }
      lo = std::max(lo, acc_lo);
      hi = std::min(hi, acc_hi);
    };

    std::vector<std::size_t> order = applicable;
    std::sort(order.begin(), order.end());
    do {
      consider(order);
    } while (std::next_permutation(order.begin(), order.end()));

    if (!std::isfinite(lo) || !std::isfinite(hi) || std::fabs(lo) > kExactLimit || std::fabs(hi) > kExactLimit) return std::nullopt;
    return decide_difference(op, lo, hi);
  }

  const VarRanges& ranges_;
};

bool is_const(const Expr& e, double v) { return e.is_constant() && e.constant_value() == v; }
bool is_nonzero_const(const Expr& e) { return e.is_constant() && e.constant_value() != 0.0; }

bool boolean_valued(const Expr& e) {
  if (e.is_constant()) return e.constant_value() == 0.0 || e.constant_value() == 1.0;
  return is_boolean_valued(e.op());
}

// x coerced to 0/1 without changing its truth value.
Expr truth(const Expr& x) {
  if (boolean_valued(x)) return x;
  return Expr::binary(Op::Ne, x, Expr::constant(0.0));
}

Op inverse_comparison(Op op) {
  switch (op) {
    case Op::Gt: return Op::Le;
    case Op::Ge: return Op::Lt;
    case Op::Lt: return Op::Ge;
    case Op::Le: return Op::Gt;
    case Op::Eq: return Op::Ne;
    default: return Op::Eq;
  }
}

class Simplifier {
 public:
  explicit Simplifier(const VarRanges* ranges) : ranges_(ranges) {}

  Expr run(const Expr& e) const {
    Expr cur = e;
    for (int iter = 0; iter < 100; ++iter) {
      Expr next = pass(cur);
      if (next == cur) break;
      cur = std::move(next);
    }
    return cur;
  }

 private:
  Expr pass(const Expr& e) const {
    const int a = arity(e.op());
    if (a == 0) {
      if (ranges_ && e.is_variable()) {
        const VarRange* r = ranges_->find(e.root().name);
        if (!r) throw DataError("no range given for variable '" + e.root().name + "'");
        if (r->lo == r->hi) return Expr::constant(r->lo);
      }
      return e;
    }
    if (a == 1) return rewrite(e.op(), pass(e.child(0)), Expr());
    return rewrite(e.op(), pass(e.child(0)), pass(e.child(1)));
  }

  Expr rewrite(Op op, const Expr& a, const Expr& b) const {
    const bool unary = arity(op) == 1;
    if (a.is_constant() && (unary || b.is_constant()))
      return Expr::constant(apply_op(op, a.constant_value(), unary ? 0.0 : b.constant_value()));

    Expr e = identities(op, a, b);
    if (!ranges_) return e;

    Analyzer an(*ranges_);
    const Box bx = an.box(e);
    if (bx.lo == bx.hi) return Expr::constant(bx.lo);
    // x != 0 over non-negative integers reads better as x >= 1.
    if (e.op() == Op::Ne && e.size() >= 3) {
      Expr lhs = e.child(0), rhs = e.child(1);
      if (is_const(rhs, 0.0)) {
        const Box lb = an.box(lhs);
        if (lb.exact && lb.lo >= 0.0) return Expr::binary(Op::Ge, lhs, Expr::constant(1.0));
      }
    }
    return e;
  }

  static Expr identities(Op op, const Expr& a, const Expr& b) {
    switch (op) {
      case Op::Add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
      case Op::Sub:
        if (a == b) return Expr::constant(0.0);
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return Expr::unary(Op::Neg, b);
        break;
      case Op::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
      case Op::Div:
        // Protected division makes x / x equal to 1 even at x = 0.
        if (a == b) return Expr::constant(1.0);
        if (is_const(b, 1.0)) return a;
        break;
      case Op::Neg:
        if (a.op() == Op::Neg) return a.child(0);
        break;
      case Op::Not:
        if (a.op() == Op::Not && boolean_valued(a.child(0))) return a.child(0);
        if (is_comparison(a.op())) return Expr::binary(inverse_comparison(a.op()), a.child(0), a.child(1));
        break;
      case Op::And:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
        if (is_nonzero_const(a)) return truth(b);
        if (is_nonzero_const(b)) return truth(a);
        if (a == b) return truth(a);
        break;
      case Op::Or:
        if (is_nonzero_const(a) || is_nonzero_const(b)) return Expr::constant(1.0);
        if (is_const(a, 0.0)) return truth(b);
        if (is_const(b, 0.0)) return truth(a);
        if (a == b) return truth(a);
        break;
      default:
        if (is_comparison(op) && a == b)
          return Expr::constant((op == Op::Ge || op == Op::Le || op == Op::Eq) ? 1.0 : 0.0);
        break;
    }
    return arity(op) == 1 ? Expr::unary(op, a) : Expr::binary(op, a, b);
  }

  const VarRanges* ranges_;
};

Rule prune_rule(const Rule& rule, const Simplifier& s) {
  Rule out;
  out.condition = s.run(rule.condition);
  if (!rule.then_action) return out;
  Expr then_action = s.run(*rule.then_action);
  std::optional<Expr> else_action;
  if (rule.else_action) else_action = s.run(*rule.else_action);

  if (out.condition.is_constant()) {
    if (truthy(out.condition.constant_value())) return Rule::bare(std::move(then_action));
    return Rule::bare(else_action ? std::move(*else_action) : Expr::constant(0.0));
  }
  if (else_action && then_action == *else_action) return Rule::bare(std::move(then_action));
  if (!else_action && is_const(then_action, 0.0)) return Rule::bare(Expr::constant(0.0));
  return Rule::conditional(std::move(out.condition), std::move(then_action), std::move(else_action));
}

}  // namespace

Expr prune(const Expr& expr) { return Simplifier(nullptr).run(expr); }

Rule prune(const Rule& rule) { return prune_rule(rule, Simplifier(nullptr)); }

Expr prune_with_ranges(const Expr& expr, const VarRanges& ranges) { return Simplifier(&ranges).run(expr); }

Rule prune_with_ranges(const Rule& rule, const VarRanges& ranges) {
  for (const auto& v : rule.variables())
    if (!ranges.find(v)) throw DataError("no range given for variable '" + v + "'");
  return prune_rule(rule, Simplifier(&ranges));
}

Interval enclose(const Expr& expr, const VarRanges& ranges) {
  const Box b = Analyzer(ranges).box(expr);
  return {b.lo, b.hi};
}

VarRanges ranges_from_grammar(const Grammar& grammar) {
  VarRanges out;
  for (const auto& t : grammar.terminals) out.vars[t.name] = VarRange{t.lo, t.hi, t.integral};
  return out;
}

VarBindings sample_bindings(const VarRanges& ranges, Rng& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    VarBindings b;
    for (const auto& [name, r] : ranges.vars) {
      if (r.integral)
        b[name] = static_cast<double>(uniform_int<long long>(rng, static_cast<long long>(std::ceil(r.lo)), static_cast<long long>(std::floor(r.hi))));
      else
        b[name] = r.lo == r.hi ? r.lo : uniform_real(rng, r.lo, r.hi);
    }
    const bool ok = std::all_of(ranges.facts.begin(), ranges.facts.end(), [&](const OrderFact& f) {
      auto g = b.find(f.greater);
      auto l = b.find(f.lesser);
      return g == b.end() || l == b.end() || g->second >= l->second;
    });
    if (ok) return b;
  }
  throw ConfigError("ordering facts rejected 10000 consecutive samples; check the ranges");
}

namespace {

bool all_integral(const VarRanges& ranges) {
  return std::all_of(ranges.vars.begin(), ranges.vars.end(), [](const auto& kv) { return kv.second.integral; });
}

bool values_agree(double x, double y, bool exact) {
  if (exact) return x == y;
  return std::fabs(x - y) <= 1e-9 * std::max({1.0, std::fabs(x), std::fabs(y)});
}

template <typename T>
bool equivalent_impl(const T& a, const T& b, const VarRanges& ranges, int n, Rng& rng) {
  for (const auto& v : a.variables())
    if (!ranges.find(v)) throw DataError("no range given for variable '" + v + "'");
  for (const auto& v : b.variables())
    if (!ranges.find(v)) throw DataError("no range given for variable '" + v + "'");
  const bool exact = all_integral(ranges);
  for (int k = 0; k < n; ++k) {
    const VarBindings bind = sample_bindings(ranges, rng);
    if (!values_agree(eval(a, bind), eval(b, bind), exact)) return false;
  }
  return true;
}

}  // namespace

bool equivalent_sampled(const Expr& a, const Expr& b, const VarRanges& ranges, int n, Rng& rng) {
  return equivalent_impl(a, b, ranges, n, rng);
}

bool equivalent_sampled(const Rule& a, const Rule& b, const VarRanges& ranges, int n, Rng& rng) {
  return equivalent_impl(a, b, ranges, n, rng);
}

}  // namespace abmgp
