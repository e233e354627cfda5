#pragma once

// Expression trees used as agent behaviour rules.
//
// An Expr is stored as a prefix-ordered node vector, so every subtree is a
// contiguous range and subtree replacement is a splice. Values are plain
// doubles: booleans are 1/0 and any nonzero number is true in a boolean
// context. Arithmetic never produces NaN or infinity (non-finite results
// evaluate to 0) and division by zero yields 1.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abmgp/rng.hpp"

namespace abmgp {

enum class Op : std::uint8_t {
  Const,
  Var,
  Not,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Gt,
  Ge,
  Lt,
  Le,
  Eq,
  Ne,
  And,
  Or,
};

int arity(Op op) noexcept;
bool is_comparison(Op op) noexcept;
bool is_logical(Op op) noexcept;  // Not, And, Or
/// True for operators whose result is always 0 or 1.
bool is_boolean_valued(Op op) noexcept;
std::string_view op_symbol(Op op) noexcept;
std::optional<Op> op_from_symbol(std::string_view symbol) noexcept;

inline double finite_or_zero(double v) noexcept { return (v <= 1.7976931348623157e308 && v >= -1.7976931348623157e308) ? v : 0.0; }

/// The single definition of every operator's numeric semantics. The
/// evaluator, the compiled kernels and the constant folder all call this.
inline double apply_op(Op op, double a, double b = 0.0) noexcept {
  switch (op) {
    case Op::Not: return a == 0.0 ? 1.0 : 0.0;
    case Op::Neg: return -a;
    case Op::Add: return finite_or_zero(a + b);
    case Op::Sub: return finite_or_zero(a - b);
    case Op::Mul: return finite_or_zero(a * b);
    case Op::Div: return b == 0.0 ? 1.0 : finite_or_zero(a / b);
    case Op::Gt: return a > b ? 1.0 : 0.0;
    case Op::Ge: return a >= b ? 1.0 : 0.0;
    case Op::Lt: return a < b ? 1.0 : 0.0;
    case Op::Le: return a <= b ? 1.0 : 0.0;
    case Op::Eq: return a == b ? 1.0 : 0.0;
    case Op::Ne: return a != b ? 1.0 : 0.0;
    case Op::And: return (a != 0.0 && b != 0.0) ? 1.0 : 0.0;
    case Op::Or: return (a != 0.0 || b != 0.0) ? 1.0 : 0.0;
    case Op::Const:
    case Op::Var:
      break;
  }
  return 0.0;
}

inline bool truthy(double v) noexcept { return v != 0.0; }

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const only
  std::string name;    // Var only

  friend bool operator==(const Node& a, const Node& b) noexcept;
};

class Expr {
 public:
  Expr();  // the constant 0

  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr unary(Op op, const Expr& child);
  static Expr binary(Op op, const Expr& lhs, const Expr& rhs);
  /// Throws std::invalid_argument unless `nodes` is one well-formed prefix tree.
  static Expr from_prefix(std::vector<Node> nodes);

  std::span<const Node> nodes() const noexcept { return nodes_; }
  const Node& root() const noexcept { return nodes_.front(); }
  Op op() const noexcept { return nodes_.front().op; }
  std::size_t size() const noexcept { return nodes_.size(); }
  int depth() const;

  bool is_constant() const noexcept { return nodes_.size() == 1 && nodes_[0].op == Op::Const; }
  bool is_variable() const noexcept { return nodes_.size() == 1 && nodes_[0].op == Op::Var; }
  double constant_value() const noexcept { return nodes_[0].value; }

  /// One past the last node of the subtree rooted at `index`.
  std::size_t subtree_end(std::size_t index) const;
  Expr subtree(std::size_t index) const;
  /// Copy of this tree with the subtree at `index` replaced.
  Expr replace_subtree(std::size_t index, const Expr& replacement) const;
  /// Child `k` of the root.
  Expr child(int k) const;
  /// Level of every node, root = 1.
  std::vector<int> node_levels() const;

  std::set<std::string> variables() const;

  friend bool operator==(const Expr& a, const Expr& b) noexcept { return a.nodes_ == b.nodes_; }

 private:
  explicit Expr(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}
  std::vector<Node> nodes_;
};

using VarBindings = std::map<std::string, double, std::less<>>;

/// Throws EvalError naming the first unbound variable.
double eval(const Expr& expr, const VarBindings& bindings);

/// `IF condition THEN then_action ELSE else_action`.
///
/// A rule with no then_action is a bare expression: its value is the
/// condition's value (an action amount, or a classifier coerced to boolean).
/// A missing else_action evaluates to 0.
struct Rule {
  Expr condition;
  std::optional<Expr> then_action;
  std::optional<Expr> else_action;

  static Rule bare(Expr e) { return Rule{std::move(e), std::nullopt, std::nullopt}; }
  static Rule conditional(Expr c, Expr t, std::optional<Expr> e = std::nullopt) {
    return Rule{std::move(c), std::move(t), std::move(e)};
  }

  bool is_conditional() const noexcept { return then_action.has_value(); }
  /// Evolvable slots in order: condition, then, else (present ones only).
  int slot_count() const noexcept;
  const Expr& slot(int i) const;
  Expr& slot(int i);
  std::size_t size() const noexcept;
  int depth() const;
  std::set<std::string> variables() const;

  friend bool operator==(const Rule&, const Rule&) = default;
};

double eval(const Rule& rule, const VarBindings& bindings);

// ---------------------------------------------------------------------------
// Grammar and random generation

struct VarSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool integral = false;
};

struct ConstantPool {
  std::optional<std::pair<int, int>> integers;       // inclusive
  std::optional<std::pair<double, double>> reals;    // [lo, hi]
  double real_step = 0.01;                           // reals are rounded to this grid
};

struct Grammar {
  std::vector<VarSpec> terminals;
  ConstantPool constants;
  std::vector<Op> operators;
  int max_depth = 8;
  double constant_probability = 0.3;  // chance a terminal is a constant

  /// Throws ConfigError.
  void validate() const;
  bool has_variable(std::string_view name) const;
  std::vector<std::string> variable_names() const;
  /// True when every variable and every constant is integer valued.
  bool integral() const;
};

/// Every non-terminal operator.
std::vector<Op> all_operators();

enum class GrowMethod { Full, Grow };

/// Ramped half-and-half draw: depth uniform in [2, max_depth] (1 when
/// max_depth is 1), full or grow with equal probability.
Expr random_expr(const Grammar& grammar, Rng& rng);
Expr random_expr(const Grammar& grammar, Rng& rng, int max_depth, GrowMethod method);

// ---------------------------------------------------------------------------
// Variable ranges (used by range-aware pruning and sampled equivalence)

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  bool is_point() const noexcept { return lo == hi; }
};

struct VarRange {
  double lo = 0.0;
  double hi = 0.0;
  bool integral = false;
};

/// `greater >= lesser` holds in every reachable state.
struct OrderFact {
  std::string greater;
  std::string lesser;
};

struct VarRanges {
  std::map<std::string, VarRange, std::less<>> vars;
  std::vector<OrderFact> facts;

  const VarRange* find(std::string_view name) const;
};

// ---------------------------------------------------------------------------
// Text form

std::string render(const Expr& expr);
/// `IF c THEN a ELSE b`, `IF c THEN a`, or the bare expression.
std::string render(const Rule& rule);

/// Identifier whitelist for parsing. Empty optional accepts any identifier.
using Vocabulary = std::optional<std::set<std::string, std::less<>>>;

Expr parse_expr(std::string_view text, const Vocabulary& vocabulary = std::nullopt);
Rule parse_rule(std::string_view text, const Vocabulary& vocabulary = std::nullopt);

struct NamedRule {
  std::string name;  // empty when the line had no `name:` prefix
  Rule rule;
};

/// One rule per line, optionally prefixed `name:`. `#` starts a comment.
std::vector<NamedRule> parse_rule_file(std::string_view text, const Vocabulary& vocabulary = std::nullopt);
std::vector<NamedRule> read_rule_file(const std::string& path, const Vocabulary& vocabulary = std::nullopt);

}  // namespace abmgp
