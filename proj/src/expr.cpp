#include "abmgp/expr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "abmgp/errors.hpp"

namespace abmgp {

int arity(Op op) noexcept {
  switch (op) {
    case Op::Const:
    case Op::Var:
      return 0;
    case Op::Not:
    case Op::Neg:
      return 1;
    default:
      return 2;
  }
}

bool is_comparison(Op op) noexcept {
  switch (op) {
    case Op::Gt:
    case Op::Ge:
    case Op::Lt:
    case Op::Le:
    case Op::Eq:
    case Op::Ne:
      return true;
    default:
      return false;
  }
}

bool is_logical(Op op) noexcept { return op == Op::Not || op == Op::And || op == Op::Or; }

bool is_boolean_valued(Op op) noexcept { return is_comparison(op) || is_logical(op); }

std::string_view op_symbol(Op op) noexcept {
  switch (op) {
    case Op::Const: return "const";
    case Op::Var: return "var";
    case Op::Not: return "NOT";
    case Op::Neg: return "-";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::And: return "AND";
    case Op::Or: return "OR";
  }
  return "?";
}

std::optional<Op> op_from_symbol(std::string_view s) noexcept {
  static constexpr std::pair<std::string_view, Op> table[] = {
      {"NOT", Op::Not}, {"NEG", Op::Neg}, {"+", Op::Add},  {"-", Op::Sub},  {"*", Op::Mul},
      {"/", Op::Div},   {">", Op::Gt},    {">=", Op::Ge},  {"<", Op::Lt},   {"<=", Op::Le},
      {"==", Op::Eq},   {"!=", Op::Ne},   {"AND", Op::And}, {"OR", Op::Or},
  };
  for (const auto& [sym, op] : table)
    if (sym == s) return op;
  return std::nullopt;
}

bool operator==(const Node& a, const Node& b) noexcept {
  if (a.op != b.op) return false;
  if (a.op == Op::Const) return a.value == b.value;
  if (a.op == Op::Var) return a.name == b.name;
  return true;
}

// ---------------------------------------------------------------------------

Expr::Expr() : nodes_{Node{Op::Const, 0.0, {}}} {}

Expr Expr::constant(double value) { return Expr(std::vector<Node>{Node{Op::Const, value, {}}}); }

Expr Expr::variable(std::string name) { return Expr(std::vector<Node>{Node{Op::Var, 0.0, std::move(name)}}); }

Expr Expr::unary(Op op, const Expr& child) {
  if (arity(op) != 1) throw std::invalid_argument("not a unary operator");
  std::vector<Node> nodes;
  nodes.reserve(child.size() + 1);
  nodes.push_back(Node{op, 0.0, {}});
  nodes.insert(nodes.end(), child.nodes_.begin(), child.nodes_.end());
  return Expr(std::move(nodes));
}

Expr Expr::binary(Op op, const Expr& lhs, const Expr& rhs) {
  if (arity(op) != 2) throw std::invalid_argument("not a binary operator");
  std::vector<Node> nodes;
  nodes.reserve(lhs.size() + rhs.size() + 1);
  nodes.push_back(Node{op, 0.0, {}});
  nodes.insert(nodes.end(), lhs.nodes_.begin(), lhs.nodes_.end());
  nodes.insert(nodes.end(), rhs.nodes_.begin(), rhs.nodes_.end());
  return Expr(std::move(nodes));
}

Expr Expr::from_prefix(std::vector<Node> nodes) {
  // `need` counts subtrees still owed; a well-formed prefix tree reaches zero
  // exactly at the last node.
  std::size_t need = 1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (need == 0) throw std::invalid_argument("trailing nodes after a complete tree");
    need = need - 1 + static_cast<std::size_t>(arity(nodes[i].op));
  }
  if (nodes.empty() || need != 0) throw std::invalid_argument("incomplete prefix tree");
  return Expr(std::move(nodes));
}

std::size_t Expr::subtree_end(std::size_t index) const {
  if (index >= nodes_.size()) throw std::out_of_range("subtree index");
  std::size_t need = 1;
  std::size_t i = index;
  while (need > 0) {
    need = need - 1 + static_cast<std::size_t>(arity(nodes_[i].op));
    ++i;
  }
  return i;
}

Expr Expr::subtree(std::size_t index) const {
  const std::size_t end = subtree_end(index);
  return Expr(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(index),
                                nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

Expr Expr::replace_subtree(std::size_t index, const Expr& replacement) const {
  const std::size_t end = subtree_end(index);
  std::vector<Node> nodes;
  nodes.reserve(nodes_.size() - (end - index) + replacement.size());
  nodes.insert(nodes.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(index));
  nodes.insert(nodes.end(), replacement.nodes_.begin(), replacement.nodes_.end());
  nodes.insert(nodes.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
  return Expr(std::move(nodes));
}

Expr Expr::child(int k) const {
  if (k < 0 || k >= arity(op())) throw std::out_of_range("child index");
  std::size_t index = 1;
  for (int i = 0; i < k; ++i) index = subtree_end(index);
  return subtree(index);
}

std::vector<int> Expr::node_levels() const {
  std::vector<int> levels(nodes_.size());
  // (level, children still to be seen) for each interior node on the path.
  std::vector<std::pair<int, int>> open;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const int level = open.empty() ? 1 : open.back().first + 1;
    levels[i] = level;
    if (!open.empty() && --open.back().second == 0) open.pop_back();
    const int a = arity(nodes_[i].op);
    if (a > 0) open.emplace_back(level, a);
  }
  return levels;
}

int Expr::depth() const {
  const auto levels = node_levels();
  return *std::max_element(levels.begin(), levels.end());
}

std::set<std::string> Expr::variables() const {
  std::set<std::string> out;
  for (const auto& n : nodes_)
    if (n.op == Op::Var) out.insert(n.name);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double eval_at(std::span<const Node> nodes, std::size_t& i, const VarBindings& bindings) {
  const Node& n = nodes[i++];
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) throw EvalError("unbound variable '" + n.name + "'");
      return it->second;
    }
    case Op::Not:
    case Op::Neg:
      return apply_op(n.op, eval_at(nodes, i, bindings));
    default: {
      const double a = eval_at(nodes, i, bindings);
      const double b = eval_at(nodes, i, bindings);
      return apply_op(n.op, a, b);
    }
  }
}

}  // namespace

double eval(const Expr& expr, const VarBindings& bindings) {
  std::size_t i = 0;
  return eval_at(expr.nodes(), i, bindings);
}

int Rule::slot_count() const noexcept { return 1 + (then_action ? 1 : 0) + (else_action ? 1 : 0); }

const Expr& Rule::slot(int i) const {
  if (i == 0) return condition;
  if (i == 1 && then_action) return *then_action;
  if (i == 2 && else_action) return *else_action;
  throw std::out_of_range("rule slot");
}

Expr& Rule::slot(int i) {
  return const_cast<Expr&>(static_cast<const Rule&>(*this).slot(i));
}

std::size_t Rule::size() const noexcept {
  std::size_t n = condition.size();
  if (then_action) n += then_action->size();
  if (else_action) n += else_action->size();
  return n;
}

int Rule::depth() const {
  int d = condition.depth();
  if (then_action) d = std::max(d, then_action->depth());
  if (else_action) d = std::max(d, else_action->depth());
  return d;
}

std::set<std::string> Rule::variables() const {
  auto out = condition.variables();
  if (then_action) out.merge(then_action->variables());
  if (else_action) out.merge(else_action->variables());
  return out;
}

double eval(const Rule& rule, const VarBindings& bindings) {
  const double c = eval(rule.condition, bindings);
  if (!rule.then_action) return c;
  if (truthy(c)) return eval(*rule.then_action, bindings);
  return rule.else_action ? eval(*rule.else_action, bindings) : 0.0;
}

// ---------------------------------------------------------------------------

void Grammar::validate() const {
  if (terminals.empty()) throw ConfigError("grammar: terminal set is empty");
  if (operators.empty()) throw ConfigError("grammar: operator set is empty");
  for (Op op : operators)
    if (arity(op) == 0) throw ConfigError("grammar: operator set contains a terminal");
  if (max_depth < 1) throw ConfigError("grammar: max_depth must be >= 1");
  if (constants.integers && constants.integers->first > constants.integers->second)
    throw ConfigError("grammar: integer constant range is empty");
  if (constants.reals && !(constants.reals->first <= constants.reals->second))
    throw ConfigError("grammar: real constant range is empty");
  if (constant_probability < 0.0 || constant_probability > 1.0)
    throw ConfigError("grammar: constant_probability must be in [0, 1]");
  for (const auto& t : terminals)
    if (!(t.lo <= t.hi)) throw ConfigError("grammar: empty range for variable " + t.name);
}

bool Grammar::has_variable(std::string_view name) const {
  return std::any_of(terminals.begin(), terminals.end(), [&](const VarSpec& v) { return v.name == name; });
}

std::vector<std::string> Grammar::variable_names() const {
  std::vector<std::string> out;
  out.reserve(terminals.size());
  for (const auto& t : terminals) out.push_back(t.name);
  return out;
}

bool Grammar::integral() const {
  if (constants.reals) return false;
  return std::all_of(terminals.begin(), terminals.end(), [](const VarSpec& v) { return v.integral; });
}

std::vector<Op> all_operators() {
  return {Op::Not, Op::Neg, Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Gt, Op::Ge,
          Op::Lt,  Op::Le,  Op::Eq,  Op::Ne,  Op::And, Op::Or};
}

namespace {

Node random_constant(const ConstantPool& pool, Rng& rng) {
  const bool use_int = pool.integers && (!pool.reals || uniform_int(rng, 0, 1) == 0);
  if (use_int) return Node{Op::Const, static_cast<double>(uniform_int(rng, pool.integers->first, pool.integers->second)), {}};
  double v = uniform_real(rng, pool.reals->first, pool.reals->second);
  if (pool.real_step > 0.0) {
    // k / 100 rather than k * 0.01, so 0.95 prints as 0.95.
    const double per_unit = std::round(1.0 / pool.real_step);
    v = std::fabs(per_unit * pool.real_step - 1.0) < 1e-12 ? std::round(v * per_unit) / per_unit
                                                          : std::round(v / pool.real_step) * pool.real_step;
  }
  // Rounding to the grid must not leave the declared range.
  v = std::clamp(v, pool.reals->first, pool.reals->second);
  return Node{Op::Const, v, {}};
}

Node random_terminal(const Grammar& g, Rng& rng) {
  const bool has_constants = g.constants.integers || g.constants.reals;
  if (has_constants && uniform_real(rng, 0.0, 1.0) < g.constant_probability) return random_constant(g.constants, rng);
  const auto& v = g.terminals[uniform_int<std::size_t>(rng, 0, g.terminals.size() - 1)];
  return Node{Op::Var, 0.0, v.name};
}

void grow_into(std::vector<Node>& out, const Grammar& g, Rng& rng, int depth_left, GrowMethod method) {
  bool terminal = depth_left <= 1;
  if (!terminal && method == GrowMethod::Grow) {
    const double n_terminals = static_cast<double>(g.terminals.size()) +
                               ((g.constants.integers || g.constants.reals) ? 1.0 : 0.0);
    const double n_functions = static_cast<double>(g.operators.size());
    terminal = uniform_real(rng, 0.0, 1.0) < n_terminals / (n_terminals + n_functions);
  }
  if (terminal) {
    out.push_back(random_terminal(g, rng));
    return;
  }
  const Op op = g.operators[uniform_int<std::size_t>(rng, 0, g.operators.size() - 1)];
  out.push_back(Node{op, 0.0, {}});
  for (int k = 0; k < arity(op); ++k) grow_into(out, g, rng, depth_left - 1, method);
}

}  // namespace

Expr random_expr(const Grammar& grammar, Rng& rng, int max_depth, GrowMethod method) {
  std::vector<Node> nodes;
  grow_into(nodes, grammar, rng, std::max(1, max_depth), method);
  return Expr::from_prefix(std::move(nodes));
}

Expr random_expr(const Grammar& grammar, Rng& rng) {
  const int depth = grammar.max_depth <= 1 ? 1 : uniform_int(rng, 2, grammar.max_depth);
  const GrowMethod method = uniform_int(rng, 0, 1) == 0 ? GrowMethod::Full : GrowMethod::Grow;
  return random_expr(grammar, rng, depth, method);
}

const VarRange* VarRanges::find(std::string_view name) const {
  auto it = vars.find(name);
  return it == vars.end() ? nullptr : &it->second;
}

}  // namespace abmgp
