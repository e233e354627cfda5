#include "abmgp/kernels.hpp"

#include <algorithm>
#include <exception>
#include <omp.h>

#include "abmgp/errors.hpp"

namespace abmgp {

namespace {

constexpr std::size_t kBatch = 256;

// r = l op r
template <Op op>
void binary_loop(const double* l, double* r, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) r[k] = apply_op(op, l[k], r[k]);
}

template <Op op>
void unary_loop(double* a, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) a[k] = apply_op(op, a[k]);
}

void apply_binary(Op op, const double* a, double* b, std::size_t n) {
  switch (op) {
    case Op::Add: binary_loop<Op::Add>(a, b, n); break;
    case Op::Sub: binary_loop<Op::Sub>(a, b, n); break;
    case Op::Mul: binary_loop<Op::Mul>(a, b, n); break;
    case Op::Div: binary_loop<Op::Div>(a, b, n); break;
    case Op::Gt: binary_loop<Op::Gt>(a, b, n); break;
    case Op::Ge: binary_loop<Op::Ge>(a, b, n); break;
    case Op::Lt: binary_loop<Op::Lt>(a, b, n); break;
    case Op::Le: binary_loop<Op::Le>(a, b, n); break;
    case Op::Eq: binary_loop<Op::Eq>(a, b, n); break;
    case Op::Ne: binary_loop<Op::Ne>(a, b, n); break;
    case Op::And: binary_loop<Op::And>(a, b, n); break;
    case Op::Or: binary_loop<Op::Or>(a, b, n); break;
    default: break;
  }
}

const Column& label_column(const ReferenceDataset& data, std::string_view label) {
  const Column& c = data.require(label);
  if (c.kind != ColumnKind::Label) throw DataError("column '" + c.name + "' is not a label column");
  return c;
}

void tally(Confusion& c, bool predicted, double label) {
  if (label != 0.0) (predicted ? c.tp : c.fn)++;
  else (predicted ? c.fp : c.tn)++;
}

Confusion count_range(const RuleProgram& prog, const ReferenceDataset& data, const Column& label,
                      std::span<const std::size_t> rows, std::size_t first_batch, std::size_t last_batch) {
  std::vector<double> out(kBatch), branch(kBatch), stack(std::max<std::size_t>(1, prog.max_stack()) * kBatch);
  Confusion c;
  for (std::size_t b = first_batch; b < last_batch; ++b) {
    const std::size_t lo = b * kBatch;
    const std::size_t n = std::min(kBatch, rows.size() - lo);
    auto chunk = rows.subspan(lo, n);
    prog.eval_batch(data, chunk, out.data(), branch.data(), stack.data());
    for (std::size_t k = 0; k < n; ++k) tally(c, truthy(out[k]), label.values[chunk[k]]);
  }
  return c;
}

}  // namespace

Program Program::compile(const Expr& expr, std::span<const std::string> names) {
  Program p;
  auto nodes = expr.nodes();
  p.code_.reserve(nodes.size());
  std::size_t depth = 0;
  // Walking the prefix array backwards gives postfix with the children
  // swapped, so a binary operator finds its left operand on top.
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const Node& n = nodes[i];
    Instr in{n.op, n.value, 0};
    if (n.op == Op::Var) {
      auto it = std::find(names.begin(), names.end(), n.name);
      if (it == names.end()) {
        std::string list;
        for (const auto& name : names) list += (list.empty() ? "" : ", ") + name;
        throw DataError("unknown variable '" + n.name + "'; available: " + list);
      }
      in.slot = static_cast<std::size_t>(it - names.begin());
    }
    p.code_.push_back(in);
    depth = depth + 1 - static_cast<std::size_t>(arity(n.op));
    p.max_stack_ = std::max(p.max_stack_, depth);
  }
  return p;
}

Program Program::compile(const Expr& expr, const ReferenceDataset& data) {
  for (const auto& v : expr.variables()) data.require(v);
  const auto names = data.names();
  return compile(expr, names);
}

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
double Program::eval(const double* values) const {
  double small[64];
  std::vector<double> big;
  double* s = small;
  if (max_stack_ > 64) {
    big.resize(max_stack_);
    s = big.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: s[sp++] = in.value; break;
      case Op::Var: s[sp++] = values[in.slot]; break;
      case Op::Not:
      case Op::Neg: s[sp - 1] = apply_op(in.op, s[sp - 1]); break;
      default:
        // top is the left operand
        s[sp - 2] = apply_op(in.op, s[sp - 1], s[sp - 2]);
        --sp;
        break;
    }
  }
  return s[0];
}
#pragma GCC diagnostic pop

double Program::eval_row(const ReferenceDataset& data, std::size_t row) const {
  std::vector<double> values(data.cols());
  for (std::size_t c = 0; c < data.cols(); ++c) values[c] = data.column(c).values[row];
  return eval(values.data());
}

void Program::eval_batch(const ReferenceDataset& data, std::span<const std::size_t> rows, double* out, double* stack) const {
  const std::size_t n = rows.size();
  std::size_t sp = 0;
  auto slot = [&](std::size_t k) { return stack + k * n; };
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: {
        double* d = slot(sp++);
        std::fill(d, d + n, in.value);
        break;
      }
      case Op::Var: {
        double* d = slot(sp++);
        const double* col = data.column(in.slot).values.data();
        for (std::size_t k = 0; k < n; ++k) d[k] = col[rows[k]];
        break;
      }
      case Op::Not: unary_loop<Op::Not>(slot(sp - 1), n); break;
      case Op::Neg: unary_loop<Op::Neg>(slot(sp - 1), n); break;
      default:
        // left operand is on top
        apply_binary(in.op, slot(sp - 1), slot(sp - 2), n);
        --sp;
        break;
    }
  }
  std::copy(stack, stack + n, out);
}

RuleProgram::RuleProgram(const Rule& rule, std::span<const std::string> names)
    : condition_(Program::compile(rule.condition, names)) {
  if (rule.then_action) then_ = Program::compile(*rule.then_action, names);
  if (rule.else_action) else_ = Program::compile(*rule.else_action, names);
}

RuleProgram::RuleProgram(const Rule& rule, const ReferenceDataset& data)
    : condition_(Program::compile(rule.condition, data)) {
  if (rule.then_action) then_ = Program::compile(*rule.then_action, data);
  if (rule.else_action) else_ = Program::compile(*rule.else_action, data);
}

double RuleProgram::eval(const double* values) const {
  const double c = condition_.eval(values);
  if (!then_) return c;
  if (truthy(c)) return then_->eval(values);
  return else_ ? else_->eval(values) : 0.0;
}

std::size_t RuleProgram::max_stack() const {
  std::size_t s = condition_.max_stack();
  if (then_) s = std::max(s, then_->max_stack());
  if (else_) s = std::max(s, else_->max_stack());
  return s;
}

// Both branches are evaluated for every row and selected afterwards. They
// have no side effects, so the result equals eval(Rule).
void RuleProgram::eval_batch(const ReferenceDataset& data, std::span<const std::size_t> rows, double* out,
                             double* branch, double* stack) const {
  condition_.eval_batch(data, rows, out, stack);
  if (!then_) return;
  const std::size_t n = rows.size();
  std::vector<char> take_then(n);
  for (std::size_t k = 0; k < n; ++k) take_then[k] = truthy(out[k]);
  then_->eval_batch(data, rows, branch, stack);
  for (std::size_t k = 0; k < n; ++k)
    if (take_then[k]) out[k] = branch[k];
  if (else_) else_->eval_batch(data, rows, branch, stack);
  for (std::size_t k = 0; k < n; ++k)
    if (!take_then[k]) out[k] = else_ ? branch[k] : 0.0;
}

Confusion confusion_reference(const Rule& rule, const ReferenceDataset& data, std::string_view label,
                              std::span<const std::size_t> rows) {
  const Column& lab = label_column(data, label);
  for (const auto& v : rule.variables()) data.require(v);
  VarBindings b;
  for (const auto& c : data.columns()) b[c.name] = 0.0;
  Confusion c;
  for (std::size_t r : rows) {
    for (const auto& col : data.columns()) b[col.name] = col.values[r];
    tally(c, truthy(eval(rule, b)), lab.values[r]);
  }
  return c;
}

Confusion confusion_batched(const Rule& rule, const ReferenceDataset& data, std::string_view label,
                            std::span<const std::size_t> rows, int workers) {
  const Column& lab = label_column(data, label);
  const RuleProgram prog(rule, data);
  const std::size_t batches = (rows.size() + kBatch - 1) / kBatch;
  if (workers <= 1 || batches < 2) return count_range(prog, data, lab, rows, 0, batches);

  Confusion total;
  const long long nb = static_cast<long long>(batches);
#pragma omp parallel num_threads(workers)
  {
    Confusion local;
#pragma omp for schedule(static)
    for (long long b = 0; b < nb; ++b)
      local += count_range(prog, data, lab, rows, static_cast<std::size_t>(b), static_cast<std::size_t>(b) + 1);
#pragma omp critical
    total += local;
  }
  return total;
}

std::vector<double> map_serial(std::size_t n, const std::function<double(std::size_t)>& f) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

std::vector<double> map_parallel(std::size_t n, const std::function<double(std::size_t)>& f, int workers) {
  if (workers <= 1) return map_serial(n, f);
  std::vector<double> out(n);
  std::vector<std::exception_ptr> errors(n);
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (long long i = 0; i < count; ++i) {
    try {
      out[i] = f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

int available_workers() { return std::max(1, omp_get_num_procs()); }

}  // namespace abmgp
