#pragma once

// Hot loops, each in two forms: a serial reference that walks the tree
// with eval() and a batched / OpenMP version used in production. Tests
// check that the two agree exactly; bench/ measures the difference.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abmgp/expr.hpp"
#include "abmgp/refdata.hpp"

namespace abmgp {

/// An expression compiled to postfix with each variable bound to a slot
/// index: a dataset column, or a position in a caller's value array.
class Program {
 public:
  /// Throws DataError naming the variable and listing the known names.
  static Program compile(const Expr& expr, std::span<const std::string> names);
  static Program compile(const Expr& expr, const ReferenceDataset& data);

  /// Value with variable slot i bound to values[i].
  double eval(const double* values) const;
  double eval_row(const ReferenceDataset& data, std::size_t row) const;
  /// out[k] = value on rows[k]. `stack` must hold max_stack() * rows.size() doubles.
  void eval_batch(const ReferenceDataset& data, std::span<const std::size_t> rows, double* out, double* stack) const;
  std::size_t max_stack() const noexcept { return max_stack_; }

 private:
  struct Instr {
    Op op;
    double value;
    std::size_t slot;
  };
  std::vector<Instr> code_;
  std::size_t max_stack_ = 0;
};

/// A Rule compiled against a fixed variable order; same value as eval(Rule).
class RuleProgram {
 public:
  RuleProgram(const Rule& rule, std::span<const std::string> names);
  RuleProgram(const Rule& rule, const ReferenceDataset& data);

  double eval(const double* values) const;
  std::size_t max_stack() const;
  /// `branch` holds rows.size() doubles.
  void eval_batch(const ReferenceDataset& data, std::span<const std::size_t> rows, double* out, double* branch,
                  double* stack) const;

 private:
  Program condition_;
  std::optional<Program> then_;
  std::optional<Program> else_;
};

/// Counts truthy(eval(rule, row)) against the 0/1 label column over `rows`.
/// Reference version: builds VarBindings per row and walks the tree.
Confusion confusion_reference(const Rule& rule, const ReferenceDataset& data, std::string_view label,
                              std::span<const std::size_t> rows);

/// Compiled, batched version. `workers` > 1 splits the batches across an
/// OpenMP team; integer counts make the result independent of the split.
Confusion confusion_batched(const Rule& rule, const ReferenceDataset& data, std::string_view label,
                            std::span<const std::size_t> rows, int workers = 1);

/// out[i] = f(i) for i < n, in index order.
std::vector<double> map_serial(std::size_t n, const std::function<double(std::size_t)>& f);

/// Same values as map_serial with up to `workers` threads. If calls throw,
/// the exception from the lowest index is rethrown after the loop.
std::vector<double> map_parallel(std::size_t n, const std::function<double(std::size_t)>& f, int workers);

/// Threads available to this process.
int available_workers();

}  // namespace abmgp
