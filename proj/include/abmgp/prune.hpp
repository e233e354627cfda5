#pragma once

// Semantics-preserving simplification of evolved rules.
//
// `prune` uses only algebra: constant folding, x-x, x/x, x*0, absorbing
// booleans, comparisons of identical subtrees and branch elimination. The
// result evaluates to exactly the same value as the input for every binding.
//
// `prune_with_ranges` additionally knows the range of every variable (plus
// optional ordering facts such as `totalResource >= previousTook`) and folds
// any subexpression whose value is fixed over that domain. Equivalence then
// only holds for bindings inside the domain.

#include "abmgp/expr.hpp"

namespace abmgp {

Expr prune(const Expr& expr);
Rule prune(const Rule& rule);

/// Throws DataError when a variable of `expr` has no range.
Expr prune_with_ranges(const Expr& expr, const VarRanges& ranges);
Rule prune_with_ranges(const Rule& rule, const VarRanges& ranges);

/// Sound enclosure of every value `eval` can return over the domain.
Interval enclose(const Expr& expr, const VarRanges& ranges);

/// Ranges declared by a grammar's terminal set (no ordering facts).
VarRanges ranges_from_grammar(const Grammar& grammar);

/// Uniform draw inside the ranges that also satisfies every ordering fact
/// (rejection sampling). Throws ConfigError if the facts look unsatisfiable.
VarBindings sample_bindings(const VarRanges& ranges, Rng& rng);

/// Compares `a` and `b` on `n` sampled bindings: exactly when every range is
/// integral, otherwise with a 1e-9 relative tolerance.
bool equivalent_sampled(const Expr& a, const Expr& b, const VarRanges& ranges, int n, Rng& rng);
bool equivalent_sampled(const Rule& a, const Rule& b, const VarRanges& ranges, int n, Rng& rng);

}  // namespace abmgp
