#include "abmgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "abmgp/errors.hpp"
#include "abmgp/kernels.hpp"
#include "abmgp/prune.hpp"

namespace abmgp {

namespace {

struct NodeRef {
  int slot;
  std::size_t index;
};

NodeRef random_node(const Rule& r, Rng& rng) {
  const std::size_t total = r.size();
  std::size_t k = uniform_int<std::size_t>(rng, 0, total - 1);
  for (int s = 0; s < r.slot_count(); ++s) {
    const std::size_t n = r.slot(s).size();
    if (k < n) return {s, k};
    k -= n;
  }
  return {0, 0};
}

bool within_depth(const Rule& r, int max_depth) {
  for (int s = 0; s < r.slot_count(); ++s)
    if (r.slot(s).depth() > max_depth) return false;
  return true;
}

// Fitness order used for elites and the hall of fame: higher fitness, then
// smaller rule, then rule text. Total and independent of population order.
struct Ranked {
  double fitness;
  std::size_t size;
  std::string text;
  std::size_t index;
};

bool ranks_before(const Ranked& a, const Ranked& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  if (a.size != b.size) return a.size < b.size;
  if (a.text != b.text) return a.text < b.text;
  return a.index < b.index;
}

}  // namespace

void GPConfig::validate() const {
  if (population_size < 2) throw ConfigError("populationSize must be at least 2");
  if (max_generations < 0) throw ConfigError("maxGenerations must be >= 0");
  for (double p : {p_reproduce, p_mutate, p_crossover})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("operator probabilities must lie in [0, 1]");
  if (std::fabs(p_reproduce + p_mutate + p_crossover - 1.0) > 1e-12)
    throw ConfigError("pReproduce + pMutate + pCrossover must equal 1");
  if (elitism < 0 || elitism >= population_size) throw ConfigError("elitism must be in [0, populationSize)");
  if (max_depth < 1) throw ConfigError("maxDepth must be >= 1");
  if (target_fitness && !std::isfinite(*target_fitness)) throw ConfigError("targetFitness must be finite");
  if (stagnation_limit && *stagnation_limit < 1) throw ConfigError("stagnationLimit must be >= 1");
  if (hall_of_fame_size < 1) throw ConfigError("hallOfFameSize must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

Rule random_rule(const Grammar& grammar, RuleShape shape, Rng& rng) {
  Expr c = random_expr(grammar, rng);
  if (shape == RuleShape::Bare) return Rule::bare(std::move(c));
  Expr t = random_expr(grammar, rng);
  Expr e = random_expr(grammar, rng);
  return Rule::conditional(std::move(c), std::move(t), std::move(e));
}

Population init_population(const GPConfig& config, const Grammar& grammar, RuleShape shape) {
  config.validate();
  Grammar g = grammar;
  g.max_depth = config.max_depth;
  g.validate();
  Population pop;
  pop.reserve(static_cast<std::size_t>(config.population_size));
  for (int i = 0; i < config.population_size; ++i) {
    Rng rng = make_rng(config.seed, {0, static_cast<std::uint64_t>(i)});
    pop.push_back(Individual{random_rule(g, shape, rng), std::nullopt});
  }
  return pop;
}

std::size_t select_proportional(std::span<const double> fitness, Rng& rng) {
  if (fitness.empty()) throw ConfigError("selection from an empty population");
  double total = 0.0;
  for (double f : fitness) total += f;
  if (!(total > 0.0)) return uniform_int<std::size_t>(rng, 0, fitness.size() - 1);
  const double u = uniform_real(rng, 0.0, total);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    if (fitness[i] <= 0.0) continue;
    acc += fitness[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;  // u landed on the rounding slack at the end
}

Individual mutate(const Individual& ind, const Grammar& grammar, Rng& rng) {
  const NodeRef at = random_node(ind.rule, rng);
  const Expr& slot = ind.rule.slot(at.slot);
  const int level = slot.node_levels()[at.index];
  const int budget = std::max(1, grammar.max_depth - level + 1);
  const int depth = uniform_int(rng, 1, budget);
  Expr fresh = random_expr(grammar, rng, depth, GrowMethod::Grow);
  Individual child{ind.rule, std::nullopt};
  child.rule.slot(at.slot) = slot.replace_subtree(at.index, fresh);
  return child;
}

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, Rng& rng, int max_depth) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    const NodeRef pa = random_node(a.rule, rng);
    const int slot = std::min(pa.slot, b.rule.slot_count() - 1);
    const Expr& sb = b.rule.slot(slot);
    const std::size_t ib = uniform_int<std::size_t>(rng, 0, sb.size() - 1);
    const Expr& sa = a.rule.slot(pa.slot);

    Individual c1{a.rule, std::nullopt}, c2{b.rule, std::nullopt};
    c1.rule.slot(pa.slot) = sa.replace_subtree(pa.index, sb.subtree(ib));
    c2.rule.slot(slot) = sb.replace_subtree(ib, sa.subtree(pa.index));
    if (within_depth(c1.rule, max_depth) && within_depth(c2.rule, max_depth)) return {std::move(c1), std::move(c2)};
  }
  return {Individual{a.rule, std::nullopt}, Individual{b.rule, std::nullopt}};
}

EvolutionResult evolve(const GPConfig& config, const Grammar& grammar_in, RuleShape shape, const FitnessFn& fitness,
                       const Pruner& pruner_in) {
  config.validate();
  Grammar grammar = grammar_in;
  grammar.max_depth = config.max_depth;
  grammar.validate();
  const Pruner pruner = pruner_in ? pruner_in : Pruner([](const Rule& r) { return prune(r); });

  EvolutionResult result;
  result.seed = config.seed;
  Population pop = init_population(config, grammar, shape);
  const std::size_t n = pop.size();

  std::map<std::string, double> cache;
  std::vector<ScoredRule> fame;
  std::map<std::string, std::size_t> fame_index;
  std::optional<std::size_t> best_pruned_size;
  int since_improvement = 0;
  double best_so_far = -1.0;

  for (int gen = 0;; ++gen) {
    // Score every rule text not seen before, in first-appearance order.
    std::vector<std::string> texts(n);
    std::vector<std::size_t> todo;
    std::map<std::string, std::size_t> pending;
    for (std::size_t i = 0; i < n; ++i) {
      texts[i] = render(pop[i].rule);
      if (!cache.count(texts[i]) && !pending.count(texts[i])) {
        pending.emplace(texts[i], todo.size());
        todo.push_back(i);
      }
    }
    const std::vector<double> scores = map_parallel(
        todo.size(),
        [&](std::size_t k) {
          const std::size_t i = todo[k];
          double f = 0.0;
          try {
            f = fitness(pop[i].rule);
          } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (rule: " + texts[i] + ")");
          } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " (rule: " + texts[i] + ")");
          } catch (const std::exception& e) {
            throw std::runtime_error(std::string(e.what()) + " (rule: " + texts[i] + ")");
          }
          if (!std::isfinite(f) || f < 0.0)
            throw DataError("fitness function returned " + std::to_string(f) + " (rule: " + texts[i] + ")");
          return f;
        },
        config.workers);
    for (std::size_t k = 0; k < todo.size(); ++k) cache.emplace(texts[todo[k]], scores[k]);
    result.evaluations += static_cast<long long>(todo.size());

    std::vector<double> fit(n);
    for (std::size_t i = 0; i < n; ++i) fit[i] = pop[i].fitness.emplace(cache.at(texts[i]));

    std::vector<Ranked> ranked(n);
    for (std::size_t i = 0; i < n; ++i) ranked[i] = {fit[i], pop[i].rule.size(), texts[i], i};
    std::sort(ranked.begin(), ranked.end(), ranks_before);

    const Ranked& top = ranked.front();
    GenerationRecord rec;
    rec.generation = gen;
    rec.best_fitness = top.fitness;
    rec.mean_fitness = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(n);
    rec.best_rule = top.text;
    result.log.push_back(rec);

    // Best of run: fitness first, then the smaller pruned rule.
    for (const Ranked& r : ranked) {
      if (r.fitness < best_so_far) break;
      const Rule& rule = pop[r.index].rule;
      if (r.fitness > best_so_far) {
        best_so_far = r.fitness;
        result.best_raw = rule;
        result.best_pruned = pruner(rule);
        best_pruned_size = result.best_pruned.size();
        since_improvement = -1;
        continue;
      }
      Rule p = pruner(rule);
      if (p.size() < *best_pruned_size) {
        result.best_raw = rule;
        result.best_pruned = std::move(p);
        best_pruned_size = result.best_pruned.size();
      }
    }
    ++since_improvement;
    result.best_fitness = best_so_far;

    for (const Ranked& r : ranked) {
      if (fame_index.count(r.text)) continue;
      fame_index.emplace(r.text, fame.size());
      fame.push_back(ScoredRule{pop[r.index].rule, r.fitness});
    }
    std::stable_sort(fame.begin(), fame.end(), [](const ScoredRule& a, const ScoredRule& b) {
      if (a.fitness != b.fitness) return a.fitness > b.fitness;
      return a.rule.size() < b.rule.size();
    });
    if (fame.size() > static_cast<std::size_t>(config.hall_of_fame_size)) {
      fame.resize(static_cast<std::size_t>(config.hall_of_fame_size));
    }
    fame_index.clear();
    for (std::size_t k = 0; k < fame.size(); ++k) fame_index.emplace(render(fame[k].rule), k);

    if (config.target_fitness && best_so_far >= *config.target_fitness) {
      result.stop_reason = "target_fitness";
      break;
    }
    if (static_cast<int>(result.log.size()) >= std::max(1, config.max_generations)) {
      result.stop_reason = "max_generations";
      break;
    }
    if (config.stagnation_limit && since_improvement >= *config.stagnation_limit) {
      result.stop_reason = "stagnation";
      break;
    }

    // Breed the next generation.
    Population next;
    next.reserve(n);
    for (int e = 0; e < config.elitism; ++e) next.push_back(Individual{pop[ranked[e].index].rule, std::nullopt});
    while (next.size() < n) {
      const std::size_t slot = next.size();
      Rng rng = make_rng(config.seed, {static_cast<std::uint64_t>(gen + 1), static_cast<std::uint64_t>(slot)});
      const double u = uniform_real(rng, 0.0, 1.0);
      if (u < config.p_reproduce) {
        ++result.operator_counts[static_cast<int>(GeneticOp::Reproduce)];
        next.push_back(Individual{pop[select_proportional(fit, rng)].rule, std::nullopt});
      } else if (u < config.p_reproduce + config.p_mutate) {
        ++result.operator_counts[static_cast<int>(GeneticOp::Mutate)];
        next.push_back(mutate(pop[select_proportional(fit, rng)], grammar, rng));
      } else {
        ++result.operator_counts[static_cast<int>(GeneticOp::Crossover)];
        const std::size_t a = select_proportional(fit, rng);
        const std::size_t b = select_proportional(fit, rng);
        auto [c1, c2] = crossover(pop[a], pop[b], rng, config.max_depth);
        next.push_back(std::move(c1));
        if (next.size() < n) next.push_back(std::move(c2));
      }
    }
    pop = std::move(next);
  }

  result.hall_of_fame = std::move(fame);
  result.final_population = std::move(pop);
  return result;
}

}  // namespace abmgp
