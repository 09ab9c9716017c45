#pragma once

// Two-level design-space exploration.
//
// Inner level: multi-objective local search over (placement, mapping genome)
// for a fixed composition. Perturbation operators are chosen by a decayed UCB1
// bandit rewarded by archive improvement; packaging-infeasible candidates are
// pruned before any model evaluation. A simulated-annealing walk is available
// behind a config flag as a comparison baseline.
//
// Outer level: Bayesian optimization over compositions. A GP fitted on
// (normalized composition, log best-EDP) pairs drives expected-improvement
// selection from a sampled pool of area-feasible compositions. The inner seed
// is derived from the composition itself, so a composition's best-EDP value is
// a pure function of (scenario, budget, base seed) regardless of visit order.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "chipletdse/evaluate.hpp"
#include "chipletdse/gp.hpp"
#include "chipletdse/pareto.hpp"

namespace chipletdse {

struct OptimizerConfig {
  int outer_budget = 30;   // total outer evaluations, initial design included
  int inner_budget = 2000; // evaluated candidates per inner solve, seed included
  int n_init = 8;          // random compositions before the GP takes over
  int pool_size = 512;     // EI candidate pool per outer step
  int archive_capacity = 64;
  int max_count_per_type = 0; // 0: bound by area only
  // best_edp is itself a search result, so the surrogate sees noisy targets;
  // claiming noiseless data lets a long length scale collapse the posterior
  // variance and EI degenerates to pool order.
  double gp_noise = 0.1; // log-space observation variance for the outer GP
  bool use_sa_fallback = false;
  double sa_t_start = 1.0; // on log-EDP differences
  double sa_t_end = 0.01;
  std::uint64_t seed = 1;
  int threads = 1;
};

namespace detail {

struct InnerState {
  Placement placement;
  MappingGenome genome;
};

// Decayed UCB1 over the four perturbation operators; decay keeps the score
// tracking the recent improvement rate rather than the whole history.
class OperatorBandit {
 public:
  explicit OperatorBandit(int n_ops) : reward_(n_ops, 0.0), count_(n_ops, 0.0) {}

  int select() const {
    for (std::size_t i = 0; i < count_.size(); ++i)
      if (count_[i] < 0.5) return static_cast<int>(i);
    double total = 0.0;
    for (double c : count_) total += c;
    int best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < count_.size(); ++i) {
      double score = reward_[i] / count_[i] + std::sqrt(2.0 * std::log(total) / count_[i]);
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void record(int op, double reward) {
    for (std::size_t i = 0; i < count_.size(); ++i) {
      reward_[i] *= kDecay;
      count_[i] *= kDecay;
    }
    reward_[static_cast<std::size_t>(op)] += reward;
    count_[static_cast<std::size_t>(op)] += 1.0;
  }

 private:
  static constexpr double kDecay = 0.99;
  std::vector<double> reward_;
  std::vector<double> count_;
};

// Seed placement for a composition: everything on the surface, overflowing
// embeddable types into the interposer only when the grid runs out of cells.
inline std::optional<Placement> seed_placement(const std::vector<int>& alpha,
                                               const EvalContext& ctx) {
  Composition comp = Composition::surface_only(alpha);
  int cells = ctx.grid.cell_count();
  int surface_total = 0;
  for (int c : comp.surface) surface_total += c;
  for (std::size_t t = 0; t < comp.surface.size() && surface_total > cells; ++t) {
    if (!ctx.catalog.at(t).embeddable) continue;
    int shift = std::min(comp.surface[t], surface_total - cells);
    comp.surface[t] -= shift;
    comp.embedded[t] += shift;
    surface_total -= shift;
  }
  if (surface_total > cells) return std::nullopt;
  int embedded_total = 0;
  for (int c : comp.embedded) embedded_total += c;
  if (embedded_total > surface_total) return std::nullopt; // each embedded die needs a host
  try {
    return canonical_placement(comp, ctx.catalog, ctx.kind, ctx.grid);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

enum : int { OP_SWAP = 0, OP_TOGGLE_EMBED = 1, OP_SHIFT_OFFSET = 2, OP_RESPLIT = 3, OP_COUNT = 4 };

// Legal embed-state changes: a surface die slides under another occupied cell,
// or an embedded die surfaces onto an empty cell. Order is deterministic.
struct EmbedMove {
  bool to_embed;
  std::size_t inst;
  int cell;
};

inline std::vector<EmbedMove> embed_moves(const InnerState& s, const EvalContext& ctx) {
  const std::size_t n = s.placement.chiplets.size();
  std::vector<EmbedMove> moves;
  std::vector<bool> has_rider(static_cast<std::size_t>(ctx.grid.cell_count()), false);
  std::vector<bool> has_surface(static_cast<std::size_t>(ctx.grid.cell_count()), false);
  for (const auto& pc : s.placement.chiplets) {
    if (pc.embedded)
      has_rider[static_cast<std::size_t>(pc.cell)] = true;
    else
      has_surface[static_cast<std::size_t>(pc.cell)] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pc = s.placement.chiplets[i];
    if (!pc.embedded) {
      if (!ctx.catalog.at(static_cast<std::size_t>(pc.type)).embeddable) continue;
      if (has_rider[static_cast<std::size_t>(pc.cell)]) continue; // would orphan its rider
      for (int v = 0; v < ctx.grid.cell_count(); ++v)
        if (v != pc.cell && has_surface[static_cast<std::size_t>(v)] &&
            !has_rider[static_cast<std::size_t>(v)])
          moves.push_back({true, i, v});
    } else {
      for (int e = 0; e < ctx.grid.cell_count(); ++e)
        if (!has_surface[static_cast<std::size_t>(e)]) moves.push_back({false, i, e});
    }
  }
  return moves;
}

inline std::optional<InnerState> apply_operator(int op, const InnerState& parent,
                                                const EvalContext& ctx, std::mt19937_64& rng) {
  InnerState cand = parent;
  const std::size_t n = cand.placement.chiplets.size();
  if (n == 0) return std::nullopt;

  switch (op) {
    case OP_SWAP: {
      std::vector<std::size_t> surface;
      for (std::size_t i = 0; i < n; ++i)
        if (!cand.placement.chiplets[i].embedded) surface.push_back(i);
      if (surface.size() < 2) return std::nullopt;
      for (int attempt = 0; attempt < 8; ++attempt) {
        std::size_t a = surface[rng() % surface.size()];
        std::size_t b = surface[rng() % surface.size()];
        if (a == b || cand.placement.chiplets[a].type == cand.placement.chiplets[b].type) continue;
        std::swap(cand.placement.chiplets[a].type, cand.placement.chiplets[b].type);
        cand.placement.rebuild();
        return cand;
      }
      return std::nullopt;
    }
    case OP_TOGGLE_EMBED: {
      // Moves enumerated in a fixed order, then one picked uniformly.
      auto moves = embed_moves(cand, ctx);
      if (moves.empty()) return std::nullopt;
      const EmbedMove& mv = moves[rng() % moves.size()];
      cand.placement.chiplets[mv.inst].cell = mv.cell;
      cand.placement.chiplets[mv.inst].embedded = mv.to_embed;
      cand.placement.rebuild();
      return cand;
    }
    case OP_SHIFT_OFFSET: {
      int delta = (rng() & 1) ? 1 : -1;
      int m = static_cast<int>(n);
      cand.genome.start_offset = ((cand.genome.start_offset + delta) % m + m) % m;
      return cand;
    }
    case OP_RESPLIT: {
      if (ctx.workload.layers.empty()) return std::nullopt;
      int li = static_cast<int>(rng() % ctx.workload.layers.size());
      if (!cand.genome.advance_before_layer.erase(li)) cand.genome.advance_before_layer.insert(li);
      return cand;
    }
    default:
      return std::nullopt;
  }
}

// Canonical identity of a candidate. Chiplet vector order never reaches the
// models (the mapper walks cells in canonical order), so permuted duplicates
// must map to one key and spend budget once.
inline std::string inner_state_key(const InnerState& s) {
  std::vector<std::array<int, 3>> triples;
  triples.reserve(s.placement.chiplets.size());
  for (const auto& pc : s.placement.chiplets)
    triples.push_back({pc.cell, pc.embedded ? 1 : 0, pc.type});
  std::sort(triples.begin(), triples.end());
  std::string key;
  for (const auto& t : triples) {
    key += std::to_string(t[0]);
    key += ',';
    key += std::to_string(t[1]);
    key += ',';
    key += std::to_string(t[2]);
    key += ';';
  }
  key += '|';
  key += std::to_string(s.genome.start_offset);
  for (int a : s.genome.advance_before_layer) {
    key += ':';
    key += std::to_string(a);
  }
  return key;
}

// Packaging and routability screen applied before any model evaluation.
inline bool passes_prechecks(const InnerState& s, const EvalContext& ctx) {
  Composition comp = s.placement.composition(static_cast<int>(ctx.catalog.size()));
  if (!check_area(comp, ctx.catalog, ctx.interposer).feasible) return false;
  WarpageParams wp = WarpageParams::from(ctx.interposer, ctx.catalog.chiplet_cte_per_k);
  double fill = embed_fill_fraction(comp, ctx.catalog, ctx.interposer);
  if (!check_warpage(wp, fill, ctx.constraints.warpage_max_um).feasible) return false;
  if (s.placement.chiplets.empty()) return false;
  return connected(build_topology(s.placement, ctx.topo_params));
}

}  // namespace detail

inline ParetoArchive inner_moo_solve(const std::vector<int>& alpha, const EvalContext& ctx,
                                     int budget, std::uint64_t seed,
                                     const OptimizerConfig& cfg = {}) {
  if (budget <= 0) throw ConfigError("inner budget must be positive");
  ParetoArchive archive(static_cast<std::size_t>(cfg.archive_capacity));
  std::mt19937_64 rng(seed);

  auto seed_opt = detail::seed_placement(alpha, ctx);
  if (!seed_opt) {
    CDSE_INFO("inner solve: composition does not fit the placement grid; empty archive");
    return archive;
  }
  detail::InnerState seed_state{*seed_opt, MappingGenome{}};

  int evals = 0;
  auto evaluate_into_archive = [&](const detail::InnerState& s) -> std::optional<bool> {
    try {
      DesignPoint dp = evaluate_design(ctx, s.placement, s.genome, false, true);
      dp.id = evals;
      ++evals;
      return archive.insert(dp);
    } catch (const ValidationError&) {
      ++evals; // the mapper ran and rejected the genome; the attempt is spent
      return std::nullopt;
    }
  };

  bool seed_ok = detail::passes_prechecks(seed_state, ctx);
  if (seed_ok) evaluate_into_archive(seed_state);

  if (cfg.use_sa_fallback) {
    // Annealed walk on log-EDP; every evaluated candidate still feeds the
    // archive so the result shape matches the bandit path.
    detail::InnerState current = seed_state;
    double current_obj = std::numeric_limits<double>::infinity();
    if (!archive.empty()) current_obj = std::log(archive.members().back().eval.edp);
    long stale = 0;
    while (evals < budget && stale < 50L * budget + 1000) {
      int op = static_cast<int>(rng() % detail::OP_COUNT);
      auto cand = detail::apply_operator(op, current, ctx, rng);
      if (!cand || !detail::passes_prechecks(*cand, ctx)) {
        ++stale;
        continue;
      }
      double frac = static_cast<double>(evals) / std::max(budget, 1);
      double temp = cfg.sa_t_start * std::pow(cfg.sa_t_end / cfg.sa_t_start, frac);
      try {
        DesignPoint dp = evaluate_design(ctx, cand->placement, cand->genome, false, true);
        dp.id = evals;
        ++evals;
        archive.insert(dp);
        double obj = std::log(dp.eval.edp);
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (obj <= current_obj || u < std::exp(-(obj - current_obj) / temp)) {
          current = *cand;
          current_obj = obj;
          stale = 0;
        }
      } catch (const ValidationError&) {
        ++evals;
        ++stale;
      }
    }
    if (archive.empty()) CDSE_INFO("inner solve: no feasible design found; empty archive");
    return archive;
  }

  detail::OperatorBandit bandit(detail::OP_COUNT);
  // Every evaluated state is kept as a potential parent. Restricting parents to
  // archive members strands any front point whose only op paths run through
  // dominated intermediates, and the duplicate screen is what lets the budget
  // buy coverage instead of re-evaluating a saturated neighborhood.
  std::unordered_set<std::string> tried;
  std::vector<detail::InnerState> history;
  if (seed_ok) {
    tried.insert(detail::inner_state_key(seed_state));
    history.push_back(seed_state);
  }
  long attempts = 0;
  const long attempt_cap = 50L * budget + 1000;
  // New state proposed in any way: skip known ones, prune, evaluate the rest.
  enum class Step { skipped, evaluated, improved };
  auto try_child = [&](const detail::InnerState& child) -> Step {
    ++attempts;
    if (!tried.insert(detail::inner_state_key(child)).second) return Step::skipped;
    if (!detail::passes_prechecks(child, ctx)) return Step::skipped;
    history.push_back(child);
    auto inserted = evaluate_into_archive(child);
    return inserted.value_or(false) ? Step::improved : Step::evaluated;
  };
  // A long miss streak on a small instance usually means the random walk has
  // saturated its neighborhood. The sweep then visits every child of every
  // evaluated state in a fixed order; an empty sweep proves the feasible
  // component is exhausted and the solve can stop early. Large instances skip
  // sweeping (the bound keeps its cost below the random walk it would replace).
  const long stale_cap = std::min(2000L, 50L + budget / 2);
  const bool sweep_ok =
      static_cast<long>(ctx.grid.cell_count()) * ctx.grid.cell_count() * std::max(budget, 1) <=
      5'000'000L;
  auto sweep = [&]() -> bool {
    bool found = false;
    const std::size_t snapshot = history.size();
    for (std::size_t pi = 0; pi < snapshot && evals < budget; ++pi) {
      const detail::InnerState parent = history[pi]; // history grows during the scan
      const std::size_t n = parent.placement.chiplets.size();
      for (std::size_t a = 0; a < n && evals < budget; ++a) {
        for (std::size_t b = a + 1; b < n && evals < budget; ++b) {
          const auto& ca = parent.placement.chiplets[a];
          const auto& cb = parent.placement.chiplets[b];
          if (ca.embedded || cb.embedded || ca.type == cb.type) continue;
          detail::InnerState child = parent;
          std::swap(child.placement.chiplets[a].type, child.placement.chiplets[b].type);
          child.placement.rebuild();
          found = try_child(child) != Step::skipped || found;
        }
      }
      for (const auto& mv : detail::embed_moves(parent, ctx)) {
        if (evals >= budget) break;
        detail::InnerState child = parent;
        child.placement.chiplets[mv.inst].cell = mv.cell;
        child.placement.chiplets[mv.inst].embedded = mv.to_embed;
        child.placement.rebuild();
        found = try_child(child) != Step::skipped || found;
      }
      for (int delta : {1, -1}) {
        if (evals >= budget) break;
        detail::InnerState child = parent;
        int m = static_cast<int>(n);
        child.genome.start_offset = ((child.genome.start_offset + delta) % m + m) % m;
        found = try_child(child) != Step::skipped || found;
      }
      for (std::size_t li = 0; li < ctx.workload.layers.size(); ++li) {
        if (evals >= budget) break;
        detail::InnerState child = parent;
        int layer = static_cast<int>(li);
        if (!child.genome.advance_before_layer.erase(layer))
          child.genome.advance_before_layer.insert(layer);
        found = try_child(child) != Step::skipped || found;
      }
    }
    return found;
  };
  long stale = 0;
  while (evals < budget && attempts < attempt_cap) {
    const detail::InnerState* parent = &seed_state;
    detail::InnerState member_state;
    bool from_history = !history.empty() && (rng() % 4 == 0);
    if (from_history) {
      parent = &history[rng() % history.size()];
    } else if (!archive.empty()) {
      const DesignPoint& m = archive.members()[rng() % archive.size()];
      member_state = {m.placement, m.genome};
      parent = &member_state;
    }
    int op = bandit.select();
    auto cand = detail::apply_operator(op, *parent, ctx, rng);
    Step st = Step::skipped;
    if (cand) {
      st = try_child(*cand);
    } else {
      ++attempts;
    }
    bandit.record(op, st == Step::improved ? 1.0 : 0.0);
    if (st != Step::skipped) {
      stale = 0;
    } else if (++stale > stale_cap && sweep_ok) {
      stale = 0;
      if (!sweep()) break; // feasible neighborhood closure reached
    }
  }
  if (archive.empty())
    CDSE_INFO("inner solve: no feasible design within budget for this composition");
  return archive;
}

struct InnerResult {
  double best_edp = std::numeric_limits<double>::infinity();
  std::optional<DesignPoint> best;
  ParetoArchive archive{64};
};

// Thermal runs only here, on archive members; designs breaking T_max drop out.
inline InnerResult best_edp(const std::vector<int>& alpha, const EvalContext& ctx, int budget,
                            std::uint64_t base_seed, const OptimizerConfig& cfg = {}) {
  InnerResult res;
  res.archive = inner_moo_solve(alpha, ctx, budget, mix_seed(base_seed, alpha), cfg);
  ParetoArchive checked(res.archive.capacity());
  for (DesignPoint dp : res.archive.members()) {
    attach_thermal(ctx, dp);
    if (!dp.eval.feasible_thermal) continue;
    checked.insert(dp);
    if (dp.eval.edp < res.best_edp) {
      res.best_edp = dp.eval.edp;
      res.best = dp;
    }
  }
  res.archive = std::move(checked);
  return res;
}

// --- Outer loop ---

struct TraceRow {
  int step = 0;
  std::vector<int> alpha;
  double alpha_best_edp = 0.0;
  double incumbent_edp = 0.0;
};

struct CoOptimizeResult {
  std::optional<DesignPoint> incumbent;
  double incumbent_edp = std::numeric_limits<double>::infinity();
  std::vector<int> incumbent_alpha;
  ParetoArchive archive{64};
  std::vector<TraceRow> trace;
};

namespace detail {

inline std::vector<int> type_caps(const EvalContext& ctx, const OptimizerConfig& cfg) {
  std::vector<int> caps(ctx.catalog.size());
  double area = ctx.interposer.area_mm2();
  for (std::size_t t = 0; t < ctx.catalog.size(); ++t) {
    int cap = static_cast<int>(std::floor(area / ctx.catalog.at(t).area_mm2));
    if (cfg.max_count_per_type > 0) cap = std::min(cap, cfg.max_count_per_type);
    caps[t] = cap;
  }
  return caps;
}

inline bool alpha_area_feasible(const std::vector<int>& alpha, const EvalContext& ctx) {
  double area = 0.0;
  int total = 0;
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    area += alpha[t] * ctx.catalog.at(t).area_mm2;
    total += alpha[t];
  }
  return total >= 1 && area <= ctx.interposer.area_mm2() + 1e-9 &&
         total <= 2 * ctx.grid.cell_count();
}

// Draws one area-feasible composition by filling types in random order within
// the remaining area budget.
inline std::vector<int> sample_composition(std::mt19937_64& rng, const EvalContext& ctx,
                                           const std::vector<int>& caps) {
  std::vector<std::size_t> perm(ctx.catalog.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (int tries = 0; tries < 64; ++tries) {
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> alpha(ctx.catalog.size(), 0);
    double remaining = ctx.interposer.area_mm2();
    int total = 0;
    for (std::size_t t : perm) {
      int cap = std::min(caps[t], static_cast<int>(std::floor(remaining / ctx.catalog.at(t).area_mm2)));
      cap = std::min(cap, 2 * ctx.grid.cell_count() - total);
      if (cap <= 0) continue;
      int n = static_cast<int>(rng() % static_cast<std::uint64_t>(cap + 1));
      alpha[t] = n;
      remaining -= n * ctx.catalog.at(t).area_mm2;
      total += n;
    }
    if (total >= 1) return alpha;
  }
  throw ConfigError("no area-feasible composition could be sampled");
}

inline std::vector<double> normalize_alpha(const std::vector<int>& alpha,
                                           const std::vector<int>& caps) {
  std::vector<double> x(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    x[i] = caps[i] > 0 ? static_cast<double>(alpha[i]) / caps[i] : 0.0;
  return x;
}

}  // namespace detail

inline CoOptimizeResult co_optimize(const EvalContext& ctx, const OptimizerConfig& cfg) {
  if (cfg.outer_budget < 1 || cfg.inner_budget < 1 || cfg.n_init < 1 || cfg.pool_size < 1)
    throw ConfigError("optimizer budgets must be positive");

  std::mt19937_64 rng(cfg.seed);
  std::vector<int> caps = detail::type_caps(ctx, cfg);

  std::map<std::vector<int>, double> evaluated; // alpha -> best edp
  std::vector<std::vector<int>> order;          // evaluation order
  std::vector<InnerResult> results;

  // Initial design: distinct random compositions. A small space may cap out
  // below n_init; that simply shortens the random phase.
  std::vector<std::vector<int>> init;
  for (int attempts = 0; static_cast<int>(init.size()) < std::min(cfg.n_init, cfg.outer_budget) &&
                         attempts < 5000;
       ++attempts) {
    std::vector<int> a = detail::sample_composition(rng, ctx, caps);
    if (!detail::alpha_area_feasible(a, ctx)) continue;
    bool dup = evaluated.count(a) > 0;
    for (const auto& b : init) dup = dup || b == a;
    if (!dup) init.push_back(a);
  }
  if (init.empty()) throw ConfigError("no area-feasible composition exists for this scenario");

  CoOptimizeResult out;
  out.archive = ParetoArchive(static_cast<std::size_t>(cfg.archive_capacity));

  auto run_alpha = [&](const std::vector<int>& a) {
    return best_edp(a, ctx, cfg.inner_budget, cfg.seed, cfg);
  };

  auto absorb = [&](const std::vector<int>& a, InnerResult&& r) {
    int rec = static_cast<int>(order.size());
    evaluated[a] = r.best_edp;
    order.push_back(a);
    // Re-key ids so union-archive tie-breaks follow global evaluation order.
    ParetoArchive rekeyed(r.archive.capacity());
    for (DesignPoint dp : r.archive.members()) {
      dp.id = rec * (cfg.inner_budget + 1) + dp.id;
      rekeyed.insert(dp);
      out.archive.insert(dp);
    }
    r.archive = std::move(rekeyed);
    if (r.best && r.best_edp < out.incumbent_edp) {
      out.incumbent_edp = r.best_edp;
      out.incumbent = r.best;
      out.incumbent_alpha = a;
    }
    results.push_back(std::move(r));
    TraceRow row;
    row.step = rec;
    row.alpha = a;
    row.alpha_best_edp = results.back().best_edp;
    row.incumbent_edp = out.incumbent_edp;
    out.trace.push_back(row);
  };

  // Initial evaluations; independent by construction, so worker threads only
  // change wall time, never results (merged in sample order).
  if (cfg.threads > 1 && init.size() > 1) {
    std::vector<InnerResult> batch(init.size());
    std::vector<std::thread> workers;
    std::size_t stride = static_cast<std::size_t>(cfg.threads);
    for (std::size_t w = 0; w < stride; ++w)
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < init.size(); i += stride) batch[i] = run_alpha(init[i]);
      });
    for (auto& t : workers) t.join();
    for (std::size_t i = 0; i < init.size(); ++i) absorb(init[i], std::move(batch[i]));
  } else {
    for (const auto& a : init) absorb(a, run_alpha(a));
  }

  // GP-guided steps.
  while (static_cast<int>(order.size()) < cfg.outer_budget) {
    std::vector<std::vector<double>> gx;
    std::vector<double> gy;
    double worst_finite = -std::numeric_limits<double>::infinity();
    for (const auto& a : order) {
      double e = evaluated[a];
      if (std::isfinite(e)) worst_finite = std::max(worst_finite, std::log(e));
    }
    if (!std::isfinite(worst_finite)) worst_finite = 0.0;
    for (const auto& a : order) {
      gx.push_back(detail::normalize_alpha(a, caps));
      double e = evaluated[a];
      gy.push_back(std::isfinite(e) ? std::log(e) : worst_finite + 2.0);
    }
    double f_best = *std::min_element(gy.begin(), gy.end());

    GpModel gp(cfg.gp_noise);
    gp.fit(gx, gy);

    std::vector<std::vector<int>> pool;
    std::set<std::vector<int>> seen;
    for (int attempts = 0; static_cast<int>(pool.size()) < cfg.pool_size &&
                           attempts < 20 * cfg.pool_size;
         ++attempts) {
      std::vector<int> a = detail::sample_composition(rng, ctx, caps);
      if (!detail::alpha_area_feasible(a, ctx) || evaluated.count(a) || seen.count(a)) continue;
      seen.insert(a);
      pool.push_back(std::move(a));
    }
    if (pool.empty()) break; // composition space exhausted

    std::size_t winner = 0;
    double best_ei = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      double ei = expected_improvement(gp, detail::normalize_alpha(pool[i], caps), f_best);
      if (ei > best_ei) {
        best_ei = ei;
        winner = i;
      }
    }
    absorb(pool[winner], run_alpha(pool[winner]));
  }
  return out;
}

}  // namespace chipletdse
