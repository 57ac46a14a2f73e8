#include "ufw/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ufw {

const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::FW: return "FW";
    case StepKind::Away: return "Away";
    case StepKind::Drop: return "Drop";
    case StepKind::GradientOnly: return "GradientOnly";
  }
  return "?";
}

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::GapTolerance: return "GapTolerance";
    case TerminationReason::MaxIters: return "MaxIters";
    case TerminationReason::DegenerateDirection: return "DegenerateDirection";
  }
  return "?";
}

StepKind step_kind_from_string(const std::string& s) {
  if (s == "FW") return StepKind::FW;
  if (s == "Away") return StepKind::Away;
  if (s == "Drop") return StepKind::Drop;
  if (s == "GradientOnly") return StepKind::GradientOnly;
  throw std::invalid_argument("unknown step kind: " + s);
}

namespace {

constexpr double kWeightDropTol = 1e-12;
constexpr double kDegenerateDirTol = 1e-14;
constexpr int kDriftCheckStride = 100;
constexpr double kDriftFailTol = 1e-4;

void validate_config(const UfwConfig& cfg) {
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta))
    throw std::invalid_argument("solver: eta must be positive and finite");
  if (cfg.max_iters < 0) throw std::invalid_argument("solver: max_iters must be >= 0");
  if (cfg.tol_G < 0.0 || cfg.tol_H2 < 0.0)
    throw std::invalid_argument("solver: tolerances must be >= 0");
}

void check_start(const DecomposedRegion& region, const Vector& x0) {
  if (x0.size() != region.ambient_dim())
    throw std::invalid_argument("solver: start point has wrong dimension");
  if (!x0.allFinite()) throw std::invalid_argument("solver: start point is not finite");
  const double err =
      (region.project_subspace(x0) + region.project_complement(x0) - x0).norm();
  if (err > 1e-8)
    throw std::invalid_argument("solver: start point fails projection consistency");
}

// Scale for deciding that a computed G is negative beyond anything an
// approximate oracle could explain. Iterative oracles under-certify by their
// value suboptimality (computed G can dip slightly negative near an optimum);
// a genuinely corrupted state (overflowed iterates, cancelled projections)
// lands many orders of magnitude below this line.
double gap_noise_scale(const Vector& g, const Vector& comp, const Vector& s) {
  return 1.0 + g.norm() * (comp.norm() + s.norm());
}
constexpr double kNegativeGapGuard = 1e-2;

struct TraceBuffer {
  TraceBuffer(long max_iters, bool enabled) : enabled_(enabled) {
    if (enabled_) {
      const long cap = max_iters < (1L << 20) ? max_iters + 1 : (1L << 20);
      rows_.reserve(static_cast<std::size_t>(cap));
    }
  }
  void push(const IterationRecord& r) {
    if (enabled_) rows_.push_back(r);
  }
  std::vector<IterationRecord> take() { return std::move(rows_); }
  bool enabled_;
  std::vector<IterationRecord> rows_;
};

// An oracle running under a relaxed value budget under-certifies: its
// computed G lower-bounds the true gap by up to the oracle's value error, so
// a passing gap test must be confirmed at full accuracy before stopping.
// Failed confirmations back off exponentially so a run whose true gap sits
// below the oracle's noise floor does not pay a full-accuracy call per
// iteration.
struct GapConfirmer {
  long next_allowed = 0;
  long backoff = 100;

  // Returns the confirmed decision and refines s/G in place.
  bool confirm(const DecomposedRegion& region, const Vector& gy, const Vector& comp,
               double denom, const UfwConfig& cfg, LmoContext& ctx, long k,
               VertexHandle& s, double& G) {
    if (ctx.value_tolerance <= 0.0) return true;  // oracle already at full accuracy
    if (k < next_allowed) return false;
    LmoContext full = ctx;
    full.value_tolerance = 0.0;
    VertexHandle s2 = region.lmo(gy, full);
    ctx.start_hint = std::move(full.start_hint);
    const double G2 = gy.dot(comp - s2.point);
    s = std::move(s2);
    G = G2;
    if (G2 / denom < cfg.tol_G) return true;
    next_allowed = k + backoff;
    backoff *= 2;
    return false;
  }
};

SolveResult make_result(Vector x_final, double best_f, long iterations, TraceBuffer& trace,
                        TerminationReason reason) {
  SolveResult res;
  res.x_final = std::move(x_final);
  res.best_f = best_f;
  res.iterations = iterations;
  res.trace = trace.take();
  res.termination_reason = reason;
  return res;
}

}  // namespace

ActiveVertexSet::ActiveVertexSet(const VertexHandle& v0) {
  entries_.emplace(v0.key, Entry{v0.point, 1.0});
}

double ActiveVertexSet::weight_sum() const {
  double s = 0.0;
  for (const auto& [k, e] : entries_) s += e.weight;
  return s;
}

std::pair<std::string, const ActiveVertexSet::Entry*> ActiveVertexSet::argmax_inner(
    const Vector& g) const {
  const std::string* best_key = nullptr;
  const Entry* best = nullptr;
  double best_val = -std::numeric_limits<double>::infinity();
  for (const auto& [key, e] : entries_) {
    const double v = g.dot(e.point);
    if (v > best_val) {  // strict: map order keeps the smallest key on ties
      best_val = v;
      best_key = &key;
      best = &e;
    }
  }
  if (!best) throw std::logic_error("active set is empty");
  return {*best_key, best};
}

void ActiveVertexSet::apply_fw_step(const VertexHandle& s, double alpha, bool at_max) {
  if (at_max) {
    entries_.clear();
    entries_.emplace(s.key, Entry{s.point, 1.0});
    return;
  }
  for (auto& [key, e] : entries_) e.weight *= (1.0 - alpha);
  auto [it, inserted] = entries_.emplace(s.key, Entry{s.point, alpha});
  if (!inserted) it->second.weight += alpha;
  cleanup();
}

void ActiveVertexSet::apply_away_step(const std::string& away_key, double alpha, bool at_max) {
  auto it = entries_.find(away_key);
  if (it == entries_.end()) throw std::logic_error("away vertex not in the active set");
  for (auto& [key, e] : entries_) e.weight *= (1.0 + alpha);
  it->second.weight -= alpha;  // net effect: (1 + alpha) * old - alpha
  if (at_max) entries_.erase(it);
  cleanup();
}

void ActiveVertexSet::cleanup() {
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->second.weight < kWeightDropTol)
      it = entries_.erase(it);
    else
      ++it;
  }
  if (entries_.empty()) throw std::logic_error("active set emptied by cleanup");
  const double s = weight_sum();
  for (auto& [key, e] : entries_) e.weight /= s;
}

Vector ActiveVertexSet::reconstruct(Eigen::Index dim) const {
  Vector acc = Vector::Zero(dim);
  for (const auto& [key, e] : entries_) acc += e.weight * e.point;
  return acc;
}

std::pair<double, double> compute_gaps(const SmoothObjective& objective,
                                       const DecomposedRegion& region, const Vector& y,
                                       const Vector& s_point) {
  Vector g = objective.gradient(y);
  const double G = g.dot(region.project_complement(y) - s_point);
  const double H = region.project_subspace(g).norm();
  return {G, H};
}

double primal_gap_bound(double G, double H, std::optional<double> subspace_diameter,
                        std::optional<double> strong_convexity) {
  if (!subspace_diameter && !strong_convexity)
    throw std::invalid_argument("primal_gap_bound: supply a diameter or a convexity constant");
  double bound = std::numeric_limits<double>::infinity();
  if (subspace_diameter) bound = std::min(bound, G + H * *subspace_diameter);
  if (strong_convexity) bound = std::min(bound, G + H * H / (2.0 * *strong_convexity));
  return bound;
}

SolveResult ufw_solve(const SmoothObjective& objective, const DecomposedRegion& region,
                      const Vector& x0, const UfwConfig& config) {
  validate_config(config);
  check_start(region, x0);
  if (objective.dim() != region.ambient_dim())
    throw std::invalid_argument("solver: objective and region dimensions differ");

  TraceBuffer trace(config.max_iters, config.record_trace);
  LmoContext lmo_ctx;
  GapConfirmer confirmer;
  const double f0 = objective.value(x0);
  double best = std::numeric_limits<double>::infinity();

  Vector x = x0;
  Vector gx(x.size()), gy(x.size());
  double fy = 0.0;

  for (long k = 0;; ++k) {
    gx = objective.gradient(x);
    Vector y = x - config.eta * region.project_subspace(gx);
    objective.value_and_gradient(y, fy, gy);
    if (!std::isfinite(fy)) {
      throw NumericalFailure("ufw: objective value became non-finite",
                             make_result(std::move(x), best, k, trace,
                                         TerminationReason::MaxIters));
    }
    best = std::min(best, fy);

    VertexHandle s;
    lmo_ctx.value_tolerance = 0.02 * config.tol_G * std::max(1.0, std::abs(best));
    try {
      s = region.lmo(gy, lmo_ctx);
    } catch (const NumericalError& e) {
      throw NumericalFailure(e.what(), make_result(std::move(y), best, k, trace,
                                                   TerminationReason::MaxIters));
    }
    Vector comp = region.project_complement(y);  // equals the complement of x
    double G = gy.dot(comp - s.point);
    const double H = region.project_subspace(gy).norm();
    if (G < -kNegativeGapGuard * gap_noise_scale(gy, comp, s.point)) {
      throw NumericalFailure("ufw: gap G is negative beyond oracle accuracy",
                             make_result(std::move(y), best, k, trace,
                                         TerminationReason::MaxIters));
    }

    const double denom = std::max(1.0, std::abs(best));
    bool gap_ok = (G / denom < config.tol_G) && (H * H / denom < config.tol_H2);
    if (gap_ok) {
      try {
        gap_ok = confirmer.confirm(region, gy, comp, denom, config, lmo_ctx, k, s, G);
      } catch (const NumericalError& e) {
        throw NumericalFailure(e.what(), make_result(std::move(y), best, k, trace,
                                                     TerminationReason::MaxIters));
      }
    }
    if (gap_ok || k >= config.max_iters) {
      trace.push({k, fy, G, H, StepKind::GradientOnly, 0.0, 0});
      return make_result(std::move(y), best, k, trace,
                         gap_ok ? TerminationReason::GapTolerance
                                : TerminationReason::MaxIters);
    }

    Vector d = s.point - comp;
    double alpha = 0.0;
    if (config.step_rule == StepRule::Simple) {
      const double a = 2.0 / static_cast<double>(k + 2);
      const double f_cand = objective.value(y + a * d);
      if (f_cand <= f0) alpha = a;
    } else {
      const LineSearchResult ls = objective.exact_linesearch(y, d, 1.0);
      if (ls.value > fy + 1e-9 * (1.0 + std::abs(fy))) {
        throw NumericalFailure("ufw: line search failed to descend",
                               make_result(std::move(y), best, k, trace,
                                           TerminationReason::MaxIters));
      }
      alpha = ls.alpha;
    }
    trace.push({k, fy, G, H, alpha > 0.0 ? StepKind::FW : StepKind::GradientOnly, alpha, 0});
    x = y + alpha * d;
  }
}

SolveResult uafw_solve(const SmoothObjective& objective, const DecomposedRegion& region,
                       const Vector& x0, const UfwConfig& config) {
  validate_config(config);
  if (!region.polyhedral_vertices())
    throw UnsupportedRegionError(
        "uafw: region's bounded set has no discrete vertex identities (not a polytope); "
        "use ufw_solve instead");
  check_start(region, x0);
  if (objective.dim() != region.ambient_dim())
    throw std::invalid_argument("solver: objective and region dimensions differ");

  const auto v0 = region.identify_vertex(region.project_complement(x0));
  if (!v0)
    throw std::invalid_argument(
        "uafw: the complement component of the start point is not a vertex of S");
  ActiveVertexSet active(*v0);

  TraceBuffer trace(config.max_iters, config.record_trace);
  LmoContext lmo_ctx;
  GapConfirmer confirmer;
  double best = std::numeric_limits<double>::infinity();

  Vector x = x0;
  Vector gx(x.size()), gy(x.size());
  double fy = 0.0;

  for (long k = 0;; ++k) {
    gx = objective.gradient(x);
    Vector y = x - config.eta * region.project_subspace(gx);
    objective.value_and_gradient(y, fy, gy);
    if (!std::isfinite(fy)) {
      throw NumericalFailure("uafw: objective value became non-finite",
                             make_result(std::move(x), best, k, trace,
                                         TerminationReason::MaxIters));
    }
    best = std::min(best, fy);

    VertexHandle s;
    lmo_ctx.value_tolerance = 0.02 * config.tol_G * std::max(1.0, std::abs(best));
    try {
      s = region.lmo(gy, lmo_ctx);
    } catch (const NumericalError& e) {
      throw NumericalFailure(e.what(), make_result(std::move(y), best, k, trace,
                                                   TerminationReason::MaxIters));
    }
    Vector comp = region.project_complement(y);
    double G = gy.dot(comp - s.point);
    const double H = region.project_subspace(gy).norm();
    if (G < -kNegativeGapGuard * gap_noise_scale(gy, comp, s.point)) {
      throw NumericalFailure("uafw: gap G is negative beyond oracle accuracy",
                             make_result(std::move(y), best, k, trace,
                                         TerminationReason::MaxIters));
    }

    const double denom = std::max(1.0, std::abs(best));
    bool gap_ok = (G / denom < config.tol_G) && (H * H / denom < config.tol_H2);
    if (gap_ok) {
      try {
        gap_ok = confirmer.confirm(region, gy, comp, denom, config, lmo_ctx, k, s, G);
      } catch (const NumericalError& e) {
        throw NumericalFailure(e.what(), make_result(std::move(y), best, k, trace,
                                                     TerminationReason::MaxIters));
      }
    }
    if (gap_ok || k >= config.max_iters) {
      trace.push({k, fy, G, H, StepKind::GradientOnly, 0.0, active.size()});
      return make_result(std::move(y), best, k, trace,
                         gap_ok ? TerminationReason::GapTolerance
                                : TerminationReason::MaxIters);
    }

    // Direction choice: toward the oracle vertex unless the away direction
    // is strictly better (ties go to the FW branch).
    const auto [away_key, away_entry] = active.argmax_inner(gy);
    const double fw_dir_val = gy.dot(s.point) - gy.dot(comp);
    const double away_dir_val = gy.dot(comp) - gy.dot(away_entry->point);
    const bool is_fw = fw_dir_val <= away_dir_val;

    Vector d = is_fw ? Vector(s.point - comp) : Vector(comp - away_entry->point);
    // A sole active vertex makes the away direction zero in exact arithmetic;
    // bookkeeping drift can leave a nonzero sliver while its weight is
    // already 1, which would blow up alpha_max. Both states end the run.
    const bool sole_vertex_away = !is_fw && away_entry->weight >= 1.0 - 1e-12;
    if (d.norm() <= kDegenerateDirTol || sole_vertex_away) {
      trace.push({k, fy, G, H, StepKind::GradientOnly, 0.0, active.size()});
      return make_result(std::move(y), best, k, trace, TerminationReason::DegenerateDirection);
    }
    double alpha_max = 1.0;
    if (!is_fw) {
      const double lam = away_entry->weight;
      alpha_max = lam / (1.0 - lam);
    }

    const LineSearchResult ls = objective.exact_linesearch(y, d, alpha_max);
    if (ls.value > fy + 1e-9 * (1.0 + std::abs(fy))) {
      throw NumericalFailure("uafw: line search failed to descend",
                             make_result(std::move(y), best, k, trace,
                                         TerminationReason::MaxIters));
    }
    const double alpha = ls.alpha;
    const bool at_max = (alpha >= alpha_max) ||
                        (alpha_max - alpha) <= 1e-12 * std::max(1.0, alpha_max);

    StepKind kind = StepKind::GradientOnly;
    if (alpha > 0.0) kind = is_fw ? StepKind::FW : (at_max ? StepKind::Drop : StepKind::Away);
    trace.push({k, fy, G, H, kind, alpha, active.size()});

    x = y + alpha * d;
    if (alpha > 0.0) {
      if (is_fw)
        active.apply_fw_step(s, alpha, at_max);
      else
        active.apply_away_step(away_key, alpha, at_max);
    }

    if ((k + 1) % kDriftCheckStride == 0) {
      Vector compx = region.project_complement(x);
      const double drift = (active.reconstruct(x.size()) - compx).norm();
      if (drift > kDriftFailTol * (1.0 + compx.norm())) {
        throw NumericalFailure("uafw: active-set weights drifted from the iterate",
                               make_result(std::move(x), best, k + 1, trace,
                                           TerminationReason::MaxIters));
      }
    }
  }
}

}  // namespace ufw
