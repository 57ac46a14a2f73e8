#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ufw/errors.hpp"
#include "ufw/objective.hpp"
#include "ufw/region.hpp"

namespace ufw {

enum class StepRule { Simple, LineSearch };
enum class StepKind { FW, Away, Drop, GradientOnly };
enum class TerminationReason { GapTolerance, MaxIters, DegenerateDirection };

const char* to_string(StepKind k);
const char* to_string(TerminationReason r);
StepKind step_kind_from_string(const std::string& s);

struct UfwConfig {
  double eta = 0.0;  // gradient step size along the subspace; must be > 0
  StepRule step_rule = StepRule::LineSearch;
  long max_iters = 100000;
  double tol_G = 1e-4;   // on G_k / max(1, |f_k|)
  double tol_H2 = 1e-4;  // on H_k^2 / max(1, |f_k|)
  bool record_trace = true;
};

/// One row of the solve trace. All quantities live at the post-gradient-step
/// point y^k: f_val = f(y^k), G and H are the duality-style gap over S and
/// the subspace gradient norm at y^k, and (step_kind, alpha) describe the
/// move taken from y^k. Terminal rows carry step_kind = GradientOnly and
/// alpha = 0 (no move along S is taken when stopping).
struct IterationRecord {
  long k = 0;
  double f_val = 0.0;
  double G = 0.0;
  double H = 0.0;
  StepKind step_kind = StepKind::GradientOnly;
  double alpha = 0.0;
  int active_size = 0;
};

struct SolveResult {
  Vector x_final;
  double best_f = 0.0;  // min over recorded f_val
  long iterations = 0;  // index of the terminal row == update steps taken
  std::vector<IterationRecord> trace;
  TerminationReason termination_reason = TerminationReason::MaxIters;
};

/// Raised when a solve (or an oracle inside one) breaks down numerically.
/// When thrown from inside a solver loop, `partial` carries the trace
/// accumulated so far.
class NumericalFailure : public NumericalError {
 public:
  explicit NumericalFailure(const std::string& what) : NumericalError(what) {}
  NumericalFailure(const std::string& what, SolveResult partial_result)
      : NumericalError(what), partial(std::move(partial_result)), has_partial(true) {}

  SolveResult partial;
  bool has_partial = false;
};

/// Convex-combination bookkeeping for the away-step solver: vertices of S
/// and their weights, keyed by vertex identity. Weights stay positive and
/// sum to one; after every update, weights below 1e-12 are dropped and the
/// rest renormalized.
class ActiveVertexSet {
 public:
  struct Entry {
    Vector point;
    double weight;
  };

  explicit ActiveVertexSet(const VertexHandle& v0);

  int size() const { return static_cast<int>(entries_.size()); }
  double weight_sum() const;
  const std::map<std::string, Entry>& entries() const { return entries_; }

  /// Key and entry of the vertex maximizing ⟨g, v⟩; ties go to the smallest
  /// key.
  std::pair<std::string, const Entry*> argmax_inner(const Vector& g) const;

  /// Toward-vertex update: blend all weights by (1 - alpha) and add alpha to
  /// s. A full step (at_max) resets the set to {s}.
  void apply_fw_step(const VertexHandle& s, double alpha, bool at_max);

  /// Away update: scale all weights by (1 + alpha) and subtract alpha from
  /// the away vertex; at the maximal step the vertex is dropped.
  void apply_away_step(const std::string& away_key, double alpha, bool at_max);

  /// Sum of weight * point; tracks the complement component of the iterate.
  Vector reconstruct(Eigen::Index dim) const;

 private:
  void cleanup();
  std::map<std::string, Entry> entries_;
};

/// Gap pair (G, H) at the point y given s = lmo(∇f(y)).point:
/// G = ⟨∇f(y), P_complement(y) - s⟩ and H = ||P_subspace(∇f(y))||.
/// Both are nonnegative up to roundoff whenever y is feasible.
std::pair<double, double> compute_gaps(const SmoothObjective& objective,
                                       const DecomposedRegion& region, const Vector& y,
                                       const Vector& s_point);

/// Upper bound on the primal optimality gap from (G, H) and whichever
/// constants the caller knows: min of G + H * subspace_diameter and
/// G + H^2 / (2 * strong_convexity). At least one constant is required.
double primal_gap_bound(double G, double H, std::optional<double> subspace_diameter,
                        std::optional<double> strong_convexity);

/// Frank-Wolfe over S alternated with gradient descent along the subspace.
/// Per iteration: y = x - eta * P_subspace(∇f(x)); s = lmo(∇f(y));
/// x_next = y + alpha (s - P_complement(x)), with alpha from the configured
/// step rule (line search over [0,1], or 2/(k+2) accepted only while the
/// value stays below f(x0)). Stops when both relative gaps fall below the
/// tolerances, both measured against the best value seen so far.
SolveResult ufw_solve(const SmoothObjective& objective, const DecomposedRegion& region,
                      const Vector& x0, const UfwConfig& config);

/// Away-step variant. Requires a polyhedral region with discrete vertex
/// identities and a start whose complement component is a vertex of S; the
/// step size always comes from exact line search. Additionally stops with
/// DegenerateDirection when the chosen direction has norm <= 1e-14 (a sole
/// active vertex makes the away direction zero).
SolveResult uafw_solve(const SmoothObjective& objective, const DecomposedRegion& region,
                       const Vector& x0, const UfwConfig& config);

}  // namespace ufw
