#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>

namespace ufw {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A vertex of the bounded component S, addressed by a discrete key.
///
/// The key is the identity used for active-set bookkeeping: two handles name
/// the same vertex iff their keys compare equal, and equal keys imply equal
/// points. Each adapter documents its own encoding. Regions whose bounded set
/// is not a polytope use serialization sentinels as keys; those keys are
/// stable but useless for active-set maintenance.
struct VertexHandle {
  std::string key;
  Vector point;

  friend bool operator==(const VertexHandle& a, const VertexHandle& b) { return a.key == b.key; }
  friend bool operator!=(const VertexHandle& a, const VertexHandle& b) { return a.key != b.key; }
};

/// Per-solve scratch state for oracles that iterate internally. A solver
/// passes the same context to every lmo call of one solve; the region may
/// read and update it (e.g. keep the last singular vector as the next start).
/// value_tolerance is the absolute error on the achieved value ⟨c, s⟩ the
/// caller can tolerate; iterative oracles may stop refining once they are
/// inside it (0 keeps the oracle's own default accuracy). Closed-form
/// oracles ignore it.
struct LmoContext {
  long call_index = 0;
  double value_tolerance = 0.0;
  Vector start_hint;  // empty when absent
};

/// Feasible region of the form T ⊕ S: an unbounded linear subspace T
/// direct-summed with a bounded convex set S that lives in the orthogonal
/// complement of T.
///
/// Implementations must keep the two projections linear, idempotent and
/// complementary (they sum to the identity), and every `lmo` output must lie
/// in S, hence have zero subspace component. Regions are immutable after
/// construction and safe to share across concurrent solver runs.
class DecomposedRegion {
 public:
  virtual ~DecomposedRegion() = default;

  int ambient_dim() const { return ambient_dim_; }
  int subspace_dim() const { return subspace_dim_; }
  /// Bound parameter (radius) of the bounded set S.
  double delta() const { return delta_; }

  /// Orthogonal projection onto the subspace T.
  virtual Vector project_subspace(const Vector& x) const = 0;

  /// Orthogonal projection onto the complement of T; defaults to
  /// x - project_subspace(x).
  virtual Vector project_complement(const Vector& x) const {
    check_dim(x);
    return x - project_subspace(x);
  }

  /// Vertex of S minimizing the linear form ⟨c, s⟩ over S. Ties are broken by
  /// the adapter's documented deterministic rule.
  virtual VertexHandle lmo(const Vector& c) const = 0;

  /// Form of `lmo` for use inside a solve loop. The context is owned by the
  /// solver (one per solve, never shared), so iterative oracles can carry a
  /// deterministic warm start from call to call while the region itself stays
  /// immutable. The default ignores the context.
  virtual VertexHandle lmo(const Vector& c, LmoContext& ctx) const {
    ++ctx.call_index;
    return lmo(c);
  }

  /// True when S is a polytope whose vertices carry discrete keys, i.e. the
  /// region supports exact active-set maintenance.
  virtual bool polyhedral_vertices() const = 0;

  /// Recognize a point as a vertex of S and return its canonical handle, or
  /// nullopt if the point is not (close to) a vertex. Only meaningful for
  /// polyhedral regions.
  virtual std::optional<VertexHandle> identify_vertex(const Vector& /*point*/) const {
    return std::nullopt;
  }

  /// A feasible default start. Adapters guarantee the complement component of
  /// this point is either a vertex of S or zero (when zero is in S).
  virtual Vector default_start() const = 0;

 protected:
  DecomposedRegion(int ambient_dim, int subspace_dim, double delta)
      : ambient_dim_(ambient_dim), subspace_dim_(subspace_dim), delta_(delta) {
    if (ambient_dim <= 0) throw std::invalid_argument("region: ambient_dim must be positive");
    if (subspace_dim < 0 || subspace_dim > ambient_dim)
      throw std::invalid_argument("region: subspace_dim out of range");
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw std::invalid_argument("region: delta must be a positive finite real");
  }

  void check_dim(const Vector& x) const {
    if (x.size() != ambient_dim_)
      throw std::invalid_argument("region: vector length does not match ambient_dim");
  }

 private:
  int ambient_dim_;
  int subspace_dim_;
  double delta_;
};

}  // namespace ufw
