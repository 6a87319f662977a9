#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgpoison/error.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

enum class ModelKind : std::uint32_t { TransE = 0, TransR = 1, Rescal = 2 };

constexpr std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::TransE: return "transe";
    case ModelKind::TransR: return "transr";
    case ModelKind::Rescal: return "rescal";
  }
  return "unknown";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "transe") return ModelKind::TransE;
  if (s == "transr") return ModelKind::TransR;
  if (s == "rescal") return ModelKind::Rescal;
  throw Error(ErrorCode::InvalidConfig, "unknown model '" + std::string(s) + "'");
}

constexpr bool uses_relation_vectors(ModelKind k) { return k != ModelKind::Rescal; }
constexpr bool uses_relation_matrices(ModelKind k) { return k != ModelKind::TransE; }

// Relation parameters as seen by a scoring call. `mat` is row-major dim x dim
// and empty for TransE; `vec` is empty for RESCAL.
template <typename Real>
struct RelationView {
  std::span<const Real> vec;
  std::span<const Real> mat;
};

template <typename Real>
class BasicEmbeddingStore {
 public:
  using value_type = Real;

  BasicEmbeddingStore() = default;
  BasicEmbeddingStore(ModelKind kind, std::size_t num_entities, std::size_t num_relations,
                      std::size_t dim)
      : kind_(kind),
        dim_(dim),
        num_entities_(num_entities),
        num_relations_(num_relations),
        entities_(num_entities * dim),
        rel_vectors_(uses_relation_vectors(kind) ? num_relations * dim : 0),
        rel_matrices_(uses_relation_matrices(kind) ? num_relations * dim * dim : 0) {}

  ModelKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }

  std::span<Real> entity(EntityId e) { return std::span<Real>(entities_).subspan(e * dim_, dim_); }
  std::span<const Real> entity(EntityId e) const {
    return std::span<const Real>(entities_).subspan(e * dim_, dim_);
  }

  std::span<Real> relation_vector(RelationId r) {
    if (rel_vectors_.empty()) return {};
    return std::span<Real>(rel_vectors_).subspan(r * dim_, dim_);
  }
  std::span<Real> relation_matrix(RelationId r) {
    if (rel_matrices_.empty()) return {};
    return std::span<Real>(rel_matrices_).subspan(r * dim_ * dim_, dim_ * dim_);
  }

  RelationView<Real> relation(RelationId r) const {
    RelationView<Real> v;
    if (!rel_vectors_.empty()) v.vec = std::span<const Real>(rel_vectors_).subspan(r * dim_, dim_);
    if (!rel_matrices_.empty())
      v.mat = std::span<const Real>(rel_matrices_).subspan(r * dim_ * dim_, dim_ * dim_);
    return v;
  }

  std::span<Real> entity_data() { return entities_; }
  std::span<const Real> entity_data() const { return entities_; }
  std::span<Real> relation_vector_data() { return rel_vectors_; }
  std::span<const Real> relation_vector_data() const { return rel_vectors_; }
  std::span<Real> relation_matrix_data() { return rel_matrices_; }
  std::span<const Real> relation_matrix_data() const { return rel_matrices_; }

  bool all_finite() const {
    auto finite = [](Real x) { return std::isfinite(x); };
    return std::all_of(entities_.begin(), entities_.end(), finite) &&
           std::all_of(rel_vectors_.begin(), rel_vectors_.end(), finite) &&
           std::all_of(rel_matrices_.begin(), rel_matrices_.end(), finite);
  }

  friend bool operator==(const BasicEmbeddingStore&, const BasicEmbeddingStore&) = default;

 private:
  ModelKind kind_ = ModelKind::TransE;
  std::size_t dim_ = 0;
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::vector<Real> entities_;
  std::vector<Real> rel_vectors_;
  std::vector<Real> rel_matrices_;
};

using EmbeddingStore = BasicEmbeddingStore<float>;

struct ScoreGradient {
  std::vector<double> d_head;
  std::vector<double> d_tail;
};

namespace detail {

template <typename Real>
void check_relation(ModelKind kind, const RelationView<Real>& rel, std::size_t d) {
  bool ok = true;
  if (uses_relation_vectors(kind)) ok = ok && rel.vec.size() == d;
  if (uses_relation_matrices(kind)) ok = ok && rel.mat.size() == d * d;
  require(ok, ErrorCode::DimensionMismatch, "relation parameters do not match dim");
}

// u = M (h - t) + r  (TransR),  u = h + r - t  (TransE)
template <typename A, typename R, typename B>
std::vector<double> translation_residual(ModelKind kind, std::span<const A> h,
                                         const RelationView<R>& rel, std::span<const B> t) {
  const std::size_t d = h.size();
  std::vector<double> u(d);
  if (kind == ModelKind::TransE) {
    for (std::size_t i = 0; i < d; ++i)
      u[i] = double(h[i]) + double(rel.vec[i]) - double(t[i]);
    return u;
  }
  std::vector<double> diff(d);
  for (std::size_t j = 0; j < d; ++j) diff[j] = double(h[j]) - double(t[j]);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = double(rel.vec[i]);
    const R* row = rel.mat.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc += double(row[j]) * diff[j];
    u[i] = acc;
  }
  return u;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

// Plausibility f(h, r, t); higher is more plausible.
//   TransE: -||h + r - t||,  TransR: -||M h + r - M t||,  RESCAL: h^T M t
template <typename A, typename R, typename B>
double score(ModelKind kind, std::span<const A> h, const RelationView<R>& rel,
             std::span<const B> t) {
  const std::size_t d = h.size();
  require(t.size() == d, ErrorCode::DimensionMismatch, "head/tail dims differ");
  detail::check_relation(kind, rel, d);
  if (kind == ModelKind::TransE) {
    double s = 0;
    for (std::size_t i = 0; i < d; ++i) {
      double u = double(h[i]) + double(rel.vec[i]) - double(t[i]);
      s += u * u;
    }
    return -std::sqrt(s);
  }
  if (kind == ModelKind::TransR) return -detail::l2_norm(detail::translation_residual(kind, h, rel, t));
  double s = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const R* row = rel.mat.data() + i * d;
    double mt = 0;
    for (std::size_t j = 0; j < d; ++j) mt += double(row[j]) * double(t[j]);
    s += double(h[i]) * mt;
  }
  return s;
}

template <typename Real>
double score(const BasicEmbeddingStore<Real>& emb, const Triple& tr) {
  return score(emb.kind(), emb.entity(tr.head), emb.relation(tr.relation), emb.entity(tr.tail));
}

// Analytic df/dh and df/dt. Throws ZeroResidual for translation models when
// the residual vanishes (the norm is not differentiable there).
template <typename A, typename R, typename B>
ScoreGradient grad(ModelKind kind, std::span<const A> h, const RelationView<R>& rel,
                   std::span<const B> t) {
  const std::size_t d = h.size();
  require(t.size() == d, ErrorCode::DimensionMismatch, "head/tail dims differ");
  detail::check_relation(kind, rel, d);
  ScoreGradient g{std::vector<double>(d), std::vector<double>(d)};
  if (kind == ModelKind::Rescal) {
    for (std::size_t i = 0; i < d; ++i) {
      double mt = 0, mth = 0;
      for (std::size_t j = 0; j < d; ++j) {
        mt += double(rel.mat[i * d + j]) * double(t[j]);
        mth += double(rel.mat[j * d + i]) * double(h[j]);
      }
      g.d_head[i] = mt;
      g.d_tail[i] = mth;
    }
    return g;
  }
  auto u = detail::translation_residual(kind, h, rel, t);
  double n = detail::l2_norm(u);
  require(n > 0, ErrorCode::ZeroResidual, "translation residual is exactly zero");
  if (kind == ModelKind::TransE) {
    for (std::size_t i = 0; i < d; ++i) {
      g.d_head[i] = -u[i] / n;
      g.d_tail[i] = u[i] / n;
    }
    return g;
  }
  for (std::size_t j = 0; j < d; ++j) {
    double mtu = 0;
    for (std::size_t i = 0; i < d; ++i) mtu += double(rel.mat[i * d + j]) * u[i];
    g.d_head[j] = -mtu / n;
    g.d_tail[j] = mtu / n;
  }
  return g;
}

template <typename Real>
ScoreGradient grad(const BasicEmbeddingStore<Real>& emb, const Triple& tr) {
  return grad(emb.kind(), emb.entity(tr.head), emb.relation(tr.relation), emb.entity(tr.tail));
}

// Adds coeff * df/dtheta into the given buffers (any may be empty to skip).
// Used by the trainer; a vanishing translation residual contributes nothing.
template <typename Real>
void accumulate_score_grad(ModelKind kind, std::span<const Real> h, const RelationView<Real>& rel,
                           std::span<const Real> t, double coeff, std::span<Real> dh,
                           std::span<Real> dt, std::span<Real> dvec, std::span<Real> dmat) {
  const std::size_t d = h.size();
  if (kind == ModelKind::Rescal) {
    for (std::size_t i = 0; i < d; ++i) {
      double mt = 0, mth = 0;
      for (std::size_t j = 0; j < d; ++j) {
        mt += double(rel.mat[i * d + j]) * double(t[j]);
        mth += double(rel.mat[j * d + i]) * double(h[j]);
      }
      if (!dh.empty()) dh[i] += Real(coeff * mt);
      if (!dt.empty()) dt[i] += Real(coeff * mth);
    }
    if (!dmat.empty())
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) dmat[i * d + j] += Real(coeff * double(h[i]) * double(t[j]));
    return;
  }
  thread_local std::vector<double> u;
  u.resize(d);
  if (kind == ModelKind::TransE) {
    for (std::size_t i = 0; i < d; ++i) u[i] = double(h[i]) + double(rel.vec[i]) - double(t[i]);
  } else {
    thread_local std::vector<double> diff;
    diff.resize(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = double(h[j]) - double(t[j]);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = double(rel.vec[i]);
      for (std::size_t j = 0; j < d; ++j) acc += double(rel.mat[i * d + j]) * diff[j];
      u[i] = acc;
    }
  }
  double n = detail::l2_norm(u);
  if (n == 0) return;
  for (auto& x : u) x /= n;
  if (!dvec.empty())
    for (std::size_t i = 0; i < d; ++i) dvec[i] += Real(-coeff * u[i]);
  if (kind == ModelKind::TransE) {
    for (std::size_t i = 0; i < d; ++i) {
      if (!dh.empty()) dh[i] += Real(-coeff * u[i]);
      if (!dt.empty()) dt[i] += Real(coeff * u[i]);
    }
    return;
  }
  for (std::size_t j = 0; j < d; ++j) {
    double mtu = 0;
    for (std::size_t i = 0; i < d; ++i) mtu += double(rel.mat[i * d + j]) * u[i];
    if (!dh.empty()) dh[j] += Real(-coeff * mtu);
    if (!dt.empty()) dt[j] += Real(coeff * mtu);
  }
  if (!dmat.empty())
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        dmat[i * d + j] += Real(-coeff * u[i] * (double(h[j]) - double(t[j])));
}

}  // namespace kgp
