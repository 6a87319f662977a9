#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "kgpoison/error.hpp"
#include "kgpoison/model.hpp"
#include "kgpoison/rng.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

enum class Action : std::uint8_t { Add, Delete };

constexpr std::string_view to_string(Action a) { return a == Action::Add ? "add" : "delete"; }

struct Perturbation {
  Action action = Action::Delete;
  Triple triple;
  double benefit = 0;

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

struct AttackConfig {
  std::size_t budget = 1;
  double step_eps_h = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  // (relation, entity) pairs drawn per attacked entity for Add; 0 = all pairs
  std::size_t add_candidate_sample = 10000;
  Side target_side = Side::Head;
  std::uint64_t rng_seed = 7;
  // Also consider facts holding the attacked entity on the opposite side.
  bool both_orientations = false;
  // Raise instead of degrade the target's plausibility.
  bool promote = false;

  void validate() const {
    require(budget >= 1, ErrorCode::InvalidConfig, "budget must be >= 1");
    require(step_eps_h > 0, ErrorCode::InvalidConfig, "step_eps_h must be > 0");
  }
};

inline EntityId attacked_entity(const Triple& target, Side side) {
  return side == Side::Head ? target.head : target.tail;
}

// Seed for all sampling done on behalf of one targeted fact.
inline std::uint64_t target_seed(std::uint64_t base, const Triple& t) {
  return derive_seed(base, {t.head, t.relation, t.tail});
}

// Desired displacement of the attacked entity: a step of size eps_h against
// the gradient of the target's plausibility (along it when promoting).
template <typename Real>
std::vector<double> shift_vector(const BasicEmbeddingStore<Real>& emb, const Triple& target,
                                 Side side, double eps_h, bool promote = false) {
  auto g = grad(emb, target);
  auto& d = side == Side::Head ? g.d_head : g.d_tail;
  const double sign = promote ? eps_h : -eps_h;
  for (auto& x : d) x *= sign;
  return std::move(d);
}

// f(cand) with every occurrence of `entity` replaced by `replacement`.
template <typename Real>
double score_replaced(const BasicEmbeddingStore<Real>& emb, const Triple& cand, EntityId entity,
                      std::span<const double> replacement) {
  const auto rel = emb.relation(cand.relation);
  const auto kind = emb.kind();
  bool h = cand.head == entity, t = cand.tail == entity;
  if (h && t) return score(kind, replacement, rel, replacement);
  if (h) return score(kind, replacement, rel, emb.entity(cand.tail));
  if (t) return score(kind, emb.entity(cand.head), rel, replacement);
  return score(emb, cand);
}

template <typename Real>
std::vector<double> shifted_entity(const BasicEmbeddingStore<Real>& emb, EntityId e,
                                   std::span<const double> eps) {
  auto v = emb.entity(e);
  require(eps.size() == v.size(), ErrorCode::DimensionMismatch, "shift has wrong dim");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = double(v[i]) + eps[i];
  return out;
}

// eta^- = f(e, r, x) - lambda1 * f(e + eps, r, x)
template <typename Real>
double score_delete(const BasicEmbeddingStore<Real>& emb, EntityId target_entity,
                    std::span<const double> eps_star, const Triple& cand, double lambda1) {
  auto moved = shifted_entity(emb, target_entity, eps_star);
  return score(emb, cand) - lambda1 * score_replaced(emb, cand, target_entity, moved);
}

// eta^+ = f(e + eps, r, x) - lambda2 * f(e, r, x)
template <typename Real>
double score_add(const BasicEmbeddingStore<Real>& emb, EntityId target_entity,
                 std::span<const double> eps_star, const Triple& cand, double lambda2) {
  auto moved = shifted_entity(emb, target_entity, eps_star);
  return score_replaced(emb, cand, target_entity, moved) - lambda2 * score(emb, cand);
}

// Candidates touching one perturbed entity (the attacked entity for direct
// attacks, a proxy for indirect ones).
struct CandidateSpace {
  EntityId entity = 0;
  Side side = Side::Head;
  bool both_orientations = false;
  std::size_t add_sample = 0;
  std::uint64_t seed = 0;
};

// Delete candidates: stored facts holding the entity on `side` (both sides
// when requested), in store order.
inline std::vector<Triple> delete_candidates(const TripleStore& store, const CandidateSpace& cs) {
  std::vector<std::uint32_t> pos;
  auto take = [&](std::span<const std::uint32_t> p) { pos.insert(pos.end(), p.begin(), p.end()); };
  if (cs.side == Side::Head || cs.both_orientations) take(store.positions_as_head(cs.entity));
  if (cs.side == Side::Tail || cs.both_orientations) take(store.positions_as_tail(cs.entity));
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  std::vector<Triple> out;
  out.reserve(pos.size());
  for (auto p : pos) out.push_back(store[p]);
  return out;
}

// Add candidates: (entity, r, x) for side Head, (x, r, entity) for side Tail,
// over all relation x entity pairs or a uniform sample of them drawn without
// replacement. Existing facts and self-loops are dropped.
inline std::vector<Triple> add_candidates(const TripleStore& store, const CandidateSpace& cs) {
  const std::uint64_t ne = store.num_entities();
  const std::uint64_t total = ne * store.num_relations();
  std::vector<std::uint64_t> idx;
  if (cs.add_sample == 0 || cs.add_sample >= total) {
    idx.resize(total);
    for (std::uint64_t i = 0; i < total; ++i) idx[i] = i;
  } else {
    Rng rng(cs.seed);
    idx = sample_without_replacement(rng, total, cs.add_sample);
  }
  std::vector<Triple> out;
  out.reserve(idx.size() * (cs.both_orientations ? 2 : 1));
  auto push = [&](const Triple& t) {
    if (t.head != t.tail && !store.contains(t)) out.push_back(t);
  };
  for (auto i : idx) {
    auto r = static_cast<RelationId>(i / ne);
    auto x = static_cast<EntityId>(i % ne);
    if (cs.side == Side::Head || cs.both_orientations) push({cs.entity, r, x});
    if (cs.side == Side::Tail || cs.both_orientations) push({x, r, cs.entity});
  }
  return out;
}

// Sort key for deterministic ties: (relation, other entity, orientation).
inline auto candidate_key(const Triple& t, EntityId entity) {
  bool entity_is_head = t.head == entity;
  EntityId other = entity_is_head ? t.tail : t.head;
  return std::tuple{t.relation, other, entity_is_head ? 0 : 1};
}

// Scores every candidate of the given space and returns them best-first.
template <typename Real>
std::vector<Perturbation> rank_candidates(const TripleStore& store,
                                          const BasicEmbeddingStore<Real>& emb,
                                          const CandidateSpace& cs, std::span<const double> eps,
                                          Action mode, double lambda,
                                          const std::function<bool(const Triple&)>& exclude = {}) {
  auto cands = mode == Action::Delete ? delete_candidates(store, cs) : add_candidates(store, cs);
  auto moved = shifted_entity(emb, cs.entity, eps);
  std::vector<Perturbation> out;
  out.reserve(cands.size());
  for (const auto& c : cands) {
    if (exclude && exclude(c)) continue;
    double clean = score(emb, c);
    double shifted = score_replaced(emb, c, cs.entity, moved);
    double benefit = mode == Action::Delete ? clean - lambda * shifted : shifted - lambda * clean;
    out.push_back({mode, c, benefit});
  }
  std::sort(out.begin(), out.end(), [&](const Perturbation& a, const Perturbation& b) {
    if (a.benefit != b.benefit) return a.benefit > b.benefit;
    return candidate_key(a.triple, cs.entity) < candidate_key(b.triple, cs.entity);
  });
  return out;
}

// Top-M direct perturbations on the attacked entity of `target`.
template <typename Real>
std::vector<Perturbation> direct_attack(const TripleStore& store,
                                        const BasicEmbeddingStore<Real>& emb, const Triple& target,
                                        const AttackConfig& cfg, Action mode) {
  cfg.validate();
  require(!store.contains(target), ErrorCode::TargetInTrainingSet, to_string(target));
  auto eps = shift_vector(emb, target, cfg.target_side, cfg.step_eps_h, cfg.promote);
  CandidateSpace cs{attacked_entity(target, cfg.target_side), cfg.target_side,
                    cfg.both_orientations, cfg.add_candidate_sample,
                    target_seed(cfg.rng_seed, target)};
  auto ranked = rank_candidates(store, emb, cs, eps, mode,
                                mode == Action::Delete ? cfg.lambda1 : cfg.lambda2,
                                [&](const Triple& t) { return t == target; });
  require(!ranked.empty(), ErrorCode::NoCandidates,
          "no " + std::string(to_string(mode)) + " candidates for " + to_string(target));
  if (ranked.size() > cfg.budget) ranked.resize(cfg.budget);
  return ranked;
}

}  // namespace kgp
