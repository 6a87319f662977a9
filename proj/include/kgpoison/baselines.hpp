#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "kgpoison/attack_direct.hpp"
#include "kgpoison/attack_indirect.hpp"
#include "kgpoison/error.hpp"
#include "kgpoison/rng.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

namespace detail {

// One uniformly drawn add candidate on `entity` that passes `valid`, or
// nullopt after a bounded number of rejections.
inline std::optional<Triple> random_add(const TripleStore& store, EntityId entity, Side side,
                                        Rng& rng, const std::function<bool(const Triple&)>& valid) {
  const std::uint64_t ne = store.num_entities();
  const std::uint64_t total = ne * store.num_relations();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto i = uniform_below(rng, total);
    auto r = static_cast<RelationId>(i / ne);
    auto x = static_cast<EntityId>(i % ne);
    Triple t = side == Side::Head ? Triple{entity, r, x} : Triple{x, r, entity};
    if (t.head != t.tail && !store.contains(t) && valid(t)) return t;
  }
  return std::nullopt;
}

}  // namespace detail

// random-dd / random-da: uniformly chosen perturbations from the same
// candidate spaces the informed direct attack ranks. benefit is 0.
inline std::vector<Perturbation> random_direct(const TripleStore& store, const Triple& target,
                                               Side side, std::size_t budget, Action mode,
                                               std::uint64_t seed, bool both_orientations = false) {
  require(budget >= 1, ErrorCode::InvalidConfig, "budget must be >= 1");
  require(!store.contains(target), ErrorCode::TargetInTrainingSet, to_string(target));
  Rng rng(target_seed(seed, target));
  const EntityId e = attacked_entity(target, side);
  std::vector<Perturbation> out;

  if (mode == Action::Delete) {
    auto cands = delete_candidates(store, {e, side, both_orientations, 0, 0});
    require(!cands.empty(), ErrorCode::NoCandidates, "entity " + std::to_string(e) + " is isolated");
    for (auto i : sample_without_replacement(rng, cands.size(), budget))
      out.push_back({Action::Delete, cands[i], 0.0});
    return out;
  }

  std::set<Triple> chosen;
  auto valid = [&](const Triple& t) { return t != target && !chosen.contains(t); };
  for (std::size_t k = 0; k < budget; ++k) {
    Side s = both_orientations && uniform_below(rng, 2) == 1 ? (side == Side::Head ? Side::Tail : Side::Head)
                                                           : side;
    auto t = detail::random_add(store, e, s, rng, valid);
    if (!t) break;
    chosen.insert(*t);
    out.push_back({Action::Add, *t, 0.0});
  }
  require(!out.empty(), ErrorCode::NoCandidates, "no add candidates for " + to_string(target));
  return out;
}

// random-id / random-ia: a uniformly chosen K-hop path, then a uniformly
// chosen perturbation on its proxy; repeated until `budget` distinct picks.
inline std::vector<Perturbation> random_indirect(const TripleStore& store, const Triple& target,
                                                 Side side, std::size_t k_hops, std::size_t budget,
                                                 Action mode, std::uint64_t seed) {
  require(budget >= 1, ErrorCode::InvalidConfig, "budget must be >= 1");
  require(!store.contains(target), ErrorCode::TargetInTrainingSet, to_string(target));
  auto paths = ranked_paths(store, target, side, k_hops);
  require(!paths.empty(), ErrorCode::NoPaths, "no paths from target " + to_string(target));
  Rng rng(target_seed(seed, target));

  std::set<Triple> chosen;
  std::vector<Perturbation> out;
  for (std::size_t attempt = 0; out.size() < budget && attempt < 50 * budget; ++attempt) {
    const auto& path = paths[uniform_below(rng, paths.size())];
    auto path_triples = path.triples();
    auto valid = [&](const Triple& t) {
      if (t.head == target.head || t.tail == target.head || t.head == target.tail ||
          t.tail == target.tail)
        return false;
      if (std::find(path_triples.begin(), path_triples.end(), t) != path_triples.end()) return false;
      return !chosen.contains(t);
    };
    std::optional<Triple> pick;
    if (mode == Action::Delete) {
      auto cands = delete_candidates(store, {path.proxy(), side, false, 0, 0});
      std::erase_if(cands, [&](const Triple& t) { return !valid(t); });
      if (!cands.empty()) pick = cands[uniform_below(rng, cands.size())];
    } else {
      pick = detail::random_add(store, path.proxy(), side, rng, valid);
    }
    if (!pick) continue;
    chosen.insert(*pick);
    out.push_back({mode, *pick, 0.0});
  }
  return out;
}

}  // namespace kgp
