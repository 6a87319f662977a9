#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "kgpoison/attack_direct.hpp"
#include "kgpoison/error.hpp"
#include "kgpoison/model.hpp"
#include "kgpoison/paths.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

struct IndirectConfig {
  std::size_t k_hops = 2;
  std::size_t paths = 10;
  double lambda = 1.0;
  std::size_t budget = 1;
  double step_eps_h = 1.0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  std::size_t add_candidate_sample = 10000;
  Side target_side = Side::Head;
  std::uint64_t rng_seed = 7;
  bool both_orientations = false;
  bool promote = false;

  void validate() const {
    require(k_hops >= 1, ErrorCode::InvalidConfig, "k_hops must be >= 1");
    require(paths >= 1, ErrorCode::InvalidConfig, "paths must be >= 1");
    require(budget >= 1, ErrorCode::InvalidConfig, "budget must be >= 1");
    require(step_eps_h > 0, ErrorCode::InvalidConfig, "step_eps_h must be > 0");
  }
};

struct ShiftChain {
  PathCandidate path;
  // shifts[i] is the desired displacement of path entity i+1 (the proxy last)
  std::vector<std::vector<double>> shifts;
};

struct IndirectPerturbation {
  Perturbation perturbation;  // benefit holds psi
  std::vector<EntityId> path;
  EntityId proxy = 0;
  double psi = 0;
  double eta = 0;
  double penalty = 0;
};

// Pushes a known displacement of `known_entity` one hop outward. Returns the
// eps_h-length direction that maximizes, to first order,
//   f(known + known_shift, r, nbr + eps) - f(known, r, nbr + eps)
// i.e. the normalized difference of the neighbor-side partials.
template <typename Real>
std::vector<double> transfer_shift(const BasicEmbeddingStore<Real>& emb, EntityId known_entity,
                                   std::span<const double> known_shift, const DirectedHop& hop,
                                   double eps_h) {
  const auto kind = emb.kind();
  const auto rel = emb.relation(hop.relation);
  const auto known = emb.entity(known_entity);
  const auto nbr = emb.entity(hop.neighbor);
  auto moved = shifted_entity(emb, known_entity, known_shift);
  std::span<const double> moved_view(moved);

  std::vector<double> g;
  if (hop.orientation == Orientation::NeighborIsTail) {
    auto a = grad(kind, moved_view, rel, nbr).d_tail;
    auto b = grad(kind, known, rel, nbr).d_tail;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    g = std::move(a);
  } else {
    auto a = grad(kind, nbr, rel, moved_view).d_head;
    auto b = grad(kind, nbr, rel, known).d_head;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    g = std::move(a);
  }
  double n = 0;
  for (double x : g) n += x * x;
  n = std::sqrt(n);
  require(n > 0 && std::isfinite(n), ErrorCode::ZeroGradient,
          "shift does not propagate to entity " + std::to_string(hop.neighbor));
  for (auto& x : g) x *= eps_h / n;
  return g;
}

// Recurrent shift goals for every entity on `path`, seeded by the direct
// shift of the attacked entity.
template <typename Real>
ShiftChain build_shift_chain(const BasicEmbeddingStore<Real>& emb, const Triple& target, Side side,
                             const PathCandidate& path, double eps_h, bool promote = false) {
  require(path.origin == attacked_entity(target, side), ErrorCode::InvalidConfig,
          "path does not start at the attacked entity");
  ShiftChain chain{path, {}};
  auto shift = shift_vector(emb, target, side, eps_h, promote);
  EntityId known = path.origin;
  for (const auto& hop : path.hops) {
    shift = transfer_shift(emb, known, shift, hop, eps_h);
    chain.shifts.push_back(shift);
    known = hop.neighbor;
  }
  return chain;
}

// log(mean + max) of the intermediate-entity degrees; 0 for one-hop paths.
inline double path_penalty(const PathCandidate& path) {
  const auto& d = path.intermediate_degrees;
  if (d.empty()) return 0.0;
  double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double mx = static_cast<double>(*std::max_element(d.begin(), d.end()));
  return std::log(mean + mx);
}

// Paths from the attacked entity ordered by penalty (ties by entity ids),
// dropping paths that pass through the other entity of the target.
inline std::vector<PathCandidate> ranked_paths(const TripleStore& store, const Triple& target,
                                               Side side, std::size_t k) {
  auto paths = enumerate_paths(store, attacked_entity(target, side), k);
  EntityId other = side == Side::Head ? target.tail : target.head;
  std::erase_if(paths, [&](const PathCandidate& p) {
    auto ents = p.entities();
    return std::find(ents.begin() + 1, ents.end(), other) != ents.end();
  });
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) keyed.emplace_back(path_penalty(paths[i]), i);
  std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return paths[a.second].entities() < paths[b.second].entities();
  });
  std::vector<PathCandidate> out;
  out.reserve(paths.size());
  for (const auto& [pen, i] : keyed) out.push_back(std::move(paths[i]));
  return out;
}

// Indirect attack: perturb proxies K hops away from the attacked entity along
// the P least-diluted paths, scoring psi = eta - lambda * path_penalty, and
// keep the global Top-M.
template <typename Real>
std::vector<IndirectPerturbation> indirect_attack(const TripleStore& store,
                                                  const BasicEmbeddingStore<Real>& emb,
                                                  const Triple& target, const IndirectConfig& cfg,
                                                  Action mode) {
  cfg.validate();
  require(!store.contains(target), ErrorCode::TargetInTrainingSet, to_string(target));
  auto paths = ranked_paths(store, target, cfg.target_side, cfg.k_hops);
  require(!paths.empty(), ErrorCode::NoPaths, "no " + std::to_string(cfg.k_hops) +
                                                   "-hop paths from target " + to_string(target));

  std::vector<ShiftChain> chains;
  for (const auto& p : paths) {
    if (chains.size() == cfg.paths) break;
    try {
      chains.push_back(
          build_shift_chain(emb, target, cfg.target_side, p, cfg.step_eps_h, cfg.promote));
    } catch (const Error& e) {
      // Paths whose shift dies out are skipped; anything else is a real error.
      if (e.code() != ErrorCode::ZeroGradient) throw;
    }
  }
  require(!chains.empty(), ErrorCode::NoPaths,
          "no path propagates a shift to target " + to_string(target));

  const auto seed = target_seed(cfg.rng_seed, target);
  const double lambda_eta = mode == Action::Delete ? cfg.lambda1 : cfg.lambda2;
  std::map<Triple, IndirectPerturbation> best;
  for (const auto& chain : chains) {
    const double penalty = path_penalty(chain.path);
    auto path_triples = chain.path.triples();
    auto exclude = [&](const Triple& t) {
      if (t.head == target.head || t.tail == target.head || t.head == target.tail ||
          t.tail == target.tail)
        return true;
      return std::find(path_triples.begin(), path_triples.end(), t) != path_triples.end();
    };
    CandidateSpace cs{chain.path.proxy(), cfg.target_side, cfg.both_orientations,
                      cfg.add_candidate_sample, seed};
    for (auto& p : rank_candidates(store, emb, cs, chain.shifts.back(), mode, lambda_eta, exclude)) {
      double psi = p.benefit - cfg.lambda * penalty;
      auto it = best.find(p.triple);
      if (it != best.end() && it->second.psi >= psi) continue;
      IndirectPerturbation ip{{mode, p.triple, psi}, chain.path.entities(), cs.entity, psi,
                              p.benefit, penalty};
      best.insert_or_assign(p.triple, std::move(ip));
    }
  }

  std::vector<IndirectPerturbation> out;
  out.reserve(best.size());
  for (auto& [t, ip] : best) out.push_back(std::move(ip));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.psi > b.psi; });
  if (out.size() > cfg.budget) out.resize(cfg.budget);
  return out;
}

inline std::vector<Perturbation> plain(std::span<const IndirectPerturbation> ips) {
  std::vector<Perturbation> out;
  out.reserve(ips.size());
  for (const auto& ip : ips) out.push_back(ip.perturbation);
  return out;
}

}  // namespace kgp
