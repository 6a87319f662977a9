#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "kgpoison/error.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

// A simple K-hop path from the attacked entity to a proxy entity.
struct PathCandidate {
  EntityId origin = 0;
  std::vector<DirectedHop> hops;
  // degree() of the intermediate entities hops[0..K-2].neighbor
  std::vector<std::size_t> intermediate_degrees;

  std::size_t length() const { return hops.size(); }
  EntityId proxy() const { return hops.empty() ? origin : hops.back().neighbor; }

  // origin, e_1, ..., e_K
  std::vector<EntityId> entities() const {
    std::vector<EntityId> out{origin};
    for (const auto& h : hops) out.push_back(h.neighbor);
    return out;
  }

  // The K member triples traversed by the path, in hop order.
  std::vector<Triple> triples() const {
    std::vector<Triple> out;
    EntityId center = origin;
    for (const auto& h : hops) {
      out.push_back(h.triple_from(center));
      center = h.neighbor;
    }
    return out;
  }

  friend bool operator==(const PathCandidate&, const PathCandidate&) = default;
};

namespace detail {

inline void extend_paths(const TripleStore& store, std::size_t k, PathCandidate& cur,
                         std::vector<EntityId>& on_path, std::vector<PathCandidate>& out) {
  if (cur.hops.size() == k) {
    out.push_back(cur);
    return;
  }
  EntityId center = on_path.back();
  for (const auto& hop : store.neighbors(center)) {
    if (std::find(on_path.begin(), on_path.end(), hop.neighbor) != on_path.end()) continue;
    cur.hops.push_back(hop);
    on_path.push_back(hop.neighbor);
    extend_paths(store, k, cur, on_path, out);
    on_path.pop_back();
    cur.hops.pop_back();
  }
}

}  // namespace detail

// All simple paths of exactly k hops starting at origin. Self-loops never
// appear (their neighbor is already on the path). Output is sorted by hop
// sequence, so it does not depend on the order triples were inserted.
inline std::vector<PathCandidate> enumerate_paths(const TripleStore& store, EntityId origin,
                                                  std::size_t k) {
  require(k >= 1, ErrorCode::InvalidConfig, "path length must be >= 1");
  require(origin < store.num_entities(), ErrorCode::UnknownId,
          "origin " + std::to_string(origin));
  std::vector<PathCandidate> out;
  PathCandidate cur;
  cur.origin = origin;
  std::vector<EntityId> on_path{origin};
  detail::extend_paths(store, k, cur, on_path, out);
  for (auto& p : out) {
    p.intermediate_degrees.clear();
    for (std::size_t i = 0; i + 1 < p.hops.size(); ++i)
      p.intermediate_degrees.push_back(store.degree(p.hops[i].neighbor));
  }
  std::sort(out.begin(), out.end(),
            [](const PathCandidate& a, const PathCandidate& b) { return a.hops < b.hops; });
  return out;
}

}  // namespace kgp
