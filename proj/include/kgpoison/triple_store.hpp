#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgpoison/error.hpp"
#include "kgpoison/vocabulary.hpp"

namespace kgp {

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
  friend bool operator==(const Triple&, const Triple&) = default;
};

inline std::string to_string(const Triple& t) {
  return "(" + std::to_string(t.head) + "," + std::to_string(t.relation) + "," +
         std::to_string(t.tail) + ")";
}

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t x = (std::uint64_t{t.head} << 32) ^ t.tail;
    x ^= std::uint64_t{t.relation} * 0x9e3779b97f4a7c15ULL;
    x ^= x >> 29;
    x *= 0xbf58476d1ce4e5b9ULL;
    return static_cast<std::size_t>(x ^ (x >> 32));
  }
};

// Which entity of a targeted fact an attack moves (and which ranks to pool).
enum class Side : std::uint8_t { Head, Tail };

enum class Orientation : std::uint8_t { NeighborIsHead, NeighborIsTail };

// One incidence of a center entity, seen from the center.
struct DirectedHop {
  EntityId neighbor = 0;
  RelationId relation = 0;
  Orientation orientation = Orientation::NeighborIsTail;

  Triple triple_from(EntityId center) const {
    return orientation == Orientation::NeighborIsTail ? Triple{center, relation, neighbor}
                                                      : Triple{neighbor, relation, center};
  }

  friend auto operator<=>(const DirectedHop&, const DirectedHop&) = default;
  friend bool operator==(const DirectedHop&, const DirectedHop&) = default;
};

// Deduplicated triple set with head/tail incidence indices. Treated as
// immutable once built; poisoning goes through with_edits().
class TripleStore {
 public:
  TripleStore() = default;
  TripleStore(std::size_t num_entities, std::size_t num_relations)
      : num_entities_(num_entities),
        num_relations_(num_relations),
        by_head_(num_entities),
        by_tail_(num_entities) {}

  // Returns false when the triple is already present.
  bool insert(const Triple& t) {
    if (t.head >= num_entities_ || t.tail >= num_entities_ || t.relation >= num_relations_)
      throw Error(ErrorCode::UnknownId, "triple " + to_string(t) + " outside vocabulary");
    if (!members_.insert(t).second) return false;
    auto pos = static_cast<std::uint32_t>(triples_.size());
    triples_.push_back(t);
    by_head_[t.head].push_back(pos);
    by_tail_[t.tail].push_back(pos);
    return true;
  }

  bool contains(const Triple& t) const { return members_.contains(t); }

  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }

  std::span<const Triple> triples() const { return triples_; }
  const Triple& operator[](std::size_t pos) const { return triples_[pos]; }

  std::span<const std::uint32_t> positions_as_head(EntityId e) const { return by_head_.at(e); }
  std::span<const std::uint32_t> positions_as_tail(EntityId e) const { return by_tail_.at(e); }

  std::size_t degree(EntityId e) const { return by_head_.at(e).size() + by_tail_.at(e).size(); }

  // One hop per stored incidence of e, ordered by triple position. A self-loop
  // contributes two hops (once as head, once as tail).
  std::vector<DirectedHop> neighbors(EntityId e) const {
    const auto& hs = by_head_.at(e);
    const auto& ts = by_tail_.at(e);
    std::vector<DirectedHop> out;
    out.reserve(hs.size() + ts.size());
    std::size_t i = 0, j = 0;
    while (i < hs.size() || j < ts.size()) {
      bool take_head = j == ts.size() || (i < hs.size() && hs[i] <= ts[j]);
      if (take_head) {
        const auto& t = triples_[hs[i++]];
        out.push_back({t.tail, t.relation, Orientation::NeighborIsTail});
      } else {
        const auto& t = triples_[ts[j++]];
        out.push_back({t.head, t.relation, Orientation::NeighborIsHead});
      }
    }
    return out;
  }

  // Copy of this store with `removed` dropped and `added` appended, in order.
  TripleStore with_edits(std::span<const Triple> added, std::span<const Triple> removed) const {
    std::unordered_set<Triple, TripleHash> drop(removed.begin(), removed.end());
    TripleStore out(num_entities_, num_relations_);
    for (const auto& t : triples_)
      if (!drop.contains(t)) out.insert(t);
    for (const auto& t : added) out.insert(t);
    return out;
  }

  static TripleStore from(std::size_t num_entities, std::size_t num_relations,
                          std::span<const Triple> triples) {
    TripleStore s(num_entities, num_relations);
    for (const auto& t : triples) s.insert(t);
    return s;
  }

 private:
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::vector<Triple> triples_;
  std::vector<std::vector<std::uint32_t>> by_head_;
  std::vector<std::vector<std::uint32_t>> by_tail_;
  std::unordered_set<Triple, TripleHash> members_;
};

}  // namespace kgp
