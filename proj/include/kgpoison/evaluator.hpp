#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kgpoison/error.hpp"
#include "kgpoison/model.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

struct RankResult {
  Triple target;
  std::size_t head_rank = 1;
  std::size_t tail_rank = 1;
};

struct EvalReport {
  std::vector<RankResult> per_target;
  double mrr = 0;
  double hits_at_10 = 0;
};

// Raw link-prediction ranks: every entity replaces the head (tail); rank is
// 1 + the number of replacements scoring strictly higher than the true fact.
// Corruptions that are themselves known facts are not filtered.
template <typename Real>
RankResult rank_target(const BasicEmbeddingStore<Real>& emb, const Triple& target) {
  require(target.head < emb.num_entities() && target.tail < emb.num_entities() &&
              target.relation < emb.num_relations(),
          ErrorCode::UnknownId, "target " + to_string(target));
  const auto kind = emb.kind();
  const auto rel = emb.relation(target.relation);
  const auto h = emb.entity(target.head);
  const auto t = emb.entity(target.tail);
  const double truth = score(kind, h, rel, t);
  RankResult res{target, 1, 1};
  for (EntityId e = 0; e < emb.num_entities(); ++e) {
    auto v = emb.entity(e);
    if (e != target.head && score(kind, v, rel, t) > truth) ++res.head_rank;
    if (e != target.tail && score(kind, h, rel, v) > truth) ++res.tail_rank;
  }
  return res;
}

// Pools both ranks of every target (or only one side when `side_only` is set).
inline EvalReport aggregate(std::span<const RankResult> results,
                            std::optional<Side> side_only = std::nullopt) {
  require(!results.empty(), ErrorCode::EmptyResults, "no rank results to aggregate");
  EvalReport rep;
  rep.per_target.assign(results.begin(), results.end());
  double rr = 0;
  std::size_t hits = 0, n = 0;
  auto add = [&](std::size_t rank) {
    rr += 1.0 / static_cast<double>(rank);
    hits += rank <= 10 ? 1 : 0;
    ++n;
  };
  for (const auto& r : results) {
    if (!side_only || *side_only == Side::Head) add(r.head_rank);
    if (!side_only || *side_only == Side::Tail) add(r.tail_rank);
  }
  rep.mrr = rr / static_cast<double>(n);
  rep.hits_at_10 = static_cast<double>(hits) / static_cast<double>(n);
  return rep;
}

template <typename Real>
EvalReport evaluate(const BasicEmbeddingStore<Real>& emb, std::span<const Triple> targets,
                    std::optional<Side> side_only = std::nullopt) {
  std::vector<RankResult> ranks;
  ranks.reserve(targets.size());
  for (const auto& t : targets) ranks.push_back(rank_target(emb, t));
  return aggregate(ranks, side_only);
}

}  // namespace kgp
