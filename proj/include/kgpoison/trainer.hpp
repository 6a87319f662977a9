#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <numeric>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "kgpoison/error.hpp"
#include "kgpoison/model.hpp"
#include "kgpoison/rng.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

struct TrainConfig {
  std::size_t dim = 50;
  std::size_t epochs = 1000;
  std::size_t batch_size = 1024;
  double learning_rate = 0.01;
  double margin = 1.0;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 42;
  bool normalize_entities = true;
  // When false, every epoch replays the same shuffle and negative draws.
  bool resample_negatives = true;
  // Workers per mini-batch. Results depend on the worker count (summation
  // grouping) but are reproducible for a fixed count.
  std::size_t threads = 1;
  bool log_progress = false;

  void validate() const {
    require(dim >= 1, ErrorCode::InvalidConfig, "dim must be >= 1");
    require(margin > 0, ErrorCode::InvalidConfig, "margin must be > 0");
    require(learning_rate > 0, ErrorCode::InvalidConfig, "learning_rate must be > 0");
    require(batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
    require(negatives_per_positive >= 1, ErrorCode::InvalidConfig,
            "negatives_per_positive must be >= 1");
    require(threads >= 1, ErrorCode::InvalidConfig, "threads must be >= 1");
  }

  nlohmann::ordered_json to_json() const {
    return {{"dim", dim},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"learning_rate", learning_rate},
            {"margin", margin},
            {"negatives_per_positive", negatives_per_positive},
            {"seed", seed},
            {"normalize_entities", normalize_entities},
            {"resample_negatives", resample_negatives},
            {"threads", threads}};
  }
};

// Uniform [-6/sqrt(d), 6/sqrt(d)] entity and relation vectors; TransR
// projections start at identity; RESCAL matrices uniform in [-1/d, 1/d].
inline EmbeddingStore init_embeddings(ModelKind kind, std::size_t num_entities,
                                      std::size_t num_relations, std::size_t dim,
                                      std::uint64_t seed) {
  require(num_entities >= 1 && num_relations >= 1 && dim >= 1, ErrorCode::InvalidConfig,
          "embedding counts must be >= 1");
  EmbeddingStore emb(kind, num_entities, num_relations, dim);
  Rng rng(derive_seed(seed, {0x1417}));
  const float bound = 6.0f / std::sqrt(static_cast<float>(dim));
  std::uniform_real_distribution<float> u(-bound, bound);
  for (auto& x : emb.entity_data()) x = u(rng);
  for (auto& x : emb.relation_vector_data()) x = u(rng);
  if (kind == ModelKind::TransR) {
    for (RelationId r = 0; r < num_relations; ++r) {
      auto m = emb.relation_matrix(r);
      for (std::size_t i = 0; i < dim; ++i) m[i * dim + i] = 1.0f;
    }
  } else if (kind == ModelKind::Rescal) {
    const float small = 1.0f / static_cast<float>(dim);
    std::uniform_real_distribution<float> us(-small, small);
    for (auto& x : emb.relation_matrix_data()) x = us(rng);
  }
  return emb;
}

namespace detail {

// Dense gradient accumulator with touched-row tracking, shaped like a store.
class GradBuffer {
 public:
  explicit GradBuffer(const EmbeddingStore& like)
      : dim_(like.dim()),
        ent_(like.entity_data().size()),
        vec_(like.relation_vector_data().size()),
        mat_(like.relation_matrix_data().size()),
        ent_seen_(like.num_entities(), 0),
        rel_seen_(like.num_relations(), 0) {}

  std::span<float> entity(EntityId e) {
    if (!ent_seen_[e]) {
      ent_seen_[e] = 1;
      ents_.push_back(e);
    }
    return std::span<float>(ent_).subspan(e * dim_, dim_);
  }

  std::pair<std::span<float>, std::span<float>> relation(RelationId r) {
    if (!rel_seen_[r]) {
      rel_seen_[r] = 1;
      rels_.push_back(r);
    }
    std::span<float> v, m;
    if (!vec_.empty()) v = std::span<float>(vec_).subspan(r * dim_, dim_);
    if (!mat_.empty()) m = std::span<float>(mat_).subspan(r * dim_ * dim_, dim_ * dim_);
    return {v, m};
  }

  // Adds the buffer into emb, records touched entities, and clears itself.
  void flush_into(EmbeddingStore& emb, std::vector<EntityId>& touched,
                  std::vector<std::uint8_t>& touched_flag) {
    for (auto e : ents_) {
      auto src = std::span<float>(ent_).subspan(e * dim_, dim_);
      auto dst = emb.entity(e);
      for (std::size_t i = 0; i < dim_; ++i) {
        dst[i] += src[i];
        src[i] = 0;
      }
      ent_seen_[e] = 0;
      if (!touched_flag[e]) {
        touched_flag[e] = 1;
        touched.push_back(e);
      }
    }
    for (auto r : rels_) {
      auto [v, m] = relation(r);
      auto dv = emb.relation_vector(r);
      auto dm = emb.relation_matrix(r);
      for (std::size_t i = 0; i < v.size(); ++i) {
        dv[i] += v[i];
        v[i] = 0;
      }
      for (std::size_t i = 0; i < m.size(); ++i) {
        dm[i] += m[i];
        m[i] = 0;
      }
      rel_seen_[r] = 0;
    }
    ents_.clear();
    rels_.clear();
  }

 private:
  std::size_t dim_;
  std::vector<float> ent_, vec_, mat_;
  std::vector<std::uint8_t> ent_seen_, rel_seen_;
  std::vector<EntityId> ents_;
  std::vector<RelationId> rels_;
};

inline std::uint64_t fact_key(const TripleStore& store, const Triple& t) {
  return (std::uint64_t{t.head} * store.num_relations() + t.relation) * store.num_entities() + t.tail;
}

struct TrainingPair {
  Triple positive;
  Triple negative;
};

template <typename Gen>
Triple corrupt(const TripleStore& store, const Triple& pos, Gen& rng) {
  const auto n = store.num_entities();
  Triple neg = pos;
  for (int attempt = 0; attempt < 10; ++attempt) {
    neg = pos;
    bool head = uniform_below(rng, 2) == 0;
    auto e = static_cast<EntityId>(uniform_below(rng, n));
    (head ? neg.head : neg.tail) = e;
    if (!store.contains(neg)) break;
  }
  return neg;
}

// TransE residual h + r - t into u; returns its L2 norm.
inline double transe_residual(const EmbeddingStore& emb, const Triple& tr, std::vector<double>& u) {
  const auto h = emb.entity(tr.head);
  const auto t = emb.entity(tr.tail);
  const auto r = emb.relation(tr.relation).vec;
  const std::size_t d = h.size();
  u.resize(d);
  double s = 0;
  for (std::size_t i = 0; i < d; ++i) {
    u[i] = double(h[i]) + double(r[i]) - double(t[i]);
    s += u[i] * u[i];
  }
  return std::sqrt(s);
}

// Same step as the generic path, reusing each residual for score and gradient.
inline double accumulate_pairs_transe(const EmbeddingStore& emb,
                                      std::span<const TrainingPair> pairs, double margin,
                                      double lr, GradBuffer& buf) {
  thread_local std::vector<double> up, un;
  double total = 0;
  for (const auto& p : pairs) {
    double np = transe_residual(emb, p.positive, up);
    double nn = transe_residual(emb, p.negative, un);
    double loss = margin + np - nn;
    if (loss <= 0) continue;
    total += loss;
    for (auto [tr, u, n, coeff] : {std::tuple{p.positive, &up, np, lr},
                                   std::tuple{p.negative, &un, nn, -lr}}) {
      if (n == 0) continue;
      const double c = coeff / n;
      auto dh = buf.entity(tr.head);
      auto dt = buf.entity(tr.tail);
      auto dv = buf.relation(tr.relation).first;
      for (std::size_t i = 0; i < u->size(); ++i) {
        const float g = static_cast<float>(c * (*u)[i]);
        dh[i] -= g;
        dv[i] -= g;
        dt[i] += g;
      }
    }
  }
  return total;
}

// Accumulates the SGD step for the margin loss of each pair; returns the
// summed loss.
inline double accumulate_pairs(const EmbeddingStore& emb, std::span<const TrainingPair> pairs,
                               double margin, double lr, GradBuffer& buf) {
  const auto kind = emb.kind();
  if (kind == ModelKind::TransE) return accumulate_pairs_transe(emb, pairs, margin, lr, buf);
  double total = 0;
  for (const auto& p : pairs) {
    double fp = score(emb, p.positive);
    double fn = score(emb, p.negative);
    double loss = margin - fp + fn;
    if (loss <= 0) continue;
    total += loss;
    for (auto [tr, coeff] : {std::pair{p.positive, lr}, std::pair{p.negative, -lr}}) {
      auto [dv, dm] = buf.relation(tr.relation);
      auto dh = buf.entity(tr.head);
      auto dt = buf.entity(tr.tail);
      accumulate_score_grad<float>(kind, emb.entity(tr.head), emb.relation(tr.relation),
                                   emb.entity(tr.tail), coeff, dh, dt, dv, dm);
    }
  }
  return total;
}

inline void clamp_norm(std::span<float> v) {
  double s = 0;
  for (float x : v) s += double(x) * x;
  if (s <= 1.0) return;
  double inv = 1.0 / std::sqrt(s);
  for (auto& x : v) x = static_cast<float>(x * inv);
}

}  // namespace detail

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Continues SGD on `emb` in place for cfg.epochs epochs.
inline void train_in_place(EmbeddingStore& emb, const TripleStore& store, const TrainConfig& cfg,
                           const EpochCallback& on_epoch = {}) {
  cfg.validate();
  require(!store.empty(), ErrorCode::EmptyStore, "cannot train on an empty store");
  require(emb.num_entities() == store.num_entities() &&
              emb.num_relations() == store.num_relations(),
          ErrorCode::DimensionMismatch, "embedding store does not match triple store");

  std::vector<detail::GradBuffer> buffers;
  for (std::size_t w = 0; w < cfg.threads; ++w) buffers.emplace_back(emb);
  std::vector<double> worker_loss(cfg.threads);
  std::vector<EntityId> touched;
  std::vector<std::uint8_t> touched_flag(emb.num_entities(), 0);
  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(store.size());
  std::vector<detail::TrainingPair> pairs;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Visit order and negatives are keyed by the fact itself, so adding or
    // removing one fact leaves the draws of all other facts unchanged.
    const auto epoch_key = derive_seed(cfg.seed, {0xe90c, cfg.resample_negatives ? epoch : 0});
    for (std::uint32_t i = 0; i < store.size(); ++i)
      keyed[i] = {mix64(epoch_key ^ detail::fact_key(store, store[i])), i};
    std::sort(keyed.begin(), keyed.end());
    double epoch_loss = 0;
    std::size_t epoch_pairs = 0;

    for (std::size_t start = 0; start < keyed.size(); start += cfg.batch_size) {
      std::size_t end = std::min(keyed.size(), start + cfg.batch_size);
      pairs.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& pos = store[keyed[i].second];
        SplitMix64 rng(keyed[i].first);
        for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k)
          pairs.push_back({pos, detail::corrupt(store, pos, rng)});
      }
      std::span<const detail::TrainingPair> all(pairs);
      if (cfg.threads == 1) {
        worker_loss[0] = detail::accumulate_pairs(emb, all, cfg.margin, cfg.learning_rate, buffers[0]);
      } else {
        std::size_t chunk = (all.size() + cfg.threads - 1) / cfg.threads;
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < cfg.threads; ++w) {
          std::size_t lo = std::min(all.size(), w * chunk);
          std::size_t hi = std::min(all.size(), lo + chunk);
          workers.emplace_back([&, w, lo, hi] {
            worker_loss[w] = detail::accumulate_pairs(emb, all.subspan(lo, hi - lo), cfg.margin,
                                                      cfg.learning_rate, buffers[w]);
          });
        }
      }
      for (std::size_t w = 0; w < cfg.threads; ++w) {
        epoch_loss += worker_loss[w];
        buffers[w].flush_into(emb, touched, touched_flag);
      }
      if (cfg.normalize_entities)
        for (auto e : touched) detail::clamp_norm(emb.entity(e));
      for (auto e : touched) touched_flag[e] = 0;
      touched.clear();
      epoch_pairs += pairs.size();
    }
    if (cfg.normalize_entities)
      for (EntityId e = 0; e < emb.num_entities(); ++e) detail::clamp_norm(emb.entity(e));
    double mean = epoch_loss / static_cast<double>(epoch_pairs);
    if (cfg.log_progress) std::cerr << epoch << ", " << mean << '\n';
    if (on_epoch) on_epoch(epoch, mean);
  }
}

// Margin-ranking SGD from a fresh seeded initialization.
inline EmbeddingStore train(const TripleStore& store, ModelKind kind, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {}) {
  cfg.validate();
  require(!store.empty(), ErrorCode::EmptyStore, "cannot train on an empty store");
  auto emb = init_embeddings(kind, store.num_entities(), store.num_relations(), cfg.dim, cfg.seed);
  train_in_place(emb, store, cfg, on_epoch);
  return emb;
}

}  // namespace kgp
