#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace kgp;
using kgp::support::central_diff;
using kgp::support::transfer_objective;

namespace {

using Emb = BasicEmbeddingStore<double>;

void set(std::span<double> dst, std::initializer_list<double> v) {
  std::copy(v.begin(), v.end(), dst.begin());
}

TripleStore random_graph(std::mt19937_64& rng, std::size_t ne, std::size_t nr, std::size_t n) {
  TripleStore s(ne, nr);
  while (s.size() < n) {
    Triple t{EntityId(rng() % ne), RelationId(rng() % nr), EntityId(rng() % ne)};
    if (t.head != t.tail) s.insert(t);
  }
  return s;
}

// Independent first-order solution: finite-difference gradient of the
// transfer objective at 0, scaled to length eps_h.
std::vector<double> fd_transfer(const Emb& emb, EntityId known, const std::vector<double>& shift,
                                const DirectedHop& hop, double eps_h) {
  auto g = central_diff(
      [&](const std::vector<double>& e) { return transfer_objective(emb, known, shift, hop, e); },
      std::vector<double>(emb.dim(), 0.0));
  double n = support::norm(g);
  for (auto& x : g) x *= eps_h / n;
  return g;
}

PathCandidate path_with_degrees(std::vector<std::size_t> degrees) {
  PathCandidate p;
  p.hops.resize(degrees.size() + 1);
  p.intermediate_degrees = std::move(degrees);
  return p;
}

}  // namespace

TEST(TransferShift, ZeroKnownShiftIsZeroGradient) {
  auto emb = support::random_store(ModelKind::TransE, 2, 1, 3, 1);
  std::vector<double> zero(3, 0.0);
  try {
    transfer_shift(emb, 0, zero, {1, 0, Orientation::NeighborIsTail}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroGradient);
  }
}

TEST(TransferShift, TransEWorkedExample) {
  // known = (0,0), r = 0, nbr = (1,0), known_shift = (3,4)
  Emb emb(ModelKind::TransE, 2, 1, 2);
  set(emb.entity(1), {1, 0});
  std::vector<double> shift{3, 4};
  DirectedHop hop{1, 0, Orientation::NeighborIsTail};
  auto got = transfer_shift(emb, 0, shift, hop, 1.0);
  EXPECT_NEAR(got[0], 0.85065080835204, 1e-12);
  EXPECT_NEAR(got[1], 0.5257311121191336, 1e-12);
  EXPECT_LT(support::rel_error(got, fd_transfer(emb, 0, shift, hop, 1.0)), 1e-4);
}

TEST(TransferShift, MatchesFiniteDifferenceOracle) {
  for (auto kind : {ModelKind::TransE, ModelKind::TransR, ModelKind::Rescal})
    for (std::uint64_t inst = 0; inst < 40; ++inst) {
      auto emb = support::random_store(kind, 2, 1, 5, 700 + inst);
      std::mt19937_64 rng(inst);
      std::normal_distribution<double> n;
      std::vector<double> shift(5);
      for (auto& x : shift) x = n(rng);
      auto orient = inst % 2 ? Orientation::NeighborIsHead : Orientation::NeighborIsTail;
      DirectedHop hop{1, 0, orient};
      const double eps_h = 0.5 + double(inst % 3);
      auto got = transfer_shift(emb, 0, shift, hop, eps_h);
      EXPECT_NEAR(support::norm(got), eps_h, 1e-9);
      EXPECT_LT(support::rel_error(got, fd_transfer(emb, 0, shift, hop, eps_h)), 1e-4)
          << to_string(kind) << " instance " << inst;
    }
}

TEST(PathPenalty, Examples) {
  EXPECT_NEAR(path_penalty(path_with_degrees({2, 4})), std::log(7.0), 1e-15);
  EXPECT_NEAR(path_penalty(path_with_degrees({2, 4})), 1.9459, 1e-4);
  EXPECT_NEAR(path_penalty(path_with_degrees({1})), std::log(2.0), 1e-15);
  EXPECT_EQ(path_penalty(path_with_degrees({})), 0.0);
}

TEST(ShiftChain, OneHopIsSingleTransfer) {
  auto store = support::make_store(3, 1, {{0, 0, 1}});
  auto emb = support::random_store(ModelKind::TransE, 3, 1, 4, 5);
  Triple target{0, 0, 2};
  auto paths = enumerate_paths(store, 0, 1);
  ASSERT_EQ(paths.size(), 1u);
  auto chain = build_shift_chain(emb, target, Side::Head, paths[0], 1.0);
  ASSERT_EQ(chain.shifts.size(), 1u);
  auto direct = shift_vector(emb, target, Side::Head, 1.0);
  EXPECT_EQ(chain.shifts[0], transfer_shift(emb, 0, direct, paths[0].hops[0], 1.0));
}

TEST(ShiftChain, TwoHopsRederived) {
  auto store = support::make_store(4, 2, {{0, 0, 1}, {2, 1, 1}});
  for (auto kind : {ModelKind::TransE, ModelKind::TransR, ModelKind::Rescal}) {
    auto emb = support::random_store(kind, 4, 2, 4, 31);
    Triple target{0, 1, 3};
    auto paths = enumerate_paths(store, 0, 2);
    ASSERT_EQ(paths.size(), 1u);
    auto chain = build_shift_chain(emb, target, Side::Head, paths[0], 0.7);
    ASSERT_EQ(chain.shifts.size(), 2u);
    auto g = grad(emb, target).d_head;
    for (auto& x : g) x *= -0.7;
    auto s1 = fd_transfer(emb, 0, g, {1, 0, Orientation::NeighborIsTail}, 0.7);
    auto s2 = fd_transfer(emb, 1, s1, {2, 1, Orientation::NeighborIsHead}, 0.7);
    EXPECT_LT(support::rel_error(chain.shifts[0], s1), 1e-4) << to_string(kind);
    EXPECT_LT(support::rel_error(chain.shifts[1], s2), 1e-4) << to_string(kind);
    for (const auto& s : chain.shifts) EXPECT_NEAR(support::norm(s), 0.7, 1e-9);
  }
}

TEST(ShiftChain, SharedFirstHopGivesSameFirstShift) {
  auto store = support::make_store(5, 1, {{0, 0, 1}, {1, 0, 2}, {1, 0, 3}});
  auto emb = support::random_store(ModelKind::TransR, 5, 1, 4, 8);
  auto paths = enumerate_paths(store, 0, 2);
  ASSERT_EQ(paths.size(), 2u);
  auto a = build_shift_chain(emb, {0, 0, 4}, Side::Head, paths[0], 1.0);
  auto b = build_shift_chain(emb, {0, 0, 4}, Side::Head, paths[1], 1.0);
  EXPECT_EQ(a.shifts[0], b.shifts[0]);
  EXPECT_NE(a.shifts[1], b.shifts[1]);
}

TEST(ShiftChain, RejectsForeignOrigin) {
  auto store = support::make_store(3, 1, {{1, 0, 2}});
  auto emb = support::random_store(ModelKind::TransE, 3, 1, 2, 1);
  auto p = enumerate_paths(store, 1, 1);
  EXPECT_THROW(build_shift_chain(emb, {0, 0, 2}, Side::Head, p[0], 1.0), Error);
}

TEST(IndirectAttack, TinyChainHandComputation) {
  // 0 -r0-> 1 -r0-> 2 -r1-> 3 ; target (0, r1, 5) with 5 isolated
  auto store = support::make_store(6, 2, {{0, 0, 1}, {1, 0, 2}, {2, 1, 3}});
  auto emb = support::random_store(ModelKind::TransE, 6, 2, 3, 12);
  Triple target{0, 1, 5};
  IndirectConfig cfg;
  cfg.budget = 5;
  cfg.lambda = 0.5;
  auto out = indirect_attack(store, emb, target, cfg, Action::Delete);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].perturbation.triple, (Triple{2, 1, 3}));
  EXPECT_EQ(out[0].proxy, 2u);
  EXPECT_EQ(out[0].path, (std::vector<EntityId>{0, 1, 2}));

  // hand recomputation: eps_0 from the target gradient, pushed twice
  auto g = grad(emb, target).d_head;
  for (auto& x : g) x = -x;
  auto s1 = fd_transfer(emb, 0, g, {1, 0, Orientation::NeighborIsTail}, 1.0);
  auto s2 = fd_transfer(emb, 1, s1, {2, 0, Orientation::NeighborIsTail}, 1.0);
  auto p = support::entity_vec(emb, 2), t = support::entity_vec(emb, 3);
  auto r = std::vector<double>(emb.relation(1).vec.begin(), emb.relation(1).vec.end());
  auto f = [&](const std::vector<double>& h) {
    double s = 0;
    for (int i = 0; i < 3; ++i) s += (h[i] + r[i] - t[i]) * (h[i] + r[i] - t[i]);
    return -std::sqrt(s);
  };
  auto moved = p;
  for (int i = 0; i < 3; ++i) moved[i] += s2[i];
  const double eta = f(p) - f(moved);
  const double deg1 = 2;
  EXPECT_NEAR(out[0].eta, eta, 1e-6);
  EXPECT_NEAR(out[0].penalty, std::log(2 * deg1), 1e-15);
  EXPECT_NEAR(out[0].psi, eta - 0.5 * std::log(2 * deg1), 1e-6);
  EXPECT_EQ(out[0].perturbation.benefit, out[0].psi);
}

TEST(IndirectAttack, LambdaZeroFollowsEta) {
  std::mt19937_64 rng(4);
  auto store = random_graph(rng, 25, 3, 70);
  auto emb = support::random_store(ModelKind::TransE, 25, 3, 4, 4);
  IndirectConfig cfg;
  cfg.lambda = 0;
  cfg.budget = 1000;
  cfg.paths = 1000;
  for (EntityId h = 0; h < 25; ++h) {
    Triple target{h, 0, (h + 11) % 25};
    if (store.contains(target)) continue;
    std::vector<IndirectPerturbation> out;
    try {
      out = indirect_attack(store, emb, target, cfg, Action::Delete);
    } catch (const Error&) {
      continue;
    }
    for (const auto& ip : out) EXPECT_EQ(ip.psi, ip.eta);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_GE(out[i - 1].eta, out[i].eta);
  }
}

TEST(IndirectAttack, Invariants) {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto kind = static_cast<ModelKind>(trial % 3);
    auto store = random_graph(rng, 20, 3, 45);
    auto emb = support::random_store(kind, 20, 3, 4, 900 + trial);
    Triple target{EntityId(rng() % 20), RelationId(rng() % 3), EntityId(rng() % 20)};
    if (store.contains(target) || target.head == target.tail) continue;
    IndirectConfig cfg;
    cfg.budget = 8;
    cfg.add_candidate_sample = 30;
    cfg.target_side = trial % 2 ? Side::Tail : Side::Head;
    for (auto mode : {Action::Add, Action::Delete}) {
      std::vector<IndirectPerturbation> out;
      try {
        out = indirect_attack(store, emb, target, cfg, mode);
      } catch (const Error& e) {
        EXPECT_TRUE(e.code() == ErrorCode::NoPaths) << to_string(e.code());
        continue;
      }
      ++checked;
      EXPECT_LE(out.size(), 8u);
      std::set<Triple> seen;
      for (const auto& ip : out) {
        const auto& t = ip.perturbation.triple;
        EXPECT_TRUE(seen.insert(t).second);
        EXPECT_EQ(store.contains(t), mode == Action::Delete);
        for (EntityId e : {target.head, target.tail}) EXPECT_TRUE(t.head != e && t.tail != e);
        EXPECT_TRUE(t.head == ip.proxy || t.tail == ip.proxy);
        EXPECT_EQ(ip.path.size(), 3u);
        EXPECT_EQ(ip.path.front(), attacked_entity(target, cfg.target_side));
        EXPECT_EQ(ip.path.back(), ip.proxy);
        EXPECT_NEAR(ip.psi, ip.eta - cfg.lambda * ip.penalty, 1e-12);
      }
      for (std::size_t i = 1; i < out.size(); ++i) EXPECT_GE(out[i - 1].psi, out[i].psi);
      EXPECT_EQ(plain(out), plain(indirect_attack(store, emb, target, cfg, mode)));
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(IndirectAttack, PathTriplesNeverDeleted) {
  // every edge here is on some path from 0, so deletions must avoid them
  auto store = support::make_store(5, 1, {{0, 0, 1}, {1, 0, 2}, {2, 0, 3}, {3, 0, 1}});
  auto emb = support::random_store(ModelKind::TransE, 5, 1, 3, 2);
  IndirectConfig cfg;
  cfg.budget = 10;
  auto out = indirect_attack(store, emb, {0, 0, 4}, cfg, Action::Delete);
  for (const auto& ip : out) {
    auto paths = enumerate_paths(store, 0, 2);
    for (const auto& p : paths)
      if (p.entities() == ip.path) {
        for (const auto& t : p.triples()) EXPECT_NE(t, ip.perturbation.triple);
      }
  }
}

TEST(IndirectAttack, Errors) {
  auto store = support::make_store(4, 1, {{0, 0, 1}});
  auto emb = support::random_store(ModelKind::TransE, 4, 1, 3, 1);
  IndirectConfig cfg;
  try {
    indirect_attack(store, emb, {0, 0, 1}, cfg, Action::Delete);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TargetInTrainingSet);
  }
  try {
    indirect_attack(store, emb, {0, 0, 3}, cfg, Action::Delete);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPaths);
  }
}

TEST(RankedPaths, SkipsTargetsOtherEntityAndOrdersByPenalty) {
  // 0-1-2 and 0-3-2 where 3 is busier; 0-4-5 passes through the target tail 4
  auto store = support::make_store(
      7, 1, {{0, 0, 1}, {1, 0, 2}, {0, 0, 3}, {3, 0, 2}, {3, 0, 6}, {0, 0, 4}, {4, 0, 5}});
  auto paths = ranked_paths(store, {0, 0, 4}, Side::Head, 2);
  ASSERT_EQ(paths.size(), 3u);
  EXPECT_EQ(paths[0].entities(), (std::vector<EntityId>{0, 1, 2}));
  for (const auto& p : paths) {
    auto ents = p.entities();
    EXPECT_EQ(std::find(ents.begin(), ents.end(), 4u), ents.end());
  }
  for (std::size_t i = 1; i < paths.size(); ++i)
    EXPECT_LE(path_penalty(paths[i - 1]), path_penalty(paths[i]));
}

TEST(RankedPaths, PenaltyStableUnderUnrelatedInsertions) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto store = random_graph(rng, 16, 2, 30);
    auto before = enumerate_paths(store, 0, 2);
    if (before.empty()) continue;
    const auto& p = before[rng() % before.size()];
    auto ents = p.entities();
    auto on_path = [&](EntityId e) { return std::find(ents.begin(), ents.end(), e) != ents.end(); };
    std::vector<Triple> extra;
    for (int k = 0; k < 10; ++k) {
      Triple t{EntityId(rng() % 16), RelationId(rng() % 2), EntityId(rng() % 16)};
      if (!on_path(t.head) && !on_path(t.tail) && !store.contains(t)) extra.push_back(t);
    }
    auto grown = store.with_edits(extra, {});
    auto after = enumerate_paths(grown, 0, 2);
    auto it = std::find_if(after.begin(), after.end(),
                           [&](const PathCandidate& q) { return q.hops == p.hops; });
    ASSERT_NE(it, after.end());
    EXPECT_EQ(path_penalty(*it), path_penalty(p));
  }
}

TEST(TransferShift, FirstOrderAgreesWithProjectedAscent) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double worst = 1;
  for (int inst = 0; inst < 50; ++inst) {
    Emb emb(ModelKind::TransE, 2, 1, 4);
    for (auto& x : emb.entity_data()) x = u(rng);
    for (auto& x : emb.relation_vector_data()) x = u(rng);
    std::vector<double> shift(4);
    for (auto& x : shift) x = u(rng);
    const double eps_h = 0.1;
    double n = support::norm(shift);
    for (auto& x : shift) x *= eps_h / n;
    DirectedHop hop{1, 0, inst % 2 ? Orientation::NeighborIsHead : Orientation::NeighborIsTail};
    auto closed = transfer_shift(emb, 0, shift, hop, eps_h);
    auto pga = support::pga_transfer(emb, 0, shift, hop, eps_h);
    worst = std::min(worst, support::cosine(closed, pga));
  }
  EXPECT_GE(worst, 0.95);
}
