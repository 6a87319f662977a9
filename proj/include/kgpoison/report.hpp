#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgpoison/attack_direct.hpp"
#include "kgpoison/attack_indirect.hpp"
#include "kgpoison/evaluator.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

using Json = nlohmann::ordered_json;

inline Json triple_json(const Triple& t) { return Json::array({t.head, t.relation, t.tail}); }

inline Triple triple_from_json(const Json& j) {
  return {j.at(0).get<EntityId>(), j.at(1).get<RelationId>(), j.at(2).get<EntityId>()};
}

inline Json perturbation_json(const Perturbation& p) {
  return {{"action", std::string(to_string(p.action))},
          {"head", p.triple.head},
          {"relation", p.triple.relation},
          {"tail", p.triple.tail},
          {"benefit", p.benefit}};
}

inline Json perturbation_json(const IndirectPerturbation& ip) {
  Json j = perturbation_json(ip.perturbation);
  j["path"] = ip.path;
  j["proxy"] = ip.proxy;
  j["psi"] = ip.psi;
  j["eta"] = ip.eta;
  j["penalty"] = ip.penalty;
  return j;
}

inline Perturbation perturbation_from_json(const Json& j) {
  auto action = j.at("action").get<std::string>();
  require(action == "add" || action == "delete", ErrorCode::InvalidConfig,
          "bad perturbation action '" + action + "'");
  return {action == "add" ? Action::Add : Action::Delete,
          {j.at("head").get<EntityId>(), j.at("relation").get<RelationId>(),
           j.at("tail").get<EntityId>()},
          j.value("benefit", 0.0)};
}

inline Json eval_json(const EvalReport& rep) {
  Json ranks = Json::array();
  for (const auto& r : rep.per_target)
    ranks.push_back({{"target", triple_json(r.target)},
                     {"head_rank", r.head_rank},
                     {"tail_rank", r.tail_rank}});
  return {{"mrr", rep.mrr}, {"hits_at_10", rep.hits_at_10}, {"ranks", ranks}};
}

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace kgp
