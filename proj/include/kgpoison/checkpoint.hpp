#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgpoison/error.hpp"
#include "kgpoison/model.hpp"
#include "kgpoison/triple_store.hpp"

namespace kgp {

// Binary layout (all little-endian):
//   "KGEB" | u32 version | u32 model tag | u32 entities | u32 relations | u32 dim
//   | f32 entity matrix (row-major)
//   | f32 relation vectors, id order (TransE, TransR)
//   | f32 relation matrices, id order, row-major (TransR, RESCAL)
inline constexpr std::array<char, 4> kCheckpointMagic{'K', 'G', 'E', 'B'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f32(std::vector<unsigned char>& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline std::uint32_t get_u32(const std::vector<unsigned char>& in, std::size_t& pos) {
  require(pos + 4 <= in.size(), ErrorCode::BadCheckpoint, "truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[pos + i]} << (8 * i);
  pos += 4;
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const EmbeddingStore& emb) {
  std::vector<unsigned char> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(emb.kind()));
  detail::put_u32(out, static_cast<std::uint32_t>(emb.num_entities()));
  detail::put_u32(out, static_cast<std::uint32_t>(emb.num_relations()));
  detail::put_u32(out, static_cast<std::uint32_t>(emb.dim()));
  for (float f : emb.entity_data()) detail::put_f32(out, f);
  for (float f : emb.relation_vector_data()) detail::put_f32(out, f);
  for (float f : emb.relation_matrix_data()) detail::put_f32(out, f);
  return out;
}

inline EmbeddingStore decode_checkpoint(const std::vector<unsigned char>& in) {
  require(in.size() >= 4 && std::memcmp(in.data(), kCheckpointMagic.data(), 4) == 0,
          ErrorCode::BadCheckpoint, "bad magic");
  std::size_t pos = 4;
  auto version = detail::get_u32(in, pos);
  require(version == kCheckpointVersion, ErrorCode::BadCheckpoint,
          "unsupported version " + std::to_string(version));
  auto tag = detail::get_u32(in, pos);
  require(tag <= static_cast<std::uint32_t>(ModelKind::Rescal), ErrorCode::BadCheckpoint,
          "unknown model tag");
  auto ne = detail::get_u32(in, pos);
  auto nr = detail::get_u32(in, pos);
  auto dim = detail::get_u32(in, pos);
  EmbeddingStore emb(static_cast<ModelKind>(tag), ne, nr, dim);
  auto fill = [&](std::span<float> dst) {
    for (auto& f : dst) f = std::bit_cast<float>(detail::get_u32(in, pos));
  };
  fill(emb.entity_data());
  fill(emb.relation_vector_data());
  fill(emb.relation_matrix_data());
  require(pos == in.size(), ErrorCode::BadCheckpoint, "trailing bytes in checkpoint");
  return emb;
}

inline void save_checkpoint(const std::filesystem::path& path, const EmbeddingStore& emb) {
  auto bytes = encode_checkpoint(emb);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "write failed " + path.string());
}

inline EmbeddingStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

// FNV-1a over the stored (h, r, t) ids in store order.
inline std::uint64_t dataset_hash(const TripleStore& store) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& t : store.triples()) {
    mix(t.head);
    mix(t.relation);
    mix(t.tail);
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

// JSON sidecar stored next to a checkpoint as <checkpoint>.json.
inline void save_checkpoint_sidecar(const std::filesystem::path& checkpoint, ModelKind kind,
                                    const TripleStore& train, std::uint64_t seed,
                                    const nlohmann::ordered_json& train_config) {
  nlohmann::ordered_json j;
  j["model"] = std::string(to_string(kind));
  j["dataset_hash"] = hex64(dataset_hash(train));
  j["num_train_triples"] = train.size();
  j["seed"] = seed;
  j["train_config"] = train_config;
  auto path = checkpoint;
  path += ".json";
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace kgp
