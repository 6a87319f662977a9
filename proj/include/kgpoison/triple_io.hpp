#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgpoison/error.hpp"
#include "kgpoison/triple_store.hpp"
#include "kgpoison/vocabulary.hpp"

namespace kgp {

// NameTSV: "head<TAB>relation<TAB>tail" per line.
// IdTSV:   first line N, then N lines "h t r" (entities first, relation last).
//          Optional sibling entity2id.txt / relation2id.txt ("count" line, then
//          "name<TAB>id" lines) declare names and id bounds.
enum class TripleFormat { NameTSV, IdTSV };

struct LoadResult {
  Vocabulary vocab;
  TripleStore store;
  std::size_t duplicates = 0;
  std::size_t skipped_unknown = 0;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string_view chomp(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

inline Error line_error(ErrorCode code, const std::filesystem::path& path, std::size_t line_no,
                        std::string_view what = {}) {
  std::string msg = path.string() + ":" + std::to_string(line_no);
  if (!what.empty()) msg.append(" ").append(what);
  return Error(code, msg);
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

struct RawIdTriple {
  std::uint64_t h, r, t;
  std::size_t line_no;
};

inline std::vector<RawIdTriple> read_id_tsv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::uint64_t> declared;
  while (!declared && std::getline(in, line)) {
    ++line_no;
    auto s = chomp(line);
    if (split_ws(s).empty()) continue;
    auto fields = split_ws(s);
    declared = fields.size() == 1 ? parse_uint(fields[0]) : std::nullopt;
    if (!declared) throw line_error(ErrorCode::MalformedLine, path, line_no, "expected triple count");
  }
  std::vector<RawIdTriple> out;
  if (!declared) return out;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(chomp(line));
    if (fields.empty()) continue;
    std::optional<std::uint64_t> h, t, r;
    if (fields.size() == 3) {
      h = parse_uint(fields[0]);
      t = parse_uint(fields[1]);
      r = parse_uint(fields[2]);
    }
    if (fields.size() != 3 || !h || !t || !r || out.size() >= *declared)
      throw line_error(ErrorCode::MalformedLine, path, line_no);
    out.push_back({*h, *r, *t, line_no});
  }
  if (out.size() != *declared)
    throw Error(ErrorCode::MalformedLine, path.string() + ": declared " + std::to_string(*declared) +
                                             " triples, found " + std::to_string(out.size()));
  return out;
}

// Reads an OpenKE-style "count / name<TAB>id" table, or nullopt when absent.
inline std::optional<std::vector<std::string>> read_id_table(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw line_error(ErrorCode::MalformedLine, path, 1, "missing count");
  auto count = parse_uint(chomp(line));
  if (!count) throw line_error(ErrorCode::MalformedLine, path, 1, "bad count");
  std::vector<std::string> names(*count);
  std::vector<bool> seen(*count, false);
  while (std::getline(in, line)) {
    ++line_no;
    auto s = chomp(line);
    if (s.empty()) continue;
    auto fields = split_ws(s);
    auto id = fields.size() == 2 ? parse_uint(fields[1]) : std::nullopt;
    if (!id) throw line_error(ErrorCode::MalformedLine, path, line_no);
    if (*id >= *count)
      throw line_error(ErrorCode::UnknownId, path, line_no, "id exceeds declared count");
    names[*id] = std::string(fields[0]);
    seen[*id] = true;
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    if (!seen[i]) names[i] = std::to_string(i);
  return names;
}

}  // namespace detail

// Loads a fresh training set; the vocabulary is built from the file.
inline LoadResult load_triples(const std::filesystem::path& path, TripleFormat format) {
  LoadResult res;
  if (format == TripleFormat::NameTSV) {
    auto in = detail::open_in(path);
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto s = detail::chomp(line);
      if (s.empty()) continue;
      auto f = detail::split(s, '\t');
      if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty())
        throw detail::line_error(ErrorCode::MalformedLine, path, line_no);
      triples.push_back({res.vocab.entities.intern(f[0]), res.vocab.relations.intern(f[1]),
                         res.vocab.entities.intern(f[2])});
    }
    res.store = TripleStore(res.vocab.num_entities(), res.vocab.num_relations());
    for (const auto& t : triples)
      if (!res.store.insert(t)) ++res.duplicates;
    return res;
  }

  auto raw = detail::read_id_tsv(path);
  auto dir = path.parent_path();
  auto ent_names = detail::read_id_table(dir / "entity2id.txt");
  auto rel_names = detail::read_id_table(dir / "relation2id.txt");
  std::uint64_t max_e = 0, max_r = 0;
  for (const auto& t : raw) {
    max_e = std::max({max_e, t.h + 1, t.t + 1});
    max_r = std::max(max_r, t.r + 1);
  }
  std::size_t ne = ent_names ? ent_names->size() : max_e;
  std::size_t nr = rel_names ? rel_names->size() : max_r;
  for (const auto& t : raw)
    if (t.h >= ne || t.t >= ne || t.r >= nr)
      throw detail::line_error(ErrorCode::UnknownId, path, t.line_no, "id exceeds declared count");
  for (std::size_t i = 0; i < ne; ++i)
    res.vocab.entities.intern(ent_names ? (*ent_names)[i] : std::to_string(i));
  for (std::size_t i = 0; i < nr; ++i)
    res.vocab.relations.intern(rel_names ? (*rel_names)[i] : std::to_string(i));
  res.store = TripleStore(ne, nr);
  for (const auto& t : raw) {
    Triple tr{static_cast<EntityId>(t.h), static_cast<RelationId>(t.r), static_cast<EntityId>(t.t)};
    if (!res.store.insert(tr)) ++res.duplicates;
  }
  return res;
}

// Loads held-out triples against an existing vocabulary. Triples that mention
// names or ids unknown to `vocab` are skipped and counted. Triples are kept in
// file order (duplicates removed).
inline LoadResult load_triples(const std::filesystem::path& path, TripleFormat format,
                               const Vocabulary& vocab) {
  LoadResult res;
  res.vocab = vocab;
  res.store = TripleStore(vocab.num_entities(), vocab.num_relations());
  auto add = [&](std::optional<std::uint32_t> h, std::optional<std::uint32_t> r,
                 std::optional<std::uint32_t> t) {
    if (!h || !r || !t) {
      ++res.skipped_unknown;
      return;
    }
    if (!res.store.insert({*h, *r, *t})) ++res.duplicates;
  };
  if (format == TripleFormat::NameTSV) {
    auto in = detail::open_in(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto s = detail::chomp(line);
      if (s.empty()) continue;
      auto f = detail::split(s, '\t');
      if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty())
        throw detail::line_error(ErrorCode::MalformedLine, path, line_no);
      add(vocab.entities.find(f[0]), vocab.relations.find(f[1]), vocab.entities.find(f[2]));
    }
    return res;
  }
  auto bounded = [](std::uint64_t v, std::size_t n) -> std::optional<std::uint32_t> {
    if (v >= n) return std::nullopt;
    return static_cast<std::uint32_t>(v);
  };
  for (const auto& t : detail::read_id_tsv(path))
    add(bounded(t.h, vocab.num_entities()), bounded(t.r, vocab.num_relations()),
        bounded(t.t, vocab.num_entities()));
  return res;
}

inline void write_triples(const std::filesystem::path& path, TripleFormat format,
                          const Vocabulary& vocab, std::span<const Triple> triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  if (format == TripleFormat::NameTSV) {
    for (const auto& t : triples)
      out << vocab.entities.name(t.head) << '\t' << vocab.relations.name(t.relation) << '\t'
          << vocab.entities.name(t.tail) << '\n';
  } else {
    out << triples.size() << '\n';
    for (const auto& t : triples) out << t.head << ' ' << t.tail << ' ' << t.relation << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed " + path.string());
}

// Writes entity2id.txt / relation2id.txt next to an IdTSV file.
inline void write_id_tables(const std::filesystem::path& dir, const Vocabulary& vocab) {
  auto dump = [&](const std::filesystem::path& p, const NameTable& table) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    out << table.size() << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) out << table.names()[i] << '\t' << i << '\n';
  };
  dump(dir / "entity2id.txt", vocab.entities);
  dump(dir / "relation2id.txt", vocab.relations);
}

}  // namespace kgp
