// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/graph_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "e2egrec/error.hpp"

namespace e2eg {

static_assert(std::endian::native == std::endian::little, "graph encoding assumes a little-endian host");

// ---------------------------------------------------------------------------
// InteractionLog

std::uint32_t InteractionLog::action_bit(const std::string& name) {
  for (std::size_t k = 0; k < action_names.size(); ++k)
    if (action_names[k] == name) return static_cast<std::uint32_t>(k);
  if (action_names.size() >= 32) throw Error(ErrorCode::kInvalidArgument, "more than 32 distinct positive actions");
  action_names.push_back(name);
  return static_cast<std::uint32_t>(action_names.size() - 1);
}

std::int64_t InteractionLog::max_item_id() const {
  std::int64_t m = -1;
  for (const auto& r : records) m = std::max(m, r.item_id);
  return m;
}

std::int64_t InteractionLog::max_user_id() const {
  std::int64_t m = -1;
  for (const auto& r : records) m = std::max(m, r.user_id);
  return m;
}

namespace {

const char* const kLogHeader = "user_id\titem_id\tstaytime_seconds\tpos_actions\tneg_action";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::int64_t parse_int(const std::string& s, std::size_t line, const char* what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid ") + what + " '" + s + "'", line);
  }
}

}  // namespace

InteractionLog read_log_tsv(const std::filesystem::path& path, const std::vector<std::string>& vocabulary) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open interaction log " + path.string());
  InteractionLog log;
  log.action_names = vocabulary;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header row in " + path.string(), 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader) throw ParseError("unexpected header in " + path.string(), 1);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 5) throw ParseError("expected 5 columns, got " + std::to_string(cols.size()), lineno);
    Interaction r;
    r.user_id = parse_int(cols[0], lineno, "user_id");
    r.item_id = parse_int(cols[1], lineno, "item_id");
    try {
      std::size_t pos = 0;
      r.staytime = std::stod(cols[2], &pos);
      if (pos != cols[2].size() || !(r.staytime >= 0.0) || !std::isfinite(r.staytime))
        throw std::invalid_argument(cols[2]);
    } catch (const std::exception&) {
      throw ParseError("invalid staytime_seconds '" + cols[2] + "'", lineno);
    }
    if (!cols[3].empty())
      for (const auto& name : split(cols[3], ','))
        if (!name.empty()) r.pos_actions |= (1u << log.action_bit(name));
    if (cols[4] != "0" && cols[4] != "1") throw ParseError("neg_action must be 0 or 1, got '" + cols[4] + "'", lineno);
    r.neg_action = cols[4] == "1";
    log.records.push_back(r);
  }
  return log;
}

void write_log_tsv(const InteractionLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write interaction log " + path.string());
  out << kLogHeader << '\n';
  char buf[64];
  for (const auto& r : log.records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.staytime);
    out << r.user_id << '\t' << r.item_id << '\t' << buf << '\t';
    bool first = true;
    for (std::size_t k = 0; k < log.action_names.size(); ++k) {
      if (r.pos_actions & (1u << k)) {
        if (!first) out << ',';
        out << log.action_names[k];
        first = false;
      }
    }
    out << '\t' << (r.neg_action ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// ItemGraph

std::span<const std::uint64_t> ItemGraph::neighbors(std::uint64_t item) const {
  return {col_indices.data() + row_offsets.at(item), degree(item)};
}

std::span<const double> ItemGraph::neighbor_weights(std::uint64_t item) const {
  return {weights.data() + row_offsets.at(item), degree(item)};
}

double ItemGraph::weight(std::uint64_t a, std::uint64_t b) const {
  const auto nb = neighbors(a);
  const auto it = std::lower_bound(nb.begin(), nb.end(), b);
  if (it == nb.end() || *it != b) return 0.0;
  return weights[row_offsets[a] + static_cast<std::size_t>(it - nb.begin())];
}

void ItemGraph::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "invalid item graph: " + m); };
  if (row_offsets.size() != num_items + 1 || row_offsets.front() != 0) bad("offset array length");
  if (row_offsets.back() != col_indices.size() || weights.size() != col_indices.size()) bad("array lengths");
  for (std::uint64_t i = 0; i < num_items; ++i) {
    if (row_offsets[i + 1] < row_offsets[i]) bad("offsets not monotone at item " + std::to_string(i));
    for (std::uint64_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
      const auto j = col_indices[k];
      if (j >= num_items) bad("neighbor id out of range");
      if (j == i) bad("self edge at item " + std::to_string(i));
      if (k > row_offsets[i] && col_indices[k - 1] >= j) bad("neighbors not strictly sorted");
      if (!(weights[k] > 0.0) || !std::isfinite(weights[k])) bad("non-positive weight");
      if (weight(j, i) != weights[k]) bad("asymmetric edge " + std::to_string(i) + "-" + std::to_string(j));
    }
  }
}

// ---------------------------------------------------------------------------
// Swing

std::vector<std::vector<std::int64_t>> user_item_sets(const InteractionLog& log) {
  std::map<std::int64_t, std::vector<std::int64_t>> by_user;
  for (const auto& r : log.records) by_user[r.user_id].push_back(r.item_id);
  std::vector<std::vector<std::int64_t>> out;
  out.reserve(by_user.size());
  for (auto& [u, items] : by_user) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    out.push_back(std::move(items));
  }
  return out;
}

namespace {

std::size_t intersection_size(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

bool contains(const std::vector<std::int64_t>& s, std::int64_t x) { return std::binary_search(s.begin(), s.end(), x); }

}  // namespace

double swing_score(std::int64_t i, std::int64_t j, const InteractionLog& log, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "swing alpha must be positive");
  if (i == j) throw Error(ErrorCode::kInvalidArgument, "swing_score requires distinct items");
  const auto sets = user_item_sets(log);
  std::vector<std::size_t> common;
  for (std::size_t u = 0; u < sets.size(); ++u)
    if (contains(sets[u], i) && contains(sets[u], j)) common.push_back(u);
  double score = 0.0;
  for (std::size_t a = 0; a < common.size(); ++a) {
    const auto& iu = sets[common[a]];
    for (std::size_t b = a + 1; b < common.size(); ++b) {
      const auto& iv = sets[common[b]];
      const double wu = 1.0 / std::sqrt(static_cast<double>(iu.size()));
      const double wv = 1.0 / std::sqrt(static_cast<double>(iv.size()));
      score += wu * wv / (alpha + static_cast<double>(intersection_size(iu, iv)));
    }
  }
  return score;
}

ItemGraph build_swing_graph(const InteractionLog& log, double alpha, std::size_t top_k, std::uint64_t num_items) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "swing alpha must be positive");
  if (top_k == 0) throw Error(ErrorCode::kInvalidArgument, "top_k must be positive");
  if (log.records.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot build a graph from an empty log");
  const std::uint64_t n_items = num_items ? num_items : static_cast<std::uint64_t>(log.max_item_id() + 1);
  if (static_cast<std::uint64_t>(log.max_item_id()) >= n_items)
    throw Error(ErrorCode::kInvalidArgument, "item id exceeds num_items");

  const auto sets = user_item_sets(log);
  const std::size_t n_users = sets.size();
  std::vector<double> user_weight(n_users);
  for (std::size_t u = 0; u < n_users; ++u) user_weight[u] = 1.0 / std::sqrt(static_cast<double>(sets[u].size()));

  std::vector<std::vector<std::size_t>> item_users(n_items);
  for (std::size_t u = 0; u < n_users; ++u)
    for (auto it : sets[u]) item_users[static_cast<std::size_t>(it)].push_back(u);

  // Every user pair sharing >= 2 items contributes one kernel value to each
  // item pair inside their intersection.
  std::unordered_map<std::uint64_t, double> scores;
  std::vector<std::uint32_t> overlap(n_users, 0);
  std::vector<std::size_t> touched;
  std::vector<std::int64_t> common;
  for (std::size_t u = 0; u < n_users; ++u) {
    touched.clear();
    for (auto it : sets[u])
      for (auto v : item_users[static_cast<std::size_t>(it)])
        if (v > u && overlap[v]++ == 0) touched.push_back(v);
    std::sort(touched.begin(), touched.end());
    for (auto v : touched) {
      const std::uint32_t c = overlap[v];
      overlap[v] = 0;
      if (c < 2) continue;
      common.clear();
      std::set_intersection(sets[u].begin(), sets[u].end(), sets[v].begin(), sets[v].end(),
                            std::back_inserter(common));
      const double contrib = user_weight[u] * user_weight[v] / (alpha + static_cast<double>(c));
      for (std::size_t a = 0; a < common.size(); ++a)
        for (std::size_t b = a + 1; b < common.size(); ++b)
          scores[static_cast<std::uint64_t>(common[a]) * n_items + static_cast<std::uint64_t>(common[b])] += contrib;
    }
  }

  struct Candidate {
    std::uint64_t other;
    double score;
  };
  std::vector<std::vector<Candidate>> cand(n_items);
  for (const auto& [key, s] : scores) {
    if (!(s > 0.0)) continue;
    const std::uint64_t a = key / n_items, b = key % n_items;
    cand[a].push_back({b, s});
    cand[b].push_back({a, s});
  }
  // Kept directed edges, then union-symmetrize.
  std::vector<std::vector<Candidate>> adj(n_items);
  for (std::uint64_t i = 0; i < n_items; ++i) {
    auto& c = cand[i];
    std::sort(c.begin(), c.end(), [](const Candidate& x, const Candidate& y) {
      return x.score != y.score ? x.score > y.score : x.other < y.other;
    });
    if (c.size() > top_k) c.resize(top_k);
    for (const auto& e : c) {
      adj[i].push_back(e);
      adj[e.other].push_back({i, e.score});
    }
  }
  ItemGraph g;
  g.num_items = n_items;
  g.row_offsets.assign(n_items + 1, 0);
  for (std::uint64_t i = 0; i < n_items; ++i) {
    auto& a = adj[i];
    std::sort(a.begin(), a.end(), [](const Candidate& x, const Candidate& y) { return x.other < y.other; });
    a.erase(std::unique(a.begin(), a.end(), [](const Candidate& x, const Candidate& y) { return x.other == y.other; }),
            a.end());
    for (const auto& e : a) {
      g.col_indices.push_back(e.other);
      g.weights.push_back(e.score);
    }
    g.row_offsets[i + 1] = g.col_indices.size();
  }
  return g;
}

// ---------------------------------------------------------------------------
// Binary persistence

namespace {

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) throw ParseError(std::string("truncated graph file reading ") + what, pos_);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_graph(const ItemGraph& graph) {
  std::vector<unsigned char> out;
  out.reserve(24 + 8 * graph.row_offsets.size() + 16 * graph.col_indices.size());
  for (char c : {'E', '2', 'E', 'G'}) out.push_back(static_cast<unsigned char>(c));
  put<std::uint32_t>(out, kGraphFormatVersion);
  put<std::uint64_t>(out, graph.num_items);
  for (auto v : graph.row_offsets) put<std::uint64_t>(out, v);
  for (auto v : graph.col_indices) put<std::uint64_t>(out, v);
  for (auto v : graph.weights) put<double>(out, v);
  return out;
}

ItemGraph decode_graph(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.get<unsigned char>("magic"));
  if (std::memcmp(magic, "E2EG", 4) != 0) throw ParseError("bad magic, expected E2EG", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kGraphFormatVersion) throw ParseError("unsupported graph version " + std::to_string(version), 4);
  ItemGraph g;
  const std::size_t num_items_at = r.pos();
  g.num_items = r.get<std::uint64_t>("num_items");
  if (g.num_items >= r.remaining() / 8) throw ParseError("num_items exceeds file size", num_items_at);
  g.row_offsets.resize(g.num_items + 1);
  for (auto& v : g.row_offsets) {
    const std::size_t at = r.pos();
    v = r.get<std::uint64_t>("row_offsets");
    if (&v == &g.row_offsets.front() && v != 0) throw ParseError("first offset must be 0", at);
    if (&v != &g.row_offsets.front() && v < *(&v - 1)) throw ParseError("row offsets not monotone", at);
  }
  const std::uint64_t nnz = g.row_offsets.back();
  if (nnz > r.remaining() / 16) throw ParseError("edge count exceeds file size", r.pos());
  g.col_indices.resize(nnz);
  for (auto& v : g.col_indices) {
    const std::size_t at = r.pos();
    v = r.get<std::uint64_t>("col_indices");
    if (v >= g.num_items) throw ParseError("neighbor index out of range", at);
  }
  g.weights.resize(nnz);
  for (auto& v : g.weights) v = r.get<double>("weights");
  if (r.remaining() != 0) throw ParseError("trailing bytes after graph payload", r.pos());
  return g;
}

void save_graph(const ItemGraph& graph, const std::filesystem::path& path) {
  const auto bytes = encode_graph(graph);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write graph file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

ItemGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open graph file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_graph(bytes);
}

}  // namespace e2eg
