#include "mhne/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mhne/error.hpp"
#include "mhne/log.hpp"

namespace mhne {

namespace {

std::uint64_t pair_key(NodeId u, NodeId v) {
  if (u > v) std::swap(u, v);
  return (std::uint64_t{u} << 32) | v;
}

void split_tokens(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  auto is_sep = [](char c) {
    return c == ' ' || c == '\t' || c == ',' || c == '\r';
  };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
}

bool parse_int(std::string_view tok, std::int64_t& value) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool is_comment_or_blank(std::string_view line) {
  auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, "file not found: " + path);
  return in;
}

}  // namespace

Graph Graph::from_edges(std::size_t node_count, std::span<const Edge> edges,
                        std::vector<OriginalId> original_ids) {
  require(node_count > 0, "graph must have at least one node");
  require(node_count <= std::numeric_limits<NodeId>::max(), "too many nodes");
  if (original_ids.empty()) {
    original_ids.resize(node_count);
    for (std::size_t i = 0; i < node_count; ++i) original_ids[i] = static_cast<OriginalId>(i);
  }
  require(original_ids.size() == node_count, "original id table has wrong length");

  Graph g;
  g.adjacency_.resize(node_count);
  g.edges_.reserve(edges.size());
  for (auto [u, v] : edges) {
    require(u < node_count && v < node_count, "edge endpoint out of range");
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    g.edges_.emplace_back(u, v);
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());
  for (auto [u, v] : g.edges_) {
    g.adjacency_[u].push_back(v);
    g.adjacency_[v].push_back(u);
  }
  for (auto& row : g.adjacency_) std::sort(row.begin(), row.end());

  g.original_ids_ = std::move(original_ids);
  g.id_lookup_.reserve(node_count);
  for (std::size_t i = 0; i < node_count; ++i)
    g.id_lookup_.emplace_back(g.original_ids_[i], static_cast<NodeId>(i));
  std::sort(g.id_lookup_.begin(), g.id_lookup_.end());
  for (std::size_t i = 1; i < g.id_lookup_.size(); ++i)
    require(g.id_lookup_[i].first != g.id_lookup_[i - 1].first, "duplicate original id");
  return g;
}

std::span<const NodeId> Graph::neighbors(NodeId u) const {
  require(u < adjacency_.size(), "node index out of range: " + std::to_string(u));
  return adjacency_[u];
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto row = neighbors(u);
  return std::binary_search(row.begin(), row.end(), v);
}

NodeId Graph::dense_index(OriginalId id) const {
  auto it = std::lower_bound(id_lookup_.begin(), id_lookup_.end(),
                             std::make_pair(id, NodeId{0}));
  if (it == id_lookup_.end() || it->first != id)
    fail(ErrorKind::InvalidArgument, "unknown node id " + std::to_string(id));
  return it->second;
}

Graph Graph::without_edges(std::span<const Edge> removed) const {
  std::unordered_set<std::uint64_t> drop;
  for (auto [u, v] : removed) drop.insert(pair_key(u, v));
  std::vector<Edge> kept;
  kept.reserve(edges_.size());
  for (auto e : edges_)
    if (!drop.contains(pair_key(e.first, e.second))) kept.push_back(e);
  return from_edges(node_count(), kept, original_ids_);
}

std::size_t Graph::isolated_count() const {
  return static_cast<std::size_t>(std::count_if(
      adjacency_.begin(), adjacency_.end(), [](const auto& r) { return r.empty(); }));
}

Graph load_edge_list(std::istream& in, bool directed_input, EdgeListStats* stats) {
  (void)directed_input;  // input is always symmetrized
  EdgeListStats local;
  std::vector<std::pair<OriginalId, OriginalId>> raw;
  std::string line;
  std::vector<std::string_view> tokens;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_comment_or_blank(line)) continue;
    split_tokens(line, tokens);
    std::int64_t a = 0, b = 0;
    if (tokens.size() != 2 || !parse_int(tokens[0], a) || !parse_int(tokens[1], b))
      fail(ErrorKind::Format, "edge list line " + std::to_string(lineno) +
                                  ": expected two integer node ids");
    ++local.lines;
    raw.emplace_back(a, b);
  }
  if (raw.empty()) fail(ErrorKind::Format, "edge list contains no edges");

  std::vector<OriginalId> ids;
  ids.reserve(raw.size() * 2);
  for (auto [a, b] : raw) {
    ids.push_back(a);
    ids.push_back(b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  auto dense = [&](OriginalId id) {
    return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };

  std::vector<Graph::Edge> edges;
  edges.reserve(raw.size());
  for (auto [a, b] : raw) {
    if (a == b) {
      ++local.self_loops_dropped;
      continue;
    }
    edges.emplace_back(dense(a), dense(b));
  }
  Graph g = Graph::from_edges(ids.size(), edges, ids);
  local.duplicates_collapsed = edges.size() - g.edge_count();

  if (local.self_loops_dropped > 0)
    warn("dropped " + std::to_string(local.self_loops_dropped) + " self-loop(s)");
  if (auto iso = g.isolated_count(); iso > 0)
    warn(std::to_string(iso) + " isolated node(s) will have empty contexts");
  if (stats) *stats = local;
  return g;
}

Graph load_edge_list_file(const std::string& path, bool directed_input,
                          EdgeListStats* stats) {
  auto in = open_input(path);
  return load_edge_list(in, directed_input, stats);
}

void write_edge_list(const Graph& g, std::ostream& out) {
  for (auto [u, v] : g.edges())
    out << g.original_id(u) << ' ' << g.original_id(v) << '\n';
}

void write_id_map(const Graph& g, std::ostream& out) {
  for (std::size_t i = 0; i < g.node_count(); ++i)
    out << g.original_id(static_cast<NodeId>(i)) << ' ' << i << '\n';
}

SparseBinaryVector context_vector(const Graph& g, NodeId node, int hops) {
  require(node < g.node_count(), "node index out of range: " + std::to_string(node));
  require(hops >= 1, "hops must be >= 1");
  SparseBinaryVector out{g.node_count(), {}};
  if (hops == 1) {
    auto row = g.neighbors(node);
    out.active.assign(row.begin(), row.end());
    return out;
  }
  std::vector<char> seen(g.node_count(), 0);
  seen[node] = 1;
  std::vector<NodeId> frontier{node}, next;
  for (int h = 0; h < hops && !frontier.empty(); ++h) {
    next.clear();
    for (NodeId u : frontier)
      for (NodeId w : g.neighbors(u))
        if (!seen[w]) {
          seen[w] = 1;
          next.push_back(w);
          out.active.push_back(w);
        }
    frontier.swap(next);
  }
  std::sort(out.active.begin(), out.active.end());
  return out;
}

SparseBinaryVector one_hot(NodeId node, std::size_t m) {
  require(node < m, "one-hot index " + std::to_string(node) + " out of range for m=" +
                        std::to_string(m));
  return {m, {node}};
}

double jaccard_coefficient(const Graph& g, NodeId u, NodeId v) {
  auto a = g.neighbors(u);
  auto b = g.neighbors(v);
  std::size_t inter = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  std::size_t uni = a.size() + b.size() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

SampledPairs sample_link_pairs(const Graph& g, std::size_t n_pos, std::size_t n_neg,
                               std::uint64_t seed, bool holdout) {
  const std::size_t m = g.node_count();
  const std::size_t all_pairs = m * (m - 1) / 2;
  const std::size_t non_edges = all_pairs - g.edge_count();
  if (n_pos > g.edge_count())
    fail(ErrorKind::InvalidArgument, "requested " + std::to_string(n_pos) +
                                         " positive pairs but graph has " +
                                         std::to_string(g.edge_count()) + " edges");
  if (n_neg > non_edges)
    fail(ErrorKind::InvalidArgument, "requested " + std::to_string(n_neg) +
                                         " negative pairs but graph has " +
                                         std::to_string(non_edges) + " non-edges");

  std::mt19937_64 rng(seed);
  SampledPairs out;
  out.sample.seed = seed;
  out.sample.pairs.reserve(n_pos + n_neg);

  // Partial Fisher-Yates over edge indices.
  std::vector<std::size_t> order(g.edge_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Graph::Edge> positives;
  for (std::size_t i = 0; i < n_pos; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
    auto e = g.edges()[order[i]];
    positives.push_back(e);
    out.sample.pairs.push_back({e.first, e.second, PairLabel::Positive});
  }

  std::unordered_set<std::uint64_t> chosen;
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(m - 1));
  while (chosen.size() < n_neg) {
    NodeId u = node(rng);
    NodeId v = node(rng);
    if (u == v || g.has_edge(u, v)) continue;
    if (!chosen.insert(pair_key(u, v)).second) continue;
    out.sample.pairs.push_back({std::min(u, v), std::max(u, v), PairLabel::Negative});
  }

  out.graph = holdout ? g.without_edges(positives) : g;
  return out;
}

void write_link_pairs(const Graph& g, const LinkPairSample& s, std::ostream& out) {
  out << "# seed " << s.seed << '\n';
  for (const auto& p : s.pairs)
    out << g.original_id(p.u) << ' ' << g.original_id(p.v) << ' '
        << (p.label == PairLabel::Positive ? 1 : 0) << '\n';
}

LinkPairSample read_link_pairs(const Graph& g, std::istream& in) {
  LinkPairSample s;
  std::string line;
  std::vector<std::string_view> tokens;
  std::size_t lineno = 0;
  std::set<std::uint64_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# seed ", 0) == 0) {
      std::int64_t seed = 0;
      if (parse_int(std::string_view(line).substr(7), seed))
        s.seed = static_cast<std::uint64_t>(seed);
      continue;
    }
    if (is_comment_or_blank(line)) continue;
    split_tokens(line, tokens);
    std::int64_t a = 0, b = 0, label = 0;
    if (tokens.size() != 3 || !parse_int(tokens[0], a) || !parse_int(tokens[1], b) ||
        !parse_int(tokens[2], label) || (label != 0 && label != 1))
      fail(ErrorKind::Format, "pair file line " + std::to_string(lineno) +
                                  ": expected 'u v label' with label 0 or 1");
    NodeId u = g.dense_index(a), v = g.dense_index(b);
    if (u == v) fail(ErrorKind::Format, "pair file line " + std::to_string(lineno) + ": u == v");
    if (!seen.insert(pair_key(u, v)).second)
      fail(ErrorKind::Format, "pair file line " + std::to_string(lineno) + ": duplicate pair");
    s.pairs.push_back({u, v, label == 1 ? PairLabel::Positive : PairLabel::Negative});
  }
  return s;
}

std::vector<NodeId> NodeLabels::labeled_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < sets.size(); ++i)
    if (!sets[i].empty()) out.push_back(static_cast<NodeId>(i));
  return out;
}

NodeLabels load_labels(const Graph& g, std::istream& in) {
  NodeLabels labels;
  labels.sets.resize(g.node_count());
  std::map<std::string, int, std::less<>> index;
  std::string line;
  std::vector<std::string_view> tokens;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_comment_or_blank(line)) continue;
    split_tokens(line, tokens);
    std::int64_t id = 0;
    if (tokens.size() < 2 || !parse_int(tokens[0], id))
      fail(ErrorKind::Format, "labels line " + std::to_string(lineno) +
                                  ": expected 'node_id label[,label...]'");
    NodeId u = 0;
    try {
      u = g.dense_index(id);
    } catch (const Error&) {
      fail(ErrorKind::Format, "labels line " + std::to_string(lineno) +
                                  ": node id " + std::to_string(id) + " not in graph");
    }
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      auto it = index.find(tokens[t]);
      if (it == index.end()) {
        it = index.emplace(std::string(tokens[t]), static_cast<int>(labels.names.size())).first;
        labels.names.emplace_back(tokens[t]);
      }
      labels.sets[u].push_back(it->second);
    }
  }
  for (auto& s : labels.sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  if (labels.names.empty()) fail(ErrorKind::Format, "labels file contains no labels");
  return labels;
}

NodeLabels load_labels_file(const Graph& g, const std::string& path) {
  auto in = open_input(path);
  return load_labels(g, in);
}

void write_labels(const Graph& g, const NodeLabels& labels, std::ostream& out) {
  for (std::size_t u = 0; u < labels.sets.size(); ++u) {
    if (labels.sets[u].empty()) continue;
    out << g.original_id(static_cast<NodeId>(u)) << ' ';
    for (std::size_t k = 0; k < labels.sets[u].size(); ++k)
      out << (k ? "," : "") << labels.names[labels.sets[u][k]];
    out << '\n';
  }
}

SbmGraph generate_sbm(std::span<const std::size_t> block_sizes, double p_in,
                      double p_out, std::uint64_t seed) {
  require(!block_sizes.empty(), "SBM needs at least one block");
  require(p_in >= 0 && p_in <= 1 && p_out >= 0 && p_out <= 1,
          "SBM probabilities must lie in [0,1]");
  std::vector<int> block;
  for (std::size_t b = 0; b < block_sizes.size(); ++b)
    block.insert(block.end(), block_sizes[b], static_cast<int>(b));
  const std::size_t m = block.size();
  require(m > 0, "SBM needs at least one node");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Graph::Edge> edges;
  for (NodeId u = 0; u < m; ++u)
    for (NodeId v = u + 1; v < m; ++v)
      if (coin(rng) < (block[u] == block[v] ? p_in : p_out)) edges.emplace_back(u, v);

  SbmGraph out{Graph::from_edges(m, edges), {}};
  out.labels.sets.resize(m);
  for (std::size_t b = 0; b < block_sizes.size(); ++b)
    out.labels.names.push_back(std::to_string(b));
  for (std::size_t u = 0; u < m; ++u) out.labels.sets[u] = {block[u]};
  return out;
}

}  // namespace mhne
