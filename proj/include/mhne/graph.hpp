#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mhne {

using NodeId = std::uint32_t;
using OriginalId = std::int64_t;

/// Binary vector stored as its sorted set of active coordinates.
struct SparseBinaryVector {
  std::size_t dimension = 0;
  std::vector<NodeId> active;

  bool empty() const { return active.empty(); }
  bool operator==(const SparseBinaryVector&) const = default;
};

/// Immutable undirected simple graph over dense indices 0..m-1.
///
/// Adjacency rows are sorted and symmetric. Each dense index keeps the
/// original id it was read under so outputs can be written back in the
/// caller's id space.
class Graph {
 public:
  using Edge = std::pair<NodeId, NodeId>;  // first < second

  Graph() = default;

  /// Builds from dense-index edges. Self-loops and duplicates are dropped,
  /// orientation is ignored. `original_ids` defaults to the identity.
  static Graph from_edges(std::size_t node_count, std::span<const Edge> edges,
                          std::vector<OriginalId> original_ids = {});

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId u) const;
  std::size_t degree(NodeId u) const { return neighbors(u).size(); }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<OriginalId>& original_ids() const { return original_ids_; }
  OriginalId original_id(NodeId u) const { return original_ids_.at(u); }
  /// Dense index of an original id; throws InvalidArgument when unknown.
  NodeId dense_index(OriginalId id) const;

  /// Same node set with the listed edges removed.
  Graph without_edges(std::span<const Edge> removed) const;

  std::size_t isolated_count() const;

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<Edge> edges_;  // sorted, u < v
  std::vector<OriginalId> original_ids_;
  std::vector<std::pair<OriginalId, NodeId>> id_lookup_;  // sorted by id
};

struct EdgeListStats {
  std::size_t lines = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_collapsed = 0;
};

/// Parses "u v" lines ('#' comments and blank lines skipped, commas accepted
/// as separators). Ids are remapped to dense indices in ascending id order.
Graph load_edge_list(std::istream& in, bool directed_input = false,
                     EdgeListStats* stats = nullptr);
Graph load_edge_list_file(const std::string& path, bool directed_input = false,
                          EdgeListStats* stats = nullptr);

/// Writes one "u v" line per edge using original ids.
void write_edge_list(const Graph& g, std::ostream& out);
/// Two-column remap table "original_id dense_index".
void write_id_map(const Graph& g, std::ostream& out);

/// Nodes reachable in 1..hops steps, excluding `node` itself.
SparseBinaryVector context_vector(const Graph& g, NodeId node, int hops = 1);
SparseBinaryVector one_hot(NodeId node, std::size_t m);

/// |N(u) ∩ N(v)| / |N(u) ∪ N(v)|; 0 when both neighborhoods are empty.
double jaccard_coefficient(const Graph& g, NodeId u, NodeId v);

enum class PairLabel : std::uint8_t { Negative = 0, Positive = 1 };

struct LinkPair {
  NodeId u = 0;
  NodeId v = 0;
  PairLabel label = PairLabel::Negative;
  bool operator==(const LinkPair&) const = default;
};

struct LinkPairSample {
  std::vector<LinkPair> pairs;  // positives first, then negatives
  std::uint64_t seed = 0;
};

struct SampledPairs {
  LinkPairSample sample;
  Graph graph;  // input graph, or the input minus the positives on holdout
};

/// Positives uniformly without replacement from the edge set, negatives by
/// rejection over non-edges. Deterministic given `seed`.
SampledPairs sample_link_pairs(const Graph& g, std::size_t n_pos,
                               std::size_t n_neg, std::uint64_t seed,
                               bool holdout);

/// Pair file: "u v label" per line with original ids, label 1 or 0.
void write_link_pairs(const Graph& g, const LinkPairSample& s, std::ostream& out);
LinkPairSample read_link_pairs(const Graph& g, std::istream& in);

/// Per-node label sets over dense label indices.
struct NodeLabels {
  std::vector<std::vector<int>> sets;  // indexed by dense node, sorted
  std::vector<std::string> names;      // dense label index -> token

  std::size_t label_count() const { return names.size(); }
  std::vector<NodeId> labeled_nodes() const;
};

/// "original_node_id label[,label...]" per line. Label tokens get dense
/// indices in order of first appearance. Unknown node ids are an error.
NodeLabels load_labels(const Graph& g, std::istream& in);
NodeLabels load_labels_file(const Graph& g, const std::string& path);
void write_labels(const Graph& g, const NodeLabels& labels, std::ostream& out);

/// Planted-partition graph: consecutive blocks of the given sizes, edges
/// inside a block with prob p_in and across blocks with p_out. Block index
/// is returned as the node label.
struct SbmGraph {
  Graph graph;
  NodeLabels labels;
};
SbmGraph generate_sbm(std::span<const std::size_t> block_sizes, double p_in,
                      double p_out, std::uint64_t seed);

}  // namespace mhne
