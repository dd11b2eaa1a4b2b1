#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mhne/graph.hpp"
#include "mhne/hopfield.hpp"

namespace mhne {

/// One K-dimensional row per node, plus the id each row is written under.
struct EmbeddingMatrix {
  Matrix rows;                        // m x K
  std::vector<OriginalId> node_ids;   // dense index -> original id

  Eigen::Index node_count() const { return rows.rows(); }
  Eigen::Index dimension() const { return rows.cols(); }
};

/// Psi_context * v_context over the active columns only.
Vector embed_node(const ModelParams& p, const SparseBinaryVector& context);

EmbeddingMatrix embed_all(const ModelParams& p, const Graph& g, int hops = 1);

/// Reorders rows so row i belongs to dense node i of `g`, matching by
/// original id. Throws Format if the id sets differ.
EmbeddingMatrix align_to_graph(const EmbeddingMatrix& e, const Graph& g);

// Text format: "m K" header, then "original_id v1 ... vK" per node with 17
// significant digits, so save/load is bit-exact.
void save_embeddings(const EmbeddingMatrix& e, std::ostream& out);
EmbeddingMatrix load_embeddings(std::istream& in);
void save_embeddings_file(const EmbeddingMatrix& e, const std::string& path);
EmbeddingMatrix load_embeddings_file(const std::string& path);

}  // namespace mhne
