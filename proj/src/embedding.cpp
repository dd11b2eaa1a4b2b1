#include "mhne/embedding.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>

#include "mhne/error.hpp"

namespace mhne {

namespace {

// Cursor over the whole file so errors can name a byte offset.
class TextCursor {
 public:
  explicit TextCursor(std::string text) : text_(std::move(text)) {}

  bool at_end() const { return pos_ >= text_.size(); }
  std::size_t offset() const { return pos_; }

  void skip_blanks() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r'))
      ++pos_;
  }

  // Next whitespace-delimited token on the current line; empty at end of line.
  std::string_view token() {
    skip_blanks();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return std::string_view(text_).substr(start, pos_ - start);
  }

  // Consumes the rest of the line; returns false if it held more tokens.
  bool end_line() {
    bool clean = true;
    while (pos_ < text_.size() && text_[pos_] != '\n') {
      if (!std::isspace(static_cast<unsigned char>(text_[pos_]))) clean = false;
      ++pos_;
    }
    if (pos_ < text_.size()) ++pos_;
    return clean;
  }

  [[noreturn]] void error(const std::string& what, std::size_t at) const {
    fail(ErrorKind::Format, "embedding file: " + what + " at byte offset " + std::to_string(at));
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
};

template <typename T>
T parse_number(TextCursor& cur, const char* what, std::size_t* where = nullptr) {
  cur.skip_blanks();
  const std::size_t at = cur.offset();
  if (where) *where = at;
  auto tok = cur.token();
  if (tok.empty()) {
    if (cur.at_end()) cur.error(std::string("truncated file, expected ") + what, at);
    cur.error(std::string("row too short, expected ") + what, at);
  }
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    cur.error(std::string("malformed ") + what + " '" + std::string(tok) + "'", at);
  return value;
}

}  // namespace

Vector embed_node(const ModelParams& p, const SparseBinaryVector& context) {
  if (static_cast<Eigen::Index>(context.dimension) != p.nodes())
    fail(ErrorKind::InvalidArgument, "dimension mismatch: context has " +
                                         std::to_string(context.dimension) +
                                         ", model has m=" + std::to_string(p.nodes()));
  return context_field(p.psi_context, context);
}

EmbeddingMatrix embed_all(const ModelParams& p, const Graph& g, int hops) {
  if (static_cast<Eigen::Index>(g.node_count()) != p.nodes())
    fail(ErrorKind::InvalidArgument, "dimension mismatch: graph has " +
                                         std::to_string(g.node_count()) +
                                         " nodes, model has m=" + std::to_string(p.nodes()));
  EmbeddingMatrix e;
  e.rows.resize(p.nodes(), p.memories());
  for (NodeId u = 0; u < g.node_count(); ++u)
    e.rows.row(u) = embed_node(p, context_vector(g, u, hops)).transpose();
  e.node_ids = g.original_ids();
  return e;
}

EmbeddingMatrix align_to_graph(const EmbeddingMatrix& e, const Graph& g) {
  if (static_cast<std::size_t>(e.node_count()) != g.node_count())
    fail(ErrorKind::Format, "embedding has " + std::to_string(e.node_count()) +
                                " rows but graph has " + std::to_string(g.node_count()) +
                                " nodes");
  EmbeddingMatrix out;
  out.rows.resize(e.node_count(), e.dimension());
  out.node_ids = g.original_ids();
  std::vector<char> filled(g.node_count(), 0);
  for (Eigen::Index r = 0; r < e.node_count(); ++r) {
    NodeId u = 0;
    try {
      u = g.dense_index(e.node_ids[r]);
    } catch (const Error&) {
      fail(ErrorKind::Format, "embedding node id " + std::to_string(e.node_ids[r]) +
                                  " is not in the graph");
    }
    if (filled[u]) fail(ErrorKind::Format, "embedding node id " +
                                               std::to_string(e.node_ids[r]) + " repeated");
    filled[u] = 1;
    out.rows.row(u) = e.rows.row(r);
  }
  return out;
}

void save_embeddings(const EmbeddingMatrix& e, std::ostream& out) {
  require(static_cast<Eigen::Index>(e.node_ids.size()) == e.node_count(),
          "embedding id table length differs from row count");
  out << e.node_count() << ' ' << e.dimension() << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < e.node_count(); ++r) {
    out << e.node_ids[r];
    for (Eigen::Index c = 0; c < e.dimension(); ++c) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.rows(r, c),
                                     std::chars_format::general, 17);
      out << ' ' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
}

EmbeddingMatrix load_embeddings(std::istream& in) {
  TextCursor cur{std::string(std::istreambuf_iterator<char>(in), {})};
  const auto m = parse_number<long long>(cur, "node count");
  std::size_t k_at = 0;
  const auto k = parse_number<long long>(cur, "dimension", &k_at);
  if (m <= 0) cur.error("header node count must be positive", 0);
  if (k <= 0) cur.error("header dimension must be positive", k_at);
  if (!cur.end_line()) cur.error("extra tokens in header", 0);

  EmbeddingMatrix e;
  e.rows.resize(m, k);
  e.node_ids.resize(m);
  for (long long r = 0; r < m; ++r) {
    e.node_ids[r] = parse_number<OriginalId>(cur, "node id");
    for (long long c = 0; c < k; ++c) {
      std::size_t at = 0;
      const double x = parse_number<double>(cur, "value", &at);
      if (!std::isfinite(x)) cur.error("non-finite value", at);
      e.rows(r, c) = x;
    }
    cur.skip_blanks();
    const std::size_t at = cur.offset();
    if (!cur.end_line()) cur.error("row " + std::to_string(r) + " longer than K", at);
  }
  return e;
}

void save_embeddings_file(const EmbeddingMatrix& e, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::InvalidArgument, "cannot open for writing: " + path);
  save_embeddings(e, out);
}

EmbeddingMatrix load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, "file not found: " + path);
  return load_embeddings(in);
}

}  // namespace mhne
