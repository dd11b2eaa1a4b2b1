#include "mhne/mhne.h"

#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "mhne/embedding.hpp"
#include "mhne/error.hpp"
#include "mhne/eval.hpp"
#include "mhne/graph.hpp"
#include "mhne/hopfield.hpp"
#include "mhne/log.hpp"
#include "mhne/training.hpp"

struct mhne_graph {
  mhne::Graph graph;
};
struct mhne_labels {
  mhne::NodeLabels labels;
};
struct mhne_pairs {
  mhne::LinkPairSample sample;
};
struct mhne_model {
  mhne::ModelParams storage;
  const mhne::ModelParams* borrowed = nullptr;  // set for epoch-callback views

  const mhne::ModelParams& params() const { return borrowed ? *borrowed : storage; }
};
struct mhne_embedding {
  mhne::EmbeddingMatrix matrix;
};
struct mhne_report {
  mhne::EvalReport report;
};

namespace {

thread_local std::string g_last_error;

mhne_status to_status(mhne::ErrorKind kind) {
  switch (kind) {
    case mhne::ErrorKind::InvalidArgument: return MHNE_ERR_INVALID_ARGUMENT;
    case mhne::ErrorKind::NotFound: return MHNE_ERR_NOT_FOUND;
    case mhne::ErrorKind::Format: return MHNE_ERR_FORMAT;
    case mhne::ErrorKind::Numeric: return MHNE_ERR_NUMERIC;
    case mhne::ErrorKind::Internal: return MHNE_ERR_INTERNAL;
  }
  return MHNE_ERR_INTERNAL;
}

template <typename F>
mhne_status guarded(F&& body) {
  try {
    body();
    return MHNE_OK;
  } catch (const mhne::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MHNE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MHNE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MHNE_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) mhne::fail(mhne::ErrorKind::InvalidArgument, std::string(name) + " is NULL");
}

std::ofstream open_output(const char* path) {
  need(path, "path");
  std::ofstream out(path, std::ios::trunc);
  if (!out) mhne::fail(mhne::ErrorKind::InvalidArgument, std::string("cannot open for writing: ") + path);
  return out;
}

mhne::TrainConfig from_c(const mhne_train_config& c) {
  mhne::TrainConfig cfg;
  cfg.memories = c.memories;
  cfg.steps = c.steps;
  cfg.alpha = c.alpha;
  cfg.beta1 = c.beta1;
  cfg.beta2 = c.beta2;
  cfg.learning_rate = c.learning_rate;
  cfg.weight_decay = c.weight_decay;
  cfg.epochs = c.epochs;
  cfg.batch_size = c.batch_size;
  cfg.seed = c.seed;
  cfg.hops = c.hops;
  cfg.threads = c.threads;
  return cfg;
}

}  // namespace

extern "C" {

const char* mhne_last_error(void) { return g_last_error.c_str(); }
const char* mhne_version(void) { return "1.0.0"; }

void mhne_set_log_callback(mhne_log_fn fn, void* user) {
  if (!fn) {
    mhne::set_log_sink({});
    return;
  }
  mhne::set_log_sink([fn, user](mhne::LogLevel level, const std::string& msg) {
    fn(level == mhne::LogLevel::Warning ? 1 : 0, msg.c_str(), user);
  });
}

void mhne_set_default_logging(void) {
  mhne::set_log_sink([](mhne::LogLevel level, const std::string& msg) {
    if (level == mhne::LogLevel::Warning) std::fprintf(stderr, "warning: %s\n", msg.c_str());
  });
}

mhne_status mhne_graph_load(const char* path, int directed_input, mhne_graph** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mhne_graph{mhne::load_edge_list_file(path, directed_input != 0)};
  });
}

mhne_status mhne_graph_sbm(const size_t* block_sizes, size_t blocks, double p_in, double p_out,
                           uint64_t seed, mhne_graph** graph_out, mhne_labels** labels_out) {
  return guarded([&] {
    need(block_sizes, "block_sizes");
    need(graph_out, "graph_out");
    auto sbm = mhne::generate_sbm(std::span<const std::size_t>(block_sizes, blocks), p_in,
                                  p_out, seed);
    auto g = std::make_unique<mhne_graph>(mhne_graph{std::move(sbm.graph)});
    if (labels_out) *labels_out = new mhne_labels{std::move(sbm.labels)};
    *graph_out = g.release();
  });
}

void mhne_graph_free(mhne_graph* g) { delete g; }
size_t mhne_graph_node_count(const mhne_graph* g) { return g ? g->graph.node_count() : 0; }
size_t mhne_graph_edge_count(const mhne_graph* g) { return g ? g->graph.edge_count() : 0; }

mhne_status mhne_graph_dense_index(const mhne_graph* g, int64_t original_id, uint32_t* out) {
  return guarded([&] {
    need(g, "graph");
    need(out, "out");
    *out = g->graph.dense_index(original_id);
  });
}

mhne_status mhne_graph_save_edges(const mhne_graph* g, const char* path) {
  return guarded([&] {
    need(g, "graph");
    auto out = open_output(path);
    mhne::write_edge_list(g->graph, out);
  });
}

mhne_status mhne_graph_save_id_map(const mhne_graph* g, const char* path) {
  return guarded([&] {
    need(g, "graph");
    auto out = open_output(path);
    mhne::write_id_map(g->graph, out);
  });
}

mhne_status mhne_jaccard(const mhne_graph* g, uint32_t u, uint32_t v, double* out) {
  return guarded([&] {
    need(g, "graph");
    need(out, "out");
    *out = mhne::jaccard_coefficient(g->graph, u, v);
  });
}

mhne_status mhne_labels_load(const mhne_graph* g, const char* path, mhne_labels** out) {
  return guarded([&] {
    need(g, "graph");
    need(path, "path");
    need(out, "out");
    *out = new mhne_labels{mhne::load_labels_file(g->graph, path)};
  });
}

mhne_status mhne_labels_save(const mhne_graph* g, const mhne_labels* labels, const char* path) {
  return guarded([&] {
    need(g, "graph");
    need(labels, "labels");
    auto out = open_output(path);
    mhne::write_labels(g->graph, labels->labels, out);
  });
}

void mhne_labels_free(mhne_labels* labels) { delete labels; }
size_t mhne_labels_count(const mhne_labels* labels) {
  return labels ? labels->labels.label_count() : 0;
}

mhne_status mhne_pairs_sample(const mhne_graph* g, size_t n_pos, size_t n_neg, uint64_t seed,
                              int holdout, mhne_pairs** out, mhne_graph** train_graph) {
  return guarded([&] {
    need(g, "graph");
    need(out, "out");
    auto sampled = mhne::sample_link_pairs(g->graph, n_pos, n_neg, seed, holdout != 0);
    auto pairs = std::make_unique<mhne_pairs>(mhne_pairs{std::move(sampled.sample)});
    if (train_graph) *train_graph = new mhne_graph{std::move(sampled.graph)};
    *out = pairs.release();
  });
}

mhne_status mhne_graph_without_positives(const mhne_graph* g, const mhne_pairs* pairs,
                                        mhne_graph** out) {
  return guarded([&] {
    need(g, "graph");
    need(pairs, "pairs");
    need(out, "out");
    std::vector<mhne::Graph::Edge> removed;
    for (const auto& p : pairs->sample.pairs)
      if (p.label == mhne::PairLabel::Positive) removed.emplace_back(p.u, p.v);
    *out = new mhne_graph{g->graph.without_edges(removed)};
  });
}

mhne_status mhne_pairs_load(const mhne_graph* g, const char* path, mhne_pairs** out) {
  return guarded([&] {
    need(g, "graph");
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) mhne::fail(mhne::ErrorKind::NotFound, std::string("file not found: ") + path);
    *out = new mhne_pairs{mhne::read_link_pairs(g->graph, in)};
  });
}

mhne_status mhne_pairs_save(const mhne_graph* g, const mhne_pairs* pairs, const char* path) {
  return guarded([&] {
    need(g, "graph");
    need(pairs, "pairs");
    auto out = open_output(path);
    mhne::write_link_pairs(g->graph, pairs->sample, out);
  });
}

void mhne_pairs_free(mhne_pairs* pairs) { delete pairs; }
size_t mhne_pairs_count(const mhne_pairs* pairs) { return pairs ? pairs->sample.pairs.size() : 0; }

void mhne_train_config_default(mhne_train_config* cfg) {
  if (!cfg) return;
  const mhne::TrainConfig d;
  *cfg = mhne_train_config{d.memories,      d.steps,        d.alpha,  d.beta1,
                           d.beta2,         d.learning_rate, d.weight_decay, d.epochs,
                           d.batch_size,    d.seed,          d.hops,   d.threads};
}

mhne_status mhne_train_config_validate(const mhne_train_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    from_c(*cfg).validate();
  });
}

mhne_status mhne_train(const mhne_graph* g, const mhne_train_config* cfg, mhne_epoch_fn on_epoch,
                       void* user, const char* loss_csv_path, mhne_model** out) {
  return guarded([&] {
    need(g, "graph");
    need(cfg, "config");
    need(out, "out");
    mhne::EpochCallback cb;
    if (on_epoch) {
      cb = [&](const mhne::EpochStat& s, const mhne::ModelParams& p) {
        mhne_model view;
        view.borrowed = &p;
        return on_epoch(s.epoch, s.mean_loss, s.wall_ms, &view, user) != 0;
      };
    }
    auto result = mhne::train(g->graph, from_c(*cfg), cb);
    if (loss_csv_path) {
      auto csv = open_output(loss_csv_path);
      mhne::write_loss_csv(result.history, csv);
    }
    *out = new mhne_model{std::move(result.params)};
  });
}

mhne_status mhne_model_load(const char* path, mhne_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mhne_model{mhne::load_checkpoint_file(path)};
  });
}

mhne_status mhne_model_save(const mhne_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    mhne::save_checkpoint_file(model->params(), path);
  });
}

void mhne_model_free(mhne_model* model) { delete model; }

void mhne_model_shape(const mhne_model* model, size_t* memories, size_t* nodes) {
  if (memories) *memories = model ? static_cast<size_t>(model->params().memories()) : 0;
  if (nodes) *nodes = model ? static_cast<size_t>(model->params().nodes()) : 0;
}

mhne_status mhne_energy_trace(const mhne_model* model, const mhne_graph* g, uint32_t node,
                              int steps, int hops, double* beta_weighted, double* verbatim) {
  return guarded([&] {
    need(model, "model");
    need(g, "graph");
    const auto& p = model->params();
    if (static_cast<Eigen::Index>(g->graph.node_count()) != p.nodes())
      mhne::fail(mhne::ErrorKind::InvalidArgument, "graph and checkpoint disagree on m");
    const auto ctx = mhne::context_vector(g->graph, node, hops);
    mhne::RetrieveOptions opts;
    opts.steps = steps;
    opts.trace = true;
    const auto state = mhne::retrieve(p, ctx, opts);
    // Re-run the recorded trajectory for the verbatim form.
    mhne::RetrievalState s = mhne::initial_state(p, ctx, steps, false);
    for (int t = 0; t <= steps; ++t) {
      if (beta_weighted) beta_weighted[t] = (*state.energy_trace)[t];
      if (verbatim) verbatim[t] = mhne::energy(p, s.v_target, ctx, mhne::EnergyForm::Verbatim);
      if (t < steps) s = mhne::retrieval_step(p, s, ctx);
    }
  });
}

void mhne_gradcheck_config_default(mhne_gradcheck_config* cfg) {
  if (!cfg) return;
  const mhne::GradcheckConfig d;
  *cfg = mhne_gradcheck_config{d.trials, d.nodes, d.memories, d.batch,
                               d.h,      d.tolerance, d.seed, 0};
}

mhne_status mhne_gradcheck(const mhne_gradcheck_config* cfg, mhne_gradcheck_result* result) {
  return guarded([&] {
    need(cfg, "config");
    need(result, "result");
    mhne::GradcheckConfig c;
    c.trials = cfg->trials;
    c.nodes = cfg->nodes;
    c.memories = cfg->memories;
    c.batch = cfg->batch;
    c.h = cfg->step;
    c.tolerance = cfg->tolerance;
    c.seed = cfg->seed;
    c.fault = cfg->inject_fault ? mhne::GradientFault::DropSoftmaxCentering
                                : mhne::GradientFault::None;
    const auto report = mhne::run_gradcheck(c);
    result->trials = static_cast<int>(report.trials.size());
    result->failures = 0;
    for (const auto& t : report.trials) result->failures += t.passed ? 0 : 1;
    result->max_relative_error = report.max_relative_error;
    result->passed = report.passed ? 1 : 0;
  });
}

mhne_status mhne_embed(const mhne_model* model, const mhne_graph* g, int hops,
                       mhne_embedding** out) {
  return guarded([&] {
    need(model, "model");
    need(g, "graph");
    need(out, "out");
    *out = new mhne_embedding{mhne::embed_all(model->params(), g->graph, hops)};
  });
}

mhne_status mhne_embedding_load(const char* path, mhne_embedding** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mhne_embedding{mhne::load_embeddings_file(path)};
  });
}

mhne_status mhne_embedding_save(const mhne_embedding* e, const char* path) {
  return guarded([&] {
    need(e, "embedding");
    need(path, "path");
    mhne::save_embeddings_file(e->matrix, path);
  });
}

void mhne_embedding_free(mhne_embedding* e) { delete e; }

void mhne_embedding_shape(const mhne_embedding* e, size_t* nodes, size_t* dimension) {
  if (nodes) *nodes = e ? static_cast<size_t>(e->matrix.node_count()) : 0;
  if (dimension) *dimension = e ? static_cast<size_t>(e->matrix.dimension()) : 0;
}

mhne_status mhne_embedding_row(const mhne_embedding* e, size_t node, double* out) {
  return guarded([&] {
    need(e, "embedding");
    need(out, "out");
    mhne::require(node < static_cast<size_t>(e->matrix.node_count()), "row index out of range");
    for (Eigen::Index c = 0; c < e->matrix.dimension(); ++c)
      out[c] = e->matrix.rows(static_cast<Eigen::Index>(node), c);
  });
}

void mhne_eval_config_default(mhne_eval_config* cfg) {
  if (!cfg) return;
  const mhne::EvalConfig d;
  *cfg = mhne_eval_config{d.runs,         d.train_fraction, d.logreg.l2, d.logreg.max_iter,
                          d.seed,         d.classify ? 1 : 0, d.link ? 1 : 0};
}

mhne_status mhne_evaluate(const mhne_embedding* e, const mhne_graph* g, const mhne_labels* labels,
                          const mhne_pairs* pairs, const mhne_eval_config* cfg,
                          mhne_report** out) {
  return guarded([&] {
    need(e, "embedding");
    need(g, "graph");
    need(cfg, "config");
    need(out, "out");
    mhne::EvalConfig c;
    c.runs = cfg->runs;
    c.train_fraction = cfg->train_fraction;
    c.logreg.l2 = cfg->l2;
    c.logreg.max_iter = cfg->max_iter;
    c.seed = cfg->seed;
    c.classify = cfg->classify != 0;
    c.link = cfg->link != 0;
    const auto aligned = mhne::align_to_graph(e->matrix, g->graph);
    *out = new mhne_report{mhne::evaluate(aligned, g->graph, labels ? &labels->labels : nullptr,
                                          pairs ? &pairs->sample : nullptr, c)};
  });
}

void mhne_report_free(mhne_report* r) { delete r; }

void mhne_report_get(const mhne_report* r, mhne_report_summary* out) {
  if (!out) return;
  *out = mhne_report_summary{};
  if (!r) return;
  const auto& rep = r->report;
  out->runs = rep.runs;
  if (rep.micro_f1) {
    out->has_classification = 1;
    out->micro_f1_mean = rep.micro_f1->mean;
    out->micro_f1_std = rep.micro_f1->stddev;
    out->macro_f1_mean = rep.macro_f1->mean;
    out->macro_f1_std = rep.macro_f1->stddev;
  }
  if (rep.link) {
    out->has_link = 1;
    out->auc = rep.link->auc;
    out->jaccard_auc = rep.jaccard->auc;
    out->link_pairs = rep.link_pairs;
  }
}

mhne_status mhne_report_write(const mhne_report* r, const char* prefix) {
  return guarded([&] {
    need(r, "report");
    need(prefix, "prefix");
    const std::string base(prefix);
    {
      auto out = open_output((base + ".txt").c_str());
      mhne::write_report_text(r->report, out);
    }
    {
      auto out = open_output((base + ".csv").c_str());
      mhne::write_report_csv(r->report, out);
    }
    if (r->report.link) {
      {
        auto out = open_output((base + "_roc.csv").c_str());
        mhne::write_roc_csv(*r->report.link, out);
      }
      {
        auto out = open_output((base + "_jaccard_roc.csv").c_str());
        mhne::write_roc_csv(*r->report.jaccard, out);
      }
      auto out = open_output((base + "_roc.svg").c_str());
      const std::pair<std::string, const mhne::RocResult*> curves[] = {
          {"embedding", &*r->report.link}, {"jaccard", &*r->report.jaccard}};
      mhne::write_roc_svg(curves, out);
    }
  });
}

}  // extern "C"
