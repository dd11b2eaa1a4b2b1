// mhne: train, embed, evaluate and inspect Hopfield node embeddings.
//
// Talks to the library only through the C interface in mhne/mhne.h.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhne/mhne.h"

namespace {

// Exit codes: 0 ok, 2 usage/input, 3 data format, 4 numeric failure.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitInterrupted = 130;

volatile std::sig_atomic_t g_interrupted = 0;

void on_sigint(int) { g_interrupted = 1; }

struct CliError {
  int code;
  std::string message;
};

int exit_code(mhne_status s) {
  switch (s) {
    case MHNE_OK: return kExitOk;
    case MHNE_ERR_INVALID_ARGUMENT:
    case MHNE_ERR_NOT_FOUND: return kExitUsage;
    case MHNE_ERR_FORMAT: return kExitFormat;
    case MHNE_ERR_NUMERIC: return kExitNumeric;
    default: return kExitInternal;
  }
}

void check(mhne_status s, const std::string& context) {
  if (s == MHNE_OK) return;
  const char* kind = s == MHNE_ERR_FORMAT    ? "format error"
                     : s == MHNE_ERR_NUMERIC ? "numeric failure"
                                             : "error";
  throw CliError{exit_code(s), context + ": " + kind + ": " + mhne_last_error()};
}

[[noreturn]] void usage_error(const std::string& msg) { throw CliError{kExitUsage, msg}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Graph = std::unique_ptr<mhne_graph, Deleter<mhne_graph, mhne_graph_free>>;
using Labels = std::unique_ptr<mhne_labels, Deleter<mhne_labels, mhne_labels_free>>;
using Pairs = std::unique_ptr<mhne_pairs, Deleter<mhne_pairs, mhne_pairs_free>>;
using Model = std::unique_ptr<mhne_model, Deleter<mhne_model, mhne_model_free>>;
using Embedding = std::unique_ptr<mhne_embedding, Deleter<mhne_embedding, mhne_embedding_free>>;
using Report = std::unique_ptr<mhne_report, Deleter<mhne_report, mhne_report_free>>;

struct Options {
  std::string edges;
  std::string labels;
  std::string checkpoint = "model.ckpt";
  std::string embeddings;
  std::string pairs;
  std::string out;
  std::string loss_csv;
  std::string task = "both";
  std::string blocks = "30,30";
  mhne_train_config train{};
  mhne_eval_config eval{};
  mhne_gradcheck_config gradcheck{};
  std::size_t link_pairs = 500;
  bool holdout_links = false;
  bool directed = false;
  bool quiet = false;
  long long node = -1;
  double p_in = 0.5;
  double p_out = 0.05;
};

Graph load_graph(const Options& o) {
  if (o.edges.empty()) usage_error("--edges is required");
  mhne_graph* g = nullptr;
  check(mhne_graph_load(o.edges.c_str(), o.directed ? 1 : 0, &g), "loading " + o.edges);
  return Graph(g);
}

// The graph the model is trained and embedded on: the input graph, or with
// --holdout-links the input minus the sampled positive pairs.
Graph training_graph(const Options& o, const Graph& full, Pairs* pairs_out = nullptr) {
  if (!o.holdout_links) return nullptr;
  mhne_pairs* pairs = nullptr;
  mhne_graph* held = nullptr;
  check(mhne_pairs_sample(full.get(), o.link_pairs, o.link_pairs, o.eval.seed, 1, &pairs, &held),
        "sampling link pairs (see --link-pairs)");
  Pairs owned(pairs);
  if (pairs_out) *pairs_out = std::move(owned);
  return Graph(held);
}

void add_train_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--k", o.train.memories, "number of stored memories K");
  cmd->add_option("--steps", o.train.steps, "retrieval steps T");
  cmd->add_option("--alpha", o.train.alpha, "update rate");
  cmd->add_option("--beta1", o.train.beta1, "target inverse temperature");
  cmd->add_option("--beta2", o.train.beta2, "context inverse temperature");
  cmd->add_option("--lr", o.train.learning_rate, "Adam learning rate");
  cmd->add_option("--wd", o.train.weight_decay, "decoupled weight decay");
  cmd->add_option("--epochs", o.train.epochs, "training epochs");
  cmd->add_option("--batch", o.train.batch_size, "batch size");
  cmd->add_option("--threads", o.train.threads, "worker threads (0: HE_THREADS or all cores)");
}

void add_graph_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--edges", o.edges, "edge list file");
  cmd->add_flag("--directed", o.directed, "input edges are directed (symmetrized on load)");
}

void add_seed_flag(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.train.seed, "random seed")->each([&o](const std::string& s) {
    const auto seed = std::stoull(s);
    o.eval.seed = seed;
    o.gradcheck.seed = seed;
  });
}

void add_holdout_flags(CLI::App* cmd, Options& o) {
  cmd->add_flag("--holdout-links", o.holdout_links,
                "remove sampled positive link pairs from the training graph");
  cmd->add_option("--link-pairs", o.link_pairs, "positive and negative link pairs to sample");
}

int cmd_train(const Options& o) {
  Graph full = load_graph(o);
  check(mhne_train_config_validate(&o.train), "config");
  Pairs pairs;
  Graph held = training_graph(o, full, &pairs);
  const mhne_graph* g = held ? held.get() : full.get();
  if (pairs) check(mhne_pairs_save(full.get(), pairs.get(), (o.checkpoint + ".pairs").c_str()),
                   "writing pairs");

  struct Progress {
    bool quiet;
    int epochs;
  } progress{o.quiet, o.train.epochs};
  auto on_epoch = [](int epoch, double loss, double ms, const mhne_model*, void* user) -> int {
    auto* p = static_cast<Progress*>(user);
    if (!p->quiet && (epoch == 1 || epoch % 10 == 0 || epoch == p->epochs))
      std::fprintf(stderr, "epoch %d/%d loss %.6f (%.1f ms)\n", epoch, p->epochs, loss, ms);
    return g_interrupted ? 0 : 1;
  };

  std::signal(SIGINT, on_sigint);
  const std::string loss_csv = o.loss_csv.empty() ? o.checkpoint + ".loss.csv" : o.loss_csv;
  mhne_model* model = nullptr;
  check(mhne_train(g, &o.train, on_epoch, &progress, loss_csv.c_str(), &model), "training");
  Model owned(model);
  check(mhne_model_save(owned.get(), o.checkpoint.c_str()), "writing checkpoint");
  check(mhne_graph_save_id_map(g, (o.checkpoint + ".ids").c_str()), "writing id map");
  std::signal(SIGINT, SIG_DFL);
  if (g_interrupted) {
    std::cerr << "interrupted; checkpoint written to " << o.checkpoint << '\n';
    return kExitInterrupted;
  }
  if (!o.quiet) std::cerr << "checkpoint written to " << o.checkpoint << '\n';
  return kExitOk;
}

int cmd_embed(const Options& o) {
  Graph full = load_graph(o);
  Graph held = training_graph(o, full);
  const mhne_graph* g = held ? held.get() : full.get();
  mhne_model* model = nullptr;
  check(mhne_model_load(o.checkpoint.c_str(), &model), "loading " + o.checkpoint);
  Model owned(model);
  mhne_embedding* emb = nullptr;
  check(mhne_embed(owned.get(), g, o.train.hops, &emb), "embedding");
  Embedding e(emb);
  const std::string out = o.out.empty() ? "embeddings.txt" : o.out;
  check(mhne_embedding_save(e.get(), out.c_str()), "writing " + out);
  if (!o.quiet) std::cerr << "embeddings written to " << out << '\n';
  return kExitOk;
}

int cmd_eval(Options o) {
  if (o.task != "classify" && o.task != "link" && o.task != "both")
    usage_error("--task must be classify, link or both");
  if (o.embeddings.empty()) usage_error("--embeddings is required");
  o.eval.classify = o.task != "link";
  o.eval.link = o.task != "classify";
  if (o.eval.classify && o.labels.empty()) {
    if (o.task == "classify") usage_error("--task classify needs --labels");
    std::cerr << "warning: no --labels given; running link prediction only\n";
    o.eval.classify = 0;
  }

  Graph full = load_graph(o);
  Labels labels;
  if (o.eval.classify) {
    mhne_labels* l = nullptr;
    check(mhne_labels_load(full.get(), o.labels.c_str(), &l), "loading " + o.labels);
    labels.reset(l);
  }

  Pairs pairs;
  Graph held;
  if (o.eval.link) {
    if (!o.pairs.empty()) {
      mhne_pairs* p = nullptr;
      check(mhne_pairs_load(full.get(), o.pairs.c_str(), &p), "loading " + o.pairs);
      pairs.reset(p);
      if (o.holdout_links) {
        mhne_graph* h = nullptr;
        check(mhne_graph_without_positives(full.get(), pairs.get(), &h), "removing held-out edges");
        held.reset(h);
      }
    } else {
      mhne_pairs* p = nullptr;
      mhne_graph* h = nullptr;
      check(mhne_pairs_sample(full.get(), o.link_pairs, o.link_pairs, o.eval.seed,
                              o.holdout_links ? 1 : 0, &p, &h),
            "sampling link pairs (see --link-pairs)");
      pairs.reset(p);
      held.reset(h);
    }
  }
  const mhne_graph* g = held ? held.get() : full.get();

  mhne_embedding* emb = nullptr;
  check(mhne_embedding_load(o.embeddings.c_str(), &emb), "loading " + o.embeddings);
  Embedding e(emb);

  mhne_report* report = nullptr;
  check(mhne_evaluate(e.get(), g, labels.get(), pairs.get(), &o.eval, &report), "evaluating");
  Report r(report);
  const std::string prefix = o.out.empty() ? "report" : o.out;
  check(mhne_report_write(r.get(), prefix.c_str()), "writing report");

  mhne_report_summary s{};
  mhne_report_get(r.get(), &s);
  if (s.has_classification)
    std::printf("micro_f1 %.4f +/- %.4f\nmacro_f1 %.4f +/- %.4f\nruns %d\n", s.micro_f1_mean,
                s.micro_f1_std, s.macro_f1_mean, s.macro_f1_std, s.runs);
  if (s.has_link)
    std::printf("auc %.4f\njaccard_auc %.4f\npairs %zu\n", s.auc, s.jaccard_auc, s.link_pairs);
  return kExitOk;
}

// 1e-4 rather than 0.0001 or 1.000000e-04.
std::string short_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  std::string s(buf);
  const auto e = s.find('e');
  std::string mant = s.substr(0, e);
  mant.erase(mant.find_last_not_of('0') + 1);
  if (mant.back() == '.') mant.pop_back();
  int exp = std::stoi(s.substr(e + 1));
  return mant + "e" + std::to_string(exp);
}

int cmd_gradcheck(const Options& o) {
  mhne_gradcheck_result res{};
  check(mhne_gradcheck(&o.gradcheck, &res), "gradcheck");
  std::printf("%s rel_err<%s (max %.3g over %d trials, %d failed)\n", res.passed ? "PASS" : "FAIL",
              short_sci(o.gradcheck.tolerance).c_str(), res.max_relative_error, res.trials, res.failures);
  return res.passed ? kExitOk : kExitNumeric;
}

int cmd_energy_trace(const Options& o) {
  if (o.node < 0) usage_error("--node is required");
  Graph g = load_graph(o);
  mhne_model* model = nullptr;
  check(mhne_model_load(o.checkpoint.c_str(), &model), "loading " + o.checkpoint);
  Model owned(model);
  std::uint32_t dense = 0;
  check(mhne_graph_dense_index(g.get(), o.node, &dense), "node lookup");
  const int steps = o.train.steps;
  if (steps < 1) usage_error("--steps must be >= 1");
  std::vector<double> beta(steps + 1), verbatim(steps + 1);
  check(mhne_energy_trace(owned.get(), g.get(), dense, steps, o.train.hops, beta.data(),
                          verbatim.data()),
        "energy trace");

  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) usage_error("cannot open for writing: " + o.out);
  }
  std::ostream& out = o.out.empty() ? std::cout : file;
  out << "step,energy,energy_verbatim\n";
  char buf[96];
  for (int t = 0; t <= steps; ++t) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", t, beta[t], verbatim[t]);
    out << buf;
  }
  return kExitOk;
}

int cmd_sample_pairs(const Options& o) {
  Graph full = load_graph(o);
  mhne_pairs* p = nullptr;
  mhne_graph* h = nullptr;
  check(mhne_pairs_sample(full.get(), o.link_pairs, o.link_pairs, o.eval.seed,
                          o.holdout_links ? 1 : 0, &p, &h),
        "sampling link pairs (see --link-pairs)");
  Pairs pairs(p);
  Graph held(h);
  const std::string out = o.out.empty() ? "pairs.txt" : o.out;
  check(mhne_pairs_save(full.get(), pairs.get(), out.c_str()), "writing " + out);
  if (o.holdout_links)
    check(mhne_graph_save_edges(held.get(), (out + ".train.edges").c_str()), "writing train graph");
  if (!o.quiet)
    std::cerr << mhne_pairs_count(pairs.get()) << " pairs written to " << out << '\n';
  return kExitOk;
}

int cmd_sbm(const Options& o) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(o.blocks);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      sizes.push_back(std::stoul(tok));
    } catch (...) {
      usage_error("--blocks must be a comma-separated list of sizes");
    }
  }
  mhne_graph* g = nullptr;
  mhne_labels* l = nullptr;
  check(mhne_graph_sbm(sizes.data(), sizes.size(), o.p_in, o.p_out, o.train.seed, &g, &l),
        "generating SBM");
  Graph graph(g);
  Labels labels(l);
  const std::string prefix = o.out.empty() ? "sbm" : o.out;
  check(mhne_graph_save_edges(graph.get(), (prefix + ".edges").c_str()), "writing edges");
  check(mhne_labels_save(graph.get(), labels.get(), (prefix + ".labels").c_str()),
        "writing labels");
  if (!o.quiet)
    std::cerr << mhne_graph_node_count(graph.get()) << " nodes, "
              << mhne_graph_edge_count(graph.get()) << " edges written to " << prefix
              << ".edges\n";
  return kExitOk;
}

// key=value config file spliced in right after the subcommand, so flags
// given on the command line take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty() || rest.size() < 2) return rest;
  std::ifstream in(path);
  if (!in) throw CliError{kExitUsage, "config file not found: " + path};
  std::vector<std::string> injected;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError{kExitUsage, path + ":" + std::to_string(lineno) + ": expected key=value"};
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    injected.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  std::vector<std::string> out{rest[0], rest[1]};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + 2, rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  mhne_train_config_default(&o.train);
  mhne_eval_config_default(&o.eval);
  mhne_gradcheck_config_default(&o.gradcheck);

  CLI::App app{"Hopfield-network node embeddings: train, embed, evaluate"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", std::string(mhne_version()));

  auto* train = app.add_subcommand("train", "train memory matrices on a graph");
  add_graph_flags(train, o);
  add_train_flags(train, o);
  add_seed_flag(train, o);
  add_holdout_flags(train, o);
  train->add_option("--hops", o.train.hops, "context radius in hops");
  train->add_option("--checkpoint", o.checkpoint, "checkpoint output path");
  train->add_option("--loss-csv", o.loss_csv, "per-epoch loss CSV (default <checkpoint>.loss.csv)");
  train->add_flag("--quiet", o.quiet, "no progress output");

  auto* embed = app.add_subcommand("embed", "write node embeddings from a checkpoint");
  add_graph_flags(embed, o);
  add_seed_flag(embed, o);
  add_holdout_flags(embed, o);
  embed->add_option("--checkpoint", o.checkpoint, "checkpoint to read");
  embed->add_option("--hops", o.train.hops, "context radius in hops");
  embed->add_option("--out", o.out, "embedding output path (default embeddings.txt)");
  embed->add_flag("--quiet", o.quiet, "no progress output");

  auto* eval = app.add_subcommand("eval", "node classification and link prediction");
  add_graph_flags(eval, o);
  add_seed_flag(eval, o);
  add_holdout_flags(eval, o);
  eval->add_option("--embeddings", o.embeddings, "embedding file");
  eval->add_option("--labels", o.labels, "labels file: node_id label[,label...]");
  eval->add_option("--pairs", o.pairs, "link pair file (default: sample from --edges)");
  eval->add_option("--task", o.task, "classify, link or both");
  eval->add_option("--runs", o.eval.runs, "classification runs");
  eval->add_option("--split", o.eval.train_fraction, "train fraction per run");
  eval->add_option("--l2", o.eval.l2, "logistic regression L2 strength");
  eval->add_option("--out", o.out, "report path prefix (default report)");

  auto* grad = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  add_seed_flag(grad, o);
  grad->add_option("--trials", o.gradcheck.trials, "random instances");
  grad->add_option("--fd-step", o.gradcheck.step, "central-difference step");
  grad->add_option("--tol", o.gradcheck.tolerance, "relative error tolerance");
  grad->add_flag("--inject-fault", o.gradcheck.inject_fault, "test hook: corrupt the gradient");

  auto* energy = app.add_subcommand("energy-trace", "energy along one retrieval");
  add_graph_flags(energy, o);
  energy->add_option("--checkpoint", o.checkpoint, "checkpoint to read");
  energy->add_option("--node", o.node, "original node id");
  energy->add_option("--steps", o.train.steps, "retrieval steps");
  energy->add_option("--hops", o.train.hops, "context radius in hops");
  energy->add_option("--out", o.out, "CSV output (default stdout)");

  auto* sample = app.add_subcommand("sample-pairs", "sample link-prediction pairs");
  add_graph_flags(sample, o);
  add_seed_flag(sample, o);
  add_holdout_flags(sample, o);
  sample->add_option("--out", o.out, "pair file (default pairs.txt)");
  sample->add_flag("--quiet", o.quiet, "no progress output");

  auto* sbm = app.add_subcommand("sbm", "generate a planted-partition graph with labels");
  add_seed_flag(sbm, o);
  sbm->add_option("--blocks", o.blocks, "comma-separated block sizes");
  sbm->add_option("--p-in", o.p_in, "edge probability inside a block");
  sbm->add_option("--p-out", o.p_out, "edge probability across blocks");
  sbm->add_option("--out", o.out, "output prefix (default sbm)");
  sbm->add_flag("--quiet", o.quiet, "no progress output");

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args);
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      const int rc = app.exit(e);
      return rc == 0 ? kExitOk : kExitUsage;
    }

    if (*train) return cmd_train(o);
    if (*embed) return cmd_embed(o);
    if (*eval) return cmd_eval(o);
    if (*grad) return cmd_gradcheck(o);
    if (*energy) return cmd_energy_trace(o);
    if (*sample) return cmd_sample_pairs(o);
    if (*sbm) return cmd_sbm(o);
  } catch (const CliError& e) {
    std::cerr << "mhne: " << e.message << '\n';
    return e.code;
  }
  return kExitUsage;
}
