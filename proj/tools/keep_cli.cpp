// keep: command-line driver for the embedding pipeline.
//
// Every stage reads and writes plain files inside a working directory
// (--dir, default "."), so the default file names chain from one stage to
// the next. Exit codes: 2 missing/bad input, 3 invalid configuration or
// usage, 4 numerical failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "keep/config.hpp"
#include "keep/cooccurrence.hpp"
#include "keep/embedding.hpp"
#include "keep/error.hpp"
#include "keep/evaluation.hpp"
#include "keep/keep_trainer.hpp"
#include "keep/ontology.hpp"
#include "keep/sgns.hpp"
#include "keep/synthdata.hpp"
#include "keep/walks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.3.0";

class MissingInput : public keep::InputError {
 public:
  explicit MissingInput(const fs::path& p)
      : keep::InputError("input file not found: " + p.string()) {}
};

struct Common {
  fs::path dir = ".";
  fs::path config;
  fs::path manifest;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  bool parallel = false;
  int threads = 0;
};

void add_common(CLI::App* app, Common& c, bool stochastic) {
  app->add_option("--dir", c.dir, "Working directory for default file names");
  app->add_option("--manifest", c.manifest, "Manifest path (default <dir>/<stage>.manifest.json)");
  if (stochastic) {
    app->add_option("--config", c.config, "key=value configuration file");
    app->add_option("--seed", c.seed, "Random seed");
    app->add_flag("--deterministic", c.deterministic, "Single-worker reproducible mode (default)");
    app->add_flag("--parallel", c.parallel, "Lock-free multi-threaded mode");
    app->add_option("--threads", c.threads, "Worker threads (0: all; default $KEEP_THREADS)");
  }
}

fs::path or_default(const fs::path& given, const Common& c, const char* name) {
  return given.empty() ? c.dir / name : given;
}

fs::path require(const fs::path& p) {
  if (!fs::exists(p)) throw MissingInput(p);
  return p;
}

std::ifstream open_in(const fs::path& p) {
  require(p);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw keep::InputError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw keep::InputError("cannot write " + p.string());
  return out;
}

std::string sha256(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    static const char* hex = "0123456789abcdef";
    os << hex[md[i] >> 4] << hex[md[i] & 15];
  }
  return os.str();
}

struct Manifest {
  std::string stage;
  json config = json::object();
  std::vector<fs::path> inputs, outputs;
};

void write_manifest(const Manifest& m, const Common& c) {
  json j;
  j["tool"] = "keep";
  j["version"] = kVersion;
  j["stage"] = m.stage;
  j["config"] = m.config;
  auto files = [](const std::vector<fs::path>& paths) {
    json arr = json::array();
    for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"sha256", sha256(p)}});
    return arr;
  };
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  const fs::path path = c.manifest.empty() ? c.dir / (m.stage + ".manifest.json") : c.manifest;
  open_out(path) << j.dump(2) << '\n';
}

json to_json(const keep::KeyValues& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

// Config file first, then explicit flags on top.
keep::KeyValues merged(const Common& c, const keep::KeyValues& flags) {
  keep::KeyValues kv;
  if (!c.config.empty()) kv = keep::read_key_values(require(c.config));
  for (const auto& [k, v] : flags) kv[k] = v;
  if (c.seed) kv["rng_seed"] = std::to_string(*c.seed);
  if (c.deterministic && c.parallel) {
    throw keep::ConfigError("deterministic", "--deterministic and --parallel are exclusive");
  }
  return kv;
}

template <typename T>
void put(keep::KeyValues& kv, const char* key, const std::optional<T>& v) {
  if (!v) return;
  std::ostringstream os;
  os.precision(17);
  if constexpr (std::is_same_v<T, bool>) {
    os << (*v ? "true" : "false");
  } else {
    os << *v;
  }
  kv[key] = os.str();
}

void put_mode(keep::KeyValues& kv, const Common& c) {
  if (c.deterministic) kv["deterministic"] = "true";
  if (c.parallel) kv["deterministic"] = "false";
  kv["threads"] = std::to_string(c.threads);
}

keep::Ontology load_graph(const fs::path& p) {
  auto in = open_in(p);
  const auto edges = keep::read_edge_list(in);
  if (edges.empty()) throw keep::InputError(p.string() + " has no edges");
  return keep::Ontology::from_edges(edges, keep::infer_root(edges));
}

std::vector<keep::ConceptId> load_vocab_ids(const fs::path& p) {
  auto in = open_in(p);
  std::vector<keep::ConceptId> ids;
  for (const auto& e : keep::read_vocabulary(in)) ids.push_back(e.id);
  return ids;
}

void check_vocab(const keep::Ontology& ont, const std::vector<keep::ConceptId>& ids,
                 const fs::path& vocab) {
  if (!std::equal(ont.ids().begin(), ont.ids().end(), ids.begin(), ids.end())) {
    throw keep::InputError(vocab.string() + " does not describe the graph's concepts");
  }
}

keep::CooccurrenceMatrix load_cooc(const fs::path& p) {
  auto in = open_in(p);
  return keep::read_cooccurrence(in);
}

keep::EmbeddingMatrix load_emb(const fs::path& p) {
  require(p);
  return keep::load_embedding(p);
}

// "name=path" or a bare path (name = file stem).
std::pair<std::string, fs::path> split_named(const std::string& spec, const Common& c) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    fs::path p = spec;
    if (p.is_relative() && !fs::exists(p)) p = c.dir / p;
    return {p.stem().string(), p};
  }
  fs::path p = spec.substr(eq + 1);
  if (p.is_relative() && !fs::exists(p)) p = c.dir / p;
  return {spec.substr(0, eq), p};
}

// ---------------------------------------------------------------- stages

struct GenSynth {
  Common c;
  std::optional<int> n_concepts, n_patients, n_clusters, cluster_size;
  std::optional<double> within, background;
  int max_depth = keep::kDefaultDepthLimit;

  void run() {
    keep::KeyValues flags;
    put(flags, "n_concepts", n_concepts);
    put(flags, "n_patients", n_patients);
    put(flags, "n_clusters", n_clusters);
    put(flags, "cluster_size", cluster_size);
    put(flags, "within_cluster_rate", within);
    put(flags, "background_rate", background);
    keep::SynthConfig cfg;
    keep::apply_key_values(merged(c, flags), cfg);

    const auto full = keep::generate_ontology(cfg);
    const auto pruned = keep::prune_to_depth(full, max_depth);
    const auto truth = keep::plant_clusters(pruned.ontology, cfg);
    const auto cohort = keep::generate_patients(full, truth, cfg);

    Manifest m{"gen-synth", to_json(keep::to_key_values(cfg)), {}, {}};
    m.config["max_depth"] = max_depth;
    const fs::path edges = c.dir / "ontology.tsv", concepts = c.dir / "concepts.tsv",
                   patients = c.dir / "patients.tsv", rel = c.dir / "relationships.tsv";
    {
      auto out = open_out(edges);
      keep::write_edge_list(out, full);
    }
    {
      auto out = open_out(concepts);
      keep::write_vocabulary(out, full);
    }
    {
      auto out = open_out(patients);
      keep::write_patients(out, cohort.patients);
    }
    {
      auto out = open_out(rel);
      const auto sets = truth.relationship_sets(pruned.ontology);
      keep::write_relationship_sets(out, sets);
    }
    m.outputs = {edges, concepts, patients, rel};
    write_manifest(m, c);

    const auto x = keep::build_cooccurrence(cohort.patients, pruned.rollup, pruned.ontology);
    const auto lift = keep::check_planted_lift(x, pruned.ontology, truth, cohort.patients.size());
    std::cout << "concepts " << full.size() << " (retained at depth " << max_depth << ": "
              << pruned.ontology.size() << "), patients " << cohort.patients.size()
              << ", clusters " << truth.clusters.size() << "\n"
              << "planted pair rate " << lift.planted_rate << " vs average pair "
              << lift.background_rate << " (one-sided p " << lift.p_value << ")\n";
    if (!lift.passed) std::cerr << "warning: planted pairs show no significant lift\n";
  }
};

struct BuildGraph {
  Common c;
  fs::path edges, labels;
  std::optional<std::uint64_t> root;
  int max_depth = keep::kDefaultDepthLimit;

  void run() {
    const fs::path in_path = or_default(edges, c, "ontology.tsv");
    auto in = open_in(in_path);
    const auto list = keep::read_edge_list(in);
    const keep::ConceptId r = root ? keep::ConceptId(*root) : keep::infer_root(list);
    keep::LoadReport report;
    const auto ont = keep::Ontology::from_edges(list, r, &report);
    if (max_depth < 1) throw keep::ConfigError("max_depth", "must be >= 1");
    auto pruned = keep::prune_to_depth(ont, max_depth);

    Manifest m{"build-graph", {{"max_depth", max_depth}, {"root", r.value}}, {in_path}, {}};
    const fs::path label_path = labels.empty() ? c.dir / "concepts.tsv" : labels;
    if (!labels.empty() || fs::exists(label_path)) {
      auto lin = open_in(label_path);
      auto entries = keep::read_vocabulary(lin);
      std::erase_if(entries, [&](const keep::VocabularyEntry& e) {
        return !pruned.ontology.contains(e.id);
      });
      keep::apply_labels(pruned.ontology, entries);
      m.inputs.push_back(label_path);
    }
    const fs::path graph = c.dir / "graph.tsv", vocab = c.dir / "vocab.tsv",
                   rollup = c.dir / "rollup.tsv";
    {
      auto out = open_out(graph);
      keep::write_edge_list(out, pruned.ontology);
    }
    {
      auto out = open_out(vocab);
      keep::write_vocabulary(out, pruned.ontology);
    }
    {
      auto out = open_out(rollup);
      keep::write_rollup(out, pruned.rollup);
    }
    m.outputs = {graph, vocab, rollup};
    write_manifest(m, c);
    std::cout << "nodes " << ont.size() << ", retained " << pruned.ontology.size()
              << ", rolled up " << pruned.rollup.size() << ", unreachable dropped "
              << report.unreachable.size() << ", duplicate edges " << report.duplicate_edges
              << "\n";
  }
};

struct Walk {
  Common c;
  fs::path graph, vocab, out;
  std::optional<int> walk_length, walks_per_node;
  std::optional<double> p, q;

  void run() {
    keep::KeyValues flags;
    put(flags, "walk_length", walk_length);
    put(flags, "walks_per_node", walks_per_node);
    put(flags, "p", p);
    put(flags, "q", q);
    flags["threads"] = std::to_string(c.threads);
    keep::WalkConfig cfg;
    keep::apply_key_values(merged(c, flags), cfg);

    const fs::path g = or_default(graph, c, "graph.tsv"), v = or_default(vocab, c, "vocab.tsv");
    const auto ont = load_graph(g);
    check_vocab(ont, load_vocab_ids(v), v);
    const auto corpus = keep::generate_walks(ont, cfg);
    const fs::path o = or_default(out, c, "walks.txt");
    {
      auto os = open_out(o);
      keep::write_corpus(os, corpus);
    }
    auto snapshot = keep::to_key_values(cfg);
    snapshot.erase("threads");
    write_manifest({"walk", to_json(snapshot), {g, v}, {o}}, c);
    std::cout << "walks " << corpus.size() << ", tokens " << corpus.token_count() << "\n";
  }
};

struct TrainN2v {
  Common c;
  fs::path walks, vocab, out, loss_trace;
  std::optional<int> dim, window, negatives, epochs, batch_size, min_count;
  std::optional<double> learning_rate;
  bool binary = false;

  void run() {
    keep::KeyValues flags;
    put(flags, "dim", dim);
    put(flags, "window", window);
    put(flags, "negatives", negatives);
    put(flags, "epochs", epochs);
    put(flags, "batch_size", batch_size);
    put(flags, "min_count", min_count);
    put(flags, "learning_rate", learning_rate);
    put_mode(flags, c);
    keep::SgnsConfig cfg;
    keep::apply_key_values(merged(c, flags), cfg);

    const fs::path w = or_default(walks, c, "walks.txt"), v = or_default(vocab, c, "vocab.tsv");
    const auto ids = load_vocab_ids(v);
    auto in = open_in(w);
    const auto corpus = keep::read_corpus(in, ids.size());
    std::vector<double> losses;
    auto anchor = keep::train_sgns(corpus, cfg, &losses);
    anchor.set_ids(ids);
    const fs::path o = or_default(out, c, "anchor.emb");
    require_parent(o);
    keep::save_embedding(o, anchor, binary);
    Manifest m{"train-n2v", to_json(keep::to_key_values(cfg)), {w, v}, {o}};
    m.config.erase("threads");
    if (!loss_trace.empty()) {
      auto os = open_out(loss_trace);
      keep::write_loss_trace(os, losses);
      m.outputs.push_back(loss_trace);
    }
    write_manifest(m, c);
    std::cout << "anchor " << anchor.rows() << "x" << anchor.dim() << ", final epoch loss "
              << losses.back() << "\n";
  }

  static void require_parent(const fs::path& o) {
    if (o.has_parent_path()) fs::create_directories(o.parent_path());
  }
};

struct BuildCooc {
  Common c;
  fs::path patients, graph, vocab, rollup, out;
  bool strict = false;
  int min_occurrences = 2;

  void run() {
    const fs::path pp = or_default(patients, c, "patients.tsv"),
                   g = or_default(graph, c, "graph.tsv"), v = or_default(vocab, c, "vocab.tsv"),
                   r = or_default(rollup, c, "rollup.tsv");
    const auto ont = load_graph(g);
    check_vocab(ont, load_vocab_ids(v), v);
    auto rin = open_in(r);
    const auto roll = keep::read_rollup(rin);
    auto pin = open_in(pp);
    const auto records = keep::read_patients(pin);
    if (min_occurrences < 1) throw keep::ConfigError("min_occurrences", "must be >= 1");
    keep::CooccurrenceOptions opts;
    opts.phenotype.unknown =
        strict ? keep::UnknownConceptPolicy::error : keep::UnknownConceptPolicy::skip;
    opts.phenotype.min_occurrences = min_occurrences;
    opts.threads = c.threads;
    keep::CooccurrenceStats stats;
    const auto x = keep::build_cooccurrence(records, roll, ont, opts, &stats);
    const fs::path o = or_default(out, c, "cooc.tsv");
    {
      auto os = open_out(o);
      keep::write_cooccurrence(os, x);
    }
    write_manifest({"build-cooc",
                    {{"min_occurrences", min_occurrences}, {"strict_unknown", strict}},
                    {pp, g, v, r},
                    {o}},
                   c);
    if (stats.unknown_events > 0) {
      std::cerr << "warning: skipped " << stats.unknown_events << " events with unknown concepts\n";
    }
    std::cout << "patients " << stats.patients << ", nonzero pairs " << x.nnz()
              << ", total count " << x.total() << "\n";
  }
};

struct TrainKeep {
  Common c;
  bool glove = false;
  fs::path cooc, anchor, vocab, out, loss_trace;
  std::optional<int> dim, epochs, batch_size;
  std::optional<double> learning_rate, lambda, alpha, x_max_percentile, weight_decay;
  bool no_bias = false;
  bool binary = false;

  void run() {
    keep::KeyValues flags;
    put(flags, "dim", dim);
    put(flags, "epochs", epochs);
    put(flags, "batch_size", batch_size);
    put(flags, "learning_rate", learning_rate);
    put(flags, "lambda", lambda);
    put(flags, "alpha", alpha);
    put(flags, "x_max_percentile", x_max_percentile);
    put(flags, "weight_decay", weight_decay);
    if (no_bias) flags["use_bias"] = "false";
    put_mode(flags, c);
    keep::KeepConfig cfg;
    auto kv = merged(c, flags);
    if (glove) {
      if (kv.contains("lambda") && kv["lambda"] != "0") {
        throw keep::ConfigError("lambda", "plain GloVe has no anchor term");
      }
      kv.erase("lambda");
    }
    keep::apply_key_values(kv, cfg);
    if (glove) cfg.lambda = 0.0;

    const fs::path x_path = or_default(cooc, c, "cooc.tsv"), v = or_default(vocab, c, "vocab.tsv");
    const auto x = load_cooc(x_path);
    const auto ids = load_vocab_ids(v);
    if (ids.size() != x.vocab_size()) {
      throw keep::InputError(v.string() + " lists " + std::to_string(ids.size()) +
                             " concepts but the matrix has V=" + std::to_string(x.vocab_size()));
    }
    Manifest m{glove ? "train-glove" : "train-keep", to_json(keep::to_key_values(cfg)),
               {x_path, v}, {}};
    m.config.erase("threads");
    keep::KeepTrainResult res;
    if (glove) {
      res = keep::train_glove(x, cfg);
    } else {
      const fs::path a = or_default(anchor, c, "anchor.emb");
      const auto aligned = keep::align_rows(load_emb(a), ids);
      m.inputs.push_back(a);
      res = keep::train_keep(x, &aligned, cfg);
    }
    auto final_emb = keep::export_final(res.model);
    final_emb.set_ids(ids);
    const fs::path o = or_default(out, c, glove ? "glove.emb" : "keep.emb");
    TrainN2v::require_parent(o);
    keep::save_embedding(o, final_emb, binary);
    const fs::path trace =
        or_default(loss_trace, c, glove ? "glove_loss.csv" : "keep_loss.csv");
    {
      auto os = open_out(trace);
      keep::write_loss_trace(os, res.loss_trace);
    }
    m.outputs = {o, trace};
    write_manifest(m, c);
    std::cout << (glove ? "glove " : "keep ") << final_emb.rows() << "x" << final_emb.dim()
              << ", loss " << res.loss_trace.front() << " -> " << res.loss_trace.back() << "\n";
  }
};

std::vector<std::pair<std::string, fs::path>> resolve_embeddings(
    const std::vector<std::string>& specs, const Common& c,
    const std::vector<std::string>& defaults) {
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& s : specs.empty() ? defaults : specs) out.push_back(split_named(s, c));
  return out;
}

struct EvalImpact {
  Common c;
  std::vector<std::string> embs;
  fs::path graph, cooc, out;
  int repetitions = 250, top_k = 10, sample = 150;
  bool pearson = false;

  void run() {
    const fs::path g = or_default(graph, c, "graph.tsv"), x_path = or_default(cooc, c, "cooc.tsv");
    const auto ont = load_graph(g);
    const auto x = load_cooc(x_path);
    const auto ic = keep::information_content(ont);
    keep::ImpactConfig cfg;
    cfg.repetitions = repetitions;
    cfg.top_k = top_k;
    cfg.random_sample = sample;
    cfg.correlation = pearson ? keep::CorrelationKind::pearson : keep::CorrelationKind::spearman;
    cfg.rng_seed = c.seed.value_or(0);
    cfg.threads = c.threads;
    Manifest m{"eval-impact",
               {{"repetitions", repetitions},
                {"top_k", top_k},
                {"random_sample", sample},
                {"correlation", pearson ? "pearson" : "spearman"},
                {"rng_seed", cfg.rng_seed}},
               {g, x_path},
               {}};
    keep::EvalReport report;
    for (const auto& [name, path] : resolve_embeddings(embs, c, {"keep=keep.emb"})) {
      const auto emb = keep::align_rows(load_emb(path), ont.ids());
      const auto r = keep::impact_assessment(emb, ont, ic, x, cfg);
      report.correlations.push_back({name, r.resnik_corr, r.cooc_corr});
      m.inputs.push_back(path);
    }
    const fs::path o = or_default(out, c, "impact.json");
    open_out(o) << keep::report_to_json(report);
    m.outputs = {o};
    write_manifest(m, c);
    std::cout << keep::render_report_text(report);
  }
};

struct Intrinsic {
  Common c;
  std::vector<std::string> embs;
  fs::path relationships, out;
  int null_size = 1000, repetitions = 250, bootstrap = 1000;
  bool rank = false;

  void run(const char* stage, const char* default_out,
           const std::vector<std::string>& default_embs) {
    const fs::path rel = or_default(relationships, c, "relationships.tsv");
    auto in = open_in(rel);
    const auto sets = keep::read_relationship_sets(in);
    if (sets.empty()) throw keep::InputError(rel.string() + " has no relationship set");
    keep::DiscriminationConfig cfg;
    cfg.null_size = null_size;
    cfg.repetitions = repetitions;
    cfg.bootstrap_iters = bootstrap;
    cfg.rng_seed = c.seed.value_or(0);
    Manifest m{stage,
               {{"null_size", null_size},
                {"repetitions", repetitions},
                {"bootstrap_iters", bootstrap},
                {"rng_seed", cfg.rng_seed}},
               {rel},
               {}};
    const auto named = resolve_embeddings(embs, c, default_embs);
    if (rank && named.size() < 2) {
      throw keep::ConfigError("emb", "compare needs at least two embeddings");
    }
    keep::EvalReport report;
    for (const auto& [name, path] : named) {
      const auto emb = load_emb(path);
      keep::MethodDiscrimination md{name, {}};
      for (const auto& s : sets) md.per_core.push_back(keep::intrinsic_discrimination(emb, s, cfg));
      report.discrimination.push_back(std::move(md));
      m.inputs.push_back(path);
    }
    if (rank) report.ranking = keep::rank_methods(report.discrimination_table());
    const fs::path o = or_default(out, c, default_out);
    open_out(o) << keep::report_to_json(report);
    m.outputs = {o};
    write_manifest(m, c);
    std::cout << keep::render_report_text(report);
  }
};

struct Report {
  Common c;
  std::vector<fs::path> inputs;
  fs::path out;

  void run() {
    std::vector<fs::path> files = inputs;
    if (files.empty()) {
      for (const char* name : {"impact.json", "intrinsic.json", "compare.json"}) {
        if (fs::exists(c.dir / name)) files.push_back(c.dir / name);
      }
      if (files.empty()) throw MissingInput(c.dir / "compare.json");
    }
    keep::EvalReport report;
    for (const auto& f : files) {
      auto in = open_in(f);
      std::stringstream ss;
      ss << in.rdbuf();
      report.merge(keep::report_from_json(ss.str()));
    }
    const auto text = keep::render_report_text(report);
    if (!out.empty()) open_out(out) << text;
    std::cout << text;
  }
};

int default_threads() {
  if (const char* env = std::getenv("KEEP_THREADS")) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      throw keep::ConfigError("KEEP_THREADS", std::string("not an integer: ") + env);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keep: knowledge-graph anchored concept embeddings"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenSynth gen;
  BuildGraph bg;
  Walk walk;
  TrainN2v n2v;
  BuildCooc bc;
  TrainKeep tk, tg;
  tg.glove = true;
  EvalImpact ei;
  Intrinsic ein, cmp;
  cmp.rank = true;
  Report rep;

  int env_threads = 0;
  try {
    env_threads = default_threads();
  } catch (const keep::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  for (Common* c : {&gen.c, &bg.c, &walk.c, &n2v.c, &bc.c, &tk.c, &tg.c, &ei.c, &ein.c, &cmp.c,
                    &rep.c}) {
    c->threads = env_threads;
  }

  auto* s_gen = app.add_subcommand("gen-synth", "Generate a synthetic ontology, cohort and planted relationships");
  add_common(s_gen, gen.c, true);
  s_gen->add_option("--n-concepts", gen.n_concepts);
  s_gen->add_option("--n-patients", gen.n_patients);
  s_gen->add_option("--n-clusters", gen.n_clusters);
  s_gen->add_option("--cluster-size", gen.cluster_size);
  s_gen->add_option("--within-rate", gen.within);
  s_gen->add_option("--background-rate", gen.background);
  s_gen->add_option("--max-depth", gen.max_depth, "Depth limit used to plant clusters");

  auto* s_bg = app.add_subcommand("build-graph", "Validate, prune and index the ontology");
  add_common(s_bg, bg.c, false);
  s_bg->add_option("--edges", bg.edges, "child\\tparent edge list (default <dir>/ontology.tsv)");
  s_bg->add_option("--labels", bg.labels, "Vocabulary table with labels");
  s_bg->add_option("--root", bg.root, "Root concept id (default: the node without parents)");
  s_bg->add_option("--max-depth", bg.max_depth);

  auto* s_walk = app.add_subcommand("walk", "Generate node2vec random walks");
  add_common(s_walk, walk.c, true);
  s_walk->add_option("--graph", walk.graph);
  s_walk->add_option("--vocab", walk.vocab);
  s_walk->add_option("--out", walk.out);
  s_walk->add_option("--walk-length", walk.walk_length);
  s_walk->add_option("--walks-per-node", walk.walks_per_node);
  s_walk->add_option("-p,--p", walk.p);
  s_walk->add_option("-q,--q", walk.q);

  auto* s_n2v = app.add_subcommand("train-n2v", "Train skip-gram anchors on the walks");
  add_common(s_n2v, n2v.c, true);
  s_n2v->add_option("--walks", n2v.walks);
  s_n2v->add_option("--vocab", n2v.vocab);
  s_n2v->add_option("--out", n2v.out);
  s_n2v->add_option("--loss-trace", n2v.loss_trace);
  s_n2v->add_option("--dim", n2v.dim);
  s_n2v->add_option("--window", n2v.window);
  s_n2v->add_option("--negatives", n2v.negatives);
  s_n2v->add_option("--epochs", n2v.epochs);
  s_n2v->add_option("--batch-size", n2v.batch_size);
  s_n2v->add_option("--min-count", n2v.min_count);
  s_n2v->add_option("--learning-rate", n2v.learning_rate);
  s_n2v->add_flag("--binary", n2v.binary, "Write the binary embedding format");

  auto* s_bc = app.add_subcommand("build-cooc", "Build the patient co-occurrence matrix");
  add_common(s_bc, bc.c, false);
  s_bc->add_option("--threads", bc.c.threads);
  s_bc->add_option("--patients", bc.patients);
  s_bc->add_option("--graph", bc.graph);
  s_bc->add_option("--vocab", bc.vocab);
  s_bc->add_option("--rollup", bc.rollup);
  s_bc->add_option("--out", bc.out);
  s_bc->add_option("--min-occurrences", bc.min_occurrences);
  s_bc->add_flag("--strict-unknown", bc.strict, "Fail on concepts missing from the ontology");

  for (auto [name, t] : {std::pair{"train-keep", &tk}, std::pair{"train-glove", &tg}}) {
    auto* s = app.add_subcommand(name, t->glove ? "Train the plain GloVe baseline"
                                                : "Train anchored KEEP embeddings");
    add_common(s, t->c, true);
    s->add_option("--cooc", t->cooc);
    s->add_option("--vocab", t->vocab);
    if (!t->glove) s->add_option("--anchor", t->anchor);
    s->add_option("--out", t->out);
    s->add_option("--loss-trace", t->loss_trace);
    s->add_option("--dim", t->dim);
    s->add_option("--epochs", t->epochs);
    s->add_option("--batch-size", t->batch_size);
    s->add_option("--learning-rate", t->learning_rate);
    if (!t->glove) s->add_option("--lambda", t->lambda);
    s->add_option("--alpha", t->alpha);
    s->add_option("--x-max-percentile", t->x_max_percentile);
    s->add_option("--weight-decay", t->weight_decay);
    s->add_flag("--no-bias", t->no_bias);
    s->add_flag("--binary", t->binary);
  }

  auto* s_ei = app.add_subcommand("eval-impact", "Cosine vs Resnik / co-occurrence correlation");
  add_common(s_ei, ei.c, true);
  s_ei->add_option("--emb", ei.embs, "name=path, repeatable (default keep=keep.emb)");
  s_ei->add_option("--graph", ei.graph);
  s_ei->add_option("--cooc", ei.cooc);
  s_ei->add_option("--out", ei.out);
  s_ei->add_option("--repetitions", ei.repetitions);
  s_ei->add_option("--top-k", ei.top_k);
  s_ei->add_option("--sample", ei.sample);
  s_ei->add_flag("--pearson", ei.pearson, "Pearson instead of Spearman correlation");

  auto* s_ein = app.add_subcommand("eval-intrinsic", "Known-relationship discrimination");
  auto* s_cmp = app.add_subcommand("compare", "Discrimination and rank test across embeddings");
  for (auto [s, t] : {std::pair{s_ein, &ein}, std::pair{s_cmp, &cmp}}) {
    add_common(s, t->c, true);
    s->add_option("--emb", t->embs, "name=path, repeatable");
    s->add_option("--relationships", t->relationships);
    s->add_option("--out", t->out);
    s->add_option("--null-size", t->null_size);
    s->add_option("--repetitions", t->repetitions);
    s->add_option("--bootstrap", t->bootstrap);
  }

  auto* s_rep = app.add_subcommand("report", "Render JSON reports as text tables");
  add_common(s_rep, rep.c, false);
  s_rep->add_option("--in", rep.inputs, "Report files (default: those found in --dir)");
  s_rep->add_option("--out", rep.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 3;
  }

  try {
    if (*s_gen) gen.run();
    if (*s_bg) bg.run();
    if (*s_walk) walk.run();
    if (*s_n2v) n2v.run();
    if (*s_bc) bc.run();
    if (app.got_subcommand("train-keep")) tk.run();
    if (app.got_subcommand("train-glove")) tg.run();
    if (*s_ei) ei.run();
    if (*s_ein) ein.run("eval-intrinsic", "intrinsic.json", {"keep=keep.emb"});
    if (*s_cmp) {
      cmp.run("compare", "compare.json",
              {"node2vec=anchor.emb", "keep=keep.emb", "glove=glove.emb"});
    }
    if (*s_rep) rep.run();
  } catch (const keep::ConfigError& e) {
    std::cerr << "error: invalid configuration: " << e.what() << "\n";
    return 3;
  } catch (const keep::NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const keep::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
