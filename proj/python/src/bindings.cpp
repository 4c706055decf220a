// Python bindings for the embedding pipeline. Configuration structs are
// passed as keyword arguments and go through the same key=value parser as
// the CLI, so field names and validation match.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

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

namespace py = pybind11;
using namespace keep;

namespace {

KeyValues to_kv(const py::kwargs& kwargs) {
  KeyValues kv;
  for (const auto& [k, v] : kwargs) {
    const auto key = py::cast<std::string>(k);
    if (py::isinstance<py::bool_>(v)) {
      kv[key] = py::cast<bool>(v) ? "true" : "false";
    } else {
      kv[key] = py::cast<std::string>(py::str(v));
    }
  }
  return kv;
}

template <class Cfg>
Cfg config_from(const py::kwargs& kwargs) {
  Cfg cfg;
  apply_key_values(to_kv(kwargs), cfg);
  return cfg;
}

std::vector<ConceptId> to_ids(const std::vector<std::uint64_t>& raw) {
  return {raw.begin(), raw.end()};
}

std::vector<std::uint64_t> from_ids(std::span<const ConceptId> ids) {
  std::vector<std::uint64_t> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(id.value);
  return out;
}

py::array_t<double> to_numpy(const EmbeddingMatrix& m) {
  py::array_t<double> out({m.rows(), m.dim()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

EmbeddingMatrix from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> values,
                           std::optional<std::vector<std::uint64_t>> ids) {
  if (values.ndim() != 2) throw InputError("embedding values must be a 2-d array");
  EmbeddingMatrix m(static_cast<std::size_t>(values.shape(0)), static_cast<std::size_t>(values.shape(1)));
  std::copy(values.data(), values.data() + values.size(), m.values().begin());
  if (ids) m.set_ids(to_ids(*ids));
  return m;
}

std::vector<PatientRecord> to_patients(
    const std::vector<std::tuple<std::string, std::uint64_t, std::int64_t>>& rows) {
  std::vector<PatientRecord> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& [pid, concept_id, day] : rows) {
    auto [it, fresh] = slot.try_emplace(pid, out.size());
    if (fresh) out.push_back({pid, {}});
    out[it->second].events.push_back({ConceptId(concept_id), day});
  }
  return out;
}

std::vector<std::tuple<std::string, std::uint64_t, std::int64_t>> from_patients(
    std::span<const PatientRecord> records) {
  std::vector<std::tuple<std::string, std::uint64_t, std::int64_t>> out;
  for (const auto& r : records) {
    for (const auto& e : r.events) out.emplace_back(r.patient_id, e.concept_id.value, e.day);
  }
  return out;
}

py::dict impact_dict(const ImpactResult& r) {
  py::dict d;
  d["resnik_corr"] = r.resnik_corr;
  d["cooc_corr"] = r.cooc_corr;
  d["resnik_samples"] = r.resnik_samples;
  d["cooc_samples"] = r.cooc_samples;
  return d;
}

struct Synthetic {
  Ontology full;
  PruneResult pruned;
  PlantedTruth truth;
  SynthCohort cohort;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Knowledge-preserving concept embeddings";

  auto base = py::register_exception<Error>(m, "KeepError", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  // ------------------------------------------------------------ ontology
  py::class_<RollUpMap>(m, "RollUpMap")
      .def("__len__", &RollUpMap::size)
      .def("targets", [](const RollUpMap& r, std::uint64_t id) {
        return from_ids(r.targets(ConceptId(id)));
      })
      .def("to_dict", [](const RollUpMap& r) {
        std::map<std::uint64_t, std::vector<std::uint64_t>> out;
        for (const auto& [k, v] : r.entries()) out[k.value] = from_ids(v);
        return out;
      });

  py::class_<InformationContentTable>(m, "InformationContent")
      .def("values", [](const InformationContentTable& t) {
        return std::vector<double>(t.values().begin(), t.values().end());
      })
      .def("resnik", &InformationContentTable::resnik, py::arg("a"), py::arg("b"),
           "Resnik similarity of two internal indices");

  py::class_<Ontology>(m, "Ontology")
      .def_static(
          "from_edges",
          [](const std::vector<std::pair<std::uint64_t, std::uint64_t>>& edges,
             std::optional<std::uint64_t> root) {
            std::vector<IsAEdge> e;
            e.reserve(edges.size());
            for (auto [c, p] : edges) e.push_back({ConceptId(c), ConceptId(p)});
            const ConceptId r = root ? ConceptId(*root) : infer_root(e);
            return Ontology::from_edges(e, r);
          },
          py::arg("edges"), py::arg("root") = py::none(),
          "Build from (child, parent) pairs; the root defaults to the node without parents")
      .def("__len__", &Ontology::size)
      .def_property_readonly("root", [](const Ontology& o) { return o.id(o.root()).value; })
      .def_property_readonly("ids", [](const Ontology& o) { return from_ids(o.ids()); })
      .def("index", [](const Ontology& o, std::uint64_t id) { return o.index(ConceptId(id)); })
      .def("depth", [](const Ontology& o, std::uint64_t id) { return o.depth(o.index(ConceptId(id))); })
      .def_property_readonly("max_depth", &Ontology::max_depth)
      .def("edges", [](const Ontology& o) {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
        for (const auto& e : o.edges()) out.emplace_back(e.child.value, e.parent.value);
        return out;
      })
      .def(
          "prune",
          [](const Ontology& o, int max_depth) {
            auto r = prune_to_depth(o, max_depth);
            return std::make_pair(std::move(r.ontology), std::move(r.rollup));
          },
          py::arg("max_depth") = kDefaultDepthLimit,
          "Returns (retained ontology, roll-up map)")
      .def("information_content", [](const Ontology& o) { return information_content(o); })
      .def("resnik", [](const Ontology& o, std::uint64_t a, std::uint64_t b) {
        return resnik_similarity(o, information_content(o), ConceptId(a), ConceptId(b));
      });

  // ------------------------------------------------------------ embeddings
  py::class_<EmbeddingMatrix>(m, "Embedding")
      .def(py::init(&from_numpy), py::arg("values"), py::arg("ids") = py::none())
      .def_property_readonly("values", &to_numpy)
      .def_property_readonly("ids", [](const EmbeddingMatrix& e) { return from_ids(e.ids()); })
      .def_property_readonly("shape", [](const EmbeddingMatrix& e) {
        return std::make_pair(e.rows(), e.dim());
      })
      .def("cosine", &cosine_similarity, py::arg("i"), py::arg("j"))
      .def("aligned_to", [](const EmbeddingMatrix& e, const std::vector<std::uint64_t>& ids) {
        return align_rows(e, to_ids(ids));
      })
      .def("save", [](const EmbeddingMatrix& e, const std::string& path, bool binary) {
        save_embedding(path, e, binary);
      }, py::arg("path"), py::arg("binary") = false)
      .def_static("load", [](const std::string& path) { return load_embedding(path); });

  // ------------------------------------------------------------ co-occurrence
  py::class_<CooccurrenceMatrix>(m, "Cooccurrence")
      .def_property_readonly("vocab_size", &CooccurrenceMatrix::vocab_size)
      .def_property_readonly("nnz", &CooccurrenceMatrix::nnz)
      .def_property_readonly("total", &CooccurrenceMatrix::total)
      .def("__call__", &CooccurrenceMatrix::operator())
      .def("entries", [](const CooccurrenceMatrix& x) {
        std::vector<std::tuple<ConceptIndex, ConceptIndex, std::uint32_t>> out;
        for (const auto& e : x.entries()) out.emplace_back(e.i, e.j, e.count);
        return out;
      })
      .def("to_dense", [](const CooccurrenceMatrix& x) {
        const auto v = x.vocab_size();
        py::array_t<std::uint32_t> out({v, v});
        auto* p = out.mutable_data();
        std::fill(p, p + v * v, 0u);
        for (const auto& e : x.entries()) p[e.i * v + e.j] = p[e.j * v + e.i] = e.count;
        return out;
      })
      .def("write", [](const CooccurrenceMatrix& x) {
        std::ostringstream os;
        write_cooccurrence(os, x);
        return os.str();
      });

  m.def(
      "build_cooccurrence",
      [](const std::vector<std::tuple<std::string, std::uint64_t, std::int64_t>>& events,
         const RollUpMap& rollup, const Ontology& retained, int min_occurrences, bool strict) {
        const auto patients = to_patients(events);
        CooccurrenceOptions opts;
        opts.phenotype.min_occurrences = min_occurrences;
        opts.phenotype.unknown = strict ? UnknownConceptPolicy::error : UnknownConceptPolicy::skip;
        py::gil_scoped_release nogil;
        return build_cooccurrence(patients, rollup, retained, opts);
      },
      py::arg("events"), py::arg("rollup"), py::arg("retained"), py::arg("min_occurrences") = 2,
      py::arg("strict_unknown") = false,
      "events: (patient_id, concept_id, day) rows in any order");

  // ------------------------------------------------------------ walks / sgns
  py::class_<WalkCorpus>(m, "WalkCorpus")
      .def("__len__", &WalkCorpus::size)
      .def_property_readonly("token_count", &WalkCorpus::token_count)
      .def("walk", [](const WalkCorpus& c, std::size_t i) {
        if (i >= c.size()) throw py::index_error();
        const auto w = c.walk(i);
        return std::vector<ConceptIndex>(w.begin(), w.end());
      });

  m.def(
      "generate_walks",
      [](const Ontology& ont, const py::kwargs& kw) {
        const auto cfg = config_from<WalkConfig>(kw);
        py::gil_scoped_release nogil;
        return generate_walks(ont, cfg);
      },
      py::arg("ontology"), "node2vec walks; keywords are WalkConfig fields");

  m.def(
      "train_sgns",
      [](const WalkCorpus& corpus, std::optional<std::vector<std::uint64_t>> ids,
         const py::kwargs& kw) {
        const auto cfg = config_from<SgnsConfig>(kw);
        std::vector<double> losses;
        EmbeddingMatrix emb;
        {
          py::gil_scoped_release nogil;
          emb = train_sgns(corpus, cfg, &losses);
        }
        if (ids) emb.set_ids(to_ids(*ids));
        return std::make_pair(std::move(emb), losses);
      },
      py::arg("corpus"), py::arg("ids") = py::none(),
      "Skip-gram anchors; returns (embedding, per-epoch loss)");

  // ------------------------------------------------------------ KEEP / GloVe
  m.def(
      "train_keep",
      [](const CooccurrenceMatrix& x, std::optional<EmbeddingMatrix> anchor, const py::kwargs& kw) {
        const auto cfg = config_from<KeepConfig>(kw);
        KeepTrainResult r;
        {
          py::gil_scoped_release nogil;
          r = train_keep(x, anchor ? &*anchor : nullptr, cfg);
        }
        auto out = export_final(r.model);
        if (anchor) out.set_ids({anchor->ids().begin(), anchor->ids().end()});
        return std::make_pair(std::move(out), r.loss_trace);
      },
      py::arg("cooc"), py::arg("anchor") = py::none(),
      "Returns (final embedding, per-epoch loss); keywords are KeepConfig fields");

  m.def(
      "train_glove",
      [](const CooccurrenceMatrix& x, std::optional<std::vector<std::uint64_t>> ids,
         const py::kwargs& kw) {
        auto kv = to_kv(kw);
        if (kv.contains("lambda") && std::stod(kv["lambda"]) != 0.0) {
          throw ConfigError("lambda", "plain GloVe has no anchor term");
        }
        kv.erase("lambda");
        KeepConfig cfg;
        apply_key_values(kv, cfg);
        KeepTrainResult r;
        {
          py::gil_scoped_release nogil;
          r = train_glove(x, cfg);
        }
        auto out = export_final(r.model);
        if (ids) out.set_ids(to_ids(*ids));
        return std::make_pair(std::move(out), r.loss_trace);
      },
      py::arg("cooc"), py::arg("ids") = py::none());

  // ------------------------------------------------------------ evaluation
  m.def(
      "impact_assessment",
      [](const EmbeddingMatrix& emb, const Ontology& ont, const CooccurrenceMatrix& x,
         int repetitions, int top_k, int random_sample, bool pearson, std::uint64_t seed) {
        ImpactConfig cfg;
        cfg.repetitions = repetitions;
        cfg.top_k = top_k;
        cfg.random_sample = random_sample;
        cfg.correlation = pearson ? CorrelationKind::pearson : CorrelationKind::spearman;
        cfg.rng_seed = seed;
        ImpactResult r;
        {
          py::gil_scoped_release nogil;
          r = impact_assessment(emb, ont, information_content(ont), x, cfg);
        }
        return impact_dict(r);
      },
      py::arg("embedding"), py::arg("ontology"), py::arg("cooc"), py::arg("repetitions") = 250,
      py::arg("top_k") = 10, py::arg("random_sample") = 150, py::arg("pearson") = false,
      py::arg("seed") = 0);

  m.def(
      "intrinsic_discrimination",
      [](const EmbeddingMatrix& emb, std::uint64_t core, const std::vector<std::uint64_t>& positives,
         int null_size, int repetitions, int bootstrap, std::uint64_t seed) {
        RelationshipSet set{ConceptId(core), {}};
        for (auto p : positives) set.positives.push_back({RelationType::comorbidity, ConceptId(p)});
        DiscriminationConfig cfg;
        cfg.null_size = null_size;
        cfg.repetitions = repetitions;
        cfg.bootstrap_iters = bootstrap;
        cfg.rng_seed = seed;
        const auto r = intrinsic_discrimination(emb, set, cfg);
        py::dict d;
        d["score"] = r.score;
        d["ci_low"] = r.ci_low;
        d["ci_high"] = r.ci_high;
        d["coverage"] = r.coverage;
        d["positives_used"] = r.positives_used;
        return d;
      },
      py::arg("embedding"), py::arg("core"), py::arg("positives"), py::arg("null_size") = 1000,
      py::arg("repetitions") = 250, py::arg("bootstrap") = 1000, py::arg("seed") = 0);

  m.def("wilcoxon_signed_rank",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return wilcoxon_signed_rank(a, b);
        },
        py::arg("a"), py::arg("b"), "Two-sided p-value");

  // ------------------------------------------------------------ synthetic data
  py::class_<Synthetic>(m, "Synthetic")
      .def_property_readonly("full", [](const Synthetic& s) { return s.full; })
      .def_property_readonly("retained", [](const Synthetic& s) { return s.pruned.ontology; })
      .def_property_readonly("rollup", [](const Synthetic& s) { return s.pruned.rollup; })
      .def_property_readonly("clusters", [](const Synthetic& s) {
        std::vector<std::vector<std::uint64_t>> out;
        for (const auto& c : s.truth.clusters) out.push_back(from_ids(c));
        return out;
      })
      .def_property_readonly("subtree_aligned", [](const Synthetic& s) { return s.truth.subtree_aligned; })
      .def_property_readonly("events", [](const Synthetic& s) { return from_patients(s.cohort.patients); })
      .def("cooccurrence", [](const Synthetic& s) {
        py::gil_scoped_release nogil;
        return build_cooccurrence(s.cohort.patients, s.pruned.rollup, s.pruned.ontology);
      });

  m.def(
      "generate_synthetic",
      [](int max_depth, const py::kwargs& kw) {
        const auto cfg = config_from<SynthConfig>(kw);
        py::gil_scoped_release nogil;
        auto full = generate_ontology(cfg);
        auto pruned = prune_to_depth(full, max_depth);
        auto truth = plant_clusters(pruned.ontology, cfg);
        auto cohort = generate_patients(full, truth, cfg);
        return Synthetic{std::move(full), std::move(pruned), std::move(truth), std::move(cohort)};
      },
      py::arg("max_depth") = kDefaultDepthLimit,
      "Synthetic ontology, planted clusters and cohort; keywords are SynthConfig fields");
}
