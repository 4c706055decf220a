#include <doctest.h>

#include "keep/config.hpp"
#include "keep/synthdata.hpp"
#include "support.hpp"

using namespace keep;

namespace {

struct Generated {
  Ontology full;
  PruneResult pruned;
  PlantedTruth truth;
  SynthCohort cohort;
};

Generated generate(const SynthConfig& cfg) {
  auto full = generate_ontology(cfg);
  auto pruned = prune_to_depth(full, kDefaultDepthLimit);
  auto truth = plant_clusters(pruned.ontology, cfg);
  auto cohort = generate_patients(full, truth, cfg);
  return {std::move(full), std::move(pruned), std::move(truth), std::move(cohort)};
}

std::set<ConceptId> active_concepts(const PatientRecord& p) {
  std::map<ConceptId, int> n;
  for (const auto& e : p.events) ++n[e.concept_id];
  std::set<ConceptId> out;
  for (auto [c, k] : n) {
    if (k >= 2) out.insert(c);
  }
  return out;
}

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("small ontology has the requested size and one root") {
  SynthConfig cfg;
  cfg.n_concepts = 10;
  cfg.branching = 3;
  const auto edges = generate_edges(cfg);
  const auto ont = Ontology::from_edges(edges, infer_root(edges));
  CHECK(ont.size() == 10);
  CHECK(infer_root(edges) == kSynthRoot);
}

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg;
  cfg.n_concepts = 300;
  cfg.n_patients = 200;
  cfg.rng_seed = 5;
  CHECK(generate_edges(cfg) == generate_edges(cfg));
  const auto a = generate(cfg), b = generate(cfg);
  CHECK(a.truth.clusters == b.truth.clusters);
  REQUIRE(a.cohort.patients.size() == b.cohort.patients.size());
  for (std::size_t p = 0; p < a.cohort.patients.size(); ++p) {
    CHECK(a.cohort.patients[p].events.size() == b.cohort.patients[p].events.size());
  }
  cfg.rng_seed = 6;
  CHECK_FALSE(generate_edges(cfg) == generate_edges(SynthConfig{.n_concepts = 300, .rng_seed = 5}));
}

TEST_CASE("default-sized ontology validates and needs pruning") {
  const SynthConfig cfg;
  const auto edges = generate_edges(cfg);
  LoadReport rep;
  const auto ont = Ontology::from_edges(edges, infer_root(edges), &rep);
  CHECK(ont.size() == 2000);
  CHECK(rep.unreachable.empty());
  CHECK(rep.duplicate_edges == 0);
  CHECK(ont.max_depth() > kDefaultDepthLimit);
  CHECK(ont.edge_count() > ont.size() - 1);  // extra multi-parent edges
  const auto pruned = prune_to_depth(ont, kDefaultDepthLimit);
  CHECK(pruned.rollup.size() > 0);
}

TEST_CASE("clusters: disjoint, rootless, half follow subtrees") {
  const SynthConfig cfg;
  const auto ont = prune_to_depth(generate_ontology(cfg), kDefaultDepthLimit).ontology;
  const auto truth = plant_clusters(ont, cfg);
  REQUIRE(truth.clusters.size() >= 2);
  std::set<ConceptId> seen;
  std::size_t aligned = 0;
  const auto ic = information_content(ont);
  for (std::size_t c = 0; c < truth.clusters.size(); ++c) {
    const auto& members = truth.clusters[c];
    CHECK(members.size() == static_cast<std::size_t>(cfg.cluster_size));
    for (auto m : members) {
      CHECK(ont.contains(m));
      CHECK(m != kSynthRoot);
      CHECK(seen.insert(m).second);
    }
    if (!truth.subtree_aligned[c]) continue;
    ++aligned;
    // Every member descends from the core.
    const auto core = ont.index(members[0]);
    for (auto m : members) {
      CHECK(ic.resnik(core, ont.index(m)) == ic.ic(core));
    }
  }
  CHECK(aligned == truth.clusters.size() / 2);
}

TEST_CASE("relationship sets follow the clusters") {
  SynthConfig cfg;
  cfg.n_concepts = 400;
  const auto ont = prune_to_depth(generate_ontology(cfg), kDefaultDepthLimit).ontology;
  const auto truth = plant_clusters(ont, cfg);
  const auto sets = truth.relationship_sets(ont);
  REQUIRE(sets.size() == truth.clusters.size());
  for (std::size_t c = 0; c < sets.size(); ++c) {
    CHECK(sets[c].core == truth.clusters[c][0]);
    CHECK(sets[c].positives.size() == truth.clusters[c].size() - 1);
    if (truth.subtree_aligned[c]) {
      for (const auto& p : sets[c].positives) CHECK(p.type == RelationType::child);
    }
  }
}

TEST_CASE("deterministic limit: one cluster, certain activation") {
  SynthConfig cfg;
  cfg.n_concepts = 50;
  cfg.n_patients = 300;
  cfg.within_cluster_rate = 1.0;
  cfg.background_rate = 0.0;
  const auto full = generate_ontology(cfg);
  const auto pr = prune_to_depth(full, kDefaultDepthLimit);
  const ConceptId a = pr.ontology.id(1), b = pr.ontology.id(2);
  PlantedTruth truth{{{a, b}}, {false}};
  const auto cohort = generate_patients(full, truth, cfg);
  REQUIRE(cohort.patients.size() == 300);
  for (const auto& p : cohort.patients) {
    CHECK(phenotype(p, pr.rollup, pr.ontology) == std::vector<ConceptId>{std::min(a, b), std::max(a, b)});
    for (const auto& e : p.events) {
      CHECK(e.day >= 0);
      CHECK(e.day <= cfg.max_day);
    }
  }
  const auto x = build_cooccurrence(cohort.patients, pr.rollup, pr.ontology);
  CHECK(x(pr.ontology.index(a), pr.ontology.index(b)) == 300);
  CHECK(x.nnz() == 1);
}

TEST_CASE("independence limit: no co-occurrence across clusters") {
  SynthConfig cfg;
  cfg.n_concepts = 300;
  cfg.n_patients = 2000;
  cfg.n_clusters = 2;
  cfg.background_rate = 0.0;
  const auto g = generate(cfg);
  const auto x = build_cooccurrence(g.cohort.patients, g.pruned.rollup, g.pruned.ontology);
  std::map<ConceptIndex, int> cluster_of;
  for (int c = 0; c < 2; ++c) {
    for (auto id : g.truth.clusters[static_cast<std::size_t>(c)]) cluster_of[g.pruned.ontology.index(id)] = c;
  }
  REQUIRE(x.nnz() > 0);
  for (const auto& e : x.entries()) {
    REQUIRE(cluster_of.contains(e.i));
    REQUIRE(cluster_of.contains(e.j));
    CHECK(cluster_of[e.i] == cluster_of[e.j]);
  }
}

TEST_CASE("within-cluster pairs outpace background pairs by the squared rate ratio") {
  // Per patient, pairs inside the home cluster are co-active with probability
  // within^2, pairs outside it with background^2; the observed ratio must be
  // at least half the analytic (within / background)^2.
  const SynthConfig cfg;
  const auto g = generate(cfg);
  REQUIRE(g.cohort.patients.size() == 10000);
  const double n_full = static_cast<double>(g.full.size() - 1);  // root never drawn
  double within_hits = 0, within_pairs = 0, bg_hits = 0, bg_pairs = 0;
  for (std::size_t p = 0; p < g.cohort.patients.size(); ++p) {
    const auto active = active_concepts(g.cohort.patients[p]);
    const auto& home = g.truth.clusters[static_cast<std::size_t>(g.cohort.home_cluster[p])];
    const std::set<ConceptId> home_set(home.begin(), home.end());
    double in_home = 0, outside = 0;
    for (auto c : active) (home_set.contains(c) ? in_home : outside) += 1;
    const double h = static_cast<double>(home.size());
    within_hits += in_home * (in_home - 1) / 2;
    within_pairs += h * (h - 1) / 2;
    bg_hits += outside * (outside - 1) / 2;
    const double rest = n_full - h;
    bg_pairs += rest * (rest - 1) / 2;
  }
  const double within_rate = within_hits / within_pairs;
  const double bg_rate = bg_hits / bg_pairs;
  REQUIRE(bg_rate > 0);
  const double ratio = cfg.within_cluster_rate / cfg.background_rate;
  CHECK(within_rate / bg_rate >= ratio * ratio / 2);
  MESSAGE("observed lift " << within_rate / bg_rate << ", analytic " << ratio * ratio);
}

TEST_CASE("planted pairs pass the lift check on the default cohort") {
  const SynthConfig cfg;
  const auto g = generate(cfg);
  const auto x = build_cooccurrence(g.cohort.patients, g.pruned.rollup, g.pruned.ontology);
  const auto lift = check_planted_lift(x, g.pruned.ontology, g.truth, g.cohort.patients.size());
  CHECK(lift.passed);
  CHECK(lift.planted_rate > lift.background_rate);
  CHECK(lift.p_value < 0.01);
}

TEST_CASE("configuration errors") {
  SynthConfig cfg;
  cfg.n_concepts = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.within_cluster_rate = 0.001;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.n_concepts = 60;
  cfg.n_clusters = 50;
  const auto ont = prune_to_depth(generate_ontology(cfg), 5).ontology;
  CHECK_THROWS_AS(plant_clusters(ont, cfg), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("key=value parsing") {
  std::istringstream in("# comment\n dim = 32 \n\nlambda=0.5\nlambda=0.25\n");
  const auto kv = read_key_values(in);
  CHECK(kv.at("dim") == "32");
  CHECK(kv.at("lambda") == "0.25");
  std::istringstream bad("dim 32\n");
  CHECK_THROWS_AS(read_key_values(bad), InputError);
}

TEST_CASE("applying values, seed alias and round trip") {
  KeepConfig cfg;
  apply_key_values({{"dim", "16"}, {"seed", "9"}, {"use_bias", "false"}, {"lambda", "0.1"}}, cfg);
  CHECK(cfg.dim == 16);
  CHECK(cfg.rng_seed == 9);
  CHECK_FALSE(cfg.use_bias);
  CHECK(cfg.lambda == 0.1);
  KeepConfig copy;
  apply_key_values(to_key_values(cfg), copy);
  CHECK(to_key_values(copy) == to_key_values(cfg));

  WalkConfig w;
  apply_key_values({{"p", "0.25"}, {"q", "4"}}, w);
  CHECK(w.p == 0.25);
  SgnsConfig s;
  apply_key_values({{"window", "3"}}, s);
  CHECK(s.window == 3);
  SynthConfig sy;
  apply_key_values({{"n_patients", "10"}}, sy);
  CHECK(sy.n_patients == 10);
}

TEST_CASE("errors name the key") {
  KeepConfig cfg;
  auto field_of = [&](const KeyValues& kv) -> std::string {
    try {
      apply_key_values(kv, cfg);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  CHECK(field_of({{"bogus", "1"}}) == "bogus");
  CHECK(field_of({{"dim", "ten"}}) == "dim");
  CHECK(field_of({{"dim", "0"}}) == "dim");
  CHECK(field_of({{"use_bias", "maybe"}}) == "use_bias");
}

}  // TEST_SUITE
