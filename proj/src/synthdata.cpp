#include "keep/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "keep/error.hpp"
#include "keep/rng.hpp"

namespace keep {

namespace {

constexpr std::uint64_t kIdBase = 100000;
constexpr std::uint64_t kTreeStream = 1;
constexpr std::uint64_t kClusterStream = 2;
constexpr std::uint64_t kPatientStream = 3;

std::vector<ConceptIndex> descendants_bfs(const Ontology& ont, ConceptIndex top) {
  std::vector<ConceptIndex> out{top};
  std::vector<char> seen(ont.size(), 0);
  seen[top] = 1;
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (auto c : ont.children(out[k])) {
      if (!seen[c]) {
        seen[c] = 1;
        out.push_back(c);
      }
    }
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_concepts < 10) throw ConfigError("n_concepts", "must be >= 10");
  if (!(branching > 2.0)) throw ConfigError("branching", "must be > 2");
  if (max_depth_generated < 1) throw ConfigError("max_depth_generated", "must be >= 1");
  if (!(extra_parent_fraction >= 0.0 && extra_parent_fraction <= 1.0)) {
    throw ConfigError("extra_parent_fraction", "must lie in [0, 1]");
  }
  if (n_patients < 0) throw ConfigError("n_patients", "must be >= 0");
  if (n_clusters < 0) throw ConfigError("n_clusters", "must be >= 0");
  if (cluster_size < 2) throw ConfigError("cluster_size", "must be >= 2");
  if (!(within_cluster_rate > 0.0 && within_cluster_rate <= 1.0)) {
    throw ConfigError("within_cluster_rate", "must lie in (0, 1]");
  }
  if (!(background_rate >= 0.0 && background_rate < 1.0)) {
    throw ConfigError("background_rate", "must lie in [0, 1)");
  }
  if (!(within_cluster_rate > background_rate)) {
    throw ConfigError("within_cluster_rate", "must exceed background_rate");
  }
  if (!(repeat_mean >= 0.0)) throw ConfigError("repeat_mean", "must be >= 0");
  if (max_day < 0) throw ConfigError("max_day", "must be >= 0");
}

std::vector<IsAEdge> generate_edges(const SynthConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_concepts);
  const auto depth_cap = static_cast<std::size_t>(cfg.max_depth_generated);
  const double a = 1.0 / (cfg.branching - 2.0);
  Rng rng = make_stream(cfg.rng_seed, kTreeStream);

  std::vector<std::size_t> parent(n, 0), depth(n, 0);
  // Parent of every tree edge so far: picking one uniformly selects a node
  // with probability proportional to its child count.
  std::vector<std::size_t> edge_parents;
  std::vector<std::size_t> eligible{0};
  const std::size_t spine = std::min(depth_cap, n - 1);
  auto attach = [&](std::size_t child, std::size_t par) {
    parent[child] = par;
    depth[child] = depth[par] + 1;
    edge_parents.push_back(par);
    if (depth[child] < depth_cap) eligible.push_back(child);
  };
  for (std::size_t k = 1; k <= spine; ++k) attach(k, k - 1);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = spine + 1; k < n; ++k) {
    const double we = static_cast<double>(edge_parents.size());
    const double wu = a * static_cast<double>(eligible.size());
    std::size_t par;
    if (unit(rng) * (we + wu) < we) {
      par = edge_parents[std::uniform_int_distribution<std::size_t>(
          0, edge_parents.size() - 1)(rng)];
    } else {
      par = eligible[std::uniform_int_distribution<std::size_t>(
          0, eligible.size() - 1)(rng)];
    }
    attach(k, par);
  }

  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 1; k < n; ++k) edges.insert({k, parent[k]});
  const auto extra = static_cast<std::size_t>(
      std::llround(cfg.extra_parent_fraction * static_cast<double>(n)));
  if (n > spine + 2) {
    std::uniform_int_distribution<std::size_t> child_pick(spine + 1, n - 1);
    std::size_t added = 0;
    for (std::size_t tries = 0; added < extra && tries < 50 * extra + 50; ++tries) {
      const std::size_t u = child_pick(rng);
      // Older nodes only, which keeps the graph acyclic.
      const std::size_t p = std::uniform_int_distribution<std::size_t>(0, u - 1)(rng);
      if (edges.insert({u, p}).second) ++added;
    }
  }

  std::vector<IsAEdge> out;
  out.reserve(edges.size());
  for (auto [c, p] : edges) out.push_back({ConceptId(kIdBase + c), ConceptId(kIdBase + p)});
  return out;
}

Ontology generate_ontology(const SynthConfig& cfg) {
  const auto edges = generate_edges(cfg);
  Ontology ont = Ontology::from_edges(edges, kSynthRoot);
  for (std::size_t i = 0; i < ont.size(); ++i) {
    const auto id = ont.id(static_cast<ConceptIndex>(i));
    ont.set_label(id, "concept_" + std::to_string(id.value - kIdBase));
  }
  return ont;
}

std::vector<RelationshipSet> PlantedTruth::relationship_sets(const Ontology& ont) const {
  std::vector<RelationshipSet> out;
  for (const auto& members : clusters) {
    RelationshipSet s{members.front(), {}};
    const auto below = descendants_bfs(ont, ont.index(members.front()));
    for (std::size_t k = 1; k < members.size(); ++k) {
      const auto idx = ont.index(members[k]);
      const bool child = std::find(below.begin(), below.end(), idx) != below.end();
      s.positives.push_back(
          {child ? RelationType::child : RelationType::comorbidity, members[k]});
    }
    out.push_back(std::move(s));
  }
  return out;
}

PlantedTruth plant_clusters(const Ontology& retained, const SynthConfig& cfg) {
  cfg.validate();
  const auto size = static_cast<std::size_t>(cfg.cluster_size);
  // Upper bound: three quarters of the non-root concepts.
  const std::size_t k_cap = cfg.n_clusters > 0
                                ? static_cast<std::size_t>(cfg.n_clusters)
                                : std::max<std::size_t>(1, 3 * (retained.size() - 1) / (4 * size));
  if (k_cap * size > retained.size() - 1) {
    throw ConfigError("n_clusters", "clusters need " + std::to_string(k_cap * size) +
                                        " concepts, only " +
                                        std::to_string(retained.size() - 1) +
                                        " non-root concepts are retained");
  }
  Rng rng = make_stream(cfg.rng_seed, kClusterStream);
  std::vector<char> used(retained.size(), 0);
  used[retained.root()] = 1;
  PlantedTruth truth;

  // Subtree-aligned half. Smallest subtrees first; a high top would swallow
  // the room of many smaller clusters.
  std::vector<ConceptIndex> tops;
  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (i != retained.root()) tops.push_back(static_cast<ConceptIndex>(i));
  }
  std::shuffle(tops.begin(), tops.end(), rng);
  std::vector<std::size_t> subtree_size(retained.size());
  for (auto t : tops) subtree_size[t] = descendants_bfs(retained, t).size();
  std::stable_sort(tops.begin(), tops.end(), [&](ConceptIndex a, ConceptIndex b) {
    return subtree_size[a] < subtree_size[b];
  });
  for (auto top : tops) {
    if (truth.clusters.size() == k_cap / 2) break;
    if (used[top] || subtree_size[top] < size) continue;
    std::vector<ConceptId> members;
    for (auto c : descendants_bfs(retained, top)) {
      if (used[c]) continue;
      members.push_back(retained.id(c));
      if (members.size() == size) break;
    }
    if (members.size() < size) continue;
    for (auto id : members) used[retained.index(id)] = 1;
    truth.clusters.push_back(std::move(members));
    truth.subtree_aligned.push_back(true);
  }
  const std::size_t aligned = truth.clusters.size();
  if (cfg.n_clusters > 0 && aligned < k_cap / 2) {
    throw ConfigError("n_clusters", "only " + std::to_string(aligned) +
                                        " disjoint subtrees of " + std::to_string(size) +
                                        " concepts fit, " + std::to_string(k_cap / 2) +
                                        " needed");
  }
  // By default as many cross-cutting clusters as aligned ones.
  const std::size_t k = cfg.n_clusters > 0 ? k_cap : std::max<std::size_t>(1, 2 * aligned);

  std::vector<ConceptIndex> free;
  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (!used[i]) free.push_back(static_cast<ConceptIndex>(i));
  }
  std::shuffle(free.begin(), free.end(), rng);
  std::size_t next = 0;
  while (truth.clusters.size() < k) {
    std::vector<ConceptId> members;
    for (std::size_t m = 0; m < size; ++m) members.push_back(retained.id(free[next++]));
    truth.clusters.push_back(std::move(members));
    truth.subtree_aligned.push_back(false);
  }
  return truth;
}

SynthCohort generate_patients(const Ontology& full, const PlantedTruth& truth,
                              const SynthConfig& cfg) {
  cfg.validate();
  if (truth.clusters.empty()) throw InputError("planted truth has no cluster");
  Rng rng = make_stream(cfg.rng_seed, kPatientStream);
  const std::size_t n = full.size();
  std::vector<int> cluster_of(n, -1);
  for (std::size_t c = 0; c < truth.clusters.size(); ++c) {
    for (auto id : truth.clusters[c]) cluster_of[full.index(id)] = static_cast<int>(c);
  }
  std::uniform_int_distribution<int> home_pick(0, static_cast<int>(truth.clusters.size()) - 1);
  std::uniform_int_distribution<std::int64_t> day_pick(0, cfg.max_day);
  std::bernoulli_distribution within(cfg.within_cluster_rate);
  std::poisson_distribution<int> extra(cfg.repeat_mean > 0.0 ? cfg.repeat_mean : 1.0);
  // Background activations by geometric skipping over concept indices.
  const bool any_background = cfg.background_rate > 0.0;
  std::geometric_distribution<std::size_t> gap(any_background ? cfg.background_rate : 0.5);

  SynthCohort cohort;
  cohort.patients.reserve(static_cast<std::size_t>(cfg.n_patients));
  std::vector<ConceptIndex> active;
  char pid[32];
  for (int p = 0; p < cfg.n_patients; ++p) {
    const int home = home_pick(rng);
    active.clear();
    for (auto id : truth.clusters[static_cast<std::size_t>(home)]) {
      if (within(rng)) active.push_back(full.index(id));
    }
    if (any_background) {
      for (std::size_t i = gap(rng); i < n; i += gap(rng) + 1) {
        if (i == full.root() || cluster_of[i] == home) continue;
        active.push_back(static_cast<ConceptIndex>(i));
      }
    }
    std::snprintf(pid, sizeof pid, "P%07d", p + 1);
    PatientRecord rec{pid, {}};
    for (auto c : active) {
      const int count = 2 + (cfg.repeat_mean > 0.0 ? extra(rng) : 0);
      for (int e = 0; e < count; ++e) rec.events.push_back({full.id(c), day_pick(rng)});
    }
    std::sort(rec.events.begin(), rec.events.end(),
              [](const DiagnosisEvent& l, const DiagnosisEvent& r) {
                return l.day != r.day ? l.day < r.day : l.concept_id < r.concept_id;
              });
    cohort.patients.push_back(std::move(rec));
    cohort.home_cluster.push_back(home);
  }
  return cohort;
}

PlantedLiftCheck check_planted_lift(const CooccurrenceMatrix& x,
                                    const Ontology& retained,
                                    const PlantedTruth& truth,
                                    std::size_t n_patients, double alpha) {
  PlantedLiftCheck out;
  const double v = static_cast<double>(x.vocab_size());
  const double all_pairs = v * (v - 1.0) / 2.0;
  if (n_patients == 0 || all_pairs <= 0.0) return out;
  double planted = 0.0, planted_pairs = 0.0;
  for (const auto& members : truth.clusters) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        planted += x(retained.index(members[a]), retained.index(members[b]));
        planted_pairs += 1.0;
      }
    }
  }
  const double pat = static_cast<double>(n_patients);
  const double trials = pat * planted_pairs;
  const double p0 = static_cast<double>(x.total()) / (pat * all_pairs);
  out.planted_rate = planted / trials;
  out.background_rate = p0;
  if (p0 <= 0.0) {
    out.z = planted > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    out.p_value = planted > 0.0 ? 0.0 : 1.0;
  } else if (p0 >= 1.0) {
    out.p_value = 1.0;
  } else {
    out.z = (planted - trials * p0) / std::sqrt(trials * p0 * (1.0 - p0));
    out.p_value = 0.5 * std::erfc(out.z / std::sqrt(2.0));
  }
  out.passed = out.p_value < alpha;
  return out;
}

}  // namespace keep
