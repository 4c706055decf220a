#pragma once

#include <cstdint>
#include <vector>

#include "keep/cooccurrence.hpp"
#include "keep/evaluation.hpp"
#include "keep/ontology.hpp"

namespace keep {

struct SynthConfig {
  int n_concepts = 2000;
  // Mean children per internal node; must exceed 2.
  double branching = 6.0;
  int max_depth_generated = 8;
  double extra_parent_fraction = 0.05;
  int n_patients = 10000;
  // 0: twice the number of disjoint subtree clusters that fit, at most three
  // quarters of the retained concepts.
  int n_clusters = 0;
  int cluster_size = 8;
  double within_cluster_rate = 0.5;
  double background_rate = 0.002;
  double repeat_mean = 1.0;
  int max_day = 3650;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Preferential-attachment tree (weight children + a, with a = 1/(branching-2)
// giving the requested mean branching) hung below a spine that reaches
// max_depth_generated, plus extra_parent_fraction * n_concepts additional
// parent edges pointing at older nodes. External ids are 100000 + creation
// order; the root is 100000.
std::vector<IsAEdge> generate_edges(const SynthConfig& cfg);
Ontology generate_ontology(const SynthConfig& cfg);

inline constexpr ConceptId kSynthRoot{100000};

struct PlantedTruth {
  // Members of every cluster; the first member is the core.
  std::vector<std::vector<ConceptId>> clusters;
  // True for clusters drawn from one ontology subtree.
  std::vector<bool> subtree_aligned;

  std::vector<RelationshipSet> relationship_sets(const Ontology& ont) const;
};

// Clusters over the retained vocabulary: the first half are drawn from
// subtrees, the rest uniformly across the hierarchy. An explicit n_clusters
// whose aligned half does not fit throws ConfigError. Clusters never overlap
// and never contain the root.
PlantedTruth plant_clusters(const Ontology& retained, const SynthConfig& cfg);

struct SynthCohort {
  std::vector<PatientRecord> patients;
  std::vector<int> home_cluster;
};

// Every patient gets a home cluster. Home-cluster members are active with
// within_cluster_rate, every other concept of `full` with background_rate;
// each active concept emits 2 + Poisson(repeat_mean) events on uniform days.
SynthCohort generate_patients(const Ontology& full, const PlantedTruth& truth,
                              const SynthConfig& cfg);

struct PlantedLiftCheck {
  double planted_rate = 0.0;     // mean X over planted pairs / patients
  double background_rate = 0.0;  // mean X over all pairs / patients
  double z = 0.0;
  double p_value = 1.0;
  bool passed = false;
};

// One-sided binomial (normal approximation) test that planted pairs
// co-occur more often than an average pair. Indices follow `retained`.
PlantedLiftCheck check_planted_lift(const CooccurrenceMatrix& x,
                                    const Ontology& retained,
                                    const PlantedTruth& truth,
                                    std::size_t n_patients, double alpha = 0.01);

}  // namespace keep
