#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keep/cooccurrence.hpp"
#include "keep/embedding.hpp"
#include "keep/ontology.hpp"

namespace keep {

// Throws InputError naming the concept if either row has zero norm.
double cosine_similarity(const EmbeddingMatrix& emb, std::size_t i, std::size_t j);

enum class CorrelationKind { spearman, pearson };

struct ImpactConfig {
  int repetitions = 250;
  int top_k = 10;
  int random_sample = 150;
  CorrelationKind correlation = CorrelationKind::spearman;
  // Probed internal indices; empty means every concept.
  std::vector<ConceptIndex> probes;
  std::uint64_t rng_seed = 0;
  int threads = 0;
};

struct ImpactResult {
  double resnik_corr = 0.0;
  double cooc_corr = 0.0;
  // Correlations that entered each median, and those skipped because one
  // side was constant over the selected concepts.
  std::size_t resnik_samples = 0, cooc_samples = 0;
  std::size_t resnik_undefined = 0, cooc_undefined = 0;
};

// For every probe and repetition: the top_k cosine neighbours plus
// random_sample other concepts drawn without replacement. Returns the median
// rank correlation between cosine and Resnik / co-occurrence. The embedding
// rows, ontology indices and matrix indices must describe one vocabulary.
ImpactResult impact_assessment(const EmbeddingMatrix& emb, const Ontology& ont,
                               const InformationContentTable& ic,
                               const CooccurrenceMatrix& x,
                               const ImpactConfig& cfg = {});

enum class RelationType { synonym, child, complication, comorbidity };
std::string_view to_string(RelationType t);
RelationType parse_relation_type(std::string_view text);

struct Relationship {
  RelationType type;
  ConceptId concept_id;
};

struct RelationshipSet {
  ConceptId core;
  std::vector<Relationship> positives;

  std::vector<ConceptId> positive_ids() const;
};

// TSV core_id\trelation_type\tconcept_id. Sets come back in order of first
// appearance of their core; duplicate positives are merged.
std::vector<RelationshipSet> read_relationship_sets(std::istream& in);
void write_relationship_sets(std::ostream& out,
                             std::span<const RelationshipSet> sets);

struct DiscriminationConfig {
  int null_size = 1000;
  int repetitions = 250;
  int bootstrap_iters = 1000;
  double null_percentile = 95.0;
  std::uint64_t rng_seed = 0;
};

struct DiscriminationResult {
  ConceptId core{0};
  double score = 0.0;
  double boot_median = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  std::size_t positives_used = 0, positives_total = 0;
  std::size_t null_candidates = 0;
  double coverage = 0.0;
};

// Per repetition a null of null_size cosines between the core and random
// non-positive concepts (drawn with replacement); a positive is a hit when
// its cosine strictly exceeds the null's percentile. The score is the hit
// rate averaged over positives and repetitions; the CI comes from resampling
// positives. Concepts missing from the embedding are dropped (see coverage).
DiscriminationResult intrinsic_discrimination(const EmbeddingMatrix& emb,
                                              const RelationshipSet& rel,
                                              const DiscriminationConfig& cfg = {});

// Two-sided; exact enumeration when at most 12 nonzero differences remain,
// normal approximation with tie correction otherwise. All-zero differences
// give 1.0. Requires equal lengths >= 5.
double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

// scores[m][t]: score of method m on task t; higher is better.
struct ScoreTable {
  std::vector<std::string> methods;
  std::vector<std::string> tasks;
  std::vector<std::vector<std::optional<double>>> scores;
};

struct RankSummary {
  std::vector<std::string> methods;
  std::vector<double> mean_ranks;
  std::size_t best = 0;
  // Against the best method; empty optional when there are fewer than 5
  // tasks. The best method itself gets 1.0.
  std::vector<std::optional<double>> p_values;
};

RankSummary rank_methods(const ScoreTable& table);

struct CorrelationRow {
  std::string method;
  double resnik_corr = 0.0;
  double cooc_corr = 0.0;
};

struct MethodDiscrimination {
  std::string method;
  std::vector<DiscriminationResult> per_core;
  double mean_score() const;
};

struct EvalReport {
  std::vector<CorrelationRow> correlations;
  std::vector<MethodDiscrimination> discrimination;
  std::optional<RankSummary> ranking;

  // Merges rows of another report (same method names are replaced).
  void merge(const EvalReport& other);
  // One task per core concept shared by every method.
  ScoreTable discrimination_table() const;
};

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
// Aligned columns: a correlation table, a discrimination table with mean
// ranks, then the pairwise p-values.
std::string render_report_text(const EvalReport& report);

}  // namespace keep
