#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "keep/ontology.hpp"

namespace keep {

struct DiagnosisEvent {
  ConceptId concept_id;
  std::int64_t day = 0;
};

struct PatientRecord {
  std::string patient_id;
  std::vector<DiagnosisEvent> events;
};

enum class UnknownConceptPolicy { skip, error };

struct PhenotypeOptions {
  UnknownConceptPolicy unknown = UnknownConceptPolicy::skip;
  int min_occurrences = 2;
};

// Concepts (sorted) that a patient is labelled with: every event is mapped to
// its retained image(s) first, then a concept needs min_occurrences hits.
// Unknown concepts are skipped (counted in *unknown) or raise InputError.
std::vector<ConceptId> phenotype(const PatientRecord& record,
                                 const RollUpMap& rollup,
                                 const Ontology& retained,
                                 const PhenotypeOptions& opts = {},
                                 std::size_t* unknown = nullptr);

// Symmetric patient-level co-occurrence counts, stored once per unordered
// pair (i < j) and sorted by (i, j).
class CooccurrenceMatrix {
 public:
  struct Entry {
    ConceptIndex i;
    ConceptIndex j;
    std::uint32_t count;
    bool operator==(const Entry&) const = default;
  };

  CooccurrenceMatrix() = default;
  // Validates ordering, i < j < vocab_size and positive counts.
  CooccurrenceMatrix(std::size_t vocab_size, std::vector<Entry> entries,
                     std::vector<std::uint32_t> marginals);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t nnz() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }
  std::span<const std::uint32_t> marginals() const { return marginals_; }

  // 0 on the diagonal and for absent pairs; symmetric.
  std::uint32_t operator()(ConceptIndex a, ConceptIndex b) const;
  std::uint64_t total() const;

  bool operator==(const CooccurrenceMatrix&) const = default;

 private:
  std::size_t vocab_size_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> marginals_;
};

struct CooccurrenceOptions {
  PhenotypeOptions phenotype;
  int threads = 0;
};

struct CooccurrenceStats {
  std::size_t patients = 0;
  std::size_t unknown_events = 0;
};

// X_ij += 1 for every pair in each patient's phenotype set. Patients are
// split into shards; shard maps are merged in key order, so the result does
// not depend on patient order or thread count.
CooccurrenceMatrix build_cooccurrence(std::span<const PatientRecord> records,
                                      const RollUpMap& rollup,
                                      const Ontology& vocab,
                                      const CooccurrenceOptions& opts = {},
                                      CooccurrenceStats* stats = nullptr);

// TSV patient_id\tconcept_id\tday_ordinal, any order. Records come back in
// order of first appearance.
std::vector<PatientRecord> read_patients(std::istream& in);
void write_patients(std::ostream& out, std::span<const PatientRecord> records);

// "#V=<V>", then "#marginal\ti\tcount" lines, then i\tj\tcount with i < j.
void write_cooccurrence(std::ostream& out, const CooccurrenceMatrix& x);
CooccurrenceMatrix read_cooccurrence(std::istream& in);

}  // namespace keep
