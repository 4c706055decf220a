#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "keep/error.hpp"
#include "keep/types.hpp"

namespace keep {

// Directed is-a edge: `child` is-a `parent`.
struct IsAEdge {
  ConceptId child;
  ConceptId parent;
  auto operator<=>(const IsAEdge&) const = default;
};

// Raised when the is-a edges contain a directed cycle; carries one edge that
// lies on the cycle.
class CycleError : public InputError {
 public:
  explicit CycleError(IsAEdge edge);
  const IsAEdge& edge() const { return edge_; }

 private:
  IsAEdge edge_;
};

struct LoadReport {
  // Nodes that cannot reach the root through is-a edges. They are dropped.
  std::vector<ConceptId> unreachable;
  std::size_t duplicate_edges = 0;
};

// Rooted is-a DAG. Immutable once built; every node reaches the root.
//
// Nodes are indexed densely (ConceptIndex) in ascending ConceptId order, so
// the index assignment does not depend on the edge order of the input.
class Ontology {
 public:
  // Validates and builds. Throws CycleError on cycles and InputError if the
  // root does not occur in the edge list. Nodes that cannot reach the root
  // are dropped and listed in `report`.
  static Ontology from_edges(std::span<const IsAEdge> edges, ConceptId root,
                             LoadReport* report = nullptr);

  std::size_t size() const { return ids_.size(); }
  ConceptIndex root() const { return root_; }

  ConceptId id(ConceptIndex i) const { return ids_[i]; }
  std::span<const ConceptId> ids() const { return ids_; }
  std::optional<ConceptIndex> find(ConceptId id) const;
  bool contains(ConceptId id) const { return find(id).has_value(); }
  // Throws InputError for unknown ids.
  ConceptIndex index(ConceptId id) const;

  std::span<const ConceptIndex> parents(ConceptIndex i) const;
  std::span<const ConceptIndex> children(ConceptIndex i) const;

  // Minimum number of is-a hops from the root.
  int depth(ConceptIndex i) const { return depth_[i]; }
  int max_depth() const;

  // Root first; every parent precedes its children.
  std::span<const ConceptIndex> topological_order() const { return topo_; }

  std::vector<IsAEdge> edges() const;
  std::size_t edge_count() const { return child_parent_.size(); }

  const std::string& label(ConceptIndex i) const;
  void set_label(ConceptId id, std::string text);

 private:
  friend class OntologyBuilder;
  Ontology() = default;

  std::vector<ConceptId> ids_;
  std::unordered_map<ConceptId, ConceptIndex> index_;
  ConceptIndex root_ = 0;
  // CSR adjacency.
  std::vector<std::size_t> parent_offsets_, child_offsets_;
  std::vector<ConceptIndex> parent_list_, child_list_;
  std::vector<std::pair<ConceptIndex, ConceptIndex>> child_parent_;
  std::vector<int> depth_;
  std::vector<ConceptIndex> topo_;
  std::vector<std::string> labels_;
};

// Reads a child\tparent TSV edge list; lines starting with '#' and blank
// lines are ignored.
std::vector<IsAEdge> read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const Ontology& ont);

Ontology load_ontology(std::istream& edge_list, ConceptId root,
                       LoadReport* report = nullptr);
Ontology load_ontology(const std::filesystem::path& edge_list, ConceptId root,
                       LoadReport* report = nullptr);

// The unique node that has no parent; throws InputError if there is not
// exactly one.
ConceptId infer_root(std::span<const IsAEdge> edges);

// Vocabulary table: internal_index\texternal_id\tlabel.
struct VocabularyEntry {
  ConceptIndex index;
  ConceptId id;
  std::string label;
};
void write_vocabulary(std::ostream& out, const Ontology& ont);
std::vector<VocabularyEntry> read_vocabulary(std::istream& in);
// Applies the labels of a vocabulary table to an ontology with the same ids.
void apply_labels(Ontology& ont, std::span<const VocabularyEntry> vocab);

// Maps every node excluded by depth pruning to its nearest retained
// ancestors, one per upward path, deduplicated.
class RollUpMap {
 public:
  // Empty span for concepts that are not excluded.
  std::span<const ConceptId> targets(ConceptId excluded) const;
  bool is_excluded(ConceptId id) const { return map_.contains(id); }
  std::size_t size() const { return map_.size(); }
  const std::map<ConceptId, std::vector<ConceptId>>& entries() const {
    return map_;
  }

  void insert(ConceptId excluded, std::vector<ConceptId> targets);

 private:
  std::map<ConceptId, std::vector<ConceptId>> map_;
};

// TSV excluded_id\ttarget_id, one line per target.
void write_rollup(std::ostream& out, const RollUpMap& rollup);
RollUpMap read_rollup(std::istream& in);

struct PruneResult {
  Ontology ontology;
  RollUpMap rollup;
};

// Keeps nodes whose minimum depth is <= max_depth (induced subgraph) and
// rolls the rest up onto retained ancestors.
PruneResult prune_to_depth(const Ontology& ont, int max_depth);

inline constexpr int kDefaultDepthLimit = 5;

// IC(c) = -ln(|descendants(c) + c| / |V|) plus the ancestor structure needed
// for fast Resnik queries.
class InformationContentTable {
 public:
  explicit InformationContentTable(const Ontology& ont);

  double ic(ConceptIndex i) const { return ic_[i]; }
  std::span<const double> values() const { return ic_; }
  std::size_t descendant_count(ConceptIndex i) const { return desc_count_[i]; }

  // Ancestors of i including i, sorted by index.
  std::span<const ConceptIndex> ancestors(ConceptIndex i) const;

  // IC of the most informative common ancestor. Throws InputError if the two
  // concepts share no ancestor.
  double resnik(ConceptIndex a, ConceptIndex b) const;

 private:
  std::vector<double> ic_;
  std::vector<std::size_t> desc_count_;
  std::vector<std::size_t> anc_offsets_;
  std::vector<ConceptIndex> anc_by_index_;
  std::vector<ConceptIndex> anc_by_ic_;
};

InformationContentTable information_content(const Ontology& ont);

double resnik_similarity(const Ontology& ont, const InformationContentTable& ic,
                         ConceptId c1, ConceptId c2);

}  // namespace keep
