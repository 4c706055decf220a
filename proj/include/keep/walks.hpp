#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "keep/ontology.hpp"
#include "keep/rng.hpp"

namespace keep {

struct WalkConfig {
  int walk_length = 30;
  int walks_per_node = 750;
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  std::uint64_t rng_seed = 0;
  int threads = 0;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

// Undirected simple graph in CSR form with sorted neighbour lists.
class WalkGraph {
 public:
  static WalkGraph from_ontology(const Ontology& ont);
  static WalkGraph from_edges(
      std::size_t num_nodes,
      std::span<const std::pair<ConceptIndex, ConceptIndex>> edges);

  std::size_t size() const { return offsets_.size() - 1; }
  std::span<const ConceptIndex> neighbors(ConceptIndex v) const {
    return std::span(adj_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
  }
  bool adjacent(ConceptIndex a, ConceptIndex b) const;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<ConceptIndex> adj_;
};

// Walks stored back to back.
class WalkCorpus {
 public:
  WalkCorpus() = default;
  explicit WalkCorpus(std::size_t vocab_size) : vocab_size_(vocab_size) {}

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t size() const { return offsets_.size() - 1; }
  std::size_t token_count() const { return tokens_.size(); }
  std::span<const ConceptIndex> walk(std::size_t i) const {
    return std::span(tokens_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  std::span<const ConceptIndex> tokens() const { return tokens_; }

  // Throws InputError on out-of-vocabulary ids or an empty walk.
  void append(std::span<const ConceptIndex> walk);

  bool operator==(const WalkCorpus&) const = default;

 private:
  std::size_t vocab_size_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<ConceptIndex> tokens_;
};

// Second-order (node2vec) transition sampler. Exact: the next node is drawn
// from the normalised {1/p, 1, 1/q} weights by inverse CDF.
class Node2VecSampler {
 public:
  Node2VecSampler(const WalkGraph& graph, double p, double q);

  // First step from `start`, uniform over neighbours.
  ConceptIndex first(ConceptIndex start, Rng& rng) const;
  ConceptIndex next(ConceptIndex prev, ConceptIndex cur, Rng& rng) const;

 private:
  const WalkGraph& graph_;
  double inv_p_, inv_q_;
  bool uniform_;
};

// walks_per_node walks of walk_length nodes from every node, ordered by
// (start node, replica). Each start node owns an RNG stream derived from
// (seed, node), so the corpus does not depend on the thread count.
WalkCorpus generate_walks(const WalkGraph& graph, const WalkConfig& cfg);
WalkCorpus generate_walks(const Ontology& ont, const WalkConfig& cfg);

// One walk per line, space-separated internal indices.
void write_corpus(std::ostream& out, const WalkCorpus& corpus);
// vocab_size 0 infers max index + 1.
WalkCorpus read_corpus(std::istream& in, std::size_t vocab_size = 0);

}  // namespace keep
