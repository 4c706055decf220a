#include "keep/walks.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include "keep/parallel.hpp"
#include "text_util.hpp"

namespace keep {

void WalkConfig::validate() const {
  if (walk_length < 2) throw ConfigError("walk_length", "must be >= 2");
  if (walks_per_node < 1) throw ConfigError("walks_per_node", "must be >= 1");
  if (!(p > 0.0)) throw ConfigError("p", "must be > 0");
  if (!(q > 0.0)) throw ConfigError("q", "must be > 0");
  if (threads < 0) throw ConfigError("threads", "must be >= 0");
}

WalkGraph WalkGraph::from_edges(
    std::size_t num_nodes,
    std::span<const std::pair<ConceptIndex, ConceptIndex>> edges) {
  std::vector<std::pair<ConceptIndex, ConceptIndex>> both;
  both.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    if (a >= num_nodes || b >= num_nodes) {
      throw InputError("edge endpoint out of range");
    }
    if (a == b) continue;
    both.emplace_back(a, b);
    both.emplace_back(b, a);
  }
  std::sort(both.begin(), both.end());
  both.erase(std::unique(both.begin(), both.end()), both.end());

  WalkGraph g;
  g.offsets_.assign(num_nodes + 1, 0);
  for (const auto& e : both) ++g.offsets_[e.first + 1];
  for (std::size_t i = 0; i < num_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adj_.reserve(both.size());
  for (const auto& e : both) g.adj_.push_back(e.second);
  return g;
}

WalkGraph WalkGraph::from_ontology(const Ontology& ont) {
  std::vector<std::pair<ConceptIndex, ConceptIndex>> edges;
  edges.reserve(ont.edge_count());
  for (ConceptIndex c = 0; c < ont.size(); ++c) {
    for (auto p : ont.parents(c)) edges.emplace_back(c, p);
  }
  return from_edges(ont.size(), edges);
}

bool WalkGraph::adjacent(ConceptIndex a, ConceptIndex b) const {
  const auto n = neighbors(a);
  return std::binary_search(n.begin(), n.end(), b);
}

void WalkCorpus::append(std::span<const ConceptIndex> walk) {
  if (walk.empty()) throw InputError("empty walk");
  for (auto t : walk) {
    if (t >= vocab_size_) {
      throw InputError("walk token " + std::to_string(t) +
                       " outside vocabulary of size " +
                       std::to_string(vocab_size_));
    }
  }
  tokens_.insert(tokens_.end(), walk.begin(), walk.end());
  offsets_.push_back(tokens_.size());
}

Node2VecSampler::Node2VecSampler(const WalkGraph& graph, double p, double q)
    : graph_(graph), inv_p_(1.0 / p), inv_q_(1.0 / q),
      uniform_(p == 1.0 && q == 1.0) {}

ConceptIndex Node2VecSampler::first(ConceptIndex start, Rng& rng) const {
  const auto nb = graph_.neighbors(start);
  std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
  return nb[pick(rng)];
}

ConceptIndex Node2VecSampler::next(ConceptIndex prev, ConceptIndex cur,
                                   Rng& rng) const {
  const auto nb = graph_.neighbors(cur);
  if (uniform_) {
    std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
    return nb[pick(rng)];
  }
  auto weight = [&](ConceptIndex x) {
    if (x == prev) return inv_p_;
    return graph_.adjacent(prev, x) ? 1.0 : inv_q_;
  };
  double total = 0.0;
  for (auto x : nb) total += weight(x);
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  for (auto x : nb) {
    acc += weight(x);
    if (u < acc) return x;
  }
  return nb.back();
}

WalkCorpus generate_walks(const WalkGraph& graph, const WalkConfig& cfg) {
  cfg.validate();
  const std::size_t n = graph.size();
  if (n == 0) throw InputError("cannot walk an empty graph");

  const std::size_t per_node = static_cast<std::size_t>(cfg.walks_per_node);
  const std::size_t len = static_cast<std::size_t>(cfg.walk_length);
  // Fixed-size slots; isolated nodes only fill their first token.
  std::vector<ConceptIndex> slots(n * per_node * len);
  std::vector<std::uint32_t> lengths(n * per_node);
  const Node2VecSampler sampler(graph, cfg.p, cfg.q);

#pragma omp parallel for schedule(dynamic, 16) num_threads(resolve_threads(cfg.threads))
  for (std::size_t v = 0; v < n; ++v) {
    Rng rng = make_stream(cfg.rng_seed, v);
    const auto start = static_cast<ConceptIndex>(v);
    const bool isolated = graph.neighbors(start).empty();
    for (std::size_t r = 0; r < per_node; ++r) {
      const std::size_t slot = v * per_node + r;
      ConceptIndex* out = slots.data() + slot * len;
      out[0] = start;
      if (isolated) {
        lengths[slot] = 1;
        continue;
      }
      out[1] = sampler.first(start, rng);
      for (std::size_t k = 2; k < len; ++k) {
        out[k] = sampler.next(out[k - 2], out[k - 1], rng);
      }
      lengths[slot] = static_cast<std::uint32_t>(len);
    }
  }

  WalkCorpus corpus(n);
  for (std::size_t slot = 0; slot < lengths.size(); ++slot) {
    corpus.append(std::span(slots).subspan(slot * len, lengths[slot]));
  }
  return corpus;
}

WalkCorpus generate_walks(const Ontology& ont, const WalkConfig& cfg) {
  return generate_walks(WalkGraph::from_ontology(ont), cfg);
}

void write_corpus(std::ostream& out, const WalkCorpus& corpus) {
  std::string line;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    line.clear();
    for (auto t : corpus.walk(i)) {
      if (!line.empty()) line.push_back(' ');
      line += std::to_string(t);
    }
    line.push_back('\n');
    out << line;
  }
}

WalkCorpus read_corpus(std::istream& in, std::size_t vocab_size) {
  std::vector<std::vector<ConceptIndex>> walks;
  std::size_t max_index = 0;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t no) {
    std::vector<ConceptIndex> walk;
    for (auto field : detail::split_ws(line)) {
      walk.push_back(detail::parse_number<ConceptIndex>(field, no, "index"));
      max_index = std::max<std::size_t>(max_index, walk.back());
    }
    walks.push_back(std::move(walk));
  });
  if (vocab_size == 0) vocab_size = walks.empty() ? 0 : max_index + 1;
  WalkCorpus corpus(vocab_size);
  for (const auto& w : walks) corpus.append(w);
  return corpus;
}

}  // namespace keep
