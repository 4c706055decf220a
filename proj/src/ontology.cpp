#include "keep/ontology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include "text_util.hpp"

namespace keep {

CycleError::CycleError(IsAEdge edge)
    : InputError("is-a cycle through edge " + std::to_string(edge.child.value) +
                 " -> " + std::to_string(edge.parent.value)),
      edge_(edge) {}

namespace {

struct Csr {
  std::vector<std::size_t> offsets;
  std::vector<ConceptIndex> list;
};

Csr make_csr(std::size_t n,
             const std::vector<std::pair<ConceptIndex, ConceptIndex>>& pairs,
             bool by_first) {
  Csr csr;
  csr.offsets.assign(n + 1, 0);
  for (const auto& [a, b] : pairs) ++csr.offsets[(by_first ? a : b) + 1];
  for (std::size_t i = 0; i < n; ++i) csr.offsets[i + 1] += csr.offsets[i];
  csr.list.resize(pairs.size());
  auto cursor = csr.offsets;
  for (const auto& [a, b] : pairs) {
    const auto from = by_first ? a : b;
    csr.list[cursor[from]++] = by_first ? b : a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(csr.list.begin() + csr.offsets[i],
              csr.list.begin() + csr.offsets[i + 1]);
  }
  return csr;
}

// Iterative three-colour DFS over parent links. Returns an edge on a cycle.
std::optional<std::pair<ConceptIndex, ConceptIndex>> find_cycle(
    std::size_t n, const Csr& parents) {
  enum : std::uint8_t { kWhite, kGrey, kBlack };
  std::vector<std::uint8_t> colour(n, kWhite);
  std::vector<std::pair<ConceptIndex, std::size_t>> stack;
  for (ConceptIndex start = 0; start < n; ++start) {
    if (colour[start] != kWhite) continue;
    stack.emplace_back(start, parents.offsets[start]);
    colour[start] = kGrey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next == parents.offsets[node + 1]) {
        colour[node] = kBlack;
        stack.pop_back();
        continue;
      }
      const ConceptIndex parent = parents.list[next++];
      if (colour[parent] == kGrey) return std::make_pair(node, parent);
      if (colour[parent] == kWhite) {
        colour[parent] = kGrey;
        stack.emplace_back(parent, parents.offsets[parent]);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

// Builds from an already validated node set: every node reaches `root` and
// the edges are acyclic and deduplicated.
class OntologyBuilder {
 public:
  static Ontology build(std::vector<ConceptId> nodes,
                        const std::vector<IsAEdge>& edges, ConceptId root);
};

Ontology OntologyBuilder::build(std::vector<ConceptId> nodes,
                                const std::vector<IsAEdge>& edges,
                                ConceptId root) {
  Ontology ont;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  ont.ids_ = std::move(nodes);
  const std::size_t n = ont.ids_.size();
  ont.index_.reserve(n);
  for (ConceptIndex i = 0; i < n; ++i) ont.index_.emplace(ont.ids_[i], i);
  ont.root_ = ont.index_.at(root);

  ont.child_parent_.reserve(edges.size());
  for (const auto& e : edges) {
    ont.child_parent_.emplace_back(ont.index_.at(e.child),
                                   ont.index_.at(e.parent));
  }
  std::sort(ont.child_parent_.begin(), ont.child_parent_.end());

  auto parents = make_csr(n, ont.child_parent_, true);
  auto children = make_csr(n, ont.child_parent_, false);
  ont.parent_offsets_ = std::move(parents.offsets);
  ont.parent_list_ = std::move(parents.list);
  ont.child_offsets_ = std::move(children.offsets);
  ont.child_list_ = std::move(children.list);

  // BFS gives minimum depth.
  ont.depth_.assign(n, -1);
  std::deque<ConceptIndex> queue{ont.root_};
  ont.depth_[ont.root_] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto c : ont.children(u)) {
      if (ont.depth_[c] < 0) {
        ont.depth_[c] = ont.depth_[u] + 1;
        queue.push_back(c);
      }
    }
  }

  // Kahn order from the root.
  std::vector<std::size_t> pending(n);
  for (ConceptIndex i = 0; i < n; ++i) pending[i] = ont.parents(i).size();
  ont.topo_.reserve(n);
  ont.topo_.push_back(ont.root_);
  for (std::size_t head = 0; head < ont.topo_.size(); ++head) {
    for (auto c : ont.children(ont.topo_[head])) {
      if (--pending[c] == 0) ont.topo_.push_back(c);
    }
  }
  ont.labels_.assign(n, std::string());
  return ont;
}

Ontology Ontology::from_edges(std::span<const IsAEdge> edges, ConceptId root,
                              LoadReport* report) {
  std::vector<IsAEdge> unique(edges.begin(), edges.end());
  std::sort(unique.begin(), unique.end());
  const auto last = std::unique(unique.begin(), unique.end());
  const std::size_t duplicates = static_cast<std::size_t>(unique.end() - last);
  unique.erase(last, unique.end());

  std::vector<ConceptId> ids;
  ids.reserve(unique.size() * 2);
  for (const auto& e : unique) {
    if (e.child == e.parent) throw CycleError(e);
    ids.push_back(e.child);
    ids.push_back(e.parent);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (!std::binary_search(ids.begin(), ids.end(), root)) {
    throw InputError("root " + std::to_string(root.value) +
                     " does not occur in the edge list");
  }

  const std::size_t n = ids.size();
  auto idx = [&](ConceptId id) {
    return static_cast<ConceptIndex>(
        std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<std::pair<ConceptIndex, ConceptIndex>> pairs;
  pairs.reserve(unique.size());
  for (const auto& e : unique) pairs.emplace_back(idx(e.child), idx(e.parent));

  const auto parents = make_csr(n, pairs, true);
  if (auto cyc = find_cycle(n, parents)) {
    throw CycleError(IsAEdge{ids[cyc->first], ids[cyc->second]});
  }

  // A node reaches the root upward iff the root reaches it downward.
  const auto children = make_csr(n, pairs, false);
  std::vector<char> reach(n, 0);
  std::vector<ConceptIndex> stack{idx(root)};
  reach[idx(root)] = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto k = children.offsets[u]; k < children.offsets[u + 1]; ++k) {
      const auto c = children.list[k];
      if (!reach[c]) {
        reach[c] = 1;
        stack.push_back(c);
      }
    }
  }

  std::vector<ConceptId> kept;
  LoadReport local;
  for (ConceptIndex i = 0; i < n; ++i) {
    if (reach[i]) {
      kept.push_back(ids[i]);
    } else {
      local.unreachable.push_back(ids[i]);
    }
  }
  std::vector<IsAEdge> kept_edges;
  kept_edges.reserve(unique.size());
  for (std::size_t k = 0; k < unique.size(); ++k) {
    if (reach[pairs[k].first] && reach[pairs[k].second]) {
      kept_edges.push_back(unique[k]);
    }
  }
  local.duplicate_edges = duplicates;
  if (report) *report = std::move(local);
  return OntologyBuilder::build(std::move(kept), kept_edges, root);
}

std::optional<ConceptIndex> Ontology::find(ConceptId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ConceptIndex Ontology::index(ConceptId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw InputError("unknown concept " + std::to_string(id.value));
  }
  return it->second;
}

std::span<const ConceptIndex> Ontology::parents(ConceptIndex i) const {
  return std::span(parent_list_).subspan(
      parent_offsets_[i], parent_offsets_[i + 1] - parent_offsets_[i]);
}

std::span<const ConceptIndex> Ontology::children(ConceptIndex i) const {
  return std::span(child_list_).subspan(
      child_offsets_[i], child_offsets_[i + 1] - child_offsets_[i]);
}

int Ontology::max_depth() const {
  return depth_.empty() ? 0 : *std::max_element(depth_.begin(), depth_.end());
}

std::vector<IsAEdge> Ontology::edges() const {
  std::vector<IsAEdge> out;
  out.reserve(child_parent_.size());
  for (const auto& [c, p] : child_parent_) out.push_back({ids_[c], ids_[p]});
  return out;
}

const std::string& Ontology::label(ConceptIndex i) const { return labels_[i]; }

void Ontology::set_label(ConceptId id, std::string text) {
  labels_[index(id)] = std::move(text);
}

std::vector<IsAEdge> read_edge_list(std::istream& in) {
  std::vector<IsAEdge> edges;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t no) {
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2) fields = detail::split_ws(line);
    if (fields.size() != 2) {
      throw InputError("line " + std::to_string(no) +
                       ": expected child\\tparent");
    }
    edges.push_back(
        {ConceptId(detail::parse_number<std::uint64_t>(fields[0], no, "child id")),
         ConceptId(
             detail::parse_number<std::uint64_t>(fields[1], no, "parent id"))});
  });
  return edges;
}

void write_edge_list(std::ostream& out, const Ontology& ont) {
  out << "# child_id\tparent_id\n";
  for (const auto& e : ont.edges()) {
    out << e.child.value << '\t' << e.parent.value << '\n';
  }
}

Ontology load_ontology(std::istream& edge_list, ConceptId root,
                       LoadReport* report) {
  const auto edges = read_edge_list(edge_list);
  return Ontology::from_edges(edges, root, report);
}

Ontology load_ontology(const std::filesystem::path& edge_list, ConceptId root,
                       LoadReport* report) {
  std::ifstream in(edge_list);
  if (!in) throw InputError("cannot open " + edge_list.string());
  return load_ontology(in, root, report);
}

ConceptId infer_root(std::span<const IsAEdge> edges) {
  std::unordered_set<ConceptId> has_parent;
  std::set<ConceptId> nodes;
  for (const auto& e : edges) {
    has_parent.insert(e.child);
    nodes.insert(e.child);
    nodes.insert(e.parent);
  }
  std::vector<ConceptId> roots;
  for (auto id : nodes) {
    if (!has_parent.contains(id)) roots.push_back(id);
  }
  if (roots.size() != 1) {
    throw InputError("cannot infer root: " + std::to_string(roots.size()) +
                     " parentless nodes");
  }
  return roots.front();
}

void write_vocabulary(std::ostream& out, const Ontology& ont) {
  out << "# internal_index\texternal_id\tlabel\n";
  for (ConceptIndex i = 0; i < ont.size(); ++i) {
    out << i << '\t' << ont.id(i).value << '\t' << ont.label(i) << '\n';
  }
}

std::vector<VocabularyEntry> read_vocabulary(std::istream& in) {
  std::vector<VocabularyEntry> vocab;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t no) {
    const auto fields = detail::split(line, '\t');
    if (fields.size() < 2) {
      throw InputError("line " + std::to_string(no) +
                       ": expected internal_index\\texternal_id\\tlabel");
    }
    VocabularyEntry e;
    e.index = detail::parse_number<ConceptIndex>(fields[0], no, "index");
    e.id = ConceptId(detail::parse_number<std::uint64_t>(fields[1], no, "id"));
    if (fields.size() > 2) e.label = std::string(fields[2]);
    if (e.index != vocab.size()) {
      throw InputError("line " + std::to_string(no) +
                       ": vocabulary indices must be dense and ordered");
    }
    vocab.push_back(std::move(e));
  });
  return vocab;
}

void apply_labels(Ontology& ont, std::span<const VocabularyEntry> vocab) {
  for (const auto& e : vocab) {
    if (ont.contains(e.id)) ont.set_label(e.id, e.label);
  }
}

std::span<const ConceptId> RollUpMap::targets(ConceptId excluded) const {
  const auto it = map_.find(excluded);
  if (it == map_.end()) return {};
  return it->second;
}

void RollUpMap::insert(ConceptId excluded, std::vector<ConceptId> targets) {
  if (targets.empty()) {
    throw InputError("roll-up of " + std::to_string(excluded.value) +
                     " has no target");
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  map_[excluded] = std::move(targets);
}

void write_rollup(std::ostream& out, const RollUpMap& rollup) {
  out << "# excluded_id\ttarget_id\n";
  for (const auto& [src, targets] : rollup.entries()) {
    for (auto t : targets) out << src.value << '\t' << t.value << '\n';
  }
}

RollUpMap read_rollup(std::istream& in) {
  std::map<ConceptId, std::vector<ConceptId>> pending;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t no) {
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2) {
      throw InputError("line " + std::to_string(no) +
                       ": expected excluded_id\\ttarget_id");
    }
    pending[ConceptId(detail::parse_number<std::uint64_t>(fields[0], no, "id"))]
        .push_back(ConceptId(
            detail::parse_number<std::uint64_t>(fields[1], no, "id")));
  });
  RollUpMap map;
  for (auto& [src, targets] : pending) map.insert(src, std::move(targets));
  return map;
}

PruneResult prune_to_depth(const Ontology& ont, int max_depth) {
  if (max_depth < 1) throw ConfigError("max_depth", "must be >= 1");
  const std::size_t n = ont.size();
  std::vector<char> retained(n);
  std::vector<ConceptId> kept;
  for (ConceptIndex i = 0; i < n; ++i) {
    retained[i] = ont.depth(i) <= max_depth;
    if (retained[i]) kept.push_back(ont.id(i));
  }

  std::vector<IsAEdge> kept_edges;
  for (const auto& e : ont.edges()) {
    if (retained[ont.index(e.child)] && retained[ont.index(e.parent)]) {
      kept_edges.push_back(e);
    }
  }

  // Parents precede children in topological order, so each excluded node's
  // parents are resolved before it.
  std::vector<std::vector<ConceptIndex>> targets(n);
  RollUpMap rollup;
  for (auto u : ont.topological_order()) {
    if (retained[u]) continue;
    auto& t = targets[u];
    for (auto p : ont.parents(u)) {
      if (retained[p]) {
        t.push_back(p);
      } else {
        t.insert(t.end(), targets[p].begin(), targets[p].end());
      }
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    std::vector<ConceptId> ids;
    ids.reserve(t.size());
    for (auto i : t) ids.push_back(ont.id(i));
    rollup.insert(ont.id(u), std::move(ids));
  }

  Ontology pruned =
      OntologyBuilder::build(std::move(kept), kept_edges, ont.id(ont.root()));
  for (ConceptIndex i = 0; i < pruned.size(); ++i) {
    const auto& text = ont.label(ont.index(pruned.id(i)));
    if (!text.empty()) pruned.set_label(pruned.id(i), text);
  }
  return {std::move(pruned), std::move(rollup)};
}

InformationContentTable::InformationContentTable(const Ontology& ont) {
  const std::size_t n = ont.size();
  std::vector<std::vector<ConceptIndex>> anc(n);
  for (auto u : ont.topological_order()) {
    auto& a = anc[u];
    a.push_back(u);
    for (auto p : ont.parents(u)) a.insert(a.end(), anc[p].begin(), anc[p].end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  desc_count_.assign(n, 0);
  anc_offsets_.assign(n + 1, 0);
  for (ConceptIndex u = 0; u < n; ++u) {
    for (auto a : anc[u]) ++desc_count_[a];
    anc_offsets_[u + 1] = anc_offsets_[u] + anc[u].size();
  }
  ic_.resize(n);
  for (ConceptIndex u = 0; u < n; ++u) {
    ic_[u] = -std::log(static_cast<double>(desc_count_[u]) /
                       static_cast<double>(n)) +
             0.0;
  }

  anc_by_index_.reserve(anc_offsets_[n]);
  anc_by_ic_.reserve(anc_offsets_[n]);
  for (ConceptIndex u = 0; u < n; ++u) {
    anc_by_index_.insert(anc_by_index_.end(), anc[u].begin(), anc[u].end());
    auto by_ic = anc[u];
    std::sort(by_ic.begin(), by_ic.end(), [&](ConceptIndex x, ConceptIndex y) {
      return ic_[x] != ic_[y] ? ic_[x] > ic_[y] : x < y;
    });
    anc_by_ic_.insert(anc_by_ic_.end(), by_ic.begin(), by_ic.end());
  }
}

std::span<const ConceptIndex> InformationContentTable::ancestors(
    ConceptIndex i) const {
  return std::span(anc_by_index_)
      .subspan(anc_offsets_[i], anc_offsets_[i + 1] - anc_offsets_[i]);
}

double InformationContentTable::resnik(ConceptIndex a, ConceptIndex b) const {
  const auto other = ancestors(b);
  for (auto k = anc_offsets_[a]; k < anc_offsets_[a + 1]; ++k) {
    const auto cand = anc_by_ic_[k];
    if (std::binary_search(other.begin(), other.end(), cand)) return ic_[cand];
  }
  throw InputError("concepts " + std::to_string(a) + " and " +
                   std::to_string(b) + " share no ancestor");
}

InformationContentTable information_content(const Ontology& ont) {
  return InformationContentTable(ont);
}

double resnik_similarity(const Ontology& ont, const InformationContentTable& ic,
                         ConceptId c1, ConceptId c2) {
  return ic.resnik(ont.index(c1), ont.index(c2));
}

}  // namespace keep
