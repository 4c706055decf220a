#pragma once

// Test-only helpers: small graph builders and brute-force oracles that share
// no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "keep/cooccurrence.hpp"
#include "keep/embedding.hpp"
#include "keep/keep_trainer.hpp"
#include "keep/ontology.hpp"

namespace testsupport {

using keep::ConceptId;
using keep::IsAEdge;

inline ConceptId cid(std::uint64_t v) { return ConceptId(v); }

// Random rooted DAG: node k > 0 gets one parent among the older nodes, then
// `extra` additional child -> older-node edges. Ids are scattered so the
// dense index order differs from the creation order.
inline std::vector<IsAEdge> random_dag(int n, std::uint64_t seed, double extra = 0.15,
                                       double deep_bias = 0.6) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) ids[static_cast<std::size_t>(k)] = 13u * static_cast<unsigned>(k) + 5u;
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<IsAEdge> edges;
  std::set<std::pair<int, int>> seen;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 1; k < n; ++k) {
    // Prefer recent parents sometimes so the depth spread is large.
    int parent = u(rng) < deep_bias ? std::max(0, k - 1 - static_cast<int>(rng() % 3))
                                    : static_cast<int>(rng() % static_cast<unsigned>(k));
    edges.push_back({cid(ids[static_cast<std::size_t>(k)]), cid(ids[static_cast<std::size_t>(parent)])});
    seen.insert({k, parent});
  }
  const int n_extra = static_cast<int>(extra * n);
  for (int e = 0; e < n_extra; ++e) {
    const int child = 2 + static_cast<int>(rng() % static_cast<unsigned>(std::max(1, n - 2)));
    if (child >= n) continue;
    const int parent = static_cast<int>(rng() % static_cast<unsigned>(child));
    if (!seen.insert({child, parent}).second) continue;
    edges.push_back({cid(ids[static_cast<std::size_t>(child)]), cid(ids[static_cast<std::size_t>(parent)])});
  }
  return edges;
}

// Plain adjacency over external ids.
struct BruteGraph {
  std::set<ConceptId> nodes;
  std::map<ConceptId, std::vector<ConceptId>> parents, children;

  explicit BruteGraph(const std::vector<IsAEdge>& edges) {
    for (const auto& e : edges) {
      nodes.insert(e.child);
      nodes.insert(e.parent);
      parents[e.child].push_back(e.parent);
      children[e.parent].push_back(e.child);
    }
  }

  std::set<ConceptId> ancestors_or_self(ConceptId c) const {
    std::set<ConceptId> out{c};
    std::vector<ConceptId> stack{c};
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      auto it = parents.find(x);
      if (it == parents.end()) continue;
      for (auto p : it->second) {
        if (out.insert(p).second) stack.push_back(p);
      }
    }
    return out;
  }

  std::set<ConceptId> descendants_or_self(ConceptId c) const {
    std::set<ConceptId> out{c};
    std::vector<ConceptId> stack{c};
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      auto it = children.find(x);
      if (it == children.end()) continue;
      for (auto ch : it->second) {
        if (out.insert(ch).second) stack.push_back(ch);
      }
    }
    return out;
  }

  // BFS hop distance from the root along child edges.
  std::map<ConceptId, int> min_depth(ConceptId root) const {
    std::map<ConceptId, int> d{{root, 0}};
    std::vector<ConceptId> frontier{root};
    while (!frontier.empty()) {
      std::vector<ConceptId> next;
      for (auto x : frontier) {
        auto it = children.find(x);
        if (it == children.end()) continue;
        for (auto ch : it->second) {
          if (!d.contains(ch)) {
            d[ch] = d[x] + 1;
            next.push_back(ch);
          }
        }
      }
      frontier = std::move(next);
    }
    return d;
  }

  double ic(ConceptId c) const {
    return -std::log(static_cast<double>(descendants_or_self(c).size()) /
                     static_cast<double>(nodes.size()));
  }

  double resnik(ConceptId a, ConceptId b) const {
    auto aa = ancestors_or_self(a);
    auto bb = ancestors_or_self(b);
    double best = -1.0;
    for (auto x : aa) {
      if (bb.contains(x)) best = std::max(best, ic(x));
    }
    return best;
  }

  // First retained node met on every upward path from `c`.
  std::set<ConceptId> rollup_targets(ConceptId c, const std::set<ConceptId>& retained) const {
    std::set<ConceptId> out;
    std::vector<ConceptId> stack;
    for (auto p : parents.at(c)) stack.push_back(p);
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      if (retained.contains(x)) {
        out.insert(x);
        continue;
      }
      for (auto p : parents.at(x)) stack.push_back(p);
    }
    return out;
  }
};

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("keep_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Random symmetric counts: every unordered pair is present with `density`,
// counts 1..max_count, skewed towards small values.
inline keep::CooccurrenceMatrix random_cooc(std::size_t v, double density, std::uint64_t seed,
                                            std::uint32_t max_count = 50) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<keep::CooccurrenceMatrix::Entry> entries;
  std::vector<std::uint32_t> marg(v, 0);
  for (keep::ConceptIndex i = 0; i < v; ++i) {
    for (keep::ConceptIndex j = i + 1; j < v; ++j) {
      if (u(rng) >= density) continue;
      const auto c = 1 + static_cast<std::uint32_t>(std::pow(u(rng), 2.0) * max_count);
      entries.push_back({i, j, c});
      marg[i] = std::max(marg[i], c);
      marg[j] = std::max(marg[j], c);
    }
  }
  return keep::CooccurrenceMatrix(v, std::move(entries), std::move(marg));
}

inline keep::EmbeddingMatrix random_embedding(std::size_t rows, std::size_t dim, std::uint64_t seed,
                                              double scale = 1.0) {
  keep::EmbeddingMatrix m(rows, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  for (double& x : m.values()) x = nd(rng);
  return m;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// KEEP objective re-summed in long double. Central differences of a loss near
// 10-100 at h = 1e-6 lose about 1e-9 to double rounding, which is the size of
// a 1e-5 relative error on small gradient components.
inline long double extended_loss(const keep::KeepModel& m, const keep::CooccurrenceMatrix& x,
                                 double x_max, double alpha, double lambda) {
  long double loss = 0.0L;
  const std::size_t d = m.w.dim();
  for (const auto& e : x.entries()) {
    const long double f = e.count < x_max ? std::pow(static_cast<long double>(e.count) / x_max,
                                                     static_cast<long double>(alpha))
                                          : 1.0L;
    const long double target = std::log(static_cast<long double>(e.count));
    for (auto [i, j] : {std::pair{e.i, e.j}, std::pair{e.j, e.i}}) {
      long double s = static_cast<long double>(m.b[i]) + m.b_ctx[j] - target;
      for (std::size_t k = 0; k < d; ++k) s += static_cast<long double>(m.w(i, k)) * m.w_ctx(j, k);
      loss += f * s * s;
    }
  }
  if (m.anchor) {
    long double reg = 0.0L;
    for (std::size_t k = 0; k < m.w.values().size(); ++k) {
      const long double z = static_cast<long double>(m.w.values()[k]) - m.anchor->values()[k];
      reg += z * z;
    }
    loss += lambda * reg;
  }
  return loss;
}

}  // namespace testsupport
