#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <sstream>

#include "keep/alias.hpp"
#include "keep/embedding.hpp"
#include "keep/sgns.hpp"
#include "keep/stats.hpp"
#include "support.hpp"

using namespace keep;

namespace {

double tuple_loss(std::span<const double> in, const std::vector<std::vector<double>>& outs) {
  auto log_sig = [](double z) { return -std::log1p(std::exp(-z)); };
  double l = 0.0;
  for (std::size_t k = 0; k < outs.size(); ++k) {
    double s = 0.0;
    for (std::size_t d = 0; d < in.size(); ++d) s += in[d] * outs[k][d];
    l -= k == 0 ? log_sig(s) : log_sig(-s);
  }
  return l;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

WalkCorpus two_cliques(int walks, std::uint64_t seed) {
  // Nodes 0-4 and 5-9 form two disconnected 5-cliques.
  std::vector<std::pair<ConceptIndex, ConceptIndex>> e;
  for (ConceptIndex base : {0u, 5u}) {
    for (ConceptIndex a = 0; a < 5; ++a) {
      for (ConceptIndex b = a + 1; b < 5; ++b) e.emplace_back(base + a, base + b);
    }
  }
  const auto g = WalkGraph::from_edges(10, e);
  WalkConfig wc;
  wc.walk_length = 20;
  wc.walks_per_node = walks;
  wc.rng_seed = seed;
  return generate_walks(g, wc);
}

}  // namespace

TEST_SUITE("alias") {

TEST_CASE("alias table reproduces the target probabilities") {
  const std::vector<double> w{5.0, 0.0, 1.0, 3.0, 0.5, 0.5};
  AliasTable t(w);
  double total = 0.0;
  for (double x : w) total += x;
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(t.probability(i) == doctest::Approx(w[i] / total).epsilon(1e-12));
  }
  std::mt19937_64 rng(3);
  std::vector<double> obs(w.size(), 0.0);
  const int n = 200000;
  for (int k = 0; k < n; ++k) obs[t(rng)] += 1.0;
  CHECK(obs[1] == 0.0);
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double e = n * w[i] / total;
    stat += (obs[i] - e) * (obs[i] - e) / e;
    ++cells;
  }
  boost::math::chi_squared dist(cells - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, stat)) > 0.01);
}

TEST_CASE("alias table rejects bad weights") {
  CHECK_THROWS_AS(AliasTable(std::vector<double>{}), InputError);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{0.0, 0.0}), InputError);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{1.0, -1.0}), InputError);
}

TEST_CASE("single-entry table always returns it") {
  AliasTable t(std::vector<double>{2.5});
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) CHECK(t(rng) == 0);
}

}  // TEST_SUITE

TEST_SUITE("sgns") {

TEST_CASE("tuple gradient matches central finite differences") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.0, 0.7);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + trial % 6;
    const std::size_t n_out = 1 + trial % 5;
    std::vector<double> in(dim);
    std::vector<std::vector<double>> outs(n_out, std::vector<double>(dim));
    for (auto& x : in) x = nd(rng);
    for (auto& o : outs) {
      for (auto& x : o) x = nd(rng);
    }
    std::vector<std::span<const double>> views(outs.begin(), outs.end());
    std::vector<double> coeff(n_out), grad_in(dim);
    const double l = sgns_tuple_gradient(in, views, coeff, grad_in);
    CHECK(l == doctest::Approx(tuple_loss(in, outs)).epsilon(1e-12));
    for (std::size_t d = 0; d < dim; ++d) {
      auto plus = in, minus = in;
      plus[d] += h;
      minus[d] -= h;
      const double fd = (tuple_loss(plus, outs) - tuple_loss(minus, outs)) / (2 * h);
      CHECK(testsupport::rel_err(grad_in[d], fd) < 1e-5);
    }
    for (std::size_t k = 0; k < n_out; ++k) {
      for (std::size_t d = 0; d < dim; ++d) {
        auto plus = outs, minus = outs;
        plus[k][d] += h;
        minus[k][d] -= h;
        const double fd = (tuple_loss(in, plus) - tuple_loss(in, minus)) / (2 * h);
        CHECK(testsupport::rel_err(coeff[k] * in[d], fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("loss stays finite for extreme scores") {
  const std::vector<double> in{50.0, -50.0};
  const std::vector<double> pos{-40.0, 40.0}, neg{40.0, -40.0};
  std::vector<std::span<const double>> outs{pos, neg};
  std::vector<double> coeff(2), grad(2);
  const double l = sgns_tuple_gradient(in, outs, coeff, grad);
  CHECK(std::isfinite(l));
  CHECK(l > 1000.0);
  for (double g : grad) CHECK(std::isfinite(g));
}

TEST_CASE("disconnected cliques separate") {
  SgnsConfig cfg;
  cfg.dim = 16;
  cfg.window = 5;
  cfg.epochs = 3;
  cfg.rng_seed = 2;
  const auto emb = train_sgns(two_cliques(30, 1), cfg);
  double within = 0.0, across = 0.0;
  int nw = 0, na = 0;
  for (std::size_t a = 0; a < 10; ++a) {
    for (std::size_t b = a + 1; b < 10; ++b) {
      const double c = cosine(emb.row(a), emb.row(b));
      if ((a < 5) == (b < 5)) {
        within += c;
        ++nw;
      } else {
        across += c;
        ++na;
      }
    }
  }
  CHECK(within / nw > across / na);
}

TEST_CASE("sole positive pair: target-context cosine rises every epoch") {
  WalkCorpus corpus(2);
  std::vector<ConceptIndex> walk;
  for (int k = 0; k < 40; ++k) walk.push_back(static_cast<ConceptIndex>(k % 2));
  corpus.append(walk);
  SgnsConfig cfg;
  cfg.dim = 8;
  cfg.window = 1;
  cfg.epochs = 10;
  cfg.learning_rate = 0.05;
  cfg.rng_seed = 6;
  SgnsTrainer trainer(corpus, cfg);
  double prev = -2.0;
  for (int e = 0; e < 10; ++e) {
    trainer.run_epoch();
    const double c = cosine(trainer.target().row(0), trainer.context().row(1));
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("median loss falls from the first to the last epoch") {
  std::vector<double> first, last;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SgnsConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 5;
    cfg.rng_seed = seed;
    std::vector<double> losses;
    train_sgns(two_cliques(10, seed), cfg, &losses);
    REQUIRE(losses.size() == 5);
    first.push_back(losses.front());
    last.push_back(losses.back());
  }
  CHECK(stats::median(last) < stats::median(first));
}

TEST_CASE("deterministic mode is reproducible") {
  SgnsConfig cfg;
  cfg.dim = 12;
  cfg.epochs = 2;
  cfg.rng_seed = 42;
  const auto corpus = two_cliques(8, 3);
  const auto a = train_sgns(corpus, cfg);
  const auto b = train_sgns(corpus, cfg);
  CHECK(a == b);
  std::ostringstream sa, sb;
  write_embedding_binary(sa, a);
  write_embedding_binary(sb, b);
  CHECK(sa.str() == sb.str());
  cfg.rng_seed = 43;
  CHECK_FALSE(train_sgns(corpus, cfg) == a);
}

TEST_CASE("parallel mode trains to finite, separated vectors") {
  SgnsConfig cfg;
  cfg.dim = 16;
  cfg.window = 5;
  cfg.epochs = 3;
  cfg.deterministic = false;
  cfg.threads = 4;
  const auto emb = train_sgns(two_cliques(30, 4), cfg);
  CHECK(emb.all_finite());
  CHECK(cosine(emb.row(0), emb.row(1)) > cosine(emb.row(0), emb.row(6)));
}

TEST_CASE("shape and isolated rows") {
  WalkCorpus corpus(4);
  corpus.append(std::vector<ConceptIndex>{0, 1, 0, 1, 2});
  corpus.append(std::vector<ConceptIndex>{3});
  SgnsConfig cfg;
  cfg.dim = 5;
  const auto emb = train_sgns(corpus, cfg);
  CHECK(emb.rows() == 4);
  CHECK(emb.dim() == 5);
  CHECK(emb.all_finite());
}

TEST_CASE("corpus without any pair is rejected") {
  WalkCorpus corpus(2);
  corpus.append(std::vector<ConceptIndex>{0});
  corpus.append(std::vector<ConceptIndex>{1});
  CHECK_THROWS_AS(train_sgns(corpus, SgnsConfig{}), InputError);
}

TEST_CASE("config validation") {
  SgnsConfig cfg;
  cfg.window = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.negatives = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("embedding") {

EmbeddingMatrix sample_matrix() {
  EmbeddingMatrix m(4, 3, EmbeddingKind::final);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (double& x : m.values()) x = nd(rng);
  m.set_ids({ConceptId(40), ConceptId(10), ConceptId(30), ConceptId(20)});
  return m;
}

TEST_CASE("binary round-trip is byte-identical") {
  auto m = sample_matrix();
  // Binary payload is 32-bit; start from values it represents exactly.
  for (double& x : m.values()) x = static_cast<float>(x);
  std::ostringstream out;
  write_embedding_binary(out, m);
  std::istringstream in(out.str());
  auto back = read_embedding_binary(in);
  back.set_ids({m.ids().begin(), m.ids().end()});
  back.set_kind(m.kind());
  CHECK(back == m);
  std::ostringstream again;
  write_embedding_binary(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("text round-trip within the print quantum") {
  const auto m = sample_matrix();
  std::ostringstream out;
  write_embedding_text(out, m);
  std::istringstream in(out.str());
  const auto back = read_embedding_text(in);
  REQUIRE(back.rows() == m.rows());
  CHECK(back.kind() == EmbeddingKind::final);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    CHECK(back.id(i) == m.id(i));
    for (std::size_t k = 0; k < m.dim(); ++k) {
      CHECK(std::abs(back(i, k) - m(i, k)) <= 0.5e-9 + 1e-15);
    }
  }
}

TEST_CASE("load_embedding sniffs the format") {
  testsupport::TempDir dir;
  const auto m = sample_matrix();
  save_embedding(dir / "a.emb", m, false);
  save_embedding(dir / "b.emb", m, true);
  CHECK(load_embedding(dir / "a.emb").ids().size() == 4);
  CHECK(load_embedding(dir / "b.emb").rows() == 4);
  CHECK_THROWS_AS(load_embedding(dir / "missing.emb"), InputError);
}

TEST_CASE("malformed text embeddings are rejected") {
  std::istringstream bad("2 3 final\n1 0.1 0.2 0.3\n");
  CHECK_THROWS_AS(read_embedding_text(bad), InputError);
  std::istringstream nan_row("1 2 final\n1 nan 0.2\n");
  CHECK_THROWS_AS(read_embedding_text(nan_row), InputError);
}

TEST_CASE("align_rows reorders by id") {
  const auto m = sample_matrix();
  const std::vector<ConceptId> order{ConceptId(10), ConceptId(20), ConceptId(30), ConceptId(40)};
  const auto a = align_rows(m, order);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.id(i) == order[i]);
    const auto src = *m.find(order[i]);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a(i, k) == m(src, k));
  }
  const std::vector<ConceptId> missing{ConceptId(10), ConceptId(99)};
  CHECK_THROWS_AS(align_rows(m, missing), InputError);
}

}  // TEST_SUITE
