#include "keep/keep_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "keep/error.hpp"
#include "keep/parallel.hpp"
#include "linalg.hpp"
#include "keep/rng.hpp"
#include "keep/stats.hpp"

namespace keep {

namespace {

using detail::dot;

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

void check_shapes(const KeepModel& model, const CooccurrenceMatrix& x) {
  model.validate();
  if (model.vocab_size() != x.vocab_size()) {
    throw InputError("model has " + std::to_string(model.vocab_size()) +
                     " rows but the co-occurrence matrix has V=" +
                     std::to_string(x.vocab_size()));
  }
}

// Ordered pair t of the 2*nnz list: even t is (i, j), odd t is (j, i).
struct Pair {
  ConceptIndex row, col;
  double weight, log_x;
};

std::vector<Pair> ordered_pairs(const CooccurrenceMatrix& x,
                                const WeightingFunction& wfn) {
  std::vector<Pair> out;
  out.reserve(2 * x.nnz());
  for (const auto& e : x.entries()) {
    const double c = static_cast<double>(e.count);
    const double f = wfn(c);
    const double l = std::log(c);
    out.push_back({e.i, e.j, f, l});
    out.push_back({e.j, e.i, f, l});
  }
  return out;
}

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adamw_range(double* __restrict p, double* __restrict g, double* __restrict m,
                 double* __restrict v, std::size_t n, const KeepConfig& cfg,
                 double bc1, double bc2) {
  const double lr = cfg.learning_rate;
  const double decay = 1.0 - lr * cfg.weight_decay;
  const double b1 = cfg.beta1, b2 = cfg.beta2, eps = cfg.epsilon;
#pragma omp simd
  for (std::size_t k = 0; k < n; ++k) {
    const double gk = g[k];
    g[k] = 0.0;
    m[k] = b1 * m[k] + (1.0 - b1) * gk;
    v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
    p[k] = p[k] * decay - lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
  }
}

// One AdamW step over `params`; consumes and zeroes `grad`.
void adamw_step(std::span<double> params, std::span<double> grad,
                AdamState& st, const KeepConfig& cfg, double bc1, double bc2,
                int threads) {
  const std::size_t n = params.size();
  if (threads <= 1) {
    adamw_range(params.data(), grad.data(), st.m.data(), st.v.data(), n, cfg, bc1, bc2);
    return;
  }
  const std::size_t chunk = 4096;
  const std::ptrdiff_t chunks = static_cast<std::ptrdiff_t>((n + chunk - 1) / chunk);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * chunk;
    const std::size_t len = std::min(chunk, n - lo);
    adamw_range(params.data() + lo, grad.data() + lo, st.m.data() + lo,
                st.v.data() + lo, len, cfg, bc1, bc2);
  }
}

}  // namespace

void KeepConfig::validate() const {
  if (dim < 1) throw ConfigError("dim", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (!(x_max_percentile > 0.0 && x_max_percentile <= 100.0)) {
    throw ConfigError("x_max_percentile", "must lie in (0, 100]");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in (0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda", "must be finite and >= 0");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be > 0");
  if (threads < 0) throw ConfigError("threads", "must be >= 0");
}

double WeightingFunction::operator()(double x) const {
  if (x >= x_max) return 1.0;
  return std::pow(x / x_max, alpha);
}

double resolve_x_max(const CooccurrenceMatrix& x, double percentile) {
  if (x.nnz() == 0) throw InputError("co-occurrence matrix has no nonzero entry");
  std::vector<double> counts;
  counts.reserve(x.nnz());
  for (const auto& e : x.entries()) counts.push_back(static_cast<double>(e.count));
  return stats::nearest_rank_percentile(counts, percentile);
}

void KeepModel::validate() const {
  const std::size_t v = w.rows();
  const std::size_t d = w.dim();
  if (w_ctx.rows() != v || w_ctx.dim() != d || b.size() != v ||
      b_ctx.size() != v) {
    throw InputError("inconsistent KEEP model shapes");
  }
  if (anchor && (anchor->rows() != v || anchor->dim() != d)) {
    throw InputError("anchor is " + std::to_string(anchor->rows()) + "x" +
                     std::to_string(anchor->dim()) + ", model is " +
                     std::to_string(v) + "x" + std::to_string(d));
  }
  auto finite = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [](double z) { return std::isfinite(z); });
  };
  if (!w.all_finite() || !w_ctx.all_finite() || !finite(b) || !finite(b_ctx) ||
      (anchor && !anchor->all_finite())) {
    throw NumericalError("non-finite value in KEEP parameters");
  }
}

double keep_loss(const KeepModel& model, const CooccurrenceMatrix& x,
                 const WeightingFunction& wfn, double lambda) {
  check_shapes(model, x);
  double loss = 0.0;
  for (const auto& e : x.entries()) {
    const double c = static_cast<double>(e.count);
    const double f = wfn(c);
    const double l = std::log(c);
    for (auto [i, j] : {std::pair{e.i, e.j}, std::pair{e.j, e.i}}) {
      const double r = dot(model.w.row(i), model.w_ctx.row(j)) + model.b[i] +
                       model.b_ctx[j] - l;
      loss += f * r * r;
    }
  }
  if (model.anchor && lambda > 0.0) {
    const auto w = model.w.values();
    const auto a = model.anchor->values();
    double reg = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) reg += (w[k] - a[k]) * (w[k] - a[k]);
    loss += lambda * reg;
  }
  return loss;
}

KeepGradients keep_gradients(const KeepModel& model, const CooccurrenceMatrix& x,
                             const WeightingFunction& wfn, double lambda) {
  check_shapes(model, x);
  const std::size_t v = model.vocab_size();
  const std::size_t d = model.dim();
  KeepGradients g;
  g.w.assign(v * d, 0.0);
  g.w_ctx.assign(v * d, 0.0);
  g.b.assign(v, 0.0);
  g.b_ctx.assign(v, 0.0);
  for (const auto& p : ordered_pairs(x, wfn)) {
    const auto wi = model.w.row(p.row);
    const auto cj = model.w_ctx.row(p.col);
    const double r = dot(wi, cj) + model.b[p.row] + model.b_ctx[p.col] - p.log_x;
    const double s = 2.0 * p.weight * r;
    for (std::size_t k = 0; k < d; ++k) {
      g.w[p.row * d + k] += s * cj[k];
      g.w_ctx[p.col * d + k] += s * wi[k];
    }
    g.b[p.row] += s;
    g.b_ctx[p.col] += s;
  }
  if (model.anchor && lambda > 0.0) {
    const auto w = model.w.values();
    const auto a = model.anchor->values();
    for (std::size_t k = 0; k < w.size(); ++k) g.w[k] += 2.0 * lambda * (w[k] - a[k]);
  }
  return g;
}

KeepModel initialize_keep_model(std::size_t vocab_size,
                                const EmbeddingMatrix* anchor,
                                const KeepConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.dim);
  if (anchor && (anchor->rows() != vocab_size || anchor->dim() != d)) {
    throw ConfigError("dim", "anchor is " + std::to_string(anchor->rows()) +
                                 "x" + std::to_string(anchor->dim()) +
                                 ", expected " + std::to_string(vocab_size) +
                                 "x" + std::to_string(d));
  }
  KeepModel m;
  m.w = EmbeddingMatrix(vocab_size, d, EmbeddingKind::target);
  m.w_ctx = EmbeddingMatrix(vocab_size, d, EmbeddingKind::context);
  m.b.assign(vocab_size, 0.0);
  m.b_ctx.assign(vocab_size, 0.0);

  Rng rng = make_stream(cfg.rng_seed, kInitStream);
  const double bound = 0.5 / static_cast<double>(d);
  std::uniform_real_distribution<double> u(-bound, bound);
  // Context first, so the context init does not depend on anchor presence.
  for (double& z : m.w_ctx.values()) z = u(rng);
  if (anchor) {
    std::copy(anchor->values().begin(), anchor->values().end(),
              m.w.values().begin());
    std::vector<ConceptId> ids(anchor->ids().begin(), anchor->ids().end());
    m.w.set_ids(ids);
    m.w_ctx.set_ids(std::move(ids));
    m.anchor = *anchor;
  } else {
    for (double& z : m.w.values()) z = u(rng);
  }
  return m;
}

KeepTrainResult train_keep(const CooccurrenceMatrix& x,
                           const EmbeddingMatrix* anchor, const KeepConfig& cfg) {
  return train_keep(x, initialize_keep_model(x.vocab_size(), anchor, cfg), cfg);
}

KeepTrainResult train_keep(const CooccurrenceMatrix& x, KeepModel init,
                           const KeepConfig& cfg) {
  cfg.validate();
  check_shapes(init, x);
  if (init.dim() != static_cast<std::size_t>(cfg.dim)) {
    throw ConfigError("dim", "model dimension " + std::to_string(init.dim()) +
                                 " does not match config");
  }
  if (x.nnz() == 0) throw InputError("co-occurrence matrix has no nonzero entry");

  const int threads = cfg.deterministic ? 1 : resolve_threads(cfg.threads);
  const WeightingFunction wfn{resolve_x_max(x, cfg.x_max_percentile), cfg.alpha};
  const auto pairs = ordered_pairs(x, wfn);
  const std::size_t n = pairs.size();
  const std::size_t v = init.vocab_size();
  const std::size_t d = init.dim();
  const bool regularise = init.anchor.has_value() && cfg.lambda > 0.0;

  KeepTrainResult res{std::move(init), {}};
  KeepModel& m = res.model;
  std::vector<double> gw(v * d, 0.0), gc(v * d, 0.0), gb(v, 0.0), gbc(v, 0.0);
  AdamState sw(v * d), sc(v * d), sb(v), sbc(v);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> resid;

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = make_stream(cfg.rng_seed, kShuffleStream,
                          static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < n; lo += batch) {
      const std::size_t hi = std::min(n, lo + batch);
      const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(hi - lo);
      resid.resize(hi - lo);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
      for (std::ptrdiff_t t = 0; t < len; ++t) {
        const Pair& p = pairs[order[lo + static_cast<std::size_t>(t)]];
        const double r = dot(m.w.row(p.row), m.w_ctx.row(p.col)) + m.b[p.row] +
                         m.b_ctx[p.col] - p.log_x;
        resid[static_cast<std::size_t>(t)] = 2.0 * p.weight * r;
      }
      for (std::size_t t = 0; t < hi - lo; ++t) {
        const Pair& p = pairs[order[lo + t]];
        const double s = resid[t];
        const auto wi = m.w.row(p.row);
        const auto cj = m.w_ctx.row(p.col);
        double* gwi = gw.data() + p.row * d;
        double* gcj = gc.data() + p.col * d;
        for (std::size_t k = 0; k < d; ++k) {
          gwi[k] += s * cj[k];
          gcj[k] += s * wi[k];
        }
        gb[p.row] += s;
        gbc[p.col] += s;
      }
      if (regularise) {
        const double scale = 2.0 * cfg.lambda * static_cast<double>(hi - lo) /
                             static_cast<double>(n);
        const auto w = m.w.values();
        const auto a = m.anchor->values();
        for (std::size_t k = 0; k < w.size(); ++k) gw[k] += scale * (w[k] - a[k]);
      }
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      adamw_step(m.w.values(), gw, sw, cfg, bc1, bc2, threads);
      adamw_step(m.w_ctx.values(), gc, sc, cfg, bc1, bc2, threads);
      if (cfg.use_bias) {
        adamw_step(m.b, gb, sb, cfg, bc1, bc2, threads);
        adamw_step(m.b_ctx, gbc, sbc, cfg, bc1, bc2, threads);
      } else {
        std::fill(gb.begin(), gb.end(), 0.0);
        std::fill(gbc.begin(), gbc.end(), 0.0);
      }
    }
    double loss = 0.0;
    try {
      loss = keep_loss(m, x, wfn, cfg.lambda);
    } catch (const NumericalError&) {
      loss = std::nan("");
    }
    if (!std::isfinite(loss)) {
      throw NumericalError("KEEP training diverged in epoch " + std::to_string(epoch));
    }
    res.loss_trace.push_back(loss);
  }
  return res;
}

KeepTrainResult train_glove(const CooccurrenceMatrix& x, KeepConfig cfg) {
  cfg.lambda = 0.0;
  return train_keep(x, nullptr, cfg);
}

EmbeddingMatrix export_final(const KeepModel& model) {
  EmbeddingMatrix out = model.w;
  out.set_kind(EmbeddingKind::final);
  return out;
}

void write_loss_trace(std::ostream& out, std::span<const double> losses) {
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < losses.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, losses[e]);
    out << buf;
  }
}

}  // namespace keep
