#include "keep/sgns.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "keep/error.hpp"
#include "keep/parallel.hpp"
#include "linalg.hpp"

namespace keep {

namespace {

using detail::dot;

// log(1 + exp(-|x|)) and the logistic function from a single exp.
struct Logistic {
  double sigmoid;
  double softplus_neg_abs;
};

Logistic logistic(double x) {
  const double e = std::exp(-std::abs(x));
  const double inv = 1.0 / (1.0 + e);
  return {x >= 0.0 ? inv : e * inv, std::log1p(e)};
}

// Walks with below-min_count tokens removed.
std::vector<ConceptIndex> filtered(std::span<const ConceptIndex> walk,
                                   const std::vector<char>& kept) {
  std::vector<ConceptIndex> out;
  out.reserve(walk.size());
  for (auto t : walk) {
    if (kept[t]) out.push_back(t);
  }
  return out;
}

std::size_t window_pairs(std::size_t len, std::size_t window) {
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(len - 1, i + window);
    pairs += hi - lo;
  }
  return pairs;
}

}  // namespace

void SgnsConfig::validate() const {
  if (dim < 1) throw ConfigError("dim", "must be >= 1");
  if (window < 1) throw ConfigError("window", "must be >= 1");
  if (negatives < 1) throw ConfigError("negatives", "must be >= 1");
  if (min_count < 1) throw ConfigError("min_count", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (threads < 0) throw ConfigError("threads", "must be >= 0");
}

double sgns_tuple_gradient(std::span<const double> input,
                           std::span<const std::span<const double>> outputs,
                           std::span<double> coeff, std::span<double> grad_in) {
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  double loss = 0.0;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const auto out = outputs[k];
    const double s = dot(input, out);
    const auto lg = logistic(s);
    // -log sigma(s) = softplus(-s); -log sigma(-s) = softplus(s).
    if (k == 0) {
      loss += lg.softplus_neg_abs + std::max(-s, 0.0);
      coeff[k] = lg.sigmoid - 1.0;
    } else {
      loss += lg.softplus_neg_abs + std::max(s, 0.0);
      coeff[k] = lg.sigmoid;
    }
    for (std::size_t d = 0; d < out.size(); ++d) grad_in[d] += coeff[k] * out[d];
  }
  return loss;
}

SgnsTrainer::SgnsTrainer(const WalkCorpus& corpus, const SgnsConfig& cfg)
    : corpus_(corpus), cfg_(cfg) {
  cfg_.validate();
  const std::size_t vocab = corpus.vocab_size();
  if (corpus.size() == 0 || vocab == 0) throw InputError("empty walk corpus");

  std::vector<std::size_t> counts(vocab, 0);
  for (auto t : corpus.tokens()) ++counts[t];
  kept_.assign(vocab, 0);
  std::vector<double> noise(vocab, 0.0);
  for (std::size_t v = 0; v < vocab; ++v) {
    kept_[v] = counts[v] >= static_cast<std::size_t>(cfg_.min_count);
    if (kept_[v]) noise[v] = std::pow(static_cast<double>(counts[v]), 0.75);
  }

  for (std::size_t w = 0; w < corpus.size(); ++w) {
    pairs_per_epoch_ += window_pairs(filtered(corpus.walk(w), kept_).size(),
                                     static_cast<std::size_t>(cfg_.window));
  }
  if (pairs_per_epoch_ == 0) {
    throw InputError("walk corpus has no (center, context) pair");
  }
  noise_ = AliasTable(noise);

  const auto dim = static_cast<std::size_t>(cfg_.dim);
  target_ = EmbeddingMatrix(vocab, dim, EmbeddingKind::target);
  context_ = EmbeddingMatrix(vocab, dim, EmbeddingKind::context);
  Rng init = make_stream(cfg_.rng_seed, 0);
  const double bound = 0.5 / static_cast<double>(dim);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : target_.values()) v = u(init);
}

double SgnsTrainer::current_lr() const {
  const double total =
      static_cast<double>(pairs_per_epoch_) * static_cast<double>(cfg_.epochs);
  const double frac = 1.0 - static_cast<double>(progress_.load()) / total;
  return cfg_.learning_rate * std::max(1e-4, frac);
}

double SgnsTrainer::train_walk(std::size_t walk_index, Rng& rng,
                               std::vector<double>& scratch) {
  const auto walk = filtered(corpus_.walk(walk_index), kept_);
  const std::size_t dim = target_.dim();
  const std::size_t n_out = static_cast<std::size_t>(cfg_.negatives) + 1;
  const std::size_t window = static_cast<std::size_t>(cfg_.window);
  scratch.resize(dim + n_out);
  std::span<double> grad_in(scratch.data(), dim);
  std::span<double> coeff(scratch.data() + dim, n_out);
  std::vector<ConceptIndex> rows(n_out);
  std::vector<std::span<const double>> outputs(n_out);

  double loss = 0.0;
  double lr = current_lr();
  std::size_t pairs = 0;
  const auto batch = static_cast<std::size_t>(cfg_.batch_size);
  for (std::size_t i = 0; i < walk.size(); ++i) {
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(walk.size() - 1, i + window);
    auto input = target_.row(walk[i]);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      rows[0] = walk[j];
      for (std::size_t k = 1; k < n_out; ++k) {
        ConceptIndex neg = noise_(rng);
        for (int retry = 0; neg == rows[0] && retry < 16; ++retry) {
          neg = noise_(rng);
        }
        rows[k] = neg;
      }
      for (std::size_t k = 0; k < n_out; ++k) outputs[k] = context_.row(rows[k]);
      loss += sgns_tuple_gradient(input, outputs, coeff, grad_in);
      for (std::size_t k = 0; k < n_out; ++k) {
        if (k > 0 && rows[k] == rows[0]) continue;
        auto out = context_.row(rows[k]);
        const double g = lr * coeff[k];
        for (std::size_t d = 0; d < dim; ++d) out[d] -= g * input[d];
      }
      for (std::size_t d = 0; d < dim; ++d) input[d] -= lr * grad_in[d];
      if (++pairs == batch) {
        progress_ += pairs;
        pairs = 0;
        lr = current_lr();
      }
    }
  }
  progress_ += pairs;
  return loss;
}

double SgnsTrainer::run_epoch() {
  ++epoch_;
  const std::size_t walks = corpus_.size();
  double loss = 0.0;
  if (cfg_.deterministic) {
    Rng rng = make_stream(cfg_.rng_seed, static_cast<std::uint64_t>(epoch_));
    std::vector<double> scratch;
    for (std::size_t w = 0; w < walks; ++w) loss += train_walk(w, rng, scratch);
  } else {
    // Lock-free (Hogwild) updates: threads race on shared rows, as in the
    // reference word2vec trainer. Statistical results only.
    const std::size_t chunk = 64;
    const std::size_t chunks = (walks + chunk - 1) / chunk;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : loss) \
    num_threads(resolve_threads(cfg_.threads))
    for (std::size_t c = 0; c < chunks; ++c) {
      Rng rng = make_stream(cfg_.rng_seed, static_cast<std::uint64_t>(epoch_), c);
      std::vector<double> scratch;
      for (std::size_t w = c * chunk; w < std::min(walks, (c + 1) * chunk); ++w) {
        loss += train_walk(w, rng, scratch);
      }
    }
  }
  if (!std::isfinite(loss)) {
    throw NumericalError("SGNS loss diverged in epoch " + std::to_string(epoch_));
  }
  return loss / static_cast<double>(pairs_per_epoch_);
}

EmbeddingMatrix SgnsTrainer::take_target() {
  EmbeddingMatrix out = std::move(target_);
  out.set_kind(EmbeddingKind::anchor);
  return out;
}

EmbeddingMatrix train_sgns(const WalkCorpus& corpus, const SgnsConfig& cfg,
                           std::vector<double>* epoch_losses) {
  SgnsTrainer trainer(corpus, cfg);
  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = trainer.run_epoch();
    if (epoch_losses) epoch_losses->push_back(loss);
  }
  auto anchor = trainer.take_target();
  if (!anchor.all_finite()) throw NumericalError("SGNS produced non-finite values");
  return anchor;
}

}  // namespace keep
