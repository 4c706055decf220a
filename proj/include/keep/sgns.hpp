#pragma once

#include <atomic>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "keep/alias.hpp"
#include "keep/embedding.hpp"
#include "keep/walks.hpp"

namespace keep {

struct SgnsConfig {
  int dim = 100;
  int window = 10;
  int negatives = 5;
  int min_count = 1;
  int epochs = 1;
  double learning_rate = 0.025;
  // Positive pairs between learning-rate updates.
  int batch_size = 4096;
  std::uint64_t rng_seed = 0;
  bool deterministic = true;
  int threads = 0;

  void validate() const;
};

// Loss of one (input, positive output, negative outputs) tuple:
//   -log sigmoid(in . pos) - sum_k log sigmoid(-in . neg_k)
// `outputs[0]` is the positive. On return coeff[k] = dL/d(in . outputs[k]),
// so dL/d outputs[k] = coeff[k] * in and grad_in = sum_k coeff[k] outputs[k].
double sgns_tuple_gradient(std::span<const double> input,
                           std::span<const std::span<const double>> outputs,
                           std::span<double> coeff, std::span<double> grad_in);

// Word2vec-style trainer kept as an object so callers can observe the
// parameters between epochs.
class SgnsTrainer {
 public:
  SgnsTrainer(const WalkCorpus& corpus, const SgnsConfig& cfg);

  // One pass over every (center, context) pair; returns the mean tuple loss.
  double run_epoch();

  int epochs_done() const { return epoch_; }
  std::size_t pairs_per_epoch() const { return pairs_per_epoch_; }
  const EmbeddingMatrix& target() const { return target_; }
  const EmbeddingMatrix& context() const { return context_; }
  EmbeddingMatrix take_target();

 private:
  double train_walk(std::size_t walk, Rng& rng, std::vector<double>& scratch);
  double current_lr() const;

  const WalkCorpus& corpus_;
  SgnsConfig cfg_;
  EmbeddingMatrix target_, context_;
  std::vector<char> kept_;
  AliasTable noise_;
  std::size_t pairs_per_epoch_ = 0;
  // Pairs processed so far over all epochs; drives linear lr decay.
  std::atomic<std::size_t> progress_{0};
  int epoch_ = 0;
};

// Anchor embedding: the input ("target") vectors after cfg.epochs passes.
// Throws InputError if the corpus yields no co-window pair.
EmbeddingMatrix train_sgns(const WalkCorpus& corpus, const SgnsConfig& cfg,
                           std::vector<double>* epoch_losses = nullptr);

}  // namespace keep
