#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <optional>
#include <vector>

#include "keep/cooccurrence.hpp"
#include "keep/embedding.hpp"

namespace keep {

struct KeepConfig {
  int dim = 100;
  double learning_rate = 0.05;
  int epochs = 300;
  int batch_size = 1024;
  double x_max_percentile = 75.0;
  double alpha = 0.75;
  double lambda = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // When false the bias terms stay at zero.
  bool use_bias = true;
  std::uint64_t rng_seed = 0;
  bool deterministic = true;
  int threads = 0;

  void validate() const;
};

// f(x) = (x / x_max)^alpha below x_max, 1 above.
struct WeightingFunction {
  double x_max = 1.0;
  double alpha = 0.75;

  double operator()(double x) const;
};

// Nearest-rank percentile of the nonzero counts. Throws InputError when X is
// empty.
double resolve_x_max(const CooccurrenceMatrix& x, double percentile);

struct KeepModel {
  EmbeddingMatrix w;      // target vectors, anchored
  EmbeddingMatrix w_ctx;  // context vectors
  std::vector<double> b, b_ctx;
  std::optional<EmbeddingMatrix> anchor;

  std::size_t vocab_size() const { return w.rows(); }
  std::size_t dim() const { return w.dim(); }
  // Shape consistency and finiteness; throws InputError / NumericalError.
  void validate() const;
};

// Same layout as the parameters, row-major.
struct KeepGradients {
  std::vector<double> w, w_ctx, b, b_ctx;
};

// sum_{X_ij > 0, both orders} f(X_ij)(w_i.c_j + b_i + bc_j - ln X_ij)^2
//   + lambda * sum_i |w_i - anchor_i|^2   (second term only with an anchor)
double keep_loss(const KeepModel& model, const CooccurrenceMatrix& x,
                 const WeightingFunction& wfn, double lambda);

KeepGradients keep_gradients(const KeepModel& model,
                             const CooccurrenceMatrix& x,
                             const WeightingFunction& wfn, double lambda);

// w = anchor (or uniform [-0.5/d, 0.5/d] without one), w_ctx uniform in the
// same range, biases zero. Row ids follow the anchor when present.
KeepModel initialize_keep_model(std::size_t vocab_size,
                                const EmbeddingMatrix* anchor,
                                const KeepConfig& cfg);

struct KeepTrainResult {
  KeepModel model;
  // Full objective after every epoch.
  std::vector<double> loss_trace;
};

// AdamW over shuffled mini-batches of the nonzero entries (each unordered
// pair contributes both orders). A batch B carries |B|/N of the
// regularisation term, so one epoch sums to the full objective.
KeepTrainResult train_keep(const CooccurrenceMatrix& x,
                           const EmbeddingMatrix* anchor, const KeepConfig& cfg);
KeepTrainResult train_keep(const CooccurrenceMatrix& x, KeepModel init,
                           const KeepConfig& cfg);

// Plain GloVe baseline: lambda = 0, random initialisation.
KeepTrainResult train_glove(const CooccurrenceMatrix& x, KeepConfig cfg);

// Target vectors only, kind final.
EmbeddingMatrix export_final(const KeepModel& model);

// CSV "epoch,loss" with epochs counted from 1.
void write_loss_trace(std::ostream& out, std::span<const double> losses);

}  // namespace keep
