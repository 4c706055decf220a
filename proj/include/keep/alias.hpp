#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace keep {

// Walker/Vose alias table: exact O(1) sampling from a fixed discrete
// distribution. Weights need not be normalised; zero weights are never drawn.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  // Probability of index i implied by the table (for tests).
  double probability(std::size_t i) const;

  template <typename Urbg>
  std::uint32_t operator()(Urbg& rng) const {
    std::uniform_int_distribution<std::uint32_t> col(
        0, static_cast<std::uint32_t>(prob_.size() - 1));
    const std::uint32_t c = col(rng);
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < prob_[c] ? c
                                                                            : alias_[c];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace keep
