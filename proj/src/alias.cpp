#include "keep/alias.hpp"

#include <numeric>

#include "keep/error.hpp"

namespace keep {

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (n == 0 || !(total > 0.0)) throw InputError("alias table needs a positive weight");
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw InputError("negative weight in alias table");
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto l : large) {
    prob_[l] = 1.0;
    alias_[l] = l;
  }
  for (auto s : small) {
    prob_[s] = weights[s] > 0.0 ? 1.0 : 0.0;
    alias_[s] = s;
  }
}

double AliasTable::probability(std::size_t i) const {
  const double n = static_cast<double>(prob_.size());
  double p = prob_[i];
  for (std::size_t c = 0; c < prob_.size(); ++c) {
    if (c != i && alias_[c] == i) p += 1.0 - prob_[c];
  }
  return p / n;
}

}  // namespace keep
