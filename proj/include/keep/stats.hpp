#pragma once

#include <span>
#include <vector>

namespace keep::stats {

// Nearest-rank percentile: the value at rank ceil(pct/100 * n) of the sorted
// sample. pct in (0, 100].
double nearest_rank_percentile(std::span<const double> values, double pct);

// Ranks starting at 1; ties receive the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// NaN when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

double median(std::vector<double> values);

}  // namespace keep::stats
