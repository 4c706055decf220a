#include "keep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "keep/error.hpp"
#include "keep/parallel.hpp"
#include "keep/rng.hpp"
#include "keep/stats.hpp"
#include "text_util.hpp"

namespace keep {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double z : v) s += z * z;
  return std::sqrt(s);
}

std::string row_name(const EmbeddingMatrix& emb, std::size_t i) {
  return "concept " + std::to_string(emb.id(i).value);
}

// Rows scaled to unit length; throws on a zero row.
std::vector<double> unit_rows(const EmbeddingMatrix& emb) {
  std::vector<double> out(emb.values().begin(), emb.values().end());
  const std::size_t d = emb.dim();
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    const double n = norm(emb.row(i));
    if (n == 0.0) throw InputError(row_name(emb, i) + " has a zero embedding row");
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] /= n;
  }
  return out;
}

void cosine_row(const std::vector<double>& unit, std::size_t dim, std::size_t c,
                std::size_t rows, std::vector<double>& out) {
  out.resize(rows);
  const double* a = unit.data() + c * dim;
  for (std::size_t j = 0; j < rows; ++j) {
    const double* b = unit.data() + j * dim;
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += a[k] * b[k];
    out[j] = s;
  }
}

double correlate(CorrelationKind kind, std::span<const double> a,
                 std::span<const double> b) {
  return kind == CorrelationKind::spearman ? stats::spearman(a, b)
                                           : stats::pearson(a, b);
}

}  // namespace

double cosine_similarity(const EmbeddingMatrix& emb, std::size_t i, std::size_t j) {
  if (i >= emb.rows() || j >= emb.rows()) throw InputError("row index out of range");
  const auto a = emb.row(i);
  const auto b = emb.row(j);
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0) throw InputError(row_name(emb, i) + " has a zero embedding row");
  if (nb == 0.0) throw InputError(row_name(emb, j) + " has a zero embedding row");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return std::clamp(s / (na * nb), -1.0, 1.0);
}

ImpactResult impact_assessment(const EmbeddingMatrix& emb, const Ontology& ont,
                               const InformationContentTable& ic,
                               const CooccurrenceMatrix& x,
                               const ImpactConfig& cfg) {
  const std::size_t v = emb.rows();
  if (ont.size() != v || x.vocab_size() != v) {
    throw InputError("embedding, ontology and co-occurrence vocabularies differ (" +
                     std::to_string(v) + ", " + std::to_string(ont.size()) + ", " +
                     std::to_string(x.vocab_size()) + ")");
  }
  if (cfg.repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
  if (cfg.top_k < 1) throw ConfigError("top_k", "must be >= 1");
  if (cfg.random_sample < 1) throw ConfigError("random_sample", "must be >= 1");
  const auto top_k = static_cast<std::size_t>(cfg.top_k);
  const auto sample = static_cast<std::size_t>(cfg.random_sample);
  if (v < top_k + sample + 1) {
    throw InputError("impact assessment needs at least " +
                     std::to_string(top_k + sample + 1) + " concepts, got " +
                     std::to_string(v));
  }
  std::vector<ConceptIndex> probes = cfg.probes;
  if (probes.empty()) {
    probes.resize(v);
    std::iota(probes.begin(), probes.end(), ConceptIndex{0});
  }
  for (auto p : probes) {
    if (p >= v) throw InputError("probe index out of range");
  }

  const auto unit = unit_rows(emb);
  const std::size_t dim = emb.dim();
  // Co-occurrence rows in CSR form.
  std::vector<std::size_t> offs(v + 1, 0);
  for (const auto& e : x.entries()) {
    ++offs[e.i + 1];
    ++offs[e.j + 1];
  }
  std::partial_sum(offs.begin(), offs.end(), offs.begin());
  std::vector<std::pair<ConceptIndex, double>> nbrs(offs.back());
  {
    auto fill = offs;
    for (const auto& e : x.entries()) {
      nbrs[fill[e.i]++] = {e.j, static_cast<double>(e.count)};
      nbrs[fill[e.j]++] = {e.i, static_cast<double>(e.count)};
    }
  }

  const std::size_t reps = static_cast<std::size_t>(cfg.repetitions);
  std::vector<double> r_res(probes.size() * reps), r_cooc(probes.size() * reps);
  const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(probes.size());
  const int threads = resolve_threads(cfg.threads);

#pragma omp parallel num_threads(threads)
  {
    std::vector<double> cos, res(v), cooc(v, 0.0);
    std::vector<ConceptIndex> order(v), pool;
    std::vector<double> a(top_k + sample), b(top_k + sample), c(top_k + sample);
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t pi = 0; pi < np; ++pi) {
      const ConceptIndex probe = probes[static_cast<std::size_t>(pi)];
      cosine_row(unit, dim, probe, v, cos);
      for (std::size_t j = 0; j < v; ++j) {
        res[j] = ic.resnik(probe, static_cast<ConceptIndex>(j));
      }
      for (std::size_t k = offs[probe]; k < offs[probe + 1]; ++k) {
        cooc[nbrs[k].first] = nbrs[k].second;
      }
      // Top neighbours by cosine, ties broken by index.
      std::iota(order.begin(), order.end(), ConceptIndex{0});
      std::swap(order[probe], order[v - 1]);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k),
                        order.end() - 1, [&](ConceptIndex l, ConceptIndex r) {
                          return cos[l] != cos[r] ? cos[l] > cos[r] : l < r;
                        });
      pool.assign(order.begin() + static_cast<std::ptrdiff_t>(top_k), order.end() - 1);
      std::sort(pool.begin(), pool.end());
      for (std::size_t k = 0; k < top_k; ++k) {
        a[k] = cos[order[k]];
        b[k] = res[order[k]];
        c[k] = cooc[order[k]];
      }
      Rng rng = make_stream(cfg.rng_seed, probe);
      for (std::size_t r = 0; r < reps; ++r) {
        // Partial Fisher-Yates over the pool.
        for (std::size_t k = 0; k < sample; ++k) {
          std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
          std::swap(pool[k], pool[pick(rng)]);
          const ConceptIndex j = pool[k];
          a[top_k + k] = cos[j];
          b[top_k + k] = res[j];
          c[top_k + k] = cooc[j];
        }
        const std::size_t slot = static_cast<std::size_t>(pi) * reps + r;
        r_res[slot] = correlate(cfg.correlation, a, b);
        r_cooc[slot] = correlate(cfg.correlation, a, c);
      }
      for (std::size_t k = offs[probe]; k < offs[probe + 1]; ++k) {
        cooc[nbrs[k].first] = 0.0;
      }
    }
  }

  ImpactResult out;
  auto summarise = [](const std::vector<double>& all, double& med,
                      std::size_t& used, std::size_t& undefined) {
    std::vector<double> ok;
    ok.reserve(all.size());
    for (double z : all) {
      if (std::isnan(z)) {
        ++undefined;
      } else {
        ok.push_back(z);
      }
    }
    used = ok.size();
    med = ok.empty() ? 0.0 : stats::median(std::move(ok));
  };
  summarise(r_res, out.resnik_corr, out.resnik_samples, out.resnik_undefined);
  summarise(r_cooc, out.cooc_corr, out.cooc_samples, out.cooc_undefined);
  return out;
}

std::string_view to_string(RelationType t) {
  switch (t) {
    case RelationType::synonym: return "synonym";
    case RelationType::child: return "child";
    case RelationType::complication: return "complication";
    case RelationType::comorbidity: return "comorbidity";
  }
  return "comorbidity";
}

RelationType parse_relation_type(std::string_view text) {
  for (auto t : {RelationType::synonym, RelationType::child,
                 RelationType::complication, RelationType::comorbidity}) {
    if (text == to_string(t)) return t;
  }
  throw InputError("unknown relation type '" + std::string(text) + "'");
}

std::vector<ConceptId> RelationshipSet::positive_ids() const {
  std::vector<ConceptId> out;
  out.reserve(positives.size());
  for (const auto& p : positives) out.push_back(p.concept_id);
  return out;
}

std::vector<RelationshipSet> read_relationship_sets(std::istream& in) {
  std::vector<RelationshipSet> sets;
  std::map<ConceptId, std::size_t> slot;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t no) {
    const auto f = detail::split(line, '\t');
    if (f.size() != 3) {
      throw InputError("line " + std::to_string(no) +
                       ": expected core_id\\trelation_type\\tconcept_id");
    }
    const ConceptId core(detail::parse_number<std::uint64_t>(f[0], no, "core id"));
    const auto type = parse_relation_type(detail::trim(f[1]));
    const ConceptId cid(detail::parse_number<std::uint64_t>(f[2], no, "concept id"));
    if (cid == core) {
      throw InputError("line " + std::to_string(no) + ": core listed as its own positive");
    }
    auto [it, fresh] = slot.try_emplace(core, sets.size());
    if (fresh) sets.push_back({core, {}});
    auto& pos = sets[it->second].positives;
    const bool dup = std::any_of(pos.begin(), pos.end(), [&](const Relationship& r) {
      return r.concept_id == cid;
    });
    if (!dup) pos.push_back({type, cid});
  });
  return sets;
}

void write_relationship_sets(std::ostream& out,
                             std::span<const RelationshipSet> sets) {
  out << "# core_id\trelation_type\tconcept_id\n";
  for (const auto& s : sets) {
    for (const auto& p : s.positives) {
      out << s.core.value << '\t' << to_string(p.type) << '\t' << p.concept_id.value
          << '\n';
    }
  }
}

DiscriminationResult intrinsic_discrimination(const EmbeddingMatrix& emb,
                                              const RelationshipSet& rel,
                                              const DiscriminationConfig& cfg) {
  if (cfg.null_size < 1) throw ConfigError("null_size", "must be >= 1");
  if (cfg.repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
  if (cfg.bootstrap_iters < 1) throw ConfigError("bootstrap_iters", "must be >= 1");
  if (!(cfg.null_percentile > 0.0 && cfg.null_percentile <= 100.0)) {
    throw ConfigError("null_percentile", "must lie in (0, 100]");
  }
  if (rel.positives.empty()) {
    throw InputError("relationship set for core " + std::to_string(rel.core.value) +
                     " has no positives");
  }
  const auto core = emb.find(rel.core);
  if (!core) {
    throw InputError("core concept " + std::to_string(rel.core.value) +
                     " is not in the embedding");
  }

  DiscriminationResult out;
  out.core = rel.core;
  out.positives_total = rel.positives.size();
  std::vector<char> excluded(emb.rows(), 0);
  excluded[*core] = 1;
  std::vector<std::size_t> pos;
  for (const auto& p : rel.positives) {
    if (auto r = emb.find(p.concept_id)) {
      if (!excluded[*r]) pos.push_back(*r);
      excluded[*r] = 1;
    }
  }
  out.positives_used = pos.size();
  out.coverage = static_cast<double>(pos.size()) /
                 static_cast<double>(rel.positives.size());
  if (pos.empty()) {
    throw InputError("no positive of core " + std::to_string(rel.core.value) +
                     " is in the embedding");
  }
  std::vector<std::size_t> null_pool;
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    if (!excluded[i]) null_pool.push_back(i);
  }
  out.null_candidates = null_pool.size();
  if (null_pool.size() < 20) {
    throw InputError("core " + std::to_string(rel.core.value) + " has only " +
                     std::to_string(null_pool.size()) + " null candidates (need 20)");
  }

  std::vector<double> pos_cos(pos.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    pos_cos[k] = cosine_similarity(emb, *core, pos[k]);
  }
  std::vector<double> pool_cos(null_pool.size());
  for (std::size_t k = 0; k < null_pool.size(); ++k) {
    pool_cos[k] = cosine_similarity(emb, *core, null_pool[k]);
  }

  Rng rng = make_stream(cfg.rng_seed, rel.core.value);
  std::uniform_int_distribution<std::size_t> pick(0, null_pool.size() - 1);
  std::vector<double> hits(pos.size(), 0.0), null(static_cast<std::size_t>(cfg.null_size));
  for (int r = 0; r < cfg.repetitions; ++r) {
    for (double& z : null) z = pool_cos[pick(rng)];
    const double thr = stats::nearest_rank_percentile(null, cfg.null_percentile);
    for (std::size_t k = 0; k < pos.size(); ++k) {
      if (pos_cos[k] > thr) hits[k] += 1.0;
    }
  }
  for (double& h : hits) h /= static_cast<double>(cfg.repetitions);
  out.score = std::accumulate(hits.begin(), hits.end(), 0.0) /
              static_cast<double>(hits.size());

  std::uniform_int_distribution<std::size_t> resample(0, hits.size() - 1);
  std::vector<double> boot(static_cast<std::size_t>(cfg.bootstrap_iters));
  for (double& bval : boot) {
    double s = 0.0;
    for (std::size_t k = 0; k < hits.size(); ++k) s += hits[resample(rng)];
    bval = s / static_cast<double>(hits.size());
  }
  out.boot_median = stats::median(boot);
  out.ci_low = stats::nearest_rank_percentile(boot, 2.5);
  out.ci_high = stats::nearest_rank_percentile(boot, 97.5);
  return out;
}

double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("Wilcoxon test needs paired samples");
  if (a.size() < 5) throw InputError("Wilcoxon test needs at least 5 pairs");
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) diff.push_back(a[i] - b[i]);
  }
  const std::size_t n = diff.size();
  if (n == 0) return 1.0;
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(diff[i]);
  const auto ranks = stats::average_ranks(mag);
  // Average ranks are multiples of 1/2; work with doubled ranks.
  std::vector<long> r2(n);
  long w2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r2[i] = std::lround(2.0 * ranks[i]);
    total2 += r2[i];
    if (diff[i] > 0) w2 += r2[i];
  }

  double p = 1.0;
  if (n <= 12) {
    // Distribution of doubled W+ over all 2^n sign patterns.
    std::vector<double> dist(static_cast<std::size_t>(total2) + 1, 0.0);
    dist[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = total2; s >= r2[i]; --s) {
        dist[static_cast<std::size_t>(s)] += dist[static_cast<std::size_t>(s - r2[i])];
      }
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w2) lower += dist[static_cast<std::size_t>(s)];
      if (s >= w2) upper += dist[static_cast<std::size_t>(s)];
    }
    p = std::min(1.0, 2.0 * std::min(lower, upper) / all);
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    std::vector<double> sorted = mag;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    if (var <= 0.0) return 1.0;
    const double w = static_cast<double>(w2) / 2.0;
    const double dev = std::max(0.0, std::abs(w - mean) - 0.5);
    p = std::erfc(dev / std::sqrt(var) / std::sqrt(2.0));
    p = std::min(1.0, p);
  }
  return std::max(p, std::numeric_limits<double>::min());
}

RankSummary rank_methods(const ScoreTable& table) {
  const std::size_t m = table.methods.size();
  const std::size_t t = table.tasks.size();
  if (m < 2) throw InputError("ranking needs at least 2 methods");
  if (t < 2) throw InputError("ranking needs at least 2 tasks");
  if (table.scores.size() != m) throw InputError("score table has wrong method count");
  std::string missing;
  for (std::size_t i = 0; i < m; ++i) {
    if (table.scores[i].size() != t) {
      throw InputError("score row of " + table.methods[i] + " has wrong task count");
    }
    for (std::size_t k = 0; k < t; ++k) {
      if (!table.scores[i][k]) {
        missing += (missing.empty() ? "" : ", ") + table.methods[i] + "/" + table.tasks[k];
      }
    }
  }
  if (!missing.empty()) throw InputError("missing scores: " + missing);

  RankSummary out;
  out.methods = table.methods;
  out.mean_ranks.assign(m, 0.0);
  std::vector<double> col(m);
  for (std::size_t k = 0; k < t; ++k) {
    for (std::size_t i = 0; i < m; ++i) col[i] = -*table.scores[i][k];
    const auto r = stats::average_ranks(col);
    for (std::size_t i = 0; i < m; ++i) out.mean_ranks[i] += r[i];
  }
  for (double& r : out.mean_ranks) r /= static_cast<double>(t);
  out.best = static_cast<std::size_t>(
      std::min_element(out.mean_ranks.begin(), out.mean_ranks.end()) -
      out.mean_ranks.begin());

  std::vector<double> best(t), other(t);
  for (std::size_t k = 0; k < t; ++k) best[k] = *table.scores[out.best][k];
  out.p_values.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (i == out.best) {
      out.p_values[i] = 1.0;
      continue;
    }
    if (t < 5) continue;
    for (std::size_t k = 0; k < t; ++k) other[k] = *table.scores[i][k];
    out.p_values[i] = wilcoxon_signed_rank(best, other);
  }
  return out;
}

double MethodDiscrimination::mean_score() const {
  if (per_core.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : per_core) s += r.score;
  return s / static_cast<double>(per_core.size());
}

void EvalReport::merge(const EvalReport& other) {
  for (const auto& row : other.correlations) {
    auto it = std::find_if(correlations.begin(), correlations.end(),
                           [&](const CorrelationRow& r) { return r.method == row.method; });
    if (it != correlations.end()) {
      *it = row;
    } else {
      correlations.push_back(row);
    }
  }
  for (const auto& md : other.discrimination) {
    auto it = std::find_if(discrimination.begin(), discrimination.end(),
                           [&](const MethodDiscrimination& r) { return r.method == md.method; });
    if (it != discrimination.end()) {
      *it = md;
    } else {
      discrimination.push_back(md);
    }
  }
  if (other.ranking) ranking = other.ranking;
}

ScoreTable EvalReport::discrimination_table() const {
  ScoreTable table;
  std::vector<ConceptId> cores;
  for (const auto& md : discrimination) {
    for (const auto& r : md.per_core) {
      if (std::find(cores.begin(), cores.end(), r.core) == cores.end()) {
        cores.push_back(r.core);
      }
    }
  }
  for (auto c : cores) table.tasks.push_back(std::to_string(c.value));
  for (const auto& md : discrimination) {
    table.methods.push_back(md.method);
    std::vector<std::optional<double>> row(cores.size());
    for (const auto& r : md.per_core) {
      const auto k = static_cast<std::size_t>(
          std::find(cores.begin(), cores.end(), r.core) - cores.begin());
      row[k] = r.score;
    }
    table.scores.push_back(std::move(row));
  }
  return table;
}

namespace {

using nlohmann::json;

// NaN is not valid JSON.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j;
  j["correlations"] = json::array();
  for (const auto& r : report.correlations) {
    j["correlations"].push_back({{"method", r.method},
                                 {"resnik_corr", number_or_null(r.resnik_corr)},
                                 {"cooc_corr", number_or_null(r.cooc_corr)}});
  }
  j["discrimination"] = json::array();
  for (const auto& md : report.discrimination) {
    json cores = json::array();
    for (const auto& r : md.per_core) {
      cores.push_back({{"core", r.core.value},
                       {"score", r.score},
                       {"boot_median", r.boot_median},
                       {"ci_low", r.ci_low},
                       {"ci_high", r.ci_high},
                       {"positives_used", r.positives_used},
                       {"positives_total", r.positives_total},
                       {"null_candidates", r.null_candidates},
                       {"coverage", r.coverage}});
    }
    j["discrimination"].push_back(
        {{"method", md.method}, {"mean_score", md.mean_score()}, {"per_core", cores}});
  }
  if (report.ranking) {
    const auto& rk = *report.ranking;
    json rows = json::array();
    for (std::size_t i = 0; i < rk.methods.size(); ++i) {
      rows.push_back({{"method", rk.methods[i]},
                      {"mean_rank", rk.mean_ranks[i]},
                      {"p_value", rk.p_values[i] ? json(*rk.p_values[i]) : json(nullptr)}});
    }
    j["ranking"] = {{"best", rk.methods[rk.best]}, {"methods", rows}};
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  EvalReport out;
  try {
    const json j = json::parse(text);
    for (const auto& r : j.value("correlations", json::array())) {
      out.correlations.push_back({r.at("method").get<std::string>(),
                                  number_from(r.at("resnik_corr")),
                                  number_from(r.at("cooc_corr"))});
    }
    for (const auto& md : j.value("discrimination", json::array())) {
      MethodDiscrimination m;
      m.method = md.at("method").get<std::string>();
      for (const auto& r : md.at("per_core")) {
        DiscriminationResult d;
        d.core = ConceptId(r.at("core").get<std::uint64_t>());
        d.score = r.at("score").get<double>();
        d.boot_median = r.at("boot_median").get<double>();
        d.ci_low = r.at("ci_low").get<double>();
        d.ci_high = r.at("ci_high").get<double>();
        d.positives_used = r.at("positives_used").get<std::size_t>();
        d.positives_total = r.at("positives_total").get<std::size_t>();
        d.null_candidates = r.at("null_candidates").get<std::size_t>();
        d.coverage = r.at("coverage").get<double>();
        m.per_core.push_back(d);
      }
      out.discrimination.push_back(std::move(m));
    }
    if (j.contains("ranking")) {
      RankSummary rk;
      const auto& r = j.at("ranking");
      const auto best = r.at("best").get<std::string>();
      for (const auto& row : r.at("methods")) {
        rk.methods.push_back(row.at("method").get<std::string>());
        rk.mean_ranks.push_back(row.at("mean_rank").get<double>());
        const auto& p = row.at("p_value");
        rk.p_values.push_back(p.is_null() ? std::nullopt
                                          : std::optional<double>(p.get<double>()));
        if (rk.methods.back() == best) rk.best = rk.methods.size() - 1;
      }
      out.ranking = std::move(rk);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed report JSON: ") + e.what());
  }
  return out;
}

std::string render_report_text(const EvalReport& report) {
  std::ostringstream os;
  os << std::fixed;
  std::size_t w = 6;
  for (const auto& r : report.correlations) w = std::max(w, r.method.size());
  for (const auto& r : report.discrimination) w = std::max(w, r.method.size());
  w += 2;

  if (!report.correlations.empty()) {
    os << std::left << std::setw(static_cast<int>(w)) << "Method" << std::right
       << std::setw(12) << "Resnik" << std::setw(14) << "Co-occur." << '\n';
    for (const auto& r : report.correlations) {
      os << std::left << std::setw(static_cast<int>(w)) << r.method << std::right
         << std::setprecision(3) << std::setw(12) << r.resnik_corr << std::setw(14)
         << r.cooc_corr << '\n';
    }
    os << '\n';
  }
  if (!report.discrimination.empty()) {
    const auto table = report.discrimination_table();
    std::optional<RankSummary> ranks = report.ranking;
    if (!ranks && table.methods.size() >= 2 && table.tasks.size() >= 2) {
      try {
        ranks = rank_methods(table);
      } catch (const InputError&) {
        // missing cells: no rank column
      }
    }
    os << std::left << std::setw(10) << "Core";
    for (const auto& m : table.methods) {
      os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(w, 10)))
         << m;
    }
    os << '\n';
    for (std::size_t k = 0; k < table.tasks.size(); ++k) {
      os << std::left << std::setw(10) << table.tasks[k];
      for (std::size_t i = 0; i < table.methods.size(); ++i) {
        os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(w, 10)));
        if (table.scores[i][k]) {
          os << std::setprecision(3) << *table.scores[i][k];
        } else {
          os << "-";
        }
      }
      os << '\n';
    }
    os << std::left << std::setw(10) << "Mean";
    for (const auto& md : report.discrimination) {
      os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(w, 10)))
         << std::setprecision(3) << md.mean_score();
    }
    os << '\n';
    if (ranks && ranks->methods == table.methods) {
      os << std::left << std::setw(10) << "Mean Rank";
      for (double r : ranks->mean_ranks) {
        os << std::right << std::setw(static_cast<int>(std::max<std::size_t>(w, 10)))
           << std::setprecision(2) << r;
      }
      os << '\n';
    }
    os << '\n';
  }
  if (report.ranking || !report.discrimination.empty()) {
    std::optional<RankSummary> ranks = report.ranking;
    if (!ranks) {
      try {
        ranks = rank_methods(report.discrimination_table());
      } catch (const InputError&) {
      }
    }
    if (ranks) {
      os << "Wilcoxon signed-rank vs " << ranks->methods[ranks->best] << '\n';
      for (std::size_t i = 0; i < ranks->methods.size(); ++i) {
        if (i == ranks->best) continue;
        os << "  " << std::left << std::setw(static_cast<int>(w)) << ranks->methods[i]
           << std::right;
        if (ranks->p_values[i]) {
          os << std::scientific << std::setprecision(3) << *ranks->p_values[i]
             << std::fixed;
        } else {
          os << "n/a (fewer than 5 tasks)";
        }
        os << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace keep
