#include "keep/cooccurrence.hpp"

#include <algorithm>
#include <istream>
#include <optional>
#include <tuple>
#include <ostream>
#include <unordered_map>

#include "keep/parallel.hpp"
#include "text_util.hpp"

namespace keep {

std::vector<ConceptId> phenotype(const PatientRecord& record,
                                 const RollUpMap& rollup,
                                 const Ontology& retained,
                                 const PhenotypeOptions& opts,
                                 std::size_t* unknown) {
  std::vector<ConceptId> hits;
  hits.reserve(record.events.size());
  for (const auto& ev : record.events) {
    if (retained.contains(ev.concept_id)) {
      hits.push_back(ev.concept_id);
      continue;
    }
    const auto targets = rollup.targets(ev.concept_id);
    if (targets.empty()) {
      if (opts.unknown == UnknownConceptPolicy::error) {
        throw InputError("patient " + record.patient_id +
                         ": unknown concept " +
                         std::to_string(ev.concept_id.value));
      }
      if (unknown) ++*unknown;
      continue;
    }
    hits.insert(hits.end(), targets.begin(), targets.end());
  }
  std::sort(hits.begin(), hits.end());
  std::vector<ConceptId> out;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    if (static_cast<int>(j - i) >= opts.min_occurrences) out.push_back(hits[i]);
    i = j;
  }
  return out;
}

CooccurrenceMatrix::CooccurrenceMatrix(std::size_t vocab_size,
                                       std::vector<Entry> entries,
                                       std::vector<std::uint32_t> marginals)
    : vocab_size_(vocab_size),
      entries_(std::move(entries)),
      marginals_(std::move(marginals)) {
  if (!marginals_.empty() && marginals_.size() != vocab_size_) {
    throw InputError("marginals do not match vocabulary size");
  }
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    if (e.i >= e.j || e.j >= vocab_size_ || e.count == 0) {
      throw InputError("invalid co-occurrence entry (" + std::to_string(e.i) +
                       ", " + std::to_string(e.j) + ")");
    }
    if (k > 0) {
      const auto& prev = entries_[k - 1];
      if (std::tie(prev.i, prev.j) >= std::tie(e.i, e.j)) {
        throw InputError("co-occurrence entries must be sorted and unique");
      }
    }
    if (!marginals_.empty() &&
        e.count > std::min(marginals_[e.i], marginals_[e.j])) {
      throw InputError("co-occurrence count exceeds marginal at (" +
                       std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    }
  }
}

std::uint32_t CooccurrenceMatrix::operator()(ConceptIndex a,
                                             ConceptIndex b) const {
  if (a == b) return 0;
  if (a > b) std::swap(a, b);
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), std::make_pair(a, b),
      [](const Entry& e, const std::pair<ConceptIndex, ConceptIndex>& key) {
        return std::tie(e.i, e.j) < std::tie(key.first, key.second);
      });
  if (it == entries_.end() || it->i != a || it->j != b) return 0;
  return it->count;
}

std::uint64_t CooccurrenceMatrix::total() const {
  std::uint64_t s = 0;
  for (const auto& e : entries_) s += e.count;
  return s;
}

CooccurrenceMatrix build_cooccurrence(std::span<const PatientRecord> records,
                                      const RollUpMap& rollup,
                                      const Ontology& vocab,
                                      const CooccurrenceOptions& opts,
                                      CooccurrenceStats* stats) {
  const std::size_t n = vocab.size();
  const int threads = resolve_threads(opts.threads);
  const std::size_t shards = static_cast<std::size_t>(threads);
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> partial(shards);
  std::vector<std::vector<std::uint32_t>> marg(shards,
                                               std::vector<std::uint32_t>(n, 0));
  std::vector<std::size_t> unknown(shards, 0);

  // Shard s owns the contiguous record range [s*len/shards, (s+1)*len/shards).
#pragma omp parallel for schedule(static, 1) num_threads(threads)
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t lo = s * records.size() / shards;
    const std::size_t hi = (s + 1) * records.size() / shards;
    auto& counts = partial[s];
    std::vector<ConceptIndex> idx;
    for (std::size_t r = lo; r < hi; ++r) {
      const auto ids =
          phenotype(records[r], rollup, vocab, opts.phenotype, &unknown[s]);
      idx.clear();
      for (auto id : ids) idx.push_back(vocab.index(id));
      std::sort(idx.begin(), idx.end());
      for (std::size_t a = 0; a < idx.size(); ++a) {
        ++marg[s][idx[a]];
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
          ++counts[(static_cast<std::uint64_t>(idx[a]) << 32) | idx[b]];
        }
      }
    }
  }

  std::vector<std::pair<std::uint64_t, std::uint32_t>> merged;
  std::size_t total_keys = 0;
  for (const auto& m : partial) total_keys += m.size();
  merged.reserve(total_keys);
  for (const auto& m : partial) merged.insert(merged.end(), m.begin(), m.end());
  std::sort(merged.begin(), merged.end());

  std::vector<CooccurrenceMatrix::Entry> entries;
  for (std::size_t k = 0; k < merged.size();) {
    std::uint64_t key = merged[k].first;
    std::uint32_t count = 0;
    for (; k < merged.size() && merged[k].first == key; ++k) {
      count += merged[k].second;
    }
    entries.push_back({static_cast<ConceptIndex>(key >> 32),
                       static_cast<ConceptIndex>(key & 0xffffffffu), count});
  }
  std::vector<std::uint32_t> marginals(n, 0);
  for (const auto& m : marg) {
    for (std::size_t i = 0; i < n; ++i) marginals[i] += m[i];
  }
  if (stats) {
    stats->patients = records.size();
    stats->unknown_events = 0;
    for (auto u : unknown) stats->unknown_events += u;
  }
  return CooccurrenceMatrix(n, std::move(entries), std::move(marginals));
}

std::vector<PatientRecord> read_patients(std::istream& in) {
  std::vector<PatientRecord> records;
  std::unordered_map<std::string, std::size_t> slot;
  detail::for_each_data_line(in, [&](std::string_view line, std::size_t no) {
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) {
      throw InputError("line " + std::to_string(no) +
                       ": expected patient_id\\tconcept_id\\tday_ordinal");
    }
    const std::string pid(fields[0]);
    const auto day = detail::parse_number<std::int64_t>(fields[2], no, "day");
    if (day < 0) {
      throw InputError("line " + std::to_string(no) + ": negative day ordinal");
    }
    auto [it, fresh] = slot.try_emplace(pid, records.size());
    if (fresh) records.push_back({pid, {}});
    records[it->second].events.push_back(
        {ConceptId(detail::parse_number<std::uint64_t>(fields[1], no, "concept")),
         day});
  });
  return records;
}

void write_patients(std::ostream& out, std::span<const PatientRecord> records) {
  out << "# patient_id\tconcept_id\tday_ordinal\n";
  for (const auto& r : records) {
    for (const auto& e : r.events) {
      out << r.patient_id << '\t' << e.concept_id.value << '\t' << e.day << '\n';
    }
  }
}

void write_cooccurrence(std::ostream& out, const CooccurrenceMatrix& x) {
  out << "#V=" << x.vocab_size() << '\n';
  for (std::size_t i = 0; i < x.marginals().size(); ++i) {
    out << "#marginal\t" << i << '\t' << x.marginals()[i] << '\n';
  }
  for (const auto& e : x.entries()) {
    out << e.i << '\t' << e.j << '\t' << e.count << '\n';
  }
}

CooccurrenceMatrix read_cooccurrence(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> vocab;
  std::vector<std::uint32_t> marginals;
  std::vector<CooccurrenceMatrix::Entry> entries;
  bool saw_marginal = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.starts_with("#V=")) {
      vocab = detail::parse_number<std::size_t>(t.substr(3), line_no, "V");
      marginals.assign(*vocab, 0);
      continue;
    }
    if (t.starts_with("#marginal\t")) {
      const auto fields = detail::split(t, '\t');
      if (!vocab || fields.size() != 3) {
        throw InputError("line " + std::to_string(line_no) + ": bad marginal");
      }
      const auto i = detail::parse_number<std::size_t>(fields[1], line_no, "index");
      if (i >= *vocab) throw InputError("marginal index out of range");
      marginals[i] = detail::parse_number<std::uint32_t>(fields[2], line_no, "count");
      saw_marginal = true;
      continue;
    }
    if (t.front() == '#') continue;
    const auto fields = detail::split(t, '\t');
    if (fields.size() != 3) {
      throw InputError("line " + std::to_string(line_no) + ": expected i\\tj\\tcount");
    }
    entries.push_back(
        {detail::parse_number<ConceptIndex>(fields[0], line_no, "i"),
         detail::parse_number<ConceptIndex>(fields[1], line_no, "j"),
         detail::parse_number<std::uint32_t>(fields[2], line_no, "count")});
  }
  if (!vocab) throw InputError("co-occurrence file lacks the #V=<V> header");
  if (!saw_marginal) marginals.clear();
  return CooccurrenceMatrix(*vocab, std::move(entries), std::move(marginals));
}

}  // namespace keep
