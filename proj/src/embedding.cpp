#include "keep/embedding.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "keep/error.hpp"
#include "text_util.hpp"

namespace keep {

namespace {

constexpr std::array<char, 8> kMagic{'K', 'E', 'E', 'P', 'E', 'M', 'B', '1'};

static_assert(std::endian::native == std::endian::little,
              "binary embedding I/O assumes a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw InputError("truncated binary embedding header");
  }
  return v;
}

}  // namespace

std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::anchor: return "anchor";
    case EmbeddingKind::target: return "target";
    case EmbeddingKind::context: return "context";
    case EmbeddingKind::final: return "final";
  }
  return "target";
}

EmbeddingKind parse_embedding_kind(std::string_view text) {
  if (text == "anchor") return EmbeddingKind::anchor;
  if (text == "target") return EmbeddingKind::target;
  if (text == "context") return EmbeddingKind::context;
  if (text == "final") return EmbeddingKind::final;
  throw InputError("unknown embedding kind '" + std::string(text) + "'");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 EmbeddingKind kind)
    : rows_(rows), dim_(dim), kind_(kind), values_(rows * dim, 0.0) {
  std::vector<ConceptId> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = ConceptId(i);
  set_ids(std::move(ids));
}

void EmbeddingMatrix::set_ids(std::vector<ConceptId> ids) {
  if (ids.size() != rows_) {
    throw InputError("embedding has " + std::to_string(rows_) +
                     " rows but " + std::to_string(ids.size()) + " ids");
  }
  std::unordered_map<ConceptId, std::size_t> lookup;
  lookup.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!lookup.emplace(ids[i], i).second) {
      throw InputError("duplicate embedding row id " +
                       std::to_string(ids[i].value));
    }
  }
  ids_ = std::move(ids);
  lookup_ = std::move(lookup);
}

std::optional<std::size_t> EmbeddingMatrix::find(ConceptId id) const {
  const auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingMatrix::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double EmbeddingMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  return rows_ == other.rows_ && dim_ == other.dim_ && kind_ == other.kind_ &&
         values_ == other.values_ && ids_ == other.ids_;
}

void write_embedding_text(std::ostream& out, const EmbeddingMatrix& emb) {
  out << emb.rows() << ' ' << emb.dim() << ' ' << to_string(emb.kind()) << '\n';
  std::string line;
  char buf[64];
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    line = std::to_string(emb.id(i).value);
    for (double v : emb.row(i)) {
      std::snprintf(buf, sizeof buf, " %.*f", kTextDecimals, v);
      line += buf;
    }
    line.push_back('\n');
    out << line;
  }
}

EmbeddingMatrix read_embedding_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty embedding file");
  const auto header = detail::split_ws(detail::trim(line));
  if (header.size() != 3) throw InputError("embedding header must be 'V d kind'");
  const auto rows = detail::parse_number<std::size_t>(header[0], 1, "V");
  const auto dim = detail::parse_number<std::size_t>(header[1], 1, "d");
  EmbeddingMatrix emb(rows, dim, parse_embedding_kind(header[2]));

  std::vector<ConceptId> ids;
  ids.reserve(rows);
  std::size_t line_no = 1;
  while (ids.size() < rows && std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto fields = detail::split_ws(detail::trim(line));
    if (fields.size() != dim + 1) {
      throw InputError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim + 1) + " fields");
    }
    const std::size_t r = ids.size();
    ids.emplace_back(detail::parse_number<std::uint64_t>(fields[0], line_no, "id"));
    for (std::size_t k = 0; k < dim; ++k) {
      emb(r, k) = detail::parse_number<double>(fields[k + 1], line_no, "value");
    }
  }
  if (ids.size() != rows) {
    throw InputError("embedding file has " + std::to_string(ids.size()) +
                     " rows, header says " + std::to_string(rows));
  }
  if (!emb.all_finite()) throw InputError("embedding file contains NaN or Inf");
  emb.set_ids(std::move(ids));
  return emb;
}

void write_embedding_binary(std::ostream& out, const EmbeddingMatrix& emb) {
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, static_cast<std::uint32_t>(emb.rows()));
  write_u32(out, static_cast<std::uint32_t>(emb.dim()));
  std::vector<float> payload(emb.values().begin(), emb.values().end());
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

EmbeddingMatrix read_embedding_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw InputError("not a KEEPEMB1 file");
  }
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t dim = read_u32(in);
  std::vector<float> payload(static_cast<std::size_t>(rows) * dim);
  if (!in.read(reinterpret_cast<char*>(payload.data()),
               static_cast<std::streamsize>(payload.size() * sizeof(float)))) {
    throw InputError("truncated binary embedding payload");
  }
  EmbeddingMatrix emb(rows, dim);
  std::copy(payload.begin(), payload.end(), emb.values().begin());
  if (!emb.all_finite()) throw InputError("embedding file contains NaN or Inf");
  return emb;
}

EmbeddingMatrix load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  const bool binary = in.gcount() == 8 && magic == kMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_embedding_binary(in) : read_embedding_text(in);
}

void save_embedding(const std::filesystem::path& path,
                    const EmbeddingMatrix& emb, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  if (binary) {
    write_embedding_binary(out, emb);
  } else {
    write_embedding_text(out, emb);
  }
}

EmbeddingMatrix align_rows(const EmbeddingMatrix& emb, std::span<const ConceptId> ids) {
  EmbeddingMatrix out(ids.size(), emb.dim(), emb.kind());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = emb.find(ids[i]);
    if (!r) throw InputError("embedding has no row for concept " + std::to_string(ids[i].value));
    std::copy(emb.row(*r).begin(), emb.row(*r).end(), out.row(i).begin());
  }
  out.set_ids(std::vector<ConceptId>(ids.begin(), ids.end()));
  return out;
}

}  // namespace keep
