#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "keep/types.hpp"

namespace keep {

enum class EmbeddingKind { anchor, target, context, final };

std::string_view to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view text);

// Dense V x d row-major matrix. Row i belongs to internal index i; `ids`
// carries the external concept id of every row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim,
                  EmbeddingKind kind = EmbeddingKind::target);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  EmbeddingKind kind() const { return kind_; }
  void set_kind(EmbeddingKind kind) { kind_ = kind; }

  std::span<double> row(std::size_t i) {
    return std::span(values_).subspan(i * dim_, dim_);
  }
  std::span<const double> row(std::size_t i) const {
    return std::span(values_).subspan(i * dim_, dim_);
  }
  double& operator()(std::size_t i, std::size_t k) { return values_[i * dim_ + k]; }
  double operator()(std::size_t i, std::size_t k) const {
    return values_[i * dim_ + k];
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<const ConceptId> ids() const { return ids_; }
  ConceptId id(std::size_t i) const { return ids_[i]; }
  // Replaces the row ids; size must equal rows().
  void set_ids(std::vector<ConceptId> ids);
  std::optional<std::size_t> find(ConceptId id) const;

  // True if every entry is finite.
  bool all_finite() const;
  double frobenius_norm() const;

  bool operator==(const EmbeddingMatrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  EmbeddingKind kind_ = EmbeddingKind::target;
  std::vector<double> values_;
  std::vector<ConceptId> ids_;
  std::unordered_map<ConceptId, std::size_t> lookup_;
};

// Rows reordered to follow `ids`; throws InputError naming the first id the
// embedding lacks.
EmbeddingMatrix align_rows(const EmbeddingMatrix& emb, std::span<const ConceptId> ids);

// Text format: header "V d kind", then V lines "external_id v1 ... vd" with
// kTextDecimals digits after the decimal point.
inline constexpr int kTextDecimals = 9;
void write_embedding_text(std::ostream& out, const EmbeddingMatrix& emb);
EmbeddingMatrix read_embedding_text(std::istream& in);

// Binary format: "KEEPEMB1", u32 V, u32 d, f32 row-major payload, all little
// endian. Carries neither ids nor kind; rows read back get ids 0..V-1 and
// kind target unless the caller sets them.
void write_embedding_binary(std::ostream& out, const EmbeddingMatrix& emb);
EmbeddingMatrix read_embedding_binary(std::istream& in);

// Picks the format from the file contents (binary magic or text).
EmbeddingMatrix load_embedding(const std::filesystem::path& path);
void save_embedding(const std::filesystem::path& path,
                    const EmbeddingMatrix& emb, bool binary = false);

}  // namespace keep
