// SPDX-License-Identifier: Apache-2.0
#pragma once

/// \file embedstore.hpp
/// \brief Row-aligned embedding matrices and their on-disk container.
///
/// Binary layout (all integers little-endian):
///
///     "EMB1" | role:u8 | dtype:u8 | dim:u32 | count:u64 | count*dim values
///
/// dtype 0 is float32, row-major. A sidecar file `<path>.ids` lists one
/// UTF-8 id per line, in row order, with no trailing blank line.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xmr {

enum class ChannelRole : std::uint8_t {
    query_image = 0,
    passage_image = 1,
    entity_name = 2,
    query_text = 3,
    passage_text = 4,
};

std::string_view to_string(ChannelRole role);
ChannelRole parse_channel_role(std::string_view name);

enum class DType : std::uint8_t {
    float32 = 0,
    float64 = 1,  // only used inside training checkpoints
};

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::size_t kEmbeddingHeaderBytes = 4 + 1 + 1 + 4 + 8;

/// Tolerance on row norms for a matrix to count as normalized.
inline constexpr double kUnitNormTolerance = 1e-5;

/// Dense float32 matrix with one unique id per row. Immutable once built.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    /// Validates shape, id uniqueness and finiteness; throws xmr::Error.
    /// `normalized` is derived from the data (every row within
    /// kUnitNormTolerance of unit norm).
    EmbeddingMatrix(ChannelRole role, std::vector<std::string> ids,
                    std::vector<float> data, std::size_t dim);

    ChannelRole role() const noexcept { return role_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t count() const noexcept { return ids_.size(); }
    bool normalized() const noexcept { return normalized_; }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data_).subspan(i * dim_, dim_);
    }

    std::optional<std::size_t> find(std::string_view id) const;
    /// Like find() but throws a validation error naming the id.
    std::size_t index_of(std::string_view id) const;

    /// Same ids and data under a different role tag.
    EmbeddingMatrix with_role(ChannelRole role) const;

    friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
        return a.role_ == b.role_ && a.dim_ == b.dim_ && a.ids_ == b.ids_ &&
               a.data_ == b.data_;
    }

private:
    ChannelRole role_ = ChannelRole::query_image;
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    bool normalized_ = false;
    std::unordered_map<std::string, std::size_t> index_;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

/// Unit-normalizes every row (in double precision, stored as float).
/// Throws a validation error naming the first zero-norm row.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix);

std::vector<std::string> read_id_lines(const std::filesystem::path& path);
void write_id_lines(const std::vector<std::string>& ids, const std::filesystem::path& path);

namespace detail {
// Little-endian primitives shared with the checkpoint container.
void put_u8(std::string& out, std::uint8_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);
void put_f32(std::string& out, float v);

class ByteReader {
public:
    ByteReader(std::string_view bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::string_view take(std::size_t n);
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
    std::string context_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);
}  // namespace detail

}  // namespace xmr
