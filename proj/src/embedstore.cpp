// SPDX-License-Identifier: Apache-2.0
#include "xmr/embedstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xmr/error.hpp"

namespace xmr {

static_assert(std::endian::native == std::endian::little,
              "embedding container I/O assumes a little-endian host");

std::string_view to_string(ChannelRole role) {
    switch (role) {
        case ChannelRole::query_image: return "query_image";
        case ChannelRole::passage_image: return "passage_image";
        case ChannelRole::entity_name: return "entity_name";
        case ChannelRole::query_text: return "query_text";
        case ChannelRole::passage_text: return "passage_text";
    }
    return "unknown";
}

ChannelRole parse_channel_role(std::string_view name) {
    for (auto r : {ChannelRole::query_image, ChannelRole::passage_image, ChannelRole::entity_name,
                   ChannelRole::query_text, ChannelRole::passage_text}) {
        if (to_string(r) == name) return r;
    }
    throw usage_error("unknown channel role '" + std::string(name) + "'");
}

EmbeddingMatrix::EmbeddingMatrix(ChannelRole role, std::vector<std::string> ids,
                                 std::vector<float> data, std::size_t dim)
    : role_(role), dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
    if (dim_ == 0) throw validation_error("embedding dim must be >= 1");
    if (data_.size() != ids_.size() * dim_) {
        throw validation_error("embedding data has " + std::to_string(data_.size()) +
                               " values, expected " + std::to_string(ids_.size()) + " x " +
                               std::to_string(dim_));
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const auto& id = ids_[i];
        if (id.empty() || id.find('\n') != std::string::npos) {
            throw validation_error("invalid id at row " + std::to_string(i));
        }
        if (!index_.emplace(id, i).second) throw validation_error("duplicate id '" + id + "'");
    }
    normalized_ = !ids_.empty();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        double sq = 0.0;
        for (float v : row(i)) {
            if (!std::isfinite(v)) {
                throw validation_error("non-finite value in row '" + ids_[i] + "'");
            }
            sq += static_cast<double>(v) * v;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) normalized_ = false;
    }
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t EmbeddingMatrix::index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw validation_error("unknown id '" + std::string(id) + "' in " +
                           std::string(to_string(role_)) + " matrix");
}

EmbeddingMatrix EmbeddingMatrix::with_role(ChannelRole role) const {
    EmbeddingMatrix copy = *this;
    copy.role_ = role;
    return copy;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".ids";
    return p;
}

namespace detail {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::string_view ByteReader::take(std::size_t n) {
    if (remaining() < n) throw format_error(context_ + ": truncated payload");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::uint32_t ByteReader::u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
}

std::uint64_t ByteReader::u64() {
    std::uint64_t v;
    std::memcpy(&v, take(8).data(), 8);
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("read failed for '" + path.string() + "'");
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot create '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw io_error("write failed for '" + path.string() + "'");
}

}  // namespace detail

std::vector<std::string> read_id_lines(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    std::vector<std::string> ids;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ids.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return ids;
}

void write_id_lines(const std::vector<std::string>& ids, const std::filesystem::path& path) {
    std::string out;
    for (const auto& id : ids) {
        out += id;
        out += '\n';
    }
    detail::write_file(path, out);
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    if (matrix.count() == 0) throw validation_error("refusing to write an empty embedding matrix");
    if (matrix.dim() > UINT32_MAX) throw validation_error("embedding dim exceeds u32");

    std::string out;
    out.reserve(kEmbeddingHeaderBytes + matrix.data().size_bytes());
    out.append(kEmbeddingMagic, 4);
    detail::put_u8(out, static_cast<std::uint8_t>(matrix.role()));
    detail::put_u8(out, static_cast<std::uint8_t>(DType::float32));
    detail::put_u32(out, static_cast<std::uint32_t>(matrix.dim()));
    detail::put_u64(out, matrix.count());
    out.append(reinterpret_cast<const char*>(matrix.data().data()), matrix.data().size_bytes());

    detail::write_file(path, out);
    write_id_lines(matrix.ids(), sidecar_path(path));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    const std::string ctx = "'" + path.string() + "'";
    detail::ByteReader r(bytes, ctx);

    if (r.remaining() < kEmbeddingHeaderBytes) throw format_error(ctx + ": truncated header");
    if (std::memcmp(r.take(4).data(), kEmbeddingMagic, 4) != 0) {
        throw format_error(ctx + ": magic mismatch (expected EMB1)");
    }
    const std::uint8_t role = r.u8();
    if (role > static_cast<std::uint8_t>(ChannelRole::passage_text)) {
        throw format_error(ctx + ": unknown role byte " + std::to_string(role));
    }
    const std::uint8_t dtype = r.u8();
    if (dtype != static_cast<std::uint8_t>(DType::float32)) {
        throw format_error(ctx + ": unsupported dtype byte " + std::to_string(dtype));
    }
    const std::uint32_t dim = r.u32();
    const std::uint64_t count = r.u64();
    if (dim == 0) throw format_error(ctx + ": dim is zero");

    const std::uint64_t payload = count * dim * sizeof(float);
    if (count != 0 && payload / count / dim != sizeof(float)) {
        throw format_error(ctx + ": header overflows");
    }
    if (r.remaining() < payload) throw format_error(ctx + ": truncated payload");
    if (r.remaining() > payload) throw format_error(ctx + ": trailing bytes after payload");

    std::vector<float> data(count * dim);
    std::memcpy(data.data(), r.take(payload).data(), payload);

    auto ids = read_id_lines(sidecar_path(path));
    if (ids.size() != count) {
        throw format_error(ctx + ": count mismatch, header says " + std::to_string(count) +
                           " rows but sidecar has " + std::to_string(ids.size()) + " ids");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw format_error(ctx + ": non-finite value in row '" + ids[i / dim] + "'");
        }
    }
    return EmbeddingMatrix(static_cast<ChannelRole>(role), std::move(ids), std::move(data), dim);
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix) {
    const std::size_t dim = matrix.dim();
    std::vector<float> out(matrix.data().begin(), matrix.data().end());
    for (std::size_t i = 0; i < matrix.count(); ++i) {
        auto row = matrix.row(i);
        double sq = 0.0;
        for (float v : row) sq += static_cast<double>(v) * v;
        if (sq == 0.0) {
            throw validation_error("zero-norm row '" + matrix.ids()[i] + "' cannot be normalized");
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t j = 0; j < dim; ++j) {
            out[i * dim + j] = static_cast<float>(row[j] * inv);
        }
    }
    return EmbeddingMatrix(matrix.role(), matrix.ids(), std::move(out), dim);
}

}  // namespace xmr
