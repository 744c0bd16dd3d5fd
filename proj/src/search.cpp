// SPDX-License-Identifier: Apache-2.0
#include "xmr/search.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <numeric>

#include "xmr/error.hpp"
#include "xmr/parallel.hpp"

namespace xmr {

namespace {

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMapF = Eigen::Map<const RowMajorF>;

void check_inputs(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus,
                  const SearchOptions& options) {
    if (queries.dim() != corpus.dim()) {
        throw validation_error("dim mismatch: queries have " + std::to_string(queries.dim()) +
                               ", corpus has " + std::to_string(corpus.dim()));
    }
    if (options.require_normalized) {
        if (queries.count() > 0 && !queries.normalized()) {
            throw validation_error("query matrix is not L2-normalized");
        }
        if (corpus.count() > 0 && !corpus.normalized()) {
            throw validation_error("corpus matrix is not L2-normalized");
        }
    }
}

}  // namespace

std::string_view channel_name(Channel c) {
    switch (c) {
        case Channel::mono_image: return "mono";
        case Channel::cross_image_text: return "cross";
        case Channel::text: return "text";
    }
    return "unknown";
}

Channel parse_channel(std::string_view name) {
    for (auto c : {Channel::mono_image, Channel::cross_image_text, Channel::text}) {
        if (channel_name(c) == name) return c;
    }
    throw usage_error("unknown channel '" + std::string(name) + "' (expected mono, cross or text)");
}

std::vector<ChannelScores> topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus,
                                std::size_t k, Channel channel, const SearchOptions& options) {
    if (k < 1) throw validation_error("k must be >= 1");
    check_inputs(queries, corpus, options);

    const std::size_t nq = queries.count();
    const std::size_t nc = corpus.count();
    const std::size_t dim = corpus.dim();
    const std::size_t keep = std::min(k, nc);

    std::vector<ChannelScores> results(nq);
    if (nq == 0) return results;

    // Float products are exact in double, so accumulated scores agree with
    // any other double-precision evaluation far below float resolution.
    const RowMajorD corpus_d = ConstMapF(corpus.data().data(), static_cast<Eigen::Index>(nc),
                                         static_cast<Eigen::Index>(dim))
                                   .cast<double>();
    const std::size_t n_blocks = (nq + kQueryBlock - 1) / kQueryBlock;

    // Ordering by (score desc, id asc) through an index permutation.
    const auto& doc_ids = corpus.ids();

    parallel_for(n_blocks, options.threads, [&](std::size_t b) {
        const std::size_t begin = b * kQueryBlock;
        const std::size_t rows = std::min(kQueryBlock, nq - begin);
        const ConstMapF block(queries.data().data() + begin * dim,
                              static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
        const RowMajorD scores = block.cast<double>() * corpus_d.transpose();

        std::vector<std::size_t> order(nc);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* s = scores.data() + r * nc;
            std::iota(order.begin(), order.end(), std::size_t{0});
            auto better = [&](std::size_t a, std::size_t c) {
                if (s[a] != s[c]) return s[a] > s[c];
                return doc_ids[a] < doc_ids[c];
            };
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                              order.end(), better);

            auto& out = results[begin + r];
            out.query_id = queries.ids()[begin + r];
            out.channel = channel;
            out.ranked.reserve(keep);
            for (std::size_t i = 0; i < keep; ++i) {
                out.ranked.push_back({doc_ids[order[i]], s[order[i]]});
            }
        }
    });
    return results;
}

std::vector<double> score_pairs(const EmbeddingMatrix& queries, const EmbeddingMatrix& corpus,
                               const std::vector<std::pair<std::string, std::string>>& pairs,
                               const SearchOptions& options) {
    check_inputs(queries, corpus, options);
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [qid, did] : pairs) {
        const auto q = queries.row(queries.index_of(qid));
        const auto d = corpus.row(corpus.index_of(did));
        const Eigen::Map<const Eigen::VectorXf> qv(q.data(), static_cast<Eigen::Index>(q.size()));
        const Eigen::Map<const Eigen::VectorXf> dv(d.data(), static_cast<Eigen::Index>(d.size()));
        out.push_back(qv.cast<double>().dot(dv.cast<double>()));
    }
    return out;
}

RetrievalRun to_run(const std::vector<ChannelScores>& scores, std::string tag) {
    RetrievalRun run;
    run.tag = std::move(tag);
    for (const auto& cs : scores) {
        if (!run.queries.emplace(cs.query_id, cs.ranked).second) {
            throw validation_error("duplicate query '" + cs.query_id + "' in channel scores");
        }
    }
    return run;
}

}  // namespace xmr
