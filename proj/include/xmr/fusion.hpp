// SPDX-License-Identifier: Apache-2.0
#pragma once

/// \file fusion.hpp
/// \brief Weighted score-level fusion of retrieval channels and simplex
/// grid search of the channel weights.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xmr/corpus.hpp"
#include "xmr/evalir.hpp"
#include "xmr/trec.hpp"

namespace xmr {

enum class Normalization { none, min_max, z_score };

std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view name);

/// Channel runs keyed by channel name (mono, cross, text, ...).
using ChannelRuns = std::map<std::string, RetrievalRun>;

struct FusionSpec {
    std::map<std::string, double> weights;
    Normalization normalization = Normalization::none;
    /// Per-channel top-k taken into the candidate union.
    std::size_t candidate_pool_k = 100;

    /// At least one positive weight, none negative or non-finite.
    void validate() const;
};

/// Per-query score normalization of one ranked list (in list order).
/// Degenerate lists (all scores equal) map to 0 under min_max and z_score.
std::vector<double> normalize_scores(const std::vector<ScoredDoc>& docs, Normalization n);

/// Fused score = sum over channels (in name order) of weight * normalized
/// score. A candidate absent from a channel's pool takes that channel's
/// per-query minimum normalized score. Channels with zero weight neither
/// add candidates nor contribute. `output_k` == 0 keeps every candidate.
RetrievalRun fuse(const ChannelRuns& runs, const FusionSpec& spec, std::size_t output_k = 0);

/// Expands each (entity, score) into (passage, score) for every passage of
/// the entity. Order: score desc, entity id asc, then map order.
RetrievalRun broadcast_to_passages(const RetrievalRun& entity_run, const EntityPassageMap& map);

struct GridPoint {
    std::vector<double> weights;  // in channel-name order
    double metric = 0.0;
};

struct GridSearchOptions {
    double step = 0.05;
    MetricSpec metric{MetricKind::mrr, 100};
    Normalization normalization = Normalization::none;
    std::size_t candidate_pool_k = 100;
    std::size_t threads = 1;
};

struct GridSearchResult {
    std::vector<std::string> channels;  // name order
    std::map<std::string, double> weights;
    double metric = 0.0;
    std::vector<GridPoint> evaluated;  // lexicographic order
};

/// All weight vectors whose entries are multiples of `step` summing to 1,
/// in lexicographic order. 1/step must be an integer.
std::vector<std::vector<double>> simplex_grid(std::size_t channels, double step);

/// Evaluates every grid point and returns the maximizer; on equal metric
/// the lexicographically smallest weight vector wins.
GridSearchResult grid_search_weights(const ChannelRuns& runs, const Qrels& qrels,
                                     const GridSearchOptions& options);

}  // namespace xmr
