// SPDX-License-Identifier: Apache-2.0
#include "xmr/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "xmr/error.hpp"
#include "xmr/parallel.hpp"

namespace xmr {

std::string_view to_string(Normalization n) {
    switch (n) {
        case Normalization::none: return "none";
        case Normalization::min_max: return "min_max";
        case Normalization::z_score: return "z_score";
    }
    return "unknown";
}

Normalization parse_normalization(std::string_view name) {
    for (auto n : {Normalization::none, Normalization::min_max, Normalization::z_score}) {
        if (to_string(n) == name) return n;
    }
    throw usage_error("unknown normalization '" + std::string(name) +
                      "' (expected none, min_max or z_score)");
}

void FusionSpec::validate() const {
    if (weights.empty()) throw validation_error("fusion config has no channel weights");
    bool any_positive = false;
    for (const auto& [channel, w] : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw validation_error("weight for channel '" + channel + "' must be finite and >= 0");
        }
        any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw validation_error("fusion config needs at least one positive weight");
    if (candidate_pool_k < 1) throw validation_error("candidate pool size must be >= 1");
}

std::vector<double> normalize_scores(const std::vector<ScoredDoc>& docs, Normalization n) {
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(d.score);
    if (out.empty() || n == Normalization::none) return out;

    if (n == Normalization::min_max) {
        const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
        const double min = *lo;
        const double range = *hi - *lo;
        for (auto& s : out) s = range > 0.0 ? (s - min) / range : 0.0;
        return out;
    }

    double mean = 0.0;
    for (double s : out) mean += s;
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (double s : out) var += (s - mean) * (s - mean);
    const double sd = std::sqrt(var / static_cast<double>(out.size()));
    for (auto& s : out) s = sd > 0.0 ? (s - mean) / sd : 0.0;
    return out;
}

RetrievalRun fuse(const ChannelRuns& runs, const FusionSpec& spec, std::size_t output_k) {
    spec.validate();
    for (const auto& [channel, w] : spec.weights) {
        if (!runs.contains(channel)) throw validation_error("weight for unknown channel '" + channel + "'");
    }
    for (const auto& [channel, run] : runs) {
        if (!spec.weights.contains(channel)) {
            throw validation_error("no weight given for channel '" + channel + "'");
        }
    }

    std::vector<std::pair<double, const RetrievalRun*>> active;
    for (const auto& [channel, w] : spec.weights) {
        if (w > 0.0) active.emplace_back(w, &runs.at(channel));
    }
    const auto& reference = *active.front().second;
    for (const auto& [w, run] : active) {
        bool same = run->queries.size() == reference.queries.size();
        for (auto a = run->queries.begin(), b = reference.queries.begin(); same && a != run->queries.end();
             ++a, ++b) {
            same = a->first == b->first;
        }
        if (!same) throw validation_error("channel runs do not share the same query ids");
    }

    RetrievalRun fused;
    fused.tag = "fused";
    struct Pool {
        std::unordered_map<std::string, double> scores;
        double floor = 0.0;
        bool empty = true;
    };
    std::vector<Pool> pools(active.size());

    for (const auto& [qid, unused] : reference.queries) {
        std::set<std::string> candidates;
        for (std::size_t c = 0; c < active.size(); ++c) {
            const auto& list = active[c].second->queries.at(qid);
            const std::size_t n = std::min(list.size(), spec.candidate_pool_k);
            std::vector<ScoredDoc> head(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(n));
            const auto norm = normalize_scores(head, spec.normalization);
            auto& pool = pools[c];
            pool.scores.clear();
            pool.empty = head.empty();
            pool.floor = head.empty() ? 0.0 : *std::min_element(norm.begin(), norm.end());
            for (std::size_t i = 0; i < n; ++i) {
                pool.scores.emplace(head[i].doc_id, norm[i]);
                candidates.insert(head[i].doc_id);
            }
        }
        if (candidates.empty()) throw validation_error("empty candidate set for query '" + qid + "'");

        std::vector<ScoredDoc> docs;
        docs.reserve(candidates.size());
        for (const auto& doc : candidates) {
            double score = 0.0;
            for (std::size_t c = 0; c < active.size(); ++c) {
                const auto& pool = pools[c];
                if (pool.empty) continue;
                auto it = pool.scores.find(doc);
                score += active[c].first * (it != pool.scores.end() ? it->second : pool.floor);
            }
            docs.push_back({doc, score});
        }
        std::sort(docs.begin(), docs.end(), ranks_before);
        if (output_k > 0 && docs.size() > output_k) docs.resize(output_k);
        fused.queries.emplace(qid, std::move(docs));
    }
    return fused;
}

RetrievalRun broadcast_to_passages(const RetrievalRun& entity_run, const EntityPassageMap& map) {
    RetrievalRun out;
    out.tag = entity_run.tag;
    struct Item {
        double score;
        const std::string* entity;
        std::size_t position;
        const std::string* passage;
    };
    for (const auto& [qid, entities] : entity_run.queries) {
        std::vector<Item> items;
        for (const auto& e : entities) {
            const auto& passages = map.passages_of(e.doc_id);
            for (std::size_t i = 0; i < passages.size(); ++i) {
                items.push_back({e.score, &e.doc_id, i, &passages[i]});
            }
        }
        std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
            if (a.score != b.score) return a.score > b.score;
            if (*a.entity != *b.entity) return *a.entity < *b.entity;
            return a.position < b.position;
        });
        auto& docs = out.queries[qid];
        docs.reserve(items.size());
        for (const auto& it : items) docs.push_back({*it.passage, it.score});
    }
    return out;
}

std::vector<std::vector<double>> simplex_grid(std::size_t channels, double step) {
    if (channels < 1) throw validation_error("grid needs at least one channel");
    if (!(step > 0.0 && step <= 0.5)) throw validation_error("grid step must be in (0, 0.5]");
    const double inv = 1.0 / step;
    const auto divisions = static_cast<std::size_t>(std::llround(inv));
    if (std::abs(static_cast<double>(divisions) * step - 1.0) > 1e-9) {
        throw validation_error("grid step must divide 1 exactly");
    }

    std::vector<std::vector<double>> grid;
    std::vector<std::size_t> units(channels, 0);
    // Lexicographic enumeration of compositions of `divisions` into `channels` parts.
    auto recurse = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
        if (pos + 1 == channels) {
            units[pos] = left;
            std::vector<double> w(channels);
            for (std::size_t i = 0; i < channels; ++i) {
                w[i] = static_cast<double>(units[i]) / static_cast<double>(divisions);
            }
            grid.push_back(std::move(w));
            return;
        }
        for (std::size_t u = 0; u <= left; ++u) {
            units[pos] = u;
            self(self, pos + 1, left - u);
        }
    };
    recurse(recurse, 0, divisions);
    return grid;
}

GridSearchResult grid_search_weights(const ChannelRuns& runs, const Qrels& qrels,
                                     const GridSearchOptions& options) {
    if (qrels.empty()) throw validation_error("grid search needs non-empty qrels");
    if (runs.size() < 2) throw validation_error("grid search needs at least two channels");

    GridSearchResult result;
    for (const auto& [channel, run] : runs) result.channels.push_back(channel);
    const auto grid = simplex_grid(result.channels.size(), options.step);

    result.evaluated.resize(grid.size());
    parallel_for(grid.size(), options.threads, [&](std::size_t g) {
        FusionSpec spec;
        spec.normalization = options.normalization;
        spec.candidate_pool_k = options.candidate_pool_k;
        for (std::size_t c = 0; c < result.channels.size(); ++c) {
            spec.weights[result.channels[c]] = grid[g][c];
        }
        const auto fused = fuse(runs, spec);
        result.evaluated[g] = {grid[g], evaluate(fused, qrels, options.metric).mean};
    });

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (result.evaluated[g].metric > result.evaluated[best].metric) best = g;
    }
    result.metric = result.evaluated[best].metric;
    for (std::size_t c = 0; c < result.channels.size(); ++c) {
        result.weights[result.channels[c]] = result.evaluated[best].weights[c];
    }
    return result;
}

}  // namespace xmr
