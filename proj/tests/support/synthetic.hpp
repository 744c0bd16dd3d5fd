// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic entity knowledge bases with controllable per-channel noise.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xmr/embedstore.hpp"
#include "xmr/trec.hpp"

namespace xmr::synthetic {

struct KbOptions {
    std::size_t entities = 200;
    std::size_t queries_per_entity = 2;
    std::size_t dim = 32;
    double query_noise = 0.5;  // norm of the noise added to each vector
    double image_noise = 1.0;
    double name_noise = 1.0;
    /// Strength of a fixed random linear distortion applied to query
    /// images (and, separately, entity names) before noise. Adapters can
    /// learn to undo it.
    double query_distortion = 0.0;
    double name_distortion = 0.0;
    std::uint64_t seed = 1;
};

struct Kb {
    EmbeddingMatrix query_images;
    EmbeddingMatrix passage_images;  // one row per entity
    EmbeddingMatrix entity_names;    // one row per entity
    std::vector<std::pair<std::string, std::string>> query_entity;
    Qrels qrels;  // entity-level
};

std::string entity_id(std::size_t i);
std::string query_id(std::size_t i);

Kb make_kb(const KbOptions& options);

/// Rows `[begin, end)` of the query list, as (query id, entity id) pairs
/// and entity-level qrels.
std::pair<std::vector<std::pair<std::string, std::string>>, Qrels> query_slice(const Kb& kb, std::size_t begin,
                                                                               std::size_t end);

/// Gaussian random matrix with unit-norm rows.
EmbeddingMatrix random_unit_matrix(ChannelRole role, std::size_t rows, std::size_t dim, std::mt19937_64& rng,
                                   const std::string& prefix = "d");

}  // namespace xmr::synthetic
