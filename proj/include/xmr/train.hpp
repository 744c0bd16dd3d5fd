// SPDX-License-Identifier: Apache-2.0
#pragma once

/// \file train.hpp
/// \brief Contrastive fine-tuning of per-role linear adapters, fusion
/// weights and temperature with in-batch negatives.
///
/// For anchor query image q_a and batch column j (entity name t_j,
/// reference image p_j):
///
///     u = n(A_qi q_a), v = n(A_pi p_j), w = n(A_pt t_j)      n(x) = x/|x|
///     s(a, j) = alpha_image <u, v> + alpha_cross <u, w>
///     loss = mean_a [ -log softmax_j(e^tau s(a, j))[a] ]
///
/// The softmax runs over passages for each query image only.

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xmr/embedstore.hpp"

namespace xmr {

enum class Strategy {
    mono,   // alpha_image = 1, alpha_cross = 0, fixed
    cross,  // alpha_image = 0, alpha_cross = 1, fixed
    joint,  // both alphas trainable
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct TrainConfig {
    Strategy strategy = Strategy::joint;
    std::size_t batch_size = 3072;
    double lr = 2e-6;
    double alpha_lr = 0.02;
    double weight_decay = 0.1;
    std::size_t warmup_steps = 4;
    std::size_t decay_steps = 50;
    double tau_init = 4.6;
    double alpha_init = 0.5;
    std::uint64_t seed = 0;
    std::size_t patience = 3;
    std::size_t max_epochs = 100;
    /// Drop same-entity columns from an anchor's negatives.
    bool mask_collisions = false;
    /// Where to dump the current parameters if the loss diverges.
    std::optional<std::filesystem::path> divergence_dump;

    /// Rates must be finite and >= 0; warmup_steps < decay_steps.
    void validate() const;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

using Matrix = Eigen::MatrixXd;

struct AdapterSet {
    Matrix query_image;
    Matrix passage_image;
    Matrix entity_name;

    static AdapterSet identity(std::size_t dim);
    static AdapterSet zeros(std::size_t dim);
    std::size_t dim() const { return static_cast<std::size_t>(query_image.rows()); }

    friend bool operator==(const AdapterSet& a, const AdapterSet& b) {
        return a.query_image == b.query_image && a.passage_image == b.passage_image &&
               a.entity_name == b.entity_name;
    }
};

struct Params {
    AdapterSet adapters;
    double alpha_image = 0.5;
    double alpha_cross = 0.5;
    double tau = 4.6;  // scores are multiplied by e^tau

    static Params initial(std::size_t dim, const TrainConfig& config);

    friend bool operator==(const Params&, const Params&) = default;
};

/// The alphas a strategy actually uses.
std::pair<double, double> effective_alphas(const Params& params, Strategy strategy);

struct Gradients {
    AdapterSet adapters;
    double alpha_image = 0.0;
    double alpha_cross = 0.0;
    double tau = 0.0;
};

/// One row per triple; rows are unit-norm before the adapters.
struct TripleBatch {
    Matrix query_images;
    Matrix passage_images;
    Matrix entity_names;
    std::vector<std::string> entity_ids;  // optional; needed for collision masking

    std::size_t size() const { return static_cast<std::size_t>(query_images.rows()); }
};

struct LossResult {
    double loss = 0.0;
    Gradients grad;
    std::size_t collisions = 0;  // anchors sharing their entity with another column
};

/// B x B similarity matrix s(a, j) (before the e^tau scale).
Matrix score_matrix(const TripleBatch& batch, const Params& params, Strategy strategy);

/// Loss and analytic gradients. Parameters the strategy masks get exactly
/// zero gradient. Throws on batch size < 2 or a non-finite loss.
LossResult batch_loss(const TripleBatch& batch, const Params& params, Strategy strategy,
                      bool mask_collisions = false);

/// Mean reciprocal rank of each anchor's own column; ties rank the
/// positive after equal-scored negatives.
double in_batch_mrr(const TripleBatch& batch, const Params& params, Strategy strategy,
                    bool mask_collisions = false);

/// Row-aligned training triples built from embedding matrices and
/// (query id, entity id) pairs. Entity ids index the passage-image and
/// entity-name matrices.
class TripleSet {
public:
    TripleSet(const EmbeddingMatrix& query_images, const EmbeddingMatrix& passage_images,
              const EmbeddingMatrix& entity_names,
              const std::vector<std::pair<std::string, std::string>>& pairs);

    std::size_t size() const noexcept { return entity_ids_.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(queries_.cols()); }
    TripleBatch batch(std::span<const std::size_t> rows) const;
    TripleBatch all() const;

private:
    Matrix queries_;
    Matrix passage_images_;
    Matrix entity_names_;
    std::vector<std::string> entity_ids_;
};

/// Linear warmup to 1 over `warmup` steps, then linear decay to 0 over
/// `decay` steps. `step` counts optimizer steps already taken.
double lr_multiplier(std::uint64_t step, std::size_t warmup, std::size_t decay);

/// Batches of `batch_size` consecutive entries; a trailing single leftover
/// joins the previous batch.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch_size);

/// Mean in-batch MRR over consecutive batches of `set`, weighted by anchors.
double validation_mrr(const TripleSet& set, const Params& params, Strategy strategy,
                      std::size_t batch_size, bool mask_collisions = false);

struct Moments {
    AdapterSet first;
    AdapterSet second;
    double alpha_first[2] = {0.0, 0.0};
    double alpha_second[2] = {0.0, 0.0};
    double tau_first = 0.0;
    double tau_second = 0.0;
};

struct TrainState {
    Strategy strategy = Strategy::joint;
    Params params;
    Moments moments;
    std::uint64_t step = 0;
    std::size_t epoch = 0;

    Params best;
    double best_val_mrr = 0.0;
    std::uint64_t best_step = 0;
    std::size_t best_epoch = 0;
};

/// One decoupled-weight-decay Adam step on every unmasked parameter.
/// Weight decay applies to the adapters only.
void optimizer_step(TrainState& state, const Gradients& grad, const TrainConfig& config);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_mrr = 0.0;
    double lr = 0.0;
    std::size_t collisions = 0;
    bool improved = false;
};

struct TrainLog {
    double initial_val_mrr = 0.0;
    std::vector<EpochLog> epochs;
    std::string stop_reason;
};

/// Trains from identity adapters; the best checkpoint (by validation
/// in-batch MRR, strict improvement only) is kept in TrainState::best.
TrainState train(const TripleSet& train_set, const TripleSet& val_set, const TrainConfig& config,
                 TrainLog* log = nullptr);

struct Checkpoint {
    Strategy strategy = Strategy::joint;
    Params params;
    std::uint64_t step = 0;
    std::size_t epoch = 0;
    double val_mrr = 0.0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint best_checkpoint(const TrainState& state);

/// "XCK1" header (version, strategy, step, epoch, alphas, tau, val MRR)
/// followed by three EMB1 blocks holding the adapters as float64.
void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Applies `adapter` to every row and re-normalizes.
EmbeddingMatrix apply_adapter(const Matrix& adapter, const EmbeddingMatrix& matrix);

struct ExportedChannels {
    EmbeddingMatrix query_images;
    EmbeddingMatrix passage_images;
    EmbeddingMatrix entity_names;
    double alpha_image = 0.0;
    double alpha_cross = 0.0;
};

ExportedChannels export_channels(const Checkpoint& checkpoint, const EmbeddingMatrix& query_images,
                                 const EmbeddingMatrix& passage_images,
                                 const EmbeddingMatrix& entity_names);

}  // namespace xmr
