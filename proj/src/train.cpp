// SPDX-License-Identifier: Apache-2.0
#include "xmr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "xmr/error.hpp"

namespace xmr {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::mono: return "mono";
        case Strategy::cross: return "cross";
        case Strategy::joint: return "joint";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view name) {
    for (auto s : {Strategy::mono, Strategy::cross, Strategy::joint}) {
        if (to_string(s) == name) return s;
    }
    throw usage_error("unknown strategy '" + std::string(name) + "' (expected mono, cross or joint)");
}

void TrainConfig::validate() const {
    auto rate = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0) {
            throw validation_error(std::string(name) + " must be finite and >= 0");
        }
    };
    rate(lr, "lr");
    rate(alpha_lr, "alpha_lr");
    rate(weight_decay, "weight_decay");
    if (!std::isfinite(tau_init) || !std::isfinite(alpha_init)) {
        throw validation_error("tau_init and alpha_init must be finite");
    }
    if (batch_size < 2) throw validation_error("batch_size must be >= 2");
    if (warmup_steps >= decay_steps) throw validation_error("warmup_steps must be < decay_steps");
    if (max_epochs < 1) throw validation_error("max_epochs must be >= 1");
    if (patience < 1) throw validation_error("patience must be >= 1");
}

AdapterSet AdapterSet::identity(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return {Matrix::Identity(d, d), Matrix::Identity(d, d), Matrix::Identity(d, d)};
}

AdapterSet AdapterSet::zeros(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return {Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
}

Params Params::initial(std::size_t dim, const TrainConfig& config) {
    return {AdapterSet::identity(dim), config.alpha_init, config.alpha_init, config.tau_init};
}

std::pair<double, double> effective_alphas(const Params& params, Strategy strategy) {
    switch (strategy) {
        case Strategy::mono: return {1.0, 0.0};
        case Strategy::cross: return {0.0, 1.0};
        case Strategy::joint: return {params.alpha_image, params.alpha_cross};
    }
    return {0.0, 0.0};
}

namespace {

struct Normalized {
    Matrix unit;            // rows x/|x|
    Eigen::VectorXd norms;  // |x|
};

Normalized adapt(const Matrix& rows, const Matrix& adapter) {
    Normalized n;
    n.unit = rows * adapter.transpose();
    n.norms = n.unit.rowwise().norm();
    for (Eigen::Index i = 0; i < n.unit.rows(); ++i) n.unit.row(i) /= n.norms(i);
    return n;
}

// d/dx of a loss through u = x/|x|, given d/du.
Matrix backprop_normalize(const Normalized& n, const Matrix& grad_unit) {
    const Eigen::VectorXd radial = (n.unit.array() * grad_unit.array()).rowwise().sum();
    Matrix out = grad_unit - n.unit.cwiseProduct(radial.replicate(1, n.unit.cols()));
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= n.norms(i);
    return out;
}

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

Mask collision_mask(const TripleBatch& batch, bool enabled, std::size_t* collisions) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    Mask mask = Mask::Constant(b, b, false);
    std::size_t count = 0;
    if (batch.entity_ids.size() == batch.size()) {
        for (Eigen::Index a = 0; a < b; ++a) {
            bool hit = false;
            for (Eigen::Index j = 0; j < b; ++j) {
                if (j != a && batch.entity_ids[static_cast<std::size_t>(a)] ==
                                  batch.entity_ids[static_cast<std::size_t>(j)]) {
                    hit = true;
                    mask(a, j) = enabled;
                }
            }
            count += hit ? 1 : 0;
        }
    }
    if (collisions) *collisions = count;
    return mask;
}

void check_batch(const TripleBatch& batch) {
    if (batch.size() < 2) throw validation_error("batch size must be >= 2");
    const auto d = batch.query_images.cols();
    if (batch.passage_images.rows() != batch.query_images.rows() ||
        batch.entity_names.rows() != batch.query_images.rows() || batch.passage_images.cols() != d ||
        batch.entity_names.cols() != d) {
        throw validation_error("triple batch matrices disagree in shape");
    }
}

struct Forward {
    Normalized u, v, w;
    Matrix cos_image, cos_cross, scores;
    bool use_image = false;
    bool use_cross = false;
};

Forward forward(const TripleBatch& batch, const Params& params, Strategy strategy) {
    check_batch(batch);
    const auto b = static_cast<Eigen::Index>(batch.size());
    const auto [alpha_image, alpha_cross] = effective_alphas(params, strategy);
    Forward f;
    f.use_image = strategy != Strategy::cross;
    f.use_cross = strategy != Strategy::mono;
    f.u = adapt(batch.query_images, params.adapters.query_image);
    f.scores = Matrix::Zero(b, b);
    if (f.use_image) {
        f.v = adapt(batch.passage_images, params.adapters.passage_image);
        f.cos_image = f.u.unit * f.v.unit.transpose();
        f.scores += alpha_image * f.cos_image;
    }
    if (f.use_cross) {
        f.w = adapt(batch.entity_names, params.adapters.entity_name);
        f.cos_cross = f.u.unit * f.w.unit.transpose();
        f.scores += alpha_cross * f.cos_cross;
    }
    return f;
}

}  // namespace

Matrix score_matrix(const TripleBatch& batch, const Params& params, Strategy strategy) {
    return forward(batch, params, strategy).scores;
}

LossResult batch_loss(const TripleBatch& batch, const Params& params, Strategy strategy,
                      bool mask_collisions) {
    const Forward f = forward(batch, params, strategy);
    const auto b = static_cast<Eigen::Index>(batch.size());
    const auto dim = static_cast<std::size_t>(batch.query_images.cols());
    const auto [alpha_image, alpha_cross] = effective_alphas(params, strategy);

    LossResult result;
    const Mask mask = collision_mask(batch, mask_collisions, &result.collisions);

    const double scale = std::exp(params.tau);
    const Matrix logits = scale * f.scores;
    Matrix probs = Matrix::Zero(b, b);
    double total = 0.0;
    for (Eigen::Index a = 0; a < b; ++a) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < b; ++j) {
            if (!mask(a, j)) row_max = std::max(row_max, logits(a, j));
        }
        double sum = 0.0;
        for (Eigen::Index j = 0; j < b; ++j) {
            if (mask(a, j)) continue;
            probs(a, j) = std::exp(logits(a, j) - row_max);
            sum += probs(a, j);
        }
        probs.row(a) /= sum;
        total += row_max + std::log(sum) - logits(a, a);
    }
    result.loss = total / static_cast<double>(b);
    if (!std::isfinite(result.loss)) throw numeric_error("non-finite contrastive loss");

    // d loss / d logits, then d loss / d scores.
    Matrix grad_logits = probs;
    grad_logits.diagonal().array() -= 1.0;
    grad_logits /= static_cast<double>(b);
    const Matrix grad_scores = scale * grad_logits;

    Gradients& g = result.grad;
    g.adapters = AdapterSet::zeros(dim);
    g.tau = (grad_logits.array() * logits.array()).sum();

    Matrix grad_u = Matrix::Zero(b, static_cast<Eigen::Index>(dim));
    if (f.use_image) {
        grad_u += alpha_image * grad_scores * f.v.unit;
        const Matrix grad_v = alpha_image * grad_scores.transpose() * f.u.unit;
        g.adapters.passage_image = backprop_normalize(f.v, grad_v).transpose() * batch.passage_images;
    }
    if (f.use_cross) {
        grad_u += alpha_cross * grad_scores * f.w.unit;
        const Matrix grad_w = alpha_cross * grad_scores.transpose() * f.u.unit;
        g.adapters.entity_name = backprop_normalize(f.w, grad_w).transpose() * batch.entity_names;
    }
    g.adapters.query_image = backprop_normalize(f.u, grad_u).transpose() * batch.query_images;

    if (strategy == Strategy::joint) {
        g.alpha_image = (grad_scores.array() * f.cos_image.array()).sum();
        g.alpha_cross = (grad_scores.array() * f.cos_cross.array()).sum();
    }
    return result;
}

double in_batch_mrr(const TripleBatch& batch, const Params& params, Strategy strategy,
                    bool mask_collisions) {
    const Matrix s = score_matrix(batch, params, strategy);
    const Mask mask = collision_mask(batch, mask_collisions, nullptr);
    const auto b = s.rows();
    double sum = 0.0;
    for (Eigen::Index a = 0; a < b; ++a) {
        std::size_t ahead = 0;
        for (Eigen::Index j = 0; j < b; ++j) {
            if (j != a && !mask(a, j) && s(a, j) >= s(a, a)) ++ahead;
        }
        sum += 1.0 / static_cast<double>(ahead + 1);
    }
    return sum / static_cast<double>(b);
}

// ---------------------------------------------------------------------------
// Data

namespace {

Matrix rows_as_double(const EmbeddingMatrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.dim()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = m.row(rows[r]);
        for (std::size_t c = 0; c < m.dim(); ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = src[c];
        }
    }
    return out;
}

Matrix gather(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

}  // namespace

TripleSet::TripleSet(const EmbeddingMatrix& query_images, const EmbeddingMatrix& passage_images,
                     const EmbeddingMatrix& entity_names,
                     const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (query_images.dim() != passage_images.dim() || query_images.dim() != entity_names.dim()) {
        throw validation_error("training matrices disagree in dim");
    }
    for (const auto* m : {&query_images, &passage_images, &entity_names}) {
        if (m->count() > 0 && !m->normalized()) {
            throw validation_error(std::string(to_string(m->role())) +
                                   " matrix must be L2-normalized for training");
        }
    }
    std::vector<std::size_t> qrows, erows_image, erows_name;
    for (const auto& [qid, eid] : pairs) {
        qrows.push_back(query_images.index_of(qid));
        erows_image.push_back(passage_images.index_of(eid));
        erows_name.push_back(entity_names.index_of(eid));
        entity_ids_.push_back(eid);
    }
    queries_ = rows_as_double(query_images, qrows);
    passage_images_ = rows_as_double(passage_images, erows_image);
    entity_names_ = rows_as_double(entity_names, erows_name);
}

TripleBatch TripleSet::batch(std::span<const std::size_t> rows) const {
    TripleBatch b{gather(queries_, rows), gather(passage_images_, rows), gather(entity_names_, rows), {}};
    b.entity_ids.reserve(rows.size());
    for (auto r : rows) b.entity_ids.push_back(entity_ids_[r]);
    return b;
}

TripleBatch TripleSet::all() const {
    return {queries_, passage_images_, entity_names_, entity_ids_};
}

double lr_multiplier(std::uint64_t step, std::size_t warmup, std::size_t decay) {
    if (step < warmup) return static_cast<double>(step + 1) / static_cast<double>(warmup);
    const double left = static_cast<double>(warmup + decay) - static_cast<double>(step);
    return std::max(0.0, left / static_cast<double>(decay));
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch_size) {
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        const std::size_t end = std::min(order.size(), i + batch_size);
        if (end - i == 1 && !batches.empty()) {
            batches.back().push_back(order[i]);
        } else {
            batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
        }
    }
    return batches;
}

double validation_mrr(const TripleSet& set, const Params& params, Strategy strategy,
                      std::size_t batch_size, bool mask_collisions) {
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double weighted = 0.0;
    std::size_t anchors = 0;
    for (const auto& rows : make_batches(order, batch_size)) {
        const auto batch = set.batch(rows);
        weighted += in_batch_mrr(batch, params, strategy, mask_collisions) * static_cast<double>(rows.size());
        anchors += rows.size();
    }
    return weighted / static_cast<double>(anchors);
}

// ---------------------------------------------------------------------------
// Optimization

namespace {

template <typename T>
void adamw_update(T& param, const T& grad, T& m, T& v, double lr, double weight_decay, double bc1,
                  double bc2) {
    if constexpr (std::is_same_v<T, double>) {
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad * grad;
        param -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEpsilon);
    } else {
        param *= 1.0 - lr * weight_decay;
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
        param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEpsilon);
    }
}

}  // namespace

void optimizer_step(TrainState& state, const Gradients& grad, const TrainConfig& config) {
    const double mult = lr_multiplier(state.step, config.warmup_steps, config.decay_steps);
    const double lr = config.lr * mult;
    const double alpha_lr = config.alpha_lr * mult;
    const double t = static_cast<double>(state.step + 1);
    const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
    const double bc2 = 1.0 - std::pow(kAdamBeta2, t);

    auto& p = state.params;
    auto& m = state.moments;
    const double wd = config.weight_decay;
    adamw_update(p.adapters.query_image, grad.adapters.query_image, m.first.query_image,
                 m.second.query_image, lr, wd, bc1, bc2);
    if (state.strategy != Strategy::cross) {
        adamw_update(p.adapters.passage_image, grad.adapters.passage_image, m.first.passage_image,
                     m.second.passage_image, lr, wd, bc1, bc2);
    }
    if (state.strategy != Strategy::mono) {
        adamw_update(p.adapters.entity_name, grad.adapters.entity_name, m.first.entity_name,
                     m.second.entity_name, lr, wd, bc1, bc2);
    }
    if (state.strategy == Strategy::joint) {
        adamw_update(p.alpha_image, grad.alpha_image, m.alpha_first[0], m.alpha_second[0], alpha_lr, 0.0,
                     bc1, bc2);
        adamw_update(p.alpha_cross, grad.alpha_cross, m.alpha_first[1], m.alpha_second[1], alpha_lr, 0.0,
                     bc1, bc2);
    }
    adamw_update(p.tau, grad.tau, m.tau_first, m.tau_second, lr, 0.0, bc1, bc2);
    ++state.step;
}

TrainState train(const TripleSet& train_set, const TripleSet& val_set, const TrainConfig& config,
                 TrainLog* log) {
    config.validate();
    if (train_set.size() < 2) throw validation_error("training set needs at least 2 triples");
    if (val_set.size() < 2) throw validation_error("validation set needs at least 2 triples");
    if (train_set.dim() != val_set.dim()) throw validation_error("train/val dims differ");

    const std::size_t dim = train_set.dim();
    TrainState state;
    state.strategy = config.strategy;
    state.params = Params::initial(dim, config);
    state.moments.first = AdapterSet::zeros(dim);
    state.moments.second = AdapterSet::zeros(dim);
    state.best = state.params;
    state.best_val_mrr =
        validation_mrr(val_set, state.params, config.strategy, config.batch_size, config.mask_collisions);

    TrainLog local;
    local.initial_val_mrr = state.best_val_mrr;

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t stale = 0;
    const std::uint64_t schedule_end = config.warmup_steps + config.decay_steps;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLog entry;
        entry.epoch = epoch;
        entry.lr = config.lr * lr_multiplier(state.step, config.warmup_steps, config.decay_steps);
        double loss_sum = 0.0;
        const auto batches = make_batches(order, config.batch_size);
        for (const auto& rows : batches) {
            LossResult r;
            try {
                r = batch_loss(train_set.batch(rows), state.params, config.strategy, config.mask_collisions);
            } catch (const Error& e) {
                if (e.category() == ErrorCategory::numeric && config.divergence_dump) {
                    write_checkpoint({config.strategy, state.params, state.step, state.epoch, 0.0},
                                     *config.divergence_dump);
                }
                throw numeric_error("training diverged at step " + std::to_string(state.step) + ": " +
                                    e.what());
            }
            loss_sum += r.loss;
            entry.collisions += r.collisions;
            optimizer_step(state, r.grad, config);
        }
        state.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(batches.size());
        entry.val_mrr =
            validation_mrr(val_set, state.params, config.strategy, config.batch_size, config.mask_collisions);
        if (entry.val_mrr > state.best_val_mrr) {
            entry.improved = true;
            state.best = state.params;
            state.best_val_mrr = entry.val_mrr;
            state.best_step = state.step;
            state.best_epoch = epoch;
            stale = 0;
        } else {
            ++stale;
        }
        local.epochs.push_back(entry);
        if (stale >= config.patience) {
            local.stop_reason = "patience";
            break;
        }
        if (state.step >= schedule_end) {
            local.stop_reason = "schedule";
            break;
        }
    }
    if (local.stop_reason.empty()) local.stop_reason = "max_epochs";
    if (log) *log = std::move(local);
    return state;
}

// ---------------------------------------------------------------------------
// Checkpoints and export

namespace {

constexpr char kCheckpointMagic[4] = {'X', 'C', 'K', '1'};
constexpr std::uint8_t kCheckpointVersion = 1;

void put_adapter(std::string& out, const Matrix& m, ChannelRole role) {
    out.append(kEmbeddingMagic, 4);
    detail::put_u8(out, static_cast<std::uint8_t>(role));
    detail::put_u8(out, static_cast<std::uint8_t>(DType::float64));
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_f64(out, m(r, c));
    }
}

Matrix take_adapter(detail::ByteReader& r, ChannelRole role, std::uint32_t dim, const std::string& ctx) {
    if (std::memcmp(r.take(4).data(), kEmbeddingMagic, 4) != 0) {
        throw format_error(ctx + ": adapter block magic mismatch");
    }
    if (r.u8() != static_cast<std::uint8_t>(role)) throw format_error(ctx + ": adapter block role mismatch");
    if (r.u8() != static_cast<std::uint8_t>(DType::float64)) throw format_error(ctx + ": adapter dtype must be float64");
    if (r.u32() != dim || r.u64() != dim) throw format_error(ctx + ": adapter block shape mismatch");
    Matrix m(dim, dim);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = r.f64();
            if (!std::isfinite(m(i, j))) throw format_error(ctx + ": non-finite adapter entry");
        }
    }
    return m;
}

}  // namespace

Checkpoint best_checkpoint(const TrainState& state) {
    return {state.strategy, state.best, state.best_step, state.best_epoch, state.best_val_mrr};
}

void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    const auto dim = ck.params.adapters.dim();
    std::string out;
    out.append(kCheckpointMagic, 4);
    detail::put_u8(out, kCheckpointVersion);
    detail::put_u8(out, static_cast<std::uint8_t>(ck.strategy));
    detail::put_u32(out, static_cast<std::uint32_t>(dim));
    detail::put_u64(out, ck.step);
    detail::put_u64(out, ck.epoch);
    detail::put_f64(out, ck.params.alpha_image);
    detail::put_f64(out, ck.params.alpha_cross);
    detail::put_f64(out, ck.params.tau);
    detail::put_f64(out, ck.val_mrr);
    put_adapter(out, ck.params.adapters.query_image, ChannelRole::query_image);
    put_adapter(out, ck.params.adapters.passage_image, ChannelRole::passage_image);
    put_adapter(out, ck.params.adapters.entity_name, ChannelRole::entity_name);
    detail::write_file(path, out);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    const std::string ctx = "'" + path.string() + "'";
    detail::ByteReader r(bytes, ctx);
    if (std::memcmp(r.take(4).data(), kCheckpointMagic, 4) != 0) {
        throw format_error(ctx + ": magic mismatch (expected XCK1)");
    }
    if (r.u8() != kCheckpointVersion) throw format_error(ctx + ": unsupported checkpoint version");
    const std::uint8_t strategy = r.u8();
    if (strategy > static_cast<std::uint8_t>(Strategy::joint)) throw format_error(ctx + ": bad strategy tag");
    const std::uint32_t dim = r.u32();
    if (dim == 0) throw format_error(ctx + ": dim is zero");
    Checkpoint ck;
    ck.strategy = static_cast<Strategy>(strategy);
    ck.step = r.u64();
    ck.epoch = r.u64();
    ck.params.alpha_image = r.f64();
    ck.params.alpha_cross = r.f64();
    ck.params.tau = r.f64();
    ck.val_mrr = r.f64();
    ck.params.adapters.query_image = take_adapter(r, ChannelRole::query_image, dim, ctx);
    ck.params.adapters.passage_image = take_adapter(r, ChannelRole::passage_image, dim, ctx);
    ck.params.adapters.entity_name = take_adapter(r, ChannelRole::entity_name, dim, ctx);
    if (r.remaining() != 0) throw format_error(ctx + ": trailing bytes after checkpoint");
    return ck;
}

EmbeddingMatrix apply_adapter(const Matrix& adapter, const EmbeddingMatrix& matrix) {
    if (static_cast<std::size_t>(adapter.rows()) != matrix.dim() ||
        static_cast<std::size_t>(adapter.cols()) != matrix.dim()) {
        throw validation_error("adapter is " + std::to_string(adapter.rows()) + "x" +
                               std::to_string(adapter.cols()) + " but embeddings have dim " +
                               std::to_string(matrix.dim()));
    }
    const std::size_t dim = matrix.dim();
    std::vector<float> out(matrix.count() * dim);
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < matrix.count(); ++i) {
        const auto src = matrix.row(i);
        for (std::size_t c = 0; c < dim; ++c) x(static_cast<Eigen::Index>(c)) = src[c];
        const Eigen::VectorXd y = adapter * x;
        for (std::size_t c = 0; c < dim; ++c) out[i * dim + c] = static_cast<float>(y(static_cast<Eigen::Index>(c)));
    }
    return l2_normalize(EmbeddingMatrix(matrix.role(), matrix.ids(), std::move(out), dim));
}

ExportedChannels export_channels(const Checkpoint& ck, const EmbeddingMatrix& query_images,
                                 const EmbeddingMatrix& passage_images,
                                 const EmbeddingMatrix& entity_names) {
    ExportedChannels out;
    out.query_images = apply_adapter(ck.params.adapters.query_image, query_images);
    out.passage_images = apply_adapter(ck.params.adapters.passage_image, passage_images);
    out.entity_names = apply_adapter(ck.params.adapters.entity_name, entity_names);
    std::tie(out.alpha_image, out.alpha_cross) = effective_alphas(ck.params, ck.strategy);
    return out;
}

}  // namespace xmr
