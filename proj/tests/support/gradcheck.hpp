// SPDX-License-Identifier: Apache-2.0
#pragma once

// Central finite-difference checks of the contrastive loss gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "xmr/train.hpp"

namespace xmr::gradcheck {

inline Matrix random_unit_rows(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = n(rng);
        m.row(r).normalize();
    }
    return m;
}

inline TripleBatch random_batch(std::mt19937_64& rng, std::size_t b, std::size_t dim) {
    return {random_unit_rows(rng, b, dim), random_unit_rows(rng, b, dim), random_unit_rows(rng, b, dim), {}};
}

/// Identity-plus-noise adapters, alphas in (0.2, 1.2), tau in [0, 3].
inline Params random_params(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 0.3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Params p;
    p.adapters = AdapterSet::identity(dim);
    for (Matrix* m : {&p.adapters.query_image, &p.adapters.passage_image, &p.adapters.entity_name}) {
        for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] += n(rng);
    }
    p.alpha_image = 0.2 + u(rng);
    p.alpha_cross = 0.2 + u(rng);
    p.tau = 3.0 * u(rng);
    return p;
}

struct Report {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    bool masked_exactly_zero = true;
};

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Compares every gradient entry against (L(x+h) - L(x-h)) / 2h.
inline Report check(const TripleBatch& batch, Params p, Strategy strategy, double h = 1e-5,
                    bool mask_collisions = false) {
    const auto analytic = batch_loss(batch, p, strategy, mask_collisions).grad;
    Report rep;
    auto probe = [&](double& slot, double want) {
        const double saved = slot;
        slot = saved + h;
        const double up = batch_loss(batch, p, strategy, mask_collisions).loss;
        slot = saved - h;
        const double down = batch_loss(batch, p, strategy, mask_collisions).loss;
        slot = saved;
        rep.max_rel_error = std::max(rep.max_rel_error, relative_error(want, (up - down) / (2 * h)));
        ++rep.checked;
    };
    const bool image = strategy != Strategy::cross;
    const bool cross = strategy != Strategy::mono;
    auto sweep = [&](Matrix& param, const Matrix& grad, bool active) {
        for (Eigen::Index i = 0; i < param.size(); ++i) {
            if (active) {
                probe(param.data()[i], grad.data()[i]);
            } else if (grad.data()[i] != 0.0) {
                rep.masked_exactly_zero = false;
            }
        }
    };
    sweep(p.adapters.query_image, analytic.adapters.query_image, true);
    sweep(p.adapters.passage_image, analytic.adapters.passage_image, image);
    sweep(p.adapters.entity_name, analytic.adapters.entity_name, cross);
    if (strategy == Strategy::joint) {
        probe(p.alpha_image, analytic.alpha_image);
        probe(p.alpha_cross, analytic.alpha_cross);
    } else if (analytic.alpha_image != 0.0 || analytic.alpha_cross != 0.0) {
        rep.masked_exactly_zero = false;
    }
    probe(p.tau, analytic.tau);
    return rep;
}

}  // namespace xmr::gradcheck
