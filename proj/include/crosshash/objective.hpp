// objective.hpp — loss terms and their analytic gradients at the hash layer.
//
// The training objective over one batch is
//     C = L + lambda * Q + mu * (Dq + Dd)
// where L is the pairwise logistic loss over supervised cross-modal pairs,
// Q the pairwise quantization penalty pushing activations toward +-1, and
// Dq/Dd the squared kernel mean discrepancies aligning each modality's
// auxiliary activations with its target-domain activations.
//
// residuals() returns dC/d(z-tilde) at the final pre-activation of all four
// activation blocks; the network header turns those into parameter gradients.
// Every formula here is checked against central finite differences in the
// test suite, so any edit that changes a derivative will be caught.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "crosshash/matrix.hpp"
#include "crosshash/types.hpp"

namespace crosshash {

// Activations of one batch: auxiliary rows of both modalities, target-domain
// rows of both modalities, and the supervised pair labels over (zx, zy) rows.
struct BatchActivations {
    Matrix zx;  // auxiliary, modality X
    Matrix zy;  // auxiliary, modality Y
    Matrix zq;  // target domain, query modality (X tower)
    Matrix zd;  // target domain, database modality (Y tower)
    std::vector<IndexPair> pairs;  // i -> zx row, j -> zy row

    void validate() const {
        if (!zx.empty() && !zy.empty() && zx.cols != zy.cols)
            throw std::invalid_argument("BatchActivations: zx has " + std::to_string(zx.cols) +
                                        " bits, zy has " + std::to_string(zy.cols));
        if (!zq.empty() && zq.cols != zx.cols)
            throw std::invalid_argument("BatchActivations: zq bit width mismatch");
        if (!zd.empty() && zd.cols != zy.cols)
            throw std::invalid_argument("BatchActivations: zd bit width mismatch");
        for (const IndexPair& p : pairs) {
            if (p.i >= zx.rows || p.j >= zy.rows)
                throw std::invalid_argument("BatchActivations: pair (" + std::to_string(p.i) +
                                            "," + std::to_string(p.j) + ") out of range " +
                                            std::to_string(zx.rows) + "x" + std::to_string(zy.rows));
            if (p.label != 0 && p.label != 1)
                throw std::invalid_argument("BatchActivations: pair label must be 0 or 1");
        }
    }
};

struct LossReport {
    double relationship = 0.0;   // L (or its inner-product surrogate under the IP ablation)
    double quantization = 0.0;   // Q
    double mmd_query = 0.0;      // Dq
    double mmd_database = 0.0;   // Dd
    double total = 0.0;          // C with the effective trade-off weights
};

// Ablations act by rewriting the trade-off weights, never the raw components.
struct EffectiveWeights {
    double lambda = 0.0;
    double mu = 0.0;
    bool inner_product = false;
};

inline EffectiveWeights effective_weights(const TrainConfig& cfg) {
    EffectiveWeights w;
    w.lambda = cfg.ablation == Ablation::NoQuant ? 0.0 : cfg.lambda;
    w.mu = cfg.ablation == Ablation::NoMMD ? 0.0 : cfg.mu;
    w.inner_product = cfg.ablation == Ablation::IP;
    return w;
}

// tanh activations can cross zero during training; -log|z| and 1/z are tamed
// by clamping |z| to this floor, sign preserved (exact zero clamps positive).
inline constexpr double kQuantClamp = 1e-6;

inline double clamp_from_zero(double z) {
    if (z >= 0.0) return std::max(z, kQuantClamp);
    return std::min(z, -kQuantClamp);
}

inline double relationship_loss(const BatchActivations& batch) {
    if (batch.pairs.empty())
        throw std::invalid_argument("relationship_loss: batch has no labeled pairs");
    double total = 0.0;
    for (const IndexPair& p : batch.pairs) {
        const double a = dot(batch.zx.row(p.i), batch.zy.row(p.j));
        total += softplus(a) - static_cast<double>(p.label) * a;
    }
    return total;
}

inline double quantization_loss(const BatchActivations& batch) {
    if (batch.pairs.empty())
        throw std::invalid_argument("quantization_loss: batch has no labeled pairs");
    const std::size_t b = batch.zx.cols;
    std::vector<double> row_x(batch.zx.rows, 0.0), row_y(batch.zy.rows, 0.0);
    for (std::size_t i = 0; i < batch.zx.rows; ++i)
        for (std::size_t k = 0; k < b; ++k)
            row_x[i] -= std::log(std::abs(clamp_from_zero(batch.zx(i, k))));
    for (std::size_t j = 0; j < batch.zy.rows; ++j)
        for (std::size_t k = 0; k < b; ++k)
            row_y[j] -= std::log(std::abs(clamp_from_zero(batch.zy(j, k))));
    double total = 0.0;
    for (const IndexPair& p : batch.pairs) total += row_x[p.i] + row_y[p.j];
    return total;
}

// Squared-error surrogate on the bit-normalized inner product, against the
// +-1 target encoded by the pair label.
inline double ip_loss(const BatchActivations& batch, std::size_t bits) {
    if (batch.pairs.empty())
        throw std::invalid_argument("ip_loss: batch has no labeled pairs");
    const double b = static_cast<double>(bits);
    double total = 0.0;
    for (const IndexPair& p : batch.pairs) {
        const double a = dot(batch.zx.row(p.i), batch.zy.row(p.j));
        const double gap = a / b - (2.0 * p.label - 1.0);
        total += gap * gap;
    }
    return total;
}

inline Matrix kernel_matrix(const Matrix& a, const Matrix& b, double gamma) {
    Matrix k(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j)
            k(i, j) = gaussian_kernel(a.row(i), b.row(j), gamma);
    return k;
}

namespace detail {
// Canonical argument order so mmd(A, B) runs the identical float operations
// as mmd(B, A).
inline bool mmd_ordered(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) return a.rows < b.rows;
    return !std::lexicographical_compare(b.data.begin(), b.data.end(), a.data.begin(),
                                         a.data.end());
}
}  // namespace detail

// Biased (V-statistic) squared maximum mean discrepancy with a Gaussian
// kernel; diagonal i == j terms included.
inline double mmd(const Matrix& sample_a, const Matrix& sample_b, double gamma) {
    if (sample_a.rows == 0 || sample_b.rows == 0)
        throw std::invalid_argument("mmd: samples must be non-empty");
    if (sample_a.cols != sample_b.cols)
        throw std::invalid_argument("mmd: column mismatch " + shape_string(sample_a) + " vs " +
                                    shape_string(sample_b));
    if (!detail::mmd_ordered(sample_a, sample_b)) return mmd(sample_b, sample_a, gamma);

    auto block_sum = [gamma](const Matrix& u, const Matrix& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < u.rows; ++i)
            for (std::size_t j = 0; j < v.rows; ++j)
                s += gaussian_kernel(u.row(i), v.row(j), gamma);
        return s;
    };
    const double na = static_cast<double>(sample_a.rows);
    const double nb = static_cast<double>(sample_b.rows);
    const double v = block_sum(sample_a, sample_a) / (na * na) +
                     block_sum(sample_b, sample_b) / (nb * nb) -
                     2.0 * block_sum(sample_a, sample_b) / (na * nb);
    return std::max(0.0, v);  // exact value is a squared RKHS norm
}

// 1 / median of squared pairwise distances over the union of the given rows.
// Falls back to 1.0 when the batch is degenerate (fewer than two rows, or a
// zero median from duplicated rows).
inline double median_heuristic_gamma(std::initializer_list<const Matrix*> blocks) {
    std::vector<std::span<const double>> rows;
    for (const Matrix* m : blocks)
        for (std::size_t i = 0; i < m->rows; ++i) rows.push_back(m->row(i));
    if (rows.size() < 2) return 1.0;
    std::vector<double> dists;
    dists.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
            dists.push_back(squared_distance(rows[i], rows[j]));
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    const double med = dists[mid];
    if (med < 1e-12) return 1.0;
    return 1.0 / med;
}

// The bandwidth is frozen per batch before any gradient computation; it is a
// constant of the objective, never differentiated.
inline double resolve_gamma(const BatchActivations& batch, const TrainConfig& cfg) {
    if (!cfg.gamma.median) return cfg.gamma.value;
    return median_heuristic_gamma({&batch.zx, &batch.zy, &batch.zq, &batch.zd});
}

inline LossReport total_objective(const BatchActivations& batch, const TrainConfig& cfg,
                                  double gamma) {
    batch.validate();
    const EffectiveWeights w = effective_weights(cfg);
    LossReport r;
    r.relationship = w.inner_product ? ip_loss(batch, cfg.bits) : relationship_loss(batch);
    r.quantization = quantization_loss(batch);
    if (batch.zq.rows > 0 && batch.zx.rows > 0) r.mmd_query = mmd(batch.zq, batch.zx, gamma);
    if (batch.zd.rows > 0 && batch.zy.rows > 0) r.mmd_database = mmd(batch.zd, batch.zy, gamma);
    r.total = r.relationship + w.lambda * r.quantization + w.mu * (r.mmd_query + r.mmd_database);
    return r;
}

inline LossReport total_objective(const BatchActivations& batch, const TrainConfig& cfg) {
    return total_objective(batch, cfg, resolve_gamma(batch, cfg));
}

// Pre-activation (and residual) blocks mirroring BatchActivations.
struct BlockSet {
    Matrix zx, zy, zq, zd;
};

namespace detail {

// Adds mu * d(MMD(tgt_block, aux_block))/dz to both residual blocks.
// K_at = kernel(aux, tgt); within-block kernels are computed here.
inline void add_mmd_residual(Matrix& res_aux, Matrix& res_tgt, const Matrix& aux,
                             const Matrix& tgt, double mu, double gamma) {
    if (aux.rows == 0 || tgt.rows == 0 || mu == 0.0) return;
    const double n_aux = static_cast<double>(aux.rows);
    const double n_tgt = static_cast<double>(tgt.rows);
    const Matrix k_aa = kernel_matrix(aux, aux, gamma);
    const Matrix k_tt = kernel_matrix(tgt, tgt, gamma);
    const Matrix k_at = kernel_matrix(aux, tgt, gamma);

    // Within-block contribution: -4*mu*gamma/n^2 * sum_j K_ij (z_i - z_j).
    auto add_within = [mu, gamma](Matrix& res, const Matrix& z, const Matrix& k, double n) {
        const Matrix kz = matmul(k, z);
        const double coeff = -4.0 * mu * gamma / (n * n);
        for (std::size_t i = 0; i < z.rows; ++i) {
            double rsum = 0.0;
            for (std::size_t j = 0; j < k.cols; ++j) rsum += k(i, j);
            for (std::size_t c = 0; c < z.cols; ++c)
                res(i, c) += coeff * (rsum * z(i, c) - kz(i, c));
        }
    };
    add_within(res_aux, aux, k_aa, n_aux);
    add_within(res_tgt, tgt, k_tt, n_tgt);

    // Cross contribution: +4*mu*gamma/(n_aux*n_tgt) * sum_j K_ij (z_i - z'_j).
    const double coeff = 4.0 * mu * gamma / (n_aux * n_tgt);
    const Matrix k_tgt_side = matmul(k_at, tgt);       // per aux row: sum_j K_ij tgt_j
    const Matrix k_aux_side = matmul_at(k_at, aux);    // per tgt row: sum_i K_ij aux_i
    for (std::size_t i = 0; i < aux.rows; ++i) {
        double rsum = 0.0;
        for (std::size_t j = 0; j < k_at.cols; ++j) rsum += k_at(i, j);
        for (std::size_t c = 0; c < aux.cols; ++c)
            res_aux(i, c) += coeff * (rsum * aux(i, c) - k_tgt_side(i, c));
    }
    for (std::size_t j = 0; j < tgt.rows; ++j) {
        double csum = 0.0;
        for (std::size_t i = 0; i < k_at.rows; ++i) csum += k_at(i, j);
        for (std::size_t c = 0; c < tgt.cols; ++c)
            res_tgt(j, c) += coeff * (csum * tgt(j, c) - k_aux_side(j, c));
    }
}

inline void apply_tanh_slope(Matrix& res, const Matrix& pre) {
    for (std::size_t i = 0; i < res.data.size(); ++i) {
        const double t = std::tanh(pre.data[i]);
        res.data[i] *= 1.0 - t * t;
    }
}

}  // namespace detail

// dC/d(z-tilde) for every row of every block. `pre` holds the final-layer
// pre-activations aligned with the batch blocks; `gamma` must be the same
// frozen bandwidth used for the loss.
inline BlockSet residuals(const BatchActivations& batch, const TrainConfig& cfg,
                          const BlockSet& pre, double gamma) {
    batch.validate();
    auto check_shape = [](const Matrix& z, const Matrix& p, const char* name) {
        if (z.rows != p.rows || z.cols != p.cols)
            throw std::invalid_argument(std::string("residuals: pre-activation block ") + name +
                                        " is " + shape_string(p) + ", activations are " +
                                        shape_string(z));
    };
    check_shape(batch.zx, pre.zx, "zx");
    check_shape(batch.zy, pre.zy, "zy");
    check_shape(batch.zq, pre.zq, "zq");
    check_shape(batch.zd, pre.zd, "zd");

    const EffectiveWeights w = effective_weights(cfg);
    BlockSet res;
    res.zx = Matrix(batch.zx.rows, batch.zx.cols);
    res.zy = Matrix(batch.zy.rows, batch.zy.cols);
    res.zq = Matrix(batch.zq.rows, batch.zq.cols);
    res.zd = Matrix(batch.zd.rows, batch.zd.cols);

    // Relationship term, and the per-row pair counts the quantization term needs.
    std::vector<std::size_t> pair_count_x(batch.zx.rows, 0), pair_count_y(batch.zy.rows, 0);
    const double bits = static_cast<double>(cfg.bits);
    for (const IndexPair& p : batch.pairs) {
        const double a = dot(batch.zx.row(p.i), batch.zy.row(p.j));
        const double g = w.inner_product
                             ? 2.0 * (a / bits - (2.0 * p.label - 1.0)) / bits
                             : sigmoid(a) - static_cast<double>(p.label);
        for (std::size_t c = 0; c < batch.zx.cols; ++c) {
            res.zx(p.i, c) += g * batch.zy(p.j, c);
            res.zy(p.j, c) += g * batch.zx(p.i, c);
        }
        ++pair_count_x[p.i];
        ++pair_count_y[p.j];
    }

    if (w.lambda > 0.0) {
        for (std::size_t i = 0; i < batch.zx.rows; ++i)
            for (std::size_t c = 0; c < batch.zx.cols; ++c)
                res.zx(i, c) -= w.lambda * static_cast<double>(pair_count_x[i]) /
                                clamp_from_zero(batch.zx(i, c));
        for (std::size_t j = 0; j < batch.zy.rows; ++j)
            for (std::size_t c = 0; c < batch.zy.cols; ++c)
                res.zy(j, c) -= w.lambda * static_cast<double>(pair_count_y[j]) /
                                clamp_from_zero(batch.zy(j, c));
    }

    detail::add_mmd_residual(res.zx, res.zq, batch.zx, batch.zq, w.mu, gamma);
    detail::add_mmd_residual(res.zy, res.zd, batch.zy, batch.zd, w.mu, gamma);

    detail::apply_tanh_slope(res.zx, pre.zx);
    detail::apply_tanh_slope(res.zy, pre.zy);
    detail::apply_tanh_slope(res.zq, pre.zq);
    detail::apply_tanh_slope(res.zd, pre.zd);
    return res;
}

// Per-item cost decomposition. Each batch item carries its own slice of the
// objective, with every shared term attributed to exactly one item (pair
// losses go to the modality-X endpoint; each cross-kernel sum is split
// between its two blocks). The slices sum to total_objective(...).total.
struct PointwiseCosts {
    std::vector<double> aux_x, aux_y, query, database;
};

inline PointwiseCosts pointwise_costs(const BatchActivations& batch, const TrainConfig& cfg,
                                      double gamma) {
    batch.validate();
    const EffectiveWeights w = effective_weights(cfg);
    PointwiseCosts out;
    out.aux_x.assign(batch.zx.rows, 0.0);
    out.aux_y.assign(batch.zy.rows, 0.0);
    out.query.assign(batch.zq.rows, 0.0);
    out.database.assign(batch.zd.rows, 0.0);

    const double bits = static_cast<double>(cfg.bits);
    for (const IndexPair& p : batch.pairs) {
        const double a = dot(batch.zx.row(p.i), batch.zy.row(p.j));
        if (w.inner_product) {
            const double gap = a / bits - (2.0 * p.label - 1.0);
            out.aux_x[p.i] += gap * gap;
        } else {
            out.aux_x[p.i] += softplus(a) - static_cast<double>(p.label) * a;
        }
        for (std::size_t c = 0; c < batch.zx.cols; ++c)
            out.aux_x[p.i] -= w.lambda * std::log(std::abs(clamp_from_zero(batch.zx(p.i, c))));
        for (std::size_t c = 0; c < batch.zy.cols; ++c)
            out.aux_y[p.j] -= w.lambda * std::log(std::abs(clamp_from_zero(batch.zy(p.j, c))));
    }

    auto add_mmd_slices = [&w, gamma](std::vector<double>& aux_cost,
                                      std::vector<double>& tgt_cost, const Matrix& aux,
                                      const Matrix& tgt) {
        if (aux.rows == 0 || tgt.rows == 0) return;
        const double n_aux = static_cast<double>(aux.rows);
        const double n_tgt = static_cast<double>(tgt.rows);
        for (std::size_t i = 0; i < aux.rows; ++i) {
            for (std::size_t j = 0; j < aux.rows; ++j)
                aux_cost[i] += w.mu * gaussian_kernel(aux.row(i), aux.row(j), gamma) /
                               (n_aux * n_aux);
            for (std::size_t j = 0; j < tgt.rows; ++j)
                aux_cost[i] -= w.mu * gaussian_kernel(aux.row(i), tgt.row(j), gamma) /
                               (n_aux * n_tgt);
        }
        for (std::size_t i = 0; i < tgt.rows; ++i) {
            for (std::size_t j = 0; j < tgt.rows; ++j)
                tgt_cost[i] += w.mu * gaussian_kernel(tgt.row(i), tgt.row(j), gamma) /
                               (n_tgt * n_tgt);
            for (std::size_t j = 0; j < aux.rows; ++j)
                tgt_cost[i] -= w.mu * gaussian_kernel(tgt.row(i), aux.row(j), gamma) /
                               (n_aux * n_tgt);
        }
    };
    add_mmd_slices(out.aux_x, out.query, batch.zx, batch.zq);
    add_mmd_slices(out.aux_y, out.database, batch.zy, batch.zd);
    return out;
}

}  // namespace crosshash
