// training.hpp — mini-batch construction and the joint two-tower training
// loop. One epoch is |S|/B iterations (minimum 1) of: sample batch, forward
// all four blocks, residuals, backward, momentum step on both towers.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crosshash/errors.hpp"
#include "crosshash/io_util.hpp"
#include "crosshash/network.hpp"
#include "crosshash/objective.hpp"
#include "crosshash/rng.hpp"
#include "crosshash/types.hpp"

namespace crosshash {

struct Batch {
    std::vector<std::size_t> x_indices;  // pool rows of the auxiliary X items
    std::vector<std::size_t> y_indices;  // pool rows of the auxiliary Y items
    Matrix x_rows, y_rows;               // auxiliary features per modality
    Matrix q_rows, d_rows;               // target-domain features per modality
    std::vector<IndexPair> pairs;        // all x-by-y crosses, label by intersection
};

// Similar pairs are oversampled until they reach this share of the batch's
// labeled pairs, pool permitting.
inline constexpr double kMinSimilarShare = 0.25;

namespace detail {

// category -> auxiliary item indices, per modality
struct CategoryIndex {
    std::map<std::int32_t, std::vector<std::size_t>> x, y;

    static CategoryIndex build(const TrainingSets& sets) {
        CategoryIndex idx;
        for (std::size_t i = 0; i < sets.aux_x_count; ++i)
            for (std::int32_t c : sets.x_pool.labels[i]) idx.x[c].push_back(i);
        for (std::size_t j = 0; j < sets.aux_y_count; ++j)
            for (std::int32_t c : sets.y_pool.labels[j]) idx.y[c].push_back(j);
        return idx;
    }

    // Categories with at least one item on each side: only these can seed
    // similar pairs.
    std::vector<std::int32_t> shared() const {
        std::vector<std::int32_t> out;
        for (const auto& [cat, items] : x) {
            auto it = y.find(cat);
            if (it != y.end() && !items.empty() && !it->second.empty()) out.push_back(cat);
        }
        return out;
    }
};

inline Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), src.cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy(src.row(rows[r]).begin(), src.row(rows[r]).end(), out.row(r).begin());
    return out;
}

inline double similar_share(const std::vector<IndexPair>& pairs) {
    if (pairs.empty()) return 0.0;
    std::size_t sim = 0;
    for (const IndexPair& p : pairs) sim += p.label;
    return static_cast<double>(sim) / static_cast<double>(pairs.size());
}

}  // namespace detail

inline Batch sample_batch(const TrainingSets& sets, const TrainConfig& cfg, Rng& rng,
                          const detail::CategoryIndex& index) {
    if (sets.aux_x_count == 0 || sets.aux_y_count == 0)
        throw std::invalid_argument("sample_batch: auxiliary pools are empty");
    const std::size_t half = cfg.batch_size / 2;

    Batch batch;
    batch.x_indices.resize(half);
    batch.y_indices.resize(half);
    for (std::size_t t = 0; t < half; ++t) batch.x_indices[t] = rng.index(sets.aux_x_count);
    for (std::size_t t = 0; t < half; ++t) batch.y_indices[t] = rng.index(sets.aux_y_count);

    auto label_of = [&sets](std::size_t xi, std::size_t yj) {
        return labels_intersect(sets.x_pool.labels[xi], sets.y_pool.labels[yj]) ? 1 : 0;
    };
    auto relabel = [&] {
        batch.pairs.clear();
        for (std::size_t a = 0; a < half; ++a)
            for (std::size_t b = 0; b < half; ++b)
                batch.pairs.push_back(
                    {a, b, label_of(batch.x_indices[a], batch.y_indices[b])});
    };
    relabel();

    // Oversample one shared category into the leading slots of both sides; a
    // q-by-q block of guaranteed-similar crosses lifts the share to >= 25%.
    const std::vector<std::int32_t> shared = index.shared();
    if (detail::similar_share(batch.pairs) < kMinSimilarShare && !shared.empty()) {
        const std::int32_t cat = shared[rng.index(shared.size())];
        const auto& cx = index.x.at(cat);
        const auto& cy = index.y.at(cat);
        const std::size_t block = (half + 1) / 2;
        for (std::size_t t = 0; t < block; ++t) batch.x_indices[t] = cx[rng.index(cx.size())];
        for (std::size_t t = 0; t < block; ++t) batch.y_indices[t] = cy[rng.index(cy.size())];
        relabel();
    }

    // Keep at least one dissimilar pair in play when the relation set has one.
    bool has_dissimilar = false;
    for (const IndexPair& p : batch.pairs) has_dissimilar |= p.label == 0;
    if (!has_dissimilar) {
        for (std::size_t attempt = 0; attempt < sets.relations.size(); ++attempt) {
            const IndexPair& cand = sets.relations.pairs[rng.index(sets.relations.size())];
            if (cand.label == 0) {
                batch.x_indices[half - 1] = cand.i;
                batch.y_indices[half - 1] = cand.j;
                relabel();
                break;
            }
        }
    }

    batch.x_rows = detail::gather_rows(sets.x_pool.features, batch.x_indices);
    batch.y_rows = detail::gather_rows(sets.y_pool.features, batch.y_indices);

    auto sample_target = [&rng, half](const FeatureDataset& pool, std::size_t aux_count) {
        const std::size_t available = pool.size() - aux_count;
        const std::size_t take = std::min(half, available);
        std::vector<std::size_t> rows(take);
        if (take == available) {
            for (std::size_t t = 0; t < take; ++t) rows[t] = aux_count + t;
        } else {
            auto picks = rng.sample_without_replacement(available, take);
            for (std::size_t t = 0; t < take; ++t) rows[t] = aux_count + picks[t];
        }
        Matrix out(take, pool.dim());
        for (std::size_t t = 0; t < take; ++t)
            std::copy(pool.features.row(rows[t]).begin(), pool.features.row(rows[t]).end(),
                      out.row(t).begin());
        return out;
    };
    batch.q_rows = sample_target(sets.x_pool, sets.aux_x_count);
    batch.d_rows = sample_target(sets.y_pool, sets.aux_y_count);
    return batch;
}

inline Batch sample_batch(const TrainingSets& sets, const TrainConfig& cfg, Rng& rng) {
    return sample_batch(sets, cfg, rng, detail::CategoryIndex::build(sets));
}

struct EpochRecord {
    LossReport mean_loss;  // averaged over the epoch's iterations
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    TrainConfig config;
};

struct TrainResult {
    Tower tower_x;
    Tower tower_y;
    TrainLog log;
};

// Objective values past this point abort training as diverged.
inline constexpr double kDivergenceCeiling = 1e12;

inline TrainResult train(const TrainingSets& sets, const TrainConfig& cfg) {
    cfg.validate();
    if (sets.relations.empty())
        throw std::invalid_argument("train: relation set is empty");
    if (sets.aux_x_count == 0 || sets.aux_y_count == 0)
        throw std::invalid_argument("train: auxiliary pools are empty");

    std::vector<std::size_t> sizes_x = {sets.x_pool.dim()};
    sizes_x.insert(sizes_x.end(), cfg.hidden_sizes_x.begin(), cfg.hidden_sizes_x.end());
    sizes_x.push_back(cfg.bits);
    std::vector<std::size_t> sizes_y = {sets.y_pool.dim()};
    sizes_y.insert(sizes_y.end(), cfg.hidden_sizes_y.begin(), cfg.hidden_sizes_y.end());
    sizes_y.push_back(cfg.bits);

    TrainResult result;
    result.tower_x = init_tower(sizes_x, derive_seed(cfg.seed, "init-x"));
    result.tower_y = init_tower(sizes_y, derive_seed(cfg.seed, "init-y"));
    result.log.config = cfg;

    OptimizerState opt_x = OptimizerState::for_tower(result.tower_x, cfg.learning_rate,
                                                     cfg.momentum, cfg.hash_layer_lr_scale);
    OptimizerState opt_y = OptimizerState::for_tower(result.tower_y, cfg.learning_rate,
                                                     cfg.momentum, cfg.hash_layer_lr_scale);

    Rng rng(cfg.seed, "batch-sample");
    const detail::CategoryIndex index = detail::CategoryIndex::build(sets);
    const std::size_t iters_per_epoch =
        std::max<std::size_t>(1, sets.relations.size() / cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        LossReport mean;
        for (std::size_t iter = 0; iter < iters_per_epoch; ++iter) {
            Batch batch = sample_batch(sets, cfg, rng, index);

            ForwardTrace tx = forward(result.tower_x, batch.x_rows);
            ForwardTrace tq = forward(result.tower_x, batch.q_rows);
            ForwardTrace ty = forward(result.tower_y, batch.y_rows);
            ForwardTrace td = forward(result.tower_y, batch.d_rows);

            BatchActivations acts;
            acts.zx = tx.activations();
            acts.zy = ty.activations();
            acts.zq = tq.activations();
            acts.zd = td.activations();
            acts.pairs = batch.pairs;

            const double gamma = resolve_gamma(acts, cfg);
            const LossReport report = total_objective(acts, cfg, gamma);
            if (!std::isfinite(report.total) || report.total > kDivergenceCeiling)
                throw DivergenceError("train: objective diverged (C=" +
                                      format_double(report.total) + ") at epoch " +
                                      std::to_string(epoch) + ", iteration " +
                                      std::to_string(iter));

            BlockSet pre{tx.pre_activations(), ty.pre_activations(), tq.pre_activations(),
                         td.pre_activations()};
            const BlockSet res = residuals(acts, cfg, pre, gamma);

            Gradients gx = backward(result.tower_x, tx, res.zx);
            accumulate(gx, backward(result.tower_x, tq, res.zq));
            Gradients gy = backward(result.tower_y, ty, res.zy);
            accumulate(gy, backward(result.tower_y, td, res.zd));

            sgd_step(result.tower_x, gx, opt_x);
            sgd_step(result.tower_y, gy, opt_y);

            mean.relationship += report.relationship;
            mean.quantization += report.quantization;
            mean.mmd_query += report.mmd_query;
            mean.mmd_database += report.mmd_database;
            mean.total += report.total;
        }
        const double n = static_cast<double>(iters_per_epoch);
        mean.relationship /= n;
        mean.quantization /= n;
        mean.mmd_query /= n;
        mean.mmd_database /= n;
        mean.total /= n;
        const auto epoch_end = std::chrono::steady_clock::now();
        result.log.epochs.push_back(
            {mean, std::chrono::duration<double>(epoch_end - epoch_start).count()});
    }
    return result;
}

inline void save_train_log(const TrainLog& log, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "epoch relationship quantization mmd_query mmd_database total seconds\n";
    for (std::size_t e = 0; e < log.epochs.size(); ++e) {
        const EpochRecord& r = log.epochs[e];
        out << e << " " << format_double(r.mean_loss.relationship) << " "
            << format_double(r.mean_loss.quantization) << " "
            << format_double(r.mean_loss.mmd_query) << " "
            << format_double(r.mean_loss.mmd_database) << " "
            << format_double(r.mean_loss.total) << " " << format_double(r.seconds) << "\n";
    }
    finish_output(out, path);
}

// Candidate rates 1e-5 .. 1e-1 with multiplicative step 10^(1/2).
inline std::vector<double> default_lr_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 8; ++k) grid.push_back(std::pow(10.0, -5.0 + 0.5 * k));
    return grid;
}

struct LrCandidate {
    double rate = 0.0;
    double score = 0.0;
    bool diverged = false;
    std::string error;
};

struct LrSearchResult {
    double best_rate = 0.0;
    std::vector<LrCandidate> candidates;
};

// Trains one model per candidate rate on a reduced epoch budget and scores it
// with the supplied holdout closure (higher is better). Ties break toward the
// smaller rate.
inline LrSearchResult grid_search_lr(
    const TrainingSets& sets, const TrainConfig& base,
    const std::function<double(const Tower&, const Tower&)>& holdout,
    std::vector<double> grid = default_lr_grid(), std::size_t search_epochs = 5) {
    if (grid.empty()) throw std::invalid_argument("grid_search_lr: candidate grid is empty");
    std::sort(grid.begin(), grid.end());

    LrSearchResult result;
    bool any_ok = false;
    double best_score = 0.0;
    for (double rate : grid) {
        TrainConfig cfg = base;
        cfg.learning_rate = rate;
        cfg.epochs = search_epochs;
        LrCandidate cand;
        cand.rate = rate;
        try {
            const TrainResult trained = train(sets, cfg);
            cand.score = holdout(trained.tower_x, trained.tower_y);
            if (!any_ok || cand.score > best_score) {
                any_ok = true;
                best_score = cand.score;
                result.best_rate = rate;
            }
        } catch (const DivergenceError& e) {
            cand.diverged = true;
            cand.error = e.what();
        }
        result.candidates.push_back(cand);
    }
    if (!any_ok) {
        std::string msg = "grid_search_lr: every candidate diverged:";
        for (const LrCandidate& c : result.candidates)
            msg += "\n  rate " + format_double(c.rate) + ": " + c.error;
        throw DivergenceError(msg);
    }
    return result;
}

}  // namespace crosshash
