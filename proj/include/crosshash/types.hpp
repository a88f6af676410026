// types.hpp — the data model: feature datasets, supervised cross-modal pairs,
// training pools, packed hash codes, and the training configuration.
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "crosshash/matrix.hpp"
#include "crosshash/rng.hpp"

namespace crosshash {

enum class Modality { X, Y };
enum class Domain { Auxiliary, Target };

inline std::string to_string(Modality m) { return m == Modality::X ? "x" : "y"; }
inline std::string to_string(Domain d) { return d == Domain::Auxiliary ? "auxiliary" : "target"; }

// Per-item category labels, kept sorted and deduplicated.
using LabelSet = std::vector<std::int32_t>;

inline LabelSet normalize_labels(LabelSet labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

// Two items are similar iff their label sets share at least one category.
inline bool labels_intersect(const LabelSet& a, const LabelSet& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j]) ++i; else ++j;
    }
    return false;
}

struct FeatureDataset {
    Modality modality = Modality::X;
    Domain domain = Domain::Auxiliary;
    Matrix features;                 // one row per item
    std::vector<LabelSet> labels;    // empty set = unlabeled item

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }

    void validate() const {
        if (labels.size() != features.rows)
            throw std::invalid_argument("FeatureDataset: " + std::to_string(features.rows) +
                                        " feature rows but " + std::to_string(labels.size()) +
                                        " label sets");
    }

    bool operator==(const FeatureDataset& o) const {
        return modality == o.modality && domain == o.domain && features == o.features &&
               labels == o.labels;
    }
};

// One supervised pair: i indexes the modality-X set, j the modality-Y set.
struct IndexPair {
    std::size_t i = 0;
    std::size_t j = 0;
    int label = 0;  // 1 similar, 0 dissimilar
};

struct RelationSet {
    std::vector<IndexPair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }

    void validate(std::size_t x_count, std::size_t y_count) const {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const IndexPair& pr = pairs[p];
            if (pr.i >= x_count || pr.j >= y_count)
                throw std::invalid_argument("RelationSet: pair " + std::to_string(p) +
                                            " indexes (" + std::to_string(pr.i) + "," +
                                            std::to_string(pr.j) + ") outside " +
                                            std::to_string(x_count) + "x" + std::to_string(y_count));
            if (pr.label != 0 && pr.label != 1)
                throw std::invalid_argument("RelationSet: pair " + std::to_string(p) +
                                            " has label " + std::to_string(pr.label));
        }
    }
};

// Training pools: auxiliary items first, then target items sampled into the
// pool for distribution alignment. Supervised pairs index only the prefix.
struct TrainingSets {
    FeatureDataset x_pool;
    FeatureDataset y_pool;
    std::size_t aux_x_count = 0;
    std::size_t aux_y_count = 0;
    RelationSet relations;

    std::size_t target_x_count() const { return x_pool.size() - aux_x_count; }
    std::size_t target_y_count() const { return y_pool.size() - aux_y_count; }
};

inline TrainingSets build_training_sets(const FeatureDataset& aux_x, const FeatureDataset& aux_y,
                                        const RelationSet& relations, const FeatureDataset& query,
                                        const FeatureDataset& database, std::size_t n_hat,
                                        std::size_t m_hat, std::uint64_t seed) {
    aux_x.validate();
    aux_y.validate();
    query.validate();
    database.validate();
    if (aux_x.modality != Modality::X || query.modality != Modality::X)
        throw std::invalid_argument("build_training_sets: aux_x and query must be modality X");
    if (aux_y.modality != Modality::Y || database.modality != Modality::Y)
        throw std::invalid_argument("build_training_sets: aux_y and database must be modality Y");
    if (aux_x.dim() != query.dim())
        throw std::invalid_argument("build_training_sets: modality-X dims differ: " +
                                    std::to_string(aux_x.dim()) + " vs " + std::to_string(query.dim()));
    if (aux_y.dim() != database.dim())
        throw std::invalid_argument("build_training_sets: modality-Y dims differ: " +
                                    std::to_string(aux_y.dim()) + " vs " + std::to_string(database.dim()));
    if (n_hat > query.size())
        throw std::invalid_argument("build_training_sets: n_hat=" + std::to_string(n_hat) +
                                    " exceeds query size " + std::to_string(query.size()));
    if (m_hat > database.size())
        throw std::invalid_argument("build_training_sets: m_hat=" + std::to_string(m_hat) +
                                    " exceeds database size " + std::to_string(database.size()));
    relations.validate(aux_x.size(), aux_y.size());

    auto assemble = [](const FeatureDataset& aux, const FeatureDataset& tgt,
                       const std::vector<std::size_t>& picks) {
        FeatureDataset pool;
        pool.modality = aux.modality;
        pool.domain = Domain::Auxiliary;  // pool carries the auxiliary prefix convention
        pool.features = Matrix(aux.size() + picks.size(), aux.dim());
        pool.labels.reserve(aux.size() + picks.size());
        for (std::size_t r = 0; r < aux.size(); ++r) {
            std::copy(aux.features.row(r).begin(), aux.features.row(r).end(),
                      pool.features.row(r).begin());
            pool.labels.push_back(aux.labels[r]);
        }
        for (std::size_t t = 0; t < picks.size(); ++t) {
            std::copy(tgt.features.row(picks[t]).begin(), tgt.features.row(picks[t]).end(),
                      pool.features.row(aux.size() + t).begin());
            pool.labels.push_back(tgt.labels[picks[t]]);
        }
        return pool;
    };

    Rng rng_x(seed, "pool-sample-x");
    Rng rng_y(seed, "pool-sample-y");
    TrainingSets sets;
    sets.x_pool = assemble(aux_x, query, rng_x.sample_without_replacement(query.size(), n_hat));
    sets.y_pool = assemble(aux_y, database, rng_y.sample_without_replacement(database.size(), m_hat));
    sets.aux_x_count = aux_x.size();
    sets.aux_y_count = aux_y.size();
    sets.relations = relations;
    return sets;
}

// b-bit codes packed into 64-bit words, most-significant bit first. Bit value
// 1 encodes +1, 0 encodes -1; pad bits past b stay zero so word-wise XOR and
// popcount never see them.
struct CodeTable {
    std::size_t bits_per_code = 0;
    std::size_t item_count = 0;
    std::vector<std::uint64_t> words;

    CodeTable() = default;
    CodeTable(std::size_t n, std::size_t b)
        : bits_per_code(b), item_count(n), words(n * words_per_code(b), 0) {}

    static std::size_t words_per_code(std::size_t b) { return (b + 63) / 64; }
    std::size_t words_per_code() const { return words_per_code(bits_per_code); }

    std::span<const std::uint64_t> code(std::size_t item) const {
        return {words.data() + item * words_per_code(), words_per_code()};
    }
    std::span<std::uint64_t> code(std::size_t item) {
        return {words.data() + item * words_per_code(), words_per_code()};
    }

    bool get_bit(std::size_t item, std::size_t k) const {
        return (code(item)[k / 64] >> (63 - k % 64)) & 1u;
    }
    void set_bit(std::size_t item, std::size_t k, bool on) {
        const std::uint64_t mask = 1ULL << (63 - k % 64);
        if (on) code(item)[k / 64] |= mask;
        else    code(item)[k / 64] &= ~mask;
    }

    bool operator==(const CodeTable& o) const {
        return bits_per_code == o.bits_per_code && item_count == o.item_count && words == o.words;
    }
};

enum class Ablation { Full, IP, NoMMD, NoQuant };

inline std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::Full: return "full";
        case Ablation::IP: return "ip";
        case Ablation::NoMMD: return "no-mmd";
        case Ablation::NoQuant: return "no-quant";
    }
    return "full";
}

inline Ablation parse_ablation(const std::string& s) {
    if (s == "full") return Ablation::Full;
    if (s == "ip") return Ablation::IP;
    if (s == "no-mmd") return Ablation::NoMMD;
    if (s == "no-quant") return Ablation::NoQuant;
    throw std::invalid_argument("unknown ablation '" + s + "' (expected full|ip|no-mmd|no-quant)");
}

// Kernel bandwidth: a fixed value, or the per-batch median heuristic.
struct GammaMode {
    bool median = true;
    double value = 1.0;  // used when median == false

    static GammaMode median_heuristic() { return {true, 1.0}; }
    static GammaMode fixed(double v) { return {false, v}; }
};

struct TrainConfig {
    std::size_t bits = 16;
    double lambda = 0.1;             // quantization trade-off
    double mu = 1.0;                 // distribution-alignment trade-off
    GammaMode gamma = GammaMode::median_heuristic();
    double learning_rate = 3.16e-4;
    double momentum = 0.9;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 1;
    std::vector<std::size_t> hidden_sizes_x = {256, 128};
    std::vector<std::size_t> hidden_sizes_y = {256, 128};
    Ablation ablation = Ablation::Full;
    double hash_layer_lr_scale = 10.0;  // fresh hash layer trains faster than the rest

    void validate() const {
        if (bits < 1) throw std::invalid_argument("TrainConfig: bits must be >= 1");
        if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
        if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
        if (momentum < 0.0 || momentum >= 1.0)
            throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
        if (lambda < 0.0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
        if (mu < 0.0) throw std::invalid_argument("TrainConfig: mu must be >= 0");
        if (!gamma.median && gamma.value <= 0.0)
            throw std::invalid_argument("TrainConfig: fixed gamma must be > 0");
        if (hash_layer_lr_scale <= 0.0)
            throw std::invalid_argument("TrainConfig: hash_layer_lr_scale must be > 0");
    }
};

}  // namespace crosshash
