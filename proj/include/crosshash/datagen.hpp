// datagen.hpp — synthetic two-modality, two-domain benchmark data. Every
// category owns a latent prototype; each modality sees the prototypes through
// its own orthonormal map, and target-domain items additionally pass through
// a fixed rotation-plus-translation to model dataset shift.
#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crosshash/errors.hpp"
#include "crosshash/io_util.hpp"
#include "crosshash/matrix.hpp"
#include "crosshash/rng.hpp"
#include "crosshash/types.hpp"

namespace crosshash {

struct SynthSpec {
    std::size_t categories = 8;
    std::size_t dim_x = 64;
    std::size_t dim_y = 32;
    std::size_t n_aux_x = 500;
    std::size_t n_aux_y = 500;
    std::size_t n_query = 200;     // target domain, modality X
    std::size_t n_database = 200;  // target domain, modality Y
    double separation = 1.0;       // scale of the latent prototypes
    double shift_translation = 0.0;
    double shift_rotation = 0.0;   // radians per Givens plane
    double noise_sigma = 0.1;
    double multi_label_prob = 0.0;  // chance of a second category label
    std::size_t relations_per_item = 8;
    std::uint64_t seed = 1;

    void validate() const {
        if (categories == 0) throw std::invalid_argument("SynthSpec: categories must be positive");
        if (dim_x == 0 || dim_y == 0) throw std::invalid_argument("SynthSpec: dims must be positive");
        if (n_aux_x == 0 || n_aux_y == 0 || n_query == 0 || n_database == 0)
            throw std::invalid_argument("SynthSpec: item counts must be positive");
        if (separation < 0.0) throw std::invalid_argument("SynthSpec: separation must be >= 0");
        if (noise_sigma < 0.0) throw std::invalid_argument("SynthSpec: noise sigma must be >= 0");
        if (multi_label_prob < 0.0 || multi_label_prob > 1.0)
            throw std::invalid_argument("SynthSpec: multi_label_prob must lie in [0, 1]");
        if (shift_translation < 0.0 || shift_rotation < 0.0)
            throw std::invalid_argument("SynthSpec: shift scales must be >= 0");
        if (relations_per_item == 0)
            throw std::invalid_argument("SynthSpec: relations_per_item must be positive");
    }
};

struct SynthData {
    FeatureDataset aux_x, aux_y, query, database;
    RelationSet relations;
};

namespace detail {

// Orthonormal columns via modified Gram-Schmidt on a Gaussian matrix.
inline Matrix orthonormal_map(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.normal();
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t prev = 0; prev < c; ++prev) {
            double proj = 0.0;
            for (std::size_t r = 0; r < rows; ++r) proj += m(r, c) * m(r, prev);
            for (std::size_t r = 0; r < rows; ++r) m(r, c) -= proj * m(r, prev);
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < rows; ++r) norm += m(r, c) * m(r, c);
        norm = std::sqrt(norm);
        if (norm < 1e-12) norm = 1.0;
        for (std::size_t r = 0; r < rows; ++r) m(r, c) /= norm;
    }
    return m;
}

// Rotation as a product of `dim` random-plane Givens rotations of angle
// scale * uniform(-1, 1); identity when scale is zero.
inline Matrix random_rotation(std::size_t dim, double scale, Rng& rng) {
    Matrix r = Matrix::identity(dim);
    if (dim < 2) return r;
    for (std::size_t g = 0; g < dim; ++g) {
        const std::size_t i = rng.index(dim);
        std::size_t j = rng.index(dim - 1);
        if (j >= i) ++j;
        const double theta = scale * rng.uniform(-1.0, 1.0);
        const double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t col = 0; col < dim; ++col) {
            const double ri = r(i, col), rj = r(j, col);
            r(i, col) = c * ri - s * rj;
            r(j, col) = s * ri + c * rj;
        }
    }
    return r;
}

struct DomainShift {
    Matrix rotation;
    std::vector<double> translation;

    void apply(std::span<double> feature) const {
        std::vector<double> rotated(feature.size(), 0.0);
        for (std::size_t i = 0; i < rotation.rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < rotation.cols; ++j) acc += rotation(i, j) * feature[j];
            rotated[i] = acc;
        }
        for (std::size_t i = 0; i < feature.size(); ++i) feature[i] = rotated[i] + translation[i];
    }
};

}  // namespace detail

inline SynthData generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t latent = std::min(spec.dim_x, spec.dim_y);

    Rng rng_proto(spec.seed, "prototypes");
    Matrix prototypes(spec.categories, latent);
    for (double& v : prototypes.data) v = spec.separation * rng_proto.normal();

    Rng rng_maps(spec.seed, "modality-maps");
    const Matrix map_x = detail::orthonormal_map(spec.dim_x, latent, rng_maps);
    const Matrix map_y = detail::orthonormal_map(spec.dim_y, latent, rng_maps);

    Rng rng_shift(spec.seed, "domain-shift");
    detail::DomainShift shift_x{detail::random_rotation(spec.dim_x, spec.shift_rotation, rng_shift),
                                std::vector<double>(spec.dim_x)};
    for (double& v : shift_x.translation) v = spec.shift_translation * rng_shift.normal();
    detail::DomainShift shift_y{detail::random_rotation(spec.dim_y, spec.shift_rotation, rng_shift),
                                std::vector<double>(spec.dim_y)};
    for (double& v : shift_y.translation) v = spec.shift_translation * rng_shift.normal();

    Rng rng_items(spec.seed, "items");
    auto make_dataset = [&](std::size_t count, const Matrix& map, std::size_t dim,
                            Modality modality, Domain domain,
                            const detail::DomainShift& shift) {
        FeatureDataset ds;
        ds.modality = modality;
        ds.domain = domain;
        ds.features = Matrix(count, dim);
        ds.labels.resize(count);
        std::vector<double> latent_vec(latent);
        for (std::size_t n = 0; n < count; ++n) {
            LabelSet labels{static_cast<std::int32_t>(rng_items.index(spec.categories))};
            if (spec.categories > 1 && rng_items.uniform() < spec.multi_label_prob) {
                std::int32_t extra = static_cast<std::int32_t>(rng_items.index(spec.categories - 1));
                if (extra >= labels[0]) ++extra;
                labels.push_back(extra);
            }
            ds.labels[n] = normalize_labels(std::move(labels));

            for (std::size_t l = 0; l < latent; ++l) {
                double acc = 0.0;
                for (std::int32_t c : ds.labels[n]) acc += prototypes(c, l);
                latent_vec[l] = acc / static_cast<double>(ds.labels[n].size());
            }
            auto row = ds.features.row(n);
            for (std::size_t r = 0; r < dim; ++r) {
                double acc = 0.0;
                for (std::size_t l = 0; l < latent; ++l) acc += map(r, l) * latent_vec[l];
                row[r] = acc + spec.noise_sigma * rng_items.normal();
            }
            if (domain == Domain::Target) shift.apply(row);
        }
        return ds;
    };

    SynthData data;
    data.aux_x = make_dataset(spec.n_aux_x, map_x, spec.dim_x, Modality::X, Domain::Auxiliary, shift_x);
    data.aux_y = make_dataset(spec.n_aux_y, map_y, spec.dim_y, Modality::Y, Domain::Auxiliary, shift_y);
    data.query = make_dataset(spec.n_query, map_x, spec.dim_x, Modality::X, Domain::Target, shift_x);
    data.database =
        make_dataset(spec.n_database, map_y, spec.dim_y, Modality::Y, Domain::Target, shift_y);

    // Sampled supervised pairs: half of each item's partners are drawn from a
    // shared category (guaranteeing similar pairs exist), the rest uniformly.
    Rng rng_rel(spec.seed, "relations");
    std::vector<std::vector<std::size_t>> by_category(spec.categories);
    for (std::size_t j = 0; j < spec.n_aux_y; ++j)
        for (std::int32_t c : data.aux_y.labels[j]) by_category[c].push_back(j);

    for (std::size_t i = 0; i < spec.n_aux_x; ++i) {
        std::set<std::size_t> partners;
        const std::size_t biased = (spec.relations_per_item + 1) / 2;
        for (std::size_t t = 0; t < spec.relations_per_item; ++t) {
            std::size_t j;
            const LabelSet& labels = data.aux_x.labels[i];
            const auto& same_cat = by_category[labels[rng_rel.index(labels.size())]];
            if (t < biased && !same_cat.empty()) {
                j = same_cat[rng_rel.index(same_cat.size())];
            } else {
                j = rng_rel.index(spec.n_aux_y);
            }
            if (!partners.insert(j).second) continue;
            const int s = labels_intersect(data.aux_x.labels[i], data.aux_y.labels[j]) ? 1 : 0;
            data.relations.pairs.push_back({i, j, s});
        }
    }
    return data;
}

// ---- file formats -----------------------------------------------------

// Feature file: "n d" header, then n rows of d decimals (17 significant
// digits, bit-exact round trip).
inline void save_feature_matrix(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << m.rows << " " << m.cols << "\n";
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out << " ";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
    finish_output(out, path);
}

inline Matrix load_feature_matrix(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    const std::string where = "feature file '" + path.string() + "'";
    std::string line;
    if (!std::getline(in, line)) throw IoError(where + ": missing header");
    const auto header = split_tokens(line);
    if (header.size() != 2) throw IoError(where + ": header must be 'n d'");
    const long long n = parse_int(header[0], where);
    const long long d = parse_int(header[1], where);
    if (n < 0 || d < 1) throw IoError(where + ": invalid header counts");

    Matrix m(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    for (long long i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw IoError(where + ": expected " + std::to_string(n) + " rows, got " +
                          std::to_string(i));
        const auto toks = split_tokens(line);
        if (toks.size() != static_cast<std::size_t>(d))
            throw IoError(where + ": line " + std::to_string(i + 2) + " has " +
                          std::to_string(toks.size()) + " values, expected " + std::to_string(d));
        for (long long j = 0; j < d; ++j) {
            const double v = parse_double(toks[j], where + ", line " + std::to_string(i + 2));
            if (!std::isfinite(v))
                throw IoError(where + ": non-finite value at line " + std::to_string(i + 2));
            m(i, j) = v;
        }
    }
    return m;
}

// Label file: one line per item of space-separated nonnegative category ids;
// an empty line marks an unlabeled item.
inline void save_labels(const std::vector<LabelSet>& labels, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    for (const LabelSet& set : labels) {
        for (std::size_t k = 0; k < set.size(); ++k) {
            if (k) out << " ";
            out << set[k];
        }
        out << "\n";
    }
    finish_output(out, path);
}

inline std::vector<LabelSet> load_labels(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    const std::string where = "label file '" + path.string() + "'";
    std::vector<LabelSet> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        LabelSet set;
        for (const std::string& tok : split_tokens(line)) {
            const long long v = parse_int(tok, where + ", line " + std::to_string(line_no));
            if (v < 0)
                throw IoError(where + ": negative label at line " + std::to_string(line_no));
            set.push_back(static_cast<std::int32_t>(v));
        }
        labels.push_back(normalize_labels(std::move(set)));
    }
    return labels;
}

inline void save_features(const FeatureDataset& ds, const std::filesystem::path& features_path,
                          const std::filesystem::path& labels_path) {
    ds.validate();
    save_feature_matrix(ds.features, features_path);
    save_labels(ds.labels, labels_path);
}

inline FeatureDataset load_features(const std::filesystem::path& features_path,
                                    const std::filesystem::path& labels_path, Modality modality,
                                    Domain domain) {
    FeatureDataset ds;
    ds.modality = modality;
    ds.domain = domain;
    ds.features = load_feature_matrix(features_path);
    ds.labels = load_labels(labels_path);
    if (ds.labels.size() != ds.features.rows)
        throw IoError("dataset '" + features_path.string() + "': " +
                      std::to_string(ds.features.rows) + " feature rows but " +
                      std::to_string(ds.labels.size()) + " label lines in '" +
                      labels_path.string() + "'");
    return ds;
}

// Relations file: "p" header, then p lines of "i j s".
inline void save_relations(const RelationSet& relations, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << relations.size() << "\n";
    for (const IndexPair& pr : relations.pairs)
        out << pr.i << " " << pr.j << " " << pr.label << "\n";
    finish_output(out, path);
}

inline RelationSet load_relations(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    const std::string where = "relations file '" + path.string() + "'";
    std::string line;
    if (!std::getline(in, line)) throw IoError(where + ": missing header");
    const auto header = split_tokens(line);
    if (header.size() != 1) throw IoError(where + ": header must be the pair count");
    const long long p = parse_int(header[0], where);
    if (p < 0) throw IoError(where + ": negative pair count");

    RelationSet relations;
    for (long long r = 0; r < p; ++r) {
        if (!std::getline(in, line))
            throw IoError(where + ": expected " + std::to_string(p) + " pairs, got " +
                          std::to_string(r));
        const auto toks = split_tokens(line);
        if (toks.size() != 3)
            throw IoError(where + ": line " + std::to_string(r + 2) + " must be 'i j s'");
        const std::string ctx = where + ", line " + std::to_string(r + 2);
        const long long i = parse_int(toks[0], ctx);
        const long long j = parse_int(toks[1], ctx);
        const long long s = parse_int(toks[2], ctx);
        if (i < 0 || j < 0 || (s != 0 && s != 1))
            throw IoError(ctx + ": invalid pair values");
        relations.pairs.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                   static_cast<int>(s)});
    }
    return relations;
}

// Spec echo for run manifests.
inline std::vector<std::pair<std::string, std::string>> manifest_entries(const SynthSpec& spec) {
    return {{"categories", std::to_string(spec.categories)},
            {"dim_x", std::to_string(spec.dim_x)},
            {"dim_y", std::to_string(spec.dim_y)},
            {"n_aux_x", std::to_string(spec.n_aux_x)},
            {"n_aux_y", std::to_string(spec.n_aux_y)},
            {"n_query", std::to_string(spec.n_query)},
            {"n_database", std::to_string(spec.n_database)},
            {"separation", format_double(spec.separation)},
            {"shift_translation", format_double(spec.shift_translation)},
            {"shift_rotation", format_double(spec.shift_rotation)},
            {"noise_sigma", format_double(spec.noise_sigma)},
            {"multi_label_prob", format_double(spec.multi_label_prob)},
            {"relations_per_item", std::to_string(spec.relations_per_item)},
            {"seed", std::to_string(spec.seed)}};
}

}  // namespace crosshash
