// cli.hpp — command-line front end wiring the library into reproducible
// experiments. Subcommands: datagen, train, encode, evaluate, ablate. Every
// run writes a key=value manifest next to its outputs with the fully resolved
// configuration; the timestamp sits on its own dedicated line so the rest of
// the manifest is byte-stable across reruns.
#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "crosshash/datagen.hpp"
#include "crosshash/errors.hpp"
#include "crosshash/evaluation.hpp"
#include "crosshash/io_util.hpp"
#include "crosshash/network.hpp"
#include "crosshash/retrieval.hpp"
#include "crosshash/training.hpp"
#include "crosshash/types.hpp"

namespace crosshash::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDivergence = 4;

// Canonical filenames inside a dataset directory.
namespace files {
inline constexpr const char* kAuxXFeatures = "aux_x.features.txt";
inline constexpr const char* kAuxXLabels = "aux_x.labels.txt";
inline constexpr const char* kAuxYFeatures = "aux_y.features.txt";
inline constexpr const char* kAuxYLabels = "aux_y.labels.txt";
inline constexpr const char* kQueryFeatures = "query.features.txt";
inline constexpr const char* kQueryLabels = "query.labels.txt";
inline constexpr const char* kDatabaseFeatures = "database.features.txt";
inline constexpr const char* kDatabaseLabels = "database.labels.txt";
inline constexpr const char* kRelations = "relations.txt";
inline constexpr const char* kManifest = "manifest.txt";
inline constexpr const char* kTowerX = "tower_x.txt";
inline constexpr const char* kTowerY = "tower_y.txt";
inline constexpr const char* kTrainLog = "train.log";
inline constexpr const char* kReport = "report.txt";
inline constexpr const char* kAblationTable = "ablation.txt";
}  // namespace files

using Entries = std::vector<std::pair<std::string, std::string>>;

inline void write_manifest(const std::filesystem::path& path, const std::string& subcommand,
                           Entries entries) {
    std::sort(entries.begin(), entries.end());
    std::ofstream out = open_output(path);
    out << "subcommand=" << subcommand << "\n";
    out << "version=" << kVersion << "\n";
    for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32] = {0};
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "timestamp=" << stamp << "\n";
    finish_output(out, path);
}

namespace detail {

inline std::vector<std::size_t> parse_size_list(const std::string& csv, const std::string& flag) {
    std::vector<std::size_t> out;
    if (csv.empty()) return out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = csv.find(',', start);
        const std::string tok = csv.substr(start, comma == std::string::npos ? std::string::npos
                                                                             : comma - start);
        const long long v = parse_int(tok, flag);
        if (v < 1) throw std::invalid_argument(flag + ": sizes must be positive, got " + tok);
        out.push_back(static_cast<std::size_t>(v));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string join_sizes(const std::vector<std::size_t>& sizes) {
    std::string out;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(sizes[i]);
    }
    return out;
}

inline GammaMode parse_gamma(const std::string& s) {
    if (s == "median") return GammaMode::median_heuristic();
    const double v = parse_double(s, "--gamma");
    if (v <= 0.0) throw std::invalid_argument("--gamma: fixed value must be positive");
    return GammaMode::fixed(v);
}

struct LoadedData {
    FeatureDataset aux_x, aux_y, query, database;
    RelationSet relations;
};

inline LoadedData load_dataset_dir(const std::filesystem::path& dir) {
    LoadedData d;
    d.aux_x = load_features(dir / files::kAuxXFeatures, dir / files::kAuxXLabels, Modality::X,
                            Domain::Auxiliary);
    d.aux_y = load_features(dir / files::kAuxYFeatures, dir / files::kAuxYLabels, Modality::Y,
                            Domain::Auxiliary);
    d.query = load_features(dir / files::kQueryFeatures, dir / files::kQueryLabels, Modality::X,
                            Domain::Target);
    d.database = load_features(dir / files::kDatabaseFeatures, dir / files::kDatabaseLabels,
                               Modality::Y, Domain::Target);
    d.relations = load_relations(dir / files::kRelations);
    return d;
}

// Shared train/ablate flag block.
struct TrainFlags {
    std::string data_dir;
    std::string out_dir;
    std::size_t bits = 16;
    double lambda = 0.1;
    double mu = 1.0;
    std::string gamma = "median";
    double learning_rate = 3.16e-4;
    double momentum = 0.9;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 1;
    std::string hidden_x = "256,128";
    std::string hidden_y = "256,128";
    std::string ablation = "full";
    double hash_lr_scale = 10.0;
    long long target_x_count = -1;  // -1: use the whole target set
    long long target_y_count = -1;

    void attach(CLI::App* cmd, bool with_ablation) {
        cmd->add_option("--data-dir", data_dir, "directory produced by the datagen subcommand")
            ->required();
        cmd->add_option("--out-dir", out_dir, "output directory")->required();
        cmd->add_option("--bits", bits, "hash code length b");
        cmd->add_option("--lambda", lambda, "quantization loss weight");
        cmd->add_option("--mu", mu, "distribution alignment weight");
        cmd->add_option("--gamma", gamma, "kernel bandwidth: 'median' or a positive number");
        cmd->add_option("--learning-rate", learning_rate, "SGD learning rate");
        cmd->add_option("--momentum", momentum, "SGD momentum in [0,1)");
        cmd->add_option("--batch-size", batch_size, "mini-batch size B");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--seed", seed, "run seed; all randomness derives from it");
        cmd->add_option("--hidden-x", hidden_x, "comma-separated hidden widths, X tower");
        cmd->add_option("--hidden-y", hidden_y, "comma-separated hidden widths, Y tower");
        if (with_ablation)
            cmd->add_option("--ablation", ablation, "variant: full|ip|no-mmd|no-quant");
        cmd->add_option("--hash-lr-scale", hash_lr_scale,
                        "learning-rate multiplier for the hash layer");
        cmd->add_option("--target-x-count", target_x_count,
                        "query-set items mixed into the training pool (-1: all)");
        cmd->add_option("--target-y-count", target_y_count,
                        "database-set items mixed into the training pool (-1: all)");
    }

    TrainConfig config() const {
        TrainConfig cfg;
        cfg.bits = bits;
        cfg.lambda = lambda;
        cfg.mu = mu;
        cfg.gamma = parse_gamma(gamma);
        cfg.learning_rate = learning_rate;
        cfg.momentum = momentum;
        cfg.batch_size = batch_size;
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg.hidden_sizes_x = parse_size_list(hidden_x, "--hidden-x");
        cfg.hidden_sizes_y = parse_size_list(hidden_y, "--hidden-y");
        cfg.ablation = parse_ablation(ablation);
        cfg.hash_layer_lr_scale = hash_lr_scale;
        cfg.validate();
        return cfg;
    }
};

inline TrainingSets assemble_sets(const LoadedData& d, const TrainFlags& f, std::uint64_t seed) {
    const std::size_t n_hat = f.target_x_count < 0 ? d.query.size()
                                                   : static_cast<std::size_t>(f.target_x_count);
    const std::size_t m_hat = f.target_y_count < 0
                                  ? d.database.size()
                                  : static_cast<std::size_t>(f.target_y_count);
    return build_training_sets(d.aux_x, d.aux_y, d.relations, d.query, d.database, n_hat, m_hat,
                               seed);
}

// The effective weights go into the manifest: an ablation that zeroes a term
// is recorded as that weight being zero.
inline Entries config_entries(const TrainConfig& cfg, const TrainFlags& f) {
    const EffectiveWeights w = effective_weights(cfg);
    return {{"bits", std::to_string(cfg.bits)},
            {"lambda", format_double(w.lambda)},
            {"mu", format_double(w.mu)},
            {"gamma", cfg.gamma.median ? "median" : format_double(cfg.gamma.value)},
            {"learning_rate", format_double(cfg.learning_rate)},
            {"momentum", format_double(cfg.momentum)},
            {"batch_size", std::to_string(cfg.batch_size)},
            {"epochs", std::to_string(cfg.epochs)},
            {"seed", std::to_string(cfg.seed)},
            {"hidden_x", join_sizes(cfg.hidden_sizes_x)},
            {"hidden_y", join_sizes(cfg.hidden_sizes_y)},
            {"ablation", to_string(cfg.ablation)},
            {"hash_lr_scale", format_double(cfg.hash_layer_lr_scale)},
            {"target_x_count", std::to_string(f.target_x_count)},
            {"target_y_count", std::to_string(f.target_y_count)},
            {"data_dir", f.data_dir}};
}

inline void run_train_into(const LoadedData& data, const TrainFlags& flags,
                           const std::filesystem::path& out_dir) {
    const TrainConfig cfg = flags.config();
    const TrainingSets sets = assemble_sets(data, flags, cfg.seed);
    const TrainResult result = train(sets, cfg);
    save_tower(result.tower_x, out_dir / files::kTowerX);
    save_tower(result.tower_y, out_dir / files::kTowerY);
    save_train_log(result.log, out_dir / files::kTrainLog);
    Entries entries = config_entries(cfg, flags);
    entries.emplace_back("out_dir", out_dir.string());
    write_manifest(out_dir / files::kManifest, "train", std::move(entries));
    if (!result.log.epochs.empty())
        std::cout << "final objective " << format_double(result.log.epochs.back().mean_loss.total)
                  << "\n";
    std::cout << "wrote " << (out_dir / files::kTowerX).string() << "\n";
}

inline CodeTable encode_matrix(const Tower& tower, const Matrix& features) {
    if (features.cols != tower.input_dim())
        throw IoError("encode: checkpoint expects dimension " +
                      std::to_string(tower.input_dim()) + " but features have " +
                      std::to_string(features.cols));
    return binarize(forward(tower, features).activations());
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"two-tower cross-modal hashing: synthetic data, training, encoding, retrieval "
                 "evaluation"};
    app.require_subcommand(1);

    // datagen ------------------------------------------------------------
    SynthSpec spec;
    std::string dg_out;
    CLI::App* dg = app.add_subcommand("datagen", "generate a synthetic two-domain dataset");
    dg->set_config("--config", "", "key=value config file");
    dg->add_option("--out-dir", dg_out, "output directory")->required();
    dg->add_option("--categories", spec.categories, "number of latent categories");
    dg->add_option("--dim-x", spec.dim_x, "modality-X feature dimension");
    dg->add_option("--dim-y", spec.dim_y, "modality-Y feature dimension");
    dg->add_option("--aux-x-count", spec.n_aux_x, "auxiliary modality-X items");
    dg->add_option("--aux-y-count", spec.n_aux_y, "auxiliary modality-Y items");
    dg->add_option("--query-count", spec.n_query, "target-domain query items (modality X)");
    dg->add_option("--database-count", spec.n_database, "target-domain database items (modality Y)");
    dg->add_option("--separation", spec.separation, "latent prototype scale");
    dg->add_option("--shift-translation", spec.shift_translation, "target-domain translation scale");
    dg->add_option("--shift-rotation", spec.shift_rotation, "target-domain rotation scale (radians)");
    dg->add_option("--noise", spec.noise_sigma, "per-feature Gaussian noise sigma");
    dg->add_option("--multi-label-prob", spec.multi_label_prob, "chance of a second label");
    dg->add_option("--relations-per-item", spec.relations_per_item,
                   "supervised pairs sampled per auxiliary X item");
    dg->add_option("--seed", spec.seed, "generator seed");
    dg->callback([&] {
        const SynthData data = generate(spec);
        const std::filesystem::path out(dg_out);
        save_features(data.aux_x, out / files::kAuxXFeatures, out / files::kAuxXLabels);
        save_features(data.aux_y, out / files::kAuxYFeatures, out / files::kAuxYLabels);
        save_features(data.query, out / files::kQueryFeatures, out / files::kQueryLabels);
        save_features(data.database, out / files::kDatabaseFeatures, out / files::kDatabaseLabels);
        save_relations(data.relations, out / files::kRelations);
        Entries entries = manifest_entries(spec);
        entries.emplace_back("out_dir", out.string());
        entries.emplace_back("relation_pairs", std::to_string(data.relations.size()));
        write_manifest(out / files::kManifest, "datagen", std::move(entries));
        std::cout << "wrote dataset to " << out.string() << " (" << data.relations.size()
                  << " supervised pairs)\n";
    });

    // train ----------------------------------------------------------------
    detail::TrainFlags tf;
    CLI::App* tr = app.add_subcommand("train", "train the two towers on a dataset directory");
    tr->set_config("--config", "", "key=value config file");
    tf.attach(tr, /*with_ablation=*/true);
    tr->callback([&] {
        detail::run_train_into(detail::load_dataset_dir(tf.data_dir), tf,
                               std::filesystem::path(tf.out_dir));
    });

    // encode ---------------------------------------------------------------
    std::string enc_checkpoint, enc_features, enc_out;
    CLI::App* enc = app.add_subcommand("encode", "binarize features through a trained tower");
    enc->set_config("--config", "", "key=value config file");
    enc->add_option("--checkpoint", enc_checkpoint, "tower checkpoint file")->required();
    enc->add_option("--features", enc_features, "feature matrix file")->required();
    enc->add_option("--out", enc_out, "code file to write")->required();
    enc->callback([&] {
        const Tower tower = load_tower(enc_checkpoint);
        const Matrix features = load_feature_matrix(enc_features);
        const CodeTable codes = detail::encode_matrix(tower, features);
        save_codes(codes, enc_out);
        const std::filesystem::path out(enc_out);
        write_manifest(out.parent_path() / (out.stem().string() + ".manifest.txt"), "encode",
                       {{"checkpoint", enc_checkpoint},
                        {"features", enc_features},
                        {"out", enc_out},
                        {"items", std::to_string(codes.item_count)},
                        {"bits", std::to_string(codes.bits_per_code)}});
        std::cout << "wrote " << enc_out << " (" << codes.item_count << " codes, "
                  << codes.bits_per_code << " bits)\n";
    });

    // evaluate ---------------------------------------------------------------
    std::string ev_qcodes, ev_qlabels, ev_dcodes, ev_dlabels, ev_out;
    std::size_t ev_cutoff = 0;
    CLI::App* ev = app.add_subcommand("evaluate", "Hamming-ranking retrieval metrics");
    ev->set_config("--config", "", "key=value config file");
    ev->add_option("--query-codes", ev_qcodes, "query code file")->required();
    ev->add_option("--query-labels", ev_qlabels, "query label file")->required();
    ev->add_option("--db-codes", ev_dcodes, "database code file")->required();
    ev->add_option("--db-labels", ev_dlabels, "database label file")->required();
    ev->add_option("--out-dir", ev_out, "output directory")->required();
    ev->add_option("--cutoff", ev_cutoff, "MAP@R cutoff (0 = full ranking)");
    ev->callback([&] {
        const CodeTable qcodes = load_codes(ev_qcodes);
        const CodeTable dcodes = load_codes(ev_dcodes);
        const auto qlabels = load_labels(ev_qlabels);
        const auto dlabels = load_labels(ev_dlabels);
        if (qlabels.size() != qcodes.item_count)
            throw IoError("evaluate: " + std::to_string(qcodes.item_count) +
                          " query codes but " + std::to_string(qlabels.size()) + " label lines");
        if (dlabels.size() != dcodes.item_count)
            throw IoError("evaluate: " + std::to_string(dcodes.item_count) +
                          " database codes but " + std::to_string(dlabels.size()) + " label lines");
        const HammingIndex index = HammingIndex::build(dcodes);
        EvalReport report = mean_average_precision(qcodes, qlabels, index, dlabels, ev_cutoff);
        report.pr_curve = precision_recall_curve(qcodes, qlabels, index, dlabels);
        const std::filesystem::path out(ev_out);
        save_report(report, out / files::kReport);
        write_manifest(out / files::kManifest, "evaluate",
                       {{"query_codes", ev_qcodes},
                        {"query_labels", ev_qlabels},
                        {"db_codes", ev_dcodes},
                        {"db_labels", ev_dlabels},
                        {"cutoff", std::to_string(ev_cutoff)},
                        {"map", format_double(report.map)}});
        std::cout << "map " << format_double(report.map) << "\n";
    });

    // ablate ---------------------------------------------------------------
    detail::TrainFlags af;
    std::string ab_bits = "16";
    CLI::App* ab = app.add_subcommand(
        "ablate", "train and evaluate every objective variant on shared splits");
    ab->set_config("--config", "", "key=value config file");
    af.attach(ab, /*with_ablation=*/false);
    ab->add_option("--bit-list", ab_bits, "comma-separated code lengths, e.g. 8,16");
    ab->callback([&] {
        const auto bit_list = detail::parse_size_list(ab_bits, "--bit-list");
        if (bit_list.empty()) throw std::invalid_argument("--bit-list: at least one code length");
        const detail::LoadedData data = detail::load_dataset_dir(af.data_dir);
        const std::filesystem::path out(af.out_dir);
        const std::vector<std::string> variants = {"full", "ip", "no-mmd", "no-quant"};

        // map[direction][variant][bit] -> MAP
        std::map<std::string, std::map<std::string, std::map<std::size_t, double>>> table;
        for (std::size_t bits : bit_list) {
            for (const std::string& variant : variants) {
                detail::TrainFlags vf = af;
                vf.bits = bits;
                vf.ablation = variant;
                const std::filesystem::path vdir = out / (variant + "_b" + std::to_string(bits));
                detail::run_train_into(data, vf, vdir);
                const Tower tower_x = load_tower(vdir / files::kTowerX);
                const Tower tower_y = load_tower(vdir / files::kTowerY);
                const CodeTable cq = detail::encode_matrix(tower_x, data.query.features);
                const CodeTable cd = detail::encode_matrix(tower_y, data.database.features);
                const HammingIndex idx_d = HammingIndex::build(cd);
                const HammingIndex idx_q = HammingIndex::build(cq, Modality::X);
                table["x-to-y"][variant][bits] =
                    mean_average_precision(cq, data.query.labels, idx_d, data.database.labels).map;
                table["y-to-x"][variant][bits] =
                    mean_average_precision(cd, data.database.labels, idx_q, data.query.labels).map;
            }
        }

        std::ofstream tout = open_output(out / files::kAblationTable);
        for (const auto& [direction, rows] : table) {
            tout << "direction " << direction << "\n";
            tout << "variant";
            for (std::size_t bits : bit_list) tout << " b" << bits;
            tout << "\n";
            for (const std::string& variant : variants) {
                tout << variant;
                for (std::size_t bits : bit_list) tout << " " << format_double(rows.at(variant).at(bits));
                tout << "\n";
            }
        }
        finish_output(tout, out / files::kAblationTable);

        Entries entries = detail::config_entries(af.config(), af);
        entries.emplace_back("bit_list", ab_bits);
        entries.emplace_back("out_dir", out.string());
        write_manifest(out / files::kManifest, "ablate", std::move(entries));
        std::cout << "wrote " << (out / files::kAblationTable).string() << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kExitUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}

// Test-friendly wrapper: pass arguments without the program name.
inline int run(const std::vector<std::string>& args) {
    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("crosshash");
    for (const std::string& a : args) argv_storage.push_back(a);
    std::vector<const char*> argv;
    for (const std::string& a : argv_storage) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace crosshash::cli
