#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "crosshash/cli.hpp"
#include "helpers.hpp"

using namespace crosshash;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Manifest content with the timestamp line (and only it) removed.
std::string manifest_body(const std::filesystem::path& path) {
    std::istringstream in(slurp(path));
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("timestamp=", 0) != 0) out += line + "\n";
    return out;
}

std::vector<std::string> tiny_datagen_args(const std::string& out_dir, unsigned seed = 5) {
    return {"datagen",         "--out-dir",   out_dir, "--categories", "4",
            "--dim-x",         "10",          "--dim-y", "8",
            "--aux-x-count",   "60",          "--aux-y-count", "60",
            "--query-count",   "24",          "--database-count", "24",
            "--relations-per-item", "4",      "--separation", "1.5",
            "--noise",         "0.05",        "--seed", std::to_string(seed)};
}

std::vector<std::string> tiny_train_args(const std::string& data_dir, const std::string& out_dir) {
    return {"train",       "--data-dir", data_dir, "--out-dir", out_dir,
            "--bits",      "8",          "--hidden-x", "8", "--hidden-y", "8",
            "--batch-size", "8",         "--epochs", "2",   "--seed", "3",
            "--learning-rate", "1e-3"};
}

}  // namespace

TEST_CASE("datagen subcommand writes a loadable, reproducible dataset", "[cli]") {
    const auto dir_a = testutil::temp_dir("cli_datagen_a");
    const auto dir_b = testutil::temp_dir("cli_datagen_b");
    REQUIRE(cli::run(tiny_datagen_args(dir_a.string())) == cli::kExitOk);
    REQUIRE(cli::run(tiny_datagen_args(dir_b.string())) == cli::kExitOk);

    const FeatureDataset aux_x = load_features(dir_a / cli::files::kAuxXFeatures,
                                               dir_a / cli::files::kAuxXLabels, Modality::X,
                                               Domain::Auxiliary);
    REQUIRE(aux_x.size() == 60);
    REQUIRE(aux_x.dim() == 10);
    REQUIRE_FALSE(load_relations(dir_a / cli::files::kRelations).empty());

    for (const char* name :
         {cli::files::kAuxXFeatures, cli::files::kAuxYFeatures, cli::files::kQueryFeatures,
          cli::files::kDatabaseFeatures, cli::files::kAuxXLabels, cli::files::kRelations})
        REQUIRE(slurp(dir_a / name) == slurp(dir_b / name));
    REQUIRE(manifest_body(dir_a / cli::files::kManifest) ==
            manifest_body(dir_b / cli::files::kManifest));

    // invalid spec is a usage error
    auto bad = tiny_datagen_args((dir_a / "bad").string());
    bad[4] = "0";  // categories
    REQUIRE(cli::run(bad) == cli::kExitUsage);
}

TEST_CASE("train subcommand honors epochs=0 and records effective weights", "[cli]") {
    const auto data = testutil::temp_dir("cli_train_data");
    REQUIRE(cli::run(tiny_datagen_args(data.string())) == cli::kExitOk);

    const auto out0 = testutil::temp_dir("cli_train_e0");
    auto args = tiny_train_args(data.string(), out0.string());
    args[args.size() - 5] = "0";  // epochs value
    REQUIRE(cli::run(args) == cli::kExitOk);
    const Tower tower_x = load_tower(out0 / cli::files::kTowerX);
    REQUIRE(tower_x == init_tower({10, 8, 8}, derive_seed(3, "init-x")));
    REQUIRE(slurp(out0 / cli::files::kTrainLog) ==
            "epoch relationship quantization mmd_query mmd_database total seconds\n");

    const auto out1 = testutil::temp_dir("cli_train_nommd");
    auto nommd = tiny_train_args(data.string(), out1.string());
    nommd.push_back("--ablation");
    nommd.push_back("no-mmd");
    REQUIRE(cli::run(nommd) == cli::kExitOk);
    const std::string manifest = slurp(out1 / cli::files::kManifest);
    REQUIRE_THAT(manifest, Catch::Matchers::ContainsSubstring("\nmu=0\n"));
    REQUIRE_THAT(manifest, Catch::Matchers::ContainsSubstring("ablation=no-mmd"));
}

TEST_CASE("config file values sit between defaults and flags", "[cli]") {
    const auto data = testutil::temp_dir("cli_cfg_data");
    REQUIRE(cli::run(tiny_datagen_args(data.string())) == cli::kExitOk);

    const auto dir = testutil::temp_dir("cli_cfg");
    const auto cfg_path = dir / "run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "lambda=0.5\nepochs=0\n";
    }
    // no --epochs / --lambda flags: the config file's values apply
    std::vector<std::string> args = {
        "train", "--data-dir", data.string(), "--out-dir", (dir / "from_config").string(),
        "--bits", "8", "--hidden-x", "8", "--hidden-y", "8", "--batch-size", "8",
        "--seed", "3", "--config", cfg_path.string()};
    REQUIRE(cli::run(args) == cli::kExitOk);
    std::string manifest = slurp(dir / "from_config" / cli::files::kManifest);
    REQUIRE_THAT(manifest, Catch::Matchers::ContainsSubstring("lambda=0.5"));
    REQUIRE_THAT(manifest, Catch::Matchers::ContainsSubstring("epochs=0"));

    args.push_back("--lambda");
    args.push_back("0.25");
    args[4] = (dir / "flag_wins").string();  // --out-dir value
    REQUIRE(cli::run(args) == cli::kExitOk);
    manifest = slurp(dir / "flag_wins" / cli::files::kManifest);
    REQUIRE_THAT(manifest, Catch::Matchers::ContainsSubstring("lambda=0.25"));
}

TEST_CASE("encode is deterministic and checks dimensions", "[cli]") {
    const auto data = testutil::temp_dir("cli_encode_data");
    REQUIRE(cli::run(tiny_datagen_args(data.string())) == cli::kExitOk);
    const auto model = testutil::temp_dir("cli_encode_model");
    REQUIRE(cli::run(tiny_train_args(data.string(), model.string())) == cli::kExitOk);

    const auto out = testutil::temp_dir("cli_encode_out");
    auto encode_args = [&](const std::string& target) {
        return std::vector<std::string>{
            "encode", "--checkpoint", (model / cli::files::kTowerX).string(), "--features",
            (data / cli::files::kQueryFeatures).string(), "--out", target};
    };
    REQUIRE(cli::run(encode_args((out / "a.codes").string())) == cli::kExitOk);
    REQUIRE(cli::run(encode_args((out / "b.codes").string())) == cli::kExitOk);
    REQUIRE(slurp(out / "a.codes") == slurp(out / "b.codes"));

    const CodeTable codes = load_codes(out / "a.codes");
    REQUIRE(codes.item_count == 24);
    REQUIRE(codes.bits_per_code == 8);

    // feeding modality-Y features into the X tower is a data error
    auto bad = encode_args((out / "c.codes").string());
    bad[4] = (data / cli::files::kDatabaseFeatures).string();
    REQUIRE(cli::run(bad) == cli::kExitIo);
}

TEST_CASE("evaluate computes MAP and is repeatable", "[cli]") {
    const auto dir = testutil::temp_dir("cli_eval");
    {
        std::ofstream codes(dir / "q.codes");
        codes << "2 4\n1010\n0101\n";
        std::ofstream db(dir / "d.codes");
        db << "3 4\n1010\n0101\n1111\n";
        std::ofstream ql(dir / "q.labels");
        ql << "1\n1\n";
        std::ofstream dl(dir / "d.labels");
        dl << "1\n1\n1\n";
    }
    auto eval_args = [&](const std::string& out) {
        return std::vector<std::string>{"evaluate",
                                        "--query-codes", (dir / "q.codes").string(),
                                        "--query-labels", (dir / "q.labels").string(),
                                        "--db-codes", (dir / "d.codes").string(),
                                        "--db-labels", (dir / "d.labels").string(),
                                        "--out-dir", out};
    };
    REQUIRE(cli::run(eval_args((dir / "r1").string())) == cli::kExitOk);
    REQUIRE(cli::run(eval_args((dir / "r2").string())) == cli::kExitOk);
    const std::string report = slurp(dir / "r1" / cli::files::kReport);
    REQUIRE(report == slurp(dir / "r2" / cli::files::kReport));
    REQUIRE_THAT(report, Catch::Matchers::StartsWith("1 2 3 4\n"));  // all relevant: MAP 1

    // mismatched label count is an I/O error
    {
        std::ofstream dl(dir / "d.labels");
        dl << "1\n1\n";
    }
    REQUIRE(cli::run(eval_args((dir / "r3").string())) == cli::kExitIo);
}

TEST_CASE("ablate produces a full table over shared splits", "[cli]") {
    const auto data = testutil::temp_dir("cli_ablate_data");
    REQUIRE(cli::run(tiny_datagen_args(data.string())) == cli::kExitOk);
    const auto out = testutil::temp_dir("cli_ablate_out");
    const std::vector<std::string> args = {
        "ablate",      "--data-dir", data.string(), "--out-dir", out.string(),
        "--bit-list",  "4,8",        "--hidden-x",  "8",         "--hidden-y", "8",
        "--batch-size", "8",         "--epochs",    "1",         "--seed", "7",
        "--learning-rate", "1e-3"};
    REQUIRE(cli::run(args) == cli::kExitOk);

    const std::string table = slurp(out / cli::files::kAblationTable);
    std::istringstream in(table);
    std::string line;
    std::size_t direction_headers = 0, variant_rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("direction ", 0) == 0) ++direction_headers;
        for (const char* v : {"full ", "ip ", "no-mmd ", "no-quant "})
            if (line.rfind(v, 0) == 0) {
                ++variant_rows;
                REQUIRE(split_tokens(line).size() == 3);  // variant + two bit columns
            }
    }
    REQUIRE(direction_headers == 2);
    REQUIRE(variant_rows == 8);

    // all variants trained on identical splits: the split-defining manifest
    // lines must agree across variant directories
    auto split_lines = [&](const std::filesystem::path& manifest) {
        std::istringstream ms(slurp(manifest));
        std::string l, keep;
        while (std::getline(ms, l))
            if (l.rfind("seed=", 0) == 0 || l.rfind("data_dir=", 0) == 0 ||
                l.rfind("target_x_count=", 0) == 0 || l.rfind("target_y_count=", 0) == 0)
                keep += l + "\n";
        return keep;
    };
    const std::string reference = split_lines(out / "full_b4" / cli::files::kManifest);
    REQUIRE_FALSE(reference.empty());
    for (const char* variant : {"ip_b4", "no-mmd_b4", "no-quant_b4", "full_b8"})
        REQUIRE(split_lines(out / variant / cli::files::kManifest) == reference);
}

TEST_CASE("exit codes distinguish usage, io, and divergence failures", "[cli]") {
    REQUIRE(cli::run({"train", "--no-such-flag"}) == cli::kExitUsage);
    REQUIRE(cli::run({"bogus-subcommand"}) == cli::kExitUsage);
    REQUIRE(cli::run({"--help"}) == cli::kExitOk);

    const auto out = testutil::temp_dir("cli_exit");
    REQUIRE(cli::run({"train", "--data-dir", (out / "missing").string(), "--out-dir",
                      out.string()}) == cli::kExitIo);

    const auto data = testutil::temp_dir("cli_exit_data");
    REQUIRE(cli::run(tiny_datagen_args(data.string())) == cli::kExitOk);
    auto diverge = tiny_train_args(data.string(), (out / "diverge").string());
    diverge.back() = "1e9";  // learning rate
    REQUIRE(cli::run(diverge) == cli::kExitDivergence);
}

TEST_CASE("train-encode-evaluate chain is byte-reproducible", "[cli]") {
    const auto data = testutil::temp_dir("cli_chain_data");
    REQUIRE(cli::run(tiny_datagen_args(data.string())) == cli::kExitOk);

    auto run_chain = [&](const std::filesystem::path& dir) {
        REQUIRE(cli::run(tiny_train_args(data.string(), dir.string())) == cli::kExitOk);
        REQUIRE(cli::run({"encode", "--checkpoint", (dir / cli::files::kTowerX).string(),
                          "--features", (data / cli::files::kQueryFeatures).string(), "--out",
                          (dir / "query.codes").string()}) == cli::kExitOk);
        REQUIRE(cli::run({"encode", "--checkpoint", (dir / cli::files::kTowerY).string(),
                          "--features", (data / cli::files::kDatabaseFeatures).string(), "--out",
                          (dir / "database.codes").string()}) == cli::kExitOk);
        REQUIRE(cli::run({"evaluate", "--query-codes", (dir / "query.codes").string(),
                          "--query-labels", (data / cli::files::kQueryLabels).string(),
                          "--db-codes", (dir / "database.codes").string(), "--db-labels",
                          (data / cli::files::kDatabaseLabels).string(), "--out-dir",
                          (dir / "eval").string()}) == cli::kExitOk);
    };
    const auto run_a = testutil::temp_dir("cli_chain_a");
    const auto run_b = testutil::temp_dir("cli_chain_b");
    run_chain(run_a);
    run_chain(run_b);
    REQUIRE(slurp(run_a / "query.codes") == slurp(run_b / "query.codes"));
    REQUIRE(slurp(run_a / "database.codes") == slurp(run_b / "database.codes"));
    REQUIRE(slurp(run_a / "eval" / cli::files::kReport) ==
            slurp(run_b / "eval" / cli::files::kReport));
}
