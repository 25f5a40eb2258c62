#include "doctest.h"

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "affect/cli.hpp"
#include "affect/common.hpp"
#include "affect/data.hpp"
#include "affect/train/predictions.hpp"
#include "json.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace affect;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = AFFECT_EXAMPLES_DIR;

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "affect");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(AFFECT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(read_file(dir / "manifest.json")); }

const std::vector<std::string> kSmallModel = {"--d-model", "16", "--layers", "1", "--heads", "2",
                                              "--d-ff",    "32", "--max-len", "16"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST_CASE("ingest writes dataset, histogram and manifest") {
    testing::TempDir dir;
    const Result r = run({"--out", (dir / "o").string(), "ingest", "--input", (kFixtures / "task_small.tsv").string()});
    REQUIRE(r.code == cli::kExitOk);
    const std::string hist = read_file(dir / "o/histogram.csv");
    CHECK(hist == "class,count\nanger,1\ndisgust,0\nfear,0\njoy,1\nneutral,1\nsadness,1\nsurprise,0\n");
    const auto m = manifest(dir / "o");
    CHECK(m["command"] == "ingest");
    CHECK(m["records"] == 4);
    CHECK(m["seed_defaulted"] == true);
    CHECK(m["inputs"].size() == 1);
    CHECK(m["tool_version"] == std::string(kVersion));
}

TEST_CASE("ingest reports the failing line with exit code 1") {
    testing::TempDir dir;
    write_file(dir / "bad.tsv", "essay\tempathy\nfine\t3\nbad\t8.2\n");
    const Result r = run({"--out", (dir / "o").string(), "ingest", "--input", (dir / "bad.tsv").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(run({"--out", (dir / "o").string(), "ingest", "--input", (dir / "nope.tsv").string()}).code == cli::kExitData);
}

TEST_CASE("pool ingest") {
    testing::TempDir dir;
    const Result r = run({"--out", dir.path().string(), "ingest", "--split", "pool", "--input", (kFixtures / "pool_small.tsv").string()});
    CHECK(r.code == 0);
    CHECK(data::load_task_tsv(dir / "dataset.tsv", data::Split::pool).records.size() == 5);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"ingest", "--input", "x", "--bogus-flag"}).code == cli::kExitUsage);
    CHECK(run({"ingest", "--input", "x"}).code == cli::kExitUsage);  // no --out
    testing::TempDir dir;
    CHECK(run({"--out", dir.path().string(), "augment", "--scheme", "zz", "--base", "a", "--pool", "b"}).code ==
          cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
    CHECK(run({"--version"}).code == cli::kExitOk);
}

TEST_CASE("augment through the CLI") {
    testing::TempDir dir;
    data::save_tsv(testing::indicator_corpus(testing::skewed_counts_1860(), 20, 1, data::Split::train, "b"), dir / "base.tsv");
    const auto pool = testing::indicator_corpus({500, 500, 500, 500, 500, 500, 500}, 20, 2, data::Split::pool, "p", true);
    std::ostringstream pool_text;
    pool_text << "id\ttext\temotion\n";
    for (const auto& r : pool.records) pool_text << r.id << '\t' << escape_field(r.text) << '\t' << data::to_string(*r.emotion) << '\n';
    write_file(dir / "pool.tsv", pool_text.str());
    const auto args = [&](const std::string& out, const std::string& seed) {
        return std::vector<std::string>{"--seed", seed, "--out", (dir / out).string(), "augment", "--scheme", "ba", "--total", "2800",
                                        "--base", (dir / "base.tsv").string(), "--pool", (dir / "pool.tsv").string()};
    };
    REQUIRE(run(args("a", "5")).code == 0);
    REQUIRE(run(args("b", "5")).code == 0);
    const std::string a = read_file(dir / "a/augmented.tsv");
    CHECK(a == read_file(dir / "b/augmented.tsv"));
    for (auto c : data::class_histogram(data::parse_task_tsv(a, data::Split::derived))) CHECK(c == 400);
    const auto m = manifest(dir / "a");
    CHECK(m["seed_defaulted"] == false);
    CHECK(m["config"]["scheme"] == "ba");
    CHECK(m["records"] == 2800);

    REQUIRE(run({"--out", (dir / "ra").string(), "augment", "--scheme", "ra", "--count", "0", "--base", (dir / "base.tsv").string(),
                 "--pool", (dir / "pool.tsv").string()})
                .code == 0);
    CHECK(read_file(dir / "ra/augmented.tsv") == read_file(dir / "base.tsv"));
    CHECK(run({"--out", (dir / "bad").string(), "augment", "--scheme", "ba", "--total", "2801", "--base", (dir / "base.tsv").string(),
               "--pool", (dir / "pool.tsv").string()})
              .code == cli::kExitData);
}

TEST_CASE("end-to-end emotion pipeline on the separable corpus") {
    testing::TempDir dir;
    data::save_tsv(testing::keyword_corpus(32, 1, data::Split::train, "t"), dir / "train.tsv");
    data::save_tsv(testing::keyword_corpus(16, 2, data::Split::dev, "d"), dir / "dev.tsv");
    const std::string tr = (dir / "tr").string();
    REQUIRE(run({"--seed", "1", "--out", (dir / "ing").string(), "ingest", "--input", (dir / "train.tsv").string()}).code == 0);
    const Result t = run({"--seed", "1", "--out", tr, "--quiet", "train", "--train", (dir / "ing/dataset.tsv").string(), "--dev",
                          (dir / "dev.tsv").string(), "--task", "emotion", "--epochs", "60"});
    REQUIRE(t.code == 0);
    CHECK(t.out.empty());
    const auto report = nlohmann::json::parse(read_file(dir / "tr/train_report.json"));
    CHECK(report["epochs"].size() == 60);
    const auto m = manifest(dir / "tr");
    CHECK(m["config"]["encoder"]["d_model"] == 64);
    CHECK(m["config"]["optimizer"]["lr"] == 1e-3);
    CHECK(m["config"]["batch_size"] == 8);

    REQUIRE(run({"--out", (dir / "p").string(), "predict", "--checkpoint", tr + "/checkpoint.bin", "--vocab", tr + "/vocab.tsv",
                 "--input", (dir / "dev.tsv").string()})
                .code == 0);
    REQUIRE(run({"--out", (dir / "e").string(), "eval", "--predictions", (dir / "p/predictions.tsv").string(), "--gold",
                 (dir / "dev.tsv").string()})
                .code == 0);
    const auto ev = nlohmann::json::parse(read_file(dir / "e/report.json"));
    // The checkpoint is the best dev snapshot, so eval reproduces its score.
    CHECK(ev["macro_f1"].get<double>() == report["best_metric"].get<double>());
    CHECK(ev["macro_f1"].get<double>() >= 0.9);
    CHECK(fs::exists(dir / "e/confusion.csv"));
    CHECK(fs::exists(dir / "e/confusion_normalized.csv"));
    CHECK(fs::exists(dir / "e/histogram.csv"));

    // Predictions are reproducible.
    REQUIRE(run({"--out", (dir / "p2").string(), "predict", "--checkpoint", tr + "/checkpoint.bin", "--vocab", tr + "/vocab.tsv",
                 "--input", (dir / "dev.tsv").string()})
                .code == 0);
    CHECK(read_file(dir / "p/predictions.tsv") == read_file(dir / "p2/predictions.tsv"));

    REQUIRE(run({"--out", (dir / "ens").string(), "ensemble", "--task", "classification", (dir / "p/predictions.tsv").string(),
                 (dir / "p2/predictions.tsv").string()})
                .code == 0);
    const auto ens = std::get<train::ClassificationPredictions>(train::load_predictions(dir / "ens/ensemble.tsv"));
    const auto single = std::get<train::ClassificationPredictions>(train::load_predictions(dir / "p/predictions.tsv"));
    CHECK(ens.labels == single.labels);
    CHECK(fs::exists(dir / "ens/ensemble_scores.tsv"));

    REQUIRE(run({"--out", (dir / "md").string(), "report", "ours=" + (dir / "e/report.json").string()}).code == 0);
    const std::string md = read_file(dir / "md/report.md");
    CHECK(md.find("| ours | ") != std::string::npos);
    CHECK(md.find("| Model | Macro F1 | Accuracy |") != std::string::npos);

    // A mismatched vocabulary is a data error.
    REQUIRE(run({"--out", (dir / "ing2").string(), "ingest", "--input", (dir / "dev.tsv").string()}).code == 0);
    data::save_tsv(testing::keyword_corpus(9, 7, data::Split::train, "z"), dir / "other.tsv");
    REQUIRE(run(with({"--out", (dir / "tr2").string(), "train", "--train", (dir / "other.tsv").string(), "--dev",
                      (dir / "dev.tsv").string(), "--epochs", "0"},
                     kSmallModel))
                .code == 0);
    CHECK(run({"--out", (dir / "p3").string(), "predict", "--checkpoint", tr + "/checkpoint.bin", "--vocab",
               (dir / "tr2/vocab.tsv").string(), "--input", (dir / "dev.tsv").string()})
              .code == cli::kExitData);
}

TEST_CASE("config file precedence") {
    testing::TempDir dir;
    data::save_tsv(testing::level_corpus(14, 1, data::Split::train, "t"), dir / "train.tsv");
    data::save_tsv(testing::level_corpus(7, 2, data::Split::dev, "d"), dir / "dev.tsv");
    write_file(dir / "cfg.json", R"({"task": "multitask", "epochs": 1, "batch_size": 5, "optimizer": {"lr": 0.002}})");
    const auto base = std::vector<std::string>{"--config", (dir / "cfg.json").string(), "--out", (dir / "o").string(), "train",
                                               "--train",  (dir / "train.tsv").string(), "--dev", (dir / "dev.tsv").string()};
    REQUIRE(run(with(with(base, kSmallModel), {"--lr", "0.004"})).code == 0);
    const auto m = manifest(dir / "o");
    CHECK(m["config"]["task"] == "multitask");
    CHECK(m["config"]["epochs"] == 1);
    CHECK(m["config"]["batch_size"] == 5);
    CHECK(m["config"]["optimizer"]["lr"] == 0.004);
    CHECK(m["config"]["snapshot_metric"] == "pearson_avg");
    CHECK(m["seed_defaulted"] == true);

    write_file(dir / "bad.json", R"({"task": "multitask", "epochs": 1, "colour": "red"})");
    CHECK(run(with({"--config", (dir / "bad.json").string(), "--out", (dir / "o2").string(), "train", "--train",
                    (dir / "train.tsv").string(), "--dev", (dir / "dev.tsv").string()},
                   kSmallModel))
              .code == cli::kExitData);
    CHECK(run(with({"--out", (dir / "o3").string(), "train", "--train", (dir / "train.tsv").string(), "--dev",
                    (dir / "dev.tsv").string(), "--task", "multitask"},
                   kSmallModel))
              .code == cli::kExitUsage);  // epochs missing
    CHECK(run(with({"--out", (dir / "o4").string(), "train", "--train", (dir / "train.tsv").string(), "--dev",
                    (dir / "dev.tsv").string(), "--task", "emotion", "--epochs", "1"},
                   kSmallModel))
              .code == cli::kExitData);  // no emotion labels
}

TEST_CASE("regression ensemble of identical files is the identity") {
    testing::TempDir dir;
    const std::string f = (kFixtures / "pred_regression.tsv").string();
    REQUIRE(run({"--out", dir.path().string(), "ensemble", "--task", "regression", f, f}).code == 0);
    CHECK(read_file(dir / "ensemble.tsv") == read_file(f));
    CHECK(run({"--out", dir.path().string(), "ensemble", "--task", "regression", (kFixtures / "pred_emotion.tsv").string()}).code ==
          cli::kExitData);
}

TEST_CASE("eval on fixture predictions has the full key set") {
    testing::TempDir dir;
    for (const char* file : {"pred_regression.tsv", "pred_emotion.tsv"}) {
        REQUIRE(run({"--out", dir.path().string(), "eval", "--predictions", (kFixtures / file).string(), "--gold",
                     (kFixtures / "task_small.tsv").string()})
                    .code == 0);
        const auto j = nlohmann::json::parse(read_file(dir / "report.json"));
        for (const char* key : {"task", "n", "pearson_empathy", "pearson_distress", "pearson_avg", "accuracy", "macro_f1",
                                "per_class_f1", "confusion", "confusion_normalized"}) {
            CHECK(j.contains(key));
        }
        CHECK(j["n"] == 4);
    }
    const auto j = nlohmann::json::parse(read_file(dir / "report.json"));
    CHECK(j["accuracy"].get<double>() == 0.75);
}

TEST_CASE("seed sweep through the CLI") {
    testing::TempDir dir;
    data::save_tsv(testing::keyword_corpus(14, 1, data::Split::train, "t"), dir / "train.tsv");
    data::save_tsv(testing::keyword_corpus(7, 2, data::Split::dev, "d"), dir / "dev.tsv");
    REQUIRE(run(with({"--out", dir.path().string(), "seed-sweep", "--train", (dir / "train.tsv").string(), "--dev",
                      (dir / "dev.tsv").string(), "--epochs", "2", "--seeds", "1,2,3", "--jobs", "2"},
                     kSmallModel))
                .code == 0);
    const auto j = nlohmann::json::parse(read_file(dir / "sweep.json"));
    CHECK(j["entries"].size() == 3);
    CHECK(manifest(dir.path())["seeds"] == nlohmann::json({1, 2, 3}));
    CHECK(run(with({"--out", dir.path().string(), "seed-sweep", "--train", (dir / "train.tsv").string(), "--dev",
                    (dir / "dev.tsv").string(), "--epochs", "2", "--seeds", "1"},
                   kSmallModel))
              .code == cli::kExitUsage);
}

TEST_CASE("the installed executable maps errors to exit codes") {
    testing::TempDir dir;
    CHECK(run_binary("--version") == 0);
    CHECK(run_binary("--no-such-flag") == 2);
    CHECK(run_binary("--out " + dir.path().string() + " ingest --input " + (dir / "missing.tsv").string()) == 1);
    CHECK(run_binary("--out " + dir.path().string() + " ingest --input " + (kFixtures / "task_small.tsv").string()) == 0);
}
