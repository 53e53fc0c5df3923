#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include <json.hpp>

#include "trire/config.hpp"
#include "trire/errors.hpp"
#include "trire/experiment.hpp"
#include "trire/idx.hpp"

using namespace trire;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        path = fs::temp_directory_path() /
               (std::string("trire_exp_") + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

ExperimentConfig tiny_config(const std::string& out) {
    ExperimentConfig c = parse_config_text(
        "tasks = 2\n"
        "classes_per_task = 2\n"
        "blobs_dim = 8\n"
        "blobs_train_per_class = 16\n"
        "blobs_test_per_class = 8\n"
        "hidden = 12\n"
        "epochs = 3\n"
        "batch = 8\n"
        "buffer = 16\n"
        "lambda = 0.5\n"
        "mu = 0.95\n"
        "zeta = 0.5\n"
        "seeds = 1,2\n");
    c.out_dir = out;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

// Structural check mirroring schemas/metrics_report.schema.json.
void check_metrics_schema(const json& j) {
    REQUIRE(j.is_object());
    CHECK(j.at("schema") == "trire-metrics-v1");
    CHECK(j.at("method").is_string());
    CHECK(j.at("seed").is_number_unsigned());
    CHECK(j.at("class_il").is_number());
    CHECK(j.at("task_il").is_number());
    CHECK(j.at("ece").is_number());
    CHECK(j.at("evaluated_model").is_string());
    for (const char* key : {"stability", "plasticity", "tradeoff"}) {
        CHECK((j.at(key).is_number() || j.at(key).is_null()));
    }
    REQUIRE(j.at("task_confusion").is_array());
    for (const auto& row : j.at("task_confusion")) {
        REQUIRE(row.is_array());
        double sum = 0.0;
        for (const auto& v : row) sum += v.get<double>();
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

} // namespace

TEST_CASE("run_experiment writes the declared artifacts") {
    TempDir tmp("run");
    ExperimentConfig config = tiny_config(tmp.file("out"));
    ExperimentResult result = run_experiment(config);

    CHECK(fs::exists(result.manifest.path));
    CHECK(fs::exists(result.manifest.aggregate_json));
    REQUIRE(result.manifest.seeds.size() == 2);
    for (const auto& a : result.manifest.seeds) {
        CHECK(fs::exists(a.losses_csv));
        CHECK(fs::exists(a.accuracy_csv));
        CHECK(fs::exists(a.masks_csv));
        CHECK(fs::exists(a.buffer_csv));
        CHECK(fs::exists(a.confusion_csv));
        CHECK(fs::exists(a.metrics_json));
    }
    check_metrics_schema(json::parse(slurp(result.manifest.seeds[0].metrics_json)));

    // The manifest went out before training: its declared paths match.
    const json manifest = json::parse(slurp(result.manifest.path));
    CHECK(manifest.at("schema") == "trire-manifest-v1");
    CHECK(manifest.at("seeds").size() == 2);
}

TEST_CASE("reruns of the same config produce byte-identical metric files") {
    TempDir tmp("det");
    ExperimentConfig c1 = tiny_config(tmp.file("a"));
    ExperimentConfig c2 = tiny_config(tmp.file("b"));
    ExperimentResult r1 = run_experiment(c1);
    ExperimentResult r2 = run_experiment(c2);
    REQUIRE(r1.manifest.seeds.size() == r2.manifest.seeds.size());
    for (std::size_t i = 0; i < r1.manifest.seeds.size(); ++i) {
        CHECK(slurp(r1.manifest.seeds[i].losses_csv) ==
              slurp(r2.manifest.seeds[i].losses_csv));
        CHECK(slurp(r1.manifest.seeds[i].accuracy_csv) ==
              slurp(r2.manifest.seeds[i].accuracy_csv));
        CHECK(slurp(r1.manifest.seeds[i].masks_csv) ==
              slurp(r2.manifest.seeds[i].masks_csv));
        CHECK(slurp(r1.manifest.seeds[i].buffer_csv) ==
              slurp(r2.manifest.seeds[i].buffer_csv));
        CHECK(slurp(r1.manifest.seeds[i].confusion_csv) ==
              slurp(r2.manifest.seeds[i].confusion_csv));
        CHECK(slurp(r1.manifest.seeds[i].metrics_json) ==
              slurp(r2.manifest.seeds[i].metrics_json));
    }
    CHECK(slurp(r1.manifest.aggregate_json) == slurp(r2.manifest.aggregate_json));
}

TEST_CASE("aggregate holds mean and std per metric") {
    TempDir tmp("agg");
    ExperimentConfig config = tiny_config(tmp.file("out"));
    ExperimentResult result = run_experiment(config);
    const json agg = json::parse(slurp(result.manifest.aggregate_json));
    REQUIRE(agg.at("metrics").contains("class_il"));
    const double mean = agg["metrics"]["class_il"]["mean"].get<double>();
    const double got = (result.outcomes[0].metrics.class_il_avg +
                        result.outcomes[1].metrics.class_il_avg) /
                       2.0;
    CHECK(mean == doctest::Approx(got).epsilon(1e-12));
    CHECK(agg["metrics"]["class_il"].contains("std"));
}

TEST_CASE("missing idx files fail before any output is created") {
    TempDir tmp("pre");
    ExperimentConfig config = tiny_config(tmp.file("out"));
    config.dataset = DatasetKind::Idx;
    config.idx_train_images = tmp.file("nope-img");
    config.idx_train_labels = tmp.file("nope-lab");
    config.idx_test_images = tmp.file("nope-img2");
    config.idx_test_labels = tmp.file("nope-lab2");
    CHECK_THROWS_AS(run_experiment(config), DataError);
    CHECK_FALSE(fs::exists(tmp.file("out")));
}

TEST_CASE("rewind sweep: dedup, csv shape, rows per seed") {
    TempDir tmp("rw");
    ExperimentConfig config = tiny_config(tmp.file("out"));
    config.seeds = {1};
    SweepResult sweep = sweep_rewind(config, {0.3, 0.7, 0.3, 0.7});
    CHECK(sweep.rows.size() == 2); // duplicates removed, one seed
    const std::string csv = slurp(sweep.csv_path);
    CHECK(csv.rfind("percentile,seed,class_il,task_il\n", 0) == 0);
    CHECK_THROWS_AS(sweep_rewind(config, {1.5}), ConfigError);
}

TEST_CASE("ablation emits exactly four configurations sharing seeds") {
    TempDir tmp("ab");
    ExperimentConfig config = tiny_config(tmp.file("out"));
    config.seeds = {1, 2};
    SweepResult sweep = sweep_ablation(config);
    CHECK(sweep.rows.size() == 8);
    std::set<std::string> labels;
    std::set<std::uint64_t> seeds;
    for (const auto& row : sweep.rows) {
        labels.insert(row.label);
        seeds.insert(row.seed);
    }
    CHECK(labels == std::set<std::string>{"retain", "retain+revise", "retain+rewind", "full"});
    CHECK(seeds == std::set<std::uint64_t>{1, 2});
}

TEST_CASE("pruning sweep emits the three criteria") {
    TempDir tmp("pr");
    ExperimentConfig config = tiny_config(tmp.file("out"));
    config.seeds = {1};
    SweepResult sweep = sweep_pruning(config);
    REQUIRE(sweep.rows.size() == 3);
    std::set<std::string> labels;
    for (const auto& row : sweep.rows) labels.insert(row.label);
    CHECK(labels == std::set<std::string>{"magnitude", "fisher", "cwi"});
}

TEST_CASE("gen-digits writes loadable idx files that round trip") {
    TempDir tmp("gen");
    gen_digits_files(tmp.file("digits"), 4, 2, 7);
    const std::string img = tmp.file("digits") + "/train-images.idx3";
    const std::string lab = tmp.file("digits") + "/train-labels.idx1";
    auto examples = load_idx(img, lab);
    CHECK(examples.size() == 40);
    CHECK(examples[0].features.size() == 784);

    // Regenerating with the same seed is byte-identical.
    gen_digits_files(tmp.file("digits2"), 4, 2, 7);
    CHECK(slurp(img) == slurp(tmp.file("digits2") + "/train-images.idx3"));
}

TEST_CASE("checkpoints can be evaluated and inspected") {
    TempDir tmp("ck");
    ExperimentConfig config = tiny_config(tmp.file("out"));
    config.seeds = {1};
    config.save_checkpoints = true;
    ExperimentResult result = run_experiment(config);
    const std::string ckpt = result.manifest.seeds[0].checkpoint;
    REQUIRE(fs::exists(ckpt));

    MetricsReport metrics = evaluate_checkpoint_file(ckpt, config);
    CHECK(metrics.evaluated_model == "ema");
    CHECK(metrics.class_il_avg >= 0.0);
    CHECK(metrics.class_il_avg <= 1.0);
    // The stored EMA model must score exactly what the run reported.
    CHECK(metrics.class_il_avg ==
          doctest::Approx(result.outcomes[0].metrics.class_il_avg).epsilon(1e-12));

    const json report = json::parse(inspect_buffer_file(ckpt));
    CHECK(report.at("present") == true);
    CHECK(report.at("capacity") == 16);
    CHECK(report.at("size").get<std::size_t>() <= 16);
    CHECK(report.contains("class_histogram"));
    CHECK(report.contains("loss_quantiles"));
}

TEST_CASE("out-root environment variable prefixes relative out dirs") {
    TempDir tmp("env");
    setenv(kEnvOutRoot, tmp.path.c_str(), 1);
    ExperimentConfig config = tiny_config("rooted_out");
    config.seeds = {1};
    ExperimentResult result = run_experiment(config);
    unsetenv(kEnvOutRoot);
    CHECK(result.manifest.out_dir.rfind(tmp.path.string(), 0) == 0);
    CHECK(fs::exists(result.manifest.path));
}

TEST_CASE("worker threads do not change the artifacts") {
    TempDir tmp("thr");
    ExperimentConfig c1 = tiny_config(tmp.file("serial"));
    ExperimentResult r1 = run_experiment(c1);

    setenv(kEnvThreads, "2", 1);
    ExperimentConfig c2 = tiny_config(tmp.file("parallel"));
    ExperimentResult r2 = run_experiment(c2);
    unsetenv(kEnvThreads);

    for (std::size_t i = 0; i < r1.manifest.seeds.size(); ++i) {
        CHECK(slurp(r1.manifest.seeds[i].metrics_json) ==
              slurp(r2.manifest.seeds[i].metrics_json));
        CHECK(slurp(r1.manifest.seeds[i].losses_csv) ==
              slurp(r2.manifest.seeds[i].losses_csv));
    }
}
