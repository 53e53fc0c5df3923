#include "trire/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "trire/checkpoint.hpp"
#include "trire/errors.hpp"
#include "trire/idx.hpp"

namespace trire {

const char* const kVersion = "0.1.0";

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string resolve_out_dir(const std::string& configured) {
    fs::path p(configured);
    if (p.is_relative()) {
        if (const char* root = std::getenv(kEnvOutRoot)) {
            return (fs::path(root) / p).string();
        }
    }
    return p.string();
}

std::size_t worker_count(std::size_t jobs) {
    std::size_t n = 1;
    if (const char* env = std::getenv(kEnvThreads)) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && v >= 1) n = v;
    }
    return std::min(n, std::max<std::size_t>(1, jobs));
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open for writing");
    f << text;
    if (!f) throw DataError(path + ": write failed");
}

void write_losses_csv(const std::string& path, const RunRecord& record) {
    std::string out = "task,phase,epoch,loss_current,loss_buffer,lr\n";
    for (const auto& row : record.losses) {
        out += std::to_string(row.task) + "," + row.phase + "," + std::to_string(row.epoch) +
               "," + fmt(row.loss_current) + "," + fmt(row.loss_buffer) + "," + fmt(row.lr) +
               "\n";
    }
    write_text(path, out);
}

void write_accuracy_csv(const std::string& path, const RunRecord& record) {
    std::string out = "after_task,task,protocol,accuracy\n";
    const auto& m = record.acc_class_il;
    for (std::size_t i = 0; i < m.num_tasks; ++i) {
        for (std::size_t j = 0; j < m.num_tasks; ++j) {
            if (record.acc_class_il.is_set(i, j)) {
                out += std::to_string(i) + "," + std::to_string(j) + ",class_il," +
                       fmt(record.acc_class_il.at(i, j)) + "\n";
            }
            if (record.acc_task_il.is_set(i, j)) {
                out += std::to_string(i) + "," + std::to_string(j) + ",task_il," +
                       fmt(record.acc_task_il.at(i, j)) + "\n";
            }
        }
    }
    write_text(path, out);
}

void write_masks_csv(const std::string& path, const RunRecord& record) {
    std::string out = "task,layer,neurons_kept,neurons_total,density_task,density_cumulative\n";
    for (const auto& row : record.masks) {
        out += std::to_string(row.task) + "," + std::to_string(row.layer) + "," +
               std::to_string(row.neurons_kept) + "," + std::to_string(row.neurons_total) +
               "," + fmt(row.density_task) + "," + fmt(row.density_cumulative) + "\n";
    }
    write_text(path, out);
}

void write_buffer_csv(const std::string& path, const RunRecord& record) {
    std::string out = "task,class,count,loss_min,loss_p25,loss_p50,loss_p75,loss_max\n";
    for (const auto& row : record.buffer_stats) {
        out += std::to_string(row.task) + "," + std::to_string(row.cls) + "," +
               std::to_string(row.count) + "," + fmt(row.loss_min) + "," +
               fmt(row.loss_p25) + "," + fmt(row.loss_p50) + "," + fmt(row.loss_p75) + "," +
               fmt(row.loss_max) + "\n";
    }
    write_text(path, out);
}

void write_confusion_csv(const std::string& path, const Matrix& confusion) {
    std::string out = "true_task,predicted_task,share\n";
    for (std::size_t i = 0; i < confusion.rows; ++i) {
        for (std::size_t j = 0; j < confusion.cols; ++j) {
            out += std::to_string(i) + "," + std::to_string(j) + "," + fmt(confusion(i, j)) +
                   "\n";
        }
    }
    write_text(path, out);
}

json metrics_json_object(const MetricsReport& m, Method method, std::uint64_t seed) {
    json j;
    j["schema"] = "trire-metrics-v1";
    j["method"] = method_name(method);
    j["seed"] = seed;
    j["class_il"] = m.class_il_avg;
    j["task_il"] = m.task_il_avg;
    j["stability"] = m.stability ? json(*m.stability) : json(nullptr);
    j["plasticity"] = m.plasticity ? json(*m.plasticity) : json(nullptr);
    j["tradeoff"] = m.tradeoff ? json(*m.tradeoff) : json(nullptr);
    j["ece"] = m.ece_value;
    j["evaluated_model"] = m.evaluated_model;
    json confusion = json::array();
    for (std::size_t i = 0; i < m.confusion.rows; ++i) {
        json row = json::array();
        for (std::size_t j2 = 0; j2 < m.confusion.cols; ++j2) row.push_back(m.confusion(i, j2));
        confusion.push_back(row);
    }
    j["task_confusion"] = confusion;
    return j;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd r;
    if (v.empty()) return r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return r;
}

Checkpoint checkpoint_of(const ExperimentConfig& config, const TaskStream& stream,
                         const TriRETrainer* trainer, const MLPNet* baseline_model) {
    Checkpoint ckpt;
    ckpt.input_dim = stream.feature_dim;
    ckpt.hidden = config.hidden;
    ckpt.num_classes = stream.num_classes;
    if (trainer) {
        ckpt.params = trainer->net().snapshot();
        ckpt.ema_params = trainer->ema().net().snapshot();
        ckpt.mask = trainer->state().cumulative;
        Checkpoint::BufferDump dump;
        dump.capacity = trainer->buffer().capacity();
        dump.seen = trainer->buffer().seen();
        dump.slots = trainer->buffer().slots();
        ckpt.buffer = std::move(dump);
    } else {
        ckpt.params = baseline_model->snapshot();
    }
    return ckpt;
}

} // namespace

namespace {

// Fails fast on missing inputs before any directory or compute work.
void preflight(const ExperimentConfig& config) {
    if (config.dataset != DatasetKind::Idx) return;
    for (const std::string* path : {&config.idx_train_images, &config.idx_train_labels,
                                    &config.idx_test_images, &config.idx_test_labels}) {
        if (!fs::exists(*path)) {
            throw DataError(*path + ": dataset file not found");
        }
    }
}

} // namespace

TaskStream build_stream(const ExperimentConfig& config, std::uint64_t seed) {
    LabeledDataset ds;
    if (config.dataset == DatasetKind::Idx) {
        ds.train = load_idx(config.idx_train_images, config.idx_train_labels);
        ds.test = load_idx(config.idx_test_images, config.idx_test_labels);
        if (ds.train.empty()) throw DataError("idx train split is empty");
        ds.feature_dim = ds.train.front().features.size();
        int max_label = 0;
        for (const auto& e : ds.train) max_label = std::max(max_label, e.label);
        for (const auto& e : ds.test) max_label = std::max(max_label, e.label);
        ds.num_classes = static_cast<std::size_t>(max_label) + 1;
    } else {
        ds = synthetic_blobs(config.tasks, config.classes_per_task, config.blobs_dim,
                             config.blobs_train_per_class, config.blobs_test_per_class,
                             config.blobs_separation, seed);
    }
    TaskStream stream = build_split_tasks(ds, config.tasks, config.classes_per_task, seed,
                                          config.task_order);
    if (config.val_fraction > 0.0) {
        carve_validation(stream, config.val_fraction);
    }
    return stream;
}

SeedOutcome run_single_seed(const ExperimentConfig& config, const TaskStream& stream,
                            std::uint64_t seed) {
    SeedOutcome outcome;
    outcome.seed = seed;
    RngState master(seed);
    RngState init_rng = master.fork(1);
    MLPNet net(stream.feature_dim, config.hidden, stream.num_classes, init_rng);

    if (config.method == Method::TriRE) {
        TriRETrainer trainer(std::move(net), stream, config.trire, seed);
        trainer.run();
        outcome.record = trainer.record();
        const MLPNet& eval_net = config.trire.evaluate_working_model
                                     ? trainer.net()
                                     : trainer.ema().net();
        outcome.metrics = metrics_from_record(outcome.record, eval_net, stream);
    } else {
        const BaselineKind kind = config.method == Method::Sgd ? BaselineKind::Sgd
                                  : config.method == Method::Er ? BaselineKind::Er
                                                                : BaselineKind::Joint;
        BaselineResult result =
            run_baseline(kind, std::move(net), stream, config.trire, seed, config.epochs);
        outcome.record = result.record;
        outcome.metrics = metrics_from_record(outcome.record, *result.model, stream);
    }
    return outcome;
}

namespace {

// Runs every seed of a config (optionally in parallel workers) and writes
// the per-seed artifacts. Checkpoints are produced inside the worker so the
// trained model does not outlive it.
std::vector<SeedOutcome> run_all_seeds(const ExperimentConfig& config,
                                       const std::vector<SeedArtifacts>& paths) {
    std::vector<SeedOutcome> outcomes(config.seeds.size());
    std::vector<std::string> errors(config.seeds.size());

    auto run_one = [&](std::size_t i) {
        try {
            const std::uint64_t seed = config.seeds[i];
            const TaskStream stream = build_stream(config, seed);
            SeedOutcome outcome;
            outcome.seed = seed;
            RngState master(seed);
            RngState init_rng = master.fork(1);
            MLPNet net(stream.feature_dim, config.hidden, stream.num_classes, init_rng);

            if (config.method == Method::TriRE) {
                TriRETrainer trainer(std::move(net), stream, config.trire, seed);
                if (paths[i].checkpoint.empty()) {
                    trainer.run();
                } else {
                    // Per-task checkpoints alongside the final one.
                    const auto start = std::chrono::steady_clock::now();
                    for (std::size_t t = 0; t < stream.num_tasks(); ++t) {
                        trainer.train_task(t);
                        trainer.evaluate_after_task(t);
                        const fs::path base(paths[i].checkpoint);
                        fs::path task_path = base.parent_path() /
                                             (base.stem().string() + "_task" +
                                              std::to_string(t) + base.extension().string());
                        save_checkpoint(task_path.string(),
                                        checkpoint_of(config, stream, &trainer, nullptr));
                    }
                    trainer.mutable_record().wall_seconds =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      start)
                            .count();
                }
                outcome.record = trainer.record();
                const MLPNet& eval_net = config.trire.evaluate_working_model
                                             ? trainer.net()
                                             : trainer.ema().net();
                outcome.metrics = metrics_from_record(outcome.record, eval_net, stream);
                if (!paths[i].checkpoint.empty()) {
                    save_checkpoint(paths[i].checkpoint,
                                    checkpoint_of(config, stream, &trainer, nullptr));
                }
            } else {
                const BaselineKind kind = config.method == Method::Sgd ? BaselineKind::Sgd
                                          : config.method == Method::Er ? BaselineKind::Er
                                                                        : BaselineKind::Joint;
                BaselineResult result = run_baseline(kind, std::move(net), stream,
                                                     config.trire, seed, config.epochs);
                outcome.record = result.record;
                outcome.metrics = metrics_from_record(outcome.record, *result.model, stream);
                if (!paths[i].checkpoint.empty()) {
                    save_checkpoint(paths[i].checkpoint,
                                    checkpoint_of(config, stream, nullptr,
                                                  result.model.get()));
                }
            }

            write_losses_csv(paths[i].losses_csv, outcome.record);
            write_accuracy_csv(paths[i].accuracy_csv, outcome.record);
            write_masks_csv(paths[i].masks_csv, outcome.record);
            write_buffer_csv(paths[i].buffer_csv, outcome.record);
            write_confusion_csv(paths[i].confusion_csv, outcome.metrics.confusion);
            write_text(paths[i].metrics_json,
                       metrics_json_object(outcome.metrics, config.method, seed).dump(2) + "\n");
            outcomes[i] = std::move(outcome);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    const std::size_t workers = worker_count(config.seeds.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < config.seeds.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t i = w; i < config.seeds.size(); i += workers) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& err : errors) {
        if (!err.empty()) throw StateError("seed run failed: " + err);
    }
    for (const auto& outcome : outcomes) {
        std::printf("seed %llu: %.1fs\n",
                    static_cast<unsigned long long>(outcome.seed),
                    outcome.record.wall_seconds);
    }
    return outcomes;
}

json aggregate_json_object(const ExperimentConfig& config,
                           const std::vector<SeedOutcome>& outcomes) {
    json j;
    j["schema"] = "trire-aggregate-v1";
    j["method"] = method_name(config.method);
    json seed_list = json::array();
    for (auto s : config.seeds) seed_list.push_back(s);
    j["seeds"] = seed_list;

    auto put = [&](const char* name, auto getter, bool optional_metric) {
        std::vector<double> values;
        for (const auto& o : outcomes) {
            auto v = getter(o.metrics);
            if (optional_metric && !v.has_value()) return;
            if constexpr (std::is_same_v<decltype(v), std::optional<double>>) {
                values.push_back(*v);
            }
        }
        const MeanStd ms = mean_std(values);
        j["metrics"][name] = {{"mean", ms.mean}, {"std", ms.stddev}};
    };
    put("class_il", [](const MetricsReport& m) { return std::optional<double>(m.class_il_avg); }, false);
    put("task_il", [](const MetricsReport& m) { return std::optional<double>(m.task_il_avg); }, false);
    put("ece", [](const MetricsReport& m) { return std::optional<double>(m.ece_value); }, false);
    put("stability", [](const MetricsReport& m) { return m.stability; }, true);
    put("plasticity", [](const MetricsReport& m) { return m.plasticity; }, true);
    put("tradeoff", [](const MetricsReport& m) { return m.tradeoff; }, true);
    return j;
}

RunManifest make_manifest(const ExperimentConfig& config) {
    RunManifest manifest;
    manifest.out_dir = resolve_out_dir(config.out_dir);
    manifest.version = kVersion;
    manifest.created_utc = utc_now();
    manifest.config_text = config.resolved_text();
    manifest.path = (fs::path(manifest.out_dir) / "manifest.json").string();
    manifest.aggregate_json = (fs::path(manifest.out_dir) / "aggregate.json").string();
    for (std::uint64_t seed : config.seeds) {
        SeedArtifacts a;
        a.seed = seed;
        a.dir = (fs::path(manifest.out_dir) / ("seed_" + std::to_string(seed))).string();
        a.losses_csv = a.dir + "/losses.csv";
        a.accuracy_csv = a.dir + "/accuracy.csv";
        a.masks_csv = a.dir + "/masks.csv";
        a.buffer_csv = a.dir + "/buffer.csv";
        a.confusion_csv = a.dir + "/confusion.csv";
        a.metrics_json = a.dir + "/metrics.json";
        if (config.save_checkpoints) a.checkpoint = a.dir + "/model.ckpt";
        manifest.seeds.push_back(std::move(a));
    }
    return manifest;
}

void write_manifest(const RunManifest& manifest) {
    json j;
    j["schema"] = "trire-manifest-v1";
    j["version"] = manifest.version;
    j["created_utc"] = manifest.created_utc;
    j["config"] = manifest.config_text;
    json seeds = json::array();
    for (const auto& a : manifest.seeds) {
        json s;
        s["seed"] = a.seed;
        s["dir"] = a.dir;
        s["losses_csv"] = a.losses_csv;
        s["accuracy_csv"] = a.accuracy_csv;
        s["masks_csv"] = a.masks_csv;
        s["buffer_csv"] = a.buffer_csv;
        s["confusion_csv"] = a.confusion_csv;
        s["metrics_json"] = a.metrics_json;
        if (!a.checkpoint.empty()) s["checkpoint"] = a.checkpoint;
        seeds.push_back(s);
    }
    j["seeds"] = seeds;
    j["aggregate_json"] = manifest.aggregate_json;
    write_text(manifest.path, j.dump(2) + "\n");
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    preflight(config);
    ExperimentResult result;
    result.manifest = make_manifest(config);
    fs::create_directories(result.manifest.out_dir);
    for (const auto& a : result.manifest.seeds) fs::create_directories(a.dir);
    write_manifest(result.manifest);

    result.outcomes = run_all_seeds(config, result.manifest.seeds);
    write_text(result.manifest.aggregate_json,
               aggregate_json_object(config, result.outcomes).dump(2) + "\n");
    return result;
}

namespace {

// Shared driver for the sweep commands: each variant is an independent
// config; rows come back in (variant, seed) order.
SweepResult run_variants(const ExperimentConfig& base,
                         const std::vector<std::pair<std::string, ExperimentConfig>>& variants,
                         const std::string& csv_name, const std::string& label_column) {
    SweepResult result;
    preflight(base);
    const std::string out_dir = resolve_out_dir(base.out_dir);
    fs::create_directories(out_dir);
    result.csv_path = (fs::path(out_dir) / csv_name).string();

    struct Job {
        std::size_t variant;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (std::uint64_t seed : base.seeds) jobs.push_back({v, seed});
    }
    std::vector<SweepRow> rows(jobs.size());
    std::vector<std::string> errors(jobs.size());
    auto run_job = [&](std::size_t i) {
        try {
            const auto& [label, cfg] = variants[jobs[i].variant];
            const TaskStream stream = build_stream(cfg, jobs[i].seed);
            const SeedOutcome outcome = run_single_seed(cfg, stream, jobs[i].seed);
            rows[i] = {label, jobs[i].seed, outcome.metrics.class_il_avg,
                       outcome.metrics.task_il_avg};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    const std::size_t workers = worker_count(jobs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t i = w; i < jobs.size(); i += workers) run_job(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& err : errors) {
        if (!err.empty()) throw StateError("sweep run failed: " + err);
    }

    std::string csv = label_column + ",seed,class_il,task_il\n";
    for (const auto& row : rows) {
        csv += row.label + "," + std::to_string(row.seed) + "," + fmt(row.class_il) + "," +
               fmt(row.task_il) + "\n";
    }
    write_text(result.csv_path, csv);
    result.rows = std::move(rows);
    return result;
}

} // namespace

SweepResult sweep_rewind(const ExperimentConfig& config, std::vector<double> percentiles) {
    for (double p : percentiles) {
        if (p <= 0.0 || p >= 1.0) {
            throw ConfigError("sweep-rewind: percentiles must lie in (0,1)");
        }
    }
    std::sort(percentiles.begin(), percentiles.end());
    percentiles.erase(std::unique(percentiles.begin(), percentiles.end()), percentiles.end());

    std::vector<std::pair<std::string, ExperimentConfig>> variants;
    for (double p : percentiles) {
        ExperimentConfig cfg = config;
        cfg.method = Method::TriRE;
        cfg.trire.rewind_percentile = p;
        cfg.finalize();
        variants.emplace_back(fmt(p), cfg);
    }
    return run_variants(config, variants, "rewind_sweep.csv", "percentile");
}

SweepResult sweep_ablation(const ExperimentConfig& config) {
    // Phase grid rows that are feasible: the first phase is always on.
    const struct {
        const char* label;
        bool revise;
        bool rewind;
    } rows[] = {
        {"retain", false, false},
        {"retain+revise", true, false},
        {"retain+rewind", false, true},
        {"full", true, true},
    };
    std::vector<std::pair<std::string, ExperimentConfig>> variants;
    for (const auto& row : rows) {
        ExperimentConfig cfg = config;
        cfg.method = Method::TriRE;
        cfg.trire.revise_on = row.revise;
        cfg.trire.rewind_on = row.rewind;
        cfg.finalize();
        variants.emplace_back(row.label, cfg);
    }
    return run_variants(config, variants, "ablation.csv", "phases");
}

SweepResult sweep_pruning(const ExperimentConfig& config) {
    const std::pair<const char*, PruneCriterion> criteria[] = {
        {"magnitude", PruneCriterion::Magnitude},
        {"fisher", PruneCriterion::Fisher},
        {"cwi", PruneCriterion::CWI},
    };
    std::vector<std::pair<std::string, ExperimentConfig>> variants;
    for (const auto& [label, criterion] : criteria) {
        ExperimentConfig cfg = config;
        cfg.method = Method::TriRE;
        cfg.trire.prune_criterion = criterion;
        cfg.finalize();
        variants.emplace_back(label, cfg);
    }
    return run_variants(config, variants, "pruning.csv", "criterion");
}

MetricsReport evaluate_checkpoint_file(const std::string& checkpoint_path,
                                       const ExperimentConfig& config) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const bool use_ema = !config.trire.evaluate_working_model && ckpt.ema_params.has_value();
    MLPNet net = net_from_checkpoint(ckpt, use_ema);
    const TaskStream stream = build_stream(config, config.seeds.front());
    if (stream.feature_dim != net.input_dim()) {
        throw DataError("checkpoint input width does not match the configured dataset");
    }

    MetricsReport m;
    const auto pass_class =
        evaluate_detailed(net, stream, Protocol::ClassIL, stream.num_tasks() - 1);
    const auto task_acc = evaluate(net, stream, Protocol::TaskIL, stream.num_tasks() - 1);
    double class_sum = 0.0, task_sum = 0.0;
    for (double a : pass_class.per_task_accuracy) class_sum += a;
    for (double a : task_acc) task_sum += a;
    m.class_il_avg = class_sum / static_cast<double>(stream.num_tasks());
    m.task_il_avg = task_sum / static_cast<double>(stream.num_tasks());
    m.ece_value = ece(pass_class.confidences, pass_class.correct, config.ece_bins);
    m.confusion = task_confusion(net, stream);
    m.evaluated_model = use_ema ? "ema" : "working";
    return m;
}

std::string inspect_buffer_file(const std::string& checkpoint_path) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    json j;
    j["schema"] = "trire-buffer-v1";
    if (!ckpt.buffer) {
        j["present"] = false;
        return j.dump(2) + "\n";
    }
    const auto& dump = *ckpt.buffer;
    j["present"] = true;
    j["capacity"] = dump.capacity;
    j["seen"] = dump.seen;
    j["size"] = dump.slots.size();
    std::map<int, std::size_t> counts;
    std::map<int, std::size_t> task_counts;
    std::vector<double> losses;
    for (const auto& slot : dump.slots) {
        counts[slot.example.label] += 1;
        task_counts[slot.task_id] += 1;
        losses.push_back(slot.stored_loss);
    }
    json class_hist;
    for (const auto& [cls, n] : counts) class_hist[std::to_string(cls)] = n;
    j["class_histogram"] = class_hist;
    json task_hist;
    for (const auto& [task, n] : task_counts) task_hist[std::to_string(task)] = n;
    j["task_histogram"] = task_hist;
    if (!losses.empty()) {
        std::sort(losses.begin(), losses.end());
        auto q = [&](double p) {
            return losses[std::min(losses.size() - 1,
                                   static_cast<std::size_t>(p * static_cast<double>(losses.size())))];
        };
        j["loss_quantiles"] = {{"min", losses.front()},
                               {"p25", q(0.25)},
                               {"p50", q(0.5)},
                               {"p75", q(0.75)},
                               {"max", losses.back()}};
    }
    return j.dump(2) + "\n";
}

void gen_digits_files(const std::string& dir, std::size_t train_per_class,
                      std::size_t test_per_class, std::uint64_t seed) {
    const LabeledDataset ds = synthetic_digits(train_per_class, test_per_class, seed);
    fs::create_directories(dir);
    auto to_idx = [](const std::vector<Example>& examples) {
        IdxImages images;
        IdxLabels labels;
        images.count = static_cast<std::uint32_t>(examples.size());
        images.rows = 28;
        images.cols = 28;
        labels.count = images.count;
        for (const auto& e : examples) {
            for (double v : e.features) {
                images.pixels.push_back(
                    static_cast<std::uint8_t>(std::lround(v * 255.0)));
            }
            labels.labels.push_back(static_cast<std::uint8_t>(e.label));
        }
        return std::pair(images, labels);
    };
    auto [train_images, train_labels] = to_idx(ds.train);
    auto [test_images, test_labels] = to_idx(ds.test);
    save_idx_images((fs::path(dir) / "train-images.idx3").string(), train_images);
    save_idx_labels((fs::path(dir) / "train-labels.idx1").string(), train_labels);
    save_idx_images((fs::path(dir) / "test-images.idx3").string(), test_images);
    save_idx_labels((fs::path(dir) / "test-labels.idx1").string(), test_labels);
}

std::string metrics_to_json(const MetricsReport& metrics, Method method, std::uint64_t seed) {
    return metrics_json_object(metrics, method, seed).dump(2) + "\n";
}

} // namespace trire
