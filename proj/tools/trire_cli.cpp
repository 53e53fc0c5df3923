// Experiment runner for the TriRE engine. Talks to the engine exclusively
// through the C API in trire/trire.h; exit codes mirror trire_status
// (0 ok, 2 config error, 3 data error, 4 runtime failure).

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trire/trire.h"

namespace {

int fail(trire_status status) {
    std::fprintf(stderr, "error: %s\n", trire_last_error());
    return static_cast<int>(status);
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seeds;
    std::string out;
    std::string method;
    std::string buffer;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "Config file (key=value lines)");
    cmd->add_option("--set", opts.sets, "Override a config key, e.g. --set eta=0.001");
    cmd->add_option("--seed", opts.seeds, "Seed list override, e.g. 0,1,2");
    cmd->add_option("--out", opts.out, "Output directory override");
    cmd->add_option("--method", opts.method, "Method override: trire|sgd|er|joint");
    cmd->add_option("--buffer", opts.buffer, "Buffer capacity override");
}

// Builds the config from file/defaults plus flag overrides. Returns OK or
// the failing status with last_error set.
trire_status make_config(const CommonOpts& opts, trire_config** out) {
    trire_status st = opts.config_path.empty()
                          ? trire_config_create(out)
                          : trire_config_parse_file(opts.config_path.c_str(), out);
    if (st != TRIRE_OK) return st;

    auto set = [&](const std::string& key, const std::string& value) {
        return trire_config_set(*out, key.c_str(), value.c_str());
    };
    for (const auto& kv : opts.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            st = set(kv, "");
        } else {
            st = set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (st != TRIRE_OK) return st;
    }
    if (!opts.seeds.empty() && (st = set("seeds", opts.seeds)) != TRIRE_OK) return st;
    if (!opts.out.empty() && (st = set("out", opts.out)) != TRIRE_OK) return st;
    if (!opts.method.empty() && (st = set("method", opts.method)) != TRIRE_OK) return st;
    if (!opts.buffer.empty() && (st = set("buffer", opts.buffer)) != TRIRE_OK) return st;
    return trire_config_validate(*out);
}

std::vector<double> parse_percentiles(const std::string& text) {
    std::vector<double> out;
    std::string part;
    for (char ch : text + ",") {
        if (ch == ',') {
            if (!part.empty()) out.push_back(std::stod(part));
            part.clear();
        } else {
            part += ch;
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TriRE continual-learning engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(trire_version()));

    CommonOpts run_opts, rewind_opts, ablation_opts, pruning_opts, eval_opts;

    auto* run_cmd = app.add_subcommand("run", "Run one experiment (all seeds)");
    add_common(run_cmd, run_opts);

    auto* rewind_cmd = app.add_subcommand("sweep-rewind", "Sweep the rewind percentile");
    add_common(rewind_cmd, rewind_opts);
    std::string percentiles = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
    rewind_cmd->add_option("--percentiles", percentiles, "Comma-separated list in (0,1)");

    auto* ablation_cmd = app.add_subcommand("sweep-ablation", "Phase on/off grid");
    add_common(ablation_cmd, ablation_opts);

    auto* pruning_cmd = app.add_subcommand("sweep-pruning",
                                           "Compare magnitude/fisher/cwi pruning");
    add_common(pruning_cmd, pruning_opts);

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a stored checkpoint");
    add_common(eval_cmd, eval_opts);
    std::string eval_checkpoint;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();

    auto* inspect_cmd = app.add_subcommand("inspect-buffer",
                                           "Report a checkpoint's rehearsal buffer");
    std::string inspect_checkpoint;
    inspect_cmd->add_option("--checkpoint", inspect_checkpoint, "Checkpoint file")
        ->required();

    auto* gen_cmd = app.add_subcommand("gen-digits",
                                       "Render the procedural digit corpus to IDX files");
    std::string gen_dir = "digits";
    std::uint32_t gen_train = 1200, gen_test = 400;
    std::uint64_t gen_seed = 0;
    gen_cmd->add_option("--out", gen_dir, "Output directory");
    gen_cmd->add_option("--train-per-class", gen_train, "Training images per digit");
    gen_cmd->add_option("--test-per-class", gen_test, "Test images per digit");
    gen_cmd->add_option("--gen-seed", gen_seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    trire_status st = TRIRE_OK;
    char* text = nullptr;

    if (run_cmd->parsed()) {
        trire_config* cfg = nullptr;
        if ((st = make_config(run_opts, &cfg)) != TRIRE_OK) return fail(st);
        st = trire_run(cfg, &text);
        trire_config_free(cfg);
        if (st != TRIRE_OK) return fail(st);
        std::printf("manifest: %s\n", text);
    } else if (rewind_cmd->parsed()) {
        trire_config* cfg = nullptr;
        if ((st = make_config(rewind_opts, &cfg)) != TRIRE_OK) return fail(st);
        const std::vector<double> p = parse_percentiles(percentiles);
        st = trire_sweep_rewind(cfg, p.data(), p.size(), &text);
        trire_config_free(cfg);
        if (st != TRIRE_OK) return fail(st);
        std::printf("sweep: %s\n", text);
    } else if (ablation_cmd->parsed()) {
        trire_config* cfg = nullptr;
        if ((st = make_config(ablation_opts, &cfg)) != TRIRE_OK) return fail(st);
        st = trire_sweep_ablation(cfg, &text);
        trire_config_free(cfg);
        if (st != TRIRE_OK) return fail(st);
        std::printf("sweep: %s\n", text);
    } else if (pruning_cmd->parsed()) {
        trire_config* cfg = nullptr;
        if ((st = make_config(pruning_opts, &cfg)) != TRIRE_OK) return fail(st);
        st = trire_sweep_pruning(cfg, &text);
        trire_config_free(cfg);
        if (st != TRIRE_OK) return fail(st);
        std::printf("sweep: %s\n", text);
    } else if (eval_cmd->parsed()) {
        trire_config* cfg = nullptr;
        if ((st = make_config(eval_opts, &cfg)) != TRIRE_OK) return fail(st);
        st = trire_evaluate_checkpoint(cfg, eval_checkpoint.c_str(), &text);
        trire_config_free(cfg);
        if (st != TRIRE_OK) return fail(st);
        std::printf("%s", text);
    } else if (inspect_cmd->parsed()) {
        st = trire_inspect_buffer(inspect_checkpoint.c_str(), &text);
        if (st != TRIRE_OK) return fail(st);
        std::printf("%s", text);
    } else if (gen_cmd->parsed()) {
        st = trire_gen_digits(gen_dir.c_str(), gen_train, gen_test, gen_seed);
        if (st != TRIRE_OK) return fail(st);
        std::printf("digits written to %s\n", gen_dir.c_str());
    }

    trire_string_free(text);
    return 0;
}
