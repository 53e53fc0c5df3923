#include "trire/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "trire/errors.hpp"

namespace trire {

namespace {

std::string where(int line) {
    return line > 0 ? "line " + std::to_string(line) + ": " : std::string();
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_real(const std::string& key, const std::string& v, int line) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty()) {
        throw ConfigError(where(line) + key + ": expected a number, got '" + v + "'");
    }
    return x;
}

std::uint64_t parse_count(const std::string& key, const std::string& v, int line) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty() || v[0] == '-') {
        throw ConfigError(where(line) + key + ": expected a non-negative integer, got '" +
                          v + "'");
    }
    return x;
}

bool parse_bool(const std::string& key, const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(where(line) + key + ": expected a boolean, got '" + v + "'");
}

template <typename T, typename Fn>
std::vector<T> parse_list(const std::string& key, const std::string& v, int line, Fn item) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        out.push_back(item(key, part, line));
    }
    if (out.empty()) {
        throw ConfigError(where(line) + key + ": expected a comma-separated list");
    }
    return out;
}

void check_unit_open(const std::string& key, double v, int line) {
    if (v <= 0.0 || v >= 1.0) {
        throw ConfigError(where(line) + key + ": must lie in (0,1), got " +
                          std::to_string(v));
    }
}

void check_unit_half_open(const std::string& key, double v, int line) {
    if (v <= 0.0 || v > 1.0) {
        throw ConfigError(where(line) + key + ": must lie in (0,1], got " +
                          std::to_string(v));
    }
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::TriRE: return "trire";
        case Method::Sgd: return "sgd";
        case Method::Er: return "er";
        case Method::Joint: return "joint";
    }
    return "?";
}

void apply_config_key(ExperimentConfig& c, const std::string& key, const std::string& value,
                      int line) {
    if (key == "method") {
        if (value == "trire") c.method = Method::TriRE;
        else if (value == "sgd") c.method = Method::Sgd;
        else if (value == "er") c.method = Method::Er;
        else if (value == "joint") c.method = Method::Joint;
        else throw ConfigError(where(line) + "method: unknown value '" + value + "'");
    } else if (key == "dataset") {
        if (value == "blobs") c.dataset = DatasetKind::Blobs;
        else if (value == "idx") c.dataset = DatasetKind::Idx;
        else throw ConfigError(where(line) + "dataset: unknown value '" + value + "'");
    } else if (key == "idx_train_images") {
        c.idx_train_images = value;
    } else if (key == "idx_train_labels") {
        c.idx_train_labels = value;
    } else if (key == "idx_test_images") {
        c.idx_test_images = value;
    } else if (key == "idx_test_labels") {
        c.idx_test_labels = value;
    } else if (key == "blobs_dim") {
        c.blobs_dim = parse_count(key, value, line);
    } else if (key == "blobs_train_per_class") {
        c.blobs_train_per_class = parse_count(key, value, line);
    } else if (key == "blobs_test_per_class") {
        c.blobs_test_per_class = parse_count(key, value, line);
    } else if (key == "blobs_separation") {
        c.blobs_separation = parse_real(key, value, line);
        if (c.blobs_separation <= 0.0) {
            throw ConfigError(where(line) + "blobs_separation: must be > 0");
        }
    } else if (key == "tasks") {
        c.tasks = parse_count(key, value, line);
    } else if (key == "classes_per_task") {
        c.classes_per_task = parse_count(key, value, line);
    } else if (key == "hidden") {
        c.hidden = parse_list<std::size_t>(key, value, line, [](auto& k, auto& v2, int l) {
            return static_cast<std::size_t>(parse_count(k, v2, l));
        });
    } else if (key == "epochs") {
        c.epochs = parse_count(key, value, line);
    } else if (key == "task_order") {
        if (value == "ascending") c.task_order = TaskOrder::Ascending;
        else if (value == "shuffled") c.task_order = TaskOrder::Shuffled;
        else throw ConfigError(where(line) + "task_order: unknown value '" + value + "'");
    } else if (key == "val_fraction") {
        c.val_fraction = parse_real(key, value, line);
        if (c.val_fraction < 0.0 || c.val_fraction >= 1.0) {
            throw ConfigError(where(line) + "val_fraction: must lie in [0,1)");
        }
    } else if (key == "eta") {
        c.trire.eta = parse_real(key, value, line);
    } else if (key == "eta_prime") {
        c.trire.eta_prime = parse_real(key, value, line);
    } else if (key == "lambda") {
        c.trire.lambda = parse_real(key, value, line);
    } else if (key == "lambda_cr") {
        c.trire.lambda_cr = parse_real(key, value, line);
    } else if (key == "gamma") {
        c.trire.cwi.gamma = parse_real(key, value, line);
        check_unit_half_open(key, c.trire.cwi.gamma, line);
    } else if (key == "kappa") {
        c.trire.cwi.kappa = parse_real(key, value, line);
        check_unit_half_open(key, c.trire.cwi.kappa, line);
    } else if (key == "alpha") {
        c.trire.cwi.alpha = parse_real(key, value, line);
    } else if (key == "beta") {
        c.trire.cwi.beta = parse_real(key, value, line);
    } else if (key == "score_sample_cap") {
        c.trire.cwi.score_sample_cap = parse_count(key, value, line);
    } else if (key == "mu") {
        c.trire.mu = parse_real(key, value, line);
        check_unit_open(key, c.trire.mu, line);
    } else if (key == "zeta") {
        c.trire.zeta = parse_real(key, value, line);
        if (c.trire.zeta < 0.0 || c.trire.zeta > 1.0) {
            throw ConfigError(where(line) + "zeta: must lie in [0,1]");
        }
    } else if (key == "rewind_percentile") {
        c.trire.rewind_percentile = parse_real(key, value, line);
        check_unit_open(key, c.trire.rewind_percentile, line);
    } else if (key == "batch") {
        c.trire.batch_size = parse_count(key, value, line);
        if (c.trire.batch_size < 1) {
            throw ConfigError(where(line) + "batch: must be >= 1");
        }
    } else if (key == "buffer") {
        c.trire.buffer_capacity = parse_count(key, value, line);
    } else if (key == "revise_on") {
        c.trire.revise_on = parse_bool(key, value, line);
    } else if (key == "rewind_on") {
        c.trire.rewind_on = parse_bool(key, value, line);
    } else if (key == "kwta_mode") {
        if (value == "deterministic") c.trire.dropout_mode = DropoutMode::Deterministic;
        else if (value == "bernoulli") c.trire.dropout_mode = DropoutMode::Bernoulli;
        else throw ConfigError(where(line) + "kwta_mode: unknown value '" + value + "'");
    } else if (key == "pruning") {
        if (value == "cwi") c.trire.prune_criterion = PruneCriterion::CWI;
        else if (value == "magnitude") c.trire.prune_criterion = PruneCriterion::Magnitude;
        else if (value == "fisher") c.trire.prune_criterion = PruneCriterion::Fisher;
        else throw ConfigError(where(line) + "pruning: unknown value '" + value + "'");
    } else if (key == "eval_model") {
        if (value == "ema") c.trire.evaluate_working_model = false;
        else if (value == "working") c.trire.evaluate_working_model = true;
        else throw ConfigError(where(line) + "eval_model: unknown value '" + value + "'");
    } else if (key == "seeds") {
        c.seeds = parse_list<std::uint64_t>(key, value, line, [](auto& k, auto& v2, int l) {
            return parse_count(k, v2, l);
        });
    } else if (key == "out") {
        c.out_dir = value;
    } else if (key == "save_checkpoints") {
        c.save_checkpoints = parse_bool(key, value, line);
    } else if (key == "ece_bins") {
        c.ece_bins = parse_count(key, value, line);
        if (c.ece_bins < 1) throw ConfigError(where(line) + "ece_bins: must be >= 1");
    } else {
        throw ConfigError(where(line) + "unknown key '" + key + "'");
    }
}

void ExperimentConfig::finalize() {
    if (tasks < 1) throw ConfigError("tasks: must be >= 1");
    if (classes_per_task < 1) throw ConfigError("classes_per_task: must be >= 1");
    if (hidden.empty()) throw ConfigError("hidden: need at least one layer width");
    for (std::size_t w : hidden) {
        if (w == 0) throw ConfigError("hidden: layer widths must be >= 1");
    }
    if (dataset == DatasetKind::Idx) {
        if (idx_train_images.empty() || idx_train_labels.empty() ||
            idx_test_images.empty() || idx_test_labels.empty()) {
            throw ConfigError("dataset=idx requires all four idx_* paths");
        }
    }
    if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
    if (method == Method::TriRE) {
        TriREConfig::split_epochs(epochs, trire.epochs_retain, trire.epochs_revise,
                                  trire.epochs_rewind);
        trire.validate();
    } else {
        if (epochs < 1) throw ConfigError("epochs: must be >= 1");
        if (trire.eta <= 0.0) throw ConfigError("eta: must be positive");
    }
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig c;
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        std::string s = raw;
        const std::size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') {
                throw ConfigError(where(line) + "unterminated section header");
            }
            continue; // sections are organizational only
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where(line) + "expected key=value, got '" + s + "'");
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(where(line) + "empty key");
        apply_config_key(c, key, value, line);
    }
    c.finalize();
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string ExperimentConfig::resolved_text() const {
    std::ostringstream o;
    o << "method = " << method_name(method) << "\n";
    o << "dataset = " << (dataset == DatasetKind::Blobs ? "blobs" : "idx") << "\n";
    if (dataset == DatasetKind::Idx) {
        o << "idx_train_images = " << idx_train_images << "\n";
        o << "idx_train_labels = " << idx_train_labels << "\n";
        o << "idx_test_images = " << idx_test_images << "\n";
        o << "idx_test_labels = " << idx_test_labels << "\n";
    } else {
        o << "blobs_dim = " << blobs_dim << "\n";
        o << "blobs_train_per_class = " << blobs_train_per_class << "\n";
        o << "blobs_test_per_class = " << blobs_test_per_class << "\n";
        o << "blobs_separation = " << blobs_separation << "\n";
    }
    o << "tasks = " << tasks << "\n";
    o << "classes_per_task = " << classes_per_task << "\n";
    o << "hidden = ";
    for (std::size_t i = 0; i < hidden.size(); ++i) o << (i ? "," : "") << hidden[i];
    o << "\n";
    o << "epochs = " << epochs << "\n";
    o << "task_order = " << (task_order == TaskOrder::Ascending ? "ascending" : "shuffled")
      << "\n";
    o << "val_fraction = " << val_fraction << "\n";
    o << "eta = " << trire.eta << "\n";
    o << "eta_prime = " << trire.eta_prime << "\n";
    o << "lambda = " << trire.lambda << "\n";
    o << "lambda_cr = " << trire.lambda_cr << "\n";
    o << "gamma = " << trire.cwi.gamma << "\n";
    o << "kappa = " << trire.cwi.kappa << "\n";
    o << "alpha = " << trire.cwi.alpha << "\n";
    o << "beta = " << trire.cwi.beta << "\n";
    o << "score_sample_cap = " << trire.cwi.score_sample_cap << "\n";
    o << "mu = " << trire.mu << "\n";
    o << "zeta = " << trire.zeta << "\n";
    o << "rewind_percentile = " << trire.rewind_percentile << "\n";
    o << "batch = " << trire.batch_size << "\n";
    o << "buffer = " << trire.buffer_capacity << "\n";
    o << "revise_on = " << (trire.revise_on ? "true" : "false") << "\n";
    o << "rewind_on = " << (trire.rewind_on ? "true" : "false") << "\n";
    o << "kwta_mode = "
      << (trire.dropout_mode == DropoutMode::Deterministic ? "deterministic" : "bernoulli")
      << "\n";
    o << "pruning = "
      << (trire.prune_criterion == PruneCriterion::CWI
              ? "cwi"
              : trire.prune_criterion == PruneCriterion::Magnitude ? "magnitude" : "fisher")
      << "\n";
    o << "eval_model = " << (trire.evaluate_working_model ? "working" : "ema") << "\n";
    o << "seeds = ";
    for (std::size_t i = 0; i < seeds.size(); ++i) o << (i ? "," : "") << seeds[i];
    o << "\n";
    o << "out = " << out_dir << "\n";
    o << "save_checkpoints = " << (save_checkpoints ? "true" : "false") << "\n";
    o << "ece_bins = " << ece_bins << "\n";
    return o.str();
}

} // namespace trire
