#include "trire/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "trire/errors.hpp"
#include "trire/primitives.hpp"

namespace trire {

std::size_t TriREConfig::rewind_epoch() const {
    const double k = std::round(rewind_percentile * static_cast<double>(epochs_retain));
    return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

void TriREConfig::validate() const {
    if (eta <= 0.0 || eta_prime < 0.0) throw ConfigError("learning rates must be positive");
    if (eta_prime >= eta) throw ConfigError("eta_prime must be smaller than eta");
    if (rewind_percentile <= 0.0 || rewind_percentile >= 1.0) {
        throw ConfigError("rewind_percentile must lie in (0,1)");
    }
    if (epochs_retain < 1 || epochs_revise < 1 || epochs_rewind < 1) {
        throw ConfigError("each phase needs at least one epoch");
    }
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (lambda < 0.0 || lambda_cr < 0.0) throw ConfigError("loss weights must be >= 0");
    if (cwi.gamma <= 0.0 || cwi.gamma > 1.0) throw ConfigError("gamma must lie in (0,1]");
    if (cwi.kappa <= 0.0 || cwi.kappa > 1.0) throw ConfigError("kappa must lie in (0,1]");
    if (cwi.alpha < 0.0 || cwi.beta < 0.0) throw ConfigError("alpha/beta must be >= 0");
    if (mu <= 0.0 || mu >= 1.0) throw ConfigError("mu must lie in (0,1)");
    if (zeta < 0.0 || zeta > 1.0) throw ConfigError("zeta must lie in [0,1]");
}

void TriREConfig::split_epochs(std::size_t total, std::size_t& e1, std::size_t& e2,
                               std::size_t& e3) {
    if (total < 3) throw ConfigError("need at least 3 epochs for a 3:1:1 phase split");
    e2 = std::max<std::size_t>(1, total / 5);
    e3 = e2;
    e1 = total - e2 - e3;
}

double masked_ce_step(MLPNet& net, AdamState& adam, double lr,
                      const std::vector<std::uint8_t>& update_mask, const Batch& batch,
                      double kappa, ActivationCounters* counters) {
    ForwardTrace trace;
    Matrix logits = net.forward(batch.features, &trace, kappa, counters);
    CeResult ce = softmax_ce(logits, batch.labels);
    ParamVector grads = net.backward(trace, ce.grad_logits);
    adam_step(net, grads, adam, lr, &update_mask);
    return ce.loss;
}

double masked_buffer_step(MLPNet& net, const EMAModel& ema, AdamState& adam, double lr,
                          const std::vector<std::uint8_t>& update_mask, const Batch& batch,
                          double lambda, double lambda_cr) {
    ForwardTrace trace;
    Matrix logits = net.forward(batch.features, &trace);
    CeResult ce = softmax_ce(logits, batch.labels);
    Matrix ema_logits = ema.net().forward(batch.features);
    ConsistencyResult cons = consistency_from_logits(logits, ema_logits);

    Matrix grad(logits.rows, logits.cols);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        grad.data[i] = lambda * ce.grad_logits.data[i] + lambda_cr * cons.grad_logits.data[i];
    }
    ParamVector grads = net.backward(trace, grad);
    adam_step(net, grads, adam, lr, &update_mask);
    return lambda * ce.loss + lambda_cr * cons.loss;
}

std::vector<std::uint8_t> route_mask(const MLPNet& net, const SubnetworkMask& subnet,
                                     bool inside) {
    const ParamLayout& layout = net.layout();
    if (subnet.weights.size() != layout.feature_total) {
        throw ShapeError("route_mask: subnetwork mask does not match extractor");
    }
    std::vector<std::uint8_t> mask(layout.total, 1);
    for (std::size_t i = 0; i < layout.feature_total; ++i) {
        mask[i] = inside ? subnet.weights[i] : static_cast<std::uint8_t>(!subnet.weights[i]);
    }
    return mask;
}

namespace {

std::vector<double> per_sample_losses(const MLPNet& net, const Split& split) {
    std::vector<double> losses(split.size());
    constexpr std::size_t kChunk = 512;
    std::vector<std::uint32_t> which;
    for (std::size_t start = 0; start < split.size(); start += kChunk) {
        const std::size_t end = std::min(start + kChunk, split.size());
        which.assign(split.indices.begin() + static_cast<std::ptrdiff_t>(start),
                     split.indices.begin() + static_cast<std::ptrdiff_t>(end));
        Batch batch = make_batch(split, which);
        Matrix logits = net.forward(batch.features);
        CeResult ce = softmax_ce(logits, batch.labels);
        for (std::size_t i = start; i < end; ++i) losses[i] = ce.row_loss[i - start];
    }
    return losses;
}

Batch batch_of_buffer(const MemoryBuffer& buffer) {
    Batch b;
    const auto& slots = buffer.slots();
    if (slots.empty()) return b;
    const std::size_t dim = slots[0].example.features.size();
    b.features = Matrix(slots.size(), dim);
    b.labels.resize(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        std::copy(slots[i].example.features.begin(), slots[i].example.features.end(),
                  b.features.row_ptr(i));
        b.labels[i] = slots[i].example.label;
    }
    return b;
}

// End-of-task buffer maintenance shared by TriRE and the ER baseline:
// refresh stored losses under the current model, stream the finished split
// once, then append histogram/quantile rows.
void finish_task_buffer(const MLPNet& net, MemoryBuffer& buffer, const Task& task,
                        int task_idx, RngState& buffer_rng, RunRecord& record) {
    buffer.refresh_losses(net);
    const std::vector<double> losses = per_sample_losses(net, task.train);
    buffer.update_from_task(task.train, losses, task_idx, buffer_rng);

    std::map<int, std::vector<double>> by_class;
    for (const auto& slot : buffer.slots()) {
        by_class[slot.example.label].push_back(slot.stored_loss);
    }
    for (auto& [cls, v] : by_class) {
        std::sort(v.begin(), v.end());
        auto q = [&](double p) {
            const std::size_t idx = std::min(
                v.size() - 1, static_cast<std::size_t>(p * static_cast<double>(v.size())));
            return v[idx];
        };
        record.buffer_stats.push_back({task_idx, cls, v.size(), v.front(), q(0.25), q(0.5),
                                       q(0.75), v.back()});
    }
}

void fill_accuracy_rows(const MLPNet& model, const TaskStream& stream, std::size_t upto,
                        RunRecord& record) {
    const auto class_acc = evaluate(model, stream, Protocol::ClassIL, upto);
    const auto task_acc = evaluate(model, stream, Protocol::TaskIL, upto);
    for (std::size_t j = 0; j <= upto; ++j) {
        record.acc_class_il.at(upto, j) = class_acc[j];
        record.acc_task_il.at(upto, j) = task_acc[j];
    }
}

} // namespace

TriRETrainer::TriRETrainer(MLPNet net, const TaskStream& stream, const TriREConfig& config,
                           std::uint64_t seed)
    : net_(std::move(net)),
      stream_(&stream),
      config_(config),
      ema_(net_, config.mu, config.zeta),
      buffer_(config.buffer_capacity),
      counters_(net_.make_counters()),
      data_rng_(RngState(seed).fork(2)),
      buffer_rng_(RngState(seed).fork(3)),
      ema_rng_(RngState(seed).fork(4)),
      extract_rng_(RngState(seed).fork(5)),
      score_rng_(RngState(seed).fork(6)) {
    config_.validate();
    state_.cumulative = empty_mask(net_);
    state_.current = empty_mask(net_);
    record_.acc_class_il = TaskAccuracyMatrix(stream.num_tasks());
    record_.acc_task_il = TaskAccuracyMatrix(stream.num_tasks());
    record_.evaluated_model = config.evaluate_working_model ? "working" : "ema";
}

const MLPNet& TriRETrainer::eval_model() const {
    return config_.evaluate_working_model ? net_ : ema_.net();
}

void TriRETrainer::retain_phase(std::size_t task_idx) {
    const Task& task = stream_->tasks[task_idx];
    if (task.train.size() == 0) throw InputError("retain: task train split is empty");
    state_.phase = "retain";
    state_.rewind_checkpoint.reset();
    counters_.reset();

    AdamState adam(net_.layout().total);
    const auto mask_current = route_mask(net_, state_.cumulative, false);
    const auto mask_buffer = route_mask(net_, state_.cumulative, true);
    const std::size_t checkpoint_epoch = config_.rewind_epoch();

    for (std::size_t epoch = 1; epoch <= config_.epochs_retain; ++epoch) {
        double sum_current = 0.0, sum_buffer = 0.0;
        std::size_t iters = 0, buffer_iters = 0;
        MinibatchIter it(task.train, config_.batch_size, RngState(data_rng_.next_u64()));
        Batch batch;
        while (it.next(batch)) {
            sum_current += masked_ce_step(net_, adam, config_.eta, mask_current,
                                          batch, config_.cwi.kappa, &counters_);
            ++iters;
            if (!buffer_.empty()) {
                auto sampled = buffer_.sample_batch(config_.batch_size, buffer_rng_);
                sum_buffer += masked_buffer_step(net_, ema_, adam, config_.eta,
                                                 mask_buffer, sampled.batch, config_.lambda,
                                                 config_.lambda_cr);
                ++buffer_iters;
            }
            ema_.maybe_update(net_, ema_rng_);
        }
        record_.losses.push_back(
            {static_cast<int>(task_idx), "retain", static_cast<int>(epoch),
             iters ? sum_current / static_cast<double>(iters) : 0.0,
             buffer_iters ? sum_buffer / static_cast<double>(buffer_iters) : 0.0,
             config_.eta});
        if (epoch == checkpoint_epoch) {
            state_.rewind_checkpoint = net_.snapshot();
        }
    }
}

void TriRETrainer::extract(std::size_t task_idx) {
    const Task& task = stream_->tasks[task_idx];
    state_.phase = "extract";

    // Scoring sets: a seeded capped sample of the current split plus the
    // whole buffer.
    std::vector<std::uint32_t> order = task.train.indices;
    RngState pick(score_rng_.next_u64());
    pick.shuffle(order);
    if (order.size() > config_.cwi.score_sample_cap) {
        order.resize(config_.cwi.score_sample_cap);
    }
    Split view{task.train.store, order};
    Batch current = make_batch(view, order);
    Batch buffer_batch = batch_of_buffer(buffer_);

    const auto class_mask = task_logit_mask(task.spec.classes, net_.num_classes());
    state_.current = extract_subnetwork(net_, counters_, config_.cwi, current, buffer_batch,
                                        class_mask, config_.dropout_mode, extract_rng_,
                                        config_.prune_criterion);

    const double task_density = density(state_.current);
    for (std::size_t l = 0; l < state_.current.neurons.layers.size(); ++l) {
        const auto& layer = state_.current.neurons.layers[l];
        std::size_t kept = 0;
        for (auto v : layer) kept += v;
        record_.masks.push_back({static_cast<int>(task_idx), static_cast<int>(l), kept,
                                 layer.size(), task_density, 0.0});
    }
}

void TriRETrainer::revise_phase(std::size_t task_idx) {
    const Task& task = stream_->tasks[task_idx];
    state_.phase = "revise";

    AdamState adam(net_.layout().total);
    const SubnetworkMask overlap = intersect_masks(state_.cumulative, state_.current);
    const auto mask_current = route_mask(net_, overlap, false);
    const auto mask_buffer = route_mask(net_, overlap, true);
    const bool overlap_nonempty = std::any_of(
        overlap.weights.begin(), overlap.weights.end(),
        [](std::uint8_t v) { return v != 0; });

    for (std::size_t epoch = 1; epoch <= config_.epochs_revise; ++epoch) {
        double sum_current = 0.0, sum_buffer = 0.0;
        std::size_t iters = 0, buffer_iters = 0;
        MinibatchIter it(task.train, config_.batch_size, RngState(data_rng_.next_u64()));
        Batch batch;
        while (it.next(batch)) {
            sum_current += masked_ce_step(net_, adam, config_.eta_prime,
                                          mask_current, batch);
            ++iters;
            if (overlap_nonempty && !buffer_.empty()) {
                auto sampled = buffer_.sample_batch(config_.batch_size, buffer_rng_);
                sum_buffer += masked_ce_step(net_, adam, config_.eta_prime,
                                             mask_buffer, sampled.batch);
                ++buffer_iters;
            }
            ema_.maybe_update(net_, ema_rng_);
        }
        record_.losses.push_back(
            {static_cast<int>(task_idx), "revise", static_cast<int>(epoch),
             iters ? sum_current / static_cast<double>(iters) : 0.0,
             buffer_iters ? sum_buffer / static_cast<double>(buffer_iters) : 0.0,
             config_.eta_prime});
    }
}

void TriRETrainer::merge_and_rewind() {
    if (!state_.rewind_checkpoint) {
        throw StateError("merge_and_rewind: no checkpoint saved this task");
    }
    state_.phase = "rewind";
    state_.cumulative = union_masks(state_.cumulative, state_.current);

    // Restore extractor parameters outside the new cumulative set; the
    // classifier and everything inside S stay untouched.
    std::vector<std::uint8_t> subset(net_.layout().total, 0);
    for (std::size_t i = 0; i < net_.layout().feature_total; ++i) {
        subset[i] = state_.cumulative.weights[i] ? 0 : 1;
    }
    net_.restore(*state_.rewind_checkpoint, &subset);
    note_cumulative_density();
}

void TriRETrainer::note_cumulative_density() {
    const double cum_density = density(state_.cumulative);
    for (auto it = record_.masks.rbegin(); it != record_.masks.rend(); ++it) {
        if (it->density_cumulative == 0.0) {
            it->density_cumulative = cum_density;
        } else {
            break;
        }
    }
}

void TriRETrainer::relearn_phase(std::size_t task_idx) {
    const Task& task = stream_->tasks[task_idx];
    state_.phase = "relearn";

    AdamState adam(net_.layout().total);
    const auto mask = route_mask(net_, state_.cumulative, false);
    for (std::size_t epoch = 1; epoch <= config_.epochs_rewind; ++epoch) {
        double sum = 0.0;
        std::size_t iters = 0;
        MinibatchIter it(task.train, config_.batch_size, RngState(data_rng_.next_u64()));
        Batch batch;
        while (it.next(batch)) {
            sum += masked_ce_step(net_, adam, config_.eta, mask, batch);
            ++iters;
            ema_.maybe_update(net_, ema_rng_);
        }
        record_.losses.push_back({static_cast<int>(task_idx), "rewind",
                                  static_cast<int>(epoch),
                                  iters ? sum / static_cast<double>(iters) : 0.0, 0.0,
                                  config_.eta});
    }
}

void TriRETrainer::update_buffer(std::size_t task_idx) {
    finish_task_buffer(net_, buffer_, stream_->tasks[task_idx],
                       static_cast<int>(task_idx), buffer_rng_, record_);
}

void TriRETrainer::train_task(std::size_t task_idx) {
    retain_phase(task_idx);
    extract(task_idx);
    if (config_.revise_on) {
        revise_phase(task_idx);
    }
    if (config_.rewind_on) {
        merge_and_rewind();
        relearn_phase(task_idx);
    } else {
        state_.cumulative = union_masks(state_.cumulative, state_.current);
        note_cumulative_density();
    }
    update_buffer(task_idx);
}

void TriRETrainer::evaluate_after_task(std::size_t task_idx) {
    fill_accuracy_rows(eval_model(), *stream_, task_idx, record_);
}

void TriRETrainer::run() {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t t = 0; t < stream_->num_tasks(); ++t) {
        train_task(t);
        evaluate_after_task(t);
    }
    record_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

BaselineResult run_baseline(BaselineKind kind, MLPNet net, const TaskStream& stream,
                            const TriREConfig& config, std::uint64_t seed,
                            std::size_t epochs_per_task) {
    BaselineResult result;
    result.record.acc_class_il = TaskAccuracyMatrix(stream.num_tasks());
    result.record.acc_task_il = TaskAccuracyMatrix(stream.num_tasks());
    result.record.evaluated_model = "working";

    RngState master(seed);
    RngState data_rng = master.fork(2);
    RngState buffer_rng = master.fork(3);
    const std::vector<std::uint8_t> full_mask(net.layout().total, 1);
    MemoryBuffer buffer(config.buffer_capacity);
    const auto start = std::chrono::steady_clock::now();

    if (kind == BaselineKind::Joint) {
        Split merged;
        merged.store = stream.tasks.front().train.store;
        for (const auto& task : stream.tasks) {
            merged.indices.insert(merged.indices.end(), task.train.indices.begin(),
                                  task.train.indices.end());
        }
        AdamState adam(net.layout().total);
        for (std::size_t epoch = 1; epoch <= epochs_per_task; ++epoch) {
            double sum = 0.0;
            std::size_t iters = 0;
            MinibatchIter it(merged, config.batch_size, RngState(data_rng.next_u64()));
            Batch batch;
            while (it.next(batch)) {
                sum += masked_ce_step(net, adam, config.eta, full_mask, batch);
                ++iters;
            }
            result.record.losses.push_back({0, "joint", static_cast<int>(epoch),
                                            iters ? sum / static_cast<double>(iters) : 0.0,
                                            0.0, config.eta});
        }
        fill_accuracy_rows(net, stream, stream.num_tasks() - 1, result.record);
    } else {
        for (std::size_t t = 0; t < stream.num_tasks(); ++t) {
            const Task& task = stream.tasks[t];
            AdamState adam(net.layout().total);
            for (std::size_t epoch = 1; epoch <= epochs_per_task; ++epoch) {
                double sum_current = 0.0, sum_buffer = 0.0;
                std::size_t iters = 0, buffer_iters = 0;
                MinibatchIter it(task.train, config.batch_size,
                                 RngState(data_rng.next_u64()));
                Batch batch;
                while (it.next(batch)) {
                    if (kind == BaselineKind::Er && !buffer.empty()) {
                        // One combined step on CE(current) + lambda*CE(buffer).
                        ForwardTrace trace;
                        Matrix logits = net.forward(batch.features, &trace);
                        CeResult ce = softmax_ce(logits, batch.labels);
                        ParamVector grads = net.backward(trace, ce.grad_logits);

                        auto sampled = buffer.sample_batch(config.batch_size, buffer_rng);
                        ForwardTrace btrace;
                        Matrix blogits = net.forward(sampled.batch.features, &btrace);
                        CeResult bce = softmax_ce(blogits, sampled.batch.labels);
                        for (double& g : bce.grad_logits.data) g *= config.lambda;
                        ParamVector bgrads = net.backward(btrace, bce.grad_logits);
                        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += bgrads[i];

                        adam_step(net, grads, adam, config.eta, &full_mask);
                        sum_current += ce.loss;
                        sum_buffer += config.lambda * bce.loss;
                        ++buffer_iters;
                    } else {
                        sum_current += masked_ce_step(net, adam, config.eta, full_mask, batch);
                    }
                    ++iters;
                }
                result.record.losses.push_back(
                    {static_cast<int>(t), kind == BaselineKind::Er ? "er" : "sgd",
                     static_cast<int>(epoch),
                     iters ? sum_current / static_cast<double>(iters) : 0.0,
                     buffer_iters ? sum_buffer / static_cast<double>(buffer_iters) : 0.0,
                     config.eta});
            }
            if (kind == BaselineKind::Er) {
                finish_task_buffer(net, buffer, task, static_cast<int>(t), buffer_rng,
                                   result.record);
            }
            fill_accuracy_rows(net, stream, t, result.record);
        }
    }
    result.record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.model = std::make_unique<MLPNet>(std::move(net));
    return result;
}

MetricsReport metrics_from_record(const RunRecord& record, const MLPNet& eval_model,
                                  const TaskStream& stream) {
    MetricsReport m;
    m.class_il_avg = record.acc_class_il.final_average();
    m.task_il_avg = record.acc_task_il.final_average();
    m.evaluated_model = record.evaluated_model;

    bool diagonal_set = stream.num_tasks() >= 2;
    for (std::size_t i = 0; i < stream.num_tasks() && diagonal_set; ++i) {
        diagonal_set = record.acc_class_il.is_set(i, i);
    }
    if (diagonal_set) {
        const auto sp = stability_plasticity(record.acc_class_il);
        m.stability = sp.stability;
        m.plasticity = sp.plasticity;
        m.tradeoff = sp.tradeoff;
    }

    const auto pass =
        evaluate_detailed(eval_model, stream, Protocol::ClassIL, stream.num_tasks() - 1);
    m.ece_value = ece(pass.confidences, pass.correct, 10);
    m.confusion = task_confusion(eval_model, stream);
    return m;
}

} // namespace trire
