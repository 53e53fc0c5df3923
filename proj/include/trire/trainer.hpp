#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trire/buffer.hpp"
#include "trire/dataset.hpp"
#include "trire/ema.hpp"
#include "trire/eval.hpp"
#include "trire/masks.hpp"
#include "trire/net.hpp"

namespace trire {

struct TriREConfig {
    double eta = 0.002;        // Retain/Rewind learning rate
    double eta_prime = 0.0001; // Revise learning rate, must be < eta
    double lambda = 0.04;      // rehearsal CE weight
    double lambda_cr = 1.0;    // consistency weight
    CWIConfig cwi;             // gamma, kappa, alpha, beta, score cap
    double mu = 0.999;         // EMA decay
    double zeta = 0.12;        // EMA update rate
    double rewind_percentile = 0.9;
    std::size_t epochs_retain = 3;
    std::size_t epochs_revise = 1;
    std::size_t epochs_rewind = 1;
    std::size_t batch_size = 32;
    std::size_t buffer_capacity = 200;
    bool revise_on = true;
    bool rewind_on = true;
    DropoutMode dropout_mode = DropoutMode::Deterministic;
    PruneCriterion prune_criterion = PruneCriterion::CWI;
    bool evaluate_working_model = false; // diagnostics only

    // Checkpoint epoch within Retain.
    std::size_t rewind_epoch() const;
    void validate() const;

    // 3:1:1 split of a total per-task budget, remainder to the first phase.
    static void split_epochs(std::size_t total, std::size_t& e1, std::size_t& e2,
                             std::size_t& e3);
};

struct PhaseLossRow {
    int task = 0;
    std::string phase; // retain | revise | rewind
    int epoch = 0;
    double loss_current = 0.0;
    double loss_buffer = 0.0;
    double lr = 0.0;
};

struct MaskRow {
    int task = 0;
    int layer = 0;
    std::size_t neurons_kept = 0;
    std::size_t neurons_total = 0;
    double density_task = 0.0;       // density of S_t
    double density_cumulative = 0.0; // density of S after the merge
};

struct BufferClassRow {
    int task = 0;
    int cls = 0;
    std::size_t count = 0;
    double loss_min = 0.0, loss_p25 = 0.0, loss_p50 = 0.0, loss_p75 = 0.0, loss_max = 0.0;
};

struct RunRecord {
    std::vector<PhaseLossRow> losses;
    TaskAccuracyMatrix acc_class_il;
    TaskAccuracyMatrix acc_task_il;
    std::vector<MaskRow> masks;
    std::vector<BufferClassRow> buffer_stats;
    std::string evaluated_model; // ema | working
    double wall_seconds = 0.0;   // reported, never written to artifacts
};

// One masked optimizer step on a cross-entropy objective; returns the loss.
// When kappa > 0 and counters are given, the forward pass records k-WTA
// activation counts.
double masked_ce_step(MLPNet& net, AdamState& adam, double lr,
                      const std::vector<std::uint8_t>& update_mask, const Batch& batch,
                      double kappa = 0.0, ActivationCounters* counters = nullptr);

// Buffer-side step of the first phase: lambda*CE + lambda_cr*consistency.
double masked_buffer_step(MLPNet& net, const EMAModel& ema, AdamState& adam, double lr,
                          const std::vector<std::uint8_t>& update_mask, const Batch& batch,
                          double lambda, double lambda_cr);

// Full-parameter update mask whose extractor part follows the subnetwork
// mask (or its complement); classifier parameters are always updatable.
std::vector<std::uint8_t> route_mask(const MLPNet& net, const SubnetworkMask& subnet,
                                     bool inside);

// Per-task state of the three-phase loop.
struct TaskRunState {
    SubnetworkMask cumulative;          // S
    SubnetworkMask current;             // S_t of the task in flight
    std::optional<ParamVector> rewind_checkpoint; // theta_k
    std::string phase;
};

class TriRETrainer {
public:
    TriRETrainer(MLPNet net, const TaskStream& stream, const TriREConfig& config,
                 std::uint64_t seed);

    void retain_phase(std::size_t task_idx);
    void extract(std::size_t task_idx);
    void revise_phase(std::size_t task_idx);
    void merge_and_rewind();
    void relearn_phase(std::size_t task_idx);
    // Retain -> extract -> revise -> merge/rewind -> relearn -> buffer update,
    // honoring the phase switches.
    void train_task(std::size_t task_idx);
    void evaluate_after_task(std::size_t task_idx);
    void run(); // all tasks, with an evaluation pass after each

    const MLPNet& net() const { return net_; }
    const EMAModel& ema() const { return ema_; }
    const MemoryBuffer& buffer() const { return buffer_; }
    const TaskRunState& state() const { return state_; }
    const RunRecord& record() const { return record_; }
    RunRecord& mutable_record() { return record_; }
    MemoryBuffer& mutable_buffer() { return buffer_; }

private:
    void update_buffer(std::size_t task_idx);
    void note_cumulative_density();
    const MLPNet& eval_model() const;

    MLPNet net_;
    const TaskStream* stream_;
    TriREConfig config_;
    EMAModel ema_;
    MemoryBuffer buffer_;
    TaskRunState state_;
    RunRecord record_;
    ActivationCounters counters_;
    RngState data_rng_;
    RngState buffer_rng_;
    RngState ema_rng_;
    RngState extract_rng_;
    RngState score_rng_;
};

enum class BaselineKind { Sgd, Er, Joint };

struct BaselineResult {
    std::unique_ptr<MLPNet> model;
    RunRecord record;
};

// sgd: sequential CE; er: CE + lambda-weighted buffer CE with the same
// buffer machinery; joint: training over the union of all tasks. All are
// evaluated on the working model. The caller supplies the freshly
// initialized net so every method starts from identical weights.
BaselineResult run_baseline(BaselineKind kind, MLPNet net, const TaskStream& stream,
                            const TriREConfig& config, std::uint64_t seed,
                            std::size_t epochs_per_task);

MetricsReport metrics_from_record(const RunRecord& record, const MLPNet& eval_model,
                                  const TaskStream& stream);

} // namespace trire
