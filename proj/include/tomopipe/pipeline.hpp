#pragma once

// Staged pipeline over opaque jobs. Every stage owns a pool of identical
// workers fed by its own bounded queue; a full queue blocks the producers in
// front of it. Results reach the sink in source order through a reorder buffer.

#include <any>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tomopipe {

using Blob = std::any;

struct StageSpec {
    std::string name;
    std::size_t workers = 1;
    /// Jobs allowed to wait in front of this stage.
    std::size_t queue_capacity = 2;
    std::function<Blob(Blob)> process;
    /// Per-slice working set of one job in this stage, as a multiple of the
    /// plan's slice bytes plus a fixed byte count.
    double slice_multiplier = 1.0;
    std::size_t extra_bytes_per_slice = 0;
};

struct PipelinePlan {
    std::vector<StageSpec> stages;
    /// Q, slices per job.
    std::size_t block_size = 1;
    /// W work items and T threads per item; bookkeeping for reports only.
    std::size_t work_items = 1;
    std::size_t threads_per_item = 1;
    /// M in bytes; 0 means unlimited.
    std::size_t memory_budget = 0;
    /// Bytes of one input slice, the unit of estimate_memory.
    std::size_t slice_bytes = 0;
    /// Run even when the estimate exceeds the budget.
    bool allow_over_budget = false;
};

using Clock = std::chrono::steady_clock;

struct StageTimes {
    Clock::time_point enqueue{};
    Clock::time_point start{};
    Clock::time_point finish{};
};

struct JobTicket {
    std::uint64_t sequence_id = 0;
    Blob payload;
    /// One entry per stage, in stage order.
    std::vector<StageTimes> times;
};

struct StageMetrics {
    std::string name;
    std::size_t workers = 0;
    std::size_t capacity = 0;
    std::size_t jobs = 0;
    /// Summed over workers: time inside process, and the rest of each worker's life.
    double busy_s = 0.0;
    double idle_s = 0.0;
    std::size_t peak_queue = 0;
    std::size_t peak_in_flight = 0;
};

struct PipelineMetrics {
    std::vector<StageMetrics> stages;
    std::size_t jobs = 0;
    double wall_s = 0.0;
};

/// Returns the next payload, or nothing when the source is exhausted.
using JobSource = std::function<std::optional<Blob>()>;
/// Called once per job, in sequence order, from a single thread.
using JobSink = std::function<void(JobTicket&&)>;

/// A stage (or the sink) threw. The run is drained before this is thrown.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::uint64_t sequence_id, std::string stage, const std::string& message,
                  std::vector<std::uint64_t> drained, std::size_t delivered);

    std::uint64_t sequence_id() const noexcept { return sequence_id_; }
    const std::string& stage() const noexcept { return stage_; }
    /// Jobs that were admitted but discarded because of the failure, ascending.
    const std::vector<std::uint64_t>& drained() const noexcept { return drained_; }
    /// Jobs the sink had received before the failure.
    std::size_t delivered() const noexcept { return delivered_; }

private:
    std::uint64_t sequence_id_;
    std::string stage_;
    std::vector<std::uint64_t> drained_;
    std::size_t delivered_;
};

class MemoryBudgetError : public std::runtime_error {
public:
    MemoryBudgetError(std::size_t estimate, std::size_t budget);
    std::size_t estimate() const noexcept { return estimate_; }
    std::size_t budget() const noexcept { return budget_; }

private:
    std::size_t estimate_;
    std::size_t budget_;
};

/// Throws std::invalid_argument for an empty stage list, Q == 0, or a stage
/// with zero workers, zero capacity or no process function.
void validate(const PipelinePlan& plan);

/// sum over stages of (workers + queue_capacity) * Q * per-slice working set.
std::size_t estimate_memory(const PipelinePlan& plan, std::size_t slice_bytes);
std::size_t estimate_memory(const PipelinePlan& plan);

/// Runs every job through every stage in order. Throws MemoryBudgetError before
/// starting when the estimate exceeds a nonzero budget (unless allowed), and
/// PipelineError if a stage or the sink fails.
PipelineMetrics run_pipeline(const PipelinePlan& plan, const JobSource& source, const JobSink& sink);

/// One row per stage: name,workers,capacity,jobs,busy_s,idle_s,peak_queue.
void write_metrics_csv(std::ostream& out, const PipelineMetrics& metrics);
std::string format_summary(const PipelineMetrics& metrics);

}  // namespace tomopipe
