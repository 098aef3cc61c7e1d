#include "tomopipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace tomopipe {
namespace {

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

class TicketQueue {
public:
    explicit TicketQueue(std::size_t capacity) : capacity_(capacity) {}

    // Blocks while full. Returns false, leaving the ticket untouched, once closed.
    bool push(JobTicket& ticket) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(ticket));
        peak_ = std::max(peak_, items_.size());
        not_empty_.notify_one();
        return true;
    }

    // Blocks while empty and open; after close it still hands out what is left.
    std::optional<JobTicket> pop() {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        JobTicket t = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return t;
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    std::vector<std::uint64_t> take_ids() {
        std::lock_guard lock(mutex_);
        std::vector<std::uint64_t> ids;
        for (const auto& t : items_) ids.push_back(t.sequence_id);
        items_.clear();
        return ids;
    }

    std::size_t peak() const {
        std::lock_guard lock(mutex_);
        return peak_;
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<JobTicket> items_;
    std::size_t capacity_;
    std::size_t peak_ = 0;
    bool closed_ = false;
};

struct StageState {
    std::mutex mutex;
    std::size_t jobs = 0;
    double busy_s = 0.0;
    double idle_s = 0.0;
    std::size_t in_flight = 0;
    std::size_t peak_in_flight = 0;
    std::atomic<std::size_t> live_workers{0};
};

struct Failure {
    std::uint64_t sequence_id = 0;
    std::string stage;
    std::string message;
};

class Run {
public:
    Run(const PipelinePlan& plan, const JobSource& source, const JobSink& sink)
        : plan_(plan), source_(source), sink_(sink), states_(plan.stages.size()) {
        queues_.reserve(plan.stages.size() + 1);
        for (const auto& s : plan.stages) queues_.push_back(std::make_unique<TicketQueue>(s.queue_capacity));
        queues_.push_back(std::make_unique<TicketQueue>(std::numeric_limits<std::size_t>::max()));
        window_ = 1;
        for (const auto& s : plan.stages) window_ += s.workers + s.queue_capacity;
    }

    PipelineMetrics execute() {
        const auto start = Clock::now();
        std::vector<std::jthread> threads;
        for (std::size_t i = 0; i < plan_.stages.size(); ++i) {
            states_[i].live_workers = plan_.stages[i].workers;
            for (std::size_t w = 0; w < plan_.stages[i].workers; ++w) {
                threads.emplace_back([this, i] { stage_worker(i); });
            }
        }
        threads.emplace_back([this] { sink_worker(); });
        feed();
        threads.clear();
        const auto stop = Clock::now();

        for (auto& q : queues_) {
            for (auto id : q->take_ids()) drained_.push_back(id);
        }
        if (failure_) {
            std::sort(drained_.begin(), drained_.end());
            throw PipelineError(failure_->sequence_id, failure_->stage, failure_->message,
                                std::move(drained_), delivered_);
        }

        PipelineMetrics m;
        m.jobs = delivered_;
        m.wall_s = seconds(stop - start);
        for (std::size_t i = 0; i < plan_.stages.size(); ++i) {
            const auto& spec = plan_.stages[i];
            auto& st = states_[i];
            m.stages.push_back({spec.name, spec.workers, spec.queue_capacity, st.jobs, st.busy_s,
                                st.idle_s, queues_[i]->peak(), st.peak_in_flight});
        }
        return m;
    }

private:
    void fail(std::uint64_t id, const std::string& stage, const std::string& message) {
        {
            // A second failure during the abort counts as a drained job.
            std::lock_guard lock(failure_mutex_);
            if (!failure_) failure_ = Failure{id, stage, message};
            else drained_.push_back(id);
        }
        aborted_ = true;
        for (auto& q : queues_) q->close();
        progress_.notify_all();
    }

    void drain(std::uint64_t id) {
        std::lock_guard lock(failure_mutex_);
        drained_.push_back(id);
    }

    void feed() {
        std::uint64_t next = 0;
        while (!aborted_) {
            {
                // Admission window: bounds the jobs held anywhere, reorder buffer included.
                std::unique_lock lock(progress_mutex_);
                progress_.wait(lock, [&] { return aborted_ || next - delivered_ < window_; });
            }
            if (aborted_) break;
            std::optional<Blob> payload;
            try {
                payload = source_();
            } catch (const std::exception& e) {
                fail(next, "source", e.what());
                break;
            }
            if (!payload) break;
            JobTicket t{next, std::move(*payload), std::vector<StageTimes>(plan_.stages.size())};
            t.times[0].enqueue = Clock::now();
            if (!queues_[0]->push(t)) {
                drain(next);
                break;
            }
            ++next;
        }
        queues_[0]->close();
    }

    void stage_worker(std::size_t i) {
        const auto& spec = plan_.stages[i];
        auto& st = states_[i];
        auto& in = *queues_[i];
        auto& out = *queues_[i + 1];
        const auto born = Clock::now();
        double busy = 0.0;
        while (auto t = in.pop()) {
            if (aborted_) {
                drain(t->sequence_id);
                continue;
            }
            {
                std::lock_guard lock(st.mutex);
                st.peak_in_flight = std::max(st.peak_in_flight, ++st.in_flight);
            }
            auto& times = t->times[i];
            times.start = Clock::now();
            bool ok = true;
            try {
                t->payload = spec.process(std::move(t->payload));
            } catch (const std::exception& e) {
                fail(t->sequence_id, spec.name, e.what());
                ok = false;
            } catch (...) {
                fail(t->sequence_id, spec.name, "unknown error");
                ok = false;
            }
            times.finish = Clock::now();
            busy += seconds(times.finish - times.start);
            {
                std::lock_guard lock(st.mutex);
                --st.in_flight;
                if (ok) ++st.jobs;
            }
            if (!ok) continue;
            if (i + 1 < plan_.stages.size()) t->times[i + 1].enqueue = Clock::now();
            if (!out.push(*t)) drain(t->sequence_id);
        }
        {
            std::lock_guard lock(st.mutex);
            st.busy_s += busy;
            st.idle_s += seconds(Clock::now() - born) - busy;
        }
        if (--st.live_workers == 0) out.close();
    }

    void sink_worker() {
        auto& in = *queues_.back();
        std::map<std::uint64_t, JobTicket> pending;
        std::uint64_t next = 0;
        while (auto t = in.pop()) {
            if (aborted_) {
                drain(t->sequence_id);
                continue;
            }
            pending.emplace(t->sequence_id, std::move(*t));
            for (auto it = pending.find(next); it != pending.end() && !aborted_;
                 it = pending.find(next)) {
                JobTicket ready = std::move(it->second);
                pending.erase(it);
                try {
                    sink_(std::move(ready));
                } catch (const std::exception& e) {
                    fail(next, "sink", e.what());
                    break;
                }
                ++next;
                {
                    std::lock_guard lock(progress_mutex_);
                    delivered_ = next;
                }
                progress_.notify_all();
            }
        }
        for (const auto& [id, t] : pending) drain(id);
    }

    const PipelinePlan& plan_;
    const JobSource& source_;
    const JobSink& sink_;
    std::vector<std::unique_ptr<TicketQueue>> queues_;
    std::vector<StageState> states_;
    std::size_t window_;

    std::atomic<bool> aborted_{false};
    std::mutex failure_mutex_;
    std::optional<Failure> failure_;
    std::vector<std::uint64_t> drained_;

    std::mutex progress_mutex_;
    std::condition_variable progress_;
    std::uint64_t delivered_ = 0;
};

}  // namespace

PipelineError::PipelineError(std::uint64_t sequence_id, std::string stage, const std::string& message,
                             std::vector<std::uint64_t> drained, std::size_t delivered)
    : std::runtime_error("stage '" + stage + "' failed on job " + std::to_string(sequence_id) + ": " +
                         message),
      sequence_id_(sequence_id),
      stage_(std::move(stage)),
      drained_(std::move(drained)),
      delivered_(delivered) {}

MemoryBudgetError::MemoryBudgetError(std::size_t estimate, std::size_t budget)
    : std::runtime_error("memory estimate " + std::to_string(estimate) + " bytes exceeds budget " +
                         std::to_string(budget) + " bytes"),
      estimate_(estimate),
      budget_(budget) {}

void validate(const PipelinePlan& plan) {
    if (plan.stages.empty()) throw std::invalid_argument("pipeline: no stages");
    if (plan.block_size == 0) throw std::invalid_argument("pipeline: block size must be >= 1");
    for (const auto& s : plan.stages) {
        if (s.workers == 0) throw std::invalid_argument("pipeline: stage '" + s.name + "' has no workers");
        if (s.queue_capacity == 0) {
            throw std::invalid_argument("pipeline: stage '" + s.name + "' has zero queue capacity");
        }
        if (!s.process) throw std::invalid_argument("pipeline: stage '" + s.name + "' has no process");
    }
}

std::size_t estimate_memory(const PipelinePlan& plan, std::size_t slice_bytes) {
    validate(plan);
    std::size_t total = 0;
    for (const auto& s : plan.stages) {
        const auto per_slice = static_cast<std::size_t>(std::llround(s.slice_multiplier * static_cast<double>(slice_bytes))) +
                               s.extra_bytes_per_slice;
        total += (s.workers + s.queue_capacity) * plan.block_size * per_slice;
    }
    return total;
}

std::size_t estimate_memory(const PipelinePlan& plan) { return estimate_memory(plan, plan.slice_bytes); }

PipelineMetrics run_pipeline(const PipelinePlan& plan, const JobSource& source, const JobSink& sink) {
    validate(plan);
    if (plan.memory_budget > 0 && !plan.allow_over_budget) {
        const auto estimate = estimate_memory(plan);
        if (estimate > plan.memory_budget) throw MemoryBudgetError(estimate, plan.memory_budget);
    }
    Run run(plan, source, sink);
    return run.execute();
}

void write_metrics_csv(std::ostream& out, const PipelineMetrics& metrics) {
    out << "name,workers,capacity,jobs,busy_s,idle_s,peak_queue\n";
    char buf[64];
    for (const auto& s : metrics.stages) {
        out << s.name << ',' << s.workers << ',' << s.capacity << ',' << s.jobs << ',';
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", s.busy_s, s.idle_s);
        out << buf << ',' << s.peak_queue << '\n';
    }
}

std::string format_summary(const PipelineMetrics& metrics) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu jobs in %.3f s\n", metrics.jobs, metrics.wall_s);
    out << buf;
    for (const auto& s : metrics.stages) {
        const double total = s.busy_s + s.idle_s;
        std::snprintf(buf, sizeof buf, "  %-8s workers %zu  queue %zu  jobs %zu  busy %.3f s (%.0f%%)  peak queue %zu\n",
                      s.name.c_str(), s.workers, s.capacity, s.jobs, s.busy_s,
                      total > 0.0 ? 100.0 * s.busy_s / total : 0.0, s.peak_queue);
        out << buf;
    }
    return out.str();
}

}  // namespace tomopipe
