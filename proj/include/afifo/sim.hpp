#pragma once

// Deterministic single-CPU preemption simulator over queue operation
// frames.
//
// A Scenario declares the interrupt levels, queues and operations; a
// Schedule is the exact sequence of scheduler decisions: at every step
// boundary either advance the currently running (topmost) frame by one
// cell access, or start a pending operation whose level is strictly above
// everything in flight. Replaying a schedule on a scenario is
// bit-deterministic, so every reported failure is a reproducer.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "afifo/inspect.hpp"
#include "afifo/model.hpp"
#include "afifo/ops.hpp"

namespace afifo {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ScheduleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioQueue {
    std::string name;
    bool self_sentinel = false;
    // Nodes pre-loaded ahead of the sentinel: head -> seed[0] -> ... -> sentinel.
    std::vector<std::string> seed;
};

struct ScenarioOp {
    OpKind kind = OpKind::enqueue;
    Level level = 0;
    std::int32_t queue = 0;                // index into Scenario::queues
    std::vector<std::string> labels;       // enqueue: the argument chain, in order
};

struct Scenario {
    std::int32_t level_count = 4;
    std::vector<ScenarioQueue> queues;
    std::vector<ScenarioOp> ops;
    std::string embedded_schedule;         // optional token string from the file

    // Throws ScenarioError explaining the first broken rule.
    void validate() const;
    // All node labels, seeds first, in deterministic order.
    std::vector<std::string> all_labels() const;
};

// Scheduler decisions. -1 advances the running frame one step; k >= 0
// starts scenario op k.
struct Schedule {
    std::vector<std::int32_t> choices;

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

// Compact token form: "s0 a6 s1 a22". Parsing also accepts the sugar
// tokens `f` (advance the running frame until it completes) and `*` (run
// everything left to completion, lowest pending op first).
std::string schedule_tokens(const Schedule& s);

// The concrete world a scenario runs in.
struct SimWorld {
    InterruptDomain domain;
    std::vector<QueueId> queues;                       // scenario index -> id
    std::vector<std::string> queue_names;
    std::vector<std::string> labels;                   // node label table
    std::vector<NodeId> nodes;                         // label index -> id
    std::unordered_map<std::string, std::int32_t> label_index;
    std::vector<std::int32_t> node_op;                 // label index -> enqueueing op, -1 seed
    std::vector<std::int32_t> node_queue;              // label index -> scenario queue

    SimWorld() : domain(1, 0) {}

    std::string node_name(NodeId n) const;             // label, "$<queue>" or "-"
    NodeId node_by_name(const std::string& name) const;
};

SimWorld build_world(const Scenario& s);

enum class EventKind : std::uint8_t { frame_start, step, frame_finish };

struct TraceEvent {
    EventKind kind = EventKind::step;
    std::int64_t step = 0;          // steps executed before/at this event
    std::int32_t frame = -1;
    std::int32_t op = -1;           // scenario op index, -1 for drain frames
    OpKind op_kind = OpKind::enqueue;
    Level level = 0;
    std::int32_t queue = -1;        // scenario queue index
    // step records:
    const char* label = "";
    Cell cell{};
    bool is_write = false;
    std::int32_t value = 0;
    // finish records:
    std::int32_t steps_taken = 0;
    NodeId result;                  // dequeue result (none = empty)

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
    std::vector<TraceEvent> events;
    SharedMemory initial_memory;
    SharedMemory final_memory;
    Schedule schedule;

    std::int64_t step_count() const;
};

struct FrameInfo {
    std::int32_t op = -1;            // -1: drain dequeue
    OpKind kind = OpKind::enqueue;
    Level level = 0;
    std::int32_t queue = 0;          // scenario queue index
    std::vector<NodeId> chain;       // enqueue argument chain
    std::int64_t start_step = 0;     // boundary index at start
    std::int64_t finish_step = -1;   // boundary index after last step
    std::int32_t steps = 0;
    NodeId result;                   // dequeue result
    bool stalled_at_finish = false;  // enqueue done but chain not yet visible
    bool isolated = false;           // no same-queue enqueue overlapped it
};

struct Failure {
    std::string invariant;
    std::string detail;
    std::int64_t step = -1;
};

struct RunConfig {
    std::int64_t max_steps = 10000;  // livelock bound
    bool drain = true;               // drain queues at quiescence
    bool check = true;               // verify invariants while running
    bool record_trace = true;
    bool check_peek = false;         // snapshot-compare peek_n at every boundary
};

struct RunOutcome {
    Schedule schedule;               // canonical choices actually taken
    Trace trace;                     // populated when record_trace
    std::vector<FrameInfo> frames;
    std::vector<std::vector<NodeId>> drained;   // per scenario queue
    std::vector<Failure> failures;
    bool livelock = false;
    std::int64_t total_steps = 0;
    std::int32_t max_enqueue_steps = 0;
    bool stall_observed = false;
    std::shared_ptr<SimWorld> world;  // final state, shared for inspection
};

// Executes a schedule to quiescence (plus drain). Throws ScheduleError on
// an illegal or incomplete schedule, naming the failing step.
RunOutcome run_schedule(const Scenario& s, const Schedule& sched, const RunConfig& cfg = {});

// Same, driving the run from schedule tokens (sugar allowed).
RunOutcome run_tokens(const Scenario& s, const std::string& tokens, const RunConfig& cfg = {});

// No-preemption baseline: ops run to completion in declaration order.
RunOutcome run_serial(const Scenario& s, const RunConfig& cfg = {});

// Dequeues until none comes back twice in a row; the queue ends as
// [sentinel]. Requires quiescence; a populated level table is diagnosed as
// a non-quiescent call.
std::vector<NodeId> drain_queue(InterruptDomain& d, QueueId q);

// Displacement of each node's dequeue position, against two bases: the
// order enqueues completed, and the order they arrived. Ranks are per
// queue; seeded nodes rank before every operation on both bases.
struct ReorderEntry {
    std::int32_t node = -1;          // label index
    std::int32_t queue = 0;
    std::int32_t completion_rank = 0;
    std::int32_t arrival_rank = 0;
    std::int32_t dequeue_rank = 0;
    std::int32_t disp_completion = 0;  // dequeue_rank - completion_rank
    std::int32_t disp_arrival = 0;
};

struct ReorderReport {
    std::vector<ReorderEntry> entries;
    std::int32_t max_abs_completion = 0;
    std::int32_t max_abs_arrival = 0;
    std::map<std::int32_t, std::int64_t> hist_completion;  // |displacement| -> count
    std::map<std::int32_t, std::int64_t> hist_arrival;
};

// Throws UsageError if the outcome is not fully drained.
ReorderReport measure_reorder(const RunOutcome& out, const Scenario& s);

}  // namespace afifo
