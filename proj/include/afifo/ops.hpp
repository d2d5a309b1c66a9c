#pragma once

// The queue operations, written as resumable state machines.
//
// Every read or write of a SharedMemory cell is a separate step. A frame
// (one in-flight enqueue or dequeue) sits suspended with exactly one
// pending cell access; OpFrame::step() performs that access and runs the
// frame's private computation up to the next access or to completion.
// Preemption is legal at every step boundary and nowhere else, which is
// precisely the guarantee a single CPU with run-to-completion interrupts
// gives: an interrupt can fire between any two instructions, and a
// word-sized load or store cannot be torn.
//
// Step order contract (labels are stable; goldens depend on them):
//
// enqueue(level, q, node):
//   enq.publish_node        W lvln[level] := node
//   enq.publish_queue       W lvlq[level] := q
//   enq.scan_lower          R lvlq[j], j = level-1 .. 0, stop at first hit
//   while a lower level p is working on q:
//     enq.read_lower_node   R lvln[p]
//     enq.tail_vs_lower     R tail[q]; if tail == lvln[p], that enqueue is
//                           essentially done:
//       enq.retire_lower_queue  W lvlq[p] := none
//       enq.scan_again          R lvlq[j], j = p-1 .. 0
//     else stop scanning
//   no lower level active ("simple"):
//     enq.read_tail         R tail[q]
//     enq.follow_tail       R next[...] until none; last node found
//     enq.link_tail         W next[last] := node
//     enq.follow_arg        R next[...] along the argument chain
//     enq.publish_last      W lvln[level] := chain tail
//     enq.advance_tail      W tail[q] := chain tail
//   lower level p mid-enqueue ("blocked"), locate who references its node:
//     enq.anchor_scan_lower R lvlq[j] below the scanned level
//     enq.anchor_read_node  R lvln[j]   (chain of a still lower level)
//     enq.anchor_read_tail  R tail[q]   (after levels run out)
//     enq.anchor_walk       R next[...] scanning for next == lvln[p]
//     not found ("stalled", p hasn't linked itself anywhere yet):
//       enq.stalled_read_chain   R next[p's node]
//       enq.stalled_replace      W next[p's node] := node
//       enq.stalled_follow_arg   R next[...] along the argument chain
//       enq.stalled_append       W next[last] := displaced chain
//     found at anchor a ("anchored"):
//       enq.anchored_read_chain  R next[a]
//       enq.anchored_splice      W next[a] := node
//       enq.anchored_follow_arg  R next[...] along the argument chain
//       enq.anchored_append      W next[last] := displaced chain
//       enq.anchored_tail_check  R tail[q]; if tail == a:
//         enq.anchored_publish_last  W lvln[level] := last
//         enq.anchored_advance_tail  W tail[q] := last
//   enq.retire_queue        W lvlq[level] := none
//   enq.retire_node         W lvln[level] := none
//
// dequeue(q) loops:
//   deq.head_check          R head[q]
//   deq.tail_check          R tail[q];  equal -> returns none
//   deq.head_reread         R head[q]
//   deq.next_check          R next[head]; none -> returns none
//   deq.sentinel_check      R head[q]
//   head is the sentinel, recycle it:
//     deq.recycle_read_head R head[q]
//     deq.recycle_read_next R next[head]
//     deq.recycle_advance   W head[q] := next
//     deq.recycle_detach    W next[sentinel] := none
//     (full enqueue step sequence for the sentinel, at this frame's level)
//   otherwise take the head node:
//     deq.take_read_head    R head[q]
//     deq.take_read_next    R next[head]
//     deq.take_advance      W head[q] := next
//     deq.take_detach       W next[node] := none
//
// Every occurrence of a shared variable in the procedure text is one step,
// including re-reads the single-reader discipline makes redundant; the
// point is to expose the worst-case interleavings, not to optimize them.

#include <cassert>
#include <coroutine>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>

#include "afifo/model.hpp"

namespace afifo {

// One pending cell access of a suspended frame.
struct MemOp {
    Cell cell;
    bool is_write = false;
    std::int32_t value = 0;  // value to write; meaningless for reads
    const char* label = "";
};

namespace detail {

// Per-frame channel between the driver and the procedure coroutines.
struct FrameCtx {
    std::optional<MemOp> pending;
    std::int32_t last_read = 0;
    std::coroutine_handle<> current;  // innermost suspended coroutine

    struct ReadAwait {
        FrameCtx* fc;
        Cell cell;
        const char* label;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) noexcept {
            fc->pending = MemOp{cell, false, 0, label};
            fc->current = h;
        }
        std::int32_t await_resume() const noexcept { return fc->last_read; }
    };
    struct WriteAwait {
        FrameCtx* fc;
        Cell cell;
        std::int32_t value;
        const char* label;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) noexcept {
            fc->pending = MemOp{cell, true, value, label};
            fc->current = h;
        }
        void await_resume() const noexcept {}
    };

    ReadAwait read(Cell c, const char* label) { return {this, c, label}; }
    WriteAwait write(Cell c, std::int32_t v, const char* label) { return {this, c, v, label}; }
};

struct PromiseBase {
    std::coroutine_handle<> continuation;

    struct FinalAwait {
        bool await_ready() const noexcept { return false; }
        template <class P>
        std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) const noexcept {
            auto c = h.promise().continuation;
            return c ? c : std::noop_coroutine();
        }
        void await_resume() const noexcept {}
    };

    std::suspend_always initial_suspend() noexcept { return {}; }
    FinalAwait final_suspend() noexcept { return {}; }
    void unhandled_exception() { std::terminate(); }  // procedures do not throw
};

// Minimal nested-coroutine task. A child starts suspended; awaiting it
// transfers control in, and its completion transfers control back. Cell
// accesses suspend the whole stack out to the driver.
template <class T>
class [[nodiscard]] Task {
public:
    struct promise_type : PromiseBase {
        T value{};
        Task get_return_object() {
            return Task{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        void return_value(T v) { value = std::move(v); }
    };

    explicit Task(std::coroutine_handle<promise_type> h) : h_(h) {}
    Task(Task&& o) noexcept : h_(std::exchange(o.h_, {})) {}
    Task(const Task&) = delete;
    Task& operator=(const Task&) = delete;
    ~Task() {
        if (h_) h_.destroy();
    }

    auto operator co_await() && noexcept {
        struct Await {
            std::coroutine_handle<promise_type> child;
            bool await_ready() const noexcept { return false; }
            std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) const noexcept {
                child.promise().continuation = parent;
                return child;
            }
            T await_resume() const { return std::move(child.promise().value); }
        };
        return Await{h_};
    }

    std::coroutine_handle<promise_type> handle() const { return h_; }

private:
    std::coroutine_handle<promise_type> h_;
};

template <>
class [[nodiscard]] Task<void> {
public:
    struct promise_type : PromiseBase {
        Task get_return_object() {
            return Task{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        void return_void() {}
    };

    explicit Task(std::coroutine_handle<promise_type> h) : h_(h) {}
    Task(Task&& o) noexcept : h_(std::exchange(o.h_, {})) {}
    Task(const Task&) = delete;
    Task& operator=(const Task&) = delete;
    ~Task() {
        if (h_) h_.destroy();
    }

    auto operator co_await() && noexcept {
        struct Await {
            std::coroutine_handle<promise_type> child;
            bool await_ready() const noexcept { return false; }
            std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) const noexcept {
                child.promise().continuation = parent;
                return child;
            }
            void await_resume() const noexcept {}
        };
        return Await{h_};
    }

    std::coroutine_handle<promise_type> handle() const { return h_; }

private:
    std::coroutine_handle<promise_type> h_;
};

// Queue facts a procedure needs; captured by value, stable for the run.
struct QueueCtx {
    QueueId id;
    NodeId sentinel;
    Cell head;
    Cell tail;
};

Task<void> enqueue_proc(FrameCtx& fc, QueueCtx q, Level level, NodeId node);
Task<NodeId> dequeue_proc(FrameCtx& fc, QueueCtx q, Level level);
Task<NodeId> follow_proc(FrameCtx& fc, NodeId start, const char* label);
Task<Level> previous_level_proc(FrameCtx& fc, QueueCtx q, Level level, const char* label);
Task<NodeId> find_anchor_proc(FrameCtx& fc, QueueCtx q, Level level, NodeId node);

}  // namespace detail

enum class OpKind : std::uint8_t { enqueue, dequeue };

// The record of one executed step.
struct StepRecord {
    MemOp op;
    std::int32_t value = 0;  // value read, or value written
    bool frame_done = false;
};

// A suspended, resumable enqueue or dequeue. Everything the frame knows
// privately (its program counter, chain cursors, the anchor it found) is
// invisible to other frames; only SharedMemory is.
class OpFrame {
public:
    static OpFrame make_enqueue(const InterruptDomain& d, QueueId q, Level level, NodeId chain);
    static OpFrame make_dequeue(const InterruptDomain& d, QueueId q, Level level = 0);

    OpFrame(OpFrame&&) noexcept = default;
    OpFrame& operator=(OpFrame&&) noexcept = default;

    OpKind kind() const { return kind_; }
    Level level() const { return level_; }
    QueueId queue() const { return queue_; }
    NodeId arg_node() const { return arg_; }

    bool done() const;
    // Dequeue result; only meaningful once done(). no_node means "empty".
    NodeId result() const;

    // The access this frame will perform on its next step.
    const MemOp& pending() const;

    // Performs the pending access against mem and advances to the next
    // access or to completion. One call, one cell access.
    StepRecord step(SharedMemory& mem);

    std::int32_t steps_taken() const { return steps_; }

private:
    struct EnqState {
        detail::Task<void> task;
        explicit EnqState(detail::Task<void> t) : task(std::move(t)) {}
    };
    struct DeqState {
        detail::Task<NodeId> task;
        explicit DeqState(detail::Task<NodeId> t) : task(std::move(t)) {}
    };

    OpFrame(OpKind k, QueueId q, Level level, NodeId arg);

    void prime(std::coroutine_handle<> root);

    OpKind kind_;
    Level level_;
    QueueId queue_;
    NodeId arg_;
    std::int32_t steps_ = 0;
    std::unique_ptr<detail::FrameCtx> ctx_;
    std::unique_ptr<EnqState> enq_;
    std::unique_ptr<DeqState> deq_;
};

// Runs a frame to completion against mem. The sequential-use convenience:
// correct whenever no other frame needs to interleave.
NodeId run_to_completion(OpFrame& frame, SharedMemory& mem);

// Immediate-mode wrappers for plain single-threaded use.
void enqueue_now(InterruptDomain& d, QueueId q, Level level, NodeId chain);
NodeId dequeue_now(InterruptDomain& d, QueueId q);

// Immediate runs of the read-only chain utilities (the same code the
// stepped procedures execute), for diagnostics and tests.
NodeId follow_now(const SharedMemory& mem, NodeId start);
Level previous_level_now(const SharedMemory& mem, QueueId q, Level level);
NodeId find_anchor_now(const InterruptDomain& d, QueueId q, Level level, NodeId node);

}  // namespace afifo
