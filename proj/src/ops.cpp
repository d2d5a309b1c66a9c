#include "afifo/ops.hpp"

namespace afifo {
namespace detail {

namespace {

std::int32_t raw(NodeId n) { return n.index; }
std::int32_t raw(QueueId q) { return q.index; }
NodeId node_from(std::int32_t v) { return NodeId{v}; }

}  // namespace

// Walk a chain to its last node, which may be the start itself. One read
// of next[] per hop. Loops forever on a cyclic chain; feeding one in is a
// fatal usage error, not a recoverable state.
Task<NodeId> follow_proc(FrameCtx& fc, NodeId start, const char* label) {
    NodeId chain = start;
    while (true) {
        NodeId nxt = node_from(co_await fc.read(next_cell(chain), label));
        if (nxt.is_none()) co_return chain;
        chain = nxt;
    }
}

// Highest level below `level` whose table entry names this queue. Counts
// down one table read per level; level 0 answers without touching memory.
Task<Level> previous_level_proc(FrameCtx& fc, QueueCtx q, Level level, const char* label) {
    while (--level >= 0) {
        QueueId entry{co_await fc.read(level_queue_cell(level), label)};
        if (entry == q.id) co_return level;
    }
    co_return no_level;
}

// Which already-placed node references `node`? Scans the chains hanging
// off successively lower levels' table entries, then the chain at the
// queue tail. Returns none when nothing references it yet ("stalled").
Task<NodeId> find_anchor_proc(FrameCtx& fc, QueueCtx q, Level level, NodeId node) {
    while (true) {
        level = co_await previous_level_proc(fc, q, level, "enq.anchor_scan_lower");
        NodeId chain;
        if (level < 0) {
            chain = node_from(co_await fc.read(q.tail, "enq.anchor_read_tail"));
        } else {
            chain = node_from(co_await fc.read(level_node_cell(level), "enq.anchor_read_node"));
        }
        while (!chain.is_none()) {
            NodeId nxt = node_from(co_await fc.read(next_cell(chain), "enq.anchor_walk"));
            if (nxt == node) co_return chain;
            chain = nxt;
        }
        if (level < 0) co_return no_node;
    }
}

Task<void> enqueue_proc(FrameCtx& fc, QueueCtx q, Level level, NodeId node) {
    // Publish what this level is working on, node entry strictly before
    // queue entry. Higher levels will now append to our chain and leave
    // the lower table entries for us to examine in peace.
    co_await fc.write(level_node_cell(level), raw(node), "enq.publish_node");
    co_await fc.write(level_queue_cell(level), raw(q.id), "enq.publish_queue");

    Level prev_level = co_await previous_level_proc(fc, q, level, "enq.scan_lower");
    NodeId prev;
    while (prev_level != no_level) {
        prev = node_from(co_await fc.read(level_node_cell(prev_level), "enq.read_lower_node"));
        NodeId tail = node_from(co_await fc.read(q.tail, "enq.tail_vs_lower"));
        if (tail == prev) {
            // That enqueue already moved the tail to its chain end; it only
            // has its table entries left to clear. Clear the queue entry
            // for it and keep looking further down.
            co_await fc.write(level_queue_cell(prev_level), raw(no_queue), "enq.retire_lower_queue");
            prev_level = co_await previous_level_proc(fc, q, prev_level, "enq.scan_again");
        } else {
            break;
        }
    }

    if (prev_level == no_level) {
        // No lower level is mid-enqueue: catch the queue's tail and link
        // ourselves to the end.
        NodeId tail = node_from(co_await fc.read(q.tail, "enq.read_tail"));
        NodeId last = co_await follow_proc(fc, tail, "enq.follow_tail");
        co_await fc.write(next_cell(last), raw(node), "enq.link_tail");
        // Catch our own tail too; interrupts may have appended behind us.
        last = co_await follow_proc(fc, node, "enq.follow_arg");
        co_await fc.write(level_node_cell(level), raw(last), "enq.publish_last");
        co_await fc.write(q.tail, raw(last), "enq.advance_tail");
    } else {
        // A lower level is mid-enqueue. Has it managed to link its node
        // anywhere yet?
        NodeId anchor = co_await find_anchor_proc(fc, q, prev_level, prev);
        if (anchor.is_none()) {
            // Stalled: it is still hunting for a place. Put our node at the
            // front of its private chain; its continuation will pick us up.
            NodeId chain = node_from(co_await fc.read(next_cell(prev), "enq.stalled_read_chain"));
            co_await fc.write(next_cell(prev), raw(node), "enq.stalled_replace");
            NodeId last = co_await follow_proc(fc, node, "enq.stalled_follow_arg");
            co_await fc.write(next_cell(last), raw(chain), "enq.stalled_append");
        } else {
            // Anchored: splice ourselves in right behind the anchor and
            // re-attach whatever chain followed it.
            NodeId chain = node_from(co_await fc.read(next_cell(anchor), "enq.anchored_read_chain"));
            co_await fc.write(next_cell(anchor), raw(node), "enq.anchored_splice");
            NodeId last = co_await follow_proc(fc, node, "enq.anchored_follow_arg");
            co_await fc.write(next_cell(last), raw(chain), "enq.anchored_append");
            // Pre-update the queue tail when the anchor was the tail, so
            // the tail progresses at the earliest opportunity.
            NodeId tail = node_from(co_await fc.read(q.tail, "enq.anchored_tail_check"));
            if (tail == anchor) {
                co_await fc.write(level_node_cell(level), raw(last), "enq.anchored_publish_last");
                co_await fc.write(q.tail, raw(last), "enq.anchored_advance_tail");
            }
        }
    }

    // Clear our table entries, queue entry strictly before node entry.
    // The tail may move past us while this happens; that is fine.
    co_await fc.write(level_queue_cell(level), raw(no_queue), "enq.retire_queue");
    co_await fc.write(level_node_cell(level), raw(no_node), "enq.retire_node");
}

Task<NodeId> dequeue_proc(FrameCtx& fc, QueueCtx q, Level level) {
    while (true) {
        // The last entry can never be removed: with one entry the queue
        // reports empty under either definition. Both checks are needed
        // because writers may be mid-flight.
        NodeId head = node_from(co_await fc.read(q.head, "deq.head_check"));
        NodeId tail = node_from(co_await fc.read(q.tail, "deq.tail_check"));
        if (head == tail) co_return no_node;
        head = node_from(co_await fc.read(q.head, "deq.head_reread"));
        NodeId nxt = node_from(co_await fc.read(next_cell(head), "deq.next_check"));
        if (nxt.is_none()) co_return no_node;

        head = node_from(co_await fc.read(q.head, "deq.sentinel_check"));
        if (head == q.sentinel) {
            // Sentinel recycling: take it off the head, enqueue it again,
            // then go around for the node that surfaced.
            head = node_from(co_await fc.read(q.head, "deq.recycle_read_head"));
            nxt = node_from(co_await fc.read(next_cell(head), "deq.recycle_read_next"));
            co_await fc.write(q.head, raw(nxt), "deq.recycle_advance");
            co_await fc.write(next_cell(q.sentinel), raw(no_node), "deq.recycle_detach");
            co_await enqueue_proc(fc, q, level, q.sentinel);
        } else {
            // Take the head node out and sever its link. From here on no
            // in-flight operation references it at any level.
            NodeId node = node_from(co_await fc.read(q.head, "deq.take_read_head"));
            nxt = node_from(co_await fc.read(next_cell(node), "deq.take_read_next"));
            co_await fc.write(q.head, raw(nxt), "deq.take_advance");
            co_await fc.write(next_cell(node), raw(no_node), "deq.take_detach");
            co_return node;
        }
    }
}

}  // namespace detail

OpFrame::OpFrame(OpKind k, QueueId q, Level level, NodeId arg)
    : kind_(k), level_(level), queue_(q), arg_(arg), ctx_(std::make_unique<detail::FrameCtx>()) {}

void OpFrame::prime(std::coroutine_handle<> root) {
    // Run up to the first cell access. Every procedure touches shared
    // memory before returning, so a fresh frame always has a pending op.
    root.resume();
    assert(ctx_->pending.has_value());
}

OpFrame OpFrame::make_enqueue(const InterruptDomain& d, QueueId q, Level level, NodeId chain) {
    assert(level >= 0 && level < d.level_count());
    detail::QueueCtx qc{q, d.sentinel_of(q), head_cell(q), tail_cell(q)};
    OpFrame f(OpKind::enqueue, q, level, chain);
    f.enq_ = std::make_unique<EnqState>(detail::enqueue_proc(*f.ctx_, qc, level, chain));
    f.prime(f.enq_->task.handle());
    return f;
}

OpFrame OpFrame::make_dequeue(const InterruptDomain& d, QueueId q, Level level) {
    assert(level >= 0 && level < d.level_count());
    detail::QueueCtx qc{q, d.sentinel_of(q), head_cell(q), tail_cell(q)};
    OpFrame f(OpKind::dequeue, q, level, no_node);
    f.deq_ = std::make_unique<DeqState>(detail::dequeue_proc(*f.ctx_, qc, level));
    f.prime(f.deq_->task.handle());
    return f;
}

bool OpFrame::done() const {
    return enq_ ? enq_->task.handle().done() : deq_->task.handle().done();
}

NodeId OpFrame::result() const {
    assert(done());
    return deq_ ? deq_->task.handle().promise().value : no_node;
}

const MemOp& OpFrame::pending() const {
    assert(!done());
    return *ctx_->pending;
}

StepRecord OpFrame::step(SharedMemory& mem) {
    assert(!done() && ctx_->pending.has_value());
    MemOp op = *ctx_->pending;
    ctx_->pending.reset();
    std::int32_t value;
    if (op.is_write) {
        mem.write(op.cell, op.value);
        value = op.value;
    } else {
        value = mem.read(op.cell);
        ctx_->last_read = value;
    }
    ++steps_;
    ctx_->current.resume();
    return StepRecord{op, value, done()};
}

NodeId run_to_completion(OpFrame& frame, SharedMemory& mem) {
    while (!frame.done()) frame.step(mem);
    return frame.result();
}

void enqueue_now(InterruptDomain& d, QueueId q, Level level, NodeId chain) {
    OpFrame f = OpFrame::make_enqueue(d, q, level, chain);
    run_to_completion(f, d.memory());
}

NodeId dequeue_now(InterruptDomain& d, QueueId q) {
    OpFrame f = OpFrame::make_dequeue(d, q, 0);
    return run_to_completion(f, d.memory());
}

namespace {

// Drives a read-only procedure coroutine to completion against a const
// view of memory.
template <class T>
T run_readonly(detail::FrameCtx& fc, detail::Task<T> task, const SharedMemory& mem) {
    task.handle().resume();
    while (!task.handle().done()) {
        MemOp op = *fc.pending;
        fc.pending.reset();
        assert(!op.is_write);
        fc.last_read = mem.read(op.cell);
        fc.current.resume();
    }
    return task.handle().promise().value;
}

}  // namespace

NodeId follow_now(const SharedMemory& mem, NodeId start) {
    detail::FrameCtx fc;
    return run_readonly(fc, detail::follow_proc(fc, start, "follow"), mem);
}

Level previous_level_now(const SharedMemory& mem, QueueId q, Level level) {
    detail::FrameCtx fc;
    detail::QueueCtx qc{q, no_node, head_cell(q), tail_cell(q)};
    return run_readonly(fc, detail::previous_level_proc(fc, qc, level, "pil"), mem);
}

NodeId find_anchor_now(const InterruptDomain& d, QueueId q, Level level, NodeId node) {
    detail::FrameCtx fc;
    detail::QueueCtx qc{q, d.sentinel_of(q), head_cell(q), tail_cell(q)};
    return run_readonly(fc, detail::find_anchor_proc(fc, qc, level, node), d.memory());
}

}  // namespace afifo
