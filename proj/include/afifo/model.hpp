#pragma once

// Shared-memory model for interrupt-reentrant queues.
//
// Everything a preempting interrupt handler can observe lives in one
// SharedMemory object as individually addressable cells:
//
//   next[n]   - the single link pointer of node n
//   head[q]   - queue q's head
//   tail[q]   - queue q's tail
//   lvlq[l]   - interrupt level table, queue entry for level l
//   lvln[l]   - interrupt level table, node entry for level l
//
// One cell load or store is one atomic step; no operation touches two
// cells in a step. This is the single-CPU model the queue algorithm is
// built for: word-sized pointer reads and writes are indivisible, and
// writes are visible to every later step. Nothing here is safe for true
// multi-CPU parallelism, and it is not meant to be; the whole structure
// may be handed between host threads only as a unit, between steps.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace afifo {

// Arena index of a node. -1 is "no node".
struct NodeId {
    std::int32_t index = -1;

    constexpr NodeId() = default;
    constexpr explicit NodeId(std::int32_t i) : index(i) {}
    constexpr bool is_none() const { return index < 0; }
    friend constexpr bool operator==(NodeId, NodeId) = default;
};
inline constexpr NodeId no_node{};

// Registry index of a queue. -1 is "no queue".
struct QueueId {
    std::int32_t index = -1;

    constexpr QueueId() = default;
    constexpr explicit QueueId(std::int32_t i) : index(i) {}
    constexpr bool is_none() const { return index < 0; }
    friend constexpr bool operator==(QueueId, QueueId) = default;
};
inline constexpr QueueId no_queue{};

// Interrupt level. Level k preempts only levels strictly below k and runs
// to completion before they resume. -1 is "no level".
using Level = std::int32_t;
inline constexpr Level no_level = -1;

enum class CellKind : std::uint8_t {
    node_next,
    queue_head,
    queue_tail,
    level_queue,
    level_node,
};

struct Cell {
    CellKind kind = CellKind::node_next;
    std::int32_t index = 0;

    friend constexpr bool operator==(Cell, Cell) = default;
};

constexpr Cell next_cell(NodeId n) { return {CellKind::node_next, n.index}; }
constexpr Cell head_cell(QueueId q) { return {CellKind::queue_head, q.index}; }
constexpr Cell tail_cell(QueueId q) { return {CellKind::queue_tail, q.index}; }
constexpr Cell level_queue_cell(Level l) { return {CellKind::level_queue, l}; }
constexpr Cell level_node_cell(Level l) { return {CellKind::level_node, l}; }

// "next[3]", "head[0]", "lvlq[2]", ...
std::string to_string(Cell c);

// The complete preemptible state. Plain value type: copyable, comparable,
// so snapshots and replay checks are trivial.
class SharedMemory {
public:
    SharedMemory() = default;
    SharedMemory(std::int32_t levels) : level_queue_(levels, -1), level_node_(levels, -1) {}

    std::int32_t read(Cell c) const;
    void write(Cell c, std::int32_t value);

    // Typed accessors for inspection code (not used by stepped procedures).
    NodeId next_of(NodeId n) const { return NodeId{node_next_.at(n.index)}; }
    NodeId head_of(QueueId q) const { return NodeId{queue_head_.at(q.index)}; }
    NodeId tail_of(QueueId q) const { return NodeId{queue_tail_.at(q.index)}; }
    QueueId level_queue(Level l) const { return QueueId{level_queue_.at(l)}; }
    NodeId level_node(Level l) const { return NodeId{level_node_.at(l)}; }

    std::int32_t node_count() const { return static_cast<std::int32_t>(node_next_.size()); }
    std::int32_t queue_count() const { return static_cast<std::int32_t>(queue_head_.size()); }
    std::int32_t level_count() const { return static_cast<std::int32_t>(level_queue_.size()); }

    friend bool operator==(const SharedMemory&, const SharedMemory&) = default;

private:
    friend class InterruptDomain;

    std::vector<std::int32_t> node_next_;
    std::vector<std::int32_t> queue_head_;
    std::vector<std::int32_t> queue_tail_;
    std::vector<std::int32_t> level_queue_;
    std::vector<std::int32_t> level_node_;
};

// Immutable per-queue facts. head/tail live in SharedMemory; the sentinel
// identity and the queue's own id never change after construction.
struct QueueInfo {
    QueueId id;
    NodeId sentinel;
    bool self_sentinel = false;
};

struct ArenaExhausted : std::runtime_error {
    ArenaExhausted() : std::runtime_error("node arena exhausted") {}
};

// One interrupt domain: a node arena, the per-level table shared by every
// queue in the domain, and the queue registry. Default 16 levels covers a
// small MCU's full interrupt map; simulations typically use 3 or 4.
class InterruptDomain {
public:
    explicit InterruptDomain(std::int32_t level_count = 16, std::int32_t node_capacity = 64);

    // Allocates a free node (next = none). Throws ArenaExhausted when the
    // configured capacity is used up.
    NodeId add_node();

    // Creates a queue with head = tail = sentinel and sentinel.next = none.
    // With self_sentinel the queue embeds its own sentinel cell instead of
    // consuming an arena node.
    QueueId add_queue(bool self_sentinel = false);

    const QueueInfo& queue(QueueId q) const { return queues_.at(q.index); }
    NodeId sentinel_of(QueueId q) const { return queue(q).sentinel; }

    std::int32_t level_count() const { return level_count_; }
    std::int32_t node_capacity() const { return node_capacity_; }
    std::int32_t user_node_count() const { return user_nodes_; }
    std::int32_t queue_count() const { return static_cast<std::int32_t>(queues_.size()); }

    SharedMemory& memory() { return mem_; }
    const SharedMemory& memory() const { return mem_; }

private:
    std::int32_t level_count_;
    std::int32_t node_capacity_;
    std::int32_t user_nodes_ = 0;
    std::vector<QueueInfo> queues_;
    SharedMemory mem_;
};

}  // namespace afifo
