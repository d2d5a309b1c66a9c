#include "afifo/model.hpp"

#include <cassert>

namespace afifo {

std::string to_string(Cell c) {
    const char* name = "?";
    switch (c.kind) {
        case CellKind::node_next: name = "next"; break;
        case CellKind::queue_head: name = "head"; break;
        case CellKind::queue_tail: name = "tail"; break;
        case CellKind::level_queue: name = "lvlq"; break;
        case CellKind::level_node: name = "lvln"; break;
    }
    return std::string(name) + "[" + std::to_string(c.index) + "]";
}

std::int32_t SharedMemory::read(Cell c) const {
    switch (c.kind) {
        case CellKind::node_next: return node_next_.at(c.index);
        case CellKind::queue_head: return queue_head_.at(c.index);
        case CellKind::queue_tail: return queue_tail_.at(c.index);
        case CellKind::level_queue: return level_queue_.at(c.index);
        case CellKind::level_node: return level_node_.at(c.index);
    }
    assert(false);
    return -1;
}

void SharedMemory::write(Cell c, std::int32_t value) {
    switch (c.kind) {
        case CellKind::node_next: node_next_.at(c.index) = value; return;
        case CellKind::queue_head: queue_head_.at(c.index) = value; return;
        case CellKind::queue_tail: queue_tail_.at(c.index) = value; return;
        case CellKind::level_queue: level_queue_.at(c.index) = value; return;
        case CellKind::level_node: level_node_.at(c.index) = value; return;
    }
    assert(false);
}

InterruptDomain::InterruptDomain(std::int32_t level_count, std::int32_t node_capacity)
    : level_count_(level_count), node_capacity_(node_capacity), mem_(level_count) {
    if (level_count < 1) throw std::invalid_argument("level_count must be at least 1");
    if (node_capacity < 0) throw std::invalid_argument("node_capacity must not be negative");
}

NodeId InterruptDomain::add_node() {
    if (user_nodes_ >= node_capacity_) throw ArenaExhausted{};
    ++user_nodes_;
    mem_.node_next_.push_back(-1);
    return NodeId{static_cast<std::int32_t>(mem_.node_next_.size() - 1)};
}

QueueId InterruptDomain::add_queue(bool self_sentinel) {
    NodeId sentinel;
    if (self_sentinel) {
        // The queue doubles as its own sentinel node; no arena slot used.
        mem_.node_next_.push_back(-1);
        sentinel = NodeId{static_cast<std::int32_t>(mem_.node_next_.size() - 1)};
    } else {
        sentinel = add_node();
    }
    QueueId id{static_cast<std::int32_t>(queues_.size())};
    queues_.push_back(QueueInfo{id, sentinel, self_sentinel});
    mem_.queue_head_.push_back(sentinel.index);
    mem_.queue_tail_.push_back(sentinel.index);
    return id;
}

}  // namespace afifo
