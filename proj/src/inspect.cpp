#include "afifo/inspect.hpp"

#include <algorithm>

namespace afifo {

std::int32_t peek_n(const SharedMemory& mem, const QueueInfo& q, std::int32_t limit) {
    if (limit <= 0) return 0;
    NodeId tail = mem.tail_of(q.id);
    NodeId cur = mem.head_of(q.id);
    std::int32_t count = 0;
    std::int32_t hops = 0;
    while (!cur.is_none()) {
        if (cur != q.sentinel) ++count;
        if (count >= limit || cur == tail) break;
        // A cycle would be a fatal state; bound the walk rather than hang.
        if (++hops > mem.node_count()) break;
        cur = mem.next_of(cur);
    }
    return count;
}

const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::sentinel_self_loop: return "sentinel_self_loop";
        case ViolationKind::cycle: return "cycle";
        case ViolationKind::lost_sentinel: return "lost_sentinel";
        case ViolationKind::null_endpoint: return "null_endpoint";
        case ViolationKind::orphan_level_entry: return "orphan_level_entry";
        case ViolationKind::cross_queue_node: return "cross_queue_node";
        case ViolationKind::duplicate_reference: return "duplicate_reference";
    }
    return "?";
}

std::vector<NodeId> reachable_from_head(const SharedMemory& mem, QueueId q) {
    std::vector<NodeId> out;
    std::vector<bool> seen(mem.node_count(), false);
    NodeId cur = mem.head_of(q);
    while (!cur.is_none() && !seen[cur.index]) {
        seen[cur.index] = true;
        out.push_back(cur);
        cur = mem.next_of(cur);
    }
    return out;
}

std::vector<Violation> check_consistency(const InterruptDomain& d, bool advisory,
                                         bool recycle_in_flight) {
    const SharedMemory& mem = d.memory();
    std::vector<Violation> out;
    auto report = [&](ViolationKind kind, QueueId q, NodeId n, Level lvl, std::string msg) {
        out.push_back(Violation{kind, q, n, lvl, advisory, std::move(msg)});
    };

    std::vector<std::int32_t> owner(mem.node_count(), -1);  // queue reaching each node

    for (std::int32_t qi = 0; qi < d.queue_count(); ++qi) {
        QueueId q{qi};
        const QueueInfo& info = d.queue(q);
        NodeId head = mem.head_of(q);
        NodeId tail = mem.tail_of(q);

        if (head.is_none() || tail.is_none()) {
            report(ViolationKind::null_endpoint, q, no_node, no_level,
                   "queue " + std::to_string(qi) + " has a none head or tail");
            continue;
        }
        if (mem.next_of(info.sentinel) == info.sentinel) {
            report(ViolationKind::sentinel_self_loop, q, info.sentinel, no_level,
                   "sentinel of queue " + std::to_string(qi) + " points at itself");
        }

        // Walk the chain once, flagging a revisit as a cycle.
        std::vector<bool> seen(mem.node_count(), false);
        bool sentinel_seen = false;
        bool cycle = false;
        for (NodeId cur = head; !cur.is_none(); cur = mem.next_of(cur)) {
            if (seen[cur.index]) {
                cycle = true;
                report(ViolationKind::cycle, q, cur, no_level,
                       "cycle through node " + std::to_string(cur.index) + " reachable from head of queue " +
                           std::to_string(qi));
                break;
            }
            seen[cur.index] = true;
            if (cur == info.sentinel) sentinel_seen = true;
            if (owner[cur.index] >= 0 && owner[cur.index] != qi) {
                report(ViolationKind::cross_queue_node, q, cur, no_level,
                       "node " + std::to_string(cur.index) + " reachable from queues " +
                           std::to_string(owner[cur.index]) + " and " + std::to_string(qi));
            }
            owner[cur.index] = qi;
        }
        if (!sentinel_seen && !cycle && !recycle_in_flight) {
            report(ViolationKind::lost_sentinel, q, info.sentinel, no_level,
                   "sentinel of queue " + std::to_string(qi) + " is not reachable from its head");
        }
    }

    // In-degree over all link cells: no node may be referenced twice.
    std::vector<std::int32_t> referrer(mem.node_count(), -1);
    for (std::int32_t ni = 0; ni < mem.node_count(); ++ni) {
        NodeId nxt = mem.next_of(NodeId{ni});
        if (nxt.is_none()) continue;
        if (referrer[nxt.index] >= 0) {
            report(ViolationKind::duplicate_reference, no_queue, nxt, no_level,
                   "node " + std::to_string(nxt.index) + " referenced by both node " +
                       std::to_string(referrer[nxt.index]) + " and node " + std::to_string(ni));
        } else {
            referrer[nxt.index] = ni;
        }
    }

    for (Level l = 0; l < d.level_count(); ++l) {
        if (!mem.level_queue(l).is_none() && mem.level_node(l).is_none()) {
            report(ViolationKind::orphan_level_entry, mem.level_queue(l), no_node, l,
                   "level " + std::to_string(l) + " has a queue entry but no node entry");
        }
    }

    return out;
}

}  // namespace afifo
