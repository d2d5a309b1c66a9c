#pragma once

// Read-only inspection of queue state: the wait-free peek and the fatal
// state detector.

#include <cstdint>
#include <string>
#include <vector>

#include "afifo/model.hpp"

namespace afifo {

// Counts available (non-sentinel) nodes from the head, up to limit. Skips
// the sentinel instead of recycling it and never looks past the tail.
// Touches nothing: safe to call from any level alongside in-flight
// enqueues. Alongside an in-flight dequeue the count is a snapshot only.
std::int32_t peek_n(const SharedMemory& mem, const QueueInfo& q, std::int32_t limit);

enum class ViolationKind : std::uint8_t {
    sentinel_self_loop,   // sentinel points at itself; enqueue would spin
    cycle,                // a loop reachable from the head
    lost_sentinel,        // sentinel unreachable with no recycle in flight
    null_endpoint,        // head or tail is none
    orphan_level_entry,   // table level has a queue entry but no node entry
    cross_queue_node,     // one node reachable from two queue heads
    duplicate_reference,  // two link cells reference the same node
};

const char* to_string(ViolationKind k);

struct Violation {
    ViolationKind kind;
    QueueId queue;   // none when not queue-specific
    NodeId node;     // none when not node-specific
    Level level = no_level;
    bool advisory = false;
    std::string message;
};

// Scans every queue and the level table for the unrecoverable states the
// algorithm is designed never to produce. Authoritative only at
// quiescence; set advisory when frames are in flight, since chains under
// construction legitimately look broken. recycle_in_flight suppresses the
// lost-sentinel check for queues whose sentinel a dequeue currently holds.
std::vector<Violation> check_consistency(const InterruptDomain& d, bool advisory = false,
                                         bool recycle_in_flight = false);

// Nodes reachable from a queue's head by following next, in order. Stops
// if it ever revisits a node (the cycle is reported by check_consistency).
std::vector<NodeId> reachable_from_head(const SharedMemory& mem, QueueId q);

}  // namespace afifo
