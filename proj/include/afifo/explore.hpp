#pragma once

// Exhaustive schedule exploration and seeded schedule fuzzing.
//
// The explorer enumerates, depth first, every legal schedule of a
// scenario: at each boundary it tries advancing the running frame and
// starting each pending operation whose level allows it. Every schedule
// runs to quiescence, is drained, and has the full invariant set checked;
// any failure comes back with its exact reproducing schedule. No
// partial-order reduction is applied: the whole point is to visit every
// cell-level interleaving at desk scale.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "afifo/sim.hpp"

namespace afifo {

struct FailureCase {
    std::string invariant;
    std::string detail;
    Schedule schedule;
    std::uint64_t schedule_index = 0;  // DFS visit order / fuzz iteration
};

struct ReorderAggregate {
    std::int32_t max_abs_completion = 0;
    std::int32_t max_abs_arrival = 0;
    std::map<std::int32_t, std::int64_t> hist_completion;  // |displacement| -> nodes
    std::map<std::int32_t, std::int64_t> hist_arrival;

    void absorb(const ReorderReport& r);
};

struct ExploreConfig {
    std::int64_t max_steps = 10000;   // per-schedule livelock bound
    bool check_peek = true;           // verify peek_n write-freedom at every boundary
    std::uint64_t max_schedules = 0;  // safety valve; 0 = unlimited
    std::size_t keep_failures = 16;
};

struct ExploreReport {
    std::uint64_t schedules_visited = 0;
    std::uint64_t failure_count = 0;
    std::vector<FailureCase> failures;      // first keep_failures, with reproducers
    std::uint64_t livelock_suspects = 0;
    std::vector<Schedule> livelock_prefixes;  // first few
    std::int32_t max_enqueue_steps = 0;
    std::uint64_t stall_schedules = 0;      // schedules with an invisible completed enqueue
    std::uint64_t isolated_enqueues = 0;    // frame instances meeting the isolation premise
    std::uint64_t total_steps = 0;
    bool truncated = false;
    ReorderAggregate reorder;
};

ExploreReport explore(const Scenario& s, const ExploreConfig& cfg = {});

struct FuzzConfig {
    std::uint64_t seed = 0;
    std::uint64_t iterations = 1000;
    std::int64_t max_steps = 10000;
    std::size_t keep_failures = 16;
};

struct FuzzReport {
    std::uint64_t seed = 0;
    std::uint64_t iterations = 0;
    std::uint64_t failure_count = 0;
    std::vector<FailureCase> failures;  // schedule_index is the iteration
    std::uint64_t livelock_suspects = 0;
    std::int32_t max_enqueue_steps = 0;
    std::uint64_t stall_schedules = 0;
    std::uint64_t total_steps = 0;
    ReorderAggregate reorder;
};

// Runs `iterations` uniformly random legal schedules derived from the
// seed. Identical (scenario, seed, iterations) gives an identical report.
FuzzReport fuzz(const Scenario& s, const FuzzConfig& cfg);

}  // namespace afifo
