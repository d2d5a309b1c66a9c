#pragma once

// Internal seam between the runner and the schedule sources (explicit
// schedules, token programs, the explorer's cursor, the fuzzer's RNG).
// Not installed; include only from src/.

#include <cstdint>
#include <vector>

#include "afifo/sim.hpp"

namespace afifo::detail_sim {

struct RunnerView {
    std::int32_t top = -1;  // frame index currently running, -1 if none
    const std::vector<FrameInfo>* frames = nullptr;
    const std::vector<bool>* op_started = nullptr;
};

struct ChoicePolicy {
    virtual ~ChoicePolicy() = default;
    // legal is nonempty and sorted: -1 first when a frame can advance, then
    // startable op indices ascending. boundary counts decisions so far.
    virtual std::int32_t pick(const std::vector<std::int32_t>& legal, const RunnerView& view,
                              std::int64_t boundary) = 0;
};

RunOutcome run_with_policy(const Scenario& s, ChoicePolicy& policy, const RunConfig& cfg);

}  // namespace afifo::detail_sim
