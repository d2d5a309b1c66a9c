#pragma once

// The shipped exploration suite: every combination of 2-3 interrupt
// levels, 2-4 enqueues and 0-2 interleaved dequeues, with chain enqueues
// and sentinel-recycling mid-states represented. Kept at desk scale so
// exhaustive exploration of all legal preemption schedules stays cheap.

#include <string>
#include <vector>

#include "afifo/sim.hpp"

namespace afifo_tests {

struct SuiteEntry {
    std::string name;
    afifo::Scenario scenario;
};

inline std::vector<SuiteEntry> exhaustive_suite() {
    using afifo::OpKind;
    using afifo::Scenario;
    std::vector<SuiteEntry> out;
    for (std::int32_t levels = 2; levels <= 3; ++levels) {
        for (std::int32_t enqs = 2; enqs <= 4; ++enqs) {
            for (std::int32_t deqs = 0; deqs <= 2; ++deqs) {
                Scenario s;
                s.level_count = levels;
                afifo::ScenarioQueue q;
                q.name = "q0";
                // Dequeue variants start with one seeded node so a dequeue
                // racing the enqueues has material and the sentinel gets
                // recycled mid-exploration.
                if (deqs > 0) q.seed = {"S"};
                s.queues.push_back(q);
                for (std::int32_t e = 0; e < enqs; ++e) {
                    afifo::ScenarioOp op;
                    op.kind = OpKind::enqueue;
                    // Spread enqueues over the interrupt levels; with four
                    // of them, pair the levels up so the tree stays small.
                    if (levels == 2)
                        op.level = 1;
                    else
                        op.level = (enqs == 4) ? (e < 2 ? 1 : 2) : (e % 2 == 0 ? 1 : 2);
                    op.queue = 0;
                    std::string label(1, static_cast<char>('A' + e));
                    // One two-node chain enqueue in the three-enqueue rows.
                    if (enqs == 3 && e == 2)
                        op.labels = {label, label + "2"};
                    else
                        op.labels = {label};
                    s.ops.push_back(op);
                }
                for (std::int32_t p = 0; p < deqs; ++p)
                    s.ops.push_back({OpKind::dequeue, 0, 0, {}});
                out.push_back({"L" + std::to_string(levels) + "_E" + std::to_string(enqs) + "_D" +
                                   std::to_string(deqs),
                               std::move(s)});
            }
        }
    }
    return out;
}

// The endurance fuzzing template: 4 levels, 8 enqueues (one a chain),
// interleaved dequeues.
inline afifo::Scenario fuzz_template() {
    using afifo::OpKind;
    afifo::Scenario s;
    s.level_count = 4;
    s.queues.push_back({"q0", false, {"S"}});
    const afifo::Level levels[8] = {1, 2, 3, 1, 2, 3, 1, 2};
    for (int e = 0; e < 8; ++e) {
        afifo::ScenarioOp op;
        op.kind = OpKind::enqueue;
        op.level = levels[e];
        op.queue = 0;
        std::string label(1, static_cast<char>('A' + e));
        if (e == 7)
            op.labels = {label, label + "2"};
        else
            op.labels = {label};
        s.ops.push_back(op);
    }
    s.ops.push_back({OpKind::dequeue, 0, 0, {}});
    s.ops.push_back({OpKind::dequeue, 0, 0, {}});
    return s;
}

}  // namespace afifo_tests
