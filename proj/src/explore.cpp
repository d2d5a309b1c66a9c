#include "afifo/explore.hpp"

#include <cassert>
#include <random>

#include "runner_internal.hpp"

namespace afifo {

void ReorderAggregate::absorb(const ReorderReport& r) {
    max_abs_completion = std::max(max_abs_completion, r.max_abs_completion);
    max_abs_arrival = std::max(max_abs_arrival, r.max_abs_arrival);
    for (const auto& [d, n] : r.hist_completion) hist_completion[d] += n;
    for (const auto& [d, n] : r.hist_arrival) hist_arrival[d] += n;
}

namespace {

using detail_sim::ChoicePolicy;
using detail_sim::RunnerView;

// Replays a recorded prefix of decision indices, extending it with
// first-choice decisions; records the fanout at each fresh boundary so the
// caller can backtrack.
struct CursorPolicy : ChoicePolicy {
    struct Node {
        std::int32_t pick;   // index into the legal list
        std::int32_t count;  // size of the legal list at that boundary
    };
    std::vector<Node>* path;
    std::size_t depth = 0;

    explicit CursorPolicy(std::vector<Node>* p) : path(p) {}

    std::int32_t pick(const std::vector<std::int32_t>& legal, const RunnerView&,
                      std::int64_t) override {
        if (depth < path->size()) {
            const Node& n = (*path)[depth++];
            // The tree is schedule-deterministic; a fanout change means the
            // runner and explorer disagree about legality.
            assert(n.count == static_cast<std::int32_t>(legal.size()));
            return legal[n.pick];
        }
        path->push_back(Node{0, static_cast<std::int32_t>(legal.size())});
        ++depth;
        return legal.front();
    }
};

void record_failures(const RunOutcome& out, std::uint64_t index, std::size_t keep,
                     std::uint64_t& count, std::vector<FailureCase>& kept) {
    for (const Failure& f : out.failures) {
        ++count;
        if (kept.size() < keep)
            kept.push_back(FailureCase{f.invariant, f.detail, out.schedule, index});
    }
}

void absorb_outcome(const Scenario& s, const RunOutcome& out, std::int32_t& max_enq,
                    std::uint64_t& stalls, std::uint64_t& steps, ReorderAggregate& reorder,
                    std::uint64_t* isolated) {
    max_enq = std::max(max_enq, out.max_enqueue_steps);
    if (out.stall_observed) ++stalls;
    steps += static_cast<std::uint64_t>(out.total_steps);
    if (!out.livelock) reorder.absorb(measure_reorder(out, s));
    if (isolated) {
        for (const FrameInfo& f : out.frames)
            if (f.kind == OpKind::enqueue && f.op >= 0 && f.isolated) ++*isolated;
    }
}

// Uniform pick without the implementation-defined std::uniform_int_distribution,
// so reports are bit-identical everywhere.
struct Rng {
    std::mt19937_64 eng;
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        while (true) {
            std::uint64_t r = eng();
            if (r >= threshold) return r % n;
        }
    }
};

struct RandomPolicy : ChoicePolicy {
    Rng* rng;
    explicit RandomPolicy(Rng* r) : rng(r) {}
    std::int32_t pick(const std::vector<std::int32_t>& legal, const RunnerView&,
                      std::int64_t) override {
        return legal[rng->below(legal.size())];
    }
};

}  // namespace

ExploreReport explore(const Scenario& s, const ExploreConfig& cfg) {
    s.validate();
    ExploreReport rep;
    RunConfig rc;
    rc.max_steps = cfg.max_steps;
    rc.drain = true;
    rc.check = true;
    rc.record_trace = false;
    rc.check_peek = cfg.check_peek;

    std::vector<CursorPolicy::Node> path;
    while (true) {
        CursorPolicy policy(&path);
        RunOutcome out = detail_sim::run_with_policy(s, policy, rc);
        ++rep.schedules_visited;
        if (out.livelock) {
            ++rep.livelock_suspects;
            if (rep.livelock_prefixes.size() < 4) rep.livelock_prefixes.push_back(out.schedule);
        }
        record_failures(out, rep.schedules_visited - 1, cfg.keep_failures, rep.failure_count,
                        rep.failures);
        absorb_outcome(s, out, rep.max_enqueue_steps, rep.stall_schedules, rep.total_steps,
                       rep.reorder, &rep.isolated_enqueues);

        if (cfg.max_schedules && rep.schedules_visited >= cfg.max_schedules) {
            rep.truncated = true;
            break;
        }
        // Backtrack to the deepest boundary with an untried sibling.
        while (!path.empty() && path.back().pick + 1 >= path.back().count) path.pop_back();
        if (path.empty()) break;
        ++path.back().pick;
    }
    return rep;
}

FuzzReport fuzz(const Scenario& s, const FuzzConfig& cfg) {
    s.validate();
    FuzzReport rep;
    rep.seed = cfg.seed;
    rep.iterations = cfg.iterations;
    RunConfig rc;
    rc.max_steps = cfg.max_steps;
    rc.drain = true;
    rc.check = true;
    rc.record_trace = false;
    rc.check_peek = false;

    for (std::uint64_t i = 0; i < cfg.iterations; ++i) {
        Rng rng{std::mt19937_64{cfg.seed + 0x9E3779B97F4A7C15ULL * (i + 1)}};
        RandomPolicy policy(&rng);
        RunOutcome out = detail_sim::run_with_policy(s, policy, rc);
        if (out.livelock) ++rep.livelock_suspects;
        record_failures(out, i, cfg.keep_failures, rep.failure_count, rep.failures);
        absorb_outcome(s, out, rep.max_enqueue_steps, rep.stall_schedules, rep.total_steps,
                       rep.reorder, nullptr);
    }
    return rep;
}

}  // namespace afifo
