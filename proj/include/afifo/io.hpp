#pragma once

// File formats: line-oriented scenario files, JSONL traces, and the
// byte-stable text reports. The exact grammars are documented in the
// README; goldens diff against these formats.

#include <iosfwd>
#include <string>
#include <vector>

#include "afifo/explore.hpp"
#include "afifo/sim.hpp"

namespace afifo {

// Scenario text, one directive per line, '#' comments:
//   levels <n>
//   queue <name> [self_sentinel]
//   seed <queue> <label> [label ...]
//   enq <level> <queue> <label> [label ...]     (several labels: a chain)
//   deq <level> <queue>
//   schedule <tokens ...>
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);  // UsageError if unreadable

// Trace files: one JSON record per line. First three lines are meta,
// scenario and schedule; then start/step/finish records, per-queue drain
// summaries and the final snapshot.
std::vector<std::string> serialize_trace(const Scenario& s, const RunOutcome& out);
void write_trace_file(const std::string& path, const Scenario& s, const RunOutcome& out);

struct CheckResult {
    bool ok = false;
    std::string message;              // first mismatch or failure, if any
    std::uint64_t failure_count = 0;  // invariant failures during replay
};

// Re-executes the trace's scenario and schedule and verifies the stored
// records and final snapshot match the replay exactly, with the full
// invariant set rechecked.
CheckResult check_trace_lines(const std::vector<std::string>& lines);
CheckResult check_trace_file(const std::string& path);

// Text reports (stable byte-for-byte for fixed inputs).
void render_run(std::ostream& os, const Scenario& s, const RunOutcome& out);
void render_explore(std::ostream& os, const ExploreReport& rep);
void render_fuzz(std::ostream& os, const FuzzReport& rep);

}  // namespace afifo
