#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "afifo/io.hpp"

using namespace afifo;

namespace {

std::string scenario_path(const char* name) {
    return std::string(AFIFO_SCENARIO_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("scenario files parse") {
    Scenario s = load_scenario_file(scenario_path("reorder_two_level.scn"));
    CHECK(s.level_count == 3);
    REQUIRE(s.queues.size() == 1);
    CHECK(s.queues[0].name == "q0");
    CHECK(s.queues[0].seed == std::vector<std::string>{"A"});
    REQUIRE(s.ops.size() == 2);
    CHECK(s.ops[0].kind == OpKind::enqueue);
    CHECK(s.ops[0].level == 1);
    CHECK(s.ops[1].level == 2);
    CHECK(s.embedded_schedule == "s0 a6 s1 f *");
}

TEST_CASE("scenario parse errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_scenario("levels two\n"), "line 1: levels wants a number, got 'two'",
                         ScenarioError);
    CHECK_THROWS_AS(parse_scenario("queue q0\nenq 1 q1 A\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("queue q0\nwat 1\n"), ScenarioError);
    CHECK_THROWS_AS(parse_scenario("queue q0\nenq 0 q0\n"), ScenarioError);
    // Validation errors surface too: a dequeue off level 0.
    CHECK_THROWS_AS(load_scenario_file(scenario_path("bogus_deq_level.scn")), ScenarioError);
    // Unreadable file is a usage error.
    CHECK_THROWS_AS(load_scenario_file("/nonexistent/nope.scn"), UsageError);
}

TEST_CASE("trace round trip verifies") {
    Scenario s = load_scenario_file(scenario_path("reorder_two_level.scn"));
    RunOutcome out = run_tokens(s, s.embedded_schedule);
    std::vector<std::string> lines = serialize_trace(s, out);
    REQUIRE(lines.size() > 4);

    CheckResult res = check_trace_lines(lines);
    CHECK(res.ok);
    CHECK(res.failure_count == 0);
    CHECK(res.message.find("snapshot matches") != std::string::npos);

    SUBCASE("a tampered record is caught") {
        // Flip one recorded value deep in the trace.
        for (auto& l : lines) {
            auto pos = l.find("\"value\":\"B\"");
            if (pos != std::string::npos) {
                l.replace(pos, 11, "\"value\":\"C\"");
                break;
            }
        }
        CheckResult bad = check_trace_lines(lines);
        CHECK(!bad.ok);
        CHECK(bad.message.find("differs from replay") != std::string::npos);
    }

    SUBCASE("a non-trace file is a usage error") {
        CHECK_THROWS_AS(check_trace_lines({"{}", "{}", "{}"}), UsageError);
        CHECK_THROWS_AS(check_trace_lines({"not json at all"}), UsageError);
    }
}

TEST_CASE("trace golden bytes") {
    // The serialized reorder trace is a committed golden; the step
    // decomposition, labels and formats must not drift unintentionally.
    Scenario s = load_scenario_file(scenario_path("reorder_two_level.scn"));
    RunOutcome out = run_tokens(s, s.embedded_schedule);
    std::vector<std::string> lines = serialize_trace(s, out);

    std::ifstream golden(std::string(AFIFO_GOLDEN_DIR) + "/reorder_two_level.trace");
    REQUIRE_MESSAGE(golden.good(), "missing golden; regenerate with: afifo run "
                                   "tests/scenarios/reorder_two_level.scn --trace <golden>");
    std::vector<std::string> want;
    for (std::string l; std::getline(golden, l);)
        if (!l.empty()) want.push_back(l);
    REQUIRE(lines.size() == want.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        CAPTURE(i);
        CHECK(lines[i] == want[i]);
    }
}

TEST_CASE("run report is byte stable") {
    Scenario s = load_scenario_file(scenario_path("reorder_two_level.scn"));
    RunOutcome o1 = run_tokens(s, s.embedded_schedule);
    RunOutcome o2 = run_tokens(s, s.embedded_schedule);
    std::ostringstream r1, r2;
    render_run(r1, s, o1);
    render_run(r2, s, o2);
    CHECK(r1.str() == r2.str());
    CHECK(r1.str().find("drain q0: A C B") != std::string::npos);
    CHECK(r1.str().find("invariants: ok") != std::string::npos);
}
