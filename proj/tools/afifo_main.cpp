// afifo command line: run, explore, fuzz and check over scenario files.
// Exit codes: 0 success, 1 invariant failures or trace mismatch, 2 usage
// or parse errors.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "afifo/explore.hpp"
#include "afifo/io.hpp"
#include "afifo/sim.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw afifo::UsageError("cannot read file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_run(const std::string& scenario_path, const std::string& schedule_path,
            const std::string& trace_path, std::int64_t max_steps) {
    afifo::Scenario s = afifo::load_scenario_file(scenario_path);
    std::string tokens;
    if (!schedule_path.empty())
        tokens = read_file(schedule_path);
    else if (!s.embedded_schedule.empty())
        tokens = s.embedded_schedule;
    else
        tokens = "*";

    afifo::RunConfig cfg;
    cfg.max_steps = max_steps;
    cfg.record_trace = true;
    afifo::RunOutcome out = afifo::run_tokens(s, tokens, cfg);

    std::cout << "scenario: " << scenario_path << "\n";
    afifo::render_run(std::cout, s, out);
    if (!trace_path.empty()) {
        afifo::write_trace_file(trace_path, s, out);
        std::cout << "trace: " << trace_path << "\n";
    }
    return (out.failures.empty() && !out.livelock) ? 0 : 1;
}

int cmd_explore(const std::string& scenario_path, std::int64_t max_steps,
                std::uint64_t max_schedules, bool no_peek_check) {
    afifo::Scenario s = afifo::load_scenario_file(scenario_path);
    afifo::ExploreConfig cfg;
    cfg.max_steps = max_steps;
    cfg.max_schedules = max_schedules;
    cfg.check_peek = !no_peek_check;
    afifo::ExploreReport rep = afifo::explore(s, cfg);
    std::cout << "scenario: " << scenario_path << "\n";
    afifo::render_explore(std::cout, rep);
    return rep.failure_count == 0 ? 0 : 1;
}

int cmd_fuzz(const std::string& scenario_path, std::uint64_t seed, std::uint64_t iters,
             std::int64_t max_steps) {
    afifo::Scenario s = afifo::load_scenario_file(scenario_path);
    afifo::FuzzConfig cfg;
    cfg.seed = seed;
    cfg.iterations = iters;
    cfg.max_steps = max_steps;
    afifo::FuzzReport rep = afifo::fuzz(s, cfg);
    std::cout << "scenario: " << scenario_path << "\n";
    afifo::render_fuzz(std::cout, rep);
    return rep.failure_count == 0 ? 0 : 1;
}

int cmd_check(const std::string& trace_path) {
    afifo::CheckResult res = afifo::check_trace_file(trace_path);
    std::cout << (res.ok ? "ok: " : "FAIL: ") << res.message << "\n";
    return res.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interrupt-reentrant queue simulator"};
    app.require_subcommand(1);

    std::string scenario_path, schedule_path, trace_path;
    std::int64_t max_steps = 10000;
    std::uint64_t seed = 0, iters = 1000, max_schedules = 0;
    bool no_peek_check = false;

    CLI::App* run = app.add_subcommand("run", "execute one schedule and drain");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--schedule", schedule_path, "schedule token file");
    run->add_option("--trace", trace_path, "write a JSONL trace here");
    run->add_option("--max-steps", max_steps, "livelock bound");

    CLI::App* explore = app.add_subcommand("explore", "enumerate every legal schedule");
    explore->add_option("scenario", scenario_path, "scenario file")->required();
    explore->add_option("--max-steps", max_steps, "livelock bound per schedule");
    explore->add_option("--max-schedules", max_schedules, "stop after this many schedules");
    explore->add_flag("--no-peek-check", no_peek_check, "skip peek write-freedom checking");

    CLI::App* fuzz = app.add_subcommand("fuzz", "run seeded random schedules");
    fuzz->add_option("scenario", scenario_path, "scenario file")->required();
    fuzz->add_option("--seed", seed, "random seed")->required();
    fuzz->add_option("--iters", iters, "iteration count")->required();
    fuzz->add_option("--max-steps", max_steps, "livelock bound per schedule");

    CLI::App* check = app.add_subcommand("check", "replay and verify a trace file");
    check->add_option("trace", trace_path, "trace file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(scenario_path, schedule_path, trace_path, max_steps);
        if (explore->parsed()) return cmd_explore(scenario_path, max_steps, max_schedules, no_peek_check);
        if (fuzz->parsed()) return cmd_fuzz(scenario_path, seed, iters, max_steps);
        if (check->parsed()) return cmd_check(trace_path);
    } catch (const afifo::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const afifo::ScheduleError& e) {
        std::cerr << "schedule error: " << e.what() << "\n";
        return 2;
    } catch (const afifo::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
