// Python bindings over the simulator and the immediate-mode queue API.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "afifo/explore.hpp"
#include "afifo/inspect.hpp"
#include "afifo/io.hpp"
#include "afifo/ops.hpp"
#include "afifo/sim.hpp"

namespace py = pybind11;
using namespace afifo;

namespace {

py::dict reorder_dict(const ReorderReport& rep, const SimWorld& w) {
    py::dict d;
    py::list entries;
    for (const ReorderEntry& e : rep.entries) {
        py::dict je;
        je["node"] = w.labels[e.node];
        je["queue"] = w.queue_names[e.queue];
        je["dequeue_rank"] = e.dequeue_rank;
        je["disp_completion"] = e.disp_completion;
        je["disp_arrival"] = e.disp_arrival;
        entries.append(je);
    }
    d["entries"] = entries;
    d["max_abs_completion"] = rep.max_abs_completion;
    d["max_abs_arrival"] = rep.max_abs_arrival;
    return d;
}

py::dict run_dict(const Scenario& s, const RunOutcome& out) {
    const SimWorld& w = *out.world;
    py::dict d;
    d["schedule"] = schedule_tokens(out.schedule);
    d["steps"] = out.total_steps;
    d["livelock"] = out.livelock;
    py::list deq;
    for (const FrameInfo& f : out.frames)
        if (f.kind == OpKind::dequeue && f.op >= 0)
            deq.append(f.result.is_none() ? py::object(py::none())
                                          : py::object(py::str(w.node_name(f.result))));
    d["dequeued"] = deq;
    py::dict drain;
    for (std::size_t qi = 0; qi < out.drained.size(); ++qi) {
        py::list order;
        for (NodeId n : out.drained[qi]) order.append(w.node_name(n));
        drain[py::str(w.queue_names[qi])] = order;
    }
    d["drain"] = drain;
    py::list fails;
    for (const Failure& f : out.failures)
        fails.append(py::make_tuple(f.invariant, f.detail, f.step));
    d["failures"] = fails;
    d["max_enqueue_steps"] = out.max_enqueue_steps;
    d["stall_observed"] = out.stall_observed;
    if (!out.livelock) d["reorder"] = reorder_dict(measure_reorder(out, s), w);
    py::list trace;
    for (const std::string& line : serialize_trace(s, out)) trace.append(line);
    d["trace"] = trace;
    return d;
}

py::dict explore_dict(const ExploreReport& r) {
    py::dict d;
    d["schedules_visited"] = r.schedules_visited;
    d["failures"] = r.failure_count;
    py::list cases;
    for (const FailureCase& f : r.failures)
        cases.append(py::make_tuple(f.invariant, f.detail, schedule_tokens(f.schedule)));
    d["failure_cases"] = cases;
    d["livelock_suspects"] = r.livelock_suspects;
    d["max_enqueue_steps"] = r.max_enqueue_steps;
    d["stall_schedules"] = r.stall_schedules;
    d["isolated_enqueues"] = r.isolated_enqueues;
    d["total_steps"] = r.total_steps;
    d["truncated"] = r.truncated;
    d["max_abs_completion"] = r.reorder.max_abs_completion;
    d["max_abs_arrival"] = r.reorder.max_abs_arrival;
    return d;
}

py::dict fuzz_dict(const FuzzReport& r) {
    py::dict d;
    d["seed"] = r.seed;
    d["iterations"] = r.iterations;
    d["failures"] = r.failure_count;
    py::list cases;
    for (const FailureCase& f : r.failures)
        cases.append(py::make_tuple(f.invariant, f.detail, schedule_tokens(f.schedule), f.schedule_index));
    d["failure_cases"] = cases;
    d["livelock_suspects"] = r.livelock_suspects;
    d["max_enqueue_steps"] = r.max_enqueue_steps;
    d["stall_schedules"] = r.stall_schedules;
    d["total_steps"] = r.total_steps;
    return d;
}

// Immediate-mode queue handle for plain sequential use from Python.
class PyQueue {
public:
    PyQueue(std::int32_t levels, std::int32_t capacity, bool self_sentinel)
        : domain_(levels, capacity), queue_(domain_.add_queue(self_sentinel)) {}

    void enqueue(const std::string& label, Level level) {
        if (names_.count(label)) throw UsageError("label '" + label + "' already enqueued");
        NodeId n = domain_.add_node();
        names_[label] = n;
        ids_[n.index] = label;
        enqueue_now(domain_, queue_, level, n);
    }

    py::object dequeue() {
        NodeId n = dequeue_now(domain_, queue_);
        if (n.is_none()) return py::none();
        std::string label = ids_.at(n.index);
        names_.erase(label);
        ids_.erase(n.index);
        return py::str(label);
    }

    std::int32_t peek(std::int32_t limit) const {
        return peek_n(domain_.memory(), domain_.queue(queue_), limit);
    }

    std::vector<std::string> check() const {
        std::vector<std::string> out;
        for (const Violation& v : check_consistency(domain_)) out.push_back(v.message);
        return out;
    }

    std::int32_t size_hint() const { return peek(domain_.memory().node_count()); }

private:
    InterruptDomain domain_;
    QueueId queue_;
    std::unordered_map<std::string, NodeId> names_;
    std::unordered_map<std::int32_t, std::string> ids_;
};

}  // namespace

PYBIND11_MODULE(_afifo, m) {
    m.doc() = "interrupt-reentrant multiwriter queue simulator";

    py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
    py::register_exception<ScheduleError>(m, "ScheduleError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);

    m.def("parse_scenario", [](const std::string& text) {
        Scenario s = parse_scenario(text);
        return py::make_tuple(s.level_count, s.ops.size(), s.embedded_schedule);
    }, py::arg("text"), "validate scenario text; returns (levels, op_count, embedded_schedule)");

    m.def("run", [](const std::string& text, const py::object& schedule, std::int64_t max_steps) {
        Scenario s = parse_scenario(text);
        std::string tokens = "*";
        if (!schedule.is_none())
            tokens = schedule.cast<std::string>();
        else if (!s.embedded_schedule.empty())
            tokens = s.embedded_schedule;
        RunConfig cfg;
        cfg.max_steps = max_steps;
        RunOutcome out = run_tokens(s, tokens, cfg);
        return run_dict(s, out);
    }, py::arg("scenario"), py::arg("schedule") = py::none(), py::arg("max_steps") = 10000,
       "execute one schedule over scenario text and drain");

    m.def("explore", [](const std::string& text, std::int64_t max_steps, std::uint64_t max_schedules,
                        bool check_peek) {
        Scenario s = parse_scenario(text);
        ExploreConfig cfg;
        cfg.max_steps = max_steps;
        cfg.max_schedules = max_schedules;
        cfg.check_peek = check_peek;
        return explore_dict(explore(s, cfg));
    }, py::arg("scenario"), py::arg("max_steps") = 10000, py::arg("max_schedules") = 0,
       py::arg("check_peek") = true, "exhaustively explore every legal schedule");

    m.def("fuzz", [](const std::string& text, std::uint64_t seed, std::uint64_t iterations,
                     std::int64_t max_steps) {
        Scenario s = parse_scenario(text);
        FuzzConfig cfg;
        cfg.seed = seed;
        cfg.iterations = iterations;
        cfg.max_steps = max_steps;
        return fuzz_dict(fuzz(s, cfg));
    }, py::arg("scenario"), py::arg("seed"), py::arg("iterations"), py::arg("max_steps") = 10000,
       "run seeded random schedules");

    m.def("check_trace", [](const std::vector<std::string>& lines) {
        CheckResult res = check_trace_lines(lines);
        py::dict d;
        d["ok"] = res.ok;
        d["message"] = res.message;
        d["failures"] = res.failure_count;
        return d;
    }, py::arg("lines"), "replay a serialized trace and verify it");

    py::class_<PyQueue>(m, "Queue",
                        "sequential-use handle over one queue (single host thread only)")
        .def(py::init<std::int32_t, std::int32_t, bool>(), py::arg("levels") = 16,
             py::arg("capacity") = 64, py::arg("self_sentinel") = false)
        .def("enqueue", &PyQueue::enqueue, py::arg("label"), py::arg("level") = 0)
        .def("dequeue", &PyQueue::dequeue)
        .def("peek", &PyQueue::peek, py::arg("limit") = 1)
        .def("check", &PyQueue::check)
        .def("__len__", &PyQueue::size_hint);
}
