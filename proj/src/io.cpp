#include "afifo/io.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace afifo {

using json = nlohmann::ordered_json;

namespace {

std::optional<std::int64_t> parse_int(const std::string& w) {
    if (w.empty()) return std::nullopt;
    std::size_t pos = 0;
    std::int64_t v;
    try {
        v = std::stoll(w, &pos);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (pos != w.size()) return std::nullopt;
    return v;
}

std::string queue_name_of(const SimWorld& w, std::int32_t raw) {
    if (raw < 0) return "-";
    return w.queue_names.at(raw);
}

std::string cell_name(const SimWorld& w, Cell c) {
    switch (c.kind) {
        case CellKind::node_next: return "next[" + w.node_name(NodeId{c.index}) + "]";
        case CellKind::queue_head: return "head[" + queue_name_of(w, c.index) + "]";
        case CellKind::queue_tail: return "tail[" + queue_name_of(w, c.index) + "]";
        case CellKind::level_queue: return "lvlq[" + std::to_string(c.index) + "]";
        case CellKind::level_node: return "lvln[" + std::to_string(c.index) + "]";
    }
    return "?";
}

std::string cell_value_name(const SimWorld& w, Cell c, std::int32_t value) {
    if (c.kind == CellKind::level_queue) return queue_name_of(w, value);
    return w.node_name(NodeId{value});
}

std::string signed_str(std::int32_t v) {
    if (v > 0) return "+" + std::to_string(v);
    return std::to_string(v);
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["type"] = "scenario";
    j["levels"] = s.level_count;
    j["queues"] = json::array();
    for (const auto& q : s.queues) {
        json jq;
        jq["name"] = q.name;
        jq["self_sentinel"] = q.self_sentinel;
        jq["seed"] = q.seed;
        j["queues"].push_back(jq);
    }
    j["ops"] = json::array();
    for (const auto& op : s.ops) {
        json jo;
        jo["op"] = op.kind == OpKind::enqueue ? "enq" : "deq";
        jo["level"] = op.level;
        jo["queue"] = s.queues.at(op.queue).name;
        if (op.kind == OpKind::enqueue) jo["nodes"] = op.labels;
        j["ops"].push_back(jo);
    }
    return j;
}

Scenario scenario_from_json(const json& j) {
    Scenario s;
    s.level_count = j.at("levels").get<std::int32_t>();
    std::unordered_map<std::string, std::int32_t> qidx;
    for (const auto& jq : j.at("queues")) {
        ScenarioQueue q;
        q.name = jq.at("name").get<std::string>();
        q.self_sentinel = jq.at("self_sentinel").get<bool>();
        q.seed = jq.at("seed").get<std::vector<std::string>>();
        qidx.emplace(q.name, static_cast<std::int32_t>(s.queues.size()));
        s.queues.push_back(std::move(q));
    }
    for (const auto& jo : j.at("ops")) {
        ScenarioOp op;
        op.kind = jo.at("op").get<std::string>() == "enq" ? OpKind::enqueue : OpKind::dequeue;
        op.level = jo.at("level").get<std::int32_t>();
        op.queue = qidx.at(jo.at("queue").get<std::string>());
        if (op.kind == OpKind::enqueue) op.labels = jo.at("nodes").get<std::vector<std::string>>();
        s.ops.push_back(std::move(op));
    }
    s.validate();
    return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario s;
    bool levels_set = false;
    std::unordered_map<std::string, std::int32_t> qidx;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;

    auto err = [&](const std::string& msg) -> ScenarioError {
        return ScenarioError("line " + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> words;
        for (std::string w; ls >> w;) words.push_back(w);
        if (words.empty()) continue;
        const std::string& cmd = words[0];

        if (cmd == "levels") {
            if (words.size() != 2) throw err("usage: levels <count>");
            auto v = parse_int(words[1]);
            if (!v) throw err("levels wants a number, got '" + words[1] + "'");
            s.level_count = static_cast<std::int32_t>(*v);
            levels_set = true;
        } else if (cmd == "queue") {
            if (words.size() < 2 || words.size() > 3) throw err("usage: queue <name> [self_sentinel]");
            ScenarioQueue q;
            q.name = words[1];
            if (words.size() == 3) {
                if (words[2] != "self_sentinel") throw err("unknown queue flag '" + words[2] + "'");
                q.self_sentinel = true;
            }
            if (!qidx.emplace(q.name, static_cast<std::int32_t>(s.queues.size())).second)
                throw err("duplicate queue '" + q.name + "'");
            s.queues.push_back(std::move(q));
        } else if (cmd == "seed") {
            if (words.size() < 3) throw err("usage: seed <queue> <label> [label ...]");
            auto it = qidx.find(words[1]);
            if (it == qidx.end()) throw err("seed names undeclared queue '" + words[1] + "'");
            for (std::size_t i = 2; i < words.size(); ++i)
                s.queues[it->second].seed.push_back(words[i]);
        } else if (cmd == "enq" || cmd == "deq") {
            if (words.size() < 3) throw err("usage: " + cmd + " <level> <queue> ...");
            auto lvl = parse_int(words[1]);
            if (!lvl) throw err(cmd + " wants a level number, got '" + words[1] + "'");
            auto it = qidx.find(words[2]);
            if (it == qidx.end()) throw err(cmd + " names undeclared queue '" + words[2] + "'");
            ScenarioOp op;
            op.level = static_cast<Level>(*lvl);
            op.queue = it->second;
            if (cmd == "enq") {
                op.kind = OpKind::enqueue;
                if (words.size() < 4) throw err("enq needs at least one node label");
                op.labels.assign(words.begin() + 3, words.end());
            } else {
                op.kind = OpKind::dequeue;
                if (words.size() != 3) throw err("deq takes no node labels");
            }
            s.ops.push_back(std::move(op));
        } else if (cmd == "schedule") {
            if (words.size() < 2) throw err("schedule line is empty");
            for (std::size_t i = 1; i < words.size(); ++i) {
                if (!s.embedded_schedule.empty()) s.embedded_schedule += ' ';
                s.embedded_schedule += words[i];
            }
        } else {
            throw err("unknown directive '" + cmd + "'");
        }
    }
    if (!levels_set && !s.queues.empty()) s.level_count = 4;
    s.validate();
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

std::vector<std::string> serialize_trace(const Scenario& s, const RunOutcome& out) {
    if (!out.world) throw UsageError("serialize_trace needs an outcome with its world attached");
    if (out.trace.events.empty() && out.total_steps != 0)
        throw UsageError("serialize_trace needs a run with record_trace enabled");
    const SimWorld& w = *out.world;
    std::vector<std::string> lines;

    json meta;
    meta["type"] = "meta";
    meta["format"] = "afifo-trace";
    meta["version"] = 1;
    lines.push_back(meta.dump());
    lines.push_back(scenario_to_json(s).dump());
    json sched;
    sched["type"] = "schedule";
    sched["tokens"] = schedule_tokens(out.trace.schedule);
    lines.push_back(sched.dump());

    for (const TraceEvent& e : out.trace.events) {
        json j;
        switch (e.kind) {
            case EventKind::frame_start:
                j["type"] = "start";
                j["step"] = e.step;
                j["frame"] = e.frame;
                j["op"] = e.op;
                j["kind"] = e.op_kind == OpKind::enqueue ? "enq" : "deq";
                j["level"] = e.level;
                j["queue"] = queue_name_of(w, e.queue);
                break;
            case EventKind::step:
                j["type"] = "step";
                j["step"] = e.step;
                j["frame"] = e.frame;
                j["label"] = e.label;
                j["cell"] = cell_name(w, e.cell);
                j["rw"] = e.is_write ? "W" : "R";
                j["value"] = cell_value_name(w, e.cell, e.value);
                break;
            case EventKind::frame_finish:
                j["type"] = "finish";
                j["step"] = e.step;
                j["frame"] = e.frame;
                j["steps"] = e.steps_taken;
                if (e.op_kind == OpKind::dequeue) j["result"] = w.node_name(e.result);
                break;
        }
        lines.push_back(j.dump());
    }

    for (std::size_t qi = 0; qi < out.drained.size(); ++qi) {
        json j;
        j["type"] = "drain";
        j["queue"] = w.queue_names[qi];
        json order = json::array();
        for (NodeId n : out.drained[qi]) order.push_back(w.node_name(n));
        j["order"] = order;
        lines.push_back(j.dump());
    }

    const SharedMemory& mem = out.trace.final_memory;
    json snap;
    snap["type"] = "snapshot";
    json next;
    for (std::int32_t ni = 0; ni < mem.node_count(); ++ni)
        next[w.node_name(NodeId{ni})] = w.node_name(mem.next_of(NodeId{ni}));
    snap["next"] = next;
    json head, tail;
    for (std::size_t qi = 0; qi < w.queues.size(); ++qi) {
        head[w.queue_names[qi]] = w.node_name(mem.head_of(w.queues[qi]));
        tail[w.queue_names[qi]] = w.node_name(mem.tail_of(w.queues[qi]));
    }
    snap["head"] = head;
    snap["tail"] = tail;
    json lvlq = json::array(), lvln = json::array();
    for (Level l = 0; l < mem.level_count(); ++l) {
        lvlq.push_back(queue_name_of(w, mem.level_queue(l).index));
        lvln.push_back(w.node_name(mem.level_node(l)));
    }
    snap["lvlq"] = lvlq;
    snap["lvln"] = lvln;
    lines.push_back(snap.dump());

    return lines;
}

void write_trace_file(const std::string& path, const Scenario& s, const RunOutcome& out) {
    std::ofstream os(path);
    if (!os) throw UsageError("cannot write trace file '" + path + "'");
    for (const std::string& l : serialize_trace(s, out)) os << l << '\n';
}

CheckResult check_trace_lines(const std::vector<std::string>& lines) {
    if (lines.size() < 3) throw UsageError("trace is truncated: expected meta, scenario, schedule");
    json meta, jscn, jsched;
    try {
        meta = json::parse(lines[0]);
        jscn = json::parse(lines[1]);
        jsched = json::parse(lines[2]);
    } catch (const json::exception& e) {
        throw UsageError(std::string("trace header is not valid JSON: ") + e.what());
    }
    if (meta.value("format", "") != "afifo-trace" || meta.value("version", 0) != 1)
        throw UsageError("not an afifo-trace file");

    Scenario s;
    std::string tokens;
    try {
        s = scenario_from_json(jscn);
        tokens = jsched.at("tokens").get<std::string>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("trace header is malformed: ") + e.what());
    }

    RunConfig cfg;
    cfg.record_trace = true;
    cfg.drain = true;
    cfg.check = true;
    RunOutcome out = run_tokens(s, tokens, cfg);
    std::vector<std::string> replay = serialize_trace(s, out);

    CheckResult res;
    res.failure_count = out.failures.size();
    if (replay.size() != lines.size()) {
        res.message = "replay produced " + std::to_string(replay.size()) + " records, trace has " +
                      std::to_string(lines.size());
        return res;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i] != replay[i]) {
            res.message = "trace record " + std::to_string(i + 1) + " differs from replay\n  stored: " +
                          lines[i] + "\n  replay: " + replay[i];
            return res;
        }
    }
    if (res.failure_count > 0) {
        res.message = "records match but replay reports " + std::to_string(res.failure_count) +
                      " invariant failure(s): " + out.failures.front().invariant + ": " +
                      out.failures.front().detail;
        return res;
    }
    res.ok = true;
    res.message = "trace verified: " + std::to_string(out.total_steps) + " steps replayed, snapshot matches";
    return res;
}

CheckResult check_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read trace file '" + path + "'");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) lines.push_back(l);
    return check_trace_lines(lines);
}

namespace {

void render_failures(std::ostream& os, const std::vector<FailureCase>& failures,
                     std::uint64_t total) {
    for (const FailureCase& f : failures) {
        os << "fail[" << f.invariant << "] schedule " << f.schedule_index << ": " << f.detail << "\n";
        os << "  reproduce: " << schedule_tokens(f.schedule) << "\n";
    }
    if (total > failures.size())
        os << "(" << (total - failures.size()) << " further failures not shown)\n";
}

void render_hist(std::ostream& os, const char* name,
                 const std::map<std::int32_t, std::int64_t>& hist) {
    os << name << ":";
    for (const auto& [d, n] : hist) os << " " << d << ":" << n;
    os << "\n";
}

}  // namespace

void render_run(std::ostream& os, const Scenario& s, const RunOutcome& out) {
    const SimWorld& w = *out.world;
    os << "schedule: " << schedule_tokens(out.schedule) << "\n";
    os << "steps: " << out.total_steps << "\n";
    if (out.livelock) os << "LIVELOCK after " << out.total_steps << " steps\n";

    for (const FrameInfo& f : out.frames) {
        if (f.kind != OpKind::dequeue || f.op < 0) continue;
        os << "deq op" << f.op << ": " << w.node_name(f.result) << "\n";
    }
    for (std::size_t qi = 0; qi < out.drained.size(); ++qi) {
        os << "drain " << w.queue_names[qi] << ":";
        if (out.drained[qi].empty()) os << " (empty)";
        for (NodeId n : out.drained[qi]) os << " " << w.node_name(n);
        os << "\n";
    }

    if (!out.livelock) {
        ReorderReport rep = measure_reorder(out, s);
        for (std::size_t qi = 0; qi < w.queues.size(); ++qi) {
            std::string comp, arr;
            std::int32_t maxc = 0, maxa = 0;
            for (const ReorderEntry& e : rep.entries) {
                if (e.queue != static_cast<std::int32_t>(qi)) continue;
                comp += " " + w.labels[e.node] + ":" + signed_str(e.disp_completion);
                arr += " " + w.labels[e.node] + ":" + signed_str(e.disp_arrival);
                maxc = std::max(maxc, std::abs(e.disp_completion));
                maxa = std::max(maxa, std::abs(e.disp_arrival));
            }
            if (comp.empty()) continue;
            os << "reorder " << w.queue_names[qi] << " completion:" << comp << " (max " << maxc << ")\n";
            os << "reorder " << w.queue_names[qi] << " arrival:" << arr << " (max " << maxa << ")\n";
        }
    }

    if (out.failures.empty()) {
        os << "invariants: ok\n";
    } else {
        os << "invariants: " << out.failures.size() << " FAILURES\n";
        for (const Failure& f : out.failures) {
            os << "fail[" << f.invariant << "] at step " << f.step << ": " << f.detail << "\n";
        }
        os << "reproduce: " << schedule_tokens(out.schedule) << "\n";
    }
}

void render_explore(std::ostream& os, const ExploreReport& rep) {
    os << "schedules_visited: " << rep.schedules_visited << (rep.truncated ? " (truncated)" : "")
       << "\n";
    os << "failures: " << rep.failure_count << "\n";
    os << "livelock_suspects: " << rep.livelock_suspects << "\n";
    os << "max_enqueue_steps: " << rep.max_enqueue_steps << "\n";
    os << "stall_schedules: " << rep.stall_schedules << "\n";
    os << "isolated_enqueues: " << rep.isolated_enqueues << "\n";
    os << "total_steps: " << rep.total_steps << "\n";
    os << "reorder max: completion " << rep.reorder.max_abs_completion << " arrival "
       << rep.reorder.max_abs_arrival << "\n";
    render_hist(os, "reorder hist completion", rep.reorder.hist_completion);
    render_hist(os, "reorder hist arrival", rep.reorder.hist_arrival);
    render_failures(os, rep.failures, rep.failure_count);
    for (const Schedule& p : rep.livelock_prefixes)
        os << "livelock prefix: " << schedule_tokens(p) << "\n";
}

void render_fuzz(std::ostream& os, const FuzzReport& rep) {
    os << "seed: " << rep.seed << "\n";
    os << "iterations: " << rep.iterations << "\n";
    os << "failures: " << rep.failure_count << "\n";
    os << "livelock_suspects: " << rep.livelock_suspects << "\n";
    os << "max_enqueue_steps: " << rep.max_enqueue_steps << "\n";
    os << "stall_schedules: " << rep.stall_schedules << "\n";
    os << "total_steps: " << rep.total_steps << "\n";
    os << "reorder max: completion " << rep.reorder.max_abs_completion << " arrival "
       << rep.reorder.max_abs_arrival << "\n";
    render_hist(os, "reorder hist completion", rep.reorder.hist_completion);
    render_hist(os, "reorder hist arrival", rep.reorder.hist_arrival);
    render_failures(os, rep.failures, rep.failure_count);
}

}  // namespace afifo
