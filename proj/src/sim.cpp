#include "afifo/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cstring>
#include <sstream>
#include <unordered_set>

#include "runner_internal.hpp"

namespace afifo {

namespace {

bool label_is(const char* label, const char* prefix) {
    return std::strncmp(label, prefix, std::strlen(prefix)) == 0;
}

bool valid_label(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

}  // namespace

void Scenario::validate() const {
    if (level_count < 1 || level_count > 64)
        throw ScenarioError("level_count must be between 1 and 64");
    if (queues.empty()) throw ScenarioError("scenario declares no queues");

    std::unordered_map<std::string, std::int32_t> qnames;
    for (std::size_t i = 0; i < queues.size(); ++i) {
        if (!valid_label(queues[i].name))
            throw ScenarioError("queue name '" + queues[i].name + "' is not a valid identifier");
        if (!qnames.emplace(queues[i].name, i).second)
            throw ScenarioError("duplicate queue name '" + queues[i].name + "'");
    }

    std::unordered_map<std::string, std::string> seen;  // label -> where
    auto claim = [&](const std::string& label, const std::string& where) {
        if (!valid_label(label))
            throw ScenarioError("node label '" + label + "' is not a valid identifier");
        auto [it, fresh] = seen.emplace(label, where);
        if (!fresh)
            throw ScenarioError("node label '" + label + "' used by both " + it->second + " and " + where);
    };
    for (std::size_t i = 0; i < queues.size(); ++i) {
        for (const auto& l : queues[i].seed) claim(l, "seed of queue '" + queues[i].name + "'");
    }
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const ScenarioOp& op = ops[i];
        if (op.queue < 0 || op.queue >= static_cast<std::int32_t>(queues.size()))
            throw ScenarioError("op " + std::to_string(i) + " names an undeclared queue");
        if (op.level < 0 || op.level >= level_count)
            throw ScenarioError("op " + std::to_string(i) + " level " + std::to_string(op.level) +
                                " outside [0, " + std::to_string(level_count) + ")");
        if (op.kind == OpKind::dequeue) {
            if (op.level != 0)
                throw ScenarioError("op " + std::to_string(i) +
                                    ": dequeues run on the reader level and must be declared at level 0");
            if (!op.labels.empty())
                throw ScenarioError("op " + std::to_string(i) + ": dequeue takes no node labels");
        } else {
            if (op.labels.empty())
                throw ScenarioError("op " + std::to_string(i) + ": enqueue needs at least one node label");
            for (const auto& l : op.labels) claim(l, "op " + std::to_string(i));
        }
    }
}

std::vector<std::string> Scenario::all_labels() const {
    std::vector<std::string> out;
    for (const auto& q : queues)
        for (const auto& l : q.seed) out.push_back(l);
    for (const auto& op : ops)
        for (const auto& l : op.labels) out.push_back(l);
    return out;
}

std::string schedule_tokens(const Schedule& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.choices.size()) {
        if (!out.empty()) out += ' ';
        if (s.choices[i] >= 0) {
            out += 's' + std::to_string(s.choices[i]);
            ++i;
        } else {
            std::size_t j = i;
            while (j < s.choices.size() && s.choices[j] < 0) ++j;
            out += 'a' + std::to_string(j - i);
            i = j;
        }
    }
    return out;
}

std::string SimWorld::node_name(NodeId n) const {
    if (n.is_none()) return "-";
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] == n) return labels[i];
    for (std::size_t qi = 0; qi < queues.size(); ++qi)
        if (domain.sentinel_of(queues[qi]) == n) return "$" + queue_names[qi];
    return "#" + std::to_string(n.index);
}

NodeId SimWorld::node_by_name(const std::string& name) const {
    if (name == "-") return no_node;
    if (!name.empty() && name[0] == '$') {
        std::string qn = name.substr(1);
        for (std::size_t qi = 0; qi < queues.size(); ++qi)
            if (queue_names[qi] == qn) return domain.sentinel_of(queues[qi]);
        throw UsageError("unknown sentinel name '" + name + "'");
    }
    auto it = label_index.find(name);
    if (it == label_index.end()) throw UsageError("unknown node label '" + name + "'");
    return nodes[it->second];
}

SimWorld build_world(const Scenario& s) {
    s.validate();
    SimWorld w;
    std::int32_t plain_sentinels = 0;
    for (const auto& q : s.queues)
        if (!q.self_sentinel) ++plain_sentinels;
    std::int32_t label_count = static_cast<std::int32_t>(s.all_labels().size());
    w.domain = InterruptDomain(s.level_count, label_count + plain_sentinels);

    for (const auto& q : s.queues) {
        w.queues.push_back(w.domain.add_queue(q.self_sentinel));
        w.queue_names.push_back(q.name);
    }
    for (const auto& label : s.all_labels()) {
        w.label_index.emplace(label, static_cast<std::int32_t>(w.labels.size()));
        w.labels.push_back(label);
        w.nodes.push_back(w.domain.add_node());
    }

    w.node_op.assign(w.labels.size(), -1);
    w.node_queue.assign(w.labels.size(), 0);
    for (std::size_t qi = 0; qi < s.queues.size(); ++qi)
        for (const auto& l : s.queues[qi].seed) w.node_queue[w.label_index.at(l)] = qi;
    for (std::size_t oi = 0; oi < s.ops.size(); ++oi) {
        for (const auto& l : s.ops[oi].labels) {
            w.node_op[w.label_index.at(l)] = static_cast<std::int32_t>(oi);
            w.node_queue[w.label_index.at(l)] = s.ops[oi].queue;
        }
    }

    // Pre-load seeds: head -> seed chain -> sentinel, tail at the sentinel
    // (the shape a queue naturally has after its sentinel was recycled).
    SharedMemory& mem = w.domain.memory();
    for (std::size_t qi = 0; qi < s.queues.size(); ++qi) {
        const auto& seed = s.queues[qi].seed;
        if (seed.empty()) continue;
        QueueId q = w.queues[qi];
        NodeId sent = w.domain.sentinel_of(q);
        mem.write(head_cell(q), w.nodes[w.label_index.at(seed.front())].index);
        for (std::size_t i = 0; i + 1 < seed.size(); ++i)
            mem.write(next_cell(w.nodes[w.label_index.at(seed[i])]),
                      w.nodes[w.label_index.at(seed[i + 1])].index);
        mem.write(next_cell(w.nodes[w.label_index.at(seed.back())]), sent.index);
    }

    // Pre-link enqueue argument chains; they are outside every queue until
    // their op runs.
    for (const auto& op : s.ops) {
        for (std::size_t i = 0; i + 1 < op.labels.size(); ++i)
            mem.write(next_cell(w.nodes[w.label_index.at(op.labels[i])]),
                      w.nodes[w.label_index.at(op.labels[i + 1])].index);
    }
    return w;
}

std::int64_t Trace::step_count() const {
    std::int64_t n = 0;
    for (const auto& e : events)
        if (e.kind == EventKind::step) ++n;
    return n;
}

namespace detail_sim {

class Runner {
public:
    Runner(const Scenario& s, const RunConfig& cfg)
        : scn_(s), cfg_(cfg), world_(std::make_shared<SimWorld>(build_world(s))) {
        op_started_.assign(s.ops.size(), false);
        op_frame_.assign(s.ops.size(), -1);
        if (cfg_.record_trace) initial_memory_ = world_->domain.memory();
    }

    RunOutcome execute(ChoicePolicy& policy) {
        while (!terminal()) {
            if (steps_ >= cfg_.max_steps) {
                livelock_ = true;
                break;
            }
            std::vector<std::int32_t> legal = legal_choices();
            RunnerView view{top_frame(), &infos_, &op_started_};
            std::int32_t c = policy.pick(legal, view, static_cast<std::int64_t>(choices_.size()));
            if (std::find(legal.begin(), legal.end(), c) == legal.end())
                throw ScheduleError("illegal schedule step at choice index " +
                                    std::to_string(choices_.size()) + ": choice " + std::to_string(c) +
                                    " is not available");
            choices_.push_back(c);
            if (c < 0)
                advance_top();
            else
                start_op(c);
        }
        if (!livelock_) {
            if (cfg_.check) quiescent_checks();
            if (cfg_.drain) {
                drain_all();
                if (cfg_.check) post_drain_checks();
            }
        }
        return assemble();
    }

private:
    // ---- scheduling ----------------------------------------------------

    bool terminal() const {
        if (!stack_.empty()) return false;
        for (bool b : op_started_)
            if (!b) return false;
        return true;
    }

    std::int32_t top_frame() const { return stack_.empty() ? -1 : stack_.back(); }

    Level top_level() const { return stack_.empty() ? -1 : infos_[stack_.back()].level; }

    std::vector<std::int32_t> legal_choices() const {
        std::vector<std::int32_t> out;
        if (!stack_.empty()) out.push_back(-1);
        Level top = top_level();
        for (std::size_t k = 0; k < scn_.ops.size(); ++k)
            if (!op_started_[k] && scn_.ops[k].level > top)
                out.push_back(static_cast<std::int32_t>(k));
        return out;
    }

    void start_op(std::int32_t k) {
        const ScenarioOp& op = scn_.ops[k];
        QueueId q = world_->queues[op.queue];
        FrameInfo info;
        info.op = k;
        info.kind = op.kind;
        info.level = op.level;
        info.queue = op.queue;
        info.start_step = steps_;
        if (op.kind == OpKind::enqueue) {
            for (const auto& l : op.labels) info.chain.push_back(world_->nodes[world_->label_index.at(l)]);
            frames_.push_back(OpFrame::make_enqueue(world_->domain, q, op.level, info.chain.front()));
        } else {
            frames_.push_back(OpFrame::make_dequeue(world_->domain, q, 0));
        }
        std::int32_t fi = static_cast<std::int32_t>(frames_.size() - 1);
        infos_.push_back(std::move(info));
        verify_.resize(frames_.size());
        stack_.push_back(fi);
        op_started_[k] = true;
        op_frame_[k] = fi;
        if (cfg_.record_trace) push_start_event(fi);
    }

    std::int32_t start_drain_frame(std::int32_t queue_index) {
        FrameInfo info;
        info.op = -1;
        info.kind = OpKind::dequeue;
        info.level = 0;
        info.queue = queue_index;
        info.start_step = steps_;
        frames_.push_back(OpFrame::make_dequeue(world_->domain, world_->queues[queue_index], 0));
        std::int32_t fi = static_cast<std::int32_t>(frames_.size() - 1);
        infos_.push_back(std::move(info));
        verify_.resize(frames_.size());
        stack_.push_back(fi);
        if (cfg_.record_trace) push_start_event(fi);
        return fi;
    }

    void advance_top() {
        std::int32_t fi = stack_.back();
        OpFrame& f = frames_[fi];
        MemOp op = f.pending();
        std::int32_t pre = world_->domain.memory().read(op.cell);
        StepRecord r = f.step(world_->domain.memory());
        std::int64_t step_index = steps_++;
        if (cfg_.record_trace) {
            TraceEvent e;
            e.kind = EventKind::step;
            e.step = step_index;
            e.frame = fi;
            e.op = infos_[fi].op;
            e.op_kind = infos_[fi].kind;
            e.level = infos_[fi].level;
            e.queue = infos_[fi].queue;
            e.label = r.op.label;
            e.cell = r.op.cell;
            e.is_write = r.op.is_write;
            e.value = r.value;
            events_.push_back(e);
        }
        if (cfg_.check) step_checks(fi, r, pre, step_index);
        if (r.frame_done) finish_frame(fi);
        if (cfg_.check_peek) peek_checks(step_index);
    }

    void finish_frame(std::int32_t fi) {
        assert(!stack_.empty() && stack_.back() == fi);
        stack_.pop_back();
        FrameInfo& info = infos_[fi];
        info.finish_step = steps_;
        info.steps = frames_[fi].steps_taken();
        if (info.kind == OpKind::dequeue) {
            info.result = frames_[fi].result();
            if (cfg_.check) dequeue_finish_checks(fi);
            if (info.op >= 0 && !info.result.is_none())
                scheduled_deqd_.push_back(fi);
        } else {
            max_enqueue_steps_ = std::max(max_enqueue_steps_, info.steps);
            if (cfg_.check) enqueue_finish_checks(fi);
        }
        if (verify_[fi].in_recycle) {
            verify_[fi].in_recycle = false;
            recycle_spans_.push_back({info.queue, verify_[fi].recycle_start, steps_});
        }
        if (cfg_.record_trace) {
            TraceEvent e;
            e.kind = EventKind::frame_finish;
            e.step = steps_;
            e.frame = fi;
            e.op = info.op;
            e.op_kind = info.kind;
            e.level = info.level;
            e.queue = info.queue;
            e.steps_taken = info.steps;
            e.result = info.result;
            events_.push_back(e);
        }
    }

    void push_start_event(std::int32_t fi) {
        TraceEvent e;
        e.kind = EventKind::frame_start;
        e.step = steps_;
        e.frame = fi;
        e.op = infos_[fi].op;
        e.op_kind = infos_[fi].kind;
        e.level = infos_[fi].level;
        e.queue = infos_[fi].queue;
        events_.push_back(e);
    }

    // ---- invariant verification -----------------------------------------

    struct FrameVerify {
        NodeId obs_head;   // latest deq.head_check value
        NodeId obs_tail;   // latest deq.tail_check value
        NodeId obs_next;   // latest deq.next_check value
        bool in_recycle = false;
        std::int64_t recycle_start = -1;
    };

    void fail(std::string invariant, std::string detail, std::int64_t step) {
        if (failures_.size() < 64)
            failures_.push_back(Failure{std::move(invariant), std::move(detail), step});
        else
            ++dropped_failures_;
    }

    bool reachable(NodeId from, NodeId to) const {
        const SharedMemory& mem = world_->domain.memory();
        NodeId cur = from;
        for (std::int32_t hops = 0; hops <= mem.node_count(); ++hops) {
            if (cur == to) return true;
            if (cur.is_none()) return false;
            cur = mem.next_of(cur);
        }
        return false;
    }

    void step_checks(std::int32_t fi, const StepRecord& r, std::int32_t pre, std::int64_t step) {
        const char* label = r.op.label;
        const Cell cell = r.op.cell;

        // Enqueue code must never touch a head; dequeue code never writes a
        // tail. The recycle enqueue inside a dequeue carries enq labels and
        // is held to the enqueue rule.
        if (label_is(label, "enq.") && cell.kind == CellKind::queue_head)
            fail("head_purity", std::string("enqueue step ") + label + " accessed " + to_string(cell), step);
        if (label_is(label, "deq.") && r.op.is_write && cell.kind == CellKind::queue_tail)
            fail("tail_purity", std::string("dequeue step ") + label + " wrote " + to_string(cell), step);

        // Never a queue entry without a node entry, at any boundary.
        const SharedMemory& mem = world_->domain.memory();
        for (Level l = 0; l < world_->domain.level_count(); ++l) {
            if (!mem.level_queue(l).is_none() && mem.level_node(l).is_none())
                fail("table_write_order",
                     "level " + std::to_string(l) + " has a queue entry but no node entry", step);
        }

        // The tail only ever moves along its own chain.
        if (r.op.is_write && cell.kind == CellKind::queue_tail) {
            if (!reachable(NodeId{pre}, NodeId{r.value}))
                fail("tail_monotonicity",
                     "tail of queue " + std::to_string(cell.index) + " jumped from node " +
                         std::to_string(pre) + " to unreachable node " + std::to_string(r.value),
                     step);
        }

        FrameVerify& v = verify_[fi];
        if (infos_[fi].kind == OpKind::dequeue) {
            if (std::strcmp(label, "deq.head_check") == 0) v.obs_head = NodeId{r.value};
            if (std::strcmp(label, "deq.tail_check") == 0) v.obs_tail = NodeId{r.value};
            if (std::strcmp(label, "deq.next_check") == 0) v.obs_next = NodeId{r.value};

            // The head never advances from the tail value this pass observed.
            if (r.op.is_write && cell.kind == CellKind::queue_head) {
                if (NodeId{pre} == v.obs_tail)
                    fail("head_boundedness",
                         "dequeue advanced the head from its observed tail node " +
                             std::to_string(pre),
                         step);
                else if (!reachable(NodeId{pre}, v.obs_tail))
                    fail("head_boundedness",
                         "observed tail node " + std::to_string(v.obs_tail.index) +
                             " not reachable from head node " + std::to_string(pre) +
                             " being advanced",
                         step);
            }

            // Track the inline recycle enqueue for isolation bookkeeping.
            bool enq_step = label_is(label, "enq.");
            if (enq_step && !v.in_recycle) {
                v.in_recycle = true;
                v.recycle_start = step;
            } else if (!enq_step && v.in_recycle) {
                v.in_recycle = false;
                recycle_spans_.push_back({infos_[fi].queue, v.recycle_start, step});
            }
        }
    }

    void dequeue_finish_checks(std::int32_t fi) {
        const FrameInfo& info = infos_[fi];
        const FrameVerify& v = verify_[fi];
        if (info.result.is_none()) {
            // An empty answer must be backed by one of the two emptiness
            // observations.
            if (!(v.obs_head == v.obs_tail || v.obs_next.is_none()))
                fail("empty_contract",
                     "dequeue returned empty without observing head==tail or head.next==none",
                     info.finish_step);
            return;
        }
        QueueId q = world_->queues[info.queue];
        if (info.result == world_->domain.sentinel_of(q)) {
            fail("sentinel_leak", "dequeue returned the sentinel", info.finish_step);
            return;
        }
        std::int32_t li = label_of(info.result);
        if (li < 0) {
            fail("unknown_node", "dequeue returned a node no operation introduced", info.finish_step);
            return;
        }
        std::int32_t oi = world_->node_op[li];
        if (oi >= 0) {
            std::int32_t efi = op_frame_[oi];
            if (efi < 0 || infos_[efi].finish_step < 0)
                fail("completed_before_visible",
                     "node " + world_->labels[li] + " dequeued before its enqueue completed",
                     info.finish_step);
        }
        if (dequeued_seen_.count(li))
            fail("duplicate_delivery", "node " + world_->labels[li] + " dequeued twice",
                 info.finish_step);
        dequeued_seen_.insert(li);
    }

    void enqueue_finish_checks(std::int32_t fi) {
        FrameInfo& info = infos_[fi];
        QueueId q = world_->queues[info.queue];
        std::vector<NodeId> reach = reachable_from_head(world_->domain.memory(), q);
        for (NodeId n : info.chain) {
            if (std::find(reach.begin(), reach.end(), n) == reach.end()) {
                info.stalled_at_finish = true;
                stall_observed_ = true;
                bool lower_in_flight = false;
                for (std::int32_t sfi : stack_)
                    if (infos_[sfi].queue == info.queue && infos_[sfi].level < info.level)
                        lower_in_flight = true;
                if (!lower_in_flight)
                    fail("stall_without_cause",
                         "enqueued node " + world_->node_name(n) +
                             " invisible at completion with no lower-level frame in flight",
                         info.finish_step);
                break;
            }
        }
    }

    void peek_checks(std::int64_t step) {
        SharedMemory before = world_->domain.memory();
        for (std::size_t qi = 0; qi < world_->queues.size(); ++qi) {
            const QueueInfo& info = world_->domain.queue(world_->queues[qi]);
            peek_n(world_->domain.memory(), info, 1);
            peek_n(world_->domain.memory(), info, world_->domain.memory().node_count());
        }
        if (!(before == world_->domain.memory()))
            fail("peek_write_freedom", "peek_n changed shared memory", step);
    }

    std::int32_t label_of(NodeId n) const {
        for (std::size_t i = 0; i < world_->nodes.size(); ++i)
            if (world_->nodes[i] == n) return static_cast<std::int32_t>(i);
        return -1;
    }

    void quiescent_checks() {
        for (const Violation& v : check_consistency(world_->domain))
            fail("quiescent_consistency", v.message, steps_);
        const SharedMemory& mem = world_->domain.memory();
        for (Level l = 0; l < world_->domain.level_count(); ++l)
            if (!mem.level_queue(l).is_none() || !mem.level_node(l).is_none())
                fail("table_cleared", "level " + std::to_string(l) + " entry survived quiescence",
                     steps_);
        check_conservation();
    }

    void check_conservation() {
        // Everything ever enqueued is either dequeued or still reachable,
        // exactly once, per queue.
        for (std::size_t qi = 0; qi < world_->queues.size(); ++qi) {
            std::vector<std::int32_t> entered;
            for (std::size_t li = 0; li < world_->labels.size(); ++li) {
                if (world_->node_queue[li] != static_cast<std::int32_t>(qi)) continue;
                std::int32_t oi = world_->node_op[li];
                if (oi < 0 || (op_frame_[oi] >= 0 && infos_[op_frame_[oi]].finish_step >= 0))
                    entered.push_back(static_cast<std::int32_t>(li));
            }
            std::vector<std::int32_t> accounted;
            for (std::int32_t fi : scheduled_deqd_)
                if (infos_[fi].queue == static_cast<std::int32_t>(qi))
                    accounted.push_back(label_of(infos_[fi].result));
            NodeId sent = world_->domain.sentinel_of(world_->queues[qi]);
            for (NodeId n : reachable_from_head(world_->domain.memory(), world_->queues[qi]))
                if (n != sent) accounted.push_back(label_of(n));
            std::sort(entered.begin(), entered.end());
            std::sort(accounted.begin(), accounted.end());
            if (entered != accounted)
                fail("conservation",
                     "queue " + world_->queue_names[qi] +
                         ": enqueued nodes and dequeued+reachable nodes differ",
                     steps_);
        }
    }

    // ---- drain and post-drain -------------------------------------------

    void drain_all() {
        drained_.assign(world_->queues.size(), {});
        for (std::size_t qi = 0; qi < world_->queues.size(); ++qi) {
            std::int32_t none_streak = 0;
            std::int64_t guard = 2 * world_->domain.memory().node_count() + 8;
            while (none_streak < 2 && guard-- > 0) {
                std::int32_t fi = start_drain_frame(static_cast<std::int32_t>(qi));
                while (!frames_[fi].done()) advance_top();
                NodeId r = infos_[fi].result;
                if (r.is_none()) {
                    ++none_streak;
                } else {
                    none_streak = 0;
                    drained_[qi].push_back(r);
                }
            }
            if (none_streak < 2)
                fail("drain_livelock",
                     "queue " + world_->queue_names[qi] + " did not drain within its node budget",
                     steps_);
        }
    }

    void post_drain_checks() {
        for (const Violation& v : check_consistency(world_->domain))
            fail("drained_consistency", v.message, steps_);
        const SharedMemory& mem = world_->domain.memory();
        for (std::size_t qi = 0; qi < world_->queues.size(); ++qi) {
            QueueId q = world_->queues[qi];
            NodeId sent = world_->domain.sentinel_of(q);
            if (!(mem.head_of(q) == sent && mem.tail_of(q) == sent))
                fail("drained_to_sentinel",
                     "queue " + world_->queue_names[qi] + " did not return to [sentinel]", steps_);
        }
        check_eventual_delivery();
        check_isolated_fifo();
    }

    void check_eventual_delivery() {
        for (std::size_t qi = 0; qi < world_->queues.size(); ++qi) {
            std::vector<std::int32_t> entered;
            for (std::size_t li = 0; li < world_->labels.size(); ++li) {
                if (world_->node_queue[li] != static_cast<std::int32_t>(qi)) continue;
                std::int32_t oi = world_->node_op[li];
                if (oi < 0 || (op_frame_[oi] >= 0 && infos_[op_frame_[oi]].finish_step >= 0))
                    entered.push_back(static_cast<std::int32_t>(li));
            }
            std::vector<std::int32_t> delivered;
            for (std::int32_t fi : scheduled_deqd_)
                if (infos_[fi].queue == static_cast<std::int32_t>(qi))
                    delivered.push_back(label_of(infos_[fi].result));
            for (NodeId n : drained_[qi]) delivered.push_back(label_of(n));
            std::sort(entered.begin(), entered.end());
            std::sort(delivered.begin(), delivered.end());
            if (entered != delivered)
                fail("eventual_delivery",
                     "queue " + world_->queue_names[qi] +
                         ": drained deliveries do not match enqueued nodes exactly once",
                     steps_);
        }
    }

    // A frame is isolated when no other enqueue (including a dequeue's
    // inline sentinel recycle) on its queue is in flight at any moment of
    // its execution.
    void check_isolated_fifo() {
        for (std::size_t fi = 0; fi < infos_.size(); ++fi) {
            FrameInfo& f = infos_[fi];
            if (f.kind != OpKind::enqueue || f.op < 0) continue;
            bool isolated = true;
            for (std::size_t gi = 0; gi < infos_.size(); ++gi) {
                if (gi == fi) continue;
                const FrameInfo& g = infos_[gi];
                if (g.queue != f.queue || g.kind != OpKind::enqueue || g.op < 0) continue;
                if (g.start_step < f.finish_step && f.start_step < g.finish_step) isolated = false;
            }
            for (const RecycleSpan& rs : recycle_spans_) {
                if (rs.queue != f.queue) continue;
                if (rs.start < f.finish_step && f.start_step < rs.end) isolated = false;
            }
            f.isolated = isolated;
        }

        // Per-queue dequeue ranks over the full delivery sequence.
        std::vector<std::unordered_map<std::int32_t, std::int32_t>> rank(world_->queues.size());
        for (std::size_t qi = 0; qi < world_->queues.size(); ++qi) {
            std::int32_t r = 0;
            for (std::int32_t fi : scheduled_deqd_)
                if (infos_[fi].queue == static_cast<std::int32_t>(qi))
                    rank[qi][label_of(infos_[fi].result)] = ++r;
            for (NodeId n : drained_[qi]) rank[qi][label_of(n)] = ++r;
        }

        for (const FrameInfo& f : infos_) {
            if (f.kind != OpKind::enqueue || f.op < 0 || !f.isolated) continue;
            std::int32_t f_min = INT32_MAX;
            for (NodeId n : f.chain) {
                auto it = rank[f.queue].find(label_of(n));
                if (it != rank[f.queue].end()) f_min = std::min(f_min, it->second);
            }
            auto earlier_max = [&](const std::vector<NodeId>& nodes) {
                std::int32_t m = 0;
                for (NodeId n : nodes) {
                    auto it = rank[f.queue].find(label_of(n));
                    if (it != rank[f.queue].end()) m = std::max(m, it->second);
                }
                return m;
            };
            for (const FrameInfo& g : infos_) {
                if (&g == &f || g.kind != OpKind::enqueue || g.op < 0) continue;
                if (g.queue != f.queue || g.finish_step > f.start_step) continue;
                if (earlier_max(g.chain) > f_min)
                    fail("isolated_fifo",
                         "isolated enqueue op " + std::to_string(f.op) +
                             " delivered before an earlier completed enqueue",
                         f.finish_step);
            }
            // Seeded nodes completed before every frame.
            std::vector<NodeId> seeds;
            for (std::size_t li = 0; li < world_->labels.size(); ++li)
                if (world_->node_op[li] < 0 && world_->node_queue[li] == f.queue)
                    seeds.push_back(world_->nodes[li]);
            if (earlier_max(seeds) > f_min)
                fail("isolated_fifo",
                     "isolated enqueue op " + std::to_string(f.op) + " delivered before a seeded node",
                     f.finish_step);
        }
    }

    RunOutcome assemble() {
        RunOutcome out;
        out.schedule.choices = choices_;
        out.frames = infos_;
        out.drained = drained_;
        out.failures = std::move(failures_);
        if (dropped_failures_ > 0)
            out.failures.push_back(Failure{"failures_dropped",
                                           std::to_string(dropped_failures_) + " further failures dropped",
                                           steps_});
        out.livelock = livelock_;
        out.total_steps = steps_;
        out.max_enqueue_steps = max_enqueue_steps_;
        out.stall_observed = stall_observed_;
        if (cfg_.record_trace) {
            out.trace.events = std::move(events_);
            out.trace.initial_memory = std::move(initial_memory_);
            out.trace.final_memory = world_->domain.memory();
            out.trace.schedule = out.schedule;
        }
        out.world = world_;
        return out;
    }

    struct RecycleSpan {
        std::int32_t queue;
        std::int64_t start;
        std::int64_t end;
    };

    const Scenario& scn_;
    RunConfig cfg_;
    std::shared_ptr<SimWorld> world_;
    std::vector<OpFrame> frames_;
    std::vector<FrameInfo> infos_;
    std::vector<FrameVerify> verify_;
    std::vector<std::int32_t> stack_;
    std::vector<bool> op_started_;
    std::vector<std::int32_t> op_frame_;
    std::vector<std::int32_t> choices_;
    std::vector<std::int32_t> scheduled_deqd_;  // dequeue frames with results, finish order
    std::vector<std::vector<NodeId>> drained_;
    std::vector<RecycleSpan> recycle_spans_;
    std::unordered_set<std::int32_t> dequeued_seen_;
    std::vector<TraceEvent> events_;
    SharedMemory initial_memory_;
    std::vector<Failure> failures_;
    std::int64_t dropped_failures_ = 0;
    std::int64_t steps_ = 0;
    std::int32_t max_enqueue_steps_ = 0;
    bool livelock_ = false;
    bool stall_observed_ = false;
};

// ---- policies -----------------------------------------------------------

struct SchedulePolicy : ChoicePolicy {
    const Schedule& sched;
    explicit SchedulePolicy(const Schedule& s) : sched(s) {}
    std::int32_t pick(const std::vector<std::int32_t>&, const RunnerView&,
                      std::int64_t boundary) override {
        if (boundary >= static_cast<std::int64_t>(sched.choices.size()))
            throw ScheduleError("schedule ends at choice index " + std::to_string(boundary) +
                                " before all operations complete");
        return sched.choices[boundary];
    }
};

struct Token {
    char kind;           // 's', 'a', 'f', '*'
    std::int32_t arg = 0;
};

std::vector<Token> parse_tokens(const std::string& text) {
    std::vector<Token> out;
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        if (word[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        if (word == "*") {
            out.push_back({'*', 0});
        } else if (word == "f") {
            out.push_back({'f', 0});
        } else if (word[0] == 's' || word[0] == 'a') {
            std::int32_t v = 1;
            if (word.size() > 1) {
                try {
                    std::size_t pos = 0;
                    v = std::stoi(word.substr(1), &pos);
                    if (pos + 1 != word.size()) throw std::invalid_argument("");
                } catch (const std::exception&) {
                    throw ScheduleError("bad schedule token '" + word + "'");
                }
            } else if (word[0] == 's') {
                throw ScheduleError("bad schedule token 's' without an op index");
            }
            if (v < 0 || (word[0] == 'a' && v < 1))
                throw ScheduleError("bad schedule token '" + word + "'");
            out.push_back({word[0], v});
        } else {
            throw ScheduleError("bad schedule token '" + word + "'");
        }
    }
    return out;
}

struct TokenPolicy : ChoicePolicy {
    std::vector<Token> tokens;
    std::size_t i = 0;
    std::int32_t pending_adv = 0;
    std::int32_t finish_frame = -1;
    bool run_all = false;

    explicit TokenPolicy(const std::string& text) : tokens(parse_tokens(text)) {}

    std::int32_t pick(const std::vector<std::int32_t>& legal, const RunnerView& view,
                      std::int64_t boundary) override {
        while (true) {
            if (run_all) return legal.front();
            if (finish_frame >= 0) {
                if ((*view.frames)[finish_frame].finish_step < 0) return -1;
                finish_frame = -1;
            }
            if (pending_adv > 0) {
                --pending_adv;
                return -1;
            }
            if (i >= tokens.size())
                throw ScheduleError("schedule ends at choice index " + std::to_string(boundary) +
                                    " before all operations complete");
            Token t = tokens[i++];
            switch (t.kind) {
                case 's':
                    return t.arg;
                case 'a':
                    pending_adv = t.arg;
                    break;
                case 'f':
                    if (view.top < 0)
                        throw ScheduleError("schedule token 'f' with no running frame at choice index " +
                                            std::to_string(boundary));
                    finish_frame = view.top;
                    break;
                case '*':
                    run_all = true;
                    break;
            }
        }
    }
};

struct SerialPolicy : ChoicePolicy {
    std::int32_t pick(const std::vector<std::int32_t>& legal, const RunnerView&,
                      std::int64_t) override {
        return legal.front();
    }
};

RunOutcome run_with_policy(const Scenario& s, ChoicePolicy& policy, const RunConfig& cfg) {
    s.validate();
    Runner r(s, cfg);
    return r.execute(policy);
}

}  // namespace detail_sim

RunOutcome run_schedule(const Scenario& s, const Schedule& sched, const RunConfig& cfg) {
    detail_sim::SchedulePolicy p(sched);
    RunOutcome out = detail_sim::run_with_policy(s, p, cfg);
    if (out.schedule.choices.size() < sched.choices.size())
        throw ScheduleError("schedule continues past completion at choice index " +
                            std::to_string(out.schedule.choices.size()));
    return out;
}

RunOutcome run_tokens(const Scenario& s, const std::string& tokens, const RunConfig& cfg) {
    detail_sim::TokenPolicy p(tokens);
    return detail_sim::run_with_policy(s, p, cfg);
}

RunOutcome run_serial(const Scenario& s, const RunConfig& cfg) {
    detail_sim::SerialPolicy p;
    return detail_sim::run_with_policy(s, p, cfg);
}

std::vector<NodeId> drain_queue(InterruptDomain& d, QueueId q) {
    for (Level l = 0; l < d.level_count(); ++l)
        if (!d.memory().level_queue(l).is_none() || !d.memory().level_node(l).is_none())
            throw UsageError("drain_queue called while the level table is populated (not quiescent)");
    std::vector<NodeId> out;
    std::int32_t none_streak = 0;
    std::int64_t guard = 2 * d.memory().node_count() + 8;
    while (none_streak < 2 && guard-- > 0) {
        NodeId n = dequeue_now(d, q);
        if (n.is_none()) {
            ++none_streak;
        } else {
            none_streak = 0;
            out.push_back(n);
        }
    }
    if (none_streak < 2) throw UsageError("drain_queue exceeded its node budget; queue corrupt?");
    return out;
}

ReorderReport measure_reorder(const RunOutcome& out, const Scenario& s) {
    if (!out.world) throw UsageError("measure_reorder needs an outcome with its world attached");
    const SimWorld& w = *out.world;

    ReorderReport rep;
    for (std::size_t qi = 0; qi < w.queues.size(); ++qi) {
        auto label_of = [&](NodeId n) {
            for (std::size_t i = 0; i < w.nodes.size(); ++i)
                if (w.nodes[i] == n) return static_cast<std::int32_t>(i);
            return -1;
        };

        // Basis sequences: seeds first, then frames ordered by completion
        // or by arrival; chain order within a frame.
        std::vector<std::int32_t> completion, arrival;
        for (std::size_t li = 0; li < w.labels.size(); ++li)
            if (w.node_op[li] < 0 && w.node_queue[li] == static_cast<std::int32_t>(qi)) {
                completion.push_back(static_cast<std::int32_t>(li));
                arrival.push_back(static_cast<std::int32_t>(li));
            }
        std::vector<std::int32_t> enq_frames;
        for (std::size_t fi = 0; fi < out.frames.size(); ++fi) {
            const FrameInfo& f = out.frames[fi];
            if (f.kind == OpKind::enqueue && f.op >= 0 && f.queue == static_cast<std::int32_t>(qi) &&
                f.finish_step >= 0)
                enq_frames.push_back(static_cast<std::int32_t>(fi));
        }
        auto by_finish = enq_frames;
        std::sort(by_finish.begin(), by_finish.end(), [&](std::int32_t a, std::int32_t b) {
            return out.frames[a].finish_step < out.frames[b].finish_step;
        });
        auto by_start = enq_frames;
        std::sort(by_start.begin(), by_start.end(), [&](std::int32_t a, std::int32_t b) {
            return out.frames[a].start_step < out.frames[b].start_step;
        });
        for (std::int32_t fi : by_finish)
            for (NodeId n : out.frames[fi].chain) completion.push_back(label_of(n));
        for (std::int32_t fi : by_start)
            for (NodeId n : out.frames[fi].chain) arrival.push_back(label_of(n));

        // Delivery: scheduled dequeues in finish order, then the drain.
        std::vector<std::int32_t> deq_frames;
        for (std::size_t fi = 0; fi < out.frames.size(); ++fi) {
            const FrameInfo& f = out.frames[fi];
            if (f.kind == OpKind::dequeue && f.op >= 0 && f.queue == static_cast<std::int32_t>(qi) &&
                !f.result.is_none())
                deq_frames.push_back(static_cast<std::int32_t>(fi));
        }
        std::sort(deq_frames.begin(), deq_frames.end(), [&](std::int32_t a, std::int32_t b) {
            return out.frames[a].finish_step < out.frames[b].finish_step;
        });
        std::vector<std::int32_t> delivery;
        for (std::int32_t fi : deq_frames) delivery.push_back(label_of(out.frames[fi].result));
        if (static_cast<std::size_t>(qi) < out.drained.size())
            for (NodeId n : out.drained[qi]) delivery.push_back(label_of(n));

        if (delivery.size() != completion.size())
            throw UsageError("measure_reorder on an undrained run: queue " + w.queue_names[qi] +
                             " delivered " + std::to_string(delivery.size()) + " of " +
                             std::to_string(completion.size()) + " nodes");

        std::unordered_map<std::int32_t, std::int32_t> comp_rank, arr_rank;
        for (std::size_t i = 0; i < completion.size(); ++i)
            comp_rank[completion[i]] = static_cast<std::int32_t>(i + 1);
        for (std::size_t i = 0; i < arrival.size(); ++i)
            arr_rank[arrival[i]] = static_cast<std::int32_t>(i + 1);

        for (std::size_t i = 0; i < delivery.size(); ++i) {
            std::int32_t li = delivery[i];
            if (!comp_rank.count(li))
                throw UsageError("measure_reorder: delivered node was never enqueued");
            ReorderEntry e;
            e.node = li;
            e.queue = static_cast<std::int32_t>(qi);
            e.dequeue_rank = static_cast<std::int32_t>(i + 1);
            e.completion_rank = comp_rank[li];
            e.arrival_rank = arr_rank[li];
            e.disp_completion = e.dequeue_rank - e.completion_rank;
            e.disp_arrival = e.dequeue_rank - e.arrival_rank;
            rep.entries.push_back(e);
            rep.max_abs_completion = std::max(rep.max_abs_completion, std::abs(e.disp_completion));
            rep.max_abs_arrival = std::max(rep.max_abs_arrival, std::abs(e.disp_arrival));
            ++rep.hist_completion[std::abs(e.disp_completion)];
            ++rep.hist_arrival[std::abs(e.disp_arrival)];
        }
    }
    (void)s;
    return rep;
}

}  // namespace afifo
