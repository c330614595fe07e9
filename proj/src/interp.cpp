#include "lucid/interp.hpp"

#include <algorithm>
#include <deque>
#include <memory>
#include <queue>

#include <nlohmann/json.hpp>

#include "lucid/check.hpp"
#include "lucid/resolver.hpp"

namespace lucid {

uint64_t width_mask(uint32_t width) { return width >= 64 ? ~0ull : ((1ull << width) - 1); }

uint64_t eval_binop_u(BinKind op, uint64_t a, uint64_t b, uint32_t width) {
    uint64_t m = width_mask(width);
    switch (op) {
    case BinKind::Add: return (a + b) & m;
    case BinKind::Sub: return (a - b) & m;
    case BinKind::Mul: return (a * b) & m;
    case BinKind::BitAnd: return a & b;
    case BinKind::BitOr: return a | b;
    case BinKind::BitXor: return (a ^ b) & m;
    case BinKind::Eq: return a == b;
    case BinKind::Ne: return a != b;
    case BinKind::Lt: return a < b;
    case BinKind::Gt: return a > b;
    case BinKind::Le: return a <= b;
    case BinKind::Ge: return a >= b;
    case BinKind::LAnd: return (a != 0 && b != 0) ? 1 : 0;
    case BinKind::LOr: return (a != 0 || b != 0) ? 1 : 0;
    }
    return 0;
}

uint64_t lucid_hash(uint64_t poly, const std::vector<std::pair<uint64_t, uint32_t>> &args,
                    uint32_t width) {
    // CRC over the big-endian byte images of the arguments, each padded to
    // its width, with the given polynomial in a 32-bit register.
    uint32_t crc = 0xffffffffu;
    uint32_t p32 = (uint32_t)poly;
    if (p32 == 0) p32 = 0x04c11db7u;
    for (const auto &[value, w] : args) {
        int bytes = (int)((w + 7) / 8);
        for (int i = bytes - 1; i >= 0; i--) {
            uint8_t byte = (uint8_t)((value >> (8 * i)) & 0xff);
            crc ^= ((uint32_t)byte) << 24;
            for (int bit = 0; bit < 8; bit++)
                crc = (crc & 0x80000000u) ? (crc << 1) ^ p32 : (crc << 1);
        }
    }
    return crc & width_mask(width);
}

namespace {

using nlohmann::ordered_json;

struct PendingEvent {
    std::string name;
    int event_id = -1;
    std::vector<uint64_t> args;
    uint64_t delay = 0;
    enum class Dest { Self, Switch, Group } dest = Dest::Self;
    uint32_t dest_switch = 0;
    std::string dest_group;
};

struct Packet {
    PendingEvent ev;
    uint64_t gen_time = 0;
    uint64_t orig_delay = 0;
    bool entry = false;
};

struct ExecEffects {
    std::vector<PendingEvent> generated;
    std::string fault; // empty = none
    std::string fault_detail;
    std::vector<std::tuple<std::string, uint64_t, uint64_t>> mutations;
    std::vector<std::pair<int, int>> accesses; // (program seq, decl_index)
};

struct SwitchCtx {
    uint32_t id = 0;
    std::map<std::string, std::vector<uint64_t>> arrays;
    struct Queued {
        Packet pkt;
        uint64_t enqueue_time = 0;
    };
    std::deque<Queued> delay_queue;
    bool tick_scheduled = false;
    uint64_t next_recirc_free = 0;
};

struct QItem {
    uint64_t time = 0;
    uint64_t seq = 0;
    int kind = 0; // 0 deliver, 1 execute, 2 tick
    uint32_t sw = 0;
    Packet pkt;
};
struct QOrder {
    bool operator()(const QItem &a, const QItem &b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

// ---------------------------------------------------------------------------

struct Machine {
    const Program &p;
    const CheckedProgram &checked;
    const SimSpec &spec;
    const InterpOptions &opts;
    const LoweredProgram *lowered;
    const PipelineLayout *layout;

    std::priority_queue<QItem, std::vector<QItem>, QOrder> queue;
    uint64_t seq = 0;
    std::map<uint32_t, SwitchCtx> switches;
    InterpResult result;
    std::map<uint64_t, uint64_t> recirc_buckets; // simulated second -> count
    uint64_t now = 0;

    Machine(const Program &p, const CheckedProgram &checked, const SimSpec &spec,
            const InterpOptions &opts, const LoweredProgram *lowered,
            const PipelineLayout *layout)
        : p(p), checked(checked), spec(spec), opts(opts), lowered(lowered), layout(layout) {
        for (uint32_t id : spec.topo.switches) {
            SwitchCtx ctx;
            ctx.id = id;
            for (size_t gi : p.globals_in_order) {
                const auto &g = std::get<GlobalDecl>(p.decls[gi].v);
                ctx.arrays[g.name] = std::vector<uint64_t>(g.len, 0);
            }
            switches[id] = std::move(ctx);
        }
    }

    void push(QItem item) {
        item.seq = seq++;
        queue.push(std::move(item));
    }

    PendingEvent build_event(const EventDecl &ev, std::vector<uint64_t> args) {
        PendingEvent out;
        out.name = ev.name;
        out.event_id = ev.event_id;
        for (size_t i = 0; i < ev.params.size(); i++) {
            uint32_t w = ev.params[i].ty.kind == Ty::Kind::Bool
                             ? 1
                             : (ev.params[i].ty.width && ev.params[i].ty.width->folded()
                                    ? *ev.params[i].ty.width->value
                                    : 32);
            out.args.push_back((i < args.size() ? args[i] : 0) & width_mask(w));
        }
        return out;
    }

    std::string dest_str(const PendingEvent &ev) {
        switch (ev.dest) {
        case PendingEvent::Dest::Self: return "self";
        case PendingEvent::Dest::Switch: return "switch:" + std::to_string(ev.dest_switch);
        case PendingEvent::Dest::Group: return "group:" + ev.dest_group;
        }
        return "?";
    }

    void log_fault(uint32_t sw, const std::string &event, const std::string &error,
                   const std::string &detail) {
        ordered_json j;
        j["type"] = "fault";
        j["time"] = now;
        j["switch"] = sw;
        j["event"] = event;
        j["error"] = error;
        if (!detail.empty()) j["detail"] = detail;
        result.log.push_back(j.dump());
        result.faults++;
    }

    void count_recirc(uint64_t at) {
        result.recirculations++;
        recirc_buckets[at / 1000000000ull]++;
    }

    // Schedules a local, zero-delay packet for execution after one
    // recirculation (optionally throttled to the configured rate).
    void schedule_execution(Packet pkt, SwitchCtx &ctx) {
        uint64_t start = now;
        if (spec.config.recirc_cap_pps > 0) {
            uint64_t spacing = 1000000000ull / spec.config.recirc_cap_pps;
            if (spacing == 0) spacing = 1;
            start = std::max(now, ctx.next_recirc_free);
            ctx.next_recirc_free = start + spacing;
        }
        count_recirc(start);
        push(QItem{start + spec.config.recirc_delay_ns, 0, 1, ctx.id, std::move(pkt)});
    }

    void dispatch(Packet pkt, uint32_t sw) {
        SwitchCtx &ctx = switches.at(sw);
        const PendingEvent &ev = pkt.ev;
        if (ev.dest == PendingEvent::Dest::Group) {
            auto it = spec.topo.groups.find(ev.dest_group);
            if (it == spec.topo.groups.end()) {
                log_fault(sw, ev.name, "no_route", "unknown group '" + ev.dest_group + "'");
                return;
            }
            for (uint32_t member : it->second) {
                Packet copy = pkt;
                copy.ev.dest = PendingEvent::Dest::Switch;
                copy.ev.dest_switch = member;
                dispatch(std::move(copy), sw);
            }
            return;
        }
        if (ev.dest == PendingEvent::Dest::Switch && ev.dest_switch != sw) {
            auto lat = spec.topo.latency(sw, ev.dest_switch);
            if (!lat) {
                log_fault(sw, ev.name, "no_route",
                          "no link " + std::to_string(sw) + " -> " +
                              std::to_string(ev.dest_switch));
                return;
            }
            push(QItem{now + *lat, 0, 0, ev.dest_switch, std::move(pkt)});
            return;
        }
        // local
        if (ev.delay > 0) {
            ctx.delay_queue.push_back(SwitchCtx::Queued{std::move(pkt), now});
            if (!ctx.tick_scheduled) {
                uint64_t R = spec.config.delay_release_interval_ns;
                uint64_t next = (now / R + 1) * R;
                ctx.tick_scheduled = true;
                push(QItem{next, 0, 2, sw, Packet{}});
            }
            return;
        }
        schedule_execution(std::move(pkt), ctx);
    }

    void release_tick(uint32_t sw) {
        SwitchCtx &ctx = switches.at(sw);
        ctx.tick_scheduled = false;
        std::deque<SwitchCtx::Queued> keep;
        std::deque<SwitchCtx::Queued> pending = std::move(ctx.delay_queue);
        ctx.delay_queue.clear();
        for (auto &q : pending) {
            uint64_t residence = now - q.enqueue_time;
            if (q.pkt.ev.delay <= residence) {
                q.pkt.ev.delay = 0;
                schedule_execution(std::move(q.pkt), ctx);
            } else {
                q.pkt.ev.delay -= residence;
                q.enqueue_time = now;
                keep.push_back(std::move(q));
            }
        }
        ctx.delay_queue = std::move(keep);
        if (!ctx.delay_queue.empty()) {
            ctx.tick_scheduled = true;
            push(QItem{now + spec.config.delay_release_interval_ns, 0, 2, sw, Packet{}});
        }
    }

    // ---- array access shared by all execution modes ----

    struct ArrayReq {
        const GlobalDecl *g = nullptr;
        uint64_t idx = 0;
        const MemopShape *get = nullptr; // null = identity when reading
        uint64_t get_arg = 0;
        bool want_get = false;
        const MemopShape *set = nullptr;
        uint64_t set_arg = 0;
        bool has_set_value = false;
        uint64_t set_value = 0;
        int seq = 0;
    };

    // Returns the get result; sets fx.fault on out-of-range access.
    uint64_t array_access(SwitchCtx &ctx, const ArrayReq &req, ExecEffects &fx) {
        auto &cells = ctx.arrays.at(req.g->name);
        fx.accesses.emplace_back(req.seq, req.g->decl_index);
        if (req.idx >= cells.size()) {
            fx.fault = "index_out_of_range";
            fx.fault_detail = req.g->name + "[" + std::to_string(req.idx) + "], length " +
                              std::to_string(cells.size());
            return 0;
        }
        uint64_t mask = width_mask(req.g->width);
        uint64_t pre = cells[req.idx];
        uint64_t ret = pre;
        if (req.get) ret = memop_semantics(*req.get, pre, req.get_arg, req.g->width);
        uint64_t post = pre;
        if (req.set)
            post = memop_semantics(*req.set, pre, req.set_arg, req.g->width);
        else if (req.has_set_value)
            post = req.set_value & mask;
        if (post != pre) {
            cells[req.idx] = post;
            fx.mutations.emplace_back(req.g->name, req.idx, post);
        } else if (req.set || req.has_set_value) {
            fx.mutations.emplace_back(req.g->name, req.idx, post);
        }
        return ret;
    }

    void add_generated(ExecEffects &fx, PendingEvent ev) {
        for (const auto &have : fx.generated) {
            if (have.name == ev.name) {
                fx.fault = "duplicate_generate";
                fx.fault_detail = "event '" + ev.name + "' generated twice in one execution";
                return;
            }
        }
        if ((int)fx.generated.size() >= spec.config.generate_limit) {
            fx.fault = "generate_limit";
            fx.fault_detail = "more than " + std::to_string(spec.config.generate_limit) +
                              " events generated";
            return;
        }
        fx.generated.push_back(std::move(ev));
    }

    // ---- surface execution ----

    struct Value {
        enum class Kind { Num, Event, Array } kind = Kind::Num;
        uint64_t n = 0;
        std::shared_ptr<PendingEvent> ev;
        int array = -1;
        static Value num(uint64_t v) { return Value{Kind::Num, v, nullptr, -1}; }
    };

    struct Frame {
        std::map<std::string, Value> env;
        const std::map<std::string, VarInfo> *widths = nullptr;
        bool returned = false;
        Value ret;
    };

    struct SurfaceRun {
        Machine &m;
        SwitchCtx &ctx;
        ExecEffects &fx;
        int access_seq = 0;
        int call_depth = 0;

        bool aborted() const { return !fx.fault.empty(); }

        uint32_t var_width(const Frame &f, const std::string &name) {
            if (f.widths) {
                auto it = f.widths->find(name);
                if (it != f.widths->end()) return it->second.is_bool ? 1 : it->second.width;
            }
            return 32;
        }

        Value eval(const Expr &e, Frame &f, uint32_t hint = 0) {
            if (aborted()) return Value::num(0);
            return std::visit([&](const auto &node) { return eval_node(e, node, f, hint); },
                              e.v);
        }

        Value eval_node(const Expr &, const ValueE &v, Frame &, uint32_t hint) {
            uint32_t w = v.is_bool ? 1
                                   : (v.width && v.width->folded() ? *v.width->value
                                                                   : (hint ? hint : 32));
            return Value::num(v.v & width_mask(w));
        }

        Value eval_node(const Expr &e, const VarE &v, Frame &f, uint32_t) {
            auto it = f.env.find(v.name);
            if (it != f.env.end()) return it->second;
            auto cv = m.p.const_values.find(v.name);
            if (cv != m.p.const_values.end()) return Value::num(cv->second);
            if (const GlobalDecl *g = m.p.find_global(v.name)) {
                Value out;
                out.kind = Value::Kind::Array;
                out.array = g->decl_index;
                return out;
            }
            (void)e;
            return Value::num(0);
        }

        Value eval_node(const Expr &e, const BinE &b, Frame &f, uint32_t hint) {
            if (binop_is_compare(b.op) || b.op == BinKind::LAnd || b.op == BinKind::LOr) {
                uint32_t ow = expr_width(*b.lhs, f, 0);
                if (const auto *lv = std::get_if<ValueE>(&b.lhs->v);
                    lv && !(lv->width && lv->width->folded()))
                    ow = expr_width(*b.rhs, f, 0);
                Value l = eval(*b.lhs, f, ow);
                Value r = eval(*b.rhs, f, ow);
                return Value::num(eval_binop_u(b.op, l.n, r.n, 1));
            }
            uint32_t w = expr_width(e, f, hint);
            Value l = eval(*b.lhs, f, w);
            Value r = eval(*b.rhs, f, w);
            return Value::num(eval_binop_u(b.op, l.n, r.n, w));
        }

        Value eval_node(const Expr &, const HashE &h, Frame &f, uint32_t) {
            uint64_t poly = 0;
            std::vector<std::pair<uint64_t, uint32_t>> args;
            for (size_t i = 0; i < h.args.size(); i++) {
                Value v = eval(*h.args[i], f);
                if (i == 0) {
                    poly = v.n;
                } else {
                    args.emplace_back(v.n, expr_width(*h.args[i], f, 32));
                }
            }
            uint32_t w = h.width.folded() ? *h.width.value : 32;
            return Value::num(lucid_hash(poly, args, w));
        }

        uint32_t expr_width(const Expr &e, Frame &f, uint32_t hint) {
            if (const auto *v = std::get_if<ValueE>(&e.v)) {
                if (v->is_bool) return 1;
                if (v->width && v->width->folded()) return *v->width->value;
                return hint ? hint : 32;
            }
            if (const auto *var = std::get_if<VarE>(&e.v)) {
                if (f.env.count(var->name) || !m.p.const_values.count(var->name))
                    return var_width(f, var->name);
                return hint ? hint : 32;
            }
            if (const auto *b = std::get_if<BinE>(&e.v)) {
                if (binop_is_compare(b->op) || b->op == BinKind::LAnd || b->op == BinKind::LOr)
                    return 1;
                uint32_t lw = expr_width(*b->lhs, f, hint);
                return lw ? lw : expr_width(*b->rhs, f, hint);
            }
            if (const auto *h = std::get_if<HashE>(&e.v))
                return h->width.folded() ? *h->width.value : 32;
            if (const auto *call = std::get_if<CallE>(&e.v)) {
                if (call->module == "Array" && !call->args.empty())
                    if (const auto *var = std::get_if<VarE>(&call->args[0]->v))
                        if (const GlobalDecl *g = m.p.find_global(var->name)) return g->width;
                if (call->module == "Sys") return 32;
                if (call->module.empty())
                    if (const FunDecl *fn = m.p.find_fun(call->name)) {
                        if (fn->ret.kind == Ty::Kind::Bool) return 1;
                        return fn->ret.width && fn->ret.width->folded() ? *fn->ret.width->value
                                                                        : 32;
                    }
            }
            return hint ? hint : 32;
        }

        Value eval_node(const Expr &e, const CallE &c, Frame &f, uint32_t) {
            if (c.module == "Array") return array_call(e, c, f);
            if (c.module == "Sys") return Value::num(m.now & width_mask(32));
            if (c.module == "Event") {
                Value inner = eval(*c.args[0], f);
                if (!inner.ev) return inner;
                auto ev = std::make_shared<PendingEvent>(*inner.ev);
                if (c.name == "delay") {
                    ev->delay = eval(*c.args[1], f).n;
                } else {
                    if (const auto *var = std::get_if<VarE>(&c.args[1]->v);
                        var && m.p.find_group(var->name) && !f.env.count(var->name)) {
                        ev->dest = PendingEvent::Dest::Group;
                        ev->dest_group = var->name;
                    } else {
                        ev->dest = PendingEvent::Dest::Switch;
                        ev->dest_switch = (uint32_t)eval(*c.args[1], f).n;
                    }
                }
                Value out;
                out.kind = Value::Kind::Event;
                out.ev = std::move(ev);
                return out;
            }
            if (const EventDecl *ev = m.p.find_event(c.name)) {
                std::vector<uint64_t> args;
                for (const auto &a : c.args) args.push_back(eval(*a, f).n);
                Value out;
                out.kind = Value::Kind::Event;
                out.ev = std::make_shared<PendingEvent>(m.build_event(*ev, std::move(args)));
                return out;
            }
            if (const FunDecl *fn = m.p.find_fun(c.name)) return fun_call(*fn, c, f);
            return Value::num(0);
        }

        Value fun_call(const FunDecl &fn, const CallE &c, Frame &caller) {
            if (++call_depth > 64) {
                fx.fault = "recursion";
                fx.fault_detail = "call depth limit in '" + fn.name + "'";
                --call_depth;
                return Value::num(0);
            }
            Frame f;
            auto it = m.checked.fun_vars.find(fn.name);
            f.widths = it != m.checked.fun_vars.end() ? &it->second : nullptr;
            for (size_t i = 0; i < fn.params.size(); i++) {
                const Param &pa = fn.params[i];
                Value v = eval(*c.args[i], caller, var_width(f, pa.name));
                if (pa.ty.kind != Ty::Kind::ArrayRef)
                    v = Value::num(v.n & width_mask(var_width(f, pa.name)));
                f.env[pa.name] = v;
            }
            exec_block(fn.body, f);
            --call_depth;
            return f.ret;
        }

        Value array_call(const Expr &e, const CallE &c, Frame &f) {
            Value arr = eval(*c.args[0], f);
            if (arr.kind != Value::Kind::Array || aborted()) return Value::num(0);
            const GlobalDecl &g = m.p.global_at(arr.array);
            ArrayReq req;
            req.g = &g;
            req.seq = access_seq++;
            req.idx = eval(*c.args[1], f).n;
            auto memop_of = [&](const Expr &arg) -> const MemopShape * {
                const auto *var = std::get_if<VarE>(&arg.v);
                return var ? m.checked.find_memop(var->name) : nullptr;
            };
            if (c.name == "get") {
                req.want_get = true;
            } else if (c.name == "getm") {
                req.want_get = true;
                req.get = memop_of(*c.args[2]);
                req.get_arg = eval(*c.args[3], f, g.width).n & width_mask(g.width);
            } else if (c.name == "set") {
                req.has_set_value = true;
                req.set_value = eval(*c.args[2], f, g.width).n;
            } else if (c.name == "setm") {
                req.set = memop_of(*c.args[2]);
                req.set_arg = eval(*c.args[3], f, g.width).n & width_mask(g.width);
            } else { // update
                req.want_get = true;
                req.get = memop_of(*c.args[2]);
                req.get_arg = eval(*c.args[3], f, g.width).n & width_mask(g.width);
                req.set = memop_of(*c.args[4]);
                req.set_arg = eval(*c.args[5], f, g.width).n & width_mask(g.width);
            }
            (void)e;
            return Value::num(m.array_access(ctx, req, fx));
        }

        void exec_block(const Block &b, Frame &f) {
            for (const auto &sp : b) {
                if (aborted() || f.returned) return;
                exec_stmt(*sp, f);
            }
        }

        void exec_stmt(const Stmt &s, Frame &f) {
            std::visit(
                [&](const auto &node) {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, IfS>) {
                        Value c = eval(*node.cond, f);
                        if (aborted()) return;
                        if (c.n != 0)
                            exec_block(node.then_blk, f);
                        else
                            exec_block(node.else_blk, f);
                    } else if constexpr (std::is_same_v<T, LocalS>) {
                        uint32_t w = var_width(f, node.name);
                        Value v = node.init ? eval(*node.init, f, w) : Value::num(0);
                        if (v.kind == Value::Kind::Num) v.n &= width_mask(w);
                        f.env[node.name] = std::move(v);
                    } else if constexpr (std::is_same_v<T, AssignS>) {
                        uint32_t w = var_width(f, node.name);
                        Value v = eval(*node.value, f, w);
                        if (v.kind == Value::Kind::Num) v.n &= width_mask(w);
                        f.env[node.name] = std::move(v);
                    } else if constexpr (std::is_same_v<T, ExprS>) {
                        eval(*node.expr, f);
                    } else if constexpr (std::is_same_v<T, GenerateS>) {
                        Value v = eval(*node.event, f);
                        if (aborted() || !v.ev) return;
                        m.add_generated(fx, *v.ev);
                    } else if constexpr (std::is_same_v<T, ReturnS>) {
                        if (node.value) f.ret = eval(*node.value, f);
                        f.returned = true;
                    }
                },
                s.v);
        }
    };

    ExecEffects exec_surface(SwitchCtx &ctx, const Packet &pkt) {
        ExecEffects fx;
        const HandlerDecl *h = p.find_handler(pkt.ev.name);
        SurfaceRun run{*this, ctx, fx};
        Frame f;
        auto it = checked.handler_vars.find(pkt.ev.name);
        f.widths = it != checked.handler_vars.end() ? &it->second : nullptr;
        for (size_t i = 0; i < h->params.size(); i++)
            f.env[h->params[i].name] =
                Value::num(i < pkt.ev.args.size() ? pkt.ev.args[i] : 0);
        run.exec_block(h->body, f);
        return fx;
    }

    // ---- IR execution (atomic table graph, control order) ----

    uint64_t read_operand(const Operand &o, const std::map<std::string, uint64_t> &env) {
        switch (o.kind) {
        case Operand::Kind::Const: return o.value & width_mask(o.width);
        case Operand::Kind::Time: return now & width_mask(32);
        case Operand::Kind::Local: {
            auto it = env.find(o.name);
            return it == env.end() ? 0 : it->second;
        }
        }
        return 0;
    }

    // Executes one non-branch atomic statement; returns false when a fault
    // aborted the execution.
    bool exec_atomic(const AtomicStmt &stmt, std::map<std::string, uint64_t> &reads,
                     std::map<std::string, uint64_t> &writes, SwitchCtx &ctx, ExecEffects &fx,
                     int seq) {
        return std::visit(
            [&](const auto &a) -> bool {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, AtomicOp>) {
                    uint64_t value = 0;
                    if (a.detail == AtomicOp::Detail::Copy) {
                        value = read_operand(a.a, reads) & width_mask(a.width);
                    } else if (a.detail == AtomicOp::Detail::Bin) {
                        value = eval_binop_u(a.op, read_operand(a.a, reads),
                                             read_operand(a.b, reads), a.width);
                    } else {
                        std::vector<std::pair<uint64_t, uint32_t>> args;
                        for (const auto &x : a.hash_args)
                            args.emplace_back(read_operand(x, reads), x.width);
                        value = lucid_hash(a.hash_poly, args, a.hash_width);
                    }
                    writes[a.dst] = value;
                    return true;
                } else if constexpr (std::is_same_v<T, AtomicMemOp>) {
                    ArrayReq req;
                    req.g = p.find_global(a.array);
                    req.seq = seq;
                    req.idx = read_operand(a.index, reads);
                    if (a.get_memop) req.get = checked.find_memop(*a.get_memop);
                    req.want_get = a.result.has_value() ||
                                   (!a.set_memop && !a.set_value) || a.get_memop.has_value();
                    req.get_arg = read_operand(a.get_arg, reads) & width_mask(a.cell_width);
                    if (a.set_memop) req.set = checked.find_memop(*a.set_memop);
                    req.set_arg = read_operand(a.set_arg, reads) & width_mask(a.cell_width);
                    if (a.set_value) {
                        req.has_set_value = true;
                        req.set_value = read_operand(*a.set_value, reads);
                    }
                    uint64_t ret = array_access(ctx, req, fx);
                    if (!fx.fault.empty()) return false;
                    if (a.result) writes[*a.result] = ret;
                    return true;
                } else {
                    // generates are handled by the callers; noops do nothing
                    return true;
                }
            },
            stmt.v);
    }

    ExecEffects exec_ir(SwitchCtx &ctx, const Packet &pkt) {
        ExecEffects fx;
        const AtomicTableGraph &g = lowered->graph;
        auto entry = g.handler_entry.find(pkt.ev.name);
        std::map<std::string, uint64_t> env;
        const HandlerDecl *h = p.find_handler(pkt.ev.name);
        for (size_t i = 0; i < h->params.size(); i++)
            env[h->params[i].name] = i < pkt.ev.args.size() ? pkt.ev.args[i] : 0;
        int at = entry->second;
        int guard_steps = 0;
        while (at >= 0 && fx.fault.empty() && ++guard_steps < (int)g.nodes.size() + 2) {
            const TableNode &n = g.nodes[at];
            if (const auto *br = std::get_if<AtomicBranch>(&n.stmt.v)) {
                uint64_t v = read_operand(br->value, env);
                at = cmp_eval(br->cmp, v, br->constant & width_mask(br->value.width))
                         ? n.next_true
                         : n.next_false;
                continue;
            }
            if (!exec_node_linear(n, env, ctx, fx)) break;
            at = n.next_true;
        }
        return fx;
    }

    bool exec_node_linear(const TableNode &n, std::map<std::string, uint64_t> &env,
                          SwitchCtx &ctx, ExecEffects &fx) {
        if (const auto *gen = std::get_if<AtomicGenerate>(&n.stmt.v)) {
            exec_generate(*gen, env, fx);
            return fx.fault.empty();
        }
        std::map<std::string, uint64_t> writes;
        bool ok = exec_atomic(n.stmt, env, writes, ctx, fx, n.id);
        for (auto &[k, v] : writes) env[k] = v;
        return ok && fx.fault.empty();
    }

    void exec_generate(const AtomicGenerate &a, const std::map<std::string, uint64_t> &env,
                       ExecEffects &fx) {
        const EventDecl *ev = p.find_event(a.event);
        std::vector<uint64_t> args;
        for (const auto &x : a.args) args.push_back(read_operand(x, env));
        PendingEvent pe = build_event(*ev, std::move(args));
        pe.delay = read_operand(a.delay, env);
        switch (a.dest_kind) {
        case AtomicGenerate::DestKind::Self: pe.dest = PendingEvent::Dest::Self; break;
        case AtomicGenerate::DestKind::Switch:
            pe.dest = PendingEvent::Dest::Switch;
            pe.dest_switch = (uint32_t)read_operand(a.dest_switch, env);
            break;
        case AtomicGenerate::DestKind::Group:
            pe.dest = PendingEvent::Dest::Group;
            pe.dest_group = a.dest_group;
            break;
        }
        add_generated(fx, std::move(pe));
    }

    // ---- layout execution (stage by stage, snapshot reads) ----

    ExecEffects exec_layout(SwitchCtx &ctx, const Packet &pkt) {
        ExecEffects fx;
        std::map<std::string, uint64_t> env;
        const HandlerDecl *h = p.find_handler(pkt.ev.name);
        for (size_t i = 0; i < h->params.size(); i++)
            env[h->params[i].name] = i < pkt.ev.args.size() ? pkt.ev.args[i] : 0;
        for (const auto &stage : layout->stages) {
            if (!fx.fault.empty()) break;
            std::map<std::string, uint64_t> snapshot = env;
            std::map<std::string, uint64_t> writes;
            auto lookup = [&](const std::string &var) -> uint64_t {
                auto it = snapshot.find(var);
                return it == snapshot.end() ? 0 : it->second;
            };
            for (const auto &table : stage) {
                if (!fx.fault.empty()) break;
                for (int mid : table.members) {
                    const GuardedNode &n = layout->graph.nodes[mid];
                    if (n.handler != pkt.ev.name) continue;
                    if (!guard_eval(n.guard, lookup)) continue;
                    if (const auto *gen = std::get_if<AtomicGenerate>(&n.stmt.v)) {
                        exec_generate(*gen, snapshot, fx);
                    } else {
                        if (!exec_atomic(n.stmt, snapshot, writes, ctx, fx, n.seq)) break;
                    }
                    if (!fx.fault.empty()) break;
                }
            }
            for (auto &[k, v] : writes) env[k] = v;
        }
        return fx;
    }

    // ---- the main loop ----

    void execute_packet(const Packet &pkt, uint32_t sw) {
        SwitchCtx &ctx = switches.at(sw);
        if (!p.find_handler(pkt.ev.name)) {
            // no handler bound: log and drop
            ordered_json j;
            j["type"] = "drop";
            j["time"] = now;
            j["switch"] = sw;
            j["event"] = pkt.ev.name;
            result.log.push_back(j.dump());
            return;
        }
        ExecEffects fx;
        switch (opts.mode) {
        case ExecMode::Surface: fx = exec_surface(ctx, pkt); break;
        case ExecMode::Ir: fx = exec_ir(ctx, pkt); break;
        case ExecMode::Layout: fx = exec_layout(ctx, pkt); break;
        }
        result.events_handled++;

        // the multi-event header carries at most one instance per event, in
        // declaration order; all execution modes agree on this order
        std::sort(fx.generated.begin(), fx.generated.end(),
                  [](const PendingEvent &a, const PendingEvent &b) {
                      return a.event_id < b.event_id;
                  });

        ordered_json j;
        j["type"] = "exec";
        j["time"] = now;
        j["switch"] = sw;
        j["event"] = pkt.ev.name;
        j["args"] = pkt.ev.args;
        j["gen_time"] = pkt.gen_time;
        j["delay"] = pkt.orig_delay;
        ordered_json gen = ordered_json::array();
        for (const auto &g : fx.generated)
            gen.push_back({{"event", g.name},
                           {"args", g.args},
                           {"delay", g.delay},
                           {"dest", dest_str(g)}});
        j["generated"] = std::move(gen);
        if (!fx.fault.empty()) j["fault"] = fx.fault;
        result.log.push_back(j.dump());

        if (opts.trace_state) {
            for (const auto &[array, idx, value] : fx.mutations) {
                ordered_json t;
                t["type"] = "state";
                t["time"] = now;
                t["switch"] = sw;
                t["array"] = array;
                t["index"] = idx;
                t["value"] = value;
                result.log.push_back(t.dump());
            }
        }
        if (!fx.fault.empty()) log_fault(sw, pkt.ev.name, fx.fault, fx.fault_detail);

        if (opts.monitor) {
            // access order is judged in program order in every mode
            auto accesses = fx.accesses;
            std::sort(accesses.begin(), accesses.end());
            for (size_t i = 1; i < accesses.size(); i++) {
                if (accesses[i].second <= accesses[i - 1].second) {
                    result.violations.push_back(
                        "handler '" + pkt.ev.name + "' at t=" + std::to_string(now) +
                        ": access to array #" + std::to_string(accesses[i].second) +
                        " after array #" + std::to_string(accesses[i - 1].second));
                }
            }
        }

        for (auto &g : fx.generated) {
            Packet out;
            out.gen_time = now;
            out.orig_delay = g.delay;
            out.ev = std::move(g);
            dispatch(std::move(out), sw);
        }
    }

    InterpResult run() {
        for (const auto &te : spec.events) {
            const EventDecl *ev = p.find_event(te.name);
            Packet pkt;
            pkt.ev = build_event(*ev, te.args);
            pkt.gen_time = te.time_ns;
            pkt.entry = true;
            push(QItem{te.time_ns, 0, 1, te.sw, std::move(pkt)});
        }
        while (!queue.empty()) {
            QItem item = queue.top();
            queue.pop();
            if (item.time > spec.config.max_sim_time_ns) break;
            now = item.time;
            result.end_time_ns = now;
            switch (item.kind) {
            case 0: dispatch(std::move(item.pkt), item.sw); break;
            case 1: execute_packet(item.pkt, item.sw); break;
            case 2: release_tick(item.sw); break;
            }
        }
        for (const auto &[sec, count] : recirc_buckets)
            result.recirc_pps_peak = std::max(result.recirc_pps_peak, count);
        ordered_json s;
        s["type"] = "summary";
        s["events_handled"] = result.events_handled;
        s["recirculations"] = result.recirculations;
        s["recirc_pps_peak"] = result.recirc_pps_peak;
        s["faults"] = result.faults;
        s["end_time_ns"] = result.end_time_ns;
        result.log.push_back(s.dump());
        for (auto &[id, ctx] : switches) result.arrays[id] = ctx.arrays;
        return std::move(result);
    }
};

} // namespace

InterpResult run_simulation(const Program &p, const CheckedProgram &checked, const SimSpec &spec,
                            const InterpOptions &opts, const LoweredProgram *lowered,
                            const PipelineLayout *layout) {
    LUCID_CHECK(opts.mode != ExecMode::Ir || lowered, "IR mode requires a lowered program");
    LUCID_CHECK(opts.mode != ExecMode::Layout || layout, "layout mode requires a layout");
    Machine m(p, checked, spec, opts, lowered, layout);
    return m.run();
}

} // namespace lucid
