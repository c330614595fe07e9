#include "lucid/emitter.hpp"

#include <sstream>

namespace lucid {

namespace {

std::string bits(uint32_t w) { return "bit<" + std::to_string(w) + ">"; }

std::string operand_text(const Operand &o) {
    switch (o.kind) {
    case Operand::Kind::Local: return o.name;
    case Operand::Kind::Const: return std::to_string(o.value);
    case Operand::Kind::Time: return "ig_intr_md.ingress_mac_tstamp";
    }
    return "?";
}

// memop body over `mem` (the stored cell) and the bound call argument
std::string simple_text(const memop::Simple &s, const std::string &arg) {
    if (s.kind == memop::Simple::Kind::Const) return std::to_string(s.value);
    return s.param == 0 ? "mem" : arg;
}

std::string ret_text(const memop::RetExpr &r, const std::string &arg) {
    std::string out = simple_text(r.a, arg);
    if (r.op) {
        const char *op = "+";
        switch (*r.op) {
        case memop::RetOp::Add: op = "+"; break;
        case memop::RetOp::Sub: op = "-"; break;
        case memop::RetOp::And: op = "&"; break;
        case memop::RetOp::Or: op = "|"; break;
        case memop::RetOp::Xor: op = "^"; break;
        }
        out += std::string(" ") + op + " " + simple_text(r.b, arg);
    }
    return out;
}

std::string math_text(const memop::MathExpr &m, const std::string &arg) {
    std::string out = simple_text(m.a, arg);
    if (m.op) out += std::string(" ") + (*m.op == memop::MathOp::Add ? "+" : "-") +
                     " " + simple_text(m.b, arg);
    return out;
}

std::string test_text(const memop::Test &t, const std::string &arg) {
    const char *cmp = "==";
    switch (t.cmp) {
    case memop::CmpOp::Gt: cmp = ">"; break;
    case memop::CmpOp::Lt: cmp = "<"; break;
    case memop::CmpOp::Eq: cmp = "=="; break;
    case memop::CmpOp::Ne: cmp = "!="; break;
    case memop::CmpOp::Ge: cmp = ">="; break;
    case memop::CmpOp::Le: cmp = "<="; break;
    }
    return math_text(t.lhs, arg) + " " + cmp + " " + math_text(t.rhs, arg);
}

// `target` is "mem" for the set half, "ret" for the get half.
void memop_lines(std::ostringstream &os, const MemopShape &shape, const std::string &arg,
                 const std::string &target, const std::string &indent) {
    if (const auto *ro = std::get_if<memop::ReturnOnly>(&shape.body)) {
        os << indent << target << " = " << ret_text(ro->ret, arg) << ";\n";
        return;
    }
    const auto &ie = std::get<memop::IfElse>(shape.body);
    os << indent << "if (" << test_text(ie.test, arg) << ") {\n";
    os << indent << "  " << target << " = " << ret_text(ie.then_ret, arg) << ";\n";
    os << indent << "} else {\n";
    os << indent << "  " << target << " = " << ret_text(ie.else_ret, arg) << ";\n";
    os << indent << "}\n";
}

std::string op_stmt_text(const AtomicOp &op) {
    switch (op.detail) {
    case AtomicOp::Detail::Copy:
        return op.dst + " = " + operand_text(op.a) + ";";
    case AtomicOp::Detail::Bin:
        return op.dst + " = " + operand_text(op.a) + " " + binop_text(op.op) + " " +
               operand_text(op.b) + ";";
    case AtomicOp::Detail::Hash: {
        std::string args;
        for (size_t i = 0; i < op.hash_args.size(); i++) {
            if (i) args += ", ";
            args += operand_text(op.hash_args[i]);
        }
        return op.dst + " = hash_" + std::to_string(op.hash_width) + "(0x" +
               [&] {
                   char buf[32];
                   snprintf(buf, sizeof buf, "%llx", (unsigned long long)op.hash_poly);
                   return std::string(buf);
               }() +
               ", " + args + ");";
    }
    }
    return "";
}

void emit_op_table(std::ostringstream &os, const AtomicOp &op, const std::string &name) {
    os << "action do_" << name << " {" << op_stmt_text(op) << "}\n";
    os << "table " << name << " {\n";
    os << "\tactions = {do_" << name << ";}\n";
    os << "\tconst default_action = {do_" << name << ";}\n";
    os << "}\n";
}

void emit_memop_table(std::ostringstream &os, const AtomicMemOp &m, const std::string &name,
                      const CheckedProgram &checked) {
    std::string w = bits(m.cell_width);
    os << "RegisterAction<" << w << "," << w << "," << w << ">\n";
    os << "  (" << m.array << ") " << name << "_alu = {\n";
    os << "  void apply(inout " << w << " mem, out " << w << " ret) {\n";
    if (m.get_memop) {
        const MemopShape *shape = checked.find_memop(*m.get_memop);
        if (shape) memop_lines(os, *shape, operand_text(m.get_arg), "ret", "    ");
    } else if (m.result && !m.set_memop && !m.set_value) {
        os << "    ret = mem;\n";
    }
    if (m.set_memop) {
        const MemopShape *shape = checked.find_memop(*m.set_memop);
        if (shape) memop_lines(os, *shape, operand_text(m.set_arg), "mem", "    ");
    } else if (m.set_value) {
        os << "    mem = " << operand_text(*m.set_value) << ";\n";
    }
    os << "  }\n";
    os << "};\n";
    os << "action do_" << name << "() { ";
    if (m.result) os << *m.result << " = ";
    os << name << "_alu.execute(" << operand_text(m.index) << "); }\n";
    os << "table " << name << " {\n";
    os << "\tactions = {do_" << name << ";}\n";
    os << "\tconst default_action = {do_" << name << ";}\n";
    os << "}\n";
}

void emit_branch_table(std::ostringstream &os, const AtomicBranch &b, const std::string &name) {
    os << "action " << name << "_true(); action " << name << "_false();\n";
    os << "table " << name << " {\n";
    os << "\tkeys = {" << operand_text(b.value) << " : ternary;}\n";
    os << "\tactions = {" << name << "_true; " << name << "_false;}\n";
    os << "\tentries = { // these entries are ordered.\n";
    // equality tests match the constant directly; other compares are ranges
    switch (b.cmp) {
    case CmpKind::Eq:
        os << "\t\t(" << b.constant << ") : " << name << "_true;\n";
        os << "\t\t( _ ) : " << name << "_false;\n";
        break;
    case CmpKind::Ne:
        os << "\t\t(" << b.constant << ") : " << name << "_false;\n";
        os << "\t\t( _ ) : " << name << "_true;\n";
        break;
    default:
        os << "\t\t(" << cmp_text(b.cmp) << " " << b.constant << " : range) : " << name
           << "_true;\n";
        os << "\t\t( _ ) : " << name << "_false;\n";
        break;
    }
    os << "\t}\n";
    os << "}\n";
}

void emit_generate_table(std::ostringstream &os, const AtomicGenerate &gen,
                         const std::string &name) {
    os << "action do_" << name << " {";
    os << (gen.multicast ? "mgenerate_event(" : "generate_event(") << gen.event;
    for (const auto &a : gen.args) os << ", " << operand_text(a);
    os << "); delay=" << operand_text(gen.delay);
    switch (gen.dest_kind) {
    case AtomicGenerate::DestKind::Self: os << "; dest=self"; break;
    case AtomicGenerate::DestKind::Switch: os << "; dest=" << operand_text(gen.dest_switch); break;
    case AtomicGenerate::DestKind::Group: os << "; dest=group " << gen.dest_group; break;
    }
    os << ";}\n";
    os << "table " << name << " {\n";
    os << "\tactions = {do_" << name << ";}\n";
    os << "\tconst default_action = {do_" << name << ";}\n";
    os << "}\n";
}

void emit_dispatch_table(std::ostringstream &os, const Program &p, const std::string &name) {
    os << "action " << name << "_noop();\n";
    os << "table " << name << " {\n";
    os << "\tkeys = {ev_id : ternary;}\n";
    os << "\tactions = {";
    for (size_t i : p.events_in_order) {
        const auto &ev = std::get<EventDecl>(p.decls[i].v);
        if (p.find_handler(ev.name)) os << "handle_" << ev.name << "; ";
    }
    os << name << "_noop;}\n";
    os << "\tentries = { // these entries are ordered.\n";
    for (size_t i : p.events_in_order) {
        const auto &ev = std::get<EventDecl>(p.decls[i].v);
        if (p.find_handler(ev.name))
            os << "\t\t(" << ev.event_id << ") : handle_" << ev.name << ";\n";
    }
    os << "\t\t( _ ) : " << name << "_noop;\n";
    os << "\t}\n";
    os << "}\n";
}

void emit_header_comment(std::ostringstream &os, const Program &p) {
    os << "// Event wire layout (per serialized event packet):\n";
    os << "//   ev_id   : bit<16>   event id, by declaration order\n";
    os << "//   delay   : bit<32>   remaining delay in ns\n";
    os << "//   dest    : bit<32>   destination switch or group\n";
    os << "//   args    : event parameters in declaration order\n";
    for (size_t i : p.events_in_order) {
        const auto &ev = std::get<EventDecl>(p.decls[i].v);
        os << "// event " << ev.event_id << ": " << ev.name << "(";
        for (size_t k = 0; k < ev.params.size(); k++) {
            if (k) os << ", ";
            uint32_t w =
                ev.params[k].ty.kind == Ty::Kind::Bool
                    ? 1
                    : (ev.params[k].ty.width && ev.params[k].ty.width->folded()
                           ? *ev.params[k].ty.width->value
                           : 32);
            os << "bit<" << w << "> " << ev.params[k].name;
        }
        os << ")\n";
    }
}

void emit_registers(std::ostringstream &os, const Program &p) {
    for (size_t i : p.globals_in_order) {
        const auto &g = std::get<GlobalDecl>(p.decls[i].v);
        os << "Register<" << bits(g.width) << ", " << bits(32) << ">(" << g.len << ") "
           << g.name << ";\n";
    }
}

} // namespace

std::string emit_table(const AtomicStmt &stmt, const std::string &name,
                       const CheckedProgram &checked) {
    std::ostringstream os;
    std::visit(
        [&](const auto &a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, AtomicOp>) {
                emit_op_table(os, a, name);
            } else if constexpr (std::is_same_v<T, AtomicMemOp>) {
                emit_memop_table(os, a, name, checked);
            } else if constexpr (std::is_same_v<T, AtomicBranch>) {
                emit_branch_table(os, a, name);
            } else if constexpr (std::is_same_v<T, AtomicGenerate>) {
                emit_generate_table(os, a, name);
            } else if constexpr (std::is_same_v<T, AtomicNoop>) {
                os << "action do_" << name << " {}\n";
                os << "table " << name << " {\n";
                os << "\tactions = {do_" << name << ";}\n";
                os << "\tconst default_action = {do_" << name << ";}\n";
                os << "}\n";
            }
        },
        stmt.v);
    return os.str();
}

std::string emit_pipeline(const PipelineLayout &layout, const Program &p,
                          const CheckedProgram &checked) {
    std::ostringstream os;
    emit_header_comment(os, p);
    os << "\n";
    emit_registers(os, p);
    os << "\ncontrol LucidIngress(inout header_t hdr, inout metadata_t md) {\n\n";

    bool multi = layout.graph.n_handlers > 1;
    for (size_t s = 0; s < layout.stages.size(); s++) {
        for (const auto &t : layout.stages[s]) {
            // register actions and member actions
            std::map<int, std::string> action_name;
            for (int mid : t.members) {
                const GuardedNode &n = layout.graph.nodes[mid];
                action_name[mid] = n.name;
                if (const auto *m = std::get_if<AtomicMemOp>(&n.stmt.v)) {
                    std::string w = bits(m->cell_width);
                    os << "RegisterAction<" << w << "," << w << "," << w << ">(" << m->array
                       << ") " << n.name << "_alu = {\n";
                    os << "  void apply(inout " << w << " mem, out " << w << " ret) {\n";
                    if (m->get_memop) {
                        if (const MemopShape *sh = checked.find_memop(*m->get_memop))
                            memop_lines(os, *sh, operand_text(m->get_arg), "ret", "    ");
                    } else if (m->result && !m->set_memop && !m->set_value) {
                        os << "    ret = mem;\n";
                    }
                    if (m->set_memop) {
                        if (const MemopShape *sh = checked.find_memop(*m->set_memop))
                            memop_lines(os, *sh, operand_text(m->set_arg), "mem", "    ");
                    } else if (m->set_value) {
                        os << "    mem = " << operand_text(*m->set_value) << ";\n";
                    }
                    os << "  }\n};\n";
                }
            }
            // one action per distinct rule firing set
            std::map<std::vector<int>, std::string> rule_actions;
            int ai = 0;
            for (const auto &r : t.rules) {
                if (rule_actions.count(r.fire)) continue;
                std::string an = t.name + "_a" + std::to_string(ai++);
                rule_actions[r.fire] = an;
                os << "action " << an << "() {";
                if (r.fire.empty()) os << " /* no-op */";
                for (int mid : r.fire) {
                    const GuardedNode &n = layout.graph.nodes[mid];
                    std::visit(
                        [&](const auto &a) {
                            using T = std::decay_t<decltype(a)>;
                            if constexpr (std::is_same_v<T, AtomicOp>) {
                                os << " " << op_stmt_text(a);
                            } else if constexpr (std::is_same_v<T, AtomicMemOp>) {
                                os << " ";
                                if (a.result) os << *a.result << " = ";
                                os << n.name << "_alu.execute(" << operand_text(a.index) << ");";
                            } else if constexpr (std::is_same_v<T, AtomicGenerate>) {
                                os << " " << (a.multicast ? "mgenerate_event(" : "generate_event(")
                                   << a.event;
                                for (const auto &x : a.args) os << ", " << operand_text(x);
                                os << ");";
                            }
                        },
                        n.stmt.v);
                }
                os << " }\n";
            }
            // the table
            os << "@stage(" << s << ")\n";
            os << "@ignore_dependencies(";
            bool first = true;
            for (const auto &other : layout.stages[s]) {
                if (other.name == t.name) continue;
                if (!first) os << ", ";
                os << other.name;
                first = false;
            }
            os << ")\n";
            os << "table " << t.name << " {\n";
            os << "\tkeys = {";
            for (size_t k = 0; k < t.keys.size(); k++) {
                if (!multi && t.keys[k].first == "%ev") continue;
                os << t.keys[k].first << " : ternary; ";
            }
            os << "}\n";
            os << "\tactions = {";
            for (const auto &[fire, an] : rule_actions) os << an << "; ";
            os << "}\n";
            os << "\tentries = { // these entries are ordered.\n";
            for (const auto &r : t.rules) {
                os << "\t\t(";
                if (r.pattern.lits.empty()) {
                    os << "_";
                } else {
                    for (size_t k = 0; k < r.pattern.lits.size(); k++) {
                        if (k) os << ", ";
                        const GuardLit &l = r.pattern.lits[k];
                        if (l.cmp == CmpKind::Eq)
                            os << l.var << "=" << l.value;
                        else
                            os << l.var << " " << cmp_text(l.cmp) << " " << l.value << " : range";
                    }
                }
                os << ") : " << rule_actions[r.fire] << ";\n";
            }
            os << "\t}\n";
            os << "}\n\n";
        }
    }

    os << "apply {\n";
    for (size_t s = 0; s < layout.stages.size(); s++)
        for (const auto &t : layout.stages[s]) os << "\t" << t.name << ".apply();\n";
    os << "}\n";
    os << "} // control LucidIngress\n";
    return os.str();
}

std::string emit_unoptimized(const AtomicTableGraph &graph, const Program &p,
                             const CheckedProgram &checked) {
    std::ostringstream os;
    emit_header_comment(os, p);
    os << "\n";
    emit_registers(os, p);
    os << "\ncontrol LucidIngress(inout header_t hdr, inout metadata_t md) {\n\n";
    // control depth of each node = its stage in the unoptimized program
    std::map<int, int> depth;
    std::vector<std::pair<int, int>> ordered; // (node, depth)
    for (const auto &n : graph.nodes) {
        if (std::holds_alternative<AtomicDispatch>(n.stmt.v)) {
            os << "// dispatch: selects the handler by event id\n";
            emit_dispatch_table(os, p, "select_event");
            os << "\n";
            continue;
        }
        int d = 0;
        // node ids are in control pre-order; predecessors are already done
        for (const auto &m : graph.nodes) {
            if (m.next_true == n.id || m.next_false == n.id)
                if (depth.count(m.id)) d = std::max(d, depth[m.id] + 1);
        }
        depth[n.id] = d;
        ordered.emplace_back(n.id, d);
        os << "@stage(" << d << ")\n";
        os << emit_table(n.stmt, n.name, checked);
        os << "\n";
    }
    os << "apply {\n";
    os << "\tselect_event.apply();\n";
    for (const auto &[id, d] : ordered) os << "\t" << graph.nodes[id].name << ".apply();\n";
    os << "}\n";
    os << "} // control LucidIngress\n";
    return os.str();
}

} // namespace lucid
