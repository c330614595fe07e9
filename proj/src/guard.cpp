#include "lucid/guard.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace lucid {

std::string GuardLit::str() const {
    return var + " " + cmp_text(cmp) + " " + std::to_string(value);
}

std::string Guard::str() const {
    if (is_true()) return "true";
    if (is_false()) return "false";
    std::string out;
    for (size_t i = 0; i < disjuncts.size(); i++) {
        if (i) out += " || ";
        const auto &c = disjuncts[i];
        if (disjuncts.size() > 1 && c.lits.size() > 1) out += "(";
        for (size_t j = 0; j < c.lits.size(); j++) {
            if (j) out += " && ";
            out += c.lits[j].str();
        }
        if (disjuncts.size() > 1 && c.lits.size() > 1) out += ")";
    }
    return out;
}

std::optional<Conjunct> canonicalize_conjunct(const std::vector<GuardLit> &lits) {
    struct Range {
        uint32_t width = 32;
        uint64_t lo = 0, hi = 0;
        std::optional<uint64_t> eq;
        std::set<uint64_t> ne;
        bool init = false;
    };
    std::map<std::string, Range> vars;
    for (const auto &l : lits) {
        Range &r = vars[l.var];
        uint64_t top = l.width >= 64 ? ~0ull : (1ull << l.width) - 1;
        if (!r.init) {
            r.width = l.width;
            r.lo = 0;
            r.hi = top;
            r.init = true;
        }
        switch (l.cmp) {
        case CmpKind::Eq:
            if (r.eq && *r.eq != l.value) return std::nullopt;
            r.eq = l.value;
            break;
        case CmpKind::Ne:
            r.ne.insert(l.value);
            break;
        case CmpKind::Lt:
            if (l.value == 0) return std::nullopt;
            r.hi = std::min(r.hi, l.value - 1);
            break;
        case CmpKind::Le:
            r.hi = std::min(r.hi, l.value);
            break;
        case CmpKind::Gt:
            if (l.value >= top) return std::nullopt;
            r.lo = std::max(r.lo, l.value + 1);
            break;
        case CmpKind::Ge:
            r.lo = std::max(r.lo, l.value);
            break;
        }
    }
    Conjunct out;
    for (auto &[var, r] : vars) {
        if (r.lo > r.hi) return std::nullopt;
        if (r.eq) {
            if (*r.eq < r.lo || *r.eq > r.hi || r.ne.count(*r.eq)) return std::nullopt;
            out.lits.push_back(GuardLit{var, r.width, CmpKind::Eq, *r.eq});
            continue;
        }
        std::set<uint64_t> ne_in_range;
        for (uint64_t v : r.ne)
            if (v >= r.lo && v <= r.hi) ne_in_range.insert(v);
        uint64_t domain = r.hi - r.lo + 1; // lo <= hi, so no overflow
        if (domain != 0 && ne_in_range.size() >= domain) return std::nullopt;
        if (domain == 1) {
            out.lits.push_back(GuardLit{var, r.width, CmpKind::Eq, r.lo});
            continue;
        }
        uint64_t top = r.width >= 64 ? ~0ull : (1ull << r.width) - 1;
        if (r.lo > 0) out.lits.push_back(GuardLit{var, r.width, CmpKind::Ge, r.lo});
        if (r.hi < top) out.lits.push_back(GuardLit{var, r.width, CmpKind::Le, r.hi});
        for (uint64_t v : ne_in_range)
            out.lits.push_back(GuardLit{var, r.width, CmpKind::Ne, v});
    }
    std::sort(out.lits.begin(), out.lits.end());
    return out;
}

namespace {

void push_unique(Guard &g, Conjunct c) {
    for (const auto &have : g.disjuncts)
        if (have == c) return;
    g.disjuncts.push_back(std::move(c));
}

bool complementary(const GuardLit &a, const GuardLit &b) {
    if (a.var != b.var) return false;
    auto pair = [&](CmpKind x, CmpKind y) {
        return (a.cmp == x && b.cmp == y) || (a.cmp == y && b.cmp == x);
    };
    if (a.value == b.value &&
        (pair(CmpKind::Eq, CmpKind::Ne) || pair(CmpKind::Lt, CmpKind::Ge) ||
         pair(CmpKind::Gt, CmpKind::Le)))
        return true;
    // canonical intervals use Ge/Le: (x >= c) complements (x <= c-1)
    if (a.cmp == CmpKind::Ge && b.cmp == CmpKind::Le) return b.value + 1 == a.value;
    if (a.cmp == CmpKind::Le && b.cmp == CmpKind::Ge) return a.value + 1 == b.value;
    return false;
}

// Self-subsumption resolution to a fixpoint:
//   (X' && l) || (Y' && !l)  ==>  (X' && l) || Y'   when X' is a subset of Y'
// followed by plain subsumption (B || (B && extra) ==> B). This collapses
// exhaustive branch covers like (p==A) || (p!=A && p==B) || (p!=A && p!=B)
// down to true.
void simplify(Guard &g) {
    bool changed = true;
    while (changed) {
        changed = false;
        // subsumption
        for (size_t i = 0; i < g.disjuncts.size() && !changed; i++) {
            for (size_t j = 0; j < g.disjuncts.size(); j++) {
                if (i == j) continue;
                const auto &small = g.disjuncts[i].lits;
                const auto &big = g.disjuncts[j].lits;
                if (std::includes(big.begin(), big.end(), small.begin(), small.end())) {
                    g.disjuncts.erase(g.disjuncts.begin() + j);
                    changed = true;
                    break;
                }
            }
        }
        if (changed) continue;
        for (size_t i = 0; i < g.disjuncts.size() && !changed; i++) {
            for (size_t j = 0; j < g.disjuncts.size() && !changed; j++) {
                if (i == j) continue;
                const auto &x = g.disjuncts[i].lits;
                auto &y = g.disjuncts[j];
                for (size_t xi = 0; xi < x.size(); xi++) {
                    size_t yi = 0;
                    for (; yi < y.lits.size(); yi++)
                        if (complementary(x[xi], y.lits[yi])) break;
                    if (yi == y.lits.size()) continue;
                    std::vector<GuardLit> x_rest = x, y_rest = y.lits;
                    x_rest.erase(x_rest.begin() + xi);
                    y_rest.erase(y_rest.begin() + yi);
                    if (!std::includes(y_rest.begin(), y_rest.end(), x_rest.begin(),
                                       x_rest.end()))
                        continue;
                    y.lits = std::move(y_rest); // drop !l from Y
                    changed = true;
                    break;
                }
            }
        }
    }
}

} // namespace

Guard guard_and_lit(const Guard &g, const GuardLit &lit) {
    Guard out;
    for (const auto &c : g.disjuncts) {
        std::vector<GuardLit> lits = c.lits;
        lits.push_back(lit);
        if (auto canon = canonicalize_conjunct(lits)) push_unique(out, std::move(*canon));
    }
    return out;
}

Guard guard_or(Guard a, const Guard &b) {
    if (a.is_true()) return Guard::truth();
    for (const auto &c : b.disjuncts) {
        if (c.lits.empty()) return Guard::truth();
        push_unique(a, c);
    }
    simplify(a);
    return a;
}

Guard guard_and(const Guard &a, const Guard &b) {
    Guard out;
    for (const auto &ca : a.disjuncts)
        for (const auto &cb : b.disjuncts) {
            std::vector<GuardLit> lits = ca.lits;
            lits.insert(lits.end(), cb.lits.begin(), cb.lits.end());
            if (auto canon = canonicalize_conjunct(lits)) push_unique(out, std::move(*canon));
        }
    return out;
}

bool conjunct_eval(const Conjunct &c, const VarLookup &lookup) {
    for (const auto &l : c.lits)
        if (!cmp_eval(l.cmp, lookup(l.var), l.value)) return false;
    return true;
}

bool guard_eval(const Guard &g, const VarLookup &lookup) {
    for (const auto &c : g.disjuncts)
        if (conjunct_eval(c, lookup)) return true;
    return false;
}

std::vector<std::pair<std::string, uint32_t>> guard_keys(const Guard &g) {
    std::map<std::string, uint32_t> keys;
    for (const auto &c : g.disjuncts)
        for (const auto &l : c.lits) keys.emplace(l.var, l.width);
    return {keys.begin(), keys.end()};
}

} // namespace lucid
