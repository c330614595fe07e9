#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lucid/atomic.hpp"

namespace lucid {

// One match literal: a local compared against a constant at a given width.
struct GuardLit {
    std::string var;
    uint32_t width = 32;
    CmpKind cmp = CmpKind::Eq;
    uint64_t value = 0;

    bool operator==(const GuardLit &o) const {
        return var == o.var && cmp == o.cmp && value == o.value;
    }
    bool operator<(const GuardLit &o) const {
        if (var != o.var) return var < o.var;
        if (cmp != o.cmp) return (int)cmp < (int)o.cmp;
        return value < o.value;
    }
    std::string str() const;
};

// Conjunction of literals, canonical (sorted, narrowed, no contradictions).
struct Conjunct {
    std::vector<GuardLit> lits;
    bool operator==(const Conjunct &o) const { return lits == o.lits; }
    bool operator<(const Conjunct &o) const { return lits < o.lits; }
};

// Disjunction of conjunctions. True = one empty conjunct; False = empty.
struct Guard {
    std::vector<Conjunct> disjuncts;

    static Guard truth() { return Guard{{Conjunct{}}}; }
    static Guard falsity() { return Guard{}; }
    bool is_true() const {
        for (const auto &c : disjuncts)
            if (c.lits.empty()) return true;
        return false;
    }
    bool is_false() const { return disjuncts.empty(); }
    std::string str() const;
};

// Canonicalizes a raw literal list by per-variable interval narrowing.
// Returns nullopt when the conjunction is contradictory.
std::optional<Conjunct> canonicalize_conjunct(const std::vector<GuardLit> &lits);

Guard guard_and_lit(const Guard &g, const GuardLit &lit);
Guard guard_or(Guard a, const Guard &b);
// Conjunction of two guards (cross product of conjuncts, pruned).
Guard guard_and(const Guard &a, const Guard &b);

using VarLookup = std::function<uint64_t(const std::string &)>;
bool guard_eval(const Guard &g, const VarLookup &lookup);
bool conjunct_eval(const Conjunct &c, const VarLookup &lookup);

// Variables matched by the guard, with widths, sorted by name.
std::vector<std::pair<std::string, uint32_t>> guard_keys(const Guard &g);

} // namespace lucid
