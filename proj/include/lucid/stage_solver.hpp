#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lucid/span.hpp"

namespace lucid {

// Solver for stage constraints of the forms `a <= b`, `b = a + 1` and bounds
// against constants. Everything is encoded as offset inequalities
// value(to) >= value(from) + weight over a graph that includes the
// distinguished ZERO variable (id 0, pinned to 0).
//
// The minimal satisfying natural assignment is the longest-path labeling from
// ZERO; a positive-weight cycle is a contradiction and is returned as the
// witness chain of constraints.
struct StageConstraint {
    int from = 0;
    int to = 0;
    int64_t weight = 0;
    // provenance for diagnostics
    std::string why;
    Span span;
    int global_index = -1; // the array access that produced this edge, if any
};

struct StageSolution {
    std::vector<int64_t> values; // indexed by variable id; values[0] == 0
};

struct StageContradiction {
    std::vector<StageConstraint> cycle; // the contradictory chain, in order
};

class StageGraph {
  public:
    static constexpr int kZero = 0;

    StageGraph() { n_vars_ = 1; }

    int fresh(std::string name = "") {
        names_.resize(n_vars_ + 1);
        names_[n_vars_] = std::move(name);
        return n_vars_++;
    }
    int num_vars() const { return n_vars_; }
    const std::string &name(int v) const {
        static const std::string zero = "0";
        return v == 0 || v >= (int)names_.size() ? zero : names_[v];
    }

    // value(b) >= value(a) + w
    void ge(int b, int a, int64_t w, std::string why = "", Span span = {}, int global = -1) {
        constraints_.push_back(StageConstraint{a, b, w, std::move(why), std::move(span), global});
    }
    // a <= b
    void le(int a, int b, std::string why = "", Span span = {}) {
        ge(b, a, 0, std::move(why), std::move(span));
    }
    // b = a + 1
    void successor(int b, int a, std::string why = "", Span span = {}, int global = -1) {
        ge(b, a, 1, why, span, global);
        ge(a, b, -1, std::move(why), std::move(span), global);
    }
    // x = k
    void pin(int x, int64_t k, std::string why = "", Span span = {}) {
        ge(x, kZero, k, why, span);
        ge(kZero, x, -k, std::move(why), std::move(span));
    }
    // x <= k
    void upper(int x, int64_t k, std::string why = "", Span span = {}, int global = -1) {
        ge(kZero, x, -k, std::move(why), std::move(span), global);
    }

    const std::vector<StageConstraint> &constraints() const { return constraints_; }
    void add_all(const std::vector<StageConstraint> &cs) {
        constraints_.insert(constraints_.end(), cs.begin(), cs.end());
    }

    std::variant<StageSolution, StageContradiction> solve() const;

    // Projects the constraint system onto `keep` (which must include kZero
    // implicitly): the tightest implied offset edges among the kept
    // variables, via all-pairs longest paths. Precondition: satisfiable.
    std::vector<StageConstraint> project(const std::vector<int> &keep) const;

  private:
    int n_vars_ = 1;
    std::vector<std::string> names_;
    std::vector<StageConstraint> constraints_;
};

} // namespace lucid
