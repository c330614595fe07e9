#pragma once

#include <string>
#include <vector>

#include "lucid/span.hpp"

namespace lucid {

enum class DiagKind {
    UnknownCharacter,
    SyntaxError,
    UnboundName,
    DuplicateName,
    HandlerSignatureMismatch,
    NonConstantSize,
    UnsupportedModule,
    UnsupportedBuiltin,
    MemopViolation,
    TypeError,
    OrderError,
    ReAccessError,
    Unsatisfiable,
    RecursionDetected,
    GuardExplosion,
    PlacementError,
    IoError,
    SpecError,
};

const char *diag_kind_name(DiagKind k);

struct Diag {
    DiagKind kind;
    std::string message;
    // Primary location plus any secondary locations (e.g. both accesses of an
    // ordering conflict, earliest first).
    std::vector<Span> spans;
    std::string handler; // enclosing handler, when known

    std::string str() const;
};

struct Diagnostics {
    std::vector<Diag> items;

    Diag &add(DiagKind kind, Span span, std::string message) {
        items.push_back(Diag{kind, std::move(message), {std::move(span)}, {}});
        return items.back();
    }
    bool empty() const { return items.empty(); }
    bool has(DiagKind k) const {
        for (const auto &d : items)
            if (d.kind == k) return true;
        return false;
    }
    size_t count(DiagKind k) const {
        size_t n = 0;
        for (const auto &d : items)
            if (d.kind == k) n++;
        return n;
    }
};

} // namespace lucid
