#pragma once

#include <string>

namespace lucid {

// Source region, 1-based line/column, inclusive on both ends.
struct Span {
    std::string file;
    int start_line = 1;
    int start_col = 1;
    int end_line = 1;
    int end_col = 1;

    static Span join(const Span &a, const Span &b) {
        Span s = a;
        s.end_line = b.end_line;
        s.end_col = b.end_col;
        return s;
    }

    std::string str() const {
        return file + ":" + std::to_string(start_line) + ":" + std::to_string(start_col);
    }

    bool operator==(const Span &o) const {
        return file == o.file && start_line == o.start_line && start_col == o.start_col &&
               end_line == o.end_line && end_col == o.end_col;
    }
};

} // namespace lucid
