#pragma once

#include <stdexcept>
#include <string>

// Internal invariant check that stays on in optimized builds.
#define LUCID_CHECK(cond, msg)                                                                     \
    do {                                                                                           \
        if (!(cond)) throw std::logic_error(std::string("internal invariant violated: ") + (msg)); \
    } while (0)
