// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nff {

// Error categories map to CLI exit codes.
enum class ErrKind : int {
    config = 2,   // bad flags, malformed config, invalid combinations
    data = 3,     // missing/corrupt input files, schema violations
    internal = 4, // numeric failures, broken invariants
};

class Error : public std::runtime_error {
public:
    Error(ErrKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    ErrKind kind;
};

[[noreturn]] inline void fail(ErrKind k, const std::string& msg) { throw Error(k, msg); }

template <class... Args>
std::string str(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

#define NFF_CHECK(cond, kind, ...) \
    do { \
        if (!(cond)) ::nff::fail(kind, ::nff::str(__VA_ARGS__)); \
    } while (0)

#define NFF_ASSERT(cond, ...) NFF_CHECK(cond, ::nff::ErrKind::internal, __VA_ARGS__)

} // namespace nff
