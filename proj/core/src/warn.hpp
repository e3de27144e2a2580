#pragma once

// Internal warning sink. Warnings go to stderr; tests can swap the stream.

#include <iostream>
#include <string>

namespace itemrag::detail {

inline std::ostream*& warn_stream() {
    static std::ostream* stream = &std::cerr;
    return stream;
}

inline void warn(const std::string& message) {
    *warn_stream() << "[itemrag] warning: " << message << '\n';
}

}  // namespace itemrag::detail
