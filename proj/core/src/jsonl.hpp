#pragma once

// Internal JSONL helpers. Not installed; public headers stay std-only.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "itemrag/errors.hpp"

namespace itemrag::jsonl {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Calls fn(line_number, record) for every non-blank line. Line numbers are
/// 1-based. Parse failures are rethrown as ParseError with the line number.
inline void for_each_record(const std::filesystem::path& path,
                            const std::function<void(std::size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& ex) {
            throw ParseError(path.string() + ": " + ex.what(), lineno);
        }
        fn(lineno, record);
    }
}

inline std::string require_string(const json& record, const char* key, std::size_t lineno,
                                  const std::string& context) {
    if (!record.contains(key) || !record.at(key).is_string()) {
        throw ParseError(context + ": missing or non-string \"" + key + "\"", lineno);
    }
    return record.at(key).get<std::string>();
}

inline std::int64_t require_int(const json& record, const char* key, std::size_t lineno,
                                const std::string& context) {
    if (!record.contains(key) || !record.at(key).is_number_integer()) {
        throw ParseError(context + ": missing or non-integer \"" + key + "\"", lineno);
    }
    return record.at(key).get<std::int64_t>();
}

}  // namespace itemrag::jsonl
