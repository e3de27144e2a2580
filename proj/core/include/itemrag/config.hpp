#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace itemrag {

/// Flat key=value configuration file. Lines are `key = value`; blank lines
/// and `#` comments are ignored.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    /// Throws ParseError (with line number) on lines without '='.
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::optional<std::int64_t> get_int(const std::string& key) const;
    std::optional<bool> get_bool(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace itemrag
