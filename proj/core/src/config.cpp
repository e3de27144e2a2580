#include "itemrag/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "itemrag/errors.hpp"

namespace itemrag {
namespace {

std::string trim(std::string text) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!text.empty() && is_space(static_cast<unsigned char>(text.back()))) text.pop_back();
    std::size_t start = 0;
    while (start < text.size() && is_space(static_cast<unsigned char>(text[start]))) ++start;
    return text.substr(start);
}

}  // namespace

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    KeyValueConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config: expected key=value", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("config: empty key", lineno);
        config.values_[key] = value;
    }
    return config;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::int64_t> KeyValueConfig::get_int(const std::string& key) const {
    auto value = get(key);
    if (!value) return std::nullopt;
    try {
        std::size_t used = 0;
        const std::int64_t parsed = std::stoll(*value, &used);
        if (used != value->size()) throw std::invalid_argument(*value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config: \"" + key + "\" is not an integer: " + *value);
    }
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
    auto value = get(key);
    if (!value) return std::nullopt;
    std::string lowered = *value;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "true" || lowered == "1" || lowered == "yes" || lowered == "on") return true;
    if (lowered == "false" || lowered == "0" || lowered == "no" || lowered == "off") return false;
    throw ConfigError("config: \"" + key + "\" is not a boolean: " + *value);
}

}  // namespace itemrag
