#include "itemrag/recommender.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "itemrag/errors.hpp"
#include "jsonl.hpp"
#include "warn.hpp"

namespace itemrag {
namespace {

constexpr std::size_t kMaxCandidates = 26;  // label alphabet A..Z

std::string example_label_sequence(std::size_t n) {
    std::vector<char> labels(n);
    for (std::size_t k = 0; k < n; ++k) labels[k] = static_cast<char>('A' + k);
    if (n >= 2) std::swap(labels[0], labels[1]);
    if (n >= 4) std::swap(labels[2], labels[3]);
    std::string out;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) out += ", ";
        out.push_back(labels[k]);
    }
    return out;
}

}  // namespace

std::string AugmentedItem::rendered() const {
    if (!summary || summary->empty()) return base_description;
    return base_description + " | Frequently co-purchased: " + *summary;
}

AugmentedItem augment(const Item& item, const std::optional<CoPurchaseSummary>& summary) {
    AugmentedItem out{item.id, item.description, std::nullopt};
    if (summary && !summary->empty_sentinel()) out.summary = summary->text;
    return out;
}

std::string build_ranking_prompt(const RankingTask& task, std::size_t history_cap) {
    if (task.candidates.size() > kMaxCandidates) {
        throw ConfigError("ranking: " + std::to_string(task.candidates.size()) +
                          " candidates exceed the label alphabet");
    }
    {
        std::unordered_set<ItemId> seen;
        for (const auto& c : task.candidates) {
            if (!seen.insert(c.item).second) {
                throw ConfigError("ranking: duplicate candidate \"" + c.item + "\"");
            }
        }
    }

    std::string prompt = "You are a recommender system. A user purchased the following products "
                         "in chronological order:\n";
    const std::size_t skip =
        task.history.size() > history_cap ? task.history.size() - history_cap : 0;
    for (std::size_t pos = skip; pos < task.history.size(); ++pos) {
        prompt += std::to_string(pos - skip + 1) + ". " + task.history[pos].rendered() + "\n";
    }
    prompt += "Rank ALL of the following " + std::to_string(task.candidates.size()) +
              " candidate products from most to least likely to be the user's next purchase.\n";
    for (std::size_t k = 0; k < task.candidates.size(); ++k) {
        prompt.push_back(static_cast<char>('A' + k));
        prompt += ") " + task.candidates[k].rendered() + "\n";
    }
    prompt += "Answer with only the labels in ranked order, comma-separated (e.g., \"" +
              example_label_sequence(task.candidates.size()) + "\").";
    return prompt;
}

std::vector<std::size_t> parse_label_ranking(std::string_view response,
                                             std::size_t n_candidates) {
    auto label_index = [&](char c) -> std::optional<std::size_t> {
        const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (upper < 'A' || static_cast<std::size_t>(upper - 'A') >= n_candidates) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(upper - 'A');
    };

    // A token is a valid label when, stripped of punctuation, exactly one
    // label character remains.
    auto token_label = [&](std::string_view token) -> std::optional<std::size_t> {
        std::optional<std::size_t> found;
        for (char c : token) {
            if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
                auto idx = label_index(c);
                if (!idx || found) return std::nullopt;
                found = idx;
            }
        }
        return found;
    };

    auto split = [](std::string_view text, char sep) {
        std::vector<std::string_view> tokens;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find(sep, start);
            if (end == std::string_view::npos) end = text.size();
            auto token = text.substr(start, end - start);
            while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) {
                token.remove_prefix(1);
            }
            while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) {
                token.remove_suffix(1);
            }
            if (!token.empty()) tokens.push_back(token);
            start = end + 1;
        }
        return tokens;
    };

    auto try_tokens = [&](const std::vector<std::string_view>& tokens)
        -> std::optional<std::vector<std::size_t>> {
        if (tokens.empty()) return std::nullopt;
        std::vector<std::size_t> order;
        for (auto token : tokens) {
            auto idx = token_label(token);
            if (!idx) return std::nullopt;
            order.push_back(*idx);
        }
        return order;
    };

    // Repair ladder: comma-separated, then whitespace-separated, then label
    // letters in order of first appearance anywhere in the text.
    std::optional<std::vector<std::size_t>> raw = try_tokens(split(response, ','));
    if (!raw) raw = try_tokens(split(response, ' '));
    if (!raw) {
        std::vector<std::size_t> found;
        std::vector<bool> seen(n_candidates, false);
        for (char c : response) {
            if (c >= 'A' && c < static_cast<char>('A' + n_candidates) &&
                !seen[static_cast<std::size_t>(c - 'A')]) {
                seen[static_cast<std::size_t>(c - 'A')] = true;
                found.push_back(static_cast<std::size_t>(c - 'A'));
            }
        }
        if (found.empty()) {
            throw RankingParseError("ranking: no labels recognized in response",
                                    std::string(response));
        }
        raw = std::move(found);
    }

    // Normalize to a permutation: keep first occurrences, then append the
    // missing labels in original candidate order.
    std::vector<std::size_t> order;
    std::vector<bool> used(n_candidates, false);
    bool repaired = false;
    for (auto idx : *raw) {
        if (used[idx]) {
            repaired = true;
            continue;
        }
        used[idx] = true;
        order.push_back(idx);
    }
    for (std::size_t k = 0; k < n_candidates; ++k) {
        if (!used[k]) {
            repaired = true;
            order.push_back(k);
        }
    }
    if (repaired) {
        detail::warn("ranking: repaired a non-permutation response");
    }
    return order;
}

RankedList rank(const RankingTask& task, LlmClient& llm, const RecommenderOptions& options) {
    LlmRequest request;
    request.user = build_ranking_prompt(task, options.history_cap);
    request.temperature = options.temperature;
    request.max_tokens = options.max_tokens;
    request.model = options.model;

    const LlmResponse response = llm.complete(request);
    const auto indices = parse_label_ranking(response.text, task.candidates.size());

    RankedList ranked;
    ranked.raw_response = response.text;
    ranked.order.reserve(indices.size());
    for (auto idx : indices) ranked.order.push_back(task.candidates[idx].item);
    return ranked;
}

void write_ranking_dump_line(std::string& out, const UserId& user, const RankedList& ranked,
                             int gt_rank) {
    jsonl::ordered_json record;
    record["user_id"] = user;
    record["order"] = ranked.order;
    record["gt_rank"] = gt_rank;
    record["raw"] = ranked.raw_response;
    out += record.dump();
    out.push_back('\n');
}

}  // namespace itemrag
