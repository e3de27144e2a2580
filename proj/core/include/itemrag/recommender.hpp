#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "itemrag/catalog.hpp"
#include "itemrag/llm_client.hpp"
#include "itemrag/summarizer.hpp"

namespace itemrag {

/// An item as it appears in a ranking prompt: the base description with the
/// co-purchase summary appended when one exists.
struct AugmentedItem {
    ItemId item;
    std::string base_description;
    std::optional<std::string> summary;  // absent or empty = zero-shot rendering

    std::string rendered() const;
};

/// One user's ranking problem: their (truncated) purchase history and the
/// candidate items, in presentation order. Candidate k is labeled 'A' + k.
struct RankingTask {
    UserId user;
    std::vector<AugmentedItem> history;
    std::vector<AugmentedItem> candidates;
};

/// The parsed model answer: a true permutation of the candidate items, best
/// first, plus the raw completion for audit.
struct RankedList {
    std::vector<ItemId> order;
    std::string raw_response;
};

struct RecommenderOptions {
    std::size_t history_cap = 30;  // most recent items shown to the model
    std::string model;             // empty = client default
    double temperature = 0.0;
    int max_tokens = 64;
};

AugmentedItem augment(const Item& item, const std::optional<CoPurchaseSummary>& summary);

/// Renders ranking prompt template v1. Byte-deterministic; preserves the
/// given candidate order. Throws ConfigError beyond 26 candidates or on
/// duplicate candidates.
std::string build_ranking_prompt(const RankingTask& task,
                                 std::size_t history_cap = RecommenderOptions{}.history_cap);

/// Parses a label ranking ("C, A, B, ...") into candidate indices, repairing
/// tolerable deviations: whitespace-separated labels, stray punctuation,
/// duplicates (first occurrence wins), and missing labels (appended in
/// original candidate order). Throws RankingParseError when no label can be
/// recovered at all.
std::vector<std::size_t> parse_label_ranking(std::string_view response,
                                             std::size_t n_candidates);

/// End-to-end: render the prompt, call the model once, parse the answer.
RankedList rank(const RankingTask& task, LlmClient& llm,
                const RecommenderOptions& options = RecommenderOptions{});

void write_ranking_dump_line(std::string& out, const UserId& user, const RankedList& ranked,
                             int gt_rank);

}  // namespace itemrag
