#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "itemrag/catalog.hpp"
#include "itemrag/llm_client.hpp"
#include "itemrag/retrieval.hpp"

namespace itemrag {

inline constexpr std::string_view kSummaryTemplateVersion = "v1";

/// Hard cap on summary text kept from an LLM completion, in bytes (truncation
/// respects UTF-8 boundaries).
inline constexpr std::size_t kSummaryMaxBytes = 1000;

/// LLM summary of the items retrieved for one query item. Independent of any
/// user, so one summary serves every ranking task that mentions the item.
/// An empty text is the no-data sentinel: augmentation is skipped.
struct CoPurchaseSummary {
    ItemId item;
    std::string text;
    std::vector<ItemId> source_items;
    std::string config_hash;
    std::int64_t created_at = 0;

    bool empty_sentinel() const { return text.empty(); }
};

/// Binds a summary to the exact pipeline that produced it: retrieval config,
/// prompt template version, and model tag.
std::string make_config_hash(const RetrievalConfig& config, std::string_view template_version,
                             std::string_view model_tag);

/// Renders summary prompt template v1. Byte-deterministic.
std::string render_summary_prompt(const Item& query, const std::vector<Item>& retrieved);

/// Summarizes the retrieved items for `item`. No LLM call is made when
/// `retrieved` is empty (the empty sentinel comes back instead); an empty
/// completion is also mapped to the sentinel, with a warning.
CoPurchaseSummary summarize(const Item& item, const std::vector<Item>& retrieved,
                            LlmClient& llm, std::string_view template_version);

/// Persistent (item, config_hash) -> summary map with an append-only JSONL
/// file behind an in-memory index. Concurrent misses on the same key
/// coalesce into a single upstream computation. Persistence failures degrade
/// to uncached operation with a warning.
class SummaryCache {
public:
    SummaryCache() = default;  // memory-only

    /// Loads any existing entries from `path` and appends new ones to it.
    explicit SummaryCache(const std::filesystem::path& path);

    SummaryCache(const SummaryCache&) = delete;
    SummaryCache& operator=(const SummaryCache&) = delete;

    std::optional<CoPurchaseSummary> get(const ItemId& item, std::string_view config_hash) const;
    void put(const CoPurchaseSummary& summary);
    std::size_t size() const;

    /// Returns the cached summary or computes, stores, and returns it.
    /// At most one `compute` runs per key, even under concurrent callers.
    CoPurchaseSummary get_or_compute(const ItemId& item, std::string_view config_hash,
                                     const std::function<CoPurchaseSummary()>& compute);

private:
    static std::string key_of(const ItemId& item, std::string_view config_hash);
    void append_line(const CoPurchaseSummary& summary);

    mutable std::mutex mu_;
    std::unordered_map<std::string, CoPurchaseSummary> entries_;
    std::unordered_map<std::string, std::shared_future<CoPurchaseSummary>> inflight_;
    std::filesystem::path file_;
    bool persist_ = false;
    bool persist_failed_ = false;
};

/// Cache-through summarize: hit returns the stored summary with no LLM call,
/// miss computes and stores under `config_hash`.
CoPurchaseSummary get_or_summarize(SummaryCache& cache, const Item& item,
                                   const std::vector<Item>& retrieved, LlmClient& llm,
                                   std::string_view config_hash);

}  // namespace itemrag
