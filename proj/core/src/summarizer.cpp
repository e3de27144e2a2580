#include "itemrag/summarizer.hpp"

#include <ctime>
#include <fstream>

#include "itemrag/errors.hpp"
#include "itemrag/rng.hpp"
#include "jsonl.hpp"
#include "warn.hpp"

namespace itemrag {
namespace {

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

/// Truncates to at most max_bytes without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string text, std::size_t max_bytes) {
    if (text.size() <= max_bytes) return text;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    text.resize(cut);
    return text;
}

}  // namespace

std::string make_config_hash(const RetrievalConfig& config, std::string_view template_version,
                             std::string_view model_tag) {
    std::string canonical = config.canonical_string();
    canonical += ";template=";
    canonical += template_version;
    canonical += ";model=";
    canonical += model_tag;
    return hex64(fnv1a64(canonical));
}

std::string render_summary_prompt(const Item& query, const std::vector<Item>& retrieved) {
    std::string prompt = "The following products are frequently purchased together with the "
                         "product \"" +
                         query.description + "\".\nCo-purchased products:\n";
    for (const auto& item : retrieved) {
        prompt += "- " + item.description + "\n";
    }
    prompt += "Summarize, in at most 80 words, what kinds of products are commonly bought "
              "together with \"" +
              query.description + "\" and why.";
    return prompt;
}

CoPurchaseSummary summarize(const Item& item, const std::vector<Item>& retrieved,
                            LlmClient& llm, std::string_view template_version) {
    CoPurchaseSummary summary;
    summary.item = item.id;
    summary.created_at = static_cast<std::int64_t>(std::time(nullptr));
    if (retrieved.empty()) return summary;  // sentinel, no LLM call

    summary.source_items.reserve(retrieved.size());
    for (const auto& r : retrieved) summary.source_items.push_back(r.id);

    LlmRequest request;
    request.user = render_summary_prompt(item, retrieved);
    request.temperature = 0.0;
    request.max_tokens = 256;
    (void)template_version;  // participates via the config hash, not the prompt

    const LlmResponse response = llm.complete(request);
    if (response.text.empty()) {
        detail::warn("summarizer: empty completion for item \"" + item.id +
                     "\", keeping the empty sentinel");
        return summary;
    }
    summary.text = truncate_utf8(response.text, kSummaryMaxBytes);
    return summary;
}

// --- cache -------------------------------------------------------------------

std::string SummaryCache::key_of(const ItemId& item, std::string_view config_hash) {
    std::string key = item;
    key.push_back('\x1f');
    key += config_hash;
    return key;
}

SummaryCache SummaryCache::open(const std::filesystem::path& path) {
    SummaryCache cache;
    cache.file_ = path;
    cache.persist_ = true;
    if (std::filesystem::exists(path)) {
        try {
            jsonl::for_each_record(path, [&](std::size_t lineno, const jsonl::json& record) {
                try {
                    CoPurchaseSummary summary;
                    summary.item = record.at("item_id").get<std::string>();
                    summary.config_hash = record.at("config_hash").get<std::string>();
                    summary.text = record.at("summary").get<std::string>();
                    for (const auto& s : record.value("source_items", jsonl::json::array())) {
                        summary.source_items.push_back(s.get<std::string>());
                    }
                    summary.created_at = record.value("created_at", 0);
                    cache.entries_[key_of(summary.item, summary.config_hash)] =
                        std::move(summary);
                } catch (const jsonl::json::exception&) {
                    detail::warn("summary cache: skipping malformed line " +
                                 std::to_string(lineno) + " in " + path.string());
                }
            });
        } catch (const ParseError&) {
            // A torn trailing line from a crashed run; entries before it are kept.
            detail::warn("summary cache: truncated file " + path.string() +
                         ", continuing with " + std::to_string(cache.entries_.size()) +
                         " entries");
        }
    }
    return cache;
}

std::optional<CoPurchaseSummary> SummaryCache::get(const ItemId& item,
                                                   std::string_view config_hash) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key_of(item, config_hash));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void SummaryCache::append_line(const CoPurchaseSummary& summary) {
    if (!persist_ || persist_failed_) return;
    std::ofstream out(file_, std::ios::app);
    jsonl::ordered_json record;
    record["item_id"] = summary.item;
    record["config_hash"] = summary.config_hash;
    record["summary"] = summary.text;
    record["source_items"] = summary.source_items;
    record["created_at"] = summary.created_at;
    out << record.dump() << '\n';
    if (!out) {
        persist_failed_ = true;
        detail::warn("summary cache: cannot append to " + file_.string() +
                     ", continuing uncached");
    }
}

void SummaryCache::put(const CoPurchaseSummary& summary) {
    std::lock_guard lock(mu_);
    entries_[key_of(summary.item, summary.config_hash)] = summary;
    append_line(summary);
}

std::size_t SummaryCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

CoPurchaseSummary SummaryCache::get_or_compute(
    const ItemId& item, std::string_view config_hash,
    const std::function<CoPurchaseSummary()>& compute) {
    const std::string key = key_of(item, config_hash);
    std::shared_future<CoPurchaseSummary> waiter;
    std::promise<CoPurchaseSummary> promise;
    {
        std::lock_guard lock(mu_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
        if (auto it = inflight_.find(key); it != inflight_.end()) {
            waiter = it->second;
        } else {
            waiter = {};
            inflight_.emplace(key, promise.get_future().share());
        }
    }
    if (waiter.valid()) return waiter.get();  // someone else is computing this key

    try {
        CoPurchaseSummary summary = compute();
        {
            std::lock_guard lock(mu_);
            entries_[key] = summary;
            append_line(summary);
            inflight_.erase(key);
        }
        promise.set_value(summary);
        return summary;
    } catch (...) {
        {
            std::lock_guard lock(mu_);
            inflight_.erase(key);
        }
        promise.set_exception(std::current_exception());
        throw;
    }
}

CoPurchaseSummary get_or_summarize(SummaryCache& cache, const Item& item,
                                   const std::vector<Item>& retrieved, LlmClient& llm,
                                   std::string_view config_hash) {
    return cache.get_or_compute(item, config_hash, [&]() {
        CoPurchaseSummary summary = summarize(item, retrieved, llm, kSummaryTemplateVersion);
        summary.config_hash = std::string(config_hash);
        return summary;
    });
}

}  // namespace itemrag
