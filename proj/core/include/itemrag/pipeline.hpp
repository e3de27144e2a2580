#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "itemrag/catalog.hpp"
#include "itemrag/copurchase_index.hpp"
#include "itemrag/embedding_store.hpp"
#include "itemrag/evaluation.hpp"
#include "itemrag/llm_client.hpp"
#include "itemrag/recommender.hpp"
#include "itemrag/retrieval.hpp"
#include "itemrag/summarizer.hpp"

namespace itemrag {

struct PipelineOptions {
    RetrievalConfig retrieval;
    RecommenderOptions recommender;
    bool augment = true;  // false = zero-shot: bare descriptions, no retrieval
    unsigned workers = 1;
    std::string model_tag = "default";  // names the summary-producing model in the config hash
};

/// Glue over the whole flow for one dataset: retrieval, summaries (cached),
/// prompt assembly, ranking. One instance serves any number of users;
/// summaries are shared across them.
class Pipeline {
public:
    Pipeline(const Catalog& train, const CoPurchaseIndex& index, const EmbeddingStore* store,
             LlmClient& llm, SummaryCache& cache, PipelineOptions options);

    const std::string& config_hash() const { return config_hash_; }
    const PipelineOptions& options() const { return options_; }

    /// Retrieval for one item (empty when augmentation is off).
    RetrievalResult retrieval_for(const ItemId& item) const;

    /// The cached-or-computed summary for one item.
    CoPurchaseSummary summary_for(const ItemId& item);

    AugmentedItem augmented(const ItemId& item);

    /// Computes summaries for every distinct item up front, under the
    /// configured worker count. Deterministic regardless of scheduling.
    void prefetch_summaries(std::span<const ItemId> items);

    RankingTask make_task(const UserId& user, const CandidateSet& candidates);

    /// The evaluation entry point: prompt, one LLM call, parsed ranking.
    RankedList rank_user(const UserId& user, const CandidateSet& candidates);

private:
    const Catalog& train_;
    const CoPurchaseIndex& index_;
    const EmbeddingStore* store_;
    LlmClient& llm_;
    SummaryCache& cache_;
    PipelineOptions options_;
    std::string config_hash_;
};

/// Writes the metrics report: {"n_users", "hr", "ndcg", "config", "seed"},
/// metrics multiplied by 100 and rounded to one decimal. Byte-deterministic
/// for identical inputs.
void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       const std::map<std::string, std::string>& config, std::uint64_t seed);

/// The same JSON as a string (used for stdout echo and tests).
std::string report_json_string(const EvalReport& report,
                               const std::map<std::string, std::string>& config,
                               std::uint64_t seed);

}  // namespace itemrag
