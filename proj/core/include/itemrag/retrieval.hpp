#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "itemrag/catalog.hpp"
#include "itemrag/copurchase_index.hpp"
#include "itemrag/embedding_store.hpp"
#include "itemrag/rng.hpp"

namespace itemrag {

struct RetrievalConfig {
    int similar_k = 5;    // similar items consulted per query item
    int sample_size = 50; // items retained in the final retrieval set
    bool use_sim_items = true;      // off = pool restricted to direct co-purchases
    bool use_cofreq_weights = true; // off = uniform sampling
    std::uint64_t rng_seed = 0;

    /// Throws ConfigError when similar_k < 0 or sample_size < 1.
    void validate() const;

    /// Stable textual form used for config hashing.
    std::string canonical_string() const;
};

/// Sampled relevant items for one query item, in draw order, each with the
/// weight used to draw it (1.0 under uniform sampling).
struct RetrievalResult {
    ItemId query;
    std::size_t pool_size = 0;
    std::vector<std::pair<ItemId, double>> sampled;
    std::uint64_t seed = 0;
};

/// The retrieval pool for a query item: items co-purchased with it, plus
/// items co-purchased with its text-similar items (skipped when
/// use_sim_items is off). The query itself is excluded. Sorted ascending.
std::vector<ItemId> build_pool(const ItemId& query, const CoPurchaseIndex& index,
                               const SimilarSet& similar, const RetrievalConfig& config);

/// Sampling weight of candidate j for query i: the direct co-purchase count
/// plus the mean co-purchase count between j and i's similar items. The mean
/// term is 0 when there are no similar items.
double sampling_weight(const ItemId& query, const ItemId& candidate,
                       const CoPurchaseIndex& index, const SimilarSet& similar);

/// Weights for every pool member, keyed by item.
std::unordered_map<ItemId, double> pool_weights(const ItemId& query,
                                                std::span<const ItemId> pool,
                                                const CoPurchaseIndex& index,
                                                const SimilarSet& similar);

/// Draws min(sample_size, |pool|) distinct items. Pools no larger than the
/// sample size are returned whole (sorted, no randomness consumed); larger
/// pools are sampled without replacement proportionally to their weights,
/// renormalizing after each draw. Uniform draws when use_cofreq_weights is
/// off. Same inputs and generator state give bit-identical results.
RetrievalResult sample_retrieval(const ItemId& query, std::span<const ItemId> pool,
                                 const std::unordered_map<ItemId, double>& weights,
                                 const RetrievalConfig& config, SplitMix64& rng);

/// Full retrieval for one query item: top-K similar lookup, pool, weights,
/// sample, with the generator stream derived from (config seed, item id).
/// `store` may be null when use_sim_items is off or no embeddings exist.
RetrievalResult retrieve_one(const ItemId& query, const CoPurchaseIndex& index,
                             const EmbeddingStore* store, const RetrievalConfig& config);

/// Batch retrieval; results align with `queries`. Deterministic for any
/// worker count because every item has its own derived stream.
std::vector<RetrievalResult> retrieve_for_items(std::span<const ItemId> queries,
                                                const CoPurchaseIndex& index,
                                                const EmbeddingStore* store,
                                                const RetrievalConfig& config,
                                                unsigned workers = 1);

/// One JSONL line per result: {"query", "pool_size", "sampled", "seed",
/// "config_hash"}.
void write_retrieval_dump(const std::filesystem::path& path,
                          std::span<const RetrievalResult> results,
                          const std::string& config_hash);

}  // namespace itemrag
