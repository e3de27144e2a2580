#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "itemrag/catalog.hpp"

namespace itemrag {

/// Top-K text-similar items for a query item, scores non-increasing, ties
/// broken by item id ascending. The query itself is never a member.
struct SimilarSet {
    ItemId query;
    std::vector<std::pair<ItemId, double>> members;
};

/// Per-item dense text embeddings with exact cosine top-K search. Vectors are
/// produced offline (the engine bundles no encoder) and loaded from JSONL.
/// Immutable after load; concurrent queries are safe.
class EmbeddingStore {
public:
    EmbeddingStore() = default;

    /// Validating constructor for in-memory stores. Throws IntegrityError on
    /// duplicate ids, inconsistent dimensions, or an all-zero vector.
    EmbeddingStore(std::size_t dim, std::string model_tag,
                   std::vector<std::pair<ItemId, std::vector<double>>> vectors);

    /// Loads `{"item_id", "vector"}` JSONL with an optional leading
    /// `{"dim", "model_tag"}` header. Duplicate item lines keep the last one
    /// (with a warning). Dimension mismatches and zero vectors are errors.
    static EmbeddingStore load(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::string& model_tag() const { return model_tag_; }
    bool contains(const ItemId& id) const { return index_.count(id) != 0; }
    /// Item ids sorted ascending.
    const std::vector<ItemId>& item_ids() const { return ids_; }

    /// Cosine similarity in [-1, 1]. Throws LookupError for unknown items.
    double cosine(const ItemId& i, const ItemId& j) const;

    /// The K most cosine-similar items to i over the whole store (exact
    /// linear scan, no approximation). |members| = min(K, size() - 1).
    SimilarSet top_k_similar(const ItemId& i, std::size_t k) const;

    /// Batch top-K; results align with `queries`. With workers > 1 the scan
    /// is parallelized, output is identical to the sequential order.
    std::vector<SimilarSet> top_k_batch(std::span<const ItemId> queries, std::size_t k,
                                        unsigned workers = 1) const;

private:
    std::size_t row(const ItemId& id) const;

    std::size_t dim_ = 0;
    std::string model_tag_;
    std::vector<ItemId> ids_;  // sorted; row-aligned with vectors_ and norms_
    std::vector<std::vector<double>> vectors_;
    std::vector<double> norms_;
    std::unordered_map<ItemId, std::size_t> index_;
};

}  // namespace itemrag
