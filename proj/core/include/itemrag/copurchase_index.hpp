#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "itemrag/catalog.hpp"

namespace itemrag {

/// Symmetric item-item co-purchase counts. c(i,j) is the number of distinct
/// users whose deduplicated purchase set contains both i and j. Each
/// unordered pair is stored once under its (min, max) key; self pairs are
/// never stored. Immutable after build; safe for concurrent readers.
class CoPurchaseIndex {
public:
    struct BuildOptions {
        /// Warn when the sum over users of |purchase set|^2 exceeds this.
        std::uint64_t pair_budget = 100'000'000;
    };

    CoPurchaseIndex() = default;

    static CoPurchaseIndex build(const Catalog& train, const BuildOptions& options);
    static CoPurchaseIndex build(const Catalog& train) { return build(train, BuildOptions{}); }

    /// Items co-purchased with i, sorted ascending. Empty for unknown or cold
    /// items. Never contains i.
    const std::vector<ItemId>& neighbors(const ItemId& i) const;

    /// Co-purchase count, 0 when the pair never co-occurs.
    /// Throws std::invalid_argument when i == j.
    std::uint32_t cofreq(const ItemId& i, const ItemId& j) const;

    std::uint64_t users_processed() const { return users_processed_; }
    std::size_t pair_count() const { return pair_count_; }

    /// All pairs as (i, j, count) with i < j, sorted lexicographically.
    std::vector<std::tuple<ItemId, ItemId, std::uint32_t>> sorted_pairs() const;

    /// FNV-1a hash of the sorted pair listing; identifies the index content.
    std::string content_hash() const;

    /// JSONL dump: a header line with the content hash, then one {i, j, c}
    /// line per pair with i < j. load() verifies the hash and throws
    /// IntegrityError on mismatch.
    void save(const std::filesystem::path& path) const;
    static CoPurchaseIndex load(const std::filesystem::path& path);

private:
    void rebuild_adjacency();

    // counts_[min(i,j)][max(i,j)] = c
    std::unordered_map<ItemId, std::unordered_map<ItemId, std::uint32_t>> counts_;
    std::unordered_map<ItemId, std::vector<ItemId>> adjacency_;
    std::uint64_t users_processed_ = 0;
    std::size_t pair_count_ = 0;
};

}  // namespace itemrag
