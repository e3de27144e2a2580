#include "itemrag/copurchase_index.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "itemrag/errors.hpp"
#include "itemrag/rng.hpp"
#include "jsonl.hpp"
#include "warn.hpp"

namespace itemrag {
namespace {

constexpr const char* kFormatTag = "itemrag-copurchase-v1";

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

}  // namespace

CoPurchaseIndex CoPurchaseIndex::build(const Catalog& train, const BuildOptions& options) {
    CoPurchaseIndex index;

    std::uint64_t pair_work = 0;
    for (const auto& user : train.user_ids()) {
        const auto n = train.history(user)->sequence.size();
        pair_work += static_cast<std::uint64_t>(n) * n;
    }
    if (pair_work > options.pair_budget) {
        detail::warn("co-purchase build: pair work " + std::to_string(pair_work) +
                     " exceeds budget " + std::to_string(options.pair_budget));
    }

    for (const auto& user : train.user_ids()) {
        // M(u): the deduplicated purchase set, sorted so pairs come out (min, max).
        std::vector<ItemId> purchase_set = train.history(user)->sequence;
        std::sort(purchase_set.begin(), purchase_set.end());
        purchase_set.erase(std::unique(purchase_set.begin(), purchase_set.end()),
                           purchase_set.end());
        for (std::size_t a = 0; a + 1 < purchase_set.size(); ++a) {
            auto& row = index.counts_[purchase_set[a]];
            for (std::size_t b = a + 1; b < purchase_set.size(); ++b) {
                ++row[purchase_set[b]];
            }
        }
        ++index.users_processed_;
    }

    index.rebuild_adjacency();
    return index;
}

void CoPurchaseIndex::rebuild_adjacency() {
    adjacency_.clear();
    pair_count_ = 0;
    for (const auto& [i, row] : counts_) {
        for (const auto& [j, _] : row) {
            adjacency_[i].push_back(j);
            adjacency_[j].push_back(i);
            ++pair_count_;
        }
    }
    for (auto& [_, ids] : adjacency_) std::sort(ids.begin(), ids.end());
}

const std::vector<ItemId>& CoPurchaseIndex::neighbors(const ItemId& i) const {
    static const std::vector<ItemId> empty;
    auto it = adjacency_.find(i);
    return it == adjacency_.end() ? empty : it->second;
}

std::uint32_t CoPurchaseIndex::cofreq(const ItemId& i, const ItemId& j) const {
    if (i == j) throw std::invalid_argument("cofreq: self co-purchase is undefined");
    const ItemId& lo = i < j ? i : j;
    const ItemId& hi = i < j ? j : i;
    auto row = counts_.find(lo);
    if (row == counts_.end()) return 0;
    auto cell = row->second.find(hi);
    return cell == row->second.end() ? 0 : cell->second;
}

std::vector<std::tuple<ItemId, ItemId, std::uint32_t>> CoPurchaseIndex::sorted_pairs() const {
    std::vector<std::tuple<ItemId, ItemId, std::uint32_t>> pairs;
    pairs.reserve(pair_count_);
    for (const auto& [i, row] : counts_) {
        for (const auto& [j, c] : row) pairs.emplace_back(i, j, c);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::string CoPurchaseIndex::content_hash() const {
    std::uint64_t h = fnv1a64(kFormatTag);
    for (const auto& [i, j, c] : sorted_pairs()) {
        h ^= fnv1a64(i);
        h *= 0x100000001B3ull;
        h ^= fnv1a64(j);
        h *= 0x100000001B3ull;
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return hex64(h);
}

void CoPurchaseIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    jsonl::ordered_json header;
    header["format"] = kFormatTag;
    header["content_hash"] = content_hash();
    header["users_processed"] = users_processed_;
    header["pairs"] = pair_count_;
    out << header.dump() << '\n';
    for (const auto& [i, j, c] : sorted_pairs()) {
        jsonl::ordered_json record;
        record["i"] = i;
        record["j"] = j;
        record["c"] = c;
        out << record.dump() << '\n';
    }
}

CoPurchaseIndex CoPurchaseIndex::load(const std::filesystem::path& path) {
    CoPurchaseIndex index;
    std::string expected_hash;
    bool saw_header = false;
    jsonl::for_each_record(path, [&](std::size_t lineno, const jsonl::json& record) {
        if (!saw_header) {
            if (record.value("format", "") != kFormatTag) {
                throw ParseError(path.string() + ": missing or unknown index header", lineno);
            }
            expected_hash = record.value("content_hash", "");
            index.users_processed_ =
                record.value("users_processed", static_cast<std::uint64_t>(0));
            saw_header = true;
            return;
        }
        const ItemId i = jsonl::require_string(record, "i", lineno, "index");
        const ItemId j = jsonl::require_string(record, "j", lineno, "index");
        const auto c = jsonl::require_int(record, "c", lineno, "index");
        if (!(i < j)) throw ParseError("index: pair not in canonical (min, max) order", lineno);
        if (c < 1) throw ParseError("index: non-positive count", lineno);
        index.counts_[i][j] = static_cast<std::uint32_t>(c);
    });
    if (!saw_header) throw IntegrityError(path.string() + ": empty index file");
    index.rebuild_adjacency();
    if (!expected_hash.empty() && index.content_hash() != expected_hash) {
        throw IntegrityError(path.string() + ": content hash mismatch (expected " +
                             expected_hash + ", got " + index.content_hash() + ")");
    }
    return index;
}

}  // namespace itemrag
