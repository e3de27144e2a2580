#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace itemrag {

using ItemId = std::string;
using UserId = std::string;

/// An item and its text description (typically the product title).
struct Item {
    ItemId id;
    std::string description;
};

/// One user's purchase sequence, ordered ascending by timestamp.
/// Repeat purchases stay as repeats; deduplication happens only when
/// co-purchase sets are formed.
struct PurchaseHistory {
    UserId user;
    std::vector<ItemId> sequence;
};

/// Immutable view of the dataset: item descriptions plus per-user purchase
/// sequences. Every item referenced by a history must exist. Safe for
/// concurrent reads once constructed.
class Catalog {
public:
    Catalog() = default;

    /// Throws IntegrityError on duplicate ids or on a history referencing an
    /// unknown item.
    Catalog(std::vector<Item> items, std::vector<PurchaseHistory> histories);

    bool has_item(const ItemId& id) const { return items_.count(id) != 0; }
    /// Throws LookupError for unknown ids.
    const Item& item(const ItemId& id) const;

    /// Returns nullptr when the user has no history.
    const PurchaseHistory* history(const UserId& user) const;

    /// Item ids sorted ascending.
    const std::vector<ItemId>& item_ids() const { return item_ids_; }
    /// User ids sorted ascending.
    const std::vector<UserId>& user_ids() const { return user_ids_; }

    std::size_t item_count() const { return items_.size(); }
    std::size_t user_count() const { return histories_.size(); }
    std::size_t interaction_count() const;

private:
    std::unordered_map<ItemId, Item> items_;
    std::unordered_map<UserId, PurchaseHistory> histories_;
    std::vector<ItemId> item_ids_;
    std::vector<UserId> user_ids_;
};

/// Leave-one-out split: per-user histories truncated by one, with the
/// held-out last item as the prediction target. Users with a single
/// interaction are dropped entirely.
struct EvalSplit {
    Catalog train;
    std::map<UserId, ItemId> targets;
};

struct LoadOptions {
    /// Drop users with fewer than this many interactions. 0 disables the
    /// filter (the matching preprocessing threshold is not published).
    std::size_t min_user_interactions = 0;
};

/// Loads the interactions and items JSONL files described in the README.
/// Sequences are ordered by (timestamp, input line order, item id).
/// Throws ParseError with the offending line number on malformed input and
/// IntegrityError when an interaction references an unknown item.
Catalog load_catalog(const std::filesystem::path& interactions_path,
                     const std::filesystem::path& items_path,
                     const LoadOptions& options = LoadOptions{});

/// Writes a catalog back out in the loader's format, with sequence positions
/// as timestamps. load_catalog(save_catalog(c)) reproduces c exactly.
void save_catalog(const Catalog& catalog,
                  const std::filesystem::path& interactions_path,
                  const std::filesystem::path& items_path);

EvalSplit leave_one_out(const Catalog& catalog);

}  // namespace itemrag
