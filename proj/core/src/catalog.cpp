#include "itemrag/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "itemrag/errors.hpp"
#include "jsonl.hpp"
#include "warn.hpp"

namespace itemrag {
namespace {

std::string trimmed(const std::string& text) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto begin = std::find_if_not(text.begin(), text.end(), is_space);
    auto end = std::find_if_not(text.rbegin(), text.rend(), is_space).base();
    return begin < end ? std::string(begin, end) : std::string();
}

}  // namespace

Catalog::Catalog(std::vector<Item> items, std::vector<PurchaseHistory> histories) {
    items_.reserve(items.size());
    for (auto& item : items) {
        if (item.id.empty()) throw IntegrityError("item with empty id");
        const ItemId id = item.id;
        if (!items_.emplace(id, std::move(item)).second) {
            throw IntegrityError("duplicate item id \"" + id + "\"");
        }
    }
    histories_.reserve(histories.size());
    for (auto& history : histories) {
        if (history.user.empty()) throw IntegrityError("history with empty user id");
        for (const auto& id : history.sequence) {
            if (items_.count(id) == 0) {
                throw IntegrityError("history of user \"" + history.user +
                                     "\" references unknown item \"" + id + "\"");
            }
        }
        const UserId user = history.user;
        if (!histories_.emplace(user, std::move(history)).second) {
            throw IntegrityError("duplicate history for user \"" + user + "\"");
        }
    }
    item_ids_.reserve(items_.size());
    for (const auto& [id, _] : items_) item_ids_.push_back(id);
    std::sort(item_ids_.begin(), item_ids_.end());
    user_ids_.reserve(histories_.size());
    for (const auto& [id, _] : histories_) user_ids_.push_back(id);
    std::sort(user_ids_.begin(), user_ids_.end());
}

const Item& Catalog::item(const ItemId& id) const {
    auto it = items_.find(id);
    if (it == items_.end()) throw LookupError("unknown item \"" + id + "\"");
    return it->second;
}

const PurchaseHistory* Catalog::history(const UserId& user) const {
    auto it = histories_.find(user);
    return it == histories_.end() ? nullptr : &it->second;
}

std::size_t Catalog::interaction_count() const {
    std::size_t n = 0;
    for (const auto& [_, h] : histories_) n += h.sequence.size();
    return n;
}

Catalog load_catalog(const std::filesystem::path& interactions_path,
                     const std::filesystem::path& items_path, const LoadOptions& options) {
    std::vector<Item> items;
    std::unordered_map<ItemId, std::size_t> item_slot;
    jsonl::for_each_record(items_path, [&](std::size_t lineno, const jsonl::json& record) {
        Item item;
        item.id = jsonl::require_string(record, "item_id", lineno, "items");
        item.description = jsonl::require_string(record, "description", lineno, "items");
        if (item.id.empty()) throw ParseError("items: empty \"item_id\"", lineno);
        if (trimmed(item.description).empty()) {
            throw ParseError("items: blank description for item \"" + item.id + "\"", lineno);
        }
        auto [it, inserted] = item_slot.emplace(item.id, items.size());
        if (inserted) {
            items.push_back(std::move(item));
        } else {
            detail::warn("items: duplicate entry for \"" + item.id + "\", keeping the last one");
            items[it->second] = std::move(item);
        }
    });

    struct Interaction {
        UserId user;
        ItemId item;
        std::int64_t timestamp;
        std::size_t lineno;
    };
    std::vector<Interaction> interactions;
    jsonl::for_each_record(interactions_path, [&](std::size_t lineno, const jsonl::json& record) {
        Interaction row;
        row.user = jsonl::require_string(record, "user_id", lineno, "interactions");
        row.item = jsonl::require_string(record, "item_id", lineno, "interactions");
        row.timestamp = jsonl::require_int(record, "timestamp", lineno, "interactions");
        row.lineno = lineno;
        if (row.user.empty()) throw ParseError("interactions: empty \"user_id\"", lineno);
        if (row.item.empty()) throw ParseError("interactions: empty \"item_id\"", lineno);
        if (item_slot.count(row.item) == 0) {
            throw IntegrityError("interactions line " + std::to_string(lineno) +
                                 " references unknown item \"" + row.item + "\"");
        }
        interactions.push_back(std::move(row));
    });

    // Timestamp ties break by input line order, then by item id.
    std::sort(interactions.begin(), interactions.end(), [](const auto& a, const auto& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        if (a.lineno != b.lineno) return a.lineno < b.lineno;
        return a.item < b.item;
    });

    std::unordered_map<UserId, std::size_t> user_slot;
    std::vector<PurchaseHistory> histories;
    for (auto& row : interactions) {
        auto [it, inserted] = user_slot.emplace(row.user, histories.size());
        if (inserted) histories.push_back(PurchaseHistory{row.user, {}});
        histories[it->second].sequence.push_back(std::move(row.item));
    }

    if (options.min_user_interactions > 1) {
        std::erase_if(histories, [&](const PurchaseHistory& h) {
            return h.sequence.size() < options.min_user_interactions;
        });
    }

    return Catalog(std::move(items), std::move(histories));
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& interactions_path,
                  const std::filesystem::path& items_path) {
    std::ofstream items_out(items_path, std::ios::trunc);
    if (!items_out) throw Error("cannot write " + items_path.string());
    for (const auto& id : catalog.item_ids()) {
        jsonl::ordered_json record;
        record["item_id"] = id;
        record["description"] = catalog.item(id).description;
        items_out << record.dump() << '\n';
    }

    std::ofstream inter_out(interactions_path, std::ios::trunc);
    if (!inter_out) throw Error("cannot write " + interactions_path.string());
    for (const auto& user : catalog.user_ids()) {
        const auto& sequence = catalog.history(user)->sequence;
        for (std::size_t pos = 0; pos < sequence.size(); ++pos) {
            jsonl::ordered_json record;
            record["user_id"] = user;
            record["item_id"] = sequence[pos];
            record["timestamp"] = static_cast<std::int64_t>(pos);
            inter_out << record.dump() << '\n';
        }
    }
}

EvalSplit leave_one_out(const Catalog& catalog) {
    std::vector<Item> items;
    items.reserve(catalog.item_count());
    for (const auto& id : catalog.item_ids()) items.push_back(catalog.item(id));

    EvalSplit split;
    std::vector<PurchaseHistory> train_histories;
    for (const auto& user : catalog.user_ids()) {
        const auto& sequence = catalog.history(user)->sequence;
        if (sequence.size() < 2) continue;  // cannot form an input history plus a target
        PurchaseHistory truncated{user, {sequence.begin(), sequence.end() - 1}};
        train_histories.push_back(std::move(truncated));
        split.targets.emplace(user, sequence.back());
    }
    split.train = Catalog(std::move(items), std::move(train_histories));
    return split;
}

}  // namespace itemrag
