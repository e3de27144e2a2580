#include "itemrag/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "itemrag/errors.hpp"
#include "itemrag/rng.hpp"
#include "warn.hpp"

namespace itemrag {

CandidateSet sample_candidates(const Catalog& train, const std::map<UserId, ItemId>& targets,
                               const UserId& user, std::uint64_t seed) {
    auto target = targets.find(user);
    if (target == targets.end()) {
        throw ProtocolError("candidates: user \"" + user + "\" has no target");
    }
    CandidateSet set;
    set.user = user;
    set.ground_truth = target->second;

    std::unordered_set<ItemId> excluded;
    excluded.insert(set.ground_truth);
    if (const auto* history = train.history(user)) {
        excluded.insert(history->sequence.begin(), history->sequence.end());
    }

    std::vector<std::size_t> eligible;
    const auto& universe = train.item_ids();
    eligible.reserve(universe.size());
    for (std::size_t idx = 0; idx < universe.size(); ++idx) {
        if (excluded.count(universe[idx]) == 0) eligible.push_back(idx);
    }
    const std::size_t needed = kCandidateCount - 1;
    if (eligible.size() < needed) {
        throw ProtocolError("candidates: only " + std::to_string(eligible.size()) +
                            " eligible negatives for user \"" + user + "\", need " +
                            std::to_string(needed));
    }

    auto rng = derive_stream(seed, "candidates\x1f" + user);
    // Partial Fisher-Yates: the first `needed` slots become the draw.
    for (std::size_t k = 0; k < needed; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.next_below(eligible.size() - k));
        std::swap(eligible[k], eligible[j]);
        set.negatives.push_back(universe[eligible[k]]);
    }

    set.presented_order.reserve(kCandidateCount);
    set.presented_order.push_back(set.ground_truth);
    set.presented_order.insert(set.presented_order.end(), set.negatives.begin(),
                               set.negatives.end());
    shuffle(set.presented_order, rng);
    return set;
}

int hit_ratio_at_k(int gt_rank, int k) { return gt_rank <= k ? 1 : 0; }

double ndcg_at_k(int gt_rank, int k) {
    if (gt_rank > k) return 0.0;
    return 1.0 / std::log2(static_cast<double>(gt_rank) + 1.0);
}

EvalReport evaluate(const Catalog& train, const std::map<UserId, ItemId>& targets,
                    const RankingFn& pipeline, const std::vector<UserId>& user_sample,
                    std::uint64_t seed, unsigned workers) {
    std::vector<UserId> users = user_sample;
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());

    std::vector<int> ranks(users.size(), kMissRank);
    std::mutex warn_mu;
    auto score_user = [&](std::size_t idx) {
        const auto& user = users[idx];
        try {
            const CandidateSet candidates = sample_candidates(train, targets, user, seed);
            const RankedList ranked = pipeline(user, candidates);
            auto pos = std::find(ranked.order.begin(), ranked.order.end(),
                                 candidates.ground_truth);
            ranks[idx] = pos == ranked.order.end()
                             ? kMissRank
                             : static_cast<int>(pos - ranked.order.begin()) + 1;
        } catch (const std::exception& ex) {
            std::lock_guard lock(warn_mu);
            detail::warn("eval: user \"" + user + "\" scored as miss: " + ex.what());
        }
    };

    if (workers <= 1 || users.size() < 2) {
        for (std::size_t idx = 0; idx < users.size(); ++idx) score_user(idx);
    } else {
        const std::size_t n_threads = std::min<std::size_t>(workers, users.size());
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        const std::size_t chunk = (users.size() + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(users.size(), begin + chunk);
            threads.emplace_back([&, begin, end] {
                for (std::size_t idx = begin; idx < end; ++idx) score_user(idx);
            });
        }
        for (auto& t : threads) t.join();
    }

    EvalReport report;
    report.n_users = users.size();
    report.per_user.reserve(users.size());
    for (std::size_t idx = 0; idx < users.size(); ++idx) {
        report.per_user.emplace_back(users[idx], ranks[idx]);
        if (ranks[idx] >= kMissRank) ++report.failures;
    }

    // Deterministic fold: users are already sorted.
    for (int k : {1, 3, 5}) {
        double sum = 0.0;
        for (const auto& [_, rank] : report.per_user) sum += hit_ratio_at_k(rank, k);
        report.hr[k] = users.empty() ? 0.0 : sum / static_cast<double>(users.size());
    }
    for (int k : {3, 5}) {
        double sum = 0.0;
        for (const auto& [_, rank] : report.per_user) sum += ndcg_at_k(rank, k);
        report.ndcg[k] = users.empty() ? 0.0 : sum / static_cast<double>(users.size());
    }
    return report;
}

std::vector<UserId> sample_users(const std::map<UserId, ItemId>& targets, std::size_t n,
                                 std::uint64_t seed) {
    std::vector<UserId> all;
    all.reserve(targets.size());
    for (const auto& [user, _] : targets) all.push_back(user);
    if (n >= all.size()) return all;

    auto rng = derive_stream(seed, "user-sample");
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.next_below(all.size() - k));
        std::swap(all[k], all[j]);
    }
    all.resize(n);
    std::sort(all.begin(), all.end());
    return all;
}

ColdStartSplit make_cold_start(const EvalSplit& split) {
    std::unordered_set<ItemId> target_items;
    for (const auto& [_, item] : split.targets) target_items.insert(item);

    std::vector<Item> items;
    items.reserve(split.train.item_count());
    for (const auto& id : split.train.item_ids()) items.push_back(split.train.item(id));

    std::vector<PurchaseHistory> histories;
    for (const auto& user : split.train.user_ids()) {
        PurchaseHistory scrubbed{user, {}};
        for (const auto& id : split.train.history(user)->sequence) {
            if (target_items.count(id) == 0) scrubbed.sequence.push_back(id);
        }
        if (!scrubbed.sequence.empty()) histories.push_back(std::move(scrubbed));
    }

    ColdStartSplit cold;
    cold.train = Catalog(std::move(items), std::move(histories));
    cold.targets = split.targets;
    return cold;
}

}  // namespace itemrag
