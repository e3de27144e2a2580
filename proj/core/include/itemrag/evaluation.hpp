#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "itemrag/catalog.hpp"
#include "itemrag/recommender.hpp"

namespace itemrag {

/// Candidates in the 10-way ranking protocol: 1 ground truth + 9 negatives.
inline constexpr std::size_t kCandidateCount = 10;

/// The rank assigned when a user's ranking cannot be scored (parse failure
/// or pipeline error): a miss at every cutoff.
inline constexpr int kMissRank = static_cast<int>(kCandidateCount) + 1;

struct CandidateSet {
    UserId user;
    ItemId ground_truth;
    std::vector<ItemId> negatives;        // distinct, exclude gt and the user's history
    std::vector<ItemId> presented_order;  // shuffled permutation of {gt} + negatives
};

struct EvalReport {
    std::size_t n_users = 0;
    std::map<int, double> hr;                      // K in {1, 3, 5}
    std::map<int, double> ndcg;                    // K in {3, 5}
    std::vector<std::pair<UserId, int>> per_user;  // (user, gt rank), sorted by user
    std::size_t failures = 0;                      // users scored as kMissRank
};

/// Cold-start variant: every target item is scrubbed from the training
/// histories, so any index built from `train` has no co-purchases for it.
struct ColdStartSplit {
    Catalog train;
    std::map<UserId, ItemId> targets;
};

/// Draws the user's candidate set: 9 negatives uniformly from the item
/// universe minus the ground truth and the user's training history, then a
/// shuffled presentation order. Deterministic per (seed, user). Throws
/// ProtocolError when fewer than 9 eligible negatives exist.
CandidateSet sample_candidates(const Catalog& train, const std::map<UserId, ItemId>& targets,
                               const UserId& user, std::uint64_t seed);

/// 1 if the ground truth landed within the top K, else 0.
int hit_ratio_at_k(int gt_rank, int k);

/// Single-relevant-item NDCG: 1/log2(rank+1) within the cutoff, else 0.
double ndcg_at_k(int gt_rank, int k);

using RankingFn = std::function<RankedList(const UserId&, const CandidateSet&)>;

/// Runs the protocol over `user_sample`: candidate sets, one pipeline call
/// per user, metrics as unweighted means. Pipeline failures score the user
/// at kMissRank and the run continues. Users are processed sorted (with
/// `workers` > 1 the calls run concurrently; aggregation order is fixed).
EvalReport evaluate(const Catalog& train, const std::map<UserId, ItemId>& targets,
                    const RankingFn& pipeline, const std::vector<UserId>& user_sample,
                    std::uint64_t seed, unsigned workers = 1);

/// Uniform sample of n target users (all of them when n >= |targets|),
/// returned sorted. Deterministic per seed.
std::vector<UserId> sample_users(const std::map<UserId, ItemId>& targets, std::size_t n,
                                 std::uint64_t seed);

ColdStartSplit make_cold_start(const EvalSplit& split);

}  // namespace itemrag
