#include "itemrag/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "itemrag/errors.hpp"
#include "jsonl.hpp"

namespace itemrag {

void RetrievalConfig::validate() const {
    if (similar_k < 0) throw ConfigError("retrieval: similar_k must be >= 0");
    if (sample_size < 1) throw ConfigError("retrieval: sample_size must be >= 1");
}

std::string RetrievalConfig::canonical_string() const {
    return "k=" + std::to_string(similar_k) + ";n=" + std::to_string(sample_size) +
           ";sim=" + std::to_string(use_sim_items ? 1 : 0) +
           ";cofreq=" + std::to_string(use_cofreq_weights ? 1 : 0) +
           ";seed=" + std::to_string(rng_seed);
}

std::vector<ItemId> build_pool(const ItemId& query, const CoPurchaseIndex& index,
                               const SimilarSet& similar, const RetrievalConfig& config) {
    std::vector<ItemId> pool = index.neighbors(query);
    if (config.use_sim_items) {
        for (const auto& [sim_item, _] : similar.members) {
            const auto& reached = index.neighbors(sim_item);
            pool.insert(pool.end(), reached.begin(), reached.end());
        }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    if (auto self = std::lower_bound(pool.begin(), pool.end(), query);
        self != pool.end() && *self == query) {
        pool.erase(self);
    }
    return pool;
}

double sampling_weight(const ItemId& query, const ItemId& candidate,
                       const CoPurchaseIndex& index, const SimilarSet& similar) {
    double weight = static_cast<double>(index.cofreq(query, candidate));
    if (!similar.members.empty()) {
        double sum = 0.0;
        for (const auto& [sim_item, _] : similar.members) {
            if (sim_item == candidate) continue;  // self co-purchase is undefined
            sum += static_cast<double>(index.cofreq(sim_item, candidate));
        }
        weight += sum / static_cast<double>(similar.members.size());
    }
    return weight;
}

std::unordered_map<ItemId, double> pool_weights(const ItemId& query,
                                                std::span<const ItemId> pool,
                                                const CoPurchaseIndex& index,
                                                const SimilarSet& similar) {
    std::unordered_map<ItemId, double> weights;
    weights.reserve(pool.size());
    for (const auto& candidate : pool) {
        weights.emplace(candidate, sampling_weight(query, candidate, index, similar));
    }
    return weights;
}

RetrievalResult sample_retrieval(const ItemId& query, std::span<const ItemId> pool,
                                 const std::unordered_map<ItemId, double>& weights,
                                 const RetrievalConfig& config, SplitMix64& rng) {
    config.validate();
    RetrievalResult result{query, pool.size(), {}, config.rng_seed};
    if (pool.empty()) return result;  // caller falls back to the bare description

    auto weight_of = [&](const ItemId& id) -> double {
        if (!config.use_cofreq_weights) return 1.0;
        auto it = weights.find(id);
        if (it == weights.end() || it->second <= 0.0) {
            throw std::invalid_argument("sample_retrieval: pool member \"" + id +
                                        "\" lacks a positive weight");
        }
        return it->second;
    };

    const auto n = static_cast<std::size_t>(config.sample_size);
    if (pool.size() <= n) {
        // Nothing to sample; the whole pool is the retrieval set.
        result.sampled.reserve(pool.size());
        for (const auto& id : pool) result.sampled.emplace_back(id, weight_of(id));
        return result;
    }

    std::vector<std::pair<ItemId, double>> remaining;
    remaining.reserve(pool.size());
    double total = 0.0;
    for (const auto& id : pool) {
        const double w = weight_of(id);
        remaining.emplace_back(id, w);
        total += w;
    }

    result.sampled.reserve(n);
    for (std::size_t draw = 0; draw < n; ++draw) {
        const double r = rng.next_double() * total;
        double acc = 0.0;
        std::size_t pick = remaining.size() - 1;  // guards against roundoff at the top end
        for (std::size_t idx = 0; idx < remaining.size(); ++idx) {
            acc += remaining[idx].second;
            if (r < acc) {
                pick = idx;
                break;
            }
        }
        result.sampled.push_back(remaining[pick]);
        total -= remaining[pick].second;
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return result;
}

RetrievalResult retrieve_one(const ItemId& query, const CoPurchaseIndex& index,
                             const EmbeddingStore* store, const RetrievalConfig& config) {
    config.validate();
    SimilarSet similar{query, {}};
    if (config.use_sim_items && config.similar_k > 0 && store != nullptr &&
        store->contains(query)) {
        similar = store->top_k_similar(query, static_cast<std::size_t>(config.similar_k));
    }
    const auto pool = build_pool(query, index, similar, config);
    const auto weights = config.use_cofreq_weights
                             ? pool_weights(query, pool, index, similar)
                             : std::unordered_map<ItemId, double>{};
    auto rng = derive_stream(config.rng_seed, query);
    return sample_retrieval(query, pool, weights, config, rng);
}

std::vector<RetrievalResult> retrieve_for_items(std::span<const ItemId> queries,
                                                const CoPurchaseIndex& index,
                                                const EmbeddingStore* store,
                                                const RetrievalConfig& config,
                                                unsigned workers) {
    std::vector<RetrievalResult> results(queries.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            results[q] = retrieve_one(queries[q], index, store, config);
        }
    };
    if (workers <= 1 || queries.size() < 2) {
        run_range(0, queries.size());
        return results;
    }
    const std::size_t n_threads = std::min<std::size_t>(workers, queries.size());
    const std::size_t chunk = (queries.size() + n_threads - 1) / n_threads;
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    std::exception_ptr first_error;
    std::mutex error_mu;
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(queries.size(), begin + chunk);
        threads.emplace_back([&, begin, end] {
            try {
                run_range(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

void write_retrieval_dump(const std::filesystem::path& path,
                          std::span<const RetrievalResult> results,
                          const std::string& config_hash) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& result : results) {
        jsonl::ordered_json record;
        record["query"] = result.query;
        record["pool_size"] = result.pool_size;
        auto sampled = jsonl::ordered_json::array();
        for (const auto& [item, w] : result.sampled) {
            sampled.push_back({{"item", item}, {"w", w}});
        }
        record["sampled"] = std::move(sampled);
        record["seed"] = result.seed;
        record["config_hash"] = config_hash;
        out << record.dump() << '\n';
    }
}

}  // namespace itemrag
