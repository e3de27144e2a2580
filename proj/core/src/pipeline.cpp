#include "itemrag/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "itemrag/errors.hpp"
#include "jsonl.hpp"

namespace itemrag {

Pipeline::Pipeline(const Catalog& train, const CoPurchaseIndex& index,
                   const EmbeddingStore* store, LlmClient& llm, SummaryCache& cache,
                   PipelineOptions options)
    : train_(train),
      index_(index),
      store_(store),
      llm_(llm),
      cache_(cache),
      options_(std::move(options)) {
    options_.retrieval.validate();
    config_hash_ =
        make_config_hash(options_.retrieval, kSummaryTemplateVersion, options_.model_tag);
}

RetrievalResult Pipeline::retrieval_for(const ItemId& item) const {
    return retrieve_one(item, index_, store_, options_.retrieval);
}

CoPurchaseSummary Pipeline::summary_for(const ItemId& item) {
    return cache_.get_or_compute(item, config_hash_, [&] {
        const RetrievalResult retrieval = retrieval_for(item);
        std::vector<Item> retrieved;
        retrieved.reserve(retrieval.sampled.size());
        for (const auto& [id, _] : retrieval.sampled) retrieved.push_back(train_.item(id));
        CoPurchaseSummary summary =
            summarize(train_.item(item), retrieved, llm_, kSummaryTemplateVersion);
        summary.config_hash = config_hash_;
        return summary;
    });
}

AugmentedItem Pipeline::augmented(const ItemId& item) {
    if (!options_.augment) return augment(train_.item(item), std::nullopt);
    return augment(train_.item(item), summary_for(item));
}

void Pipeline::prefetch_summaries(std::span<const ItemId> items) {
    if (!options_.augment) return;
    std::vector<ItemId> distinct(items.begin(), items.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    const unsigned workers = options_.workers;
    if (workers <= 1 || distinct.size() < 2) {
        for (const auto& item : distinct) summary_for(item);
        return;
    }
    const std::size_t n_threads = std::min<std::size_t>(workers, distinct.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    std::exception_ptr first_error;
    std::mutex error_mu;
    const std::size_t chunk = (distinct.size() + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(distinct.size(), begin + chunk);
        threads.emplace_back([&, begin, end] {
            try {
                for (std::size_t idx = begin; idx < end; ++idx) summary_for(distinct[idx]);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

RankingTask Pipeline::make_task(const UserId& user, const CandidateSet& candidates) {
    RankingTask task;
    task.user = user;
    if (const auto* history = train_.history(user)) {
        const auto& sequence = history->sequence;
        const std::size_t cap = options_.recommender.history_cap;
        const std::size_t skip = sequence.size() > cap ? sequence.size() - cap : 0;
        task.history.reserve(sequence.size() - skip);
        for (std::size_t pos = skip; pos < sequence.size(); ++pos) {
            task.history.push_back(augmented(sequence[pos]));
        }
    }
    task.candidates.reserve(candidates.presented_order.size());
    for (const auto& id : candidates.presented_order) {
        task.candidates.push_back(augmented(id));
    }
    return task;
}

RankedList Pipeline::rank_user(const UserId& user, const CandidateSet& candidates) {
    return rank(make_task(user, candidates), llm_, options_.recommender);
}

namespace {

double rounded_x100(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.1f", value * 100.0);
    return std::strtod(buffer, nullptr);
}

}  // namespace

std::string report_json_string(const EvalReport& report,
                               const std::map<std::string, std::string>& config,
                               std::uint64_t seed) {
    jsonl::ordered_json out;
    out["n_users"] = report.n_users;
    jsonl::ordered_json hr;
    for (const auto& [k, value] : report.hr) hr[std::to_string(k)] = rounded_x100(value);
    out["hr"] = std::move(hr);
    jsonl::ordered_json ndcg;
    for (const auto& [k, value] : report.ndcg) ndcg[std::to_string(k)] = rounded_x100(value);
    out["ndcg"] = std::move(ndcg);
    jsonl::ordered_json cfg;
    for (const auto& [key, value] : config) cfg[key] = value;
    out["config"] = std::move(cfg);
    out["seed"] = seed;
    return out.dump(2) + "\n";
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       const std::map<std::string, std::string>& config, std::uint64_t seed) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << report_json_string(report, config, seed);
}

}  // namespace itemrag
