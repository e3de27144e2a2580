#include "itemrag/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "itemrag/errors.hpp"
#include "jsonl.hpp"
#include "warn.hpp"

namespace itemrag {

EmbeddingStore::EmbeddingStore(std::size_t dim, std::string model_tag,
                               std::vector<std::pair<ItemId, std::vector<double>>> vectors)
    : dim_(dim), model_tag_(std::move(model_tag)) {
    std::sort(vectors.begin(), vectors.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ids_.reserve(vectors.size());
    vectors_.reserve(vectors.size());
    norms_.reserve(vectors.size());
    for (auto& [id, vec] : vectors) {
        if (vec.size() != dim_) {
            throw IntegrityError("embedding for \"" + id + "\" has dimension " +
                                 std::to_string(vec.size()) + ", expected " +
                                 std::to_string(dim_));
        }
        double sq = 0.0;
        for (double x : vec) sq += x * x;
        if (sq == 0.0) throw IntegrityError("embedding for \"" + id + "\" is all zeros");
        if (!index_.emplace(id, ids_.size()).second) {
            throw IntegrityError("duplicate embedding for \"" + id + "\"");
        }
        ids_.push_back(std::move(id));
        vectors_.push_back(std::move(vec));
        norms_.push_back(std::sqrt(sq));
    }
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path,
                                    std::optional<std::size_t> expected_dim) {
    std::vector<std::pair<ItemId, std::vector<double>>> rows;
    std::unordered_map<ItemId, std::size_t> slot;
    std::size_t dim = expected_dim.value_or(0);
    std::string model_tag;

    jsonl::for_each_record(path, [&](std::size_t lineno, const jsonl::json& record) {
        if (!record.contains("item_id")) {
            // Optional header line.
            if (lineno <= 1 && record.contains("dim")) {
                const std::size_t header_dim = record.at("dim").get<std::size_t>();
                if (expected_dim && *expected_dim != header_dim) {
                    throw ParseError("embeddings: header dim " + std::to_string(header_dim) +
                                         " does not match expected " +
                                         std::to_string(*expected_dim),
                                     lineno);
                }
                dim = header_dim;
                model_tag = record.value("model_tag", "");
                return;
            }
            throw ParseError("embeddings: missing \"item_id\"", lineno);
        }
        const ItemId id = jsonl::require_string(record, "item_id", lineno, "embeddings");
        if (!record.contains("vector") || !record.at("vector").is_array()) {
            throw ParseError("embeddings: missing or non-array \"vector\"", lineno);
        }
        std::vector<double> vec;
        vec.reserve(record.at("vector").size());
        for (const auto& x : record.at("vector")) {
            if (!x.is_number()) throw ParseError("embeddings: non-numeric component", lineno);
            vec.push_back(x.get<double>());
        }
        if (dim == 0) dim = vec.size();
        if (vec.size() != dim) {
            throw ParseError("embeddings: item \"" + id + "\" has dimension " +
                                 std::to_string(vec.size()) + ", expected " + std::to_string(dim),
                             lineno);
        }
        auto [it, inserted] = slot.emplace(id, rows.size());
        if (inserted) {
            rows.emplace_back(id, std::move(vec));
        } else {
            detail::warn("embeddings: duplicate entry for \"" + id + "\", keeping the last one");
            rows[it->second].second = std::move(vec);
        }
    });

    return EmbeddingStore(dim, std::move(model_tag), std::move(rows));
}

std::size_t EmbeddingStore::row(const ItemId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw LookupError("no embedding for item \"" + id + "\"");
    return it->second;
}

double EmbeddingStore::cosine(const ItemId& i, const ItemId& j) const {
    const auto a = row(i);
    const auto b = row(j);
    double dot = 0.0;
    const auto& va = vectors_[a];
    const auto& vb = vectors_[b];
    for (std::size_t d = 0; d < dim_; ++d) dot += va[d] * vb[d];
    return std::clamp(dot / (norms_[a] * norms_[b]), -1.0, 1.0);
}

SimilarSet EmbeddingStore::top_k_similar(const ItemId& i, std::size_t k) const {
    const auto query_row = row(i);
    SimilarSet result{i, {}};
    if (k == 0 || ids_.size() < 2) return result;

    // (similarity, row) for every other item; rows are in id order already,
    // so tie-break by row index is tie-break by item id.
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(ids_.size() - 1);
    const auto& q = vectors_[query_row];
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        if (r == query_row) continue;
        double dot = 0.0;
        const auto& v = vectors_[r];
        for (std::size_t d = 0; d < dim_; ++d) dot += q[d] * v[d];
        scored.emplace_back(std::clamp(dot / (norms_[query_row] * norms_[r]), -1.0, 1.0), r);
    }

    const std::size_t take = std::min(k, scored.size());
    auto better = [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), better);

    result.members.reserve(take);
    for (std::size_t n = 0; n < take; ++n) {
        result.members.emplace_back(ids_[scored[n].second], scored[n].first);
    }
    return result;
}

std::vector<SimilarSet> EmbeddingStore::top_k_batch(std::span<const ItemId> queries,
                                                    std::size_t k, unsigned workers) const {
    std::vector<SimilarSet> results(queries.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) results[q] = top_k_similar(queries[q], k);
    };
    if (workers <= 1 || queries.size() < 2) {
        run_range(0, queries.size());
        return results;
    }
    const std::size_t n_threads = std::min<std::size_t>(workers, queries.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    std::exception_ptr first_error;
    std::mutex error_mu;
    const std::size_t chunk = (queries.size() + n_threads - 1) / n_threads;
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

}  // namespace itemrag
