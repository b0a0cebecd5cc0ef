#include "synapse/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "synapse/errors.hpp"
#include "synapse/util.hpp"

namespace synapse {

bool EmbeddingVector::is_zero() const {
    for (const double v : values) {
        if (v != 0.0) return false;
    }
    return true;
}

EmbeddingVector embed(const std::string& text, std::size_t dim) {
    EmbeddingVector vec;
    vec.values.assign(dim, 0.0);
    for (const auto& token : alnum_tokens(text)) {
        const std::size_t bucket = static_cast<std::size_t>(fnv1a64(token) % dim);
        const double sign = (fnv1a64(token, kFnvOffsetAlt) & 1u) ? 1.0 : -1.0;
        vec.values[bucket] += sign;
    }
    double norm_sq = 0.0;
    for (const double v : vec.values) norm_sq += v * v;
    if (norm_sq > 0.0) {
        const double norm = std::sqrt(norm_sq);
        for (double& v : vec.values) v /= norm;
    }
    return vec;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw DimensionMismatch("cosine on dimensions " + std::to_string(a.dimension()) +
                                " vs " + std::to_string(b.dimension()));
    }
    if (a.is_zero() || b.is_zero()) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot;
}

double l2_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw DimensionMismatch("l2_distance on mismatched dimensions");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

EmbeddingIndex build_index(const Compendium& c, std::size_t dim) {
    EmbeddingIndex index;
    index.dimension = dim;
    index.entries.resize(c.scenarios.size());
    const std::int64_t n = static_cast<std::int64_t>(c.scenarios.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& s = c.scenarios[static_cast<std::size_t>(i)];
        IndexEntry entry;
        entry.uid = s.uid;
        entry.signature = Signature{s.tool_id, s.scenario_name};
        entry.vector = embed(s.scenario_name + " " + s.context, dim);
        index.entries[static_cast<std::size_t>(i)] = std::move(entry);
    }
    return index;
}

bool RetrievalResult::contains(const std::string& uid) const {
    return rank_of(uid) != 0;
}

int RetrievalResult::rank_of(const std::string& uid) const {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].first == uid) return static_cast<int>(i) + 1;
    }
    return 0;
}

namespace {

RetrievalResult select_top_k(const std::vector<std::pair<std::string, double>>& scored,
                             std::size_t k) {
    std::vector<std::size_t> order(scored.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scored[a].second != scored[b].second) return scored[a].second > scored[b].second;
        return scored[a].first < scored[b].first;
    });
    RetrievalResult result;
    result.k = k;
    const std::size_t take = std::min(k, order.size());
    result.ranked.reserve(take);
    for (std::size_t i = 0; i < take; ++i) result.ranked.push_back(scored[order[i]]);
    return result;
}

}  // namespace

RetrievalResult retrieve(const EmbeddingIndex& index, const std::string& query, std::size_t k) {
    if (index.entries.empty()) throw EmptyIndex("retrieve on empty index");
    if (k < 1) throw DomainError("k must be at least 1");
    const EmbeddingVector q = embed(query, index.dimension);
    std::vector<std::pair<std::string, double>> scored(index.entries.size());
    const std::int64_t n = static_cast<std::int64_t>(index.entries.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& e = index.entries[static_cast<std::size_t>(i)];
        scored[static_cast<std::size_t>(i)] = {e.uid, cosine(q, e.vector)};
    }
    return select_top_k(scored, k);
}

RetrievalResult retrieve_serial(const EmbeddingIndex& index, const std::string& query,
                                std::size_t k) {
    if (index.entries.empty()) throw EmptyIndex("retrieve on empty index");
    if (k < 1) throw DomainError("k must be at least 1");
    const EmbeddingVector q = embed(query, index.dimension);
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(index.entries.size());
    for (const auto& e : index.entries) {
        scored.emplace_back(e.uid, cosine(q, e.vector));
    }
    return select_top_k(scored, k);
}

RetrievalResult bm25_retrieve(const std::vector<std::pair<std::string, std::string>>& corpus,
                              const std::string& query, std::size_t k, double k1, double b) {
    if (corpus.empty()) throw EmptyIndex("bm25_retrieve on empty corpus");
    if (k < 1) throw DomainError("k must be at least 1");

    const std::size_t n_docs = corpus.size();
    std::vector<std::map<std::string, std::size_t>> term_counts(n_docs);
    std::vector<std::size_t> doc_lengths(n_docs, 0);
    std::map<std::string, std::size_t> doc_freq;
    for (std::size_t d = 0; d < n_docs; ++d) {
        const auto tokens = alnum_tokens(corpus[d].second);
        doc_lengths[d] = tokens.size();
        for (const auto& t : tokens) ++term_counts[d][t];
        for (const auto& [term, count] : term_counts[d]) {
            (void)count;
            ++doc_freq[term];
        }
    }
    double avg_len = 0.0;
    for (const std::size_t len : doc_lengths) avg_len += static_cast<double>(len);
    avg_len /= static_cast<double>(n_docs);

    std::set<std::string> query_terms;
    for (const auto& t : alnum_tokens(query)) query_terms.insert(t);

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(n_docs);
    for (std::size_t d = 0; d < n_docs; ++d) {
        double score = 0.0;
        for (const auto& term : query_terms) {
            auto it = term_counts[d].find(term);
            if (it == term_counts[d].end()) continue;
            const double tf = static_cast<double>(it->second);
            const double df = static_cast<double>(doc_freq[term]);
            const double idf =
                std::log(1.0 + (static_cast<double>(n_docs) - df + 0.5) / (df + 0.5));
            const double len_norm =
                avg_len > 0.0 ? static_cast<double>(doc_lengths[d]) / avg_len : 0.0;
            score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len_norm));
        }
        scored.emplace_back(corpus[d].first, score);
    }
    return select_top_k(scored, k);
}

double recall_at_k(const std::vector<std::pair<RetrievalResult, std::string>>& traces,
                   std::size_t k) {
    if (traces.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& [result, gold_uid] : traces) {
        const int rank = result.rank_of(gold_uid);
        if (rank > 0 && static_cast<std::size_t>(rank) <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(traces.size());
}

}  // namespace synapse
