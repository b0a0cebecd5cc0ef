#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synapse/compendium.hpp"

namespace synapse {

inline constexpr std::size_t kDefaultEmbeddingDim = 512;
inline constexpr std::size_t kDefaultTopK = 5;

// Unit-norm hash embedding; all-zero is the documented sentinel for empty
// text (masked-to-empty scenarios must stay indexable).
struct EmbeddingVector {
    std::vector<double> values;

    bool is_zero() const;
    std::size_t dimension() const { return values.size(); }
};

// Feature-hashing embedder: lowercase alphanumeric tokens, bucket
// fnv1a64(token) mod dim, sign from bit 0 of the alternate-basis hash,
// accumulate +/-1, L2-normalize. Bit-exact across platforms; golden vectors
// in fixtures/golden_embeddings.json.
EmbeddingVector embed(const std::string& text, std::size_t dim = kDefaultEmbeddingDim);

// Dot product of unit vectors; 0 when either side is the zero sentinel.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

double l2_distance(const EmbeddingVector& a, const EmbeddingVector& b);

struct IndexEntry {
    std::string uid;
    Signature signature;
    EmbeddingVector vector;
};

struct EmbeddingIndex {
    std::vector<IndexEntry> entries;
    std::size_t dimension = kDefaultEmbeddingDim;
};

// Index text is "<scenario name> <context>"; entry embedding runs in
// parallel, one independent slot per scenario.
EmbeddingIndex build_index(const Compendium& c, std::size_t dim = kDefaultEmbeddingDim);

struct RetrievalResult {
    std::vector<std::pair<std::string, double>> ranked;  // (uid, score), scores non-increasing
    std::size_t k = 0;

    bool contains(const std::string& uid) const;
    int rank_of(const std::string& uid) const;  // 1-based, 0 when absent
};

// Exact top-k by cosine; ties broken by ascending uid. The scoring scan is
// the OpenMP-parallel kernel; selection is serial, so results are identical
// at any thread count.
RetrievalResult retrieve(const EmbeddingIndex& index, const std::string& query, std::size_t k);

// Single-threaded reference scan with the identical contract, kept for
// testing and the retrieval benchmark.
RetrievalResult retrieve_serial(const EmbeddingIndex& index, const std::string& query,
                                std::size_t k);

// Okapi BM25 with idf = ln(1 + (N - df + 0.5)/(df + 0.5)), summed over
// distinct query terms; same tie-break contract as retrieve.
RetrievalResult bm25_retrieve(const std::vector<std::pair<std::string, std::string>>& corpus,
                              const std::string& query, std::size_t k, double k1 = 1.5,
                              double b = 0.75);

// Fraction of traces whose gold uid appears in the top-k.
double recall_at_k(const std::vector<std::pair<RetrievalResult, std::string>>& traces,
                   std::size_t k);

}  // namespace synapse
