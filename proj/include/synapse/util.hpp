#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace synapse {

// ---------------------------------------------------------------------------
// Stable hashing.
//
// Every content-derived identity in the system (scenario uids, embedding
// buckets, noise-stream keys) comes from 64-bit FNV-1a so that independent
// implementations agree byte-for-byte. The exact constants are part of the
// file-format contract and documented in docs/schema.md.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;
// Alternate offset for the second, independent hash (embedding sign bit).
inline constexpr std::uint64_t kFnvOffsetAlt = kFnvOffset ^ 0x9e3779b97f4a7c15ull;

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = kFnvOffset);

// Extends a running hash with 8 little-endian bytes.
std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t basis);

// 16-char lowercase hex.
std::string hex64(std::uint64_t value);

// ---------------------------------------------------------------------------
// Deterministic random streams.
//
// std::mt19937_64 output is fully specified by the standard; distributions
// are not, so uniforms are produced directly from raw 53-bit draws. A stream
// is always derived from (seed, key[, round]) and never shared, which keeps
// every caller order-independent and parallel-safe.
// ---------------------------------------------------------------------------

class DeterministicStream {
public:
    explicit DeterministicStream(std::uint64_t seed) : rng_(seed) {}

    // Uniform in (0,1), both ends excluded.
    double uniform01() {
        const std::uint64_t v = rng_() >> 11;  // 53 bits
        return (static_cast<double>(v) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // Uniform in (-1/2, 1/2), zero excluded.
    double uniform_centered() { return uniform01() - 0.5; }

    std::uint64_t next_u64() { return rng_(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return rng_() % n; }

private:
    std::mt19937_64 rng_;
};

std::uint64_t stream_seed(std::uint64_t global_seed, std::string_view key);
std::uint64_t stream_seed(std::uint64_t global_seed, std::string_view key, std::uint64_t round);

// Deterministic Fisher-Yates; std::shuffle is implementation-defined.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
    DeterministicStream stream(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(stream.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

// ---------------------------------------------------------------------------
// Text utilities.
// ---------------------------------------------------------------------------

// Lowercase alphanumeric runs; the embedding/BM25 tokenizer.
std::vector<std::string> alnum_tokens(std::string_view text);

// Whitespace-delimited tokens with punctuation attached; the masking and
// Jaccard tokenizer.
std::vector<std::string> whitespace_tokens(std::string_view text);

// Lowercase, collapse whitespace runs to single spaces, trim.
std::string normalize_ws_lower(std::string_view text);

std::string to_lower(std::string_view text);

// Jaccard similarity over lowercase whitespace tokens; 1.0 when both empty.
double token_jaccard(std::string_view a, std::string_view b);

// Offsets one past each sentence terminator run ('.', '?', '!'), plus the
// text length when unterminated content trails.
std::vector<std::size_t> sentence_ends(std::string_view text);

std::size_t count_sentences(std::string_view text);

// Cap `text` at `max_chars` / `max_sentences`, preferring the last sentence
// boundary that fits and hard-cutting only when no boundary does.
std::string truncate_text(std::string_view text, std::size_t max_chars,
                          std::size_t max_sentences);

// ---------------------------------------------------------------------------
// Numbers.
// ---------------------------------------------------------------------------

// First number in the text, ignoring currency glyphs and digit-group commas.
std::optional<double> first_number(std::string_view text);
std::optional<double> last_number(std::string_view text);

bool contains_digit(std::string_view text);

std::size_t edit_distance(std::string_view a, std::string_view b);

// Shortest round-trip decimal form (matches JSON number serialization).
std::string num_str(double value);

// ---------------------------------------------------------------------------
// Canonical JSON: UTF-8, object keys sorted, no insignificant whitespace.
// ---------------------------------------------------------------------------

std::string canonical_dump(const nlohmann::json& doc);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace synapse
