#include "synapse/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "synapse/errors.hpp"

namespace synapse {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (const char c : data) {
        h ^= static_cast<std::uint8_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xfu];
        value >>= 4;
    }
    return out;
}

std::uint64_t stream_seed(std::uint64_t global_seed, std::string_view key) {
    return fnv1a64(key, fnv1a64_u64(global_seed, kFnvOffset));
}

std::uint64_t stream_seed(std::uint64_t global_seed, std::string_view key, std::uint64_t round) {
    return fnv1a64_u64(round, stream_seed(global_seed, key));
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_sentence_end(char c) { return c == '.' || c == '?' || c == '!'; }

}  // namespace

std::vector<std::string> alnum_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char c : text) {
        if (is_alnum(c)) {
            current += lower(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char c : text) {
        if (is_space(c)) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            current += c;
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string normalize_ws_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (const char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += lower(c);
        }
    }
    return out;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](char c) { return lower(c); });
    return out;
}

double token_jaccard(std::string_view a, std::string_view b) {
    const auto ta = whitespace_tokens(to_lower(a));
    const auto tb = whitespace_tokens(to_lower(b));
    const std::unordered_set<std::string> sa(ta.begin(), ta.end());
    const std::unordered_set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::size_t> sentence_ends(std::string_view text) {
    std::vector<std::size_t> ends;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_sentence_end(text[i]) &&
            (i + 1 == text.size() || !is_sentence_end(text[i + 1]))) {
            ends.push_back(i + 1);
        }
    }
    // Trailing unterminated content counts as a final sentence.
    if (!ends.empty() && ends.back() < text.size()) {
        std::string_view tail = text.substr(ends.back());
        if (tail.find_first_not_of(" \t\n\r\f\v") != std::string_view::npos) {
            ends.push_back(text.size());
        }
    } else if (ends.empty() && !text.empty()) {
        if (text.find_first_not_of(" \t\n\r\f\v") != std::string_view::npos) {
            ends.push_back(text.size());
        }
    }
    return ends;
}

std::size_t count_sentences(std::string_view text) { return sentence_ends(text).size(); }

std::string truncate_text(std::string_view text, std::size_t max_chars,
                          std::size_t max_sentences) {
    const auto ends = sentence_ends(text);
    if (text.size() <= max_chars && ends.size() <= max_sentences) {
        return std::string(text);
    }
    std::size_t cut = text.size();
    if (ends.size() > max_sentences) {
        cut = ends[max_sentences - 1];
    }
    if (cut > max_chars) {
        // Last sentence boundary that still fits, else a hard cut.
        std::size_t best = 0;
        for (const std::size_t e : ends) {
            if (e <= max_chars && e > best) best = e;
        }
        cut = best > 0 ? best : max_chars;
    }
    std::string out(text.substr(0, cut));
    while (!out.empty() && is_space(out.back())) out.pop_back();
    return out;
}

namespace {

std::optional<double> parse_number_at(std::string_view text, std::size_t start,
                                      std::size_t* end_out) {
    std::size_t i = start;
    std::string buf;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        buf += text[i];
        ++i;
    }
    bool any_digit = false;
    bool seen_dot = false;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            buf += c;
            any_digit = true;
            ++i;
        } else if (c == ',' && any_digit && i + 1 < text.size() &&
                   std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            ++i;  // digit-group comma
        } else if (c == '.' && !seen_dot && i + 1 < text.size() &&
                   std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            buf += c;
            seen_dot = true;
            ++i;
        } else {
            break;
        }
    }
    if (!any_digit) return std::nullopt;
    if (end_out) *end_out = i;
    return std::stod(buf);
}

}  // namespace

std::optional<double> first_number(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i])) ||
            ((text[i] == '-' || text[i] == '+') && i + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t end = 0;
            auto v = parse_number_at(text, i, &end);
            if (v) return v;
        }
    }
    return std::nullopt;
}

std::optional<double> last_number(std::string_view text) {
    std::optional<double> found;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i])) ||
            ((text[i] == '-' || text[i] == '+') && i + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t end = 0;
            auto v = parse_number_at(text, i, &end);
            if (v) {
                found = v;
                i = end - 1;
            }
        }
    }
    return found;
}

bool contains_digit(std::string_view text) {
    return std::any_of(text.begin(), text.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<std::size_t> prev(m + 1);
    std::vector<std::size_t> cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

std::string num_str(double value) {
    return nlohmann::json(value).dump();
}

std::string canonical_dump(const nlohmann::json& doc) {
    // nlohmann::json already keeps object keys sorted (std::map) and dump()
    // emits no insignificant whitespace or non-ASCII escaping.
    return doc.dump();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SynapseError("IoError", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SynapseError("IoError", "cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace synapse
