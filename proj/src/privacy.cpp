#include "synapse/privacy.hpp"

#include <cctype>
#include <cmath>

#include "synapse/errors.hpp"
#include "synapse/util.hpp"

namespace synapse {

std::string to_string(NoiseRegime r) {
    return r == NoiseRegime::fixed ? "fixed" : "unfixed";
}

NoiseRegime noise_regime_from_string(const std::string& s) {
    if (s == "fixed") return NoiseRegime::fixed;
    if (s == "unfixed") return NoiseRegime::unfixed;
    throw DomainError("unknown noise regime: " + s);
}

TokenFrequencies count_token_frequencies(const std::vector<std::string>& texts) {
    TokenFrequencies freq;
    for (const auto& text : texts) {
        for (const auto& token : whitespace_tokens(text)) {
            ++freq[to_lower(token)];
        }
    }
    return freq;
}

namespace {

DeterministicStream noise_stream(const PrivacyPolicy& policy, std::string_view key) {
    if (policy.noise_regime == NoiseRegime::fixed) {
        return DeterministicStream(stream_seed(policy.seed, key));
    }
    return DeterministicStream(stream_seed(policy.seed, key, policy.round));
}

}  // namespace

double laplace_perturb(double m, const PrivacyPolicy& policy, std::string_view noise_key) {
    if (!policy.enabled) {
        throw PolicyDisabled("laplace_perturb called with a disabled policy");
    }
    if (policy.epsilon <= 0.0) {
        throw DomainError("epsilon must be positive");
    }
    const double b = policy.sensitivity / policy.epsilon;
    DeterministicStream stream = noise_stream(policy, noise_key);
    const double u = stream.uniform_centered();
    const double sign = u < 0.0 ? -1.0 : 1.0;
    return m + b * sign * std::log(1.0 - 2.0 * std::fabs(u));
}

SaliencyScore saliency(const std::string& token, const TokenFrequencies& corpus_stats,
                       const SaliencyConfig& config) {
    if (token.empty()) throw DomainError("saliency of empty token");
    SaliencyScore score;
    score.token = token;
    bool has_digit = false;
    bool has_upper = false;
    for (const char c : token) {
        if (std::isdigit(static_cast<unsigned char>(c))) has_digit = true;
        if (std::isupper(static_cast<unsigned char>(c))) has_upper = true;
    }
    if (has_digit) {
        score.kappa = config.digit;
    } else if (has_upper) {
        score.kappa = config.uppercase;
    } else {
        auto it = corpus_stats.find(to_lower(token));
        const std::uint64_t freq = it == corpus_stats.end() ? 0 : it->second;
        score.kappa = freq < config.rare_threshold ? config.rare : config.common;
    }
    return score;
}

std::string mask_text(const std::string& text, const PrivacyPolicy& policy,
                      std::string_view noise_key, const TokenFrequencies& corpus_stats,
                      const SaliencyConfig& config) {
    DeterministicStream stream = noise_stream(policy, noise_key);
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            out += text[i];
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        const std::string token = text.substr(i, j - i);
        const double kappa = saliency(token, corpus_stats, config).kappa;
        const double p = std::min(1.0, policy.lambda_mask * kappa);
        const double u = stream.uniform01();
        if (u < p) {
            out.append(token.size(), '#');
        } else {
            out += token;
        }
        i = j;
    }
    return out;
}

std::string summarize_truncate(const std::string& text, const PrivacyPolicy& policy) {
    if (policy.l_max < 1 || policy.s_max < 1) {
        throw DomainError("l_max and s_max must be at least 1");
    }
    return truncate_text(text, policy.l_max, policy.s_max);
}

PrivacyLedger compose_privacy(double epsilon, double delta, std::uint64_t rounds) {
    if (rounds < 1) throw DomainError("rounds must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (epsilon < 0.0) throw DomainError("epsilon must be non-negative");
    PrivacyLedger ledger;
    ledger.rounds = rounds;
    ledger.per_round_epsilon = epsilon;
    ledger.per_round_delta = delta;
    const double r = static_cast<double>(rounds);
    ledger.composed_epsilon =
        std::sqrt(2.0 * r * std::log(1.0 / delta)) * epsilon + r * epsilon * std::expm1(epsilon);
    ledger.composed_delta = r * delta;
    return ledger;
}

Compendium apply_policy(const Compendium& c, const PrivacyPolicy& policy,
                        const SaliencyConfig& config) {
    if (!policy.enabled) return c;

    // The saliency corpus is the artifact's own text.
    std::vector<std::string> corpus;
    corpus.reserve(c.scenarios.size() + c.precautions.size());
    for (const auto& s : c.scenarios) corpus.push_back(s.context);
    for (const auto& p : c.precautions) corpus.push_back(p.details);
    const TokenFrequencies stats = count_token_frequencies(corpus);

    Compendium out = c;
    for (auto& s : out.scenarios) {
        s.context = mask_text(s.context, policy, s.uid + "/context", stats, config);
        s.context = truncate_text(s.context, policy.l_max, policy.s_max);
    }
    for (auto& p : out.precautions) {
        const std::string key = "precaution/" + hex64(fnv1a64(p.precaution));
        p.details = mask_text(p.details, policy, key, stats, config);
    }
    for (auto& [name, value] : out.metadata) {
        // Declared numeric metadata are integer-valued counts and scores;
        // noisy counts are rounded and floored at zero, which also keeps the
        // serialized width stable for the byte-accounting contract.
        value = std::max(0.0, std::round(laplace_perturb(value, policy, "metadata/" + name)));
    }
    return out;
}

}  // namespace synapse
