#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "synapse/compendium.hpp"

namespace synapse {

enum class NoiseRegime { fixed, unfixed };

std::string to_string(NoiseRegime r);
NoiseRegime noise_regime_from_string(const std::string& s);

// The knob bundle governing all artifact transforms. `seed` is the run seed
// and `round` the federation round counter; together with a per-field key
// they determine every noise stream. In the fixed regime the round counter
// is ignored, so perturbations persist across rounds; in the unfixed regime
// it is mixed in and noise is resampled each round.
struct PrivacyPolicy {
    bool enabled = true;
    double epsilon = 1.0;        // DP budget
    double lambda_mask = 1.0;    // masking strength
    double sensitivity = 1.0;    // per-field numeric sensitivity
    std::size_t l_max = 280;     // character cap
    std::size_t s_max = 3;       // sentence cap
    double delta = 1e-5;         // composition delta
    NoiseRegime noise_regime = NoiseRegime::fixed;
    std::uint64_t seed = 0;
    std::uint64_t round = 0;
};

struct SaliencyScore {
    std::string token;
    double kappa = 0.0;  // in [0,1]
};

// Token saliency constants. The classes (digits, uppercase patterns, rare
// identifiers) are fixed; the weights are configurable.
struct SaliencyConfig {
    double digit = 1.0;
    double uppercase = 0.8;
    double rare = 0.6;
    double common = 0.1;
    std::uint64_t rare_threshold = 2;  // corpus frequency below this is rare
};

// Lowercased token -> corpus occurrence count.
using TokenFrequencies = std::map<std::string, std::uint64_t>;

TokenFrequencies count_token_frequencies(const std::vector<std::string>& texts);

struct PrivacyLedger {
    std::uint64_t rounds = 0;
    double per_round_epsilon = 0.0;
    double per_round_delta = 0.0;
    double composed_epsilon = 0.0;
    double composed_delta = 0.0;
};

// m + b*sgn(u)*ln(1-2|u|) with b = sensitivity/epsilon and u drawn from the
// stream keyed by (seed, noise_key[, round]). Throws PolicyDisabled when the
// policy is off: callers must branch explicitly.
double laplace_perturb(double m, const PrivacyPolicy& policy, std::string_view noise_key);

SaliencyScore saliency(const std::string& token, const TokenFrequencies& corpus_stats,
                       const SaliencyConfig& config = {});

// Per-token Bernoulli masking with p(w) = min(1, lambda*kappa(w)). Masked
// tokens become '#' runs of the same length; whitespace is preserved exactly.
// The decision uniform per token does not depend on lambda, so mask sets are
// nested across increasing lambda under the same (seed, key).
std::string mask_text(const std::string& text, const PrivacyPolicy& policy,
                      std::string_view noise_key, const TokenFrequencies& corpus_stats = {},
                      const SaliencyConfig& config = {});

// Character/sentence caps; same truncation contract as compendium curation.
std::string summarize_truncate(const std::string& text, const PrivacyPolicy& policy);

// (eps', delta') = (sqrt(2R log(1/delta))*eps + R*eps*(e^eps - 1), R*delta).
PrivacyLedger compose_privacy(double epsilon, double delta, std::uint64_t rounds);

// Full artifact transform: Laplace on declared numeric metadata, masking on
// scenario contexts and precaution details, truncation on contexts. Names,
// tool ids and uids pass through untouched so routing keys survive.
Compendium apply_policy(const Compendium& c, const PrivacyPolicy& policy,
                        const SaliencyConfig& config = {});

}  // namespace synapse
