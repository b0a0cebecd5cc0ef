#include "synapse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "synapse/errors.hpp"
#include "synapse/util.hpp"

namespace synapse {

using nlohmann::json;

std::string gold_tool_for(const Tags& tags) {
    const std::string ds = to_lower(tags.dataset);
    if (ds.find("gsm8k") != std::string::npos || ds.rfind("bbh", 0) == 0) return "mathqa";
    if (ds.find("science") != std::string::npos) return "scienceqa";
    if (ds.find("logic") != std::string::npos) return "logicqa";
    if (ds.find("spatial") != std::string::npos) return "spatialqa";
    const std::string tt = to_lower(tags.task_type);
    if (tt.find("math") != std::string::npos || tt.find("arithmetic") != std::string::npos ||
        tt.find("count") != std::string::npos || tt.find("word_problem") != std::string::npos) {
        return "mathqa";
    }
    if (tt.find("logic") != std::string::npos) return "logicqa";
    if (tt.find("spatial") != std::string::npos) return "spatialqa";
    return "scienceqa";
}

std::vector<DataItem> ingest_text(const std::string& jsonl, const std::string& origin) {
    std::vector<DataItem> items;
    std::istringstream in(jsonl);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(line_no, origin + ": invalid JSON: " + e.what());
        }
        if (!doc.is_object()) throw FormatError(line_no, origin + ": expected object");
        if (!doc.contains("question") || !doc["question"].is_string()) {
            throw FormatError(line_no, origin + ": missing question");
        }
        if (!doc.contains("answer")) {
            throw FormatError(line_no, origin + ": missing answer");
        }
        DataItem item;
        item.id = doc.value("id", "item-" + std::to_string(line_no));
        item.question = doc["question"].get<std::string>();
        if (doc["answer"].is_string()) {
            item.gold_answer = doc["answer"].get<std::string>();
        } else if (doc["answer"].is_number()) {
            item.gold_answer = num_str(doc["answer"].get<double>());
        } else {
            throw FormatError(line_no, origin + ": answer must be string or number");
        }
        if (doc.contains("tags") && doc["tags"].is_object()) {
            const json& tags = doc["tags"];
            item.tags.dataset = tags.value("dataset", std::string{});
            item.tags.domain = tags.value("domain", std::string{});
            item.tags.task_type = tags.value("task_type", std::string{});
        }
        item.gold_tool = gold_tool_for(item.tags);
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<DataItem> ingest(const std::string& path) {
    return ingest_text(read_file(path), path);
}

DataSplit split_items(const std::vector<DataItem>& items, const SplitRatios& ratios,
                      std::uint64_t seed) {
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
        throw DomainError("split ratios must be non-negative");
    }
    std::vector<DataItem> shuffled = items;
    deterministic_shuffle(shuffled, stream_seed(seed, "dataset/split"));
    const double total = ratios.train + ratios.val + ratios.test;
    if (total <= 0.0) throw DomainError("split ratios must sum to a positive value");
    const std::size_t n = shuffled.size();
    const auto n_train = static_cast<std::size_t>(std::floor(ratios.train / total * n));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.val / total * n));
    DataSplit split;
    split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                      shuffled.end());
    return split;
}

std::string to_string(PartitionScheme s) {
    switch (s) {
        case PartitionScheme::iid: return "iid";
        case PartitionScheme::noniid_question_length: return "noniid_question_length";
        case PartitionScheme::noniid_answer_range: return "noniid_answer_range";
    }
    return "iid";
}

PartitionScheme partition_scheme_from_string(const std::string& s) {
    if (s == "iid") return PartitionScheme::iid;
    if (s == "noniid_question_length") return PartitionScheme::noniid_question_length;
    if (s == "noniid_answer_range") return PartitionScheme::noniid_answer_range;
    throw DomainError("unknown partition scheme: " + s);
}

namespace {

std::string client_name(std::size_t index) { return "client-" + std::to_string(index + 1); }

}  // namespace

Partition make_partition(const std::vector<DataItem>& items, PartitionScheme scheme,
                         std::size_t clients, std::size_t per_client, std::uint64_t seed,
                         std::size_t shards_per_client) {
    if (clients < 1 || per_client < 1) throw DomainError("clients and per_client must be >= 1");
    if (clients * per_client > items.size()) {
        throw InsufficientData("need " + std::to_string(clients * per_client) + " items, have " +
                               std::to_string(items.size()));
    }
    Partition partition;
    partition.scheme = scheme;
    partition.shards_per_client = shards_per_client;

    std::vector<DataItem> pool = items;
    if (scheme == PartitionScheme::iid) {
        deterministic_shuffle(pool, stream_seed(seed, "partition/iid"));
        std::size_t cursor = 0;
        for (std::size_t c = 0; c < clients; ++c) {
            auto& ids = partition.assignment[client_name(c)];
            for (std::size_t i = 0; i < per_client; ++i) ids.push_back(pool[cursor++].id);
        }
        return partition;
    }

    if (per_client % shards_per_client != 0) {
        throw ConfigError("per_client must be divisible by shards_per_client");
    }
    auto sort_key = [&](const DataItem& item) -> double {
        if (scheme == PartitionScheme::noniid_question_length) {
            return static_cast<double>(item.question.size());
        }
        const auto value = first_number(item.gold_answer);
        // Numeric answer ranges, falling back to question length.
        return value ? *value : static_cast<double>(item.question.size());
    };
    std::stable_sort(pool.begin(), pool.end(), [&](const DataItem& a, const DataItem& b) {
        const double ka = sort_key(a);
        const double kb = sort_key(b);
        if (ka != kb) return ka < kb;
        return a.id < b.id;
    });
    pool.resize(clients * per_client);

    const std::size_t shard_size = per_client / shards_per_client;
    const std::size_t total_shards = clients * shards_per_client;
    std::size_t cursor = 0;
    for (std::size_t shard = 0; shard < total_shards; ++shard) {
        const std::size_t c = shard / shards_per_client;  // contiguous shard groups
        auto& ids = partition.assignment[client_name(c)];
        for (std::size_t i = 0; i < shard_size; ++i) ids.push_back(pool[cursor++].id);
    }
    return partition;
}

namespace {

constexpr std::size_t kDivergenceBins = 10;

std::vector<double> normalized_histogram(const std::vector<double>& values, double lo, double hi) {
    std::vector<double> bins(kDivergenceBins, 0.0);
    if (values.empty()) return bins;
    const double width = hi > lo ? (hi - lo) / static_cast<double>(kDivergenceBins) : 1.0;
    for (const double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        if (b >= kDivergenceBins) b = kDivergenceBins - 1;
        bins[b] += 1.0;
    }
    for (double& b : bins) b /= static_cast<double>(values.size());
    return bins;
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
    }
    return js;
}

}  // namespace

std::pair<double, double> partition_divergence(const Partition& partition,
                                               const std::vector<DataItem>& items) {
    std::map<std::string, double> lengths;
    for (const auto& item : items) {
        lengths[item.id] = static_cast<double>(item.question.size());
    }
    double lo = 0.0;
    double hi = 0.0;
    bool first = true;
    std::map<std::string, std::vector<double>> per_client;
    for (const auto& [client, ids] : partition.assignment) {
        for (const auto& id : ids) {
            auto it = lengths.find(id);
            if (it == lengths.end()) throw DomainError("partition references unknown item " + id);
            per_client[client].push_back(it->second);
            if (first || it->second < lo) lo = it->second;
            if (first || it->second > hi) hi = it->second;
            first = false;
        }
    }
    std::vector<double> divergences;
    for (const auto& [client, values] : per_client) {
        std::vector<double> others;
        for (const auto& [other, other_values] : per_client) {
            if (other == client) continue;
            others.insert(others.end(), other_values.begin(), other_values.end());
        }
        const auto p = normalized_histogram(values, lo, hi);
        // A single client diverges from an empty federation by nothing.
        if (others.empty()) {
            divergences.push_back(0.0);
            continue;
        }
        const auto q = normalized_histogram(others, lo, hi);
        divergences.push_back(js_divergence(p, q));
    }
    double mean = 0.0;
    for (const double d : divergences) mean += d;
    mean /= static_cast<double>(divergences.size());
    double var = 0.0;
    for (const double d : divergences) var += (d - mean) * (d - mean);
    var /= static_cast<double>(divergences.size());
    return {mean, std::sqrt(var)};
}

std::vector<DataItem> items_for_client(const Partition& partition,
                                       const std::vector<DataItem>& items,
                                       const std::string& client_id) {
    auto it = partition.assignment.find(client_id);
    if (it == partition.assignment.end()) return {};
    std::map<std::string, const DataItem*> by_id;
    for (const auto& item : items) by_id[item.id] = &item;
    std::vector<DataItem> out;
    out.reserve(it->second.size());
    for (const auto& id : it->second) {
        auto found = by_id.find(id);
        if (found == by_id.end()) throw DomainError("partition references unknown item " + id);
        out.push_back(*found->second);
    }
    return out;
}

}  // namespace synapse
