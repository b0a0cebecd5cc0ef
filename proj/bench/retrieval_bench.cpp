// Compares the OpenMP top-k scan against the serial reference on synthetic
// corpora and checks they agree exactly.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "synapse/compendium.hpp"
#include "synapse/retrieval.hpp"
#include "synapse/util.hpp"

using namespace synapse;

namespace {

Compendium synthetic_compendium(std::size_t scenarios, std::uint64_t seed) {
    static const std::vector<std::string> vocabulary = {
        "interest", "rate",     "principal", "loan",    "geometry", "angle",  "triangle",
        "velocity", "distance", "time",      "work",    "fraction", "ratio",  "percent",
        "count",    "objects",  "sequence",  "algebra", "equation", "solve",  "balance",
        "deposit",  "profit",   "loss",      "area",    "volume",   "speed",  "total",
        "shares",   "divide",   "remainder", "prime",   "digits",   "median", "average"};
    Compendium c;
    c.owner = "bench";
    c.tools.push_back({"mathqa", "Solves quantitative word problems.", "1.0.0"});
    DeterministicStream stream(seed);
    for (std::size_t i = 0; i < scenarios; ++i) {
        UsageScenario s;
        s.tool_id = "mathqa";
        s.scenario_name = "Scenario " + std::to_string(i);
        std::string context;
        for (std::size_t w = 0; w < 24; ++w) {
            if (w > 0) context += ' ';
            context += vocabulary[stream.below(vocabulary.size())];
        }
        s.context = context + ".";
        s.uid = scenario_uid(s);
        c.scenarios.push_back(std::move(s));
    }
    return c;
}

double run_queries(const EmbeddingIndex& index, const std::vector<std::string>& queries,
                   bool serial) {
    const auto start = std::chrono::steady_clock::now();
    for (const auto& q : queries) {
        if (serial) {
            (void)retrieve_serial(index, q, 5);
        } else {
            (void)retrieve(index, q, 5);
        }
    }
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

int main() {
    const std::vector<std::size_t> sizes = {1000, 5000, 20000};
    std::vector<std::string> queries;
    DeterministicStream stream(7);
    for (int i = 0; i < 200; ++i) {
        queries.push_back("interest rate on a loan of " + std::to_string(stream.below(9000)) +
                          " at " + std::to_string(stream.below(19) + 1) + " percent");
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    std::printf("%10s %14s %14s %10s\n", "scenarios", "serial ms", "parallel ms", "speedup");
    for (const std::size_t n : sizes) {
        const Compendium c = synthetic_compendium(n, 42);
        const EmbeddingIndex index = build_index(c);

        // Identical rankings are a correctness requirement, not a benchmark.
        for (const auto& q : queries) {
            const auto a = retrieve_serial(index, q, 5);
            const auto b = retrieve(index, q, 5);
            if (a.ranked != b.ranked) {
                std::fprintf(stderr, "mismatch between serial and parallel scan\n");
                return 1;
            }
        }

        (void)run_queries(index, queries, false);  // warm-up
        const double serial_ms = run_queries(index, queries, true);
        const double parallel_ms = run_queries(index, queries, false);
        std::printf("%10zu %14.2f %14.2f %9.2fx\n", n, serial_ms, parallel_ms,
                    parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0);
    }
    return 0;
}
