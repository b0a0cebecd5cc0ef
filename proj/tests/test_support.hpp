#pragma once

#include <filesystem>
#include <string>
#include <vector>

#ifndef SYNAPSE_SOURCE_DIR
#define SYNAPSE_SOURCE_DIR "."
#endif

namespace test_support {

inline std::string fixture_path(const std::string& name) {
    return (std::filesystem::path(SYNAPSE_SOURCE_DIR) / "fixtures" / name).string();
}

inline std::string prompt_path(const std::string& name) {
    return (std::filesystem::path(SYNAPSE_SOURCE_DIR) / "prompts" / name).string();
}

inline std::vector<std::string> fixture_compendium_files() {
    std::vector<std::string> files;
    files.push_back(fixture_path("fig2.compendium.json"));
    const auto dir = std::filesystem::path(SYNAPSE_SOURCE_DIR) / "fixtures" / "compendiums";
    std::vector<std::string> rest;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        rest.push_back(entry.path().string());
    }
    std::sort(rest.begin(), rest.end());
    files.insert(files.end(), rest.begin(), rest.end());
    return files;
}

}  // namespace test_support
