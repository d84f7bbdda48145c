#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace evp::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Validates and executes one experiment configuration (or a manifest
/// produced by an earlier run, which re-executes its embedded config).
/// Returns the process exit code: 0 ok, 1 sub-operation error (manifest
/// records the error), 2 schema violation (no artifacts).
int run_document(const nlohmann::json& doc, std::uint64_t seed_override,
                 bool has_seed_override, std::string* error_out = nullptr);

/// Human-readable plan: resolved parameters, estimated cost, and what each
/// output column contains. Performs no computation.
std::string describe_document(const nlohmann::json& doc);

/// `evp run <config.json> [--seed N]` / `evp describe <config.json>`.
int main_entry(int argc, char** argv);

} // namespace evp::cli
