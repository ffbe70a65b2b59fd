#pragma once

/** @file acceptance.hpp
 *  @brief Acceptance suite: one pass/fail check per criterion with pinned tolerances and runtime limits.
 */

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fibwild {

inline constexpr int criterion_count = 12;

struct AcceptanceOptions {
    std::optional<int> precision_bits; ///< overrides the per-criterion defaults (113 for 5, 256 for 7)
    std::uint64_t seed = 1;            ///< Monte Carlo seed, frozen after the pilot run
    int threads = 0;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0;
    double time_limit = 0;   ///< 0: no runtime requirement
    std::string summary;     ///< one line; the error kind and message when an exception ended the check
    nlohmann::json metrics;
};

CriterionResult run_criterion(int id, const AcceptanceOptions& opts = {});
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {}, std::vector<int> ids = {});

void to_json(nlohmann::json& j, const CriterionResult& r);
void from_json(const nlohmann::json& j, CriterionResult& r);

} // namespace fibwild
