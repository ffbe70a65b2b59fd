#pragma once

/** @file kneading.hpp
 *  @brief Kneading maps Q(k) and cutting times S_k.
 */

#include "fibwild/real.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fibwild {

/// Q is stored for k = 0..K with Q[0] = 0 by convention; S for k = 0..K.
struct KneadingData {
    std::vector<int> Q;
    std::vector<BigInt> S;
    int K = 0;

    int q(int k) const;
    const BigInt& s(int k) const;
    /// S_k as a native integer; throws IndexOutOfRange when S_k does not fit.
    std::int64_t s_int64(int k) const;
    double s_double(int k) const;

    bool operator==(const KneadingData&) const = default;
};

/// Builds S from Q by S_0 = 1, S_k = S_{k-1} + S_{Q(k)}. Q[0] is ignored.
KneadingData make_kneading(std::vector<int> Q);

KneadingData fibonacci_kneading(int K);

/// Q(k) = max(k-2, 0) for k <= prefix, floor(r k) afterwards.
KneadingData floor_r_kneading(double r, int K, int prefix = 2);

struct Condition121Result {
    bool holds = true;
    std::optional<int> first_failing_k;
};

/// Scans Q(k+1) > Q(Q^2(k)+1) for 2 <= k <= kmax (default K-1).
Condition121Result check_condition_121(const KneadingData& kd, std::optional<int> kmax = std::nullopt);

enum class AdmissibilityStatus { Admissible, VerifiedToDepth, NotAdmissible };

struct AdmissibilityResult {
    AdmissibilityStatus status = AdmissibilityStatus::Admissible;
    std::optional<int> first_failing_k;
    int depth = 0;

    bool admissible() const { return status != AdmissibilityStatus::NotAdmissible; }
};

AdmissibilityResult check_admissibility(const KneadingData& kd);

const char* to_string(AdmissibilityStatus s);

void to_json(nlohmann::json& j, const KneadingData& kd);
void from_json(const nlohmann::json& j, KneadingData& kd);

} // namespace fibwild
