#include "fibwild/kneading.hpp"
#include "fibwild/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fibwild {

int KneadingData::q(int k) const
{
    if (k < 0 || k > K)
        throw IndexOutOfRange("Q index " + std::to_string(k) + " outside 0.." + std::to_string(K));
    return Q[k];
}

const BigInt& KneadingData::s(int k) const
{
    if (k < 0 || k > K)
        throw IndexOutOfRange("S index " + std::to_string(k) + " outside 0.." + std::to_string(K));
    return S[k];
}

std::int64_t KneadingData::s_int64(int k) const
{
    const BigInt& v = s(k);
    if (v > BigInt(std::numeric_limits<std::int64_t>::max()))
        throw IndexOutOfRange("S_" + std::to_string(k) + " exceeds 64-bit range");
    return v.convert_to<std::int64_t>();
}

double KneadingData::s_double(int k) const { return s(k).convert_to<double>(); }

KneadingData make_kneading(std::vector<int> Q)
{
    if (Q.size() < 2)
        throw InvalidArgument("kneading map needs K >= 1");
    KneadingData kd;
    kd.K = static_cast<int>(Q.size()) - 1;
    Q[0] = 0;
    kd.S.resize(Q.size());
    kd.S[0] = 1;
    for (int k = 1; k <= kd.K; ++k) {
        if (Q[k] < 0 || Q[k] >= k)
            throw InvalidArgument("Q(" + std::to_string(k) + ") = " + std::to_string(Q[k]) +
                                  " violates 0 <= Q(k) < k");
        kd.S[k] = kd.S[k - 1] + kd.S[Q[k]];
    }
    kd.Q = std::move(Q);
    return kd;
}

KneadingData fibonacci_kneading(int K)
{
    if (K < 1)
        throw InvalidArgument("depth K must be >= 1");
    std::vector<int> Q(K + 1, 0);
    for (int k = 1; k <= K; ++k)
        Q[k] = std::max(k - 2, 0);
    return make_kneading(std::move(Q));
}

KneadingData floor_r_kneading(double r, int K, int prefix)
{
    if (!(r > 0.0 && r < 1.0))
        throw InvalidArgument("r must lie in (0,1)");
    if (K < 1)
        throw InvalidArgument("depth K must be >= 1");
    if (prefix < 0)
        throw InvalidArgument("prefix must be non-negative");
    std::vector<int> Q(K + 1, 0);
    for (int k = 1; k <= K; ++k)
        Q[k] = k <= prefix ? std::max(k - 2, 0) : static_cast<int>(std::floor(r * k));
    return make_kneading(std::move(Q));
}

Condition121Result check_condition_121(const KneadingData& kd, std::optional<int> kmax)
{
    int last = kmax.value_or(kd.K - 1);
    if (last > kd.K - 1)
        throw IndexOutOfRange("condition Q(k+1) > Q(Q^2(k)+1) at k = " + std::to_string(last) + " needs Q up to " +
                              std::to_string(last + 1) + ", have K = " + std::to_string(kd.K));
    Condition121Result res;
    for (int k = 2; k <= last; ++k) {
        int idx = kd.q(kd.q(k)) + 1;
        if (idx > kd.K)
            throw IndexOutOfRange("Q^2(k)+1 beyond depth at k = " + std::to_string(k));
        if (!(kd.q(k + 1) > kd.q(idx))) {
            res.holds = false;
            res.first_failing_k = k;
            return res;
        }
    }
    return res;
}

AdmissibilityResult check_admissibility(const KneadingData& kd)
{
    AdmissibilityResult res;
    res.depth = kd.K;
    bool truncated = false;
    for (int k = 1; k < kd.K; ++k) {
        int base = kd.q(kd.q(k));
        int cmp = 0;
        for (int j = 1; k + j <= kd.K; ++j) {
            int a = kd.Q[k + j];
            int b = kd.Q[base + j];
            if (a != b) {
                cmp = a > b ? 1 : -1;
                break;
            }
        }
        if (cmp < 0) {
            res.status = AdmissibilityStatus::NotAdmissible;
            res.first_failing_k = k;
            return res;
        }
        if (cmp == 0)
            truncated = true;
    }
    res.status = truncated ? AdmissibilityStatus::VerifiedToDepth : AdmissibilityStatus::Admissible;
    return res;
}

const char* to_string(AdmissibilityStatus s)
{
    switch (s) {
    case AdmissibilityStatus::Admissible:
        return "admissible";
    case AdmissibilityStatus::VerifiedToDepth:
        return "verified to depth";
    case AdmissibilityStatus::NotAdmissible:
        return "not admissible";
    }
    return "?";
}

// S values beyond 64 bits are written as decimal strings
void to_json(nlohmann::json& j, const KneadingData& kd)
{
    nlohmann::json s = nlohmann::json::array();
    for (const auto& v : kd.S) {
        if (v <= BigInt(std::numeric_limits<std::int64_t>::max()))
            s.push_back(v.convert_to<std::int64_t>());
        else
            s.push_back(v.str());
    }
    nlohmann::json q = std::vector<int>(kd.Q.begin() + 1, kd.Q.end());
    j = nlohmann::json{{"Q", q}, {"S", s}, {"K", kd.K}};
}

void from_json(const nlohmann::json& j, KneadingData& kd)
{
    std::vector<int> Q{0};
    for (const auto& v : j.at("Q"))
        Q.push_back(v.get<int>());
    kd = make_kneading(std::move(Q));
    const auto& s = j.at("S");
    if (static_cast<int>(s.size()) != kd.K + 1 || j.at("K").get<int>() != kd.K)
        throw InvalidArgument("kneading JSON: inconsistent lengths");
    for (int k = 0; k <= kd.K; ++k) {
        BigInt v = s[k].is_string() ? BigInt(s[k].get<std::string>()) : BigInt(s[k].get<std::int64_t>());
        if (v != kd.S[k])
            throw InvalidArgument("kneading JSON: S does not satisfy the cutting-time recursion");
    }
}

} // namespace fibwild
