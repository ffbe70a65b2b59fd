#include "fibwild/plmap.hpp"

namespace fibwild {

template PLMapT<double> build<double>(const KneadingData&, std::vector<double>, std::optional<double>, double);
template PLMapT<Quad> build<Quad>(const KneadingData&, std::vector<Quad>, std::optional<Quad>, double);

nlohmann::json plmap_to_json(const PLMap& m)
{
    nlohmann::json j;
    j["N"] = m.N;
    if (m.lambda)
        j["lambda"] = *m.lambda;
    j["kneading"] = m.kneading;
    j["eps"] = m.eps;
    j["z"] = m.z;
    j["kappa"] = m.kappa;
    j["s"] = std::vector<double>(m.s.begin() + 1, m.s.end());
    j["fvals"] = m.fvals;
    std::vector<int> orient(m.orientation.begin() + 1, m.orientation.end());
    std::vector<std::string> sides;
    for (int i = 1; i <= m.N; ++i)
        sides.push_back(to_string(m.side[i]));
    j["orientation"] = orient;
    j["side"] = sides;
    j["resolved"] = m.resolved;
    return j;
}

} // namespace fibwild
