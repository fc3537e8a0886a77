#include "pavetwin/dynamics.hpp"

#include "pavetwin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace pavetwin {

namespace {

bool non_negative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void DynamicsConfig::validate() const {
    if (!non_negative(kappa)) {
        throw ConfigError("kappa must be finite and >= 0");
    }
    if (!non_negative(noise_sd)) {
        throw ConfigError("noise sd must be finite and >= 0");
    }
    if (!std::isfinite(decay.alpha_age) || !std::isfinite(decay.beta_traffic) ||
        !std::isfinite(decay.gamma_default)) {
        throw ConfigError("decay coefficients must be finite");
    }
    for (const auto& [name, g] : decay.gamma_material) {
        if (!std::isfinite(g)) {
            throw ConfigError("decay coefficient for '" + name + "' must be finite");
        }
    }
}

double monthly_decay(const DecayCoefficients& decay, double age_years, double traffic_volume,
                     const std::string& material) {
    auto it = decay.gamma_material.find(material);
    const double gamma = it == decay.gamma_material.end() ? decay.gamma_default : it->second;
    return decay.alpha_age * age_years / 40.0 + decay.beta_traffic * std::log10(std::max(traffic_volume, 1.0)) / 5.0 +
           gamma;
}

double initial_condition(double age_years, double noise_sd, Rng& rng) {
    const double eps = noise_sd * rng.normal();
    return std::clamp(100.0 - 0.8 * age_years + eps, 0.0, 100.0);
}

std::vector<double> advance_month(std::span<const double> condition, std::span<const double> decay,
                                  const Adjacency& adjacency, double kappa, double noise_sd, Rng& rng) {
    const std::size_t n = condition.size();
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
        double coupling = 0.0;
        const auto nb = adjacency.neighbors(i);
        if (!nb.empty()) {
            double sum = 0.0;
            for (auto j : nb) {
                sum += condition[static_cast<std::size_t>(j)];
            }
            coupling = kappa * (sum / static_cast<double>(nb.size()) - condition[i]);
        }
        const double eps = noise_sd * rng.normal();
        next[i] = std::clamp(condition[i] - decay[i] + coupling + eps, 0.0, 100.0);
    }
    return next;
}

Adjacency link_adjacency(std::span<const SegmentRecord> segments, std::span<const ConnectivityRecord> links) {
    std::unordered_map<std::int64_t, std::int32_t> index;
    std::unordered_set<std::int64_t> known;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        index.emplace(segments[i].segment_id, static_cast<std::int32_t>(i));
        known.insert(segments[i].segment_id);
    }
    const auto directed = symmetrize(clean_connectivity(links, known).records);
    EdgeIndex edges;
    for (const auto& e : directed) {
        edges.source.push_back(index.at(e.from_id));
        edges.target.push_back(index.at(e.to_id));
        edges.weight.push_back(e.weight);
    }
    return Adjacency::from_edges(segments.size(), edges);
}

}  // namespace pavetwin
