#pragma once

#include "pavetwin/graph.hpp"
#include "pavetwin/rng.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace pavetwin {

// Monthly deterioration model shared by the data generator and the twin:
//
//   c(t+1) = clamp(c(t) - alpha*age/40 - beta*log10(traffic)/5 - gamma[material]
//                  + kappa*(mean_{j in N(i)} c_j(t) - c_i(t)) + eps,  0, 100)
//
// with eps ~ Normal(0, noise_sd^2) drawn once per segment per month in index order.

struct DecayCoefficients {
    double alpha_age = 0.6;
    double beta_traffic = 0.5;
    std::map<std::string, double> gamma_material{{"asphalt", 0.35}, {"composite", 0.25}, {"concrete", 0.15}};
    // Used for materials absent from gamma_material.
    double gamma_default = 0.25;

    static DecayCoefficients zero() { return {0.0, 0.0, {}, 0.0}; }
};

struct DynamicsConfig {
    DecayCoefficients decay;
    double kappa = 0.3;
    double noise_sd = 1.5;

    /// Throws ConfigError on negative or non-finite values.
    void validate() const;
};

/// Deterministic part of the monthly loss in PCI units (traffic below 1 veh/day counts as 1).
double monthly_decay(const DecayCoefficients& decay, double age_years, double traffic_volume,
                     const std::string& material);

/// clamp(100 - 0.8 * age + eps, 0, 100).
double initial_condition(double age_years, double noise_sd, Rng& rng);

/// One synchronous month of the recurrence over all nodes. `decay` is the
/// per-node monthly_decay; neighbor means use the incoming lists of `adjacency`.
std::vector<double> advance_month(std::span<const double> condition, std::span<const double> decay,
                                  const Adjacency& adjacency, double kappa, double noise_sd, Rng& rng);

/// Undirected neighbor structure over segment positions from raw links
/// (unknown ids, loops and repeats are ignored).
Adjacency link_adjacency(std::span<const SegmentRecord> segments, std::span<const ConnectivityRecord> links);

}  // namespace pavetwin
