#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace aloha_noma::estimator {

/// Parameters of the per-period device-count test.
///
/// Each of the M candidate devices has a test statistic that is
/// Normal(E_i, sigma^2) when the device is active and Normal(0, sigma^2)
/// otherwise. E_i defaults to meanSignal for every device; a non-empty
/// perDeviceSignal (length M) overrides it.
struct HypothesisConfig
{
    int M = 1;
    double alpha = 0.05;
    double meanSignal = 1.0;
    double noiseSigma = 1.0;
    std::vector<double> perDeviceSignal;

    // Throws InvalidArgument on any violated invariant.
    void validate() const;

    double signal_of(int device) const
    {
        return perDeviceSignal.empty() ? meanSignal
                                       : perDeviceSignal[static_cast<std::size_t>(device)];
    }
};

struct EstimationOutcome
{
    std::vector<double> pValues;
    std::vector<int> rejected; // ascending device indices
    int estimatedCount = 0;
};

/// (1 - alpha)^N * alpha^(M - N). alpha may be exactly 0 or 1, in which case
/// the limit is returned with 0^0 = 1.
double prior_config_probability(int N, int M, double alpha);

/// Per-hypothesis Bonferroni threshold alpha / M.
double bonferroni_threshold(double alpha, int M);

/// One-sided upper-tail p-value of x under Normal(0, sigma^2).
double p_value_from_statistic(double x, double noiseSigma);

/// Rejects "device i inactive" for every p_i <= alpha/M (inclusive).
EstimationOutcome estimate_active_count(std::span<const double> statistics,
                                        const HypothesisConfig& config);

/// Draws the M statistics for the given active set and runs the test.
/// Deterministic in seed.
EstimationOutcome simulate_estimation_round(std::span<const int> trueActive,
                                            const HypothesisConfig& config,
                                            std::uint64_t seed);

} // namespace aloha_noma::estimator
