#include "aloha_noma/estimator.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "aloha_noma/error.hpp"
#include "aloha_noma/random.hpp"

namespace aloha_noma::estimator {

void HypothesisConfig::validate() const
{
    if (M < 1)
        throw InvalidArgument("M must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("alpha must lie in (0, 1)");
    if (!(meanSignal > 0.0) || !std::isfinite(meanSignal))
        throw InvalidArgument("meanSignal must be positive");
    if (!(noiseSigma > 0.0) || !std::isfinite(noiseSigma))
        throw InvalidArgument("noiseSigma must be positive");
    if (!perDeviceSignal.empty()) {
        if (perDeviceSignal.size() != static_cast<std::size_t>(M))
            throw InvalidArgument("perDeviceSignal must have M entries");
        for (double e : perDeviceSignal)
            if (!(e > 0.0) || !std::isfinite(e))
                throw InvalidArgument("perDeviceSignal entries must be positive");
    }
}

double prior_config_probability(int N, int M, double alpha)
{
    if (M < 1)
        throw InvalidArgument("M must be >= 1");
    if (N < 0 || N > M)
        throw InvalidArgument("device count N must lie in [0, M]");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidArgument("alpha must lie in [0, 1]");
    // std::pow(0, 0) is 1, which is the limit wanted at alpha = 0 or 1.
    return std::pow(1.0 - alpha, N) * std::pow(alpha, M - N);
}

double bonferroni_threshold(double alpha, int M)
{
    if (M < 1)
        throw InvalidArgument("M must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("alpha must lie in (0, 1)");
    return alpha / M;
}

double p_value_from_statistic(double x, double noiseSigma)
{
    if (!(noiseSigma > 0.0))
        throw InvalidArgument("noiseSigma must be positive");
    return 0.5 * std::erfc(x / (noiseSigma * std::numbers::sqrt2));
}

EstimationOutcome estimate_active_count(std::span<const double> statistics,
                                        const HypothesisConfig& config)
{
    config.validate();
    if (statistics.size() != static_cast<std::size_t>(config.M)) {
        throw InvalidArgument("expected " + std::to_string(config.M) + " statistics, got " +
                              std::to_string(statistics.size()));
    }

    const double threshold = bonferroni_threshold(config.alpha, config.M);
    EstimationOutcome out;
    out.pValues.reserve(statistics.size());
    for (std::size_t i = 0; i < statistics.size(); ++i) {
        const double p = p_value_from_statistic(statistics[i], config.noiseSigma);
        out.pValues.push_back(p);
        if (p <= threshold)
            out.rejected.push_back(static_cast<int>(i));
    }
    out.estimatedCount = static_cast<int>(out.rejected.size());
    return out;
}

EstimationOutcome simulate_estimation_round(std::span<const int> trueActive,
                                            const HypothesisConfig& config,
                                            std::uint64_t seed)
{
    config.validate();
    std::vector<bool> active(static_cast<std::size_t>(config.M), false);
    for (int i : trueActive) {
        if (i < 0 || i >= config.M)
            throw InvalidArgument("active device index " + std::to_string(i) + " outside [0, M)");
        active[static_cast<std::size_t>(i)] = true;
    }

    Rng rng(seed);
    std::vector<double> statistics(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
        const double mean = active[i] ? config.signal_of(static_cast<int>(i)) : 0.0;
        statistics[i] = rng.normal(mean, config.noiseSigma);
    }
    return estimate_active_count(statistics, config);
}

} // namespace aloha_noma::estimator
