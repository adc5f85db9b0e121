#include "aloha_noma/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aloha_noma/error.hpp"
#include "aloha_noma/random.hpp"
#include "aloha_noma/stats.hpp"

namespace aloha_noma::sim {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

void SicModel::validate() const
{
    if (degree < 1)
        throw InvalidArgument("sic.degree must be >= 1");
    if (mode == SicMode::PowerAware) {
        if (!std::isfinite(captureThresholdDb))
            throw InvalidArgument("sic.captureThresholdDb must be finite in PowerAware mode");
        if (!std::isfinite(noiseFloorDbm))
            throw InvalidArgument("sic.noiseFloorDbm must be finite in PowerAware mode");
    }
}

void SimConfig::validate() const
{
    if (!std::isfinite(offeredLoadG) || offeredLoadG < 0.0)
        throw InvalidArgument("offeredLoadG must be finite and >= 0");
    if (!positive_finite(packetDuration))
        throw InvalidArgument("packetDuration must be positive");
    if (!positive_finite(horizon))
        throw InvalidArgument("horizon must be positive");
    if (!std::isfinite(warmup) || warmup < 0.0 || warmup >= horizon)
        throw InvalidArgument("warmup must satisfy 0 <= warmup < horizon");
    if (horizon < 100.0 * packetDuration)
        throw InvalidArgument("horizon must be at least 100 packet durations");
    if (batches < 20)
        throw InvalidArgument("batches must be >= 20");
    if (!std::isfinite(power.basePowerDbm))
        throw InvalidArgument("power.basePowerDbm must be finite");
    if (!std::isfinite(power.shadowingSigmaDb) || power.shadowingSigmaDb < 0.0)
        throw InvalidArgument("power.shadowingSigmaDb must be >= 0");
    sic.validate();
}

std::vector<Transmission> generate_traffic(const SimConfig& config)
{
    config.validate();
    std::vector<Transmission> traffic;
    if (config.offeredLoadG == 0.0)
        return traffic;

    const double rate = config.offeredLoadG / config.packetDuration;
    traffic.reserve(static_cast<std::size_t>(rate * config.horizon * 1.01) + 16);

    // Separate streams keep the arrival instants independent of the power model.
    Rng arrivals(derive_seed(config.seed, 0));
    Rng shadowing(derive_seed(config.seed, 1));

    int id = 0;
    for (double t = arrivals.exponential(rate); t < config.horizon; t += arrivals.exponential(rate)) {
        double power = config.power.basePowerDbm;
        if (config.power.shadowingSigmaDb > 0.0)
            power += shadowing.normal(0.0, config.power.shadowingSigmaDb);
        traffic.push_back({id++, t, config.packetDuration, power});
    }
    return traffic;
}

int overlap_count(const Transmission& tx, std::span<const Transmission> all)
{
    double maxDuration = 0.0;
    for (const auto& t : all)
        maxDuration = std::max(maxDuration, t.duration);

    const double end = tx.end_time();
    auto upper = std::partition_point(all.begin(), all.end(),
                                      [&](const Transmission& t) { return t.startTime < end; });
    int count = 0;
    for (auto it = upper; it != all.begin();) {
        --it;
        if (it->startTime <= tx.startTime - maxDuration)
            break;
        if (it->end_time() > tx.startTime)
            ++count;
    }
    return count;
}

std::vector<int> overlap_counts(std::span<const Transmission> all)
{
    // |{j : s_j < e_i and e_j > s_i}| = |{j : s_j < e_i}| - |{j : e_j <= s_i}|,
    // the second set being contained in the first.
    std::vector<double> ends(all.size());
    std::transform(all.begin(), all.end(), ends.begin(), [](const Transmission& t) { return t.end_time(); });
    std::sort(ends.begin(), ends.end());

    std::vector<int> counts(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double s = all[i].startTime;
        const double e = all[i].end_time();
        const auto startedBefore = std::partition_point(all.begin(), all.end(),
                                                        [&](const Transmission& t) { return t.startTime < e; }) -
                                   all.begin();
        const auto finishedBefore = std::upper_bound(ends.begin(), ends.end(), s) - ends.begin();
        counts[i] = static_cast<int>(startedBefore - finishedBefore);
    }
    return counts;
}

std::vector<Cluster> overlap_clusters(std::span<const Transmission> all)
{
    std::vector<Cluster> clusters;
    double reach = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (clusters.empty() || all[i].startTime >= reach) {
            clusters.push_back({i, i + 1});
            reach = all[i].end_time();
        } else {
            clusters.back().last = i + 1;
            reach = std::max(reach, all[i].end_time());
        }
    }
    return clusters;
}

std::vector<bool> resolve_sic(std::span<const Transmission> all, const SicModel& sic)
{
    sic.validate();
    const auto counts = overlap_counts(all);
    std::vector<bool> success(all.size(), false);

    if (sic.mode == SicMode::Ideal) {
        for (std::size_t i = 0; i < all.size(); ++i)
            success[i] = counts[i] <= sic.degree;
        return success;
    }

    const double noise = dbm_to_mw(sic.noiseFloorDbm);
    const double threshold = dbm_to_mw(sic.captureThresholdDb); // dB ratio, same conversion

    std::vector<std::size_t> order;
    for (const auto& cluster : overlap_clusters(all)) {
        order.resize(cluster.last - cluster.first);
        std::iota(order.begin(), order.end(), cluster.first);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return all[a].rxPowerDbm > all[b].rxPowerDbm;
        });

        double remaining = 0.0;
        for (std::size_t idx : order)
            remaining += dbm_to_mw(all[idx].rxPowerDbm);

        int decoded = 0;
        for (std::size_t idx : order) {
            if (decoded >= sic.degree || counts[idx] > sic.degree)
                break;
            const double signal = dbm_to_mw(all[idx].rxPowerDbm);
            const double interference = std::max(0.0, remaining - signal);
            if (signal < threshold * (interference + noise))
                break;
            success[idx] = true;
            ++decoded;
            remaining = interference;
        }
    }
    return success;
}

SimStats run_simulation(const SimConfig& config)
{
    config.validate();

    // Traffic runs one packet duration past the horizon so packets near the
    // end see the same interference as the rest.
    SimConfig extended = config;
    extended.horizon = config.horizon + config.packetDuration;
    const auto traffic = generate_traffic(extended);
    const auto success = resolve_sic(traffic, config.sic);

    const double span = config.horizon - config.warmup;
    const double batchLength = span / config.batches;
    std::vector<double> batchSuccesses(static_cast<std::size_t>(config.batches), 0.0);

    SimStats stats;
    stats.batches = config.batches;
    double busyTime = 0.0;
    for (std::size_t i = 0; i < traffic.size(); ++i) {
        const auto& tx = traffic[i];
        const double overlapStart = std::max(tx.startTime, config.warmup);
        const double overlapEnd = std::min(tx.end_time(), config.horizon);
        if (overlapEnd > overlapStart)
            busyTime += overlapEnd - overlapStart;

        if (tx.startTime < config.warmup || tx.startTime >= config.horizon)
            continue;
        ++stats.offered;
        if (success[i]) {
            ++stats.succeeded;
            auto b = static_cast<std::size_t>((tx.startTime - config.warmup) / batchLength);
            batchSuccesses[std::min(b, batchSuccesses.size() - 1)] += 1.0;
        }
    }

    if (stats.offered == 0)
        throw DegenerateStatistics("no transmissions offered inside the measurement span");

    std::vector<double> batchThroughput(batchSuccesses.size());
    for (std::size_t b = 0; b < batchSuccesses.size(); ++b)
        batchThroughput[b] = batchSuccesses[b] * config.packetDuration / batchLength;
    const auto ci = mean_confidence(batchThroughput, 0.95);

    stats.normalizedThroughput = static_cast<double>(stats.succeeded) * config.packetDuration / span;
    stats.confidenceHalfWidth = ci.halfWidth;
    stats.meanConcurrency = busyTime / span;
    return stats;
}

} // namespace aloha_noma::sim
