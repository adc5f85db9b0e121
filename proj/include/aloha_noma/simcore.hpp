#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace aloha_noma::sim {

struct Transmission
{
    int deviceId = 0;
    double startTime = 0.0; // s
    double duration = 1.0;  // s
    double rxPowerDbm = 0.0;

    double end_time() const { return startTime + duration; }
};

enum class SicMode
{
    Ideal,
    PowerAware,
};

struct SicModel
{
    int degree = 1;
    SicMode mode = SicMode::Ideal;
    double captureThresholdDb = 0.0; // PowerAware only
    double noiseFloorDbm = -100.0;   // PowerAware only

    void validate() const;
};

/// Received power of generated traffic: base + optional log-normal shadowing.
struct PowerModel
{
    double basePowerDbm = 0.0;
    double shadowingSigmaDb = 0.0; // 0 disables shadowing
};

struct SimConfig
{
    double offeredLoadG = 0.5;
    double packetDuration = 1.0; // s
    double horizon = 1e6;        // s
    double warmup = 0.0;         // s
    SicModel sic;
    PowerModel power;
    std::uint64_t seed = 1;
    int batches = 50;

    // Throws InvalidArgument naming the offending field.
    void validate() const;
};

struct SimStats
{
    std::uint64_t offered = 0;
    std::uint64_t succeeded = 0;
    double normalizedThroughput = 0.0;
    double meanConcurrency = 0.0;
    double confidenceHalfWidth = 0.0; // 95 %, batch means
    int batches = 0;
};

/// Homogeneous Poisson arrivals of rate G/T over [0, horizon), sorted by
/// start time. Device ids are assigned in arrival order.
std::vector<Transmission> generate_traffic(const SimConfig& config);

/// Number of transmissions in `all` (tx included) whose half-open interval
/// intersects tx's. `all` must be sorted by start time and contain tx.
int overlap_count(const Transmission& tx, std::span<const Transmission> all);

/// overlap_count for every element in one sweep.
std::vector<int> overlap_counts(std::span<const Transmission> all);

/// Maximal groups of transitively overlapping transmissions, as index
/// ranges [first, last) into the sorted input.
struct Cluster
{
    std::size_t first = 0;
    std::size_t last = 0;
};
std::vector<Cluster> overlap_clusters(std::span<const Transmission> all);

/// Success flag per transmission.
///
/// Ideal: success iff overlap_count <= degree.
/// PowerAware: inside each cluster the strongest remaining signal is decoded
/// iff it is admissible under Ideal and its SINR against the rest of the
/// cluster plus noise reaches the capture threshold; it is then cancelled.
/// Decoding stops at the first failure or after `degree` successes.
std::vector<bool> resolve_sic(std::span<const Transmission> all, const SicModel& sic);

SimStats run_simulation(const SimConfig& config);

/// Linear-domain helpers shared by the power-aware receiver.
double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

} // namespace aloha_noma::sim
