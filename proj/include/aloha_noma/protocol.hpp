#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "aloha_noma/estimator.hpp"
#include "aloha_noma/random.hpp"
#include "aloha_noma/simcore.hpp"
#include "aloha_noma/stats.hpp"

namespace aloha_noma::protocol {

/// Durations of the five periodic phases. The frame layout does not depend
/// on how many devices are active.
struct FrameSchedule
{
    double beacon = 1.0;
    double estimation = 1.0;
    double broadcast = 1.0;
    double payload = 96.0;
    double ack = 1.0;

    void validate() const;
    double overhead() const { return beacon + estimation + broadcast + ack; }
    double total() const { return overhead() + payload; }
    // True when the control phases take at least as long as the payload.
    bool overhead_dominated() const { return overhead() >= payload; }
};

struct DeviceState
{
    int deviceId = 0;
    bool hasData = false;
    double txPowerDbm = 0.0; // persistent level; back-off applies per payload
    bool detectedByGateway = false;
    bool lastAckReceived = false;
};

struct BackoffPolicy
{
    double delta = 2.0;          // dB per back-off step
    double slightIncrease = 1.0; // dB added to undetected active devices

    void validate() const;
};

struct FrameContext
{
    FrameSchedule schedule;
    estimator::HypothesisConfig hypothesis;
    sim::SicModel sic; // degree is overwritten by the frame's estimate
    BackoffPolicy policy;
    int maxSicDegree = 0;           // 0 = no hardware cap
    double referencePowerDbm = 0.0; // power at which E_i = hypothesis E_i

    void validate() const;
};

struct FrameResult
{
    int estimatedCount = 0;
    int trueActiveCount = 0;
    int payloadSuccesses = 0;
    int sicDegreeUsed = 0;
    bool degreeCapped = false;
    std::vector<int> detectedDeviceIds; // ascending
    std::vector<int> ackedDeviceIds;    // ascending, subset of detected
    double rawThroughput = 0.0;         // successful payloads per payload duration
    double effectiveThroughput = 0.0;
};

enum class Phase
{
    Beacon,
    Estimation,
    Broadcast,
    Payload,
    Ack,
};

std::string_view phase_name(Phase phase);

/// One record per phase per frame. `deviceIds` lists the transmitters of the
/// estimation and payload phases, the detected set for the broadcast and the
/// acknowledged set for the ACK.
struct FrameEvent
{
    std::uint64_t frame = 0;
    Phase phase = Phase::Beacon;
    double startTime = 0.0;
    double endTime = 0.0;
    std::vector<int> deviceIds;
};

using FrameTrace = std::vector<FrameEvent>;

/// Uniform integer step n in {-N, ..., N}.
int draw_backoff_step(int estimatedN, Rng& rng);

/// current + n * delta for a fresh step n.
double power_backoff(double currentDbm, int estimatedN, const BackoffPolicy& policy, Rng& rng);

double effective_throughput(double raw, const FrameSchedule& schedule);

/// Runs one frame over `devices` (index i is hypothesis i) and updates their
/// state for the next frame. Appends phase records to `trace` when given.
FrameResult run_frame(std::vector<DeviceState>& devices,
                      const FrameContext& context,
                      std::uint64_t seed,
                      std::uint64_t frameIndex = 0,
                      FrameTrace* trace = nullptr);

struct SessionConfig
{
    int frameCount = 1;
    int deviceCount = 1;
    double activationProbability = 0.0; // per idle device per frame
    double initialPowerDbm = 0.0;
    bool retainUndelivered = true; // failed devices keep their packet
    FrameContext context;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SessionStats
{
    int frames = 0;
    RunningStats active;
    RunningStats estimated;
    RunningStats absEstimationError;
    RunningStats successes;
    RunningStats raw;
    RunningStats effective;
    int capEvents = 0;
};

struct SessionResult
{
    SessionStats stats;
    std::vector<FrameResult> frames;
    std::vector<DeviceState> finalDevices;
};

SessionResult run_session(const SessionConfig& config, FrameTrace* trace = nullptr);

} // namespace aloha_noma::protocol
