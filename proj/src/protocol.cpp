#include "aloha_noma/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aloha_noma/error.hpp"

namespace aloha_noma::protocol {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void emit(FrameTrace* trace, std::uint64_t frame, Phase phase, double start, double length,
          std::vector<int> ids)
{
    if (trace)
        trace->push_back({frame, phase, start, start + length, std::move(ids)});
}

} // namespace

std::string_view phase_name(Phase phase)
{
    switch (phase) {
    case Phase::Beacon: return "beacon";
    case Phase::Estimation: return "estimation";
    case Phase::Broadcast: return "broadcast";
    case Phase::Payload: return "payload";
    case Phase::Ack: return "ack";
    }
    return "unknown";
}

void FrameSchedule::validate() const
{
    if (!positive_finite(beacon))
        throw InvalidArgument("schedule.beacon must be positive");
    if (!positive_finite(estimation))
        throw InvalidArgument("schedule.estimation must be positive");
    if (!positive_finite(broadcast))
        throw InvalidArgument("schedule.broadcast must be positive");
    if (!positive_finite(payload))
        throw InvalidArgument("schedule.payload must be positive");
    if (!positive_finite(ack))
        throw InvalidArgument("schedule.ack must be positive");
}

void BackoffPolicy::validate() const
{
    if (!positive_finite(delta))
        throw InvalidArgument("backoff.delta must be positive");
    if (!positive_finite(slightIncrease))
        throw InvalidArgument("backoff.slightIncrease must be positive");
}

void FrameContext::validate() const
{
    schedule.validate();
    hypothesis.validate();
    sic.validate();
    policy.validate();
    if (maxSicDegree < 0)
        throw InvalidArgument("maxSicDegree must be >= 0");
    if (!std::isfinite(referencePowerDbm))
        throw InvalidArgument("referencePowerDbm must be finite");
}

void SessionConfig::validate() const
{
    if (frameCount < 1)
        throw InvalidArgument("frames must be >= 1");
    if (deviceCount < 1)
        throw InvalidArgument("devices must be >= 1");
    if (!(activationProbability >= 0.0 && activationProbability <= 1.0))
        throw InvalidArgument("activationProbability must lie in [0, 1]");
    if (!std::isfinite(initialPowerDbm))
        throw InvalidArgument("initialPowerDbm must be finite");
    context.validate();
    if (deviceCount > context.hypothesis.M)
        throw InvalidArgument("devices must not exceed hypothesis.M");
}

int draw_backoff_step(int estimatedN, Rng& rng)
{
    if (estimatedN < 1)
        throw InvalidArgument("back-off needs an estimated count >= 1");
    return static_cast<int>(rng.uniform_int(-estimatedN, estimatedN));
}

double power_backoff(double currentDbm, int estimatedN, const BackoffPolicy& policy, Rng& rng)
{
    return currentDbm + draw_backoff_step(estimatedN, rng) * policy.delta;
}

double effective_throughput(double raw, const FrameSchedule& schedule)
{
    if (!(raw >= 0.0))
        throw InvalidArgument("raw throughput must be >= 0");
    return raw * schedule.payload / schedule.total();
}

FrameResult run_frame(std::vector<DeviceState>& devices,
                      const FrameContext& context,
                      std::uint64_t seed,
                      std::uint64_t frameIndex,
                      FrameTrace* trace)
{
    context.validate();
    if (devices.empty())
        throw InvalidArgument("a frame needs at least one device");
    if (devices.size() > static_cast<std::size_t>(context.hypothesis.M))
        throw InvalidArgument("device count exceeds hypothesis.M");

    const auto& sched = context.schedule;
    const double frameStart = static_cast<double>(frameIndex) * sched.total();
    const double estimationStart = frameStart + sched.beacon;
    const double broadcastStart = estimationStart + sched.estimation;
    const double payloadStart = broadcastStart + sched.broadcast;
    const double ackStart = payloadStart + sched.payload;

    FrameResult result;

    // (1) beacon
    emit(trace, frameIndex, Phase::Beacon, frameStart, sched.beacon, {});

    // (2) dummies from every device holding data; the mean statistic scales
    // with the device's current transmit power.
    std::vector<int> activeIdx;
    std::vector<int> activeIds;
    auto hypothesis = context.hypothesis;
    hypothesis.perDeviceSignal.assign(static_cast<std::size_t>(hypothesis.M), 0.0);
    for (std::size_t i = 0; i < hypothesis.perDeviceSignal.size(); ++i) {
        double e = context.hypothesis.signal_of(static_cast<int>(i));
        if (i < devices.size())
            e *= sim::dbm_to_mw(devices[i].txPowerDbm - context.referencePowerDbm);
        hypothesis.perDeviceSignal[i] = e;
    }
    for (std::size_t i = 0; i < devices.size(); ++i) {
        if (devices[i].hasData) {
            activeIdx.push_back(static_cast<int>(i));
            activeIds.push_back(devices[i].deviceId);
        }
    }
    result.trueActiveCount = static_cast<int>(activeIdx.size());
    emit(trace, frameIndex, Phase::Estimation, estimationStart, sched.estimation, activeIds);

    const auto outcome =
        estimator::simulate_estimation_round(activeIdx, hypothesis, derive_seed(seed, 0));
    result.estimatedCount = outcome.estimatedCount;

    // A rejected hypothesis only maps to a device when one sits at that index
    // and actually sent a dummy; false alarms on empty slots have nobody to
    // broadcast to.
    std::vector<bool> detected(devices.size(), false);
    for (int idx : outcome.rejected) {
        const auto u = static_cast<std::size_t>(idx);
        if (u < devices.size() && devices[u].hasData)
            detected[u] = true;
    }

    // (3) broadcast and power adjustment
    Rng backoffRng(derive_seed(seed, 1));
    std::vector<sim::Transmission> payload;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        auto& dev = devices[i];
        dev.detectedByGateway = detected[i];
        if (detected[i]) {
            result.detectedDeviceIds.push_back(dev.deviceId);
            const double power =
                power_backoff(dev.txPowerDbm, result.estimatedCount, context.policy, backoffRng);
            payload.push_back({dev.deviceId, payloadStart, sched.payload, power});
        } else if (dev.hasData) {
            dev.txPowerDbm += context.policy.slightIncrease;
        }
    }
    std::sort(result.detectedDeviceIds.begin(), result.detectedDeviceIds.end());
    emit(trace, frameIndex, Phase::Broadcast, broadcastStart, sched.broadcast, result.detectedDeviceIds);

    // (4) payload, SIC degree following the estimate
    std::vector<int> payloadIds;
    for (const auto& tx : payload)
        payloadIds.push_back(tx.deviceId);
    emit(trace, frameIndex, Phase::Payload, payloadStart, sched.payload, payloadIds);

    int degree = result.estimatedCount;
    if (context.maxSicDegree > 0 && degree > context.maxSicDegree) {
        degree = context.maxSicDegree;
        result.degreeCapped = true;
    }
    result.sicDegreeUsed = degree;

    std::vector<bool> success(payload.size(), false);
    if (!payload.empty()) {
        sim::SicModel sic = context.sic;
        sic.degree = degree;
        success = sim::resolve_sic(payload, sic);
    }

    // (5) ACK
    for (auto& dev : devices)
        dev.lastAckReceived = false;
    for (std::size_t k = 0; k < payload.size(); ++k) {
        if (success[k])
            result.ackedDeviceIds.push_back(payload[k].deviceId);
    }
    std::sort(result.ackedDeviceIds.begin(), result.ackedDeviceIds.end());
    for (auto& dev : devices) {
        if (std::binary_search(result.ackedDeviceIds.begin(), result.ackedDeviceIds.end(), dev.deviceId)) {
            dev.lastAckReceived = true;
            dev.hasData = false;
        }
    }
    emit(trace, frameIndex, Phase::Ack, ackStart, sched.ack, result.ackedDeviceIds);

    result.payloadSuccesses = static_cast<int>(result.ackedDeviceIds.size());
    result.rawThroughput = static_cast<double>(result.payloadSuccesses);
    result.effectiveThroughput = effective_throughput(result.rawThroughput, sched);
    return result;
}

SessionResult run_session(const SessionConfig& config, FrameTrace* trace)
{
    config.validate();

    SessionResult session;
    auto& devices = session.finalDevices;
    devices.resize(static_cast<std::size_t>(config.deviceCount));
    for (int i = 0; i < config.deviceCount; ++i) {
        devices[static_cast<std::size_t>(i)].deviceId = i;
        devices[static_cast<std::size_t>(i)].txPowerDbm = config.initialPowerDbm;
    }

    Rng arrivals(derive_seed(config.seed, 0));
    auto& stats = session.stats;
    session.frames.reserve(static_cast<std::size_t>(config.frameCount));
    for (int f = 0; f < config.frameCount; ++f) {
        for (auto& dev : devices) {
            if (!config.retainUndelivered)
                dev.hasData = false;
            // One draw per device per frame keeps the stream aligned
            // regardless of which devices still hold data.
            const bool arrival = arrivals.bernoulli(config.activationProbability);
            dev.hasData = dev.hasData || arrival;
        }

        const auto frameSeed = derive_seed(config.seed, static_cast<std::uint64_t>(f) + 1);
        auto r = run_frame(devices, config.context, frameSeed, static_cast<std::uint64_t>(f), trace);

        stats.active.add(r.trueActiveCount);
        stats.estimated.add(r.estimatedCount);
        stats.absEstimationError.add(std::abs(r.estimatedCount - r.trueActiveCount));
        stats.successes.add(r.payloadSuccesses);
        stats.raw.add(r.rawThroughput);
        stats.effective.add(r.effectiveThroughput);
        if (r.degreeCapped)
            ++stats.capEvents;
        session.frames.push_back(std::move(r));
    }
    stats.frames = config.frameCount;
    return session;
}

} // namespace aloha_noma::protocol
