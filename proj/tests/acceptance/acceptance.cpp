// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aloha_noma/analytic.hpp"
#include "aloha_noma/cli.hpp"
#include "aloha_noma/estimator.hpp"
#include "aloha_noma/protocol.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aloha_noma;

namespace {

const std::string kConfigs = ALOHA_CONFIG_DIR;

struct Verdict
{
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok)
            pass = false;
        if (!detail.empty())
            detail += "; ";
        detail += (ok ? "" : "!") + what;
    }
};

struct CliRun
{
    int code;
    std::string out;
    std::string err;
    double seconds;
};

CliRun run_cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = cli::run(args, out, err);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {code, out.str(), err.str(), dt};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string lines_last(const std::string& text)
{
    std::istringstream in(text);
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty())
            last = line;
    return last;
}

std::vector<std::vector<double>> csv_rows(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                row.push_back(NAN);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

fs::path scratch_dir()
{
    const auto dir = fs::temp_directory_path() / "aloha_noma_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------

Verdict analytic_maxima()
{
    Verdict v;
    const auto r = run_cli({"analytic-max", "5", "--no-timestamp"});
    v.require(r.code == 0, "exit 0");
    const auto rows = csv_rows(r.out);
    v.require(rows.size() == 5, "5 rows");
    if (rows.size() < 5)
        return v;
    auto check = [&](int n, double g, double gTol, double s, double sTol) {
        const auto& row = rows[static_cast<std::size_t>(n - 1)];
        if (g > 0)
            v.require(std::abs(row[1] - g) <= gTol, fmt("N=%g G*=%.6f", n, row[1]));
        v.require(std::abs(row[2] - s) <= sTol, fmt("N=%g S=%.6f", n, row[2]));
    };
    check(1, 0.500, 0.001, 0.184, 0.001);
    check(2, 0.809, 0.001, 0.420, 0.002);
    check(3, 1.1348, 0.001, 0.6856, 0.001);
    check(5, -1, 0, 1.27, 0.01);
    v.require(r.seconds < 1.0, fmt("%.3f s < 1 s", r.seconds));
    return v;
}

Verdict large_n()
{
    Verdict v;
    const auto r = run_cli({"analytic-max", "100", "--no-timestamp"});
    v.require(r.code == 0, "exit 0");
    const auto rows = csv_rows(r.out);
    v.require(rows.size() == 100, "100 rows");
    if (rows.size() != 100)
        return v;
    v.require(std::abs(rows[99][2] - 40.0) <= 2.0, fmt("S(100)=%.4f", rows[99][2]));

    // S(G) for N = 20 across the load range of the N <= 20 figure: one peak,
    // and the peak agrees with the optimizer's S*(20).
    const auto c = run_cli({"analytic-curve", "-N", "20", "--g-min", "0", "--g-max", "25", "--points", "2501",
                            "--no-timestamp"});
    const auto curve = csv_rows(c.out);
    int changes = 0, prev = 0;
    double peak = 0.0;
    for (std::size_t k = 1; k < curve.size(); ++k) {
        const double d = curve[k][1] - curve[k - 1][1];
        const int s = (d > 0) - (d < 0);
        if (s && prev && s != prev)
            ++changes;
        if (s)
            prev = s;
        peak = std::max(peak, curve[k][1]);
    }
    v.require(c.code == 0 && changes == 1, "S(G; 20) single peak");
    v.require(std::abs(peak - rows[19][2]) <= 1e-4, fmt("grid peak %.6f vs S*(20)=%.6f", peak, rows[19][2]));
    v.require(r.seconds + c.seconds < 5.0, fmt("%.3f s < 5 s", r.seconds + c.seconds));
    return v;
}

Verdict superlinear()
{
    Verdict v;
    std::vector<double> s;
    for (int n = 1; n <= 20; ++n)
        s.push_back(analytic::max_throughput(analytic::SicDegree{n}).sMax);
    int violations = 0;
    for (std::size_t k = 2; k < s.size(); ++k)
        violations += (s[k] - s[k - 1]) < (s[k - 1] - s[k - 2]);
    v.require(violations == 0, fmt("%g violations of non-decreasing increments over N=1..20", violations));
    return v;
}

Verdict sim_pure_aloha()
{
    Verdict v;
    const auto r = run_cli({"simulate", kConfigs + "/sim_pure_aloha.json", "--no-timestamp"});
    v.require(r.code == 0, "exit 0");
    const auto rows = csv_rows(r.out);
    if (rows.empty())
        return v;
    const double s = rows[0][7], hw = rows[0][8];
    const double exact = 0.5 * std::exp(-1.0);
    v.require(std::abs(s - exact) <= hw, fmt("S=%.5f within +/-%.5f of %.5f", s, hw, exact));
    v.require(hw < 0.002, fmt("half-width %.5f < 0.002", hw));
    v.require(rows[0][5] >= 4.5e5, "horizon >= 1e6 T");
    v.require(r.seconds < 30.0, fmt("%.2f s < 30 s", r.seconds));
    return v;
}

Verdict sim_sic2()
{
    Verdict v;
    const auto r = run_cli({"simulate", kConfigs + "/sim_sic2.json", "--no-timestamp"});
    v.require(r.code == 0, "exit 0");
    const auto summary = json::parse(lines_last(r.err));
    const double s = summary["mean_throughput"].get<double>();
    v.require(s >= 0.80 * 0.42 && s <= 1.20 * 0.42, fmt("S=%.5f in [0.336, 0.504]", s));
    v.require(summary.contains("ratio_to_analytic"), fmt("reported ratio %.5f", summary.value("ratio_to_analytic", 0.0)));
    return v;
}

Verdict derivative_consistency()
{
    Verdict v;
    std::mt19937_64 gen(123456789);
    std::uniform_real_distribution<double> load(0.0, 10.0);
    std::uniform_int_distribution<int> degree(1, 50);
    int failures = 0;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double g = load(gen);
        const analytic::SicDegree n{degree(gen)};
        const double d = analytic::throughput_derivative(analytic::OfferedLoad{g}, n);
        const double h = 1e-5 * std::max(1.0, g);
        const double lo = std::max(0.0, g - h);
        const double fd = (analytic::throughput(analytic::OfferedLoad{g + h}, n) -
                           analytic::throughput(analytic::OfferedLoad{lo}, n)) /
                          (g + h - lo);
        const double err = std::abs(d - fd);
        const double allowed = std::max(1e-8, 1e-6 * std::abs(d));
        worst = std::max(worst, err / allowed);
        failures += err > allowed;
    }
    v.require(failures == 0, fmt("%g failures of 1000, worst err/allowed=%.3f", failures, worst));
    return v;
}

Verdict poisson_normalization()
{
    Verdict v;
    for (double twoG : {0.1, 1.0, 10.0, 100.0}) {
        double sum = 0.0;
        for (int i = 0;; ++i) {
            const double p = analytic::poisson_arrival_pmf(i, twoG);
            sum += p;
            if (i > twoG && p < 1e-18)
                break;
        }
        v.require(std::abs(sum - 1.0) <= 1e-12, fmt("2G=%g |sum-1|=%.2e", twoG, std::abs(sum - 1.0)));
    }
    return v;
}

Verdict estimator_fwer_and_accuracy()
{
    Verdict v;
    estimator::HypothesisConfig cfg;
    cfg.M = 50;
    cfg.alpha = 0.05;
    cfg.meanSignal = 5.0;
    cfg.noiseSigma = 1.0;

    const int nullTrials = 100000;
    int any = 0;
    for (int t = 0; t < nullTrials; ++t)
        any += estimator::simulate_estimation_round({}, cfg, derive_seed(1, t)).estimatedCount > 0;
    const double fwer = static_cast<double>(any) / nullTrials;
    const double bound = 0.05 + 3 * std::sqrt(0.05 * 0.95 / nullTrials);
    v.require(fwer <= bound, fmt("FWER=%.5f <= %.5f", fwer, bound));

    std::vector<int> active(10);
    std::iota(active.begin(), active.end(), 0);
    const int trials = 10000;
    double sum = 0.0;
    for (int t = 0; t < trials; ++t)
        sum += estimator::simulate_estimation_round(active, cfg, derive_seed(2, t)).estimatedCount;
    const double mean = sum / trials;
    v.require(std::abs(mean - 10.0) <= 0.1, fmt("mean estimate %.4f vs 10 +/- 0.1", mean));
    return v;
}

Verdict protocol_invariants()
{
    Verdict v;
    Rng rng(9090);
    int ackViolations = 0, orderViolations = 0, powerViolations = 0;
    const int frames = 10000;
    for (int f = 0; f < frames; ++f) {
        const int n = static_cast<int>(rng.uniform_int(1, 40));
        protocol::FrameContext ctx;
        ctx.hypothesis.M = n + static_cast<int>(rng.uniform_int(0, 10));
        ctx.hypothesis.alpha = 0.01 + 0.1 * rng.uniform();
        ctx.hypothesis.meanSignal = 0.5 + 8.0 * rng.uniform();
        ctx.sic.mode = rng.bernoulli(0.5) ? sim::SicMode::Ideal : sim::SicMode::PowerAware;
        ctx.sic.captureThresholdDb = 3.0 * rng.uniform();
        ctx.sic.noiseFloorDbm = -60.0;
        ctx.maxSicDegree = rng.bernoulli(0.3) ? static_cast<int>(rng.uniform_int(1, 5)) : 0;

        std::vector<protocol::DeviceState> devices(static_cast<std::size_t>(n));
        std::vector<int> active;
        for (int i = 0; i < n; ++i) {
            auto& d = devices[static_cast<std::size_t>(i)];
            d.deviceId = 1000 - i; // ids unrelated to positions
            d.hasData = rng.bernoulli(0.5);
            d.txPowerDbm = -5.0 + 10.0 * rng.uniform();
            if (d.hasData)
                active.push_back(d.deviceId);
        }
        std::sort(active.begin(), active.end());
        const auto before = devices;
        protocol::FrameTrace trace;
        const auto r = protocol::run_frame(devices, ctx, rng.next_u64(), static_cast<std::uint64_t>(f), &trace);

        ackViolations += !std::includes(r.detectedDeviceIds.begin(), r.detectedDeviceIds.end(),
                                        r.ackedDeviceIds.begin(), r.ackedDeviceIds.end());
        ackViolations += !std::includes(active.begin(), active.end(), r.detectedDeviceIds.begin(),
                                        r.detectedDeviceIds.end());

        if (trace.size() != 5) {
            ++orderViolations;
        } else {
            for (std::size_t k = 0; k < 5; ++k) {
                orderViolations += trace[k].phase != static_cast<protocol::Phase>(k);
                if (k > 0)
                    orderViolations += !(trace[k].startTime > trace[k - 1].startTime &&
                                         trace[k].startTime >= trace[k - 1].endTime);
            }
            auto broadcast = trace[2].deviceIds;
            auto payload = trace[3].deviceIds;
            std::sort(broadcast.begin(), broadcast.end());
            std::sort(payload.begin(), payload.end());
            orderViolations += !std::includes(broadcast.begin(), broadcast.end(), payload.begin(), payload.end());
        }

        for (std::size_t i = 0; i < devices.size(); ++i) {
            const bool detected = std::binary_search(r.detectedDeviceIds.begin(), r.detectedDeviceIds.end(),
                                                     devices[i].deviceId);
            if (before[i].hasData && !detected)
                powerViolations += !(devices[i].txPowerDbm == before[i].txPowerDbm + ctx.policy.slightIncrease);
        }
    }
    v.require(ackViolations == 0, fmt("ACK soundness violations %g", ackViolations));
    v.require(orderViolations == 0, fmt("phase ordering violations %g", orderViolations));
    v.require(powerViolations == 0, fmt("power persistence violations %g", powerViolations));

    for (int n : {1, 3, 8}) {
        Rng b(static_cast<std::uint64_t>(n) * 31);
        const int draws = 100000;
        std::map<int, int> freq;
        const protocol::BackoffPolicy policy;
        for (int i = 0; i < draws; ++i)
            ++freq[static_cast<int>(std::lround((protocol::power_backoff(3.0, n, policy, b) - 3.0) / policy.delta))];
        const double p = 1.0 / (2 * n + 1);
        const double sigma = std::sqrt(draws * p * (1 - p));
        bool ok = freq.size() == static_cast<std::size_t>(2 * n + 1);
        for (const auto& [step, count] : freq)
            ok = ok && std::abs(step) <= n && std::abs(count - draws * p) <= 3 * sigma;
        v.require(ok, fmt("back-off N=%g uniform over %g values", n, 2 * n + 1));
    }
    return v;
}

Verdict determinism()
{
    Verdict v;
    const auto dir = scratch_dir();
    const std::vector<std::vector<std::string>> commands{
        {"analytic-max", "20"},
        {"analytic-curve", "-N", "5", "--g-min", "0", "--g-max", "8", "--points", "200"},
        {"simulate", kConfigs + "/sim_power_aware.json", "--replications", "3"},
        {"frame-session", kConfigs + "/session_power_aware.json", "--replications", "2", "--trace", "TRACE"},
        {"estimator-bench", kConfigs + "/bench_default.json"},
    };
    int idx = 0;
    for (const auto& base : commands) {
        std::string result[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto csv = dir / ("out_" + std::to_string(idx) + "_" + std::to_string(rep) + ".csv");
            const auto trace = dir / ("trace_" + std::to_string(idx) + "_" + std::to_string(rep) + ".csv");
            std::vector<std::string> args;
            for (const auto& a : base)
                args.push_back(a == "TRACE" ? trace.string() : a);
            args.insert(args.end(), {"--no-timestamp", "--seed", "2024", "--out", csv.string()});
            const auto r = run_cli(args);
            auto summary = r.code == 0 ? json::parse(r.out) : json{};
            summary.erase("csv");
            result[rep] = std::to_string(r.code) + slurp(csv) + (fs::exists(trace) ? slurp(trace) : "") +
                          summary.dump();
        }
        v.require(result[0] == result[1] && result[0].front() == '0', base[0] + " byte-identical");
        ++idx;
    }
    fs::remove_all(dir);
    return v;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"AC1  analytic maxima N=1,2,3,5", analytic_maxima},
        {"AC2  large-N maximum and N=20 curve", large_n},
        {"AC3  superlinear maxima N=1..20", superlinear},
        {"AC4  simulated pure ALOHA vs G e^{-2G}", sim_pure_aloha},
        {"AC5  simulated SIC(2) band at G=0.809", sim_sic2},
        {"AC6  derivative vs finite differences", derivative_consistency},
        {"AC7  Poisson normalization", poisson_normalization},
        {"AC8  estimator FWER and accuracy", estimator_fwer_and_accuracy},
        {"AC9  protocol invariants and back-off uniformity", protocol_invariants},
        {"AC10 command determinism", determinism},
    };

    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        failed += !v.pass;
        std::printf("[%s] %s  (%s)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
