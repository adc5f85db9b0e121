#include "aloha_noma/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aloha_noma/analytic.hpp"
#include "aloha_noma/config.hpp"
#include "aloha_noma/error.hpp"
#include "aloha_noma/estimator.hpp"
#include "aloha_noma/protocol.hpp"
#include "aloha_noma/simcore.hpp"

namespace aloha_noma::cli {

using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 1;

struct CommonOptions
{
    std::optional<std::uint64_t> seed;
    std::string out;
    bool noTimestamp = false;
    int replications = 1;
};

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string join_ids(const std::vector<int>& ids)
{
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i)
            s += ';';
        s += std::to_string(ids[i]);
    }
    return s;
}

// Collects one command's CSV and summary and writes them once the command
// has finished computing.
class Emitter
{
  public:
    Emitter(const CommonOptions& opts, std::ostream& out, std::ostream& err, std::string command)
        : opts_(opts), out_(out), err_(err)
    {
        summary_["command"] = std::move(command);
        if (!opts_.noTimestamp)
            summary_["generated"] = utc_timestamp();
    }

    std::ostringstream& csv() { return csv_; }
    json& summary() { return summary_; }

    // With `append`, rows are added to an existing non-empty file without
    // repeating the comment and header lines.
    void write(const std::string& header, bool append = false)
    {
        const std::string body = csv_.str();
        if (opts_.out.empty()) {
            write_preamble(out_, header);
            out_ << body;
            err_ << summary_.dump() << '\n';
            return;
        }

        const bool existing = append && std::filesystem::exists(opts_.out) &&
                              std::filesystem::file_size(opts_.out) > 0;
        std::ofstream file(opts_.out, existing ? std::ios::app : std::ios::trunc);
        if (!file)
            throw std::runtime_error("cannot open " + opts_.out + " for writing");
        if (!existing)
            write_preamble(file, header);
        file << body;
        summary_["csv"] = opts_.out;
        out_ << summary_.dump() << '\n';
    }

  private:
    void write_preamble(std::ostream& os, const std::string& header) const
    {
        if (!opts_.noTimestamp)
            os << "# generated " << summary_.at("generated").get<std::string>() << '\n';
        os << header << '\n';
    }

    const CommonOptions& opts_;
    std::ostream& out_;
    std::ostream& err_;
    std::ostringstream csv_;
    json summary_;
};

void add_common(CLI::App* sub, CommonOptions& opts, bool replications)
{
    sub->add_option("--seed", opts.seed, "Base random seed (overrides the config file)");
    sub->add_option("--out", opts.out, "CSV output path (default: standard output)");
    sub->add_flag("--no-timestamp", opts.noTimestamp, "Omit the generated-at line and summary field");
    if (replications) {
        sub->add_option("--replications", opts.replications,
                        "Independent replications; replication r uses seed base + r")
            ->check(CLI::PositiveNumber);
    }
}

// ---------------------------------------------------------------------------

int cmd_analytic_max(int nMax, double tol, const CommonOptions& opts, std::ostream& out, std::ostream& err)
{
    if (nMax < 1)
        throw ConfigError("n_max", "must be >= 1");
    if (!(tol > 0.0 && tol <= 1e-3))
        throw ConfigError("tol", "must lie in (0, 1e-3]");

    std::vector<analytic::MaxThroughputResult> rows;
    rows.reserve(static_cast<std::size_t>(nMax));
    for (int n = 1; n <= nMax; ++n)
        rows.push_back(analytic::max_throughput(analytic::SicDegree{n}, tol));

    bool superlinear = true;
    for (std::size_t k = 2; k < rows.size(); ++k) {
        if (rows[k].sMax - rows[k - 1].sMax < rows[k - 1].sMax - rows[k - 2].sMax)
            superlinear = false;
    }

    Emitter emit(opts, out, err, "analytic-max");
    for (const auto& r : rows)
        emit.csv() << r.degree << ',' << num(r.gStar) << ',' << num(r.sMax) << ','
                   << num(r.derivativeResidual) << '\n';
    auto& s = emit.summary();
    s["n_max"] = nMax;
    s["tol"] = tol;
    s["g_star"] = rows.back().gStar;
    s["s_max"] = rows.back().sMax;
    s["superlinear"] = superlinear;
    emit.write("N,G_star,S_max,deriv_residual");
    return 0;
}

int cmd_analytic_curve(int degree, double gMin, double gMax, int points, const CommonOptions& opts,
                       std::ostream& out, std::ostream& err)
{
    if (degree < 1)
        throw ConfigError("degree", "must be >= 1");
    if (!std::isfinite(gMin) || gMin < 0.0)
        throw ConfigError("g-min", "must be finite and >= 0");
    if (!std::isfinite(gMax) || !(gMin < gMax))
        throw ConfigError("g-max", "must be finite and greater than g-min");
    if (points < 2)
        throw ConfigError("points", "must be >= 2");

    std::vector<double> grid(static_cast<std::size_t>(points));
    const double step = (gMax - gMin) / (points - 1);
    for (int k = 0; k < points; ++k)
        grid[static_cast<std::size_t>(k)] = k + 1 == points ? gMax : gMin + k * step;
    const auto curve = analytic::throughput_curve(analytic::SicDegree{degree}, grid);

    std::size_t peak = 0;
    int signChanges = 0;
    int prevSign = 0;
    for (std::size_t k = 0; k < curve.points.size(); ++k) {
        if (curve.points[k].S > curve.points[peak].S)
            peak = k;
        if (k > 0) {
            const double d = curve.points[k].S - curve.points[k - 1].S;
            const int sgn = (d > 0) - (d < 0);
            if (sgn != 0 && prevSign != 0 && sgn != prevSign)
                ++signChanges;
            if (sgn != 0)
                prevSign = sgn;
        }
    }

    Emitter emit(opts, out, err, "analytic-curve");
    for (const auto& p : curve.points)
        emit.csv() << num(p.G) << ',' << num(p.S) << '\n';
    auto& s = emit.summary();
    s["degree"] = degree;
    s["points"] = points;
    s["peak_g"] = curve.points[peak].G;
    s["peak_s"] = curve.points[peak].S;
    s["single_peak"] = signChanges <= 1;
    emit.write("G,S");
    return 0;
}

std::string mode_name(sim::SicMode m) { return m == sim::SicMode::Ideal ? "Ideal" : "PowerAware"; }

int cmd_simulate(const std::string& path, const CommonOptions& opts, std::ostream& out, std::ostream& err)
{
    const auto base = parse_sim_config(load_json_file(path));
    const std::uint64_t baseSeed = opts.seed.value_or(base.seed);
    const double analyticS =
        analytic::throughput(analytic::OfferedLoad{base.offeredLoadG}, analytic::SicDegree{base.sic.degree});

    struct Record
    {
        std::uint64_t seed;
        std::optional<sim::SimStats> stats; // empty when degenerate
    };

    std::vector<std::future<Record>> jobs;
    for (int r = 0; r < opts.replications; ++r) {
        auto cfg = base;
        cfg.seed = baseSeed + static_cast<std::uint64_t>(r);
        jobs.push_back(std::async(std::launch::async, [cfg] {
            try {
                return Record{cfg.seed, sim::run_simulation(cfg)};
            } catch (const DegenerateStatistics&) {
                return Record{cfg.seed, std::nullopt};
            }
        }));
    }

    Emitter emit(opts, out, err, "simulate");
    json records = json::array();
    RunningStats tput;
    for (int r = 0; r < opts.replications; ++r) {
        const auto rec = jobs[static_cast<std::size_t>(r)].get();
        json j{{"replication", r}, {"seed", rec.seed}};
        auto& row = emit.csv();
        row << r << ',' << rec.seed << ',' << num(base.offeredLoadG) << ',' << base.sic.degree << ','
            << mode_name(base.sic.mode) << ',';
        if (rec.stats) {
            const auto& st = *rec.stats;
            const double ratio = analyticS > 0.0 ? st.normalizedThroughput / analyticS : 0.0;
            row << st.offered << ',' << st.succeeded << ',' << num(st.normalizedThroughput) << ','
                << num(st.confidenceHalfWidth) << ',' << num(st.meanConcurrency) << ',' << num(analyticS)
                << ',' << num(ratio) << ",ok\n";
            j["status"] = "ok";
            j["offered"] = st.offered;
            j["succeeded"] = st.succeeded;
            j["throughput"] = st.normalizedThroughput;
            j["ci_half_width"] = st.confidenceHalfWidth;
            j["mean_concurrency"] = st.meanConcurrency;
            j["ratio_to_analytic"] = ratio;
            tput.add(st.normalizedThroughput);
        } else {
            row << "0,0,0,0,0," << num(analyticS) << ",0,degenerate\n";
            j["status"] = "degenerate";
        }
        records.push_back(std::move(j));
    }

    auto& s = emit.summary();
    s["config"] = path;
    s["offeredLoadG"] = base.offeredLoadG;
    s["degree"] = base.sic.degree;
    s["mode"] = mode_name(base.sic.mode);
    s["seed_base"] = baseSeed;
    s["seed_rule"] = "replication r uses seed_base + r";
    s["replications"] = opts.replications;
    s["analytic_throughput"] = analyticS;
    if (tput.count() > 0) {
        s["mean_throughput"] = tput.mean();
        s["ratio_to_analytic"] = analyticS > 0.0 ? tput.mean() / analyticS : 0.0;
    }
    s["records"] = std::move(records);
    emit.write("replication,seed,offeredLoadG,degree,mode,offered,succeeded,throughput,ci_half_width,"
               "mean_concurrency,analytic,ratio,status",
               /*append=*/true);
    return 0;
}

json ci_json(const RunningStats& rs)
{
    const auto ci = rs.confidence(0.95);
    return {{"mean", ci.mean}, {"ci_half_width", ci.halfWidth}};
}

int cmd_frame_session(const std::string& path, const std::string& tracePath, const CommonOptions& opts,
                      std::ostream& out, std::ostream& err)
{
    const auto base = parse_session_config(load_json_file(path));
    const std::uint64_t baseSeed = opts.seed.value_or(base.seed);
    const auto& sched = base.context.schedule;
    const bool overheadWarning = sched.overhead_dominated();
    if (overheadWarning) {
        err << "warning: control phases (" << num(sched.overhead()) << " s) are not shorter than the payload ("
            << num(sched.payload) << " s); effective throughput is at most half of raw\n";
    }

    struct Run
    {
        protocol::SessionResult result;
        protocol::FrameTrace trace;
    };
    const bool wantTrace = !tracePath.empty();
    std::vector<std::future<Run>> jobs;
    for (int r = 0; r < opts.replications; ++r) {
        auto cfg = base;
        cfg.seed = baseSeed + static_cast<std::uint64_t>(r);
        jobs.push_back(std::async(std::launch::async, [cfg, wantTrace] {
            Run run;
            run.result = protocol::run_session(cfg, wantTrace ? &run.trace : nullptr);
            return run;
        }));
    }

    Emitter emit(opts, out, err, "frame-session");
    std::ostringstream trace;
    protocol::SessionStats total;
    for (int r = 0; r < opts.replications; ++r) {
        const auto run = jobs[static_cast<std::size_t>(r)].get();
        const auto seed = baseSeed + static_cast<std::uint64_t>(r);
        for (std::size_t f = 0; f < run.result.frames.size(); ++f) {
            const auto& fr = run.result.frames[f];
            emit.csv() << r << ',' << seed << ',' << f << ',' << fr.trueActiveCount << ',' << fr.estimatedCount
                       << ',' << fr.detectedDeviceIds.size() << ',' << fr.payloadSuccesses << ','
                       << fr.sicDegreeUsed << ',' << (fr.degreeCapped ? 1 : 0) << ',' << num(fr.rawThroughput)
                       << ',' << num(fr.effectiveThroughput) << '\n';
        }
        for (const auto& ev : run.trace) {
            trace << r << ',' << ev.frame << ',' << protocol::phase_name(ev.phase) << ',' << num(ev.startTime)
                  << ',' << num(ev.endTime) << ',' << join_ids(ev.deviceIds) << '\n';
        }
        const auto& st = run.result.stats;
        total.frames += st.frames;
        total.active.merge(st.active);
        total.estimated.merge(st.estimated);
        total.absEstimationError.merge(st.absEstimationError);
        total.successes.merge(st.successes);
        total.raw.merge(st.raw);
        total.effective.merge(st.effective);
        total.capEvents += st.capEvents;
    }

    if (wantTrace) {
        std::ofstream tf(tracePath, std::ios::trunc);
        if (!tf)
            throw std::runtime_error("cannot open " + tracePath + " for writing");
        tf << "replication,frame,phase,start,end,device_ids\n" << trace.str();
    }

    auto& s = emit.summary();
    s["config"] = path;
    s["seed_base"] = baseSeed;
    s["seed_rule"] = "replication r uses seed_base + r";
    s["replications"] = opts.replications;
    s["frames"] = total.frames;
    s["devices"] = base.deviceCount;
    s["active_per_frame"] = ci_json(total.active);
    s["estimated_per_frame"] = ci_json(total.estimated);
    s["mean_abs_estimation_error"] = total.absEstimationError.mean();
    s["successes_per_frame"] = ci_json(total.successes);
    s["raw_throughput"] = ci_json(total.raw);
    s["effective_throughput"] = ci_json(total.effective);
    s["efficiency"] = sched.payload / sched.total();
    s["cap_events"] = total.capEvents;
    s["overhead_warning"] = overheadWarning;
    emit.write("replication,seed,frame,active,estimated,detected,successes,sic_degree,capped,raw,effective");
    return 0;
}

int cmd_estimator_bench(const std::string& path, const CommonOptions& opts, std::ostream& out, std::ostream& err)
{
    auto cfg = parse_bench_config(load_json_file(path));
    if (opts.seed)
        cfg.seed = *opts.seed;

    Emitter emit(opts, out, err, "estimator-bench");
    json rows = json::array();
    std::uint64_t rowIndex = 0;
    for (int m : cfg.M) {
        for (double alpha : cfg.alpha) {
            for (double snr : cfg.snr) {
                estimator::HypothesisConfig hc;
                hc.M = m;
                hc.alpha = alpha;
                hc.noiseSigma = 1.0;
                hc.meanSignal = snr > 0.0 ? snr : 1.0; // the bench draws statistics itself

                const int active = std::max(1, static_cast<int>(std::lround(cfg.activeFraction * m)));
                Rng rng(derive_seed(cfg.seed, rowIndex++));
                std::vector<double> stats(static_cast<std::size_t>(m));

                int familyErrors = 0;
                for (int t = 0; t < cfg.trials; ++t) {
                    for (auto& x : stats)
                        x = rng.normal(0.0, 1.0);
                    if (estimator::estimate_active_count(stats, hc).estimatedCount > 0)
                        ++familyErrors;
                }

                long long truePositives = 0;
                double absError = 0.0;
                for (int t = 0; t < cfg.trials; ++t) {
                    for (int i = 0; i < m; ++i)
                        stats[static_cast<std::size_t>(i)] = rng.normal(i < active ? snr : 0.0, 1.0);
                    const auto o = estimator::estimate_active_count(stats, hc);
                    for (int idx : o.rejected)
                        truePositives += idx < active;
                    absError += std::abs(o.estimatedCount - active);
                }

                const double fwer = static_cast<double>(familyErrors) / cfg.trials;
                const double power = static_cast<double>(truePositives) / (static_cast<double>(active) * cfg.trials);
                const double mae = absError / cfg.trials;
                emit.csv() << m << ',' << num(alpha) << ',' << num(snr) << ',' << num(fwer) << ',' << num(power)
                           << ',' << num(mae) << '\n';
                rows.push_back({{"M", m},
                                {"alpha", alpha},
                                {"snr", snr},
                                {"threshold", estimator::bonferroni_threshold(alpha, m)},
                                {"active", active},
                                {"fwer", fwer},
                                {"power", power},
                                {"mean_abs_error", mae}});
            }
        }
    }

    auto& s = emit.summary();
    s["config"] = path;
    s["seed"] = cfg.seed;
    s["trials"] = cfg.trials;
    s["rows"] = std::move(rows);
    emit.write("M,alpha,snr,fwer,power,mean_abs_error");
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"ALOHA-NOMA throughput analysis, channel simulation and frame-protocol experiments",
                 "aloha-noma"};
    app.require_subcommand(1);

    CommonOptions opts;

    int nMax = 0;
    double tol = analytic::kDefaultRootTolerance;
    auto* amax = app.add_subcommand("analytic-max", "Throughput-maximizing load for N = 1..n_max");
    amax->add_option("n_max", nMax, "Largest SIC degree")->required();
    amax->add_option("--tol", tol, "Root bracket width");
    add_common(amax, opts, false);

    int degree = 1;
    double gMin = 0.0;
    double gMax = 0.0;
    int points = 0;
    auto* curve = app.add_subcommand("analytic-curve", "Throughput S(G) on a uniform load grid");
    curve->add_option("-N,--degree", degree, "SIC degree")->required();
    curve->add_option("--g-min", gMin, "Smallest offered load")->required();
    curve->add_option("--g-max", gMax, "Largest offered load")->required();
    curve->add_option("--points", points, "Grid size (>= 2)")->required();
    add_common(curve, opts, false);

    std::string configPath;
    auto* simulate = app.add_subcommand("simulate", "Event-level unslotted channel simulation");
    simulate->add_option("config", configPath, "JSON configuration")->required();
    add_common(simulate, opts, true);

    std::string tracePath;
    auto* session = app.add_subcommand("frame-session", "Run the five-phase frame protocol over many frames");
    session->add_option("config", configPath, "JSON configuration")->required();
    session->add_option("--trace", tracePath, "Write the per-phase event log to this CSV");
    add_common(session, opts, true);

    auto* bench = app.add_subcommand("estimator-bench", "FWER and detection power of the device-count test");
    bench->add_option("config", configPath, "JSON configuration")->required();
    add_common(bench, opts, false);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (amax->parsed())
            return cmd_analytic_max(nMax, tol, opts, out, err);
        if (curve->parsed())
            return cmd_analytic_curve(degree, gMin, gMax, points, opts, out, err);
        if (simulate->parsed())
            return cmd_simulate(configPath, opts, out, err);
        if (session->parsed())
            return cmd_frame_session(configPath, tracePath, opts, out, err);
        if (bench->parsed())
            return cmd_estimator_bench(configPath, opts, out, err);
    } catch (const ConfigError& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return kExitValidation;
    } catch (const BracketingError& e) {
        err << "error: optimizer failed at N=" << e.degree() << ": " << e.what() << '\n';
        return kExitRuntime;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}

} // namespace aloha_noma::cli
