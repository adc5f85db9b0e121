#include "aloha_noma/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "aloha_noma/error.hpp"

namespace aloha_noma::cli {

using nlohmann::json;

namespace {

std::string join_path(const std::string& prefix, const std::string& key)
{
    return prefix.empty() ? key : prefix + "." + key;
}

// Splits "<number> <unit>" and returns the number; unit goes to `unit`.
double split_quantity(const std::string& text, const std::string& field, std::string& unit)
{
    std::istringstream in(text);
    double v;
    if (!(in >> v))
        throw ConfigError(field, "expected '<number> <unit>', got '" + text + "'");
    in >> unit;
    std::string rest;
    if (in >> rest)
        throw ConfigError(field, "trailing text in '" + text + "'");
    return v;
}

// Reads keys of one JSON object and rejects any key left unread.
class ObjectReader
{
  public:
    ObjectReader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix))
    {
        if (!obj_.is_object())
            throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return join_path(prefix_, key); }

    double number(const std::string& key, double fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_number())
            throw ConfigError(path(key), "expected a number");
        return v->get<double>();
    }

    int integer(const std::string& key, int fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_number_integer())
            throw ConfigError(path(key), "expected an integer");
        return v->get<int>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
            throw ConfigError(path(key), "expected a non-negative integer");
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_boolean())
            throw ConfigError(path(key), "expected true or false");
        return v->get<bool>();
    }

    double time(const std::string& key, double fallback)
    {
        const json* v = find(key);
        return v ? parse_time(*v, path(key)) : fallback;
    }

    double level(const std::string& key, double fallback, const std::string& unit)
    {
        const json* v = find(key);
        return v ? parse_level(*v, path(key), unit) : fallback;
    }

    template <class T>
    std::vector<T> list(const std::string& key, std::vector<T> fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        if (v->is_number())
            return {v->get<T>()};
        if (!v->is_array() || v->empty())
            throw ConfigError(path(key), "expected a number or a non-empty array");
        std::vector<T> out;
        for (const auto& e : *v) {
            if (!e.is_number() || (std::is_integral_v<T> && !e.is_number_integer()))
                throw ConfigError(path(key), "array holds a non-numeric entry");
            out.push_back(e.get<T>());
        }
        return out;
    }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key()))
                throw ConfigError(path(it.key()), "unknown key");
        }
    }

  private:
    const json& obj_;
    std::string prefix_;
    std::set<std::string> seen_;
};

sim::SicModel read_sic(ObjectReader& parent, const std::string& key, sim::SicModel sic)
{
    const json* node = parent.find(key);
    if (!node)
        return sic;
    ObjectReader r(*node, parent.path(key));
    sic.degree = r.integer("degree", sic.degree);
    if (const json* mode = r.find("mode")) {
        const std::string m = mode->is_string() ? mode->get<std::string>() : "";
        if (m == "Ideal" || m == "ideal")
            sic.mode = sim::SicMode::Ideal;
        else if (m == "PowerAware" || m == "power-aware")
            sic.mode = sim::SicMode::PowerAware;
        else
            throw ConfigError(r.path("mode"), "expected \"Ideal\" or \"PowerAware\"");
    }
    sic.captureThresholdDb = r.level("captureThresholdDb", sic.captureThresholdDb, "dB");
    sic.noiseFloorDbm = r.level("noiseFloorDbm", sic.noiseFloorDbm, "dBm");
    r.finish();
    if (sic.degree < 1)
        throw ConfigError(r.path("degree"), "must be >= 1");
    return sic;
}

// Maps a library InvalidArgument whose message starts with a field name
// onto a ConfigError for that field.
template <class F>
void validate_as_config(F&& check, const std::string& prefix = "")
{
    try {
        check();
    } catch (const InvalidArgument& e) {
        std::string msg = e.what();
        const auto space = msg.find(' ');
        throw ConfigError(join_path(prefix, msg.substr(0, space)),
                          space == std::string::npos ? msg : msg.substr(space + 1));
    }
}

} // namespace

double parse_time(const json& value, const std::string& field)
{
    if (value.is_number())
        return value.get<double>();
    if (!value.is_string())
        throw ConfigError(field, "expected seconds as a number or '<value> <unit>'");
    std::string unit;
    const double v = split_quantity(value.get<std::string>(), field, unit);
    if (unit == "s" || unit.empty())
        return v;
    if (unit == "ms")
        return v * 1e-3;
    if (unit == "us")
        return v * 1e-6;
    if (unit == "ns")
        return v * 1e-9;
    throw ConfigError(field, "unknown time unit '" + unit + "'");
}

double parse_level(const json& value, const std::string& field, const std::string& unit)
{
    if (value.is_number())
        return value.get<double>();
    if (!value.is_string())
        throw ConfigError(field, "expected a number or '<value> " + unit + "'");
    std::string got;
    const double v = split_quantity(value.get<std::string>(), field, got);
    if (!got.empty() && got != unit)
        throw ConfigError(field, "expected unit " + unit + ", got '" + got + "'");
    return v;
}

sim::SimConfig parse_sim_config(const json& doc)
{
    ObjectReader r(doc, "");
    sim::SimConfig c;
    c.offeredLoadG = r.number("offeredLoadG", c.offeredLoadG);
    c.packetDuration = r.time("packetDuration", c.packetDuration);
    c.horizon = r.time("horizon", c.horizon);
    c.warmup = r.time("warmup", c.warmup);
    c.batches = r.integer("batches", c.batches);
    c.seed = r.seed("seed", c.seed);
    c.sic = read_sic(r, "sic", c.sic);
    if (const json* p = r.find("power")) {
        ObjectReader pr(*p, "power");
        c.power.basePowerDbm = pr.level("basePowerDbm", c.power.basePowerDbm, "dBm");
        c.power.shadowingSigmaDb = pr.level("shadowingSigmaDb", c.power.shadowingSigmaDb, "dB");
        pr.finish();
    }
    r.finish();
    validate_as_config([&] { c.validate(); });
    return c;
}

protocol::SessionConfig parse_session_config(const json& doc)
{
    ObjectReader r(doc, "");
    protocol::SessionConfig c;
    c.frameCount = r.integer("frames", 100);
    c.deviceCount = r.integer("devices", 10);
    c.activationProbability = r.number("activationProbability", 0.25);
    c.initialPowerDbm = r.level("initialPowerDbm", c.initialPowerDbm, "dBm");
    c.retainUndelivered = r.boolean("retainUndelivered", c.retainUndelivered);
    c.seed = r.seed("seed", c.seed);

    auto& ctx = c.context;
    ctx.maxSicDegree = r.integer("maxSicDegree", ctx.maxSicDegree);
    ctx.referencePowerDbm = r.level("referencePowerDbm", ctx.referencePowerDbm, "dBm");
    if (const json* s = r.find("schedule")) {
        ObjectReader sr(*s, "schedule");
        ctx.schedule.beacon = sr.time("beacon", ctx.schedule.beacon);
        ctx.schedule.estimation = sr.time("estimation", ctx.schedule.estimation);
        ctx.schedule.broadcast = sr.time("broadcast", ctx.schedule.broadcast);
        ctx.schedule.payload = sr.time("payload", ctx.schedule.payload);
        ctx.schedule.ack = sr.time("ack", ctx.schedule.ack);
        sr.finish();
    }
    ctx.hypothesis.M = c.deviceCount;
    ctx.hypothesis.meanSignal = 10.0;
    if (const json* h = r.find("hypothesis")) {
        ObjectReader hr(*h, "hypothesis");
        ctx.hypothesis.M = hr.integer("M", ctx.hypothesis.M);
        ctx.hypothesis.alpha = hr.number("alpha", ctx.hypothesis.alpha);
        ctx.hypothesis.meanSignal = hr.number("meanSignal", ctx.hypothesis.meanSignal);
        ctx.hypothesis.noiseSigma = hr.number("noiseSigma", ctx.hypothesis.noiseSigma);
        ctx.hypothesis.perDeviceSignal = hr.list<double>("perDeviceSignal", {});
        hr.finish();
    }
    ctx.sic = read_sic(r, "sic", ctx.sic);
    if (const json* b = r.find("backoff")) {
        ObjectReader br(*b, "backoff");
        ctx.policy.delta = br.level("delta", ctx.policy.delta, "dB");
        ctx.policy.slightIncrease = br.level("slightIncrease", ctx.policy.slightIncrease, "dB");
        br.finish();
    }
    r.finish();
    validate_as_config([&] { ctx.hypothesis.validate(); }, "hypothesis");
    validate_as_config([&] { c.validate(); });
    return c;
}

void EstimatorBenchConfig::validate() const
{
    for (int m : M)
        if (m < 1)
            throw ConfigError("M", "entries must be >= 1");
    for (double a : alpha)
        if (!(a > 0.0 && a < 1.0))
            throw ConfigError("alpha", "entries must lie in (0, 1)");
    for (double s : snr)
        if (!std::isfinite(s) || s < 0.0)
            throw ConfigError("snr", "entries must be finite and >= 0");
    if (trials < 1)
        throw ConfigError("trials", "must be >= 1");
    if (!(activeFraction > 0.0 && activeFraction <= 1.0))
        throw ConfigError("activeFraction", "must lie in (0, 1]");
}

EstimatorBenchConfig parse_bench_config(const json& doc)
{
    ObjectReader r(doc, "");
    EstimatorBenchConfig c;
    c.M = r.list<int>("M", c.M);
    c.alpha = r.list<double>("alpha", c.alpha);
    c.snr = r.list<double>("snr", c.snr);
    c.trials = r.integer("trials", c.trials);
    c.activeFraction = r.number("activeFraction", c.activeFraction);
    c.seed = r.seed("seed", c.seed);
    r.finish();
    c.validate();
    return c;
}

json load_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("<file>", "cannot read " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("parse error in ") + path.string() + ": " + e.what());
    }
}

} // namespace aloha_noma::cli
