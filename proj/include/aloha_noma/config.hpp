#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aloha_noma/protocol.hpp"
#include "aloha_noma/simcore.hpp"

namespace aloha_noma::cli {

/// A configuration value failed to parse or validate. `field()` is the
/// dotted key path, e.g. "sic.degree".
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field))
    {
    }

    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

struct EstimatorBenchConfig
{
    std::vector<int> M{10, 50};
    std::vector<double> alpha{0.05};
    std::vector<double> snr{0.0, 3.0, 5.0, 10.0}; // E / sigma
    int trials = 10000;
    double activeFraction = 0.2; // share of the M devices active in power trials
    std::uint64_t seed = 1;

    void validate() const;
};

// Seconds from a number or a "<value> <unit>" string (s, ms, us, ns).
double parse_time(const nlohmann::json& value, const std::string& field);
// dBm or dB from a number or "<value> dBm" / "<value> dB".
double parse_level(const nlohmann::json& value, const std::string& field, const std::string& unit);

sim::SimConfig parse_sim_config(const nlohmann::json& doc);
protocol::SessionConfig parse_session_config(const nlohmann::json& doc);
EstimatorBenchConfig parse_bench_config(const nlohmann::json& doc);

nlohmann::json load_json_file(const std::filesystem::path& path);

} // namespace aloha_noma::cli
