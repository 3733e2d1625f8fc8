#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "surrosens/dml.hpp"
#include "surrosens/oracle_dgp.hpp"

namespace surrosens {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kSchemaVersion = 1;

struct OracleCurveConfig {
    std::vector<CopulaFamily> families{CopulaFamily::Gaussian, CopulaFamily::Clayton, CopulaFamily::Gumbel,
                                       CopulaFamily::Frank};
    std::vector<double> rhos{0.1, 0.5, 0.9};
    /// Empty: -0.9, -0.8, ..., 0.9 intersected with each family's range.
    std::vector<double> grid;
    double tol = 1e-6;
};

struct ZoomConfig {
    double lo = 0.0;
    double hi = 0.1;
    double step = 0.01;
};

struct SensitivityConfig {
    CopulaFamily family = CopulaFamily::Frank;
    /// Empty: the default grid for the family.
    std::vector<double> grid;
    std::optional<ZoomConfig> zoom;
};

/// One validated run document; every field has a default.
struct RunConfig {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    double level = 0.95;
    int folds = 3;
    LearnerConfig learners;
    DgpConfig simulate;
    OracleCurveConfig oracle_curve;
    std::optional<CopulaSpec> copula;
    SensitivityConfig sensitivity;
    std::optional<std::filesystem::path> data;
    bool split = false;
    std::optional<std::uint64_t> split_seed;
    std::filesystem::path out = "out";
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw Error(Config).
RunConfig parse_run_config(const nlohmann::json& doc);

/// Flag overrides applied to the raw document before parsing.
struct Overrides {
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool split = false;
};

nlohmann::json apply_overrides(nlohmann::json doc, const Overrides& o);

/// Digest of the result-relevant part of a run document (threads and the
/// output directory excluded).
std::string config_digest(const nlohmann::json& doc);

struct CommandOutput {
    /// Written file names relative to the output directory.
    std::vector<std::string> files;
    nlohmann::json manifest;
};

CommandOutput cmd_simulate(const RunConfig& cfg, const nlohmann::json& doc);
CommandOutput cmd_oracle_curve(const RunConfig& cfg, const nlohmann::json& doc);
CommandOutput cmd_bounds(const RunConfig& cfg, const nlohmann::json& doc);
CommandOutput cmd_sensitivity(const RunConfig& cfg, const nlohmann::json& doc);
CommandOutput cmd_estimate(const RunConfig& cfg, const nlohmann::json& doc);

/// Full command line: returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Errors for `doc` against a JSON Schema subset (type, required, properties,
/// additionalProperties, items, enum, minimum, maximum, minItems, maxItems).
std::vector<std::string> schema_errors(const nlohmann::json& doc, const nlohmann::json& schema);

}  // namespace surrosens
