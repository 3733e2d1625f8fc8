#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "surrosens/cli.hpp"
#include "surrosens/error.hpp"
#include "surrosens/io.hpp"

using namespace surrosens;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("surrosens_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

json load_json(const fs::path& p) { return json::parse(read_file(p)); }

json schema(const std::string& name) {
    return load_json(fs::path(SURROSENS_SOURCE_DIR) / "docs" / "schemas" / (name + ".schema.json"));
}

void check_valid(const json& doc, const std::string& schema_name) {
    const auto errors = schema_errors(doc, schema(schema_name));
    for (const auto& e : errors) INFO(e);
    CHECK(errors.empty());
}

ErrorKind config_failure_kind(const json& doc) {
    try {
        static_cast<void>(parse_run_config(doc));
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("config was accepted: " << doc.dump());
    return ErrorKind::Numerical;
}

json small_learners() {
    return {{"forest", {{"trees", 40}, {"min_leaf", 10}}}, {"lasso", {{"n_lambda", 30}, {"cv_folds", 3}}}};
}

// Simulates a dataset through the CLI and returns its path.
fs::path simulated_data(const fs::path& dir, std::size_t n, std::uint64_t seed) {
    const json doc = {{"seed", seed}, {"simulate", {{"n", n}, {"rho", 0.5}}}, {"output", {{"dir", (dir / "sim").string()}}}};
    const Run r = run({"simulate", "--config", write_config(dir, doc).string()});
    REQUIRE(r.code == kExitOk);
    return dir / "sim" / "data.csv";
}

}  // namespace

TEST_CASE("defaults of an empty run document") {
    const RunConfig cfg = parse_run_config(json::object());
    CHECK(cfg.seed == 0);
    CHECK(cfg.level == 0.95);
    CHECK(cfg.folds == 3);
    CHECK(cfg.learners.clip == 0.01);
    CHECK(cfg.sensitivity.family == CopulaFamily::Frank);
    CHECK(cfg.sensitivity.grid == std::vector<double>{-0.9, -0.75, -0.5, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5, 0.75, 0.9});
    CHECK_FALSE(cfg.copula.has_value());
    CHECK_FALSE(cfg.data.has_value());
    CHECK(cfg.out == fs::path("out"));
}

TEST_CASE("run document fields reach the typed config") {
    const json doc = {{"seed", 11},
                      {"threads", 2},
                      {"level", 0.9},
                      {"folds", 4},
                      {"clip", 0.02},
                      {"quadrature_nodes", 128},
                      {"learners",
                       {{"quantile", "knn"},
                        {"knn", {{"k", 25}}},
                        {"forest", {{"trees", 12}, {"min_leaf", 3}, {"mtry", 1}, {"sample_fraction", 0.6}}},
                        {"lasso", {{"n_lambda", 20}, {"cv_folds", 4}, {"lambda_min_ratio", 0.001}}},
                        {"sieve_degree", 1},
                        {"cond_mean_all_arms", true},
                        {"detrend_quantiles", false}}},
                      {"simulate", {{"n", 500}, {"rho", 0.3}, {"copula", {{"family", "clayton"}, {"theta", 2.0}}}}},
                      {"copula", {{"family", "gaussian"}, {"tau", 0.5}}},
                      {"sensitivity", {{"family", "gaussian"}, {"grid", {0.0, 0.2}}, {"zoom", {{"lo", 0.0}, {"hi", 0.05}, {"step", 0.01}}}}},
                      {"data", {{"path", "d.csv"}, {"split", true}, {"split_seed", 5}}},
                      {"output", {{"dir", "res"}}}};
    const RunConfig cfg = parse_run_config(doc);
    CHECK(cfg.seed == 11);
    CHECK(cfg.threads == 2);
    CHECK(cfg.level == 0.9);
    CHECK(cfg.folds == 4);
    CHECK(cfg.learners.clip == 0.02);
    CHECK(cfg.learners.quad.nodes == 128);
    CHECK(cfg.learners.quantile == QuantileLearner::Knn);
    CHECK(cfg.learners.knn.k == 25);
    CHECK(cfg.learners.forest.trees == 12);
    CHECK(cfg.learners.forest.min_leaf == 3);
    CHECK(cfg.learners.forest.mtry == 1);
    CHECK(cfg.learners.forest.sample_fraction == 0.6);
    CHECK(cfg.learners.lasso.n_lambda == 20);
    CHECK(cfg.learners.lasso.cv_folds == 4);
    CHECK(cfg.learners.lasso.lambda_min_ratio == 0.001);
    CHECK(cfg.learners.sieve_degree == 1);
    CHECK(cfg.learners.cond_mean_all_arms);
    CHECK_FALSE(cfg.learners.detrend_quantiles);
    CHECK(cfg.simulate.n == 500);
    CHECK(cfg.simulate.rho == 0.3);
    CHECK(cfg.simulate.seed == 11);
    CHECK(cfg.simulate.copula == CopulaSpec(CopulaFamily::Clayton, 2.0));
    REQUIRE(cfg.copula.has_value());
    CHECK(cfg.copula->family() == CopulaFamily::Gaussian);
    CHECK(cfg.copula->kendall_tau() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(cfg.sensitivity.family == CopulaFamily::Gaussian);
    CHECK(cfg.sensitivity.grid == std::vector<double>{0.0, 0.2});
    REQUIRE(cfg.sensitivity.zoom.has_value());
    CHECK(cfg.sensitivity.zoom->hi == 0.05);
    CHECK(*cfg.data == fs::path("d.csv"));
    CHECK(cfg.split);
    CHECK(*cfg.split_seed == 5);
    CHECK(cfg.out == fs::path("res"));
}

TEST_CASE("invalid run documents are config errors") {
    const std::vector<json> bad = {
        json::array(),
        {{"sed", 1}},
        {{"learners", {{"forest", {{"tree", 5}}}}}},
        {{"seed", -1}},
        {{"seed", 1.5}},
        {{"level", 1.0}},
        {{"level", "high"}},
        {{"folds", 1}},
        {{"clip", 0.5}},
        {{"quadrature_nodes", 4}},
        {{"learners", {{"quantile", "boosting"}}}},
        {{"learners", {{"sieve_degree", 3}}}},
        {{"learners", {{"forest", {{"sample_fraction", 1.5}}}}}},
        {{"copula", {{"family", "gaussian"}}}},
        {{"copula", {{"family", "gaussian"}, {"tau", 0.5}, {"theta", 0.7}}}},
        {{"copula", {{"family", "frechet_upper"}, {"tau", 0.5}}}},
        {{"copula", {{"family", "gumbel"}, {"tau", -0.3}}}},
        {{"copula", {{"family", "clayton"}, {"theta", -2.0}}}},
        {{"copula", {{"family", "student"}, {"tau", 0.1}}}},
        {{"sensitivity", {{"family", "gumbel"}, {"grid", {-0.5, 0.0, 0.5}}}}},
        {{"sensitivity", {{"family", "frechet_lower"}}}},
        {{"sensitivity", {{"family", "gaussian"}, {"grid", {0.0, 1.5}}}}},
        {{"sensitivity", {{"zoom", {{"lo", 0.1}, {"hi", 0.0}}}}}},
        {{"oracle_curve", {{"families", {"frechet_upper"}}}}},
        {{"oracle_curve", {{"rho", {0.0}}}}},
        {{"oracle_curve", {{"grid", {1.0}}}}},
        {{"simulate", {{"rho", 1.2}}}},
        {{"simulate", {{"n", 1}}}},
        {{"data", {{"path", 3}}}},
        {{"output", {{"dir", ""}}}},
    };
    for (const auto& doc : bad) {
        INFO(doc.dump());
        CHECK(config_failure_kind(doc) == ErrorKind::Config);
    }
}

TEST_CASE("gumbel default sensitivity grid keeps the non-negative taus") {
    const RunConfig cfg = parse_run_config({{"sensitivity", {{"family", "gumbel"}}}});
    CHECK(cfg.sensitivity.grid == std::vector<double>{0.0, 0.1, 0.25, 0.5, 0.75, 0.9});
}

TEST_CASE("overrides and the configuration digest") {
    const json base = {{"seed", 3}, {"data", {{"path", "a.csv"}}}};
    Overrides o;
    o.data = "b.csv";
    o.out = "elsewhere";
    o.seed = 9;
    o.threads = 4;
    o.split = true;
    const json doc = apply_overrides(base, o);
    CHECK(doc["seed"] == 9);
    CHECK(doc["threads"] == 4);
    CHECK(doc["data"]["path"] == "b.csv");
    CHECK(doc["data"]["split"] == true);
    CHECK(doc["output"]["dir"] == "elsewhere");
    CHECK(apply_overrides(base, Overrides{}) == base);

    json a = base;
    json b = base;
    b["threads"] = 8;
    b["output"] = {{"dir", "x"}};
    b["data"]["path"] = "moved/a.csv";
    CHECK(config_digest(a) == config_digest(b));
    b["seed"] = 4;
    CHECK(config_digest(a) != config_digest(b));
    CHECK(config_digest(a).size() == 16);
    CHECK_THROWS_AS(static_cast<void>(apply_overrides(json::array(), o)), Error);
}

TEST_CASE("schema validator") {
    const json s = json::parse(R"({
        "type": "object", "required": ["a"], "additionalProperties": false,
        "properties": {
            "a": {"type": "integer", "minimum": 0, "maximum": 3},
            "b": {"type": ["string", "null"], "enum": ["x", null]},
            "c": {"type": "array", "minItems": 1, "maxItems": 2, "items": {"type": "number"}}
        }})");
    CHECK(schema_errors(json::parse(R"({"a": 1, "b": null, "c": [1.5]})"), s).empty());
    CHECK(schema_errors(json::parse(R"({"a": 1, "b": "x"})"), s).empty());
    CHECK(schema_errors(json::parse(R"({"b": "x"})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": 1.5})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": 4})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": -1})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": 1, "b": "y"})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": 1, "z": 0})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": 1, "c": []})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": 1, "c": [1, 2, 3]})"), s).size() == 1);
    CHECK(schema_errors(json::parse(R"({"a": 1, "c": ["q"]})"), s).size() == 1);
    CHECK(schema_errors(json::parse("[]"), s).size() == 1);
}

TEST_CASE("command-line errors map to exit codes") {
    const fs::path dir = scratch("exit_codes");
    CHECK(run({}).code == kExitConfig);
    CHECK(run({"frobnicate"}).code == kExitConfig);
    CHECK(run({"bounds"}).code == kExitConfig);
    CHECK(run({"bounds", "--config", (dir / "absent.json").string()}).code == kExitConfig);
    CHECK(run({"--help"}).code == kExitOk);

    std::ofstream(dir / "broken.json") << "{\"seed\": ";
    const Run broken = run({"simulate", "--config", (dir / "broken.json").string()});
    CHECK(broken.code == kExitConfig);
    CHECK(broken.err.find("not valid JSON") != std::string::npos);

    const json unknown = {{"seeds", 1}};
    const Run u = run({"simulate", "--config", write_config(dir, unknown).string()});
    CHECK(u.code == kExitConfig);
    CHECK(u.err.find("seeds") != std::string::npos);

    const json no_data = {{"output", {{"dir", (dir / "o").string()}}}};
    const Run missing = run({"bounds", "--config", write_config(dir, no_data).string(), "--data",
                             (dir / "nowhere.csv").string()});
    CHECK(missing.code == kExitData);
    CHECK(missing.err.find("nowhere.csv") != std::string::npos);
    CHECK(run({"bounds", "--config", write_config(dir, no_data).string()}).code == kExitConfig);

    std::ofstream(dir / "bad.csv") << "sample,w,y,s1,x1\nE,1,2.0,0.1,0.5\nO,,1.0,0.2,0.3\n";
    const Run bad_row = run({"bounds", "--config", write_config(dir, no_data).string(), "--data",
                             (dir / "bad.csv").string()});
    CHECK(bad_row.code == kExitData);
    CHECK(bad_row.err.find("row 1") != std::string::npos);

    const json frechet = {{"copula", {{"family", "frechet_upper"}}}, {"output", {{"dir", (dir / "o").string()}}}};
    const Run f = run({"estimate", "--config", write_config(dir, frechet).string(), "--data", (dir / "bad.csv").string()});
    CHECK(f.code == kExitConfig);
    CHECK(f.err.find("bounds") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o"));
}

TEST_CASE("simulate is deterministic and its manifest digests the outputs") {
    const fs::path dir = scratch("simulate");
    const json doc = {{"seed", 7}, {"simulate", {{"n", 1000}, {"rho", 0.5}}}};
    const fs::path cfg = write_config(dir, doc);
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string()}).code == kExitOk);
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(), "--threads", "1"}).code == kExitOk);
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "8"}).code == kExitOk);
    const std::string a = read_file(dir / "a" / "data.csv");
    CHECK(a == read_file(dir / "b" / "data.csv"));
    CHECK(a != read_file(dir / "c" / "data.csv"));
    CHECK(read_file(dir / "a" / "manifest.json") == read_file(dir / "b" / "manifest.json"));

    const json m = load_json(dir / "a" / "manifest.json");
    check_valid(m, "manifest");
    CHECK(m["command"] == "simulate");
    CHECK(m["seed"] == 7);
    CHECK(m["data"].is_null());
    REQUIRE(m["outputs"].size() == 1);
    CHECK(m["outputs"][0]["file"] == "data.csv");
    CHECK(m["outputs"][0]["digest"] == hex_digest(fnv1a(a)));
    CHECK(load_json(dir / "c" / "manifest.json")["input_digest"] != m["input_digest"]);

    const CombinedDataset data = load_dataset(dir / "a" / "data.csv");
    CHECK(data.rows() == 1000);
    double w_sum = 0.0;
    std::size_t e_rows = 0;
    for (std::size_t i = 0; i < data.rows(); ++i)
        if (data.experimental(i)) {
            w_sum += data.w[i];
            ++e_rows;
        }
    CHECK(std::abs(w_sum / static_cast<double>(e_rows) - 0.5) <= 3.0 * std::sqrt(0.25 / static_cast<double>(e_rows)));
    CHECK(std::vector<fs::path>(fs::directory_iterator(dir / "a"), fs::directory_iterator{}).size() == 2);
}

TEST_CASE("oracle curves through the command line") {
    const fs::path dir = scratch("oracle_curve");
    const json doc = {{"oracle_curve", {{"families", {"gaussian", "gumbel"}}, {"rho", {0.5}}, {"grid", {-0.6, -0.5, 0.0, 0.5}}}},
                      {"output", {{"dir", (dir / "o").string()}}}};
    const Run r = run({"oracle-curve", "--config", write_config(dir, doc).string()});
    REQUIRE(r.code == kExitOk);
    const json rep = load_json(dir / "o" / "oracle_curve.json");
    check_valid(rep, "oracle_curve");
    check_valid(load_json(dir / "o" / "manifest.json"), "manifest");
    REQUIRE(rep["curves"].size() == 2);

    const json& gaussian = rep["curves"][0];
    CHECK(gaussian["family"] == "gaussian");
    REQUIRE(gaussian["points"].size() == 4);
    CHECK(gaussian["points"][2]["tau_k"] == 0.0);
    CHECK(gaussian["points"][2]["tau_hat"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
    REQUIRE(gaussian["sign_change"].is_number());
    CHECK(gaussian["sign_change"].get<double>() == doctest::Approx(-0.55).epsilon(0.02 / 0.55));

    const json& gumbel = rep["curves"][1];
    CHECK(gumbel["sign_change"].is_null());
    std::istringstream csv(read_file(dir / "o" / gumbel["file"].get<std::string>()));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "tau_k,tau_hat,se,ci_lo,ci_hi");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        CHECK(std::stod(line.substr(0, line.find(','))) >= 0.0);
    }
    CHECK(rows == 2);
}

TEST_CASE("bounds, estimate and sensitivity through the command line") {
    const fs::path dir = scratch("estimators");
    const fs::path data = simulated_data(dir, 800, 21);
    json doc = {{"seed", 5}, {"learners", small_learners()}};

    doc["output"] = {{"dir", (dir / "bounds").string()}};
    REQUIRE(run({"bounds", "--config", write_config(dir, doc).string(), "--data", data.string()}).code == kExitOk);
    doc["output"] = {{"dir", (dir / "bounds_again").string()}};
    REQUIRE(run({"bounds", "--config", write_config(dir, doc).string(), "--data", data.string()}).code == kExitOk);
    CHECK(read_file(dir / "bounds" / "bounds.json") == read_file(dir / "bounds_again" / "bounds.json"));
    const json bounds = load_json(dir / "bounds" / "bounds.json");
    check_valid(bounds, "estimate_report");
    CHECK(bounds["labels"] == json({"lower", "upper"}));
    CHECK(bounds["identified_ci"].is_object());
    const json manifest = load_json(dir / "bounds" / "manifest.json");
    check_valid(manifest, "manifest");
    CHECK(manifest["data"]["rows"] == 800);
    CHECK(manifest["data"]["digest"] == hex_digest(fnv1a(read_file(data))));
    CHECK(bounds["config_digest"] == manifest["input_digest"]);

    doc["copula"] = {{"family", "independence"}};
    doc["output"] = {{"dir", (dir / "independence").string()}};
    REQUIRE(run({"estimate", "--config", write_config(dir, doc).string(), "--data", data.string()}).code == kExitOk);
    const json independence = load_json(dir / "independence" / "estimate.json");
    check_valid(independence, "estimate_report");
    CHECK(independence["identified_ci"].is_null());

    doc["copula"] = {{"family", "gaussian"}, {"tau", 0.5}};
    doc["output"] = {{"dir", (dir / "gaussian").string()}};
    REQUIRE(run({"estimate", "--config", write_config(dir, doc).string(), "--data", data.string()}).code == kExitOk);
    const json gaussian = load_json(dir / "gaussian" / "estimate.json");
    check_valid(gaussian, "estimate_report");
    CHECK(gaussian["tau_hat"][0].get<double>() > independence["tau_hat"][0].get<double>());

    doc.erase("copula");
    doc["sensitivity"] = {{"family", "frank"}, {"zoom", {{"lo", 0.0}, {"hi", 0.04}, {"step", 0.01}}}};
    doc["output"] = {{"dir", (dir / "sensitivity").string()}};
    REQUIRE(run({"sensitivity", "--config", write_config(dir, doc).string(), "--data", data.string()}).code == kExitOk);
    const json sens = load_json(dir / "sensitivity" / "sensitivity.json");
    check_valid(sens, "sensitivity");
    check_valid(load_json(dir / "sensitivity" / "manifest.json"), "manifest");
    const json& points = sens["curve"]["points"];
    REQUIRE(points.size() == 11);
    CHECK(points[5]["tau_k"] == 0.0);
    CHECK(points[5]["tau_hat"] == independence["tau_hat"][0]);
    CHECK(points[5]["se"] == independence["se"][0]);
    CHECK(sens["curve"]["worst_case"]["tau_hat"] == bounds["tau_hat"]);
    REQUIRE(sens["zoom"].is_object());
    CHECK(sens["zoom"]["points"].size() == 5);
    CHECK(sens["zoom"]["points"][0]["tau_hat"] == independence["tau_hat"][0]);
    CHECK(fs::exists(dir / "sensitivity" / "sensitivity_frank.csv"));
    CHECK(fs::exists(dir / "sensitivity" / "sensitivity_frank_zoom.csv"));
    const bool zero_excluded = points[5]["ci_lo"].get<double>() > 0.0 || points[5]["ci_hi"].get<double>() < 0.0;
    if (zero_excluded) CHECK(sens["breakpoint"].is_null());
}

TEST_CASE("shipped configurations parse") {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(fs::path(SURROSENS_SOURCE_DIR) / "configs")) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().string());
        CHECK_NOTHROW(static_cast<void>(parse_run_config(load_json(entry.path()))));
        ++seen;
    }
    CHECK(seen >= 5);
}
