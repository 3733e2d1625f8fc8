#include "surrosens/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "surrosens/error.hpp"
#include "surrosens/io.hpp"
#include "surrosens/numerics.hpp"

namespace surrosens {

using nlohmann::json;

namespace {

// Typed, strict access to one JSON object; done() rejects unread keys.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(fmt::format("config: {} must be an object", path_));
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw config_error(fmt::format("config: {} must be a number", where(key)));
            out = v->get<double>();
            if (!std::isfinite(out)) throw config_error(fmt::format("config: {} must be finite", where(key)));
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out, long long lo, long long hi = std::numeric_limits<long long>::max()) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw config_error(fmt::format("config: {} must be an integer", where(key)));
            if (v->is_number_unsigned() && v->get<unsigned long long>() > static_cast<unsigned long long>(hi))
                throw config_error(fmt::format("config: {} must be at most {}", where(key), hi));
            if (!v->is_number_unsigned()) {
                const long long x = v->get<long long>();
                if (x < lo || x > hi)
                    throw config_error(fmt::format("config: {} must lie in [{}, {}]", where(key), lo, hi));
            } else if (v->get<unsigned long long>() < static_cast<unsigned long long>(std::max(lo, 0LL))) {
                throw config_error(fmt::format("config: {} must be at least {}", where(key), lo));
            }
            out = v->get<Int>();
        }
    }

    void seed(const std::string& key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<long long>() < 0))
                throw config_error(fmt::format("config: {} must be a non-negative integer", where(key)));
            out = v->get<std::uint64_t>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw config_error(fmt::format("config: {} must be true or false", where(key)));
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw config_error(fmt::format("config: {} must be a string", where(key)));
            out = v->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw config_error(fmt::format("config: {} must be an array of numbers", where(key)));
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) throw config_error(fmt::format("config: {} must be an array of numbers", where(key)));
                out.push_back(e.get<double>());
            }
        }
    }

    void done() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw config_error(fmt::format("config: unknown key '{}'", where(k)));
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

CopulaFamily family_from(const json& v, const std::string& where) {
    if (!v.is_string()) throw config_error(fmt::format("config: {} must be a family name", where));
    return parse_family(v.get<std::string>());
}

CopulaSpec parse_copula(const json& j, const std::string& path) {
    Fields f(j, path);
    const json* fam = f.find("family");
    if (!fam) throw config_error(fmt::format("config: {}.family is required", path));
    const CopulaFamily family = family_from(*fam, path + ".family");
    const json* tau = f.find("tau");
    const json* theta = f.find("theta");
    f.done();
    if (tau && theta) throw config_error(fmt::format("config: {} takes tau or theta, not both", path));
    if (!is_parametric(family)) {
        if (tau || theta) throw config_error(fmt::format("config: {} has no dependence parameter", family_name(family)));
        if (family == CopulaFamily::FrechetLower) return CopulaSpec::frechet_lower();
        if (family == CopulaFamily::FrechetUpper) return CopulaSpec::frechet_upper();
        return CopulaSpec::independence();
    }
    if (tau) {
        if (!tau->is_number()) throw config_error(fmt::format("config: {}.tau must be a number", path));
        return CopulaSpec::from_kendall_tau(family, tau->get<double>());
    }
    if (theta) {
        if (!theta->is_number()) throw config_error(fmt::format("config: {}.theta must be a number", path));
        return CopulaSpec(family, theta->get<double>());
    }
    throw config_error(fmt::format("config: {} needs tau or theta", path));
}

void check_grid(CopulaFamily family, const std::vector<double>& grid, const std::string& where) {
    const TauRange range = tau_range(family);
    for (double t : grid)
        if (!(std::abs(t) < 1e-6) && !range.contains(t))
            throw config_error(fmt::format("config: {} value {} is outside the {} tau range", where, t,
                                           family_name(family)));
}

void parse_learners(const json& j, LearnerConfig& l) {
    Fields f(j, "learners");
    std::string quantile = l.quantile == QuantileLearner::Forest ? "forest" : "knn";
    f.string("quantile", quantile);
    if (quantile == "forest")
        l.quantile = QuantileLearner::Forest;
    else if (quantile == "knn")
        l.quantile = QuantileLearner::Knn;
    else
        throw config_error("config: learners.quantile must be \"forest\" or \"knn\"");
    if (const json* v = f.find("forest")) {
        Fields ff(*v, "learners.forest");
        ff.integer("trees", l.forest.trees, 1, 100000);
        ff.integer("min_leaf", l.forest.min_leaf, 1, 1000000);
        ff.integer("mtry", l.forest.mtry, 0, 100000);
        ff.number("sample_fraction", l.forest.sample_fraction);
        ff.done();
        if (!(l.forest.sample_fraction >= 0.0 && l.forest.sample_fraction <= 1.0))
            throw config_error("config: learners.forest.sample_fraction must lie in [0, 1]");
    }
    if (const json* v = f.find("knn")) {
        Fields fk(*v, "learners.knn");
        fk.integer("k", l.knn.k, 0, 1000000);
        fk.done();
    }
    if (const json* v = f.find("lasso")) {
        Fields fl(*v, "learners.lasso");
        fl.integer("n_lambda", l.lasso.n_lambda, 2, 10000);
        fl.integer("cv_folds", l.lasso.cv_folds, 2, 100);
        fl.number("lambda_min_ratio", l.lasso.lambda_min_ratio);
        fl.done();
        if (!(l.lasso.lambda_min_ratio >= 0.0 && l.lasso.lambda_min_ratio < 1.0))
            throw config_error("config: learners.lasso.lambda_min_ratio must lie in [0, 1)");
    }
    f.integer("sieve_degree", l.sieve_degree, 1, 2);
    f.boolean("cond_mean_all_arms", l.cond_mean_all_arms);
    f.boolean("detrend_quantiles", l.detrend_quantiles);
    f.done();
}

void parse_simulate(const json& j, DgpConfig& d) {
    Fields f(j, "simulate");
    f.integer("n", d.n, 2, 100000000);
    f.number("rho", d.rho);
    if (const json* c = f.find("copula")) d.copula = parse_copula(*c, "simulate.copula");
    f.number("experimental_share", d.experimental_share);
    f.number("outcome_sd", d.outcome_sd);
    f.boolean("binary_outcome", d.binary_outcome);
    f.number("binary_threshold", d.binary_threshold);
    f.integer("extra_surrogates", d.extra_surrogates, 0, 1000);
    f.integer("extra_covariates", d.extra_covariates, 0, 1000);
    f.boolean("one_draw", d.one_draw);
    f.number("s_lo", d.s_lo);
    f.number("s_hi", d.s_hi);
    f.done();
}

void parse_oracle_curve(const json& j, OracleCurveConfig& o) {
    Fields f(j, "oracle_curve");
    if (const json* v = f.find("families")) {
        if (!v->is_array() || v->empty()) throw config_error("config: oracle_curve.families must be a non-empty array");
        o.families.clear();
        for (const auto& e : *v) {
            const CopulaFamily fam = family_from(e, "oracle_curve.families");
            if (!is_parametric(fam))
                throw config_error(fmt::format("config: oracle_curve family {} has no tau curve", family_name(fam)));
            o.families.push_back(fam);
        }
    }
    f.numbers("rho", o.rhos);
    f.numbers("grid", o.grid);
    f.number("tol", o.tol);
    f.done();
    if (o.rhos.empty()) throw config_error("config: oracle_curve.rho must not be empty");
    for (double r : o.rhos)
        if (!(r > 0.0 && r < 1.0)) throw config_error(fmt::format("config: oracle_curve.rho value {} is outside (0, 1)", r));
    for (double t : o.grid)
        if (!(t > -1.0 && t < 1.0)) throw config_error(fmt::format("config: oracle_curve.grid value {} is outside (-1, 1)", t));
    if (!(o.tol > 0.0 && o.tol < 1.0)) throw config_error("config: oracle_curve.tol must lie in (0, 1)");
}

void parse_sensitivity(const json& j, SensitivityConfig& s) {
    Fields f(j, "sensitivity");
    if (const json* v = f.find("family")) s.family = family_from(*v, "sensitivity.family");
    f.numbers("grid", s.grid);
    if (const json* z = f.find("zoom")) {
        Fields fz(*z, "sensitivity.zoom");
        ZoomConfig zc;
        fz.number("lo", zc.lo);
        fz.number("hi", zc.hi);
        fz.number("step", zc.step);
        fz.done();
        if (!(zc.lo < zc.hi) || !(zc.step > 0.0)) throw config_error("config: sensitivity.zoom needs lo < hi and step > 0");
        if ((zc.hi - zc.lo) / zc.step > 1000.0) throw config_error("config: sensitivity.zoom has more than 1000 points");
        s.zoom = zc;
    }
    f.done();
    if (!is_parametric(s.family))
        throw config_error(fmt::format("config: sensitivity.family {} is not a parametric family", family_name(s.family)));
    check_grid(s.family, s.grid, "sensitivity.grid");
    if (s.zoom) check_grid(s.family, {s.zoom->lo, s.zoom->hi}, "sensitivity.zoom");
}

std::vector<double> zoom_grid(const ZoomConfig& z) {
    std::vector<double> out;
    const auto steps = static_cast<long>(std::floor((z.hi - z.lo) / z.step + 1e-9));
    for (long i = 0; i <= steps; ++i) out.push_back(z.lo + static_cast<double>(i) * z.step);
    return out;
}

std::vector<double> oracle_grid(const OracleCurveConfig& o, CopulaFamily family) {
    std::vector<double> grid = o.grid;
    if (grid.empty())
        for (int k = -9; k <= 9; ++k) grid.push_back(k / 10.0);
    const TauRange range = tau_range(family);
    std::vector<double> out;
    for (double t : grid)
        if (t == 0.0 || range.contains(t)) out.push_back(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct Outputs {
    explicit Outputs(std::filesystem::path d) : dir(std::move(d)) {}

    std::filesystem::path dir;
    std::vector<std::string> files;
    json entries = json::array();

    void write(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(dir);
        write_file_atomic(dir / name, content);
        files.push_back(name);
        entries.push_back({{"file", name}, {"digest", hex_digest(fnv1a(content))}});
    }
};

struct LoadedData {
    CombinedDataset data;
    std::string digest;
    std::string path;
};

LoadedData load_data(const RunConfig& cfg, const char* command) {
    if (!cfg.data) throw config_error(fmt::format("{} needs a dataset (--data or data.path)", command));
    const std::string bytes = read_file(*cfg.data);
    std::istringstream in(bytes);
    LoadOptions opts;
    opts.split = cfg.split;
    opts.split_seed = cfg.split_seed.value_or(cfg.seed);
    LoadedData out{parse_dataset(in, cfg.data->string(), opts), hex_digest(fnv1a(bytes)), cfg.data->string()};
    validate(out.data);
    return out;
}

std::string input_digest(const json& doc, const LoadedData* data) {
    std::uint64_t h = fnv1a(config_digest(doc));
    if (data) h = fnv1a(data->digest, h);
    return hex_digest(h);
}

json manifest(const char* command, const RunConfig& cfg, const json& doc, const LoadedData* data, const Outputs& out) {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["command"] = command;
    m["seed"] = cfg.seed;
    m["config_digest"] = config_digest(doc);
    m["input_digest"] = input_digest(doc, data);
    m["data"] = data ? json{{"path", data->path}, {"digest", data->digest}, {"rows", data->data.rows()}} : json(nullptr);
    m["outputs"] = out.entries;
    return m;
}

CommandOutput finish(const char* command, const RunConfig& cfg, const json& doc, const LoadedData* data, Outputs& out) {
    json m = manifest(command, cfg, doc, data, out);
    std::filesystem::create_directories(out.dir);
    write_file_atomic(out.dir / "manifest.json", m.dump(2) + "\n");
    out.files.push_back("manifest.json");
    return {out.files, std::move(m)};
}

EstimationConfig estimation_config(const RunConfig& cfg, const json& doc, const LoadedData& data) {
    EstimationConfig e;
    e.learners = cfg.learners;
    e.folds = cfg.folds;
    e.level = cfg.level;
    e.seed = cfg.seed;
    e.config_digest = input_digest(doc, &data);
    return e;
}

std::string interval_text(const Interval& ci) {
    return fmt::format("[{:.4f}, {:.4f}]", ci.lo, ci.hi);
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
    RunConfig cfg;
    Fields f(doc, "");
    f.seed("seed", cfg.seed);
    f.integer("threads", cfg.threads, 0, 4096);
    f.number("level", cfg.level);
    f.integer("folds", cfg.folds, 2, 1000);
    f.number("clip", cfg.learners.clip);
    f.integer("quadrature_nodes", cfg.learners.quad.nodes, 8, 1000000);
    if (const json* v = f.find("learners")) parse_learners(*v, cfg.learners);
    if (const json* v = f.find("simulate")) parse_simulate(*v, cfg.simulate);
    if (const json* v = f.find("oracle_curve")) parse_oracle_curve(*v, cfg.oracle_curve);
    if (const json* v = f.find("copula")) cfg.copula = parse_copula(*v, "copula");
    if (const json* v = f.find("sensitivity")) parse_sensitivity(*v, cfg.sensitivity);
    if (const json* v = f.find("data")) {
        Fields fd(*v, "data");
        std::string path;
        fd.string("path", path);
        if (!path.empty()) cfg.data = path;
        fd.boolean("split", cfg.split);
        std::uint64_t split_seed = 0;
        if (fd.find("split_seed")) {
            fd.seed("split_seed", split_seed);
            cfg.split_seed = split_seed;
        }
        fd.done();
    }
    if (const json* v = f.find("output")) {
        Fields fo(*v, "output");
        std::string dir = cfg.out.string();
        fo.string("dir", dir);
        fo.done();
        if (dir.empty()) throw config_error("config: output.dir must not be empty");
        cfg.out = dir;
    }
    f.done();

    if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw config_error("config: level must lie in (0, 1)");
    if (!(cfg.learners.clip > 0.0 && cfg.learners.clip < 0.5)) throw config_error("config: clip must lie in (0, 0.5)");
    cfg.simulate.seed = cfg.seed;
    validate(cfg.simulate);
    if (cfg.sensitivity.grid.empty()) cfg.sensitivity.grid = default_tau_grid(cfg.sensitivity.family);
    return cfg;
}

json apply_overrides(json doc, const Overrides& o) {
    if (!doc.is_object()) throw config_error("config: the document must be a JSON object");
    auto block = [&](const char* key) -> json& {
        json& b = doc[key];
        if (b.is_null()) b = json::object();
        if (!b.is_object()) throw config_error(fmt::format("config: {} must be an object", key));
        return b;
    };
    if (o.data) block("data")["path"] = o.data->string();
    if (o.split) block("data")["split"] = true;
    if (o.out) block("output")["dir"] = o.out->string();
    if (o.seed) doc["seed"] = *o.seed;
    if (o.threads) doc["threads"] = *o.threads;
    return doc;
}

std::string config_digest(const json& doc) {
    json d = doc;
    if (d.is_object()) {
        d.erase("threads");
        d.erase("output");
        if (d.contains("data") && d["data"].is_object()) d["data"].erase("path");
    }
    return hex_digest(fnv1a(d.dump()));
}

CommandOutput cmd_simulate(const RunConfig& cfg, const json& doc) {
    const CombinedDataset data = simulate(cfg.simulate);
    Outputs out{cfg.out};
    out.write("data.csv", dataset_to_csv(data));
    return finish("simulate", cfg, doc, nullptr, out);
}

CommandOutput cmd_oracle_curve(const RunConfig& cfg, const json& doc) {
    OracleOptions opts;
    opts.tol = cfg.oracle_curve.tol;
    opts.quad = cfg.learners.quad;
    opts.s_lo = cfg.simulate.s_lo;
    opts.s_hi = cfg.simulate.s_hi;
    opts.outcome_sd = cfg.simulate.outcome_sd;
    Outputs out{cfg.out};
    json curves = json::array();
    for (CopulaFamily family : cfg.oracle_curve.families) {
        const std::vector<double> grid = oracle_grid(cfg.oracle_curve, family);
        for (double rho : cfg.oracle_curve.rhos) {
            const auto points = oracle_curve(family, grid, rho, opts);
            SensitivityCurve curve;
            curve.family = family;
            for (const auto& p : points) {
                const double theta = CopulaSpec::from_kendall_tau(family, p.tau_k).theta();
                curve.points.push_back({p.tau_k, theta, p.ate, 0.0, {p.ate, p.ate}});
            }
            std::optional<double> sign_change;
            for (std::size_t i = 1; i < points.size() && !sign_change; ++i)
                if ((points[i - 1].ate < 0.0) != (points[i].ate < 0.0))
                    sign_change = sign_change_threshold(family, rho, points[i - 1].tau_k, points[i].tau_k, 1e-4, opts);
            const std::string name =
                fmt::format("oracle_curve_{}_rho{}.csv", family_name(family), format_double(rho));
            out.write(name, curve_to_csv(curve));
            json c = to_json(curve);
            c.erase("worst_case");
            c.erase("breakpoint");
            c.erase("refinement");
            c["rho"] = rho;
            c["sign_change"] = sign_change ? json(*sign_change) : json(nullptr);
            c["file"] = name;
            curves.push_back(std::move(c));
        }
    }
    out.write("oracle_curve.json", json{{"schema_version", kSchemaVersion}, {"curves", curves}}.dump(2) + "\n");
    return finish("oracle-curve", cfg, doc, nullptr, out);
}

CommandOutput cmd_bounds(const RunConfig& cfg, const json& doc) {
    const LoadedData data = load_data(cfg, "bounds");
    const EstimateReport rep = estimate_bounds(data.data, estimation_config(cfg, doc, data));
    Outputs out{cfg.out};
    json j = to_json(rep);
    j["schema_version"] = kSchemaVersion;
    out.write("bounds.json", j.dump(2) + "\n");
    return finish("bounds", cfg, doc, &data, out);
}

CommandOutput cmd_sensitivity(const RunConfig& cfg, const json& doc) {
    const LoadedData data = load_data(cfg, "sensitivity");
    const EstimationConfig ec = estimation_config(cfg, doc, data);
    const NuisanceBase base =
        NuisanceBase::fit(data.data, partition_folds(data.data.rows(), ec.folds, ec.seed), ec.learners, ec.seed);
    SensitivityCurve curve = sensitivity_analysis(base, cfg.sensitivity.family, cfg.sensitivity.grid, ec.level, true);
    curve.worst_case->seed = ec.seed;
    curve.worst_case->config_digest = ec.config_digest;
    Outputs out{cfg.out};
    const std::string fam(family_name(cfg.sensitivity.family));
    out.write(fmt::format("sensitivity_{}.csv", fam), curve_to_csv(curve));
    json j;
    j["schema_version"] = kSchemaVersion;
    j["family"] = fam;
    j["level"] = ec.level;
    j["seed"] = ec.seed;
    j["config_digest"] = ec.config_digest;
    j["breakpoint"] = curve.breakpoint ? json(*curve.breakpoint) : json(nullptr);
    j["curve"] = to_json(curve);
    j["zoom"] = nullptr;
    if (cfg.sensitivity.zoom) {
        const SensitivityCurve zoom =
            sensitivity_analysis(base, cfg.sensitivity.family, zoom_grid(*cfg.sensitivity.zoom), ec.level, false);
        out.write(fmt::format("sensitivity_{}_zoom.csv", fam), curve_to_csv(zoom));
        j["zoom"] = to_json(zoom);
    }
    out.write("sensitivity.json", j.dump(2) + "\n");
    return finish("sensitivity", cfg, doc, &data, out);
}

CommandOutput cmd_estimate(const RunConfig& cfg, const json& doc) {
    if (!cfg.copula) throw config_error("estimate needs a copula block");
    if (!cfg.copula->absolutely_continuous())
        throw config_error(fmt::format("{} has no density; use the bounds command for the Frechet bounds",
                                       cfg.copula->describe()));
    const LoadedData data = load_data(cfg, "estimate");
    const EstimateReport rep = estimate_general(data.data, *cfg.copula, estimation_config(cfg, doc, data));
    Outputs out{cfg.out};
    json j = to_json(rep);
    j["schema_version"] = kSchemaVersion;
    j["copula"] = {{"family", std::string(family_name(cfg.copula->family()))},
                   {"theta", cfg.copula->theta()},
                   {"tau", cfg.copula->kendall_tau()}};
    out.write("estimate.json", j.dump(2) + "\n");
    return finish("estimate", cfg, doc, &data, out);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Long-term treatment effects from surrogates under copula sensitivity"};
    app.name("surrosens");
    app.require_subcommand(1);
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool split = false;
    const char* commands[][2] = {{"simulate", "simulate a dataset from the design"},
                                 {"oracle-curve", "closed-form ATE curves over Kendall's tau"},
                                 {"bounds", "worst-case bounds with confidence intervals"},
                                 {"sensitivity", "ATE curve over a copula family"},
                                 {"estimate", "ATE under one smooth copula"}};
    std::vector<CLI::App*> subs;
    std::vector<CLI::Option*> seed_opts, thread_opts, data_opts, out_opts;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c[0], c[1]);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        data_opts.push_back(sub->add_option("--data", data_path, "dataset CSV"));
        out_opts.push_back(sub->add_option("--out", out_dir, "output directory"));
        seed_opts.push_back(sub->add_option("--seed", seed, "master seed"));
        thread_opts.push_back(sub->add_option("--threads", threads, "worker cap (0 = all cores)"));
        sub->add_flag("--split", split, "split a dataset carrying both w and y into E and O halves");
        subs.push_back(sub);
    }

    std::vector<std::string> argv_store{"surrosens"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    std::size_t which = 0;
    while (!subs[which]->parsed()) ++which;
    const std::string command = commands[which][0];
    try {
        std::ifstream in(config_path);
        if (!in) throw config_error("cannot open config " + config_path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw config_error(fmt::format("config {} is not valid JSON: {}", config_path, e.what()));
        }
        Overrides ov;
        if (data_opts[which]->count()) ov.data = data_path;
        if (out_opts[which]->count()) ov.out = out_dir;
        if (seed_opts[which]->count()) ov.seed = seed;
        if (thread_opts[which]->count()) ov.threads = threads;
        ov.split = split;
        doc = apply_overrides(std::move(doc), ov);
        const RunConfig cfg = parse_run_config(doc);
        set_thread_limit(cfg.threads);

        CommandOutput result;
        if (command == "simulate")
            result = cmd_simulate(cfg, doc);
        else if (command == "oracle-curve")
            result = cmd_oracle_curve(cfg, doc);
        else if (command == "bounds")
            result = cmd_bounds(cfg, doc);
        else if (command == "sensitivity")
            result = cmd_sensitivity(cfg, doc);
        else
            result = cmd_estimate(cfg, doc);
        out << command << ": wrote " << result.files.size() << " files to " << cfg.out.string() << "\n";
        if (command == "bounds") {
            const json rep = json::parse(read_file(cfg.out / "bounds.json"));
            out << fmt::format("  lower {:.4f} upper {:.4f} identified CI [{:.4f}, {:.4f}]{}\n",
                               rep["tau_hat"][0].get<double>(), rep["tau_hat"][1].get<double>(),
                               rep["identified_ci"]["lo"].get<double>(), rep["identified_ci"]["hi"].get<double>(),
                               rep["crossing"].get<bool>() ? " (bounds cross)" : "");
        } else if (command == "estimate") {
            const json rep = json::parse(read_file(cfg.out / "estimate.json"));
            out << fmt::format("  tau {:.4f} CI {}\n", rep["tau_hat"][0].get<double>(),
                               interval_text({rep["ci"][0]["lo"].get<double>(), rep["ci"][0]["hi"].get<double>()}));
        } else if (command == "sensitivity") {
            const json rep = json::parse(read_file(cfg.out / "sensitivity.json"));
            out << "  breakpoint "
                << (rep["breakpoint"].is_null() ? std::string("none") : format_double(rep["breakpoint"].get<double>()))
                << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "surrosens " << command << ": " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Config: return kExitConfig;
            case ErrorKind::Data: return kExitData;
            case ErrorKind::Numerical: return kExitNumerical;
        }
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "surrosens " << command << ": " << e.what() << "\n";
        return kExitData;
    }
}

namespace {

bool type_matches(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    return false;
}

void check_schema(const json& v, const json& s, const std::string& path, std::vector<std::string>& errors) {
    if (const auto t = s.find("type"); t != s.end()) {
        bool ok = false;
        if (t->is_string()) ok = type_matches(v, t->get<std::string>());
        for (const auto& alt : t->is_array() ? *t : json::array()) ok = ok || type_matches(v, alt.get<std::string>());
        if (!ok) {
            errors.push_back(fmt::format("{}: expected type {}", path, t->dump()));
            return;
        }
    }
    if (const auto e = s.find("enum"); e != s.end()) {
        if (std::find(e->begin(), e->end(), v) == e->end()) errors.push_back(fmt::format("{}: value not in enum", path));
    }
    if (v.is_number()) {
        if (const auto m = s.find("minimum"); m != s.end() && v.get<double>() < m->get<double>())
            errors.push_back(fmt::format("{}: below minimum {}", path, m->dump()));
        if (const auto m = s.find("maximum"); m != s.end() && v.get<double>() > m->get<double>())
            errors.push_back(fmt::format("{}: above maximum {}", path, m->dump()));
    }
    if (v.is_object()) {
        for (const auto& r : s.value("required", json::array()))
            if (!v.contains(r.get<std::string>()))
                errors.push_back(fmt::format("{}: missing required key '{}'", path, r.get<std::string>()));
        const json props = s.value("properties", json::object());
        for (const auto& [k, sub] : v.items()) {
            if (props.contains(k))
                check_schema(sub, props[k], path + "." + k, errors);
            else if (s.value("additionalProperties", true) == false)
                errors.push_back(fmt::format("{}: unexpected key '{}'", path, k));
        }
    }
    if (v.is_array()) {
        if (const auto m = s.find("minItems"); m != s.end() && v.size() < m->get<std::size_t>())
            errors.push_back(fmt::format("{}: fewer than {} items", path, m->dump()));
        if (const auto m = s.find("maxItems"); m != s.end() && v.size() > m->get<std::size_t>())
            errors.push_back(fmt::format("{}: more than {} items", path, m->dump()));
        if (const auto items = s.find("items"); items != s.end())
            for (std::size_t i = 0; i < v.size(); ++i) check_schema(v[i], *items, fmt::format("{}[{}]", path, i), errors);
    }
}

}  // namespace

std::vector<std::string> schema_errors(const json& doc, const json& schema) {
    std::vector<std::string> errors;
    check_schema(doc, schema, "$", errors);
    return errors;
}

}  // namespace surrosens
