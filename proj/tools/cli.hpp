#ifndef CATASTROPHE_TOOLS_CLI_HPP
#define CATASTROPHE_TOOLS_CLI_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "catastrophe/errors.hpp"
#include "catastrophe/exact.hpp"
#include "catastrophe/mc.hpp"
#include "catastrophe/model.hpp"
#include "catastrophe/path_analysis.hpp"
#include "catastrophe/rate.hpp"

namespace catastrophe::cli
{

using json = nlohmann::ordered_json;
using Settings = std::map<std::string, std::string>;

enum ExitCode : int
{
    exit_ok = 0,
    exit_config = 2,
    exit_numerical = 3,
    exit_statistical = 4,
};

inline const std::vector<std::string>& known_keys()
{
    static const std::vector<std::string> keys = {"lambda", "mu", "alpha", "seed", "out", "format", "T", "x", "eps",
        "n", "method", "tilt-s", "tilt-theta1", "tilt-theta2", "grid", "M", "K", "T-list", "budget", "workers",
        "replica", "view", "simulator"};
    return keys;
}

inline bool is_known_key(const std::string& key)
{
    for (const auto& k : known_keys()) {
        if (k == key) {
            return true;
        }
    }
    return false;
}

inline std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Flat `key = value` lines; blank lines and lines starting with '#' are skipped.
inline Settings parse_config_text(const std::string& text)
{
    Settings settings;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw config_error("config", "line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(content.substr(0, eq));
        if (!is_known_key(key)) {
            throw config_error(key, "unknown config key '" + key + "'");
        }
        settings[key] = trim(content.substr(eq + 1));
    }
    return settings;
}

inline Settings parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw config_error("config", "cannot read config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

struct RunConfig
{
    std::string command;
    ModelParams params;
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string format;
    double horizon = 4.0;
    double x = 0.5;
    double eps = 0.2;
    std::uint64_t n = 10000;
    EstimatorMethod method = EstimatorMethod::ImportanceSampling;
    std::optional<double> tilt_s;
    std::optional<double> tilt_theta1;
    std::optional<double> tilt_theta2;
    std::size_t grid = 0;
    std::size_t cap = 64;
    std::size_t max_events = 60;
    std::vector<double> horizons;
    double budget = 1e-12;
    unsigned workers = 1;
    std::uint64_t replica = 0;
    std::string view = "events";
    std::string simulator = "subordinated";

    // default_tilt(x) with any explicit overrides applied.
    TiltConfig tilt() const
    {
        TiltConfig t = default_tilt(x, params);
        if (tilt_s) {
            t.switch_time = *tilt_s;
        }
        if (tilt_theta1) {
            t.theta1 = *tilt_theta1;
        }
        if (tilt_theta2) {
            t.theta2 = *tilt_theta2;
        }
        return t;
    }
};

namespace detail
{

inline double parse_real(const Settings& s, const std::string& key)
{
    const auto& text = s.at(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw config_error(key, "'" + key + "' is not a number: '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) {
        throw config_error(key, "'" + key + "' is not a finite number: '" + text + "'");
    }
    return v;
}

inline std::uint64_t parse_count(const Settings& s, const std::string& key)
{
    const auto& text = s.at(key);
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
        throw config_error(key, "'" + key + "' must be a nonnegative integer: '" + text + "'");
    }
    try {
        return std::stoull(text);
    } catch (const std::exception&) {
        throw config_error(key, "'" + key + "' is out of range: '" + text + "'");
    }
}

inline void require(bool ok, const std::string& key, const std::string& message)
{
    if (!ok) {
        throw config_error(key, message);
    }
}

inline std::vector<double> parse_list(const Settings& s, const std::string& key)
{
    std::vector<double> values;
    std::stringstream in(s.at(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        Settings one{{key, trim(item)}};
        values.push_back(parse_real(one, key));
    }
    require(!values.empty(), key, "'" + key + "' must list at least one value");
    return values;
}

} // namespace detail

/**
 * Turns merged settings into a validated RunConfig. Every failure is a
 * config_error naming the offending key.
 */
inline RunConfig resolve(const std::string& command, const Settings& s)
{
    using namespace detail;
    RunConfig c;
    c.command = command;
    for (const auto& [key, value] : s) {
        require(is_known_key(key), key, "unknown key '" + key + "'");
    }
    auto has = [&](const char* key) { return s.count(key) > 0; };

    if (has("lambda")) c.params.lambda = parse_real(s, "lambda");
    if (has("mu")) c.params.mu = parse_real(s, "mu");
    if (has("alpha")) c.params.alpha = parse_real(s, "alpha");
    require(c.params.lambda > 0.0, "lambda", "lambda must be positive");
    require(c.params.mu > 0.0, "mu", "mu must be positive");
    require(c.params.alpha > 0.0, "alpha", "alpha must be positive");

    if (has("seed")) c.seed = parse_count(s, "seed");
    if (has("out")) c.out = s.at("out");
    if (has("T")) c.horizon = parse_real(s, "T");
    require(c.horizon > 0.0, "T", "T must be positive");
    if (has("x")) c.x = parse_real(s, "x");
    if (has("eps")) c.eps = parse_real(s, "eps");
    require(c.eps > 0.0, "eps", "eps must be positive");
    if (has("n")) c.n = parse_count(s, "n");
    require(c.n >= 1, "n", "n must be at least 1");
    if (has("method")) {
        const auto& m = s.at("method");
        require(m == "naive" || m == "is", "method", "method must be 'naive' or 'is'");
        c.method = m == "naive" ? EstimatorMethod::Naive : EstimatorMethod::ImportanceSampling;
    }
    if (has("tilt-s")) c.tilt_s = parse_real(s, "tilt-s");
    if (has("tilt-theta1")) c.tilt_theta1 = parse_real(s, "tilt-theta1");
    if (has("tilt-theta2")) c.tilt_theta2 = parse_real(s, "tilt-theta2");
    require(!c.tilt_s || (*c.tilt_s >= 0.0 && *c.tilt_s < 1.0), "tilt-s", "tilt-s must lie in [0, 1)");
    require(!c.tilt_theta1 || *c.tilt_theta1 > 0.0, "tilt-theta1", "tilt-theta1 must be positive");
    require(!c.tilt_theta2 || *c.tilt_theta2 > 0.0, "tilt-theta2", "tilt-theta2 must be positive");

    const std::size_t default_grid = command == "rate" ? 50 : default_path_grid;
    c.grid = has("grid") ? parse_count(s, "grid") : default_grid;
    require(c.grid >= 1, "grid", "grid must be at least 1");
    if (has("M")) c.cap = parse_count(s, "M");
    require(c.cap >= 1, "M", "M must be at least 1");
    if (has("K")) c.max_events = parse_count(s, "K");
    if (has("budget")) c.budget = parse_real(s, "budget");
    require(c.budget >= 0.0, "budget", "budget must be nonnegative");
    if (has("workers")) c.workers = static_cast<unsigned>(parse_count(s, "workers"));
    require(c.workers >= 1, "workers", "workers must be at least 1");
    if (has("replica")) c.replica = parse_count(s, "replica");
    if (has("view")) c.view = s.at("view");
    require(c.view == "events" || c.view == "scaled", "view", "view must be 'events' or 'scaled'");
    if (has("simulator")) c.simulator = s.at("simulator");
    require(c.simulator == "subordinated" || c.simulator == "decomposed", "simulator",
        "simulator must be 'subordinated' or 'decomposed'");

    if (has("T-list")) {
        c.horizons = parse_list(s, "T-list");
    } else if (command == "lln") {
        c.horizons = {25.0, 50.0, 100.0, 200.0};
    } else {
        c.horizons = {40.0, 80.0, 160.0};
    }
    for (double h : c.horizons) {
        require(h > 0.0, "T-list", "every T-list entry must be positive");
    }

    const bool table_default = command == "simulate" || command == "rate" || command == "lln" || command == "sweep"
        || command == "paths";
    c.format = has("format") ? s.at("format") : (table_default ? "csv" : "json");
    require(c.format == "csv" || c.format == "json", "format", "format must be 'csv' or 'json'");

    const bool needs_positive_x = command == "rate" || command == "paths";
    require(!needs_positive_x || c.x > 0.0, "x", "x must be positive for this command");
    return c;
}

// %.17g; inf / nan spelled out.
inline std::string number(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json json_number(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

// Fixed-column table rendered as CSV (header row first) or as {"columns": [...], "rows": [[...]]}.
struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;

    void write_csv(std::ostream& out) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            out << (i ? "," : "") << columns[i];
        }
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "") << cell(row[i]);
            }
            out << '\n';
        }
    }

    json to_json() const
    {
        json doc;
        doc["columns"] = columns;
        doc["rows"] = json::array();
        for (const auto& row : rows) {
            doc["rows"].push_back(row);
        }
        return doc;
    }

private:
    static std::string cell(const json& v)
    {
        if (v.is_null()) {
            return "";
        }
        if (v.is_number_float()) {
            return number(v.get<double>());
        }
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_boolean()) {
            return v.get<bool>() ? "1" : "0";
        }
        return v.dump();
    }
};

// Either a table or a JSON document.
struct Output
{
    std::optional<Table> table;
    json document;
};

inline json params_json(const ModelParams& p)
{
    return {{"lambda", p.lambda}, {"mu", p.mu}, {"alpha", p.alpha}};
}

inline json optional_number(const std::optional<double>& v)
{
    return v ? json_number(*v) : json(nullptr);
}

inline json estimate_json(const EstimateResult& r)
{
    return {{"method", r.method}, {"p_hat", json_number(r.p_hat)}, {"log_rate", optional_number(r.log_rate)},
        {"std_err", json_number(r.std_err)}, {"ci95", {json_number(r.ci_low), json_number(r.ci_high)}}, {"n", r.n},
        {"hits", r.hits}, {"ess", json_number(r.ess)}, {"seed", r.seed}, {"low_ess_warning", r.low_ess}};
}

inline Output cmd_simulate(const RunConfig& c)
{
    const SimSpec spec{c.horizon, c.seed, c.replica};
    const auto path = c.simulator == "decomposed" ? simulate_decomposed(c.params, spec)
                                                  : simulate_subordinated(c.params, spec);
    Table t;
    if (c.view == "events") {
        t.columns = {"time", "kind", "post_state"};
        for (const auto& e : path.events) {
            t.rows.push_back({e.time, to_string(e.kind), e.post_state});
        }
    } else {
        const auto scaled = scale_path(path, c.horizon, c.grid);
        t.columns = {"t", "value"};
        for (std::size_t j = 0; j < scaled.grid.size(); ++j) {
            t.rows.push_back({scaled.grid[j], scaled.values[j]});
        }
    }
    return {t, {}};
}

inline Output cmd_exact(const RunConfig& c)
{
    const auto pmf = exact_xi_distribution(c.params, c.horizon, c.cap, c.max_events, c.budget);
    if (c.format == "csv") {
        Table t;
        t.columns = {"state", "mass"};
        for (std::size_t s = 0; s < pmf.masses.size(); ++s) {
            t.rows.push_back({static_cast<std::int64_t>(s), pmf.masses[s]});
        }
        return {t, {}};
    }
    const auto tail = tail_from_pmf(pmf, c.horizon, c.x);
    json masses = json::array();
    for (double m : pmf.masses) {
        masses.push_back(m);
    }
    json doc = {{"params", params_json(c.params)}, {"T", c.horizon}, {"M", c.cap}, {"K", c.max_events},
        {"masses", masses}, {"truncation_error", pmf.truncation_error},
        {"tail", {{"x", c.x}, {"value", tail.value}, {"uncertainty", tail.uncertainty}}}};
    return {std::nullopt, doc};
}

inline Output cmd_rate(const RunConfig& c)
{
    Table t;
    t.columns = {"x", "rate", "rate_variational", "argmax_y", "argmax_z", "z_at_boundary"};
    for (std::size_t j = 1; j <= c.grid; ++j) {
        const double x = c.x * static_cast<double>(j) / static_cast<double>(c.grid);
        const RateQuery q{x, c.params};
        const auto closed = rate_I(q).to_double();
        const auto numeric = rate_via_variational(q);
        t.rows.push_back({x, closed, numeric.rate, numeric.argmax.y, numeric.argmax.z, numeric.z_at_boundary});
    }
    return {t, {}};
}

inline Output cmd_estimate(const RunConfig& c)
{
    EstimateResult r;
    json tilt_json = nullptr;
    if (c.method == EstimatorMethod::Naive) {
        r = estimate_tail_naive(c.params, c.horizon, c.x, c.n, c.seed, c.workers);
    } else {
        const auto tilt = c.tilt();
        r = estimate_tail_is(c.params, c.horizon, c.x, tilt, c.n, c.seed, c.workers);
        tilt_json = {{"s", tilt.switch_time}, {"theta1", tilt.theta1}, {"theta2", tilt.theta2}};
    }
    if (c.format == "csv") {
        Table t;
        t.columns = {"method", "T", "x", "p_hat", "log_rate", "std_err", "ci_low", "ci_high", "n", "hits", "ess",
            "seed", "low_ess_warning"};
        t.rows.push_back({r.method, c.horizon, c.x, r.p_hat, optional_number(r.log_rate), r.std_err, r.ci_low,
            r.ci_high, r.n, r.hits, r.ess, r.seed, r.low_ess});
        return {t, {}};
    }
    json doc = {{"params", params_json(c.params)}, {"T", c.horizon}, {"x", c.x}, {"tilt", tilt_json}};
    const json fields = estimate_json(r);
    for (const auto& [key, value] : fields.items()) {
        doc[key] = value;
    }
    return {std::nullopt, doc};
}

inline Output cmd_lln(const RunConfig& c)
{
    Table t;
    t.columns = {"T", "fraction", "std_err", "ci_low", "ci_high", "n", "hits"};
    for (double h : c.horizons) {
        const auto r = lln_sup_fraction(c.params, h, c.eps, c.n, seed_for_key(c.seed, h), c.workers);
        t.rows.push_back({h, r.p_hat, r.std_err, r.ci_low, r.ci_high, r.n, r.hits});
    }
    return {t, {}};
}

inline Output cmd_sweep(const RunConfig& c)
{
    std::optional<TiltConfig> tilt;
    if (c.method == EstimatorMethod::ImportanceSampling) {
        tilt = c.tilt();
    }
    const auto points = rate_curve_sweep(c.params, c.x, c.horizons, c.method, c.n, c.seed, tilt, c.workers);
    const double target = rate_I({c.x, c.params}).to_double();
    Table t;
    t.columns = {"T", "log_rate", "p_hat", "ci_low", "ci_high", "std_err", "ess", "rate", "error"};
    for (const auto& p : points) {
        if (p.estimate) {
            const auto& r = *p.estimate;
            t.rows.push_back({p.horizon, optional_number(r.log_rate), r.p_hat, r.ci_low, r.ci_high, r.std_err, r.ess,
                target, ""});
        } else {
            t.rows.push_back({p.horizon, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, target, p.error});
        }
    }
    return {t, {}};
}

inline Output cmd_paths(const RunConfig& c)
{
    const auto samples = sample_conditioned_paths(c.params, c.horizon, c.x, c.tilt(), c.n, c.seed, c.grid, c.workers);
    const auto mean = conditioned_mean_path(samples, c.grid);
    const auto optimal = optimal_path(c.x, c.params);
    if (c.format == "json") {
        json values = json::array();
        for (std::size_t j = 0; j < mean.grid.size(); ++j) {
            values.push_back({{"t", mean.grid[j]}, {"conditioned_mean", mean.mean_values[j]},
                {"optimal", optimal(mean.grid[j])}});
        }
        json doc = {{"params", params_json(c.params)}, {"T", c.horizon}, {"x", c.x}, {"hits", samples.size()},
            {"total_weight", json_number(mean.total_weight)}, {"distance", path_distance(mean, optimal)},
            {"breakpoint", optimal.breakpoint}, {"slope", optimal.slope}, {"path", values}};
        return {std::nullopt, doc};
    }
    Table t;
    t.columns = {"t", "conditioned_mean", "optimal", "abs_diff"};
    for (std::size_t j = 0; j < mean.grid.size(); ++j) {
        const double opt = optimal(mean.grid[j]);
        t.rows.push_back({mean.grid[j], mean.mean_values[j], opt, std::abs(mean.mean_values[j] - opt)});
    }
    return {t, {}};
}

inline Output dispatch(const RunConfig& c)
{
    if (c.command == "simulate") return cmd_simulate(c);
    if (c.command == "exact") return cmd_exact(c);
    if (c.command == "rate") return cmd_rate(c);
    if (c.command == "estimate") return cmd_estimate(c);
    if (c.command == "lln") return cmd_lln(c);
    if (c.command == "sweep") return cmd_sweep(c);
    if (c.command == "paths") return cmd_paths(c);
    throw config_error("command", "unknown command '" + c.command + "'");
}

inline void render(const Output& o, const std::string& format, std::ostream& out)
{
    if (o.table) {
        if (format == "json") {
            out << o.table->to_json().dump(2) << '\n';
        } else {
            o.table->write_csv(out);
        }
    } else {
        out << o.document.dump(2) << '\n';
    }
}

inline void error_record(std::ostream& err, const std::string& kind, const std::string& key, const std::string& message)
{
    json record = {{"error", kind}, {"message", message}};
    if (!key.empty()) {
        record["key"] = key;
    }
    err << record.dump() << '\n';
}

/**
 * Entry point shared by the executable and the tests. Settings precedence:
 * command-line flag > --config file > built-in default.
 */
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Simulation and large-deviation toolkit for a population process with uniform catastrophes"};
    app.require_subcommand(1);
    Settings flags;
    std::string config_path;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "dump one simulated path (events or scaled grid)"},
        {"exact", "exact truncated law of xi(T) and its tail"},
        {"rate", "closed-form vs variational rate function table"},
        {"estimate", "tail probability estimate (naive or importance sampling)"},
        {"lln", "sup-exceedance fraction over a T-list"},
        {"sweep", "log-rate estimates over a T-list"},
        {"paths", "conditioned mean path vs optimal path"},
    };
    for (const auto& [name, description] : commands) {
        auto* sub = app.add_subcommand(name, description);
        sub->add_option("--config", config_path, "flat key = value config file");
        for (const auto& key : known_keys()) {
            sub->add_option_function<std::string>("--" + key, [&flags, key](const std::string& v) { flags[key] = v; });
        }
    }

    std::vector<std::string> argv_storage = {"catastrophe"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        error_record(err, "config", "", e.what());
        return exit_config;
    }

    std::string command;
    for (const auto* sub : app.get_subcommands()) {
        command = sub->get_name();
    }

    try {
        Settings merged = config_path.empty() ? Settings{} : parse_config_file(config_path);
        for (const auto& [key, value] : flags) {
            merged[key] = value;
        }
        const auto config = resolve(command, merged);
        const auto output = dispatch(config);
        if (config.out == "-") {
            render(output, config.format, out);
        } else {
            std::ofstream file(config.out, std::ios::binary);
            if (!file) {
                throw config_error("out", "cannot open output file '" + config.out + "'");
            }
            render(output, config.format, file);
        }
        return exit_ok;
    } catch (const config_error& e) {
        error_record(err, "config", e.key(), e.what());
        return exit_config;
    } catch (const numerical_error& e) {
        error_record(err, "numerical", "", e.what());
        return exit_numerical;
    } catch (const statistical_error& e) {
        error_record(err, "statistical", "", e.what());
        return exit_statistical;
    } catch (const std::invalid_argument& e) {
        error_record(err, "config", "", e.what());
        return exit_config;
    }
}

} // namespace catastrophe::cli
#endif // CATASTROPHE_TOOLS_CLI_HPP
