/**
 * @file cli.hpp
 * @brief Command-line front end: config parsing, dispatch and CSV/JSON emission.
 *
 * Usage: gexp <subcommand> [--key value ...] [--config file]
 *
 * The config file is flat text, one key=value per line, '#' starts a
 * comment. Keys are the long flag names without the leading dashes plus
 * the optional key "subcommand". Flags given on the command line override
 * file values.
 *
 * Exit status: 0 when no row fails, 1 on any failing row or numerical
 * error, 2 on a configuration error.
 */
#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gexp/gexp.hpp"

namespace gexp::cli {

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"gheat", "walk",     "capacity",  "clt",   "donsker",
                                                "smalldev", "lil", "rosenthal", "axioms"};
    return names;
}

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Effective configuration: subcommand plus every key with its resolved text value.
struct RunConfig {
    std::string subcommand;
    std::map<std::string, std::string> values;

    const std::string& text(const std::string& key) const {
        const auto it = values.find(key);
        if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
        return it->second;
    }

    double real(const std::string& key) const { return parse_real(key, text(key)); }

    std::size_t count(const std::string& key) const { return parse_count(key, text(key)); }

    std::uint64_t seed() const {
        const auto& s = text("seed");
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            throw ConfigError("malformed value for 'seed': '" + s + "'");
        }
        return v;
    }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split(text(key))) out.push_back(parse_real(key, item));
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key) const {
        std::vector<std::size_t> out;
        for (const auto& item : split(text(key))) out.push_back(parse_count(key, item));
        return out;
    }

    VolatilityBand band() const {
        const auto parts = reals("band");
        if (parts.size() != 2) throw ConfigError("malformed value for 'band': expected lo,hi");
        return {parts[0], parts[1]};
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(item);
        return out;
    }

    static double parse_real(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw ConfigError("malformed number for '" + key + "': '" + s + "'");
        }
        return v;
    }

    static std::size_t parse_count(const std::string& key, const std::string& s) {
        std::size_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            // Accept integral values written in floating form, e.g. 1e6.
            const double d = parse_real(key, s);
            if (d < 0.0 || d != std::floor(d) || d > 1e15) {
                throw ConfigError("malformed integer for '" + key + "': '" + s + "'");
            }
            return static_cast<std::size_t>(d);
        }
        return v;
    }
};

namespace detail {

struct KeySpec {
    std::string key;
    std::string fallback;
    std::string help;
};

inline std::vector<KeySpec> common_keys() {
    return {{"band", "0.5,1", "volatility band sigma_lo,sigma_hi"},
            {"seed", "0", "64-bit seed"},
            {"output", "", "output file (default: standard output)"},
            {"format", "csv", "csv or json"}};
}

inline std::vector<KeySpec> subcommand_keys(const std::string& sub) {
    if (sub == "gheat") {
        return {{"phi", "x2", "test function"},
                {"T", "1", "time horizon"},
                {"points", "801", "spatial grid points"},
                {"half-width", "8", "spatial half width"}};
    }
    if (sub == "walk") {
        return {{"phi", "x2", "test function"},
                {"n", "64", "walk length"},
                {"K", "16", "volatility levels"},
                {"backend", "grid", "grid or exact"}};
    }
    if (sub == "capacity") {
        return {{"event", "supabs", "supabs (max |S_k|) or max (max S_k)"},
                {"dir", "ge", "le or ge"},
                {"x", "1", "threshold, positive"},
                {"n", "512", "walk length"},
                {"K", "16", "volatility levels"},
                {"delta", "0.1", "relative ramp width"},
                {"backend", "grid", "grid or exact"},
                {"tol", "0.03", "bracket widening"}};
    }
    if (sub == "clt") {
        return {{"n-list", "64,256,1024", "walk lengths"},
                {"phi", "all", "comma list of test functions or all"},
                {"tol", "0.02", "DP vs PDE tolerance"},
                {"two-time-n", "256", "walk length of the two-time check (0 disables)"},
                {"paths", "20000", "Monte Carlo paths for the representation rows (0 disables)"},
                {"steps", "32", "Euler steps for the representation rows"}};
    }
    if (sub == "donsker") {
        return {{"n-list", "256,1024", "walk lengths"},
                {"x-list", "0.5,1", "thresholds"},
                {"delta", "0.1", "relative ramp width"}};
    }
    if (sub == "smalldev") {
        return {{"n", "512", "walk length of the bracket check"},
                {"x", "0.4", "small-ball radius"},
                {"delta", "0.1", "relative ramp width"},
                {"joint-n", "1024", "walk length of the joint small ball (0 disables)"},
                {"trend", "64,256,1024", "walk lengths of the x_n trend rows"},
                {"exponent", "0.25", "x_n = n^-exponent"},
                {"paths", "20000", "Anderson Monte Carlo paths (0 disables)"},
                {"steps", "500", "Anderson Euler steps"}};
    }
    if (sub == "lil") {
        return {{"n", "1000000", "last checkpoint n_J"},
                {"n1", "100", "first checkpoint"},
                {"ratio", "1.1", "checkpoint growth ratio"},
                {"sigma", "hi", "lo, hi or a number in the band"},
                {"seeds", "8", "number of paths"}};
    }
    if (sub == "rosenthal") {
        return {{"p", "2", "comma list of even moments (2 or 4)"},
                {"n-list", "16,32,64,128,256,512,1024", "walk lengths"},
                {"mc-n", "64", "walk length of the degenerate Monte Carlo check"},
                {"paths", "40000", "Monte Carlo paths (0 disables)"}};
    }
    if (sub == "axioms") {
        return {{"n", "6", "walk length"}, {"K", "2", "volatility levels"}, {"count", "100", "random functionals"}};
    }
    return {};
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Flat key=value file. Keys are validated later against the subcommand.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config file line " + std::to_string(lineno) + ": expected key=value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::string valid_list() {
    std::string s;
    for (const auto& n : subcommands()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

inline std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

/// Resolve args (without the program name) plus an optional config file into a RunConfig.
/// Returns std::nullopt when help was requested; the help text goes to `help`.
inline std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::string& help) {
    // Locate the config file first so it can also supply the subcommand.
    std::map<std::string, std::string> file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a file path");
            file = detail::read_config_file(args[i + 1]);
        } else if (args[i].rfind("--config=", 0) == 0) {
            file = detail::read_config_file(args[i].substr(9));
        }
    }
    std::vector<std::string> argv = args;
    const auto positional = std::find_if(argv.begin(), argv.end(), [](const std::string& a) {
        return !a.empty() && a[0] != '-';
    });
    std::string sub;
    if (positional != argv.end() && positional == argv.begin()) {
        sub = *positional;
    } else if (const auto it = file.find("subcommand"); it != file.end()) {
        sub = it->second;
        argv.insert(argv.begin(), sub);
    } else if (std::find(args.begin(), args.end(), "--help") != args.end() ||
               std::find(args.begin(), args.end(), "-h") != args.end()) {
        help = "usage: gexp <subcommand> [options]\nsubcommands: " + detail::valid_list() + "\n";
        return std::nullopt;
    }
    if (sub.empty()) throw ConfigError("missing subcommand; valid subcommands: " + detail::valid_list());
    if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end()) {
        throw ConfigError("unknown subcommand '" + sub + "'; valid subcommands: " + detail::valid_list());
    }

    auto keys = detail::common_keys();
    const auto extra = detail::subcommand_keys(sub);
    keys.insert(keys.end(), extra.begin(), extra.end());
    for (const auto& [k, v] : file) {
        if (k == "subcommand") {
            if (v != sub) throw ConfigError("config file subcommand '" + v + "' conflicts with '" + sub + "'");
            continue;
        }
        const bool known = std::any_of(keys.begin(), keys.end(), [&](const auto& s) { return s.key == k; });
        if (!known) throw ConfigError("unknown config key '" + k + "' for subcommand " + sub);
    }

    CLI::App app{"Sub-linear expectation experiments", "gexp"};
    auto* cmd = app.add_subcommand(sub);
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> options;
    for (const auto& k : keys) options[k.key] = cmd->add_option("--" + k.key, flags[k.key], k.help)->default_str(k.fallback);
    std::string config_path;
    cmd->add_option("--config", config_path, "flat key=value config file");
    bool timing = false;
    cmd->add_flag("--timing", timing, "report wall-clock runtime (output is then not reproducible)");
    try {
        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        help = cmd->help();
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }

    RunConfig cfg;
    cfg.subcommand = sub;
    for (const auto& k : keys) {
        if (options[k.key]->count() > 0) {
            cfg.values[k.key] = flags[k.key];
        } else if (const auto it = file.find(k.key); it != file.end()) {
            cfg.values[k.key] = it->second;
        } else {
            cfg.values[k.key] = k.fallback;
        }
    }
    cfg.values["timing"] = timing || (file.count("timing") && file.at("timing") == "true") ? "true" : "false";

    // Validate eagerly so errors surface before any computation.
    (void)cfg.band();
    (void)cfg.seed();
    const auto& fmt = cfg.text("format");
    if (fmt != "csv" && fmt != "json") throw ConfigError("format must be csv or json, got '" + fmt + "'");
    return cfg;
}

namespace detail {

inline std::vector<std::string> phi_list(const RunConfig& cfg) {
    const auto& text = cfg.text("phi");
    if (text == "all") return battery_names();
    auto names = RunConfig::split(text);
    for (const auto& n : names) (void)battery_function(n);
    return names;
}

inline Backend parse_backend(const RunConfig& cfg) {
    const auto& b = cfg.text("backend");
    if (b == "grid") return Backend::grid;
    if (b == "exact") return Backend::exact;
    throw ConfigError("backend must be grid or exact, got '" + b + "'");
}

inline std::vector<ExperimentRecord> run_gheat(const RunConfig& cfg) {
    const auto band = cfg.band();
    const BatteryFunction bf = battery_function(cfg.text("phi"));
    const double t = cfg.real("T");
    if (!(t > 0.0)) throw ConfigError("T must be positive");
    const std::size_t points = cfg.count("points");
    const double half_width = cfg.real("half-width");
    ::gexp::detail::Stopwatch sw;
    // E[phi(sqrt(T) xi)] equals the time-T value of the G-heat equation at the origin.
    ScalarTestFunction scaled = bf.fn;
    const double root = std::sqrt(t);
    scaled.evaluator = [f = bf.fn.evaluator, root](double x) { return f(root * x); };
    const PdeValue v = gnormal_pair(scaled, band, PdeGrid::with_cfl(band, half_width, points));
    const double ms = sw.ms();
    Params p;
    p.add("band", band).add("phi", bf.name).add("T", t).add("points", points).add("half_width", half_width);
    return {make_record("gheat", Params(p).add("side", "upper"), CheckKind::info, {v.pair.upper},
                        std::numeric_limits<double>::quiet_NaN(), v.tol, ms),
            make_record("gheat", Params(p).add("side", "lower"), CheckKind::info, {v.pair.lower},
                        std::numeric_limits<double>::quiet_NaN(), v.tol, 0.0)};
}

inline std::vector<ExperimentRecord> run_walk(const RunConfig& cfg) {
    const auto band = cfg.band();
    const BatteryFunction bf = battery_function(cfg.text("phi"));
    const std::size_t n = cfg.count("n");
    const std::size_t k = cfg.count("K");
    const Backend backend = parse_backend(cfg);
    ::gexp::detail::Stopwatch sw;
    const WalkSpec spec{n, StepFamily(band, k), Scale::sqrt_n};
    const auto f = PathFunctional::of_terminal(bf.fn.evaluator);
    const DPValue v = backend == Backend::exact ? exact_walk_value(spec, f)
                                                : grid_walk_value(spec, SpatialGrid::aligned(spec), f);
    const double ms = sw.lap();
    const PdeValue ref = gnormal_pair(bf.fn, band);
    Params p;
    p.add("band", band).add("phi", bf.name).add("n", n).add("K", k).add("backend", cfg.text("backend"));
    p.add("reference", "gheat");
    return {make_record("walk", Params(p).add("side", "upper"), CheckKind::info, {v.pair.upper}, ref.pair.upper,
                        v.backend_tol, ms),
            make_record("walk", Params(p).add("side", "lower"), CheckKind::info, {v.pair.lower}, ref.pair.lower,
                        v.backend_tol, sw.ms())};
}

inline std::vector<ExperimentRecord> run_capacity(const RunConfig& cfg) {
    const auto band = cfg.band();
    const double x = cfg.real("x");
    if (!(x > 0.0)) throw ConfigError("capacity: x must be positive, got " + format_number(x));
    const auto& event = cfg.text("event");
    const auto& dir = cfg.text("dir");
    if (event != "supabs" && event != "max") throw ConfigError("event must be supabs or max, got '" + event + "'");
    if (dir != "le" && dir != "ge") throw ConfigError("dir must be le or ge, got '" + dir + "'");
    const double delta = cfg.real("delta");
    const double tol = cfg.real("tol");
    const std::size_t n = cfg.count("n");
    const std::size_t k = cfg.count("K");
    CapacityBackend backend;
    backend.kind = parse_backend(cfg);

    CapacityPair ref;
    if (event == "supabs") {
        ref = gcap_sup_abs(x, band, dir == "le" ? SupDirection::le : SupDirection::ge).pair;
    } else {
        const CapacityPair ge = gcap_onesided_sup(x, band).pair;
        ref = dir == "ge" ? ge : CapacityPair{1.0 - ge.lower_cap, 1.0 - ge.upper_cap};
    }
    ::gexp::detail::Stopwatch sw;
    const WalkSpec spec{n, StepFamily(band, band.degenerate() ? 1 : k), Scale::sqrt_n};
    const EventSpec ev{event == "supabs" ? Statistic::abs_max : Statistic::max, x,
                       dir == "ge" ? Direction::above : Direction::below};
    const CapacityBracket b = walk_capacity(spec, ev, delta, backend);
    const double ms = sw.ms();
    Params p;
    p.add("band", band).add("event", event).add("dir", dir).add("x", x).add("n", n).add("K", k);
    p.add("delta", delta).add("backend", cfg.text("backend")).add("bracket_width", b.width());
    return {make_record("capacity", Params(p).add("capacity", "V"), CheckKind::bracket,
                        {b.upper_cap.lo, b.upper_cap.hi}, ref.upper_cap, tol + b.backend_tol, ms),
            make_record("capacity", Params(p).add("capacity", "v"), CheckKind::bracket,
                        {b.lower_cap.lo, b.lower_cap.hi}, ref.lower_cap, tol + b.backend_tol, 0.0)};
}

inline std::vector<ExperimentRecord> dispatch_rows(const RunConfig& cfg) {
    const auto& sub = cfg.subcommand;
    if (sub == "gheat") return run_gheat(cfg);
    if (sub == "walk") return run_walk(cfg);
    if (sub == "capacity") return run_capacity(cfg);
    if (sub == "clt") {
        CltConfig c;
        c.band = cfg.band();
        c.n_list = cfg.counts("n-list");
        c.phis = phi_list(cfg);
        c.tolerance = cfg.real("tol");
        c.two_time_n = cfg.count("two-time-n");
        auto rows = run_clt(c);
        if (cfg.count("paths") > 0) {
            RepresentationConfig r;
            r.band = c.band;
            r.phis = c.phis;
            r.paths = cfg.count("paths");
            r.steps = cfg.count("steps");
            r.seed = cfg.seed();
            auto more = run_representation(r);
            rows.insert(rows.end(), more.begin(), more.end());
        }
        return rows;
    }
    if (sub == "donsker") {
        DonskerConfig c;
        c.band = cfg.band();
        c.n_list = cfg.counts("n-list");
        c.x_list = cfg.reals("x-list");
        c.delta = cfg.real("delta");
        return run_donsker(c);
    }
    if (sub == "smalldev") {
        SmallDevConfig c;
        c.band = cfg.band();
        c.n_list = {cfg.count("n")};
        c.x = cfg.real("x");
        c.delta = cfg.real("delta");
        c.joint_n = cfg.count("joint-n");
        c.trend_n = cfg.counts("trend");
        c.schedule.exponent = cfg.real("exponent");
        c.anderson = cfg.count("paths") > 0;
        c.anderson_cfg.paths = std::max<std::size_t>(cfg.count("paths"), 1);
        c.anderson_cfg.steps = cfg.count("steps");
        c.anderson_cfg.seed = cfg.seed();
        return run_smalldev(c);
    }
    if (sub == "lil") {
        LilConfig c;
        c.band = cfg.band();
        c.schedule.last = cfg.count("n");
        c.schedule.first = cfg.count("n1");
        c.schedule.ratio = cfg.real("ratio");
        const auto& s = cfg.text("sigma");
        if (s == "lo") {
            c.sigma = c.band.lo();
        } else if (s == "hi") {
            c.sigma = c.band.hi();
        } else {
            c.sigma = RunConfig::parse_real("sigma", s);
        }
        c.seeds = cfg.count("seeds");
        c.seed = cfg.seed();
        return run_lil(c);
    }
    if (sub == "rosenthal") {
        RosenthalConfig c;
        c.band = cfg.band();
        c.p_list.clear();
        for (auto p : cfg.counts("p")) c.p_list.push_back(static_cast<unsigned>(p));
        c.n_list = cfg.counts("n-list");
        c.mc_n = cfg.count("mc-n");
        c.mc_paths = cfg.count("paths");
        c.degenerate_check = c.mc_paths > 0;
        c.seed = cfg.seed();
        return run_rosenthal(c);
    }
    if (sub == "axioms") {
        AxiomConfig c;
        c.band = cfg.band();
        c.n = cfg.count("n");
        c.k = cfg.count("K");
        c.count = cfg.count("count");
        c.seed = cfg.seed();
        return run_axioms(c);
    }
    throw ConfigError("unknown subcommand '" + sub + "'; valid subcommands: " + valid_list());
}

inline std::string runtime_text(const ExperimentRecord& r, bool timing) {
    if (!timing) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", r.runtime_ms);
    return buf;
}

}  // namespace detail

inline void write_csv(std::ostream& out, const RunConfig& cfg, const std::vector<ExperimentRecord>& rows) {
    const bool timing = cfg.text("timing") == "true";
    out << "# subcommand=" << cfg.subcommand << '\n';
    for (const auto& [k, v] : cfg.values) out << "# " << k << '=' << v << '\n';
    out << "experiment,params,computed,reference,tolerance,verdict,runtime_ms\n";
    for (const auto& r : rows) {
        std::string computed;
        for (std::size_t i = 0; i < r.computed.size(); ++i) {
            if (i > 0) computed += ';';
            computed += detail::format_value(r.computed[i]);
        }
        out << r.experiment << ',' << detail::csv_quote(r.params) << ',' << computed << ','
            << detail::format_value(r.reference) << ',' << detail::format_value(r.tolerance) << ','
            << to_string(r.verdict) << ',' << detail::runtime_text(r, timing) << '\n';
    }
}

inline void write_json(std::ostream& out, const RunConfig& cfg, const std::vector<ExperimentRecord>& rows) {
    using nlohmann::ordered_json;
    const bool timing = cfg.text("timing") == "true";
    const auto number = [](double v) -> ordered_json {
        if (std::isfinite(v)) return v;
        return detail::format_value(v);
    };
    ordered_json doc;
    doc["subcommand"] = cfg.subcommand;
    doc["config"] = ordered_json::object();
    for (const auto& [k, v] : cfg.values) doc["config"][k] = v;
    doc["columns"] = {"experiment", "params", "computed", "reference", "tolerance", "verdict", "runtime_ms"};
    doc["rows"] = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json row;
        row["experiment"] = r.experiment;
        row["params"] = r.params;
        row["computed"] = ordered_json::array();
        for (double v : r.computed) row["computed"].push_back(number(v));
        row["reference"] = number(r.reference);
        row["tolerance"] = number(r.tolerance);
        row["verdict"] = std::string(to_string(r.verdict));
        if (timing) {
            row["runtime_ms"] = r.runtime_ms;
        } else {
            row["runtime_ms"] = "NA";
        }
        doc["rows"].push_back(std::move(row));
    }
    const auto s = summarize(rows);
    doc["summary"] = {{"pass", s.pass}, {"fail", s.fail}, {"info", s.info}, {"flagged", s.flagged}};
    out << doc.dump(2) << '\n';
}

/// Full run: parse, dispatch, emit. Returns the process exit status.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    std::vector<ExperimentRecord> rows;
    try {
        std::string help;
        auto parsed = parse_config(args, help);
        if (!parsed) {
            out << help;
            return 0;
        }
        cfg = std::move(*parsed);
        rows = detail::dispatch_rows(cfg);
    } catch (const NumericalError& e) {
        err << "gexp: numerical error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "gexp: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "gexp: " << e.what() << '\n';
        return 1;
    }

    const auto& path = cfg.text("output");
    std::ofstream file;
    if (!path.empty()) {
        file.open(path, std::ios::binary);
        if (!file) {
            err << "gexp: cannot open output file '" << path << "'\n";
            return 2;
        }
    }
    std::ostream& sink = path.empty() ? out : file;
    if (cfg.text("format") == "json") {
        write_json(sink, cfg, rows);
    } else {
        write_csv(sink, cfg, rows);
    }
    const auto s = summarize(rows);
    err << "gexp " << cfg.subcommand << ": " << s.pass << " pass, " << s.fail << " fail, " << s.info << " info, "
        << s.flagged << " flagged\n";
    return s.fail == 0 ? 0 : 1;
}

}  // namespace gexp::cli
