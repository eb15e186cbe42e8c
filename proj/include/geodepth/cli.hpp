#pragma once

// Experiment configs and the command implementations behind the geodepth
// executable. Commands write results to `out`, diagnostics to `err`, and
// return the process exit code: 0 success, 1 config/data error,
// 2 numerical non-convergence.

#include "geodepth/asymptotics.hpp"
#include "geodepth/depth.hpp"
#include "geodepth/io.hpp"
#include "geodepth/oracle.hpp"
#include "geodepth/quantile.hpp"
#include "geodepth/samplers.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace geodepth::cli {

using io::json;
using io::FormatError;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct SeriesConfig {
    std::string label;
    DistributionSpec spec;
};

struct ScheduleConfig {
    std::string kind;
    std::vector<double> params;
    std::vector<Eigen::Index> n;
};

struct OutputConfig {
    std::string csv;
    std::string svg;
    io::AxisMode x_axis = io::AxisMode::linear;
    io::AxisMode y_axis = io::AxisMode::linear;
};

struct MethodConfig {
    std::optional<std::string> depth;  // exact2d | approx; default by dimension
    std::optional<std::size_t> directions;
    double tol = 1e-8;
    std::size_t max_iter = 10000;
    bool adaptive_tol = true;
    Aggregation aggregation = Aggregation::median;
    MomentSource moments = MomentSource::population;
};

struct ExperimentConfig {
    std::string title;
    std::optional<std::string> curve;
    std::vector<SeriesConfig> series;
    std::optional<std::string> data;
    std::optional<Vector> direction;
    std::optional<double> alpha;
    std::optional<Vector> index;
    std::optional<Vector> point;
    std::optional<ScheduleConfig> schedule;
    NPolicy n_policy = NPolicy::growing();
    std::vector<std::uint64_t> seeds;
    std::optional<Eigen::Index> n;
    std::uint64_t seed = 0;
    MethodConfig method;
    OutputConfig output;
};

inline constexpr int kSchemaVersion = 1;

namespace detail {

using io::check_keys;
using io::get_as;

inline std::string spec_label(const DistributionSpec& s) {
    switch (s.kind) {
        case DistributionKind::gaussian_diag: return "gaussian";
        case DistributionKind::pareto_indep: return "pareto(" + io::detail::fmt(s.delta, 6) + ")";
        case DistributionKind::spherical_exponential: return "spherical_exponential";
    }
    return "series";
}

inline std::vector<Eigen::Index> n_range_from_json(const json& j) {
    check_keys(j, {"start", "stop", "count", "spacing"}, "schedule.n_range");
    for (const char* k : {"start", "stop", "count"})
        if (!j.contains(k)) throw FormatError(std::string("schedule.n_range: missing '") + k + "'");
    const double start = get_as<double>(j["start"], "schedule.n_range.start");
    const double stop = get_as<double>(j["stop"], "schedule.n_range.stop");
    const int count = get_as<int>(j["count"], "schedule.n_range.count");
    const std::string spacing = j.contains("spacing") ? get_as<std::string>(j["spacing"], "schedule.n_range.spacing") : "linear";
    if (count < 1) throw FormatError("schedule.n_range: count must be >= 1");
    if (!(start >= 1.0) || !(stop >= start)) throw FormatError("schedule.n_range: need 1 <= start <= stop");
    if (spacing != "linear" && spacing != "geometric") throw FormatError("schedule.n_range: spacing must be linear or geometric");
    std::vector<Eigen::Index> out;
    for (int k = 0; k < count; ++k) {
        const double f = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        const double v = spacing == "linear" ? start + (stop - start) * f : start * std::pow(stop / start, f);
        out.push_back(static_cast<Eigen::Index>(std::llround(v)));
    }
    return out;
}

inline ScheduleConfig schedule_from_json(const json& j) {
    check_keys(j, {"kind", "params", "n", "n_range"}, "schedule");
    if (!j.contains("kind")) throw FormatError("schedule: missing 'kind'");
    ScheduleConfig s;
    s.kind = get_as<std::string>(j["kind"], "schedule.kind");
    if (j.contains("params")) s.params = get_as<std::vector<double>>(j["params"], "schedule.params");
    if (j.contains("n") == j.contains("n_range")) throw FormatError("schedule: give exactly one of 'n' and 'n_range'");
    if (j.contains("n")) s.n = get_as<std::vector<Eigen::Index>>(j["n"], "schedule.n");
    else s.n = n_range_from_json(j["n_range"]);
    return s;
}

inline NPolicy n_policy_from_json(const json& j) {
    check_keys(j, {"kind", "n"}, "n_policy");
    const std::string kind = j.contains("kind") ? get_as<std::string>(j["kind"], "n_policy.kind") : "";
    if (kind == "growing") {
        if (j.contains("n")) throw FormatError("n_policy: 'n' applies to the fixed policy only");
        return NPolicy::growing();
    }
    if (kind == "fixed") {
        if (!j.contains("n")) throw FormatError("n_policy: fixed policy needs 'n'");
        return NPolicy::fixed(get_as<Eigen::Index>(j["n"], "n_policy.n"));
    }
    throw FormatError("n_policy: kind must be 'fixed' or 'growing'");
}

inline MethodConfig method_from_json(const json& j) {
    check_keys(j, {"depth", "directions", "tol", "max_iter", "adaptive_tol", "aggregation", "moments"}, "method");
    MethodConfig m;
    if (j.contains("depth")) {
        m.depth = get_as<std::string>(j["depth"], "method.depth");
        if (*m.depth != "exact2d" && *m.depth != "approx") throw FormatError("method.depth must be 'exact2d' or 'approx'");
    }
    if (j.contains("directions")) m.directions = get_as<std::size_t>(j["directions"], "method.directions");
    if (j.contains("tol")) m.tol = get_as<double>(j["tol"], "method.tol");
    if (j.contains("max_iter")) m.max_iter = get_as<std::size_t>(j["max_iter"], "method.max_iter");
    if (j.contains("adaptive_tol")) m.adaptive_tol = get_as<bool>(j["adaptive_tol"], "method.adaptive_tol");
    if (j.contains("aggregation")) {
        const auto a = get_as<std::string>(j["aggregation"], "method.aggregation");
        if (a == "median") m.aggregation = Aggregation::median;
        else if (a == "mean") m.aggregation = Aggregation::mean;
        else throw FormatError("method.aggregation must be 'median' or 'mean'");
    }
    if (j.contains("moments")) {
        const auto a = get_as<std::string>(j["moments"], "method.moments");
        if (a == "population") m.moments = MomentSource::population;
        else if (a == "sample") m.moments = MomentSource::sample;
        else throw FormatError("method.moments must be 'population' or 'sample'");
    }
    return m;
}

inline OutputConfig output_from_json(const json& j) {
    check_keys(j, {"csv", "svg", "x_axis", "y_axis"}, "output");
    OutputConfig o;
    if (j.contains("csv")) o.csv = get_as<std::string>(j["csv"], "output.csv");
    if (j.contains("svg")) o.svg = get_as<std::string>(j["svg"], "output.svg");
    if (j.contains("x_axis")) o.x_axis = io::axis_mode_from_string(get_as<std::string>(j["x_axis"], "output.x_axis"));
    if (j.contains("y_axis")) o.y_axis = io::axis_mode_from_string(get_as<std::string>(j["y_axis"], "output.y_axis"));
    return o;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    detail::check_keys(j,
                       {"schema", "title", "curve", "distribution", "series", "data", "direction", "alpha", "index", "point",
                        "schedule", "n_policy", "seeds", "n", "seed", "method", "output"},
                       "config");
    if (!j.contains("schema")) throw FormatError("config: missing 'schema'");
    if (detail::get_as<int>(j["schema"], "config.schema") != kSchemaVersion)
        throw FormatError("config: unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
    ExperimentConfig c;
    if (j.contains("title")) c.title = detail::get_as<std::string>(j["title"], "config.title");
    if (j.contains("curve")) c.curve = detail::get_as<std::string>(j["curve"], "config.curve");
    if (j.contains("distribution") && j.contains("series")) throw FormatError("config: give 'distribution' or 'series', not both");
    if (j.contains("distribution")) {
        const auto spec = io::spec_from_json(j["distribution"]);
        c.series.push_back({detail::spec_label(spec), spec});
    }
    if (j.contains("series")) {
        if (!j["series"].is_array() || j["series"].empty()) throw FormatError("config.series: expected a non-empty array");
        for (const auto& s : j["series"]) {
            detail::check_keys(s, {"label", "distribution"}, "series");
            if (!s.contains("distribution")) throw FormatError("series: missing 'distribution'");
            const auto spec = io::spec_from_json(s["distribution"]);
            const std::string label = s.contains("label") ? detail::get_as<std::string>(s["label"], "series.label") : detail::spec_label(spec);
            c.series.push_back({label, spec});
        }
    }
    if (j.contains("data")) c.data = detail::get_as<std::string>(j["data"], "config.data");
    if (j.contains("direction")) c.direction = io::vector_from_json(j["direction"], "config.direction");
    if (j.contains("alpha")) c.alpha = detail::get_as<double>(j["alpha"], "config.alpha");
    if (j.contains("index")) c.index = io::vector_from_json(j["index"], "config.index");
    if (j.contains("point")) c.point = io::vector_from_json(j["point"], "config.point");
    if (j.contains("schedule")) c.schedule = detail::schedule_from_json(j["schedule"]);
    if (j.contains("n_policy")) c.n_policy = detail::n_policy_from_json(j["n_policy"]);
    if (j.contains("seeds")) c.seeds = detail::get_as<std::vector<std::uint64_t>>(j["seeds"], "config.seeds");
    if (j.contains("n")) c.n = detail::get_as<Eigen::Index>(j["n"], "config.n");
    if (j.contains("seed")) c.seed = detail::get_as<std::uint64_t>(j["seed"], "config.seed");
    if (j.contains("method")) c.method = detail::method_from_json(j["method"]);
    if (j.contains("output")) c.output = detail::output_from_json(j["output"]);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    const std::string text = io::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

/// A preset name resolves to <preset_dir>/<name>.json; anything containing
/// a path separator or ending in .json is taken as a path.
inline std::string resolve_preset(const std::string& name, const std::string& preset_dir) {
    if (name.find('/') != std::string::npos || (name.size() > 5 && name.substr(name.size() - 5) == ".json")) return name;
    return (std::filesystem::path(preset_dir) / (name + ".json")).string();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Runs `body` and maps exceptions onto the exit-code contract.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

namespace detail {

inline const SeriesConfig& single_series(const ExperimentConfig& c, const char* cmd) {
    if (c.series.size() != 1) throw FormatError(std::string(cmd) + ": exactly one distribution is required");
    return c.series.front();
}

/// Data file when configured, otherwise a fresh sample of the distribution.
inline Dataset input_data(const ExperimentConfig& c, const char* cmd) {
    if (c.data) return io::load_dataset(*c.data);
    if (c.series.size() == 1 && c.n) return sample(c.series.front().spec, *c.n, RngSpec{c.seed, 0});
    throw FormatError(std::string(cmd) + ": need 'data' or a distribution with 'n'");
}

inline Vector index_vector(const ExperimentConfig& c, Eigen::Index dim) {
    if (c.index && (c.alpha || c.direction)) throw FormatError("quantile: give 'index' or 'alpha'+'direction', not both");
    if (c.index) {
        require_dim(dim, c.index->size(), "quantile index");
        return *c.index;
    }
    if (c.alpha && c.direction) {
        require_dim(dim, c.direction->size(), "quantile direction");
        return *c.alpha * UnitDirection::normalize(*c.direction).coords();
    }
    throw FormatError("quantile: need 'index' or 'alpha' with 'direction'");
}

inline json solution_json(const QuantileSolution& s) {
    return json{{"q", io::vector_to_json(s.q)},
                {"residual_norm", s.residual_norm},
                {"iterations", s.iterations},
                {"atoms", s.atom_hits},
                {"n", s.n},
                {"objective", s.objective_value},
                {"converged", s.converged},
                {"non_unique", s.non_unique}};
}

}  // namespace detail

inline int cmd_sample(const ExperimentConfig& c, bool header, std::ostream& out) {
    const auto& s = detail::single_series(c, "sample");
    if (!c.n) throw FormatError("sample: missing 'n'");
    if (*c.n < 0) throw FormatError("sample: n must be >= 0");
    const Dataset data = sample(s.spec, *c.n, RngSpec{c.seed, 0});
    const std::string csv = io::dataset_to_csv(data, header);
    if (c.output.csv.empty() || c.output.csv == "-") out << csv;
    else io::write_file(c.output.csv, csv);
    return 0;
}

inline int cmd_quantile(const ExperimentConfig& c, bool oracle, std::ostream& out) {
    const Dataset data = detail::input_data(c, "quantile");
    const Vector u = detail::index_vector(c, data.dim());
    if (oracle) {
        const auto rep = geodepth::oracle::brute_quantile(data, u);
        out << json{{"q", io::vector_to_json(rep.point)},
                    {"objective", rep.objective},
                    {"evaluations", rep.evaluations},
                    {"grid_spec", rep.grid_spec}}
                   .dump(2)
            << '\n';
        return 0;
    }
    const QuantileSolution sol = solve(data, u, c.method.tol, c.method.max_iter);
    out << detail::solution_json(sol).dump(2) << '\n';
    return sol.converged ? 0 : 2;
}

inline int cmd_depth(const ExperimentConfig& c, bool oracle, std::ostream& out) {
    const Dataset data = detail::input_data(c, "depth");
    if (!c.point) throw FormatError("depth: missing 'point'");
    require_dim(data.dim(), c.point->size(), "depth point");
    if (oracle) {
        const auto rep = geodepth::oracle::brute_depth_2d(data, *c.point);
        out << json{{"value", rep.value},
                    {"k", rep.count},
                    {"n", rep.n},
                    {"fraction", std::to_string(rep.count) + "/" + std::to_string(rep.n)},
                    {"evaluations", rep.evaluations},
                    {"grid_spec", rep.grid_spec}}
                   .dump(2)
            << '\n';
        return 0;
    }
    const std::string method = c.method.depth.value_or(data.dim() == 2 ? "exact2d" : "approx");
    DepthValue v;
    if (method == "exact2d") {
        if (data.dim() != 2) throw DimensionError("exact2d depth requires d = 2 (got d = " + std::to_string(data.dim()) + ")");
        v = depth_exact_2d(data, *c.point);
    } else {
        const std::size_t k = c.method.directions.value_or(default_direction_count(data.dim(), data.size()));
        v = depth_approx(data, *c.point, k, RngSpec{c.seed, 1});
    }
    out << json{{"value", v.value},
                {"fraction", v.fraction()},
                {"reduced", v.reduced_fraction()},
                {"k", v.k},
                {"n", v.n},
                {"method", method},
                {"directions_used", v.directions_used}}
               .dump(2)
        << '\n';
    return 0;
}

namespace detail {

inline std::string series_path(const std::string& base, const std::string& label, std::size_t count) {
    if (count <= 1 || base.empty() || base == "-") return base;
    std::string clean;
    for (char ch : label) clean += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_') ? ch : '_';
    while (!clean.empty() && clean.back() == '_') clean.pop_back();
    const auto p = std::filesystem::path(base);
    return (p.parent_path() / (p.stem().string() + "-" + clean + p.extension().string())).string();
}

inline CurveOptions curve_options(const ExperimentConfig& c, const DistributionSpec& spec) {
    CurveOptions o;
    o.aggregation = c.method.aggregation;
    o.solver.tol = c.method.tol;
    o.solver.max_iter = c.method.max_iter;
    o.adaptive_tol = c.method.adaptive_tol;
    o.moments = c.method.moments;
    const std::string depth = c.method.depth.value_or(spec.dims == 2 ? "exact2d" : "approx");
    o.depth_method = depth == "exact2d" ? DepthMethod::exact2d : DepthMethod::approx;
    const Eigen::Index n_hint = c.n_policy.kind == NPolicy::Kind::fixed ? c.n_policy.fixed_n
                                : (c.schedule && !c.schedule->n.empty() ? c.schedule->n.back() : 1);
    o.directions = c.method.directions.value_or(default_direction_count(spec.dims, n_hint));
    return o;
}

}  // namespace detail

/// Computes one curve per series, writes CSV (one file per series when
/// there are several) and the optional SVG, and prints a JSON summary.
inline int cmd_curve(const ExperimentConfig& c, std::ostream& out) {
    if (!c.curve) throw FormatError("curve: missing curve kind (y, first_order, hd_decay, hd_ratio)");
    const std::string& kind = *c.curve;
    const bool alpha_curve = kind == "y" || kind == "first_order";
    if (!alpha_curve && kind != "hd_decay" && kind != "hd_ratio")
        throw FormatError("curve: unknown kind '" + kind + "' (y, first_order, hd_decay, hd_ratio)");
    if (c.series.empty()) throw FormatError("curve: missing 'distribution' or 'series'");
    if (!c.direction) throw FormatError("curve: missing 'direction'");
    if (!c.schedule) throw FormatError("curve: missing 'schedule'");
    if (c.seeds.empty()) throw FormatError("curve: missing 'seeds'");
    const UnitDirection dir = UnitDirection::normalize(*c.direction);

    std::vector<DiagnosticCurve> curves;
    for (const auto& s : c.series) {
        const CurveOptions opt = detail::curve_options(c, s.spec);
        if (alpha_curve) {
            const auto sched = make_alpha_schedule(alpha_kind_from_string(c.schedule->kind), c.schedule->params, c.schedule->n);
            curves.push_back(kind == "y" ? y_curve(s.spec, dir, sched, c.n_policy, c.seeds, opt)
                                         : first_order_curve(s.spec, dir, sched, c.n_policy, c.seeds, opt));
        } else {
            const auto sched = make_t_schedule(t_kind_from_string(c.schedule->kind), c.schedule->params, c.schedule->n);
            curves.push_back(kind == "hd_decay" ? hd_decay_curve(s.spec, dir, sched, c.n_policy, c.seeds, opt)
                                                : hd_ratio_curve(s.spec, dir, sched, c.n_policy, c.seeds, opt));
        }
    }

    json summary{{"curve", kind}, {"series", json::array()}};
    std::vector<io::PlotSeries> plot;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& label = c.series[i].label;
        const std::string path = detail::series_path(c.output.csv, label, curves.size());
        const std::string csv = io::curve_to_csv(curves[i], label);
        if (path.empty() || path == "-") out << csv;
        else io::write_file(path, csv);
        json entry{{"label", label}, {"meta", io::curve_meta_to_json(curves[i].meta)}, {"points", curves[i].points.size()}};
        if (!path.empty() && path != "-") entry["csv"] = path;
        summary["series"].push_back(entry);
        io::PlotSeries ps{label, {}, {}};
        for (const auto& p : curves[i].points) {
            ps.x.push_back(p.param);
            ps.y.push_back(p.stat);
        }
        plot.push_back(std::move(ps));
    }
    if (!c.output.svg.empty()) {
        io::PlotOptions po;
        po.x_axis = c.output.x_axis;
        po.y_axis = c.output.y_axis;
        po.title = c.title.empty() ? kind + " curve" : c.title;
        po.x_label = alpha_curve ? "alpha" : "t";
        po.y_label = kind == "y" ? "y(alpha)" : kind == "first_order" ? "first-order residual" : kind == "hd_decay" ? "HD(t x, Pn)" : "HD(t x, Pn) / HD(t x, P)";
        io::write_file(c.output.svg, io::render_svg(plot, po));
        summary["svg"] = c.output.svg;
    }
    // with CSV on stdout the summary goes last as a comment block
    const bool csv_on_stdout = c.output.csv.empty() || c.output.csv == "-";
    if (csv_on_stdout) {
        out << "# " << summary.dump() << '\n';
    } else {
        out << summary.dump(2) << '\n';
    }
    return 0;
}

inline int cmd_classify(const std::string& curve_csv_path, std::ostream& out) {
    const DiagnosticCurve c = io::curve_from_csv(io::read_file(curve_csv_path));
    const TailClassification r = classify_tail(c);
    json j{{"verdict", std::string(to_string(r.verdict))},
           {"index_estimate", r.index_estimate ? json(*r.index_estimate) : json(nullptr)},
           {"fit_scores", {{"light", r.light_r2}, {"heavy", r.heavy_r2}}},
           {"points_used", r.points_used}};
    out << j.dump(2) << '\n';
    return 0;
}

}  // namespace geodepth::cli
