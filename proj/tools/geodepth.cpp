// geodepth: sampling, quantile and depth evaluation, diagnostic curves and
// tail classification from the command line. See README.md for usage.

#include "geodepth/cli.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef GEODEPTH_PRESET_DIR
#define GEODEPTH_PRESET_DIR "presets"
#endif

namespace {

using namespace geodepth;

struct SpecFlags {
    std::string kind;
    int dims = 0;
    std::vector<double> variances;
    std::optional<double> delta, scale, offset, matched_variance;

    bool given() const { return !kind.empty(); }

    DistributionSpec build() const {
        io::json j{{"kind", kind}};
        if (dims > 0) j["dims"] = dims;
        if (!variances.empty()) j["variances"] = variances;
        if (delta) j["delta"] = *delta;
        if (scale) j["scale"] = *scale;
        if (offset) j["offset"] = *offset;
        if (matched_variance) j["matched_variance"] = *matched_variance;
        return io::spec_from_json(j);
    }

    void add_to(CLI::App* app) {
        app->add_option("--kind", kind, "distribution: gaussian_diag, pareto_indep, spherical_exponential");
        app->add_option("--dims", dims, "dimension");
        app->add_option("--variances", variances, "gaussian_diag variances")->delimiter(',');
        app->add_option("--delta", delta, "pareto tail index");
        app->add_option("--scale", scale, "pareto scale");
        app->add_option("--offset", offset, "pareto offset");
        app->add_option("--matched-variance", matched_variance, "rescale pareto to this per-coordinate variance");
    }
};

std::optional<Vector> to_vector(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
}

cli::ExperimentConfig base_config(const std::string& path) {
    if (path.empty()) return {};
    return cli::load_config(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geodepth: extreme geometric quantiles and halfspace depth"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "geodepth 1.0.0");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "draw a seeded sample and write it as CSV");
    std::string sample_config, sample_out;
    SpecFlags sample_spec;
    std::optional<Eigen::Index> sample_n;
    std::optional<std::uint64_t> sample_seed;
    bool no_header = false;
    sample_cmd->add_option("--config", sample_config, "JSON config");
    sample_spec.add_to(sample_cmd);
    sample_cmd->add_option("-n,--n", sample_n, "sample size");
    sample_cmd->add_option("--seed", sample_seed, "seed");
    sample_cmd->add_option("-o,--out", sample_out, "output CSV (default stdout)");
    sample_cmd->add_flag("--no-header", no_header, "omit the # header line");

    // quantile
    auto* quantile_cmd = app.add_subcommand("quantile", "sample geometric quantile");
    std::string q_config, q_data;
    std::vector<double> q_index, q_direction;
    std::optional<double> q_alpha, q_tol;
    std::optional<std::size_t> q_max_iter;
    bool q_oracle = false;
    quantile_cmd->add_option("--config", q_config, "JSON config");
    quantile_cmd->add_option("--data", q_data, "data CSV");
    quantile_cmd->add_option("--index", q_index, "index vector u, ‖u‖ < 1")->delimiter(',');
    quantile_cmd->add_option("--alpha", q_alpha, "level alpha (with --direction)");
    quantile_cmd->add_option("--direction", q_direction, "direction (normalized)")->delimiter(',');
    quantile_cmd->add_option("--tol", q_tol, "residual tolerance");
    quantile_cmd->add_option("--max-iter", q_max_iter, "iteration cap");
    quantile_cmd->add_flag("--oracle", q_oracle, "run the brute-force lattice oracle (testing)")->group("");

    // depth
    auto* depth_cmd = app.add_subcommand("depth", "empirical halfspace depth");
    std::string d_config, d_data, d_method;
    std::vector<double> d_point;
    std::optional<std::size_t> d_directions;
    std::optional<std::uint64_t> d_seed;
    bool d_oracle = false;
    depth_cmd->add_option("--config", d_config, "JSON config");
    depth_cmd->add_option("--data", d_data, "data CSV");
    depth_cmd->add_option("--point", d_point, "evaluation point")->delimiter(',');
    depth_cmd->add_option("--method", d_method, "exact2d or approx")->check(CLI::IsMember({"exact2d", "approx"}));
    depth_cmd->add_option("--directions", d_directions, "direction count for approx");
    depth_cmd->add_option("--seed", d_seed, "direction stream seed for approx");
    depth_cmd->add_flag("--oracle", d_oracle, "run the brute-force direction oracle (testing)")->group("");

    // curve
    auto* curve_cmd = app.add_subcommand("curve", "diagnostic curve (y, first_order, hd_decay, hd_ratio)");
    std::string c_kind, c_config, c_preset, c_csv, c_svg, c_x_axis, c_y_axis, c_aggregation;
    std::vector<std::uint64_t> c_seeds;
    curve_cmd->add_option("kind", c_kind, "curve kind (overrides the config)")
        ->check(CLI::IsMember({"y", "first_order", "hd_decay", "hd_ratio"}));
    auto* cfg_opt = curve_cmd->add_option("--config", c_config, "JSON config");
    curve_cmd->add_option("--preset", c_preset, "preset name (fig3 ... fig7) or path")->excludes(cfg_opt);
    curve_cmd->add_option("--csv", c_csv, "curve CSV output (default stdout)");
    curve_cmd->add_option("--svg", c_svg, "SVG plot output");
    curve_cmd->add_option("--x-axis", c_x_axis, "index, linear or log")->check(CLI::IsMember({"index", "linear", "log"}));
    curve_cmd->add_option("--y-axis", c_y_axis, "linear or log")->check(CLI::IsMember({"linear", "log"}));
    curve_cmd->add_option("--seeds", c_seeds, "seed list")->delimiter(',');
    curve_cmd->add_option("--aggregation", c_aggregation, "median or mean")->check(CLI::IsMember({"median", "mean"}));

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "light/heavy verdict for a depth-decay curve CSV");
    std::string k_path;
    classify_cmd->add_option("curve_csv", k_path, "curve CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    auto& out = std::cout;
    auto& err = std::cerr;

    if (*sample_cmd) {
        return cli::guarded(err, [&] {
            auto c = base_config(sample_config);
            if (sample_spec.given()) c.series = {{"sample", sample_spec.build()}};
            if (sample_n) c.n = *sample_n;
            if (sample_seed) c.seed = *sample_seed;
            if (!sample_out.empty()) c.output.csv = sample_out;
            return cli::cmd_sample(c, !no_header, out);
        });
    }
    if (*quantile_cmd) {
        return cli::guarded(err, [&] {
            auto c = base_config(q_config);
            if (!q_data.empty()) c.data = q_data;
            if (auto v = to_vector(q_index)) c.index = v;
            if (auto v = to_vector(q_direction)) c.direction = v;
            if (q_alpha) c.alpha = *q_alpha;
            if (q_tol) c.method.tol = *q_tol;
            if (q_max_iter) c.method.max_iter = *q_max_iter;
            return cli::cmd_quantile(c, q_oracle, out);
        });
    }
    if (*depth_cmd) {
        return cli::guarded(err, [&] {
            auto c = base_config(d_config);
            if (!d_data.empty()) c.data = d_data;
            if (auto v = to_vector(d_point)) c.point = v;
            if (!d_method.empty()) c.method.depth = d_method;
            if (d_directions) c.method.directions = *d_directions;
            if (d_seed) c.seed = *d_seed;
            return cli::cmd_depth(c, d_oracle, out);
        });
    }
    if (*curve_cmd) {
        return cli::guarded(err, [&] {
            cli::ExperimentConfig c;
            if (!c_preset.empty()) c = cli::load_config(cli::resolve_preset(c_preset, GEODEPTH_PRESET_DIR));
            else if (!c_config.empty()) c = cli::load_config(c_config);
            else throw io::FormatError("curve: need --config or --preset");
            if (!c_kind.empty()) c.curve = c_kind;
            if (!c_csv.empty()) c.output.csv = c_csv;
            if (!c_svg.empty()) c.output.svg = c_svg;
            if (!c_x_axis.empty()) c.output.x_axis = io::axis_mode_from_string(c_x_axis);
            if (!c_y_axis.empty()) c.output.y_axis = io::axis_mode_from_string(c_y_axis);
            if (!c_seeds.empty()) c.seeds = c_seeds;
            if (!c_aggregation.empty()) c.method.aggregation = c_aggregation == "mean" ? Aggregation::mean : Aggregation::median;
            return cli::cmd_curve(c, out);
        });
    }
    if (*classify_cmd) {
        return cli::guarded(err, [&] { return cli::cmd_classify(k_path, out); });
    }
    return 1;
}
