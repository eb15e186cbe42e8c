#pragma once

// Text formats: data CSV, curve CSV, a minimal SVG line plot, and JSON
// encodings of specs, schedules and curve metadata.

#include "geodepth/asymptotics.hpp"
#include "geodepth/core.hpp"
#include "geodepth/samplers.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace geodepth::io {

using json = nlohmann::json;

/// Malformed input file or config.
class FormatError : public Error {
public:
    using Error::Error;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw FormatError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& field, std::size_t line_no) {
    const std::string t = trim(field);
    if (t.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty field");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != t.size()) throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" + t + "' as a number");
    return v;
}

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

}  // namespace detail

/// One observation per row, 17 significant digits, LF line ends.
inline std::string dataset_to_csv(const Dataset& data, bool header = true) {
    std::string out;
    if (header) {
        out += "#";
        for (Eigen::Index j = 0; j < data.dim(); ++j) out += (j ? ",x" : " x") + std::to_string(j + 1);
        out += "\n";
    }
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j) {
            if (j) out += ',';
            out += format_double(data.matrix()(j, i));
        }
        out += '\n';
    }
    return out;
}

/// Parses comma-separated rows; blank lines and `#` lines are skipped. A
/// header-only file yields an empty dataset when `dim_hint` or the header
/// fixes the dimension.
inline Dataset dataset_from_csv(const std::string& text, Eigen::Index dim_hint = -1) {
    std::vector<std::vector<double>> rows;
    Eigen::Index header_dim = -1;
    const auto lines = detail::lines_of(text);
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::string t = detail::trim(lines[k]);
        if (t.empty()) continue;
        if (t.front() == '#') {
            if (rows.empty() && header_dim < 0) header_dim = static_cast<Eigen::Index>(detail::split(t, ',').size());
            continue;
        }
        std::vector<double> row;
        for (const auto& f : detail::split(t, ',')) row.push_back(detail::parse_double(f, k + 1));
        if (!rows.empty() && row.size() != rows.front().size())
            throw FormatError("line " + std::to_string(k + 1) + ": expected " + std::to_string(rows.front().size()) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        const Eigen::Index d = dim_hint > 0 ? dim_hint : header_dim;
        if (d < 1) throw FormatError("data file contains no observations");
        return Dataset(Matrix(d, 0));
    }
    try {
        return Dataset::from_rows(rows, dim_hint);
    } catch (const Error& e) {
        throw FormatError(e.what());
    }
}

inline Dataset load_dataset(const std::string& path, Eigen::Index dim_hint = -1) {
    return dataset_from_csv(read_file(path), dim_hint);
}

inline constexpr std::string_view kCurveHeader = "param,stat,stderr,n,seeds";

inline std::string curve_to_csv(const DiagnosticCurve& c, const std::string& label = {}) {
    std::string out = "# curve=" + c.meta.curve;
    if (!label.empty()) out += " series=" + label;
    out += "\n";
    out += kCurveHeader;
    out += '\n';
    for (const auto& p : c.points) {
        out += format_double(p.param) + ',' + format_double(p.stat) + ',';
        if (p.stderr_estimate) out += format_double(*p.stderr_estimate);
        out += ',' + std::to_string(p.n) + ',' + std::to_string(p.seeds) + '\n';
    }
    return out;
}

/// Reads `param,stat,stderr,n,seeds` rows; the header line and `#` lines
/// are skipped, stderr may be empty.
inline DiagnosticCurve curve_from_csv(const std::string& text) {
    DiagnosticCurve c;
    const auto lines = detail::lines_of(text);
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::string t = detail::trim(lines[k]);
        if (t.empty() || t.front() == '#' || t == kCurveHeader) continue;
        const auto f = detail::split(t, ',');
        if (f.size() != 5) throw FormatError("line " + std::to_string(k + 1) + ": expected 5 columns (" + std::string(kCurveHeader) + ")");
        CurvePoint p;
        p.param = detail::parse_double(f[0], k + 1);
        p.stat = detail::parse_double(f[1], k + 1);
        if (!detail::trim(f[2]).empty()) p.stderr_estimate = detail::parse_double(f[2], k + 1);
        const double n = detail::parse_double(f[3], k + 1);
        const double s = detail::parse_double(f[4], k + 1);
        if (n < 0 || n != std::floor(n) || s < 0 || s != std::floor(s))
            throw FormatError("line " + std::to_string(k + 1) + ": n and seeds must be non-negative integers");
        p.n = static_cast<Eigen::Index>(n);
        p.seeds = static_cast<std::size_t>(s);
        if (!std::isfinite(p.param) || !std::isfinite(p.stat)) throw FormatError("line " + std::to_string(k + 1) + ": non-finite value");
        if (!c.points.empty() && !(p.param > c.points.back().param))
            throw FormatError("line " + std::to_string(k + 1) + ": parameters must be strictly increasing");
        c.points.push_back(p);
    }
    if (c.points.empty()) throw FormatError("curve file contains no rows");
    return c;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

enum class AxisMode { index, linear, log };

inline AxisMode axis_mode_from_string(std::string_view s) {
    if (s == "index") return AxisMode::index;
    if (s == "linear") return AxisMode::linear;
    if (s == "log") return AxisMode::log;
    throw FormatError("unknown axis mode '" + std::string(s) + "' (index, linear, log)");
}

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

struct PlotOptions {
    AxisMode x_axis = AxisMode::linear;
    AxisMode y_axis = AxisMode::linear;  // index is treated as linear
    std::string title;
    std::string x_label = "param";
    std::string y_label = "stat";
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string fmt(double v, int prec = 4) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

}  // namespace detail

/// Polylines with axes, five ticks per axis (one per point in index mode)
/// and a legend. Non-positive values are dropped on log axes.
inline std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opt) {
    constexpr double W = 720, H = 480, L = 80, R = 170, T = 40, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    auto tx = [&](double v, std::size_t idx) {
        switch (opt.x_axis) {
            case AxisMode::index: return static_cast<double>(idx);
            case AxisMode::log: return std::log10(v);
            case AxisMode::linear: break;
        }
        return v;
    };
    auto ty = [&](double v) { return opt.y_axis == AxisMode::log ? std::log10(v) : v; };
    auto usable = [&](double xv, double yv) {
        if (opt.x_axis == AxisMode::log && !(xv > 0.0)) return false;
        if (opt.y_axis == AxisMode::log && !(yv > 0.0)) return false;
        return std::isfinite(xv) && std::isfinite(yv);
    };

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    std::size_t longest = 0;
    const PlotSeries* ref = nullptr;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i], i));
            x1 = std::max(x1, tx(s.x[i], i));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
        if (s.x.size() > longest) {
            longest = s.x.size();
            ref = &s;
        }
    }
    if (x0 > x1) x0 = 0, x1 = 1;
    if (y0 > y1) y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return T + (y1 - v) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty())
        o << "<text x=\"" << L + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << detail::svg_escape(opt.title)
          << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    // x ticks
    if (opt.x_axis == AxisMode::index && ref) {
        const std::size_t every = std::max<std::size_t>(1, (ref->x.size() + 9) / 10);
        for (std::size_t i = 0; i < ref->x.size(); i += every) {
            const double X = px(static_cast<double>(i));
            o << "<line x1=\"" << X << "\" y1=\"" << T + ph << "\" x2=\"" << X << "\" y2=\"" << T + ph + 5 << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << X << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << detail::fmt(ref->x[i], 6) << "</text>\n";
        }
    } else {
        for (int k = 0; k <= 4; ++k) {
            const double v = x0 + (x1 - x0) * k / 4.0;
            const double X = px(v);
            const double label = opt.x_axis == AxisMode::log ? std::pow(10.0, v) : v;
            o << "<line x1=\"" << X << "\" y1=\"" << T + ph << "\" x2=\"" << X << "\" y2=\"" << T + ph + 5 << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << X << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << detail::fmt(label) << "</text>\n";
        }
    }
    for (int k = 0; k <= 4; ++k) {
        const double v = y0 + (y1 - y0) * k / 4.0;
        const double Y = py(v);
        const double label = opt.y_axis == AxisMode::log ? std::pow(10.0, v) : v;
        o << "<line x1=\"" << L - 5 << "\" y1=\"" << Y << "\" x2=\"" << L << "\" y2=\"" << Y << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << L - 8 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">" << detail::fmt(label) << "</text>\n";
    }
    o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << detail::svg_escape(opt.x_label)
      << "</text>\n";
    o << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << T + ph / 2 << ")\">"
      << detail::svg_escape(opt.y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % (sizeof palette / sizeof *palette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!usable(series[s].x[i], series[s].y[i])) continue;
            if (!first) o << ' ';
            o << detail::fmt(px(tx(series[s].x[i], i)), 7) << ',' << detail::fmt(py(ty(series[s].y[i])), 7);
            first = false;
        }
        o << "\"/>\n";
        const double ly = T + 10 + 18.0 * static_cast<double>(s);
        o << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32 << "\" y2=\"" << ly << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly + 4 << "\">" << detail::svg_escape(series[s].label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!j.is_object()) throw FormatError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw FormatError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw FormatError(where + ": wrong type");
    }
}

inline Vector vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw FormatError(where + ": expected a non-empty array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw FormatError(where + ": expected numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

/// {"kind", "dims", "variances" | "delta", "scale", "offset" | "matched_variance"}
inline DistributionSpec spec_from_json(const json& j) {
    check_keys(j, {"kind", "dims", "variances", "delta", "scale", "offset", "matched_variance"}, "distribution");
    if (!j.contains("kind")) throw FormatError("distribution: missing 'kind'");
    DistributionSpec s;
    s.kind = distribution_kind_from_string(get_as<std::string>(j["kind"], "distribution.kind"));
    switch (s.kind) {
        case DistributionKind::gaussian_diag: {
            if (!j.contains("variances")) throw FormatError("distribution: gaussian_diag needs 'variances'");
            for (const char* k : {"delta", "scale", "offset", "matched_variance"})
                if (j.contains(k)) throw FormatError(std::string("distribution: '") + k + "' does not apply to gaussian_diag");
            s.variances = get_as<std::vector<double>>(j["variances"], "distribution.variances");
            s.dims = j.contains("dims") ? get_as<int>(j["dims"], "distribution.dims") : static_cast<int>(s.variances.size());
            break;
        }
        case DistributionKind::pareto_indep: {
            if (!j.contains("delta")) throw FormatError("distribution: pareto_indep needs 'delta'");
            if (j.contains("variances")) throw FormatError("distribution: 'variances' does not apply to pareto_indep");
            const double delta = get_as<double>(j["delta"], "distribution.delta");
            const int dims = j.contains("dims") ? get_as<int>(j["dims"], "distribution.dims") : 2;
            if (j.contains("matched_variance")) {
                if (j.contains("scale") || j.contains("offset"))
                    throw FormatError("distribution: 'matched_variance' excludes 'scale'/'offset'");
                s = matched_variance_pareto(get_as<double>(j["matched_variance"], "distribution.matched_variance"), delta, dims);
            } else {
                s = DistributionSpec::pareto(dims, delta);
                if (j.contains("scale")) s.scale = get_as<double>(j["scale"], "distribution.scale");
                if (j.contains("offset")) s.offset = get_as<double>(j["offset"], "distribution.offset");
            }
            break;
        }
        case DistributionKind::spherical_exponential: {
            for (const char* k : {"variances", "delta", "scale", "offset", "matched_variance"})
                if (j.contains(k)) throw FormatError(std::string("distribution: '") + k + "' does not apply to spherical_exponential");
            s.dims = j.contains("dims") ? get_as<int>(j["dims"], "distribution.dims") : 2;
            break;
        }
    }
    s.validate();
    return s;
}

inline json spec_to_json(const DistributionSpec& s) {
    json j{{"kind", std::string(to_string(s.kind))}, {"dims", s.dims}};
    switch (s.kind) {
        case DistributionKind::gaussian_diag: j["variances"] = s.variances; break;
        case DistributionKind::pareto_indep:
            j["delta"] = s.delta;
            j["scale"] = s.scale;
            j["offset"] = s.offset;
            break;
        case DistributionKind::spherical_exponential: break;
    }
    return j;
}

inline json curve_meta_to_json(const CurveMeta& m) {
    json j{{"curve", m.curve},
           {"distribution", spec_to_json(m.spec)},
           {"direction", vector_to_json(m.direction)},
           {"seeds", m.seeds},
           {"n_policy", m.policy.kind == NPolicy::Kind::fixed ? json{{"kind", "fixed"}, {"n", m.policy.fixed_n}}
                                                               : json{{"kind", "growing"}}},
           {"aggregation", m.aggregation == Aggregation::median ? "median" : "mean"},
           {"schedule", m.schedule}};
    if (!m.moments_source.empty()) j["moments"] = m.moments_source;
    if (m.limit_term) j["limit_term"] = *m.limit_term;
    if (m.curve == "y" || m.curve == "first_order") {
        j["solves"] = m.solves;
        j["characterization_violations"] = m.characterization_violations;
        j["growth_violations"] = m.growth_violations;
    } else {
        j["marginal_violations"] = m.marginal_violations;
    }
    if (m.curve == "hd_ratio") j["premise_violations"] = m.premise_violations;
    return j;
}

}  // namespace geodepth::io
