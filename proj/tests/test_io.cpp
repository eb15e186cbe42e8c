#include "geodepth/cli.hpp"
#include "geodepth/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace geodepth;
using io::json;

TEST(Csv, DatasetRoundTripIsExact) {
    const Dataset d = sample(DistributionSpec::pareto(3, 2.2), 200, RngSpec{5, 0});
    const std::string text = io::dataset_to_csv(d);
    EXPECT_EQ(text.rfind("# x1,x2,x3\n", 0), 0u);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_EQ(io::dataset_from_csv(text).matrix(), d.matrix());
    EXPECT_EQ(io::dataset_from_csv(io::dataset_to_csv(d, false)).matrix(), d.matrix());
}

TEST(Csv, HeaderOnlyGivesEmptyDataset) {
    const Dataset d = io::dataset_from_csv("# x1,x2\n");
    EXPECT_EQ(d.size(), 0);
    EXPECT_EQ(d.dim(), 2);
    EXPECT_THROW(io::dataset_from_csv(""), io::FormatError);
}

TEST(Csv, Malformed) {
    EXPECT_THROW(io::dataset_from_csv("1,2\n3\n"), io::FormatError);
    EXPECT_THROW(io::dataset_from_csv("1,abc\n"), io::FormatError);
    EXPECT_THROW(io::dataset_from_csv("1,nan\n"), io::FormatError);
    EXPECT_EQ(io::dataset_from_csv("1,2\r\n\n3,4\n").size(), 2);
}

TEST(Csv, CurveRoundTrip) {
    DiagnosticCurve c;
    c.meta.curve = "hd_decay";
    for (int i = 0; i < 4; ++i) {
        CurvePoint p;
        p.param = 1.0 + i / 3.0;
        p.stat = 0.1 / (i + 1);
        if (i != 2) p.stderr_estimate = 1e-3 * i;
        p.n = 1000 * (i + 1);
        p.seeds = 10;
        c.points.push_back(p);
    }
    const std::string text = io::curve_to_csv(c, "gaussian");
    EXPECT_NE(text.find("param,stat,stderr,n,seeds\n"), std::string::npos);
    const auto back = io::curve_from_csv(text);
    ASSERT_EQ(back.points.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(back.points[i].param, c.points[i].param);
        EXPECT_EQ(back.points[i].stat, c.points[i].stat);
        EXPECT_EQ(back.points[i].stderr_estimate, c.points[i].stderr_estimate);
        EXPECT_EQ(back.points[i].n, c.points[i].n);
    }
}

TEST(Csv, CurveMalformed) {
    EXPECT_THROW(io::curve_from_csv("param,stat,stderr,n,seeds\n"), io::FormatError);
    EXPECT_THROW(io::curve_from_csv("1,2,3,4\n"), io::FormatError);
    EXPECT_THROW(io::curve_from_csv("2,0.1,,10,1\n1,0.2,,10,1\n"), io::FormatError);
    EXPECT_THROW(io::curve_from_csv("1,0.1,,10.5,1\n"), io::FormatError);
}

TEST(Svg, RendersPolylinesAndLegend) {
    io::PlotOptions po;
    po.x_axis = io::AxisMode::index;
    po.title = "a < b";
    const std::string svg = io::render_svg({{"gaussian", {0.9, 0.99, 0.999}, {0.1, 0.01, 0.001}},
                                            {"pareto", {0.9, 0.99, 0.999}, {1.0, 0.4, 0.2}}},
                                           po);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
    EXPECT_NE(svg.find("pareto"), std::string::npos);
    std::size_t count = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++count;
    EXPECT_EQ(count, 2u);
}

TEST(Json, SpecRoundTrip) {
    const auto s = matched_variance_pareto(2.0, 3.2);
    const auto back = io::spec_from_json(io::spec_to_json(s));
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_DOUBLE_EQ(back.scale, s.scale);
    EXPECT_DOUBLE_EQ(back.offset, s.offset);
    const auto m = io::spec_from_json(json{{"kind", "pareto_indep"}, {"dims", 2}, {"delta", 3.2}, {"matched_variance", 1.0}});
    EXPECT_NEAR(m.scale, 1.3473, 1e-4);
}

TEST(Json, SpecRejectsUnknownAndMisplacedKeys) {
    EXPECT_THROW(io::spec_from_json(json{{"kind", "gaussian_diag"}, {"variances", {1, 1}}, {"colour", 1}}), io::FormatError);
    EXPECT_THROW(io::spec_from_json(json{{"kind", "gaussian_diag"}, {"variances", {1, 1}}, {"delta", 2}}), io::FormatError);
    EXPECT_THROW(io::spec_from_json(json{{"kind", "pareto_indep"}, {"dims", 2}, {"delta", "x"}}), io::FormatError);
}

TEST(Config, UnknownKeysRejected) {
    json j = json::parse(R"({"schema":1,"curve":"y","seedz":[1]})");
    EXPECT_THROW(cli::config_from_json(j), io::FormatError);
    j = json::parse(R"({"schema":1,"method":{"tolerance":1e-8}})");
    EXPECT_THROW(cli::config_from_json(j), io::FormatError);
    j = json::parse(R"({"schema":2})");
    EXPECT_THROW(cli::config_from_json(j), io::FormatError);
    j = json::parse(R"({"curve":"y"})");
    EXPECT_THROW(cli::config_from_json(j), io::FormatError);
}

TEST(Config, PresetsLoad) {
    const std::string dir = std::string(GEODEPTH_SOURCE_DIR) + "/presets";
    for (const char* name : {"fig3", "fig4", "fig5", "fig6", "fig7"}) {
        const auto c = cli::load_config(cli::resolve_preset(name, dir));
        EXPECT_TRUE(c.curve.has_value()) << name;
        EXPECT_EQ(c.seeds.size(), 10u) << name;
        ASSERT_TRUE(c.schedule.has_value()) << name;
    }
    const auto fig3 = cli::load_config(cli::resolve_preset("fig3", dir));
    EXPECT_EQ(fig3.schedule->n.size(), 10u);
    EXPECT_EQ(fig3.n_policy.fixed_n, 100000);
    const auto fig6 = cli::load_config(cli::resolve_preset("fig6", dir));
    EXPECT_EQ(fig6.schedule->n.front(), 2000);
    EXPECT_EQ(fig6.schedule->n.back(), 100000);
    EXPECT_EQ(fig6.schedule->n.size(), 50u);
    EXPECT_THROW(cli::load_config(cli::resolve_preset("fig99", dir)), Error);
}

TEST(Guarded, ExitCodes) {
    std::ostringstream err;
    EXPECT_EQ(cli::guarded(err, [] { return 0; }), 0);
    EXPECT_EQ(cli::guarded(err, []() -> int { throw PreconditionError("x"); }), 1);
    EXPECT_EQ(cli::guarded(err, []() -> int { throw ConvergenceError("x"); }), 2);
    EXPECT_EQ(cli::guarded(err, []() -> int { throw std::runtime_error("x"); }), 1);
}
