#include "qtm/io.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace qtm;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

ObservableSeries tiny_series() {
    ObservableSeries s;
    s.omega_l = 3.0;
    for (int k = 0; k < 3; ++k) {
        const double t = 10.0 * k;
        s.times.push_back(t);
        s.mu.push_back(2.0 + 0.1 * t);
        s.sigma2.push_back(0.05 * t);
        s.energy_load.push_back(3.0 * (2.5 + 0.1 * t));
        s.entropy_load.push_back(0.0);
        s.ergotropy_load.push_back(6.0);
        s.qdot_hot.push_back(1e-3);
        s.qdot_cold.push_back(-5e-4);
        s.energy_total.push_back(9.0);
        s.energy_rate.push_back(5e-4);
        s.machine_populations.push_back({1.0, 0.0, 0.0});
        s.p_n.push_back({0.0, 0.25, 0.75});
    }
    return s;
}

}  // namespace

TEST(Num, ShortestRoundTrip) {
    EXPECT_EQ(io::num(0.1), "0.1");
    EXPECT_EQ(io::num(0.0), "0");
    EXPECT_EQ(io::num(-0.0), "0");
    EXPECT_EQ(io::num(3.0), "3");
    EXPECT_EQ(io::num(NAN), "");
    EXPECT_EQ(io::num(INFINITY), "");
    for (double x : {1.0 / 3.0, 2.48491e-3, 1e-300, -7.25e12, 6.02214076e23}) {
        const std::string s = io::num(x);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, x) << s;
    }
}

TEST(Csv, QuotedFields) {
    EXPECT_EQ(io::quoted("plain"), "plain");
    EXPECT_EQ(io::quoted("a,b"), "\"a,b\"");
    EXPECT_EQ(io::quoted("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(io::quoted("two\nlines"), "\"two lines\"");
}

TEST(Provenance, HeaderLines) {
    const nlohmann::ordered_json cfg = {{"a", 1}};
    const auto l = lines(io::provenance_lines("series", cfg));
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], std::string("# qtm series schema=") + std::to_string(kSchemaVersion) + " version=" + kVersion);
    EXPECT_EQ(l[1], "# units: hbar = omega_c = 1");
    EXPECT_EQ(l[2], "# config: {\"a\":1}");
    const auto j = io::provenance_json("series", cfg);
    EXPECT_EQ(j["schema"], "series");
    EXPECT_EQ(j["config"]["a"], 1);
}

TEST(SeriesCsv, SchemaAndValues) {
    const auto l = lines(series_csv(tiny_series(), nlohmann::ordered_json::object()));
    ASSERT_EQ(l.size(), 3u + 1u + 3u);
    EXPECT_EQ(l[3], "t,mu,sigma2,E_load,S_load,W_load,Qdot_h,Qdot_c,E_total");
    EXPECT_EQ(l[5], "10,3,0.5,10.5,0,6,0.001,-5e-04,9");
}

TEST(PopulationsCsv, OneColumnPerLevel) {
    const auto l = lines(populations_csv(tiny_series(), nlohmann::ordered_json::object()));
    EXPECT_EQ(l[3], "t,p0,p1,p2");
    EXPECT_EQ(l[4], "0,0,0.25,0.75");
}

TEST(Diagnostics, NonFiniteBecomesNull) {
    IntegratorDiagnostics d;
    const auto j = diagnostics_json(d);
    EXPECT_TRUE(j["smallest_step"].is_null());
    EXPECT_EQ(j["accepted_steps"], 0);
}

TEST(WriteText, CreatesDirectories) {
    const auto dir = std::filesystem::temp_directory_path() / "qtm_io_test" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    io::write_text(dir / "x.txt", "hello\n");
    std::ifstream in(dir / "x.txt");
    std::string s;
    std::getline(in, s);
    EXPECT_EQ(s, "hello");
    std::filesystem::remove_all(dir.parent_path());
}
