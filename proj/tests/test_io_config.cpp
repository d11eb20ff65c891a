/*
   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "enhdiff/config.hpp"

using namespace enhdiff;
namespace fs = std::filesystem;

namespace {
RunConfig parse(const std::string& text, ConfigMode mode = ConfigMode::Run) {
    std::istringstream is(text);
    return parse_config(is, "test.cfg", mode);
}

std::string error_of(const std::string& text, ConfigMode mode = ConfigMode::Run) {
    try {
        parse(text, mode);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

const char* kMinimal = "flow.kind = zero\ninitial_data.kind = sine_x\ndiffusivity.kappa = 0.1\n";

fs::path temp_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("enhdiff_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}
}  // namespace

TEST(Numbers, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(io::parse_double(io::format_double(v)), v);
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_THROW(io::parse_double("1.5x"), ConfigError);
    EXPECT_THROW(io::parse_double(""), ConfigError);
}

TEST(Csv, RoundTrip) {
    io::Table t{{"kappa", "T"}, {}};
    t.add_row({io::format_double(1e-3), io::format_double(12.5)});
    t.add_row({io::format_double(1e-4), ""});
    EXPECT_THROW(t.add_row({"1"}), Error);
    std::stringstream ss;
    io::write_csv(t, ss);
    EXPECT_EQ(ss.str(), "kappa,T\n0.001,12.5\n1e-04,\n");
    const auto back = io::read_csv(ss);
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(back.number(0, "T"), 12.5);
    EXPECT_THROW(back.column("missing"), Error);
}

TEST(Snapshot, CartesianRoundTripIsBitExact) {
    const CartesianGrid g{16, 8, 1.25};
    auto f = make_field(g, [](Vec2 p) { return std::sin(p.x) * p.y + 1e-300; });
    f.time = 3.75;
    std::stringstream ss;
    io::write_snapshot(f, ss);
    const auto back = io::read_cartesian_snapshot(ss);
    EXPECT_EQ(back.grid, g);
    EXPECT_EQ(back.time, 3.75);
    EXPECT_EQ(back.values, f.values);
}

TEST(Snapshot, PolarRoundTripAndKindMismatch) {
    const PolarGrid g{6, 8, 0.25, 2.0};
    auto f = make_polar_field(g, [](double r, double th) { return r * std::cos(th); });
    std::stringstream ss;
    io::write_snapshot(f, ss);
    const std::string bytes = ss.str();
    std::stringstream a(bytes);
    const auto back = io::read_polar_snapshot(a);
    EXPECT_EQ(back.grid, g);
    EXPECT_EQ(back.values, f.values);
    std::stringstream b(bytes);
    EXPECT_THROW(io::read_cartesian_snapshot(b), Error);
    std::stringstream junk("NOTASNAPSHOT");
    EXPECT_THROW(io::read_polar_snapshot(junk), Error);
    std::stringstream truncated(bytes.substr(0, bytes.size() - 4));
    EXPECT_THROW(io::read_polar_snapshot(truncated), Error);
}

TEST(Interface, LoadsCsvWithLineErrors) {
    const auto dir = temp_dir("iface");
    {
        std::ofstream os(dir / "ok.csv");
        os << "x,y,dS\n# comment\n1.0,0.5,0.1\n2.0,0.5,0.1\n";
    }
    const auto iface = io::load_interface_csv(dir / "ok.csv");
    EXPECT_EQ(iface.size(), 2u);
    EXPECT_NEAR(iface.measure(), 0.2, 1e-15);
    {
        std::ofstream os(dir / "bad.csv");
        os << "1.0,0.5,0.1\n2.0,oops,0.1\n";
    }
    try {
        io::load_interface_csv(dir / "bad.csv");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.csv:2:"), std::string::npos) << e.what();
    }
    EXPECT_THROW(io::load_interface_csv(dir / "absent.csv"), ConfigError);
}

TEST(Svg, ContainsSeriesAndTitle) {
    const std::string svg = io::loglog_svg({{"measured", {1e-3, 1e-2}, {10, 3}, false, "#000"}}, "slope check", "kappa", "T");
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("slope check"), std::string::npos);
    EXPECT_NE(svg.find("measured"), std::string::npos);
}

TEST(Config, MinimalRunConfig) {
    const auto cfg = parse(std::string(kMinimal) + "seed = 7   # trailing comment\n");
    ASSERT_TRUE(cfg.kappa);
    EXPECT_EQ(*cfg.kappa, 0.1);
    EXPECT_EQ(cfg.spec.seed, 7u);
    EXPECT_TRUE(std::holds_alternative<flow::Zero>(cfg.spec.flow));
    EXPECT_EQ(cfg.spec.kappas, std::vector<double>{0.1});
    EXPECT_TRUE(cfg.output.wants("csv"));
    EXPECT_FALSE(cfg.output.wants("bin"));
}

TEST(Config, FullSweepConfig) {
    const auto cfg = parse(
        "flow.kind = circular\nflow.q = 2\n"
        "diffusivity.model = anisotropic_radial\ndiffusivity.gamma = 1\n"
        "initial_data.kind = annulus_circular\n"
        "solver.nr = 64\nsolver.ntheta = 32\nsolver.horizon_factor = 20\n"
        "experiment.kappas = 1e-2, 5e-3, 2e-3, 1e-3, 5e-4\n"
        "experiment.extra_thresholds = 0.5, 0.25\n"
        "output.formats = csv, bin\n",
        ConfigMode::Sweep);
    EXPECT_TRUE(cfg.spec.anisotropic);
    EXPECT_EQ(cfg.spec.gamma, 1.0);
    EXPECT_EQ(cfg.spec.kappas.size(), 5u);
    EXPECT_EQ(cfg.spec.extra_thresholds, (std::vector<double>{0.5, 0.25}));
    EXPECT_EQ(cfg.spec.res.nr, 64u);
    EXPECT_TRUE(cfg.output.wants("bin"));
    EXPECT_FALSE(cfg.output.wants("svg"));
    EXPECT_FALSE(cfg.kappa);
}

TEST(Config, MissingKappaIsNamed) {
    const auto msg = error_of("flow.kind = zero\ninitial_data.kind = sine_x\n");
    EXPECT_NE(msg.find("missing required key 'diffusivity.kappa'"), std::string::npos) << msg;
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_NE(error_of(std::string(kMinimal) + "solver.colour = red\n").find("test.cfg:4: unknown key 'solver.colour'"),
              std::string::npos);
    EXPECT_NE(error_of(std::string(kMinimal) + "diffusivity.kappa = 0.2\n").find("test.cfg:4: duplicate key"),
              std::string::npos);
    EXPECT_NE(error_of(std::string(kMinimal) + "solver.nx = 100\n").find("test.cfg:4:"), std::string::npos);
    EXPECT_NE(error_of("flow.kind = zero\ninitial_data.kind = sine_x\ndiffusivity.kappa = 2\n").find("test.cfg:3:"),
              std::string::npos);
    EXPECT_NE(error_of("just words\n").find("test.cfg:1:"), std::string::npos);
}

TEST(Config, RejectsInconsistentCombinations) {
    EXPECT_FALSE(error_of("flow.kind = power_shear\nflow.n = 1\nflow.q = 2\ninitial_data.kind = tent_shear\n"
                          "diffusivity.kappa = 0.01\n")
                     .empty());
    EXPECT_FALSE(error_of("flow.kind = power_shear\nflow.n = 1\ninitial_data.kind = annulus_circular\n"
                          "diffusivity.kappa = 0.01\n")
                     .empty());
    EXPECT_FALSE(error_of("flow.kind = power_shear\nflow.n = 1\ninitial_data.kind = tent_shear\n"
                          "diffusivity.model = anisotropic_radial\ndiffusivity.gamma = 0.5\ndiffusivity.kappa = 0.01\n")
                     .empty());
    EXPECT_FALSE(error_of(std::string(kMinimal) + "ibm.epsilon_cells = 1\n").empty());
    EXPECT_FALSE(error_of(std::string(kMinimal) + "output.formats = csv, pdf\n").empty());
    EXPECT_FALSE(error_of("flow.kind = zero\ninitial_data.kind = sine_x\nexperiment.kappas = 1e-2, 1e-3, 1e-4\n",
                          ConfigMode::Sweep)
                     .empty());
    EXPECT_FALSE(error_of("flow.kind = zero\ninitial_data.kind = tent_shear\ndiffusivity.kappa = 0.01\n").empty());
}

TEST(Config, LoadResolvesRelativePaths) {
    const auto dir = temp_dir("cfg");
    {
        std::ofstream os(dir / "run.cfg");
        os << kMinimal << "ibm.interface = markers.csv\ninitial_data.restart = snap.bin\n";
    }
    const auto cfg = load_config(dir / "run.cfg", ConfigMode::Run);
    EXPECT_EQ(*cfg.interface_file, dir / "markers.csv");
    EXPECT_EQ(*cfg.restart, dir / "snap.bin");
    EXPECT_THROW(load_config(dir / "missing.cfg", ConfigMode::Run), ConfigError);
}
