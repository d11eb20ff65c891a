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

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "ibm.hpp"

namespace enhdiff::io {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Header plus rows of string cells; numeric cells are written with format_double.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != columns.size()) throw Error("table row has " + std::to_string(row.size()) + " cells, expected " + std::to_string(columns.size()));
        rows.push_back(std::move(row));
    }

    std::size_t column(std::string_view name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw Error("table has no column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }

    double number(std::size_t row, std::string_view name) const { return parse_double(rows.at(row).at(column(name))); }
};

inline void write_csv(const Table& t, std::ostream& os) {
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    emit(t.columns);
    for (const auto& r : t.rows) emit(r);
}

inline void write_csv(const Table& t, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_csv(t, os);
}

inline Table read_csv(std::istream& is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw Error("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.columns = split(line, ',');
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        t.add_row(split(line, ','));
    }
    return t;
}

inline Table read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path.string());
    return read_csv(is);
}

/// Interface markers as CSV rows "x,y,dS" (header optional, '#' comments).
inline Interface load_interface_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open interface file " + path.string());
    Interface iface;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split(line, ',');
        if (lineno == 1 && cells.size() == 3 && cells[0] == "x") continue;
        if (cells.size() != 3)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected x,y,dS");
        try {
            iface.markers.push_back({parse_double(cells[0]), parse_double(cells[1])});
            const double w = parse_double(cells[2]);
            if (!(w > 0.0)) throw ConfigError("dS must be > 0");
            iface.weights.push_back(w);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (iface.markers.empty()) throw ConfigError("interface file " + path.string() + " has no markers");
    return iface;
}

// ---------------------------------------------------------------------------
// Binary snapshots
//
// magic "ENHD1", one byte grid kind (0 Cartesian, 1 polar), u64 dims (2),
// f64 extents (ly | r_min r_max), f64 time, then row-major f64 values.
// Everything little-endian.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::array<char, 5> kMagic{'E', 'N', 'H', 'D', '1'};

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "snapshot io assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw Error("snapshot: truncated input");
    return v;
}

inline void put_values(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::vector<double> get_values(std::istream& is, std::size_t n) {
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw Error("snapshot: truncated values");
    return v;
}

inline std::uint8_t read_header(std::istream& is) {
    std::array<char, 5> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw Error("snapshot: bad magic");
    return get<std::uint8_t>(is);
}

}  // namespace detail

inline void write_snapshot(const CartesianField& f, std::ostream& os) {
    os.write(detail::kMagic.data(), detail::kMagic.size());
    detail::put<std::uint8_t>(os, 0);
    detail::put<std::uint64_t>(os, f.grid.nx);
    detail::put<std::uint64_t>(os, f.grid.ny);
    detail::put<double>(os, f.grid.ly);
    detail::put<double>(os, f.time);
    detail::put_values(os, f.values);
}

inline void write_snapshot(const PolarField& f, std::ostream& os) {
    os.write(detail::kMagic.data(), detail::kMagic.size());
    detail::put<std::uint8_t>(os, 1);
    detail::put<std::uint64_t>(os, f.grid.nr);
    detail::put<std::uint64_t>(os, f.grid.ntheta);
    detail::put<double>(os, f.grid.r_min);
    detail::put<double>(os, f.grid.r_max);
    detail::put<double>(os, f.time);
    detail::put_values(os, f.values);
}

template <class Field>
void write_snapshot(const Field& f, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_snapshot(f, os);
}

inline CartesianField read_cartesian_snapshot(std::istream& is) {
    if (detail::read_header(is) != 0) throw Error("snapshot: not a Cartesian field");
    CartesianField f;
    f.grid.nx = detail::get<std::uint64_t>(is);
    f.grid.ny = detail::get<std::uint64_t>(is);
    f.grid.ly = detail::get<double>(is);
    validate(f.grid);
    f.time = detail::get<double>(is);
    f.values = detail::get_values(is, f.grid.size());
    return f;
}

inline PolarField read_polar_snapshot(std::istream& is) {
    if (detail::read_header(is) != 1) throw Error("snapshot: not a polar field");
    PolarField f;
    f.grid.nr = detail::get<std::uint64_t>(is);
    f.grid.ntheta = detail::get<std::uint64_t>(is);
    f.grid.r_min = detail::get<double>(is);
    f.grid.r_max = detail::get<double>(is);
    validate(f.grid);
    f.time = detail::get<double>(is);
    f.values = detail::get_values(is, f.grid.size());
    return f;
}

inline CartesianField read_cartesian_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open snapshot " + path.string());
    return read_cartesian_snapshot(is);
}

inline PolarField read_polar_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open snapshot " + path.string());
    return read_polar_snapshot(is);
}

// ---------------------------------------------------------------------------
// SVG log-log plot
// ---------------------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool line = false;  ///< polyline instead of markers
    std::string color = "#1f77b4";
};

/// Minimal log-log chart; non-positive points are skipped.
inline std::string loglog_svg(const std::vector<PlotSeries>& series, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel) {
    constexpr double W = 640, H = 480, L = 70, R = 20, T = 40, B = 60;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!(s.x[i] > 0 && s.y[i] > 0)) continue;
            x0 = std::min(x0, std::log10(s.x[i]));
            x1 = std::max(x1, std::log10(s.x[i]));
            y0 = std::min(y0, std::log10(s.y[i]));
            y1 = std::max(y1, std::log10(s.y[i]));
        }
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    const auto px = [&](double v) { return L + (std::log10(v) - x0) / (x1 - x0) * (W - L - R); };
    const auto py = [&](double v) { return H - B - (std::log10(v) - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
       << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int d = static_cast<int>(std::ceil(x0)); d <= static_cast<int>(std::floor(x1)); ++d) {
        const double x = px(std::pow(10.0, d));
        os << "<text x=\"" << x << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">1e" << d
           << "</text>\n";
    }
    for (int d = static_cast<int>(std::ceil(y0)); d <= static_cast<int>(std::floor(y1)); ++d) {
        const double y = py(std::pow(10.0, d));
        os << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-size=\"11\">1e" << d
           << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
       << "</text>\n"
       << "<text x=\"18\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
       << H / 2 << ")\">" << ylabel << "</text>\n";
    double legend_y = T + 10;
    for (const auto& s : series) {
        if (s.line) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" points=\"";
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (s.x[i] > 0 && s.y[i] > 0) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            os << "\"/>\n";
        } else {
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (s.x[i] > 0 && s.y[i] > 0)
                    os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"4\" fill=\"" << s.color
                       << "\"/>\n";
        }
        os << "<text x=\"" << W - R - 150 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\"" << s.color << "\">"
           << s.label << "</text>\n";
        legend_y += 16;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace enhdiff::io
