// io.hpp — CSV / JSON serialization of correlation series and matrix files.
// All floating-point text uses 17 significant digits so values round-trip
// exactly and identical runs produce byte-identical files.

#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pairtraj/estimator.hpp"

namespace pairtraj {

inline constexpr const char* kSeriesCsvHeader =
    "time,g_real,g_imag,g_abs,stderr_real,stderr_imag,g_norm_real,g_norm_imag,K";

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// One row per sample time. "normalized" selects whether the g_norm columns
// carry g(t)/g(0) or just repeat the raw values (divisor 1).
inline std::string series_to_csv(const CorrelationSeries& series, bool normalized) {
    std::ostringstream out;
    out << kSeriesCsvHeader << "\n";
    const Complex g0 =
        normalized ? series.normalization.value_or(Complex{1.0, 0.0}) : Complex{1.0, 0.0};
    const Complex div = (std::abs(g0) == 0.0) ? Complex{1.0, 0.0} : g0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const Complex g = series.mean[i];
        const Complex gn = g / div;
        out << format_double(series.times[i]) << ',' << format_double(g.real()) << ','
            << format_double(g.imag()) << ',' << format_double(std::abs(g)) << ','
            << format_double(series.stderr_re[i]) << ',' << format_double(series.stderr_im[i])
            << ',' << format_double(gn.real()) << ',' << format_double(gn.imag()) << ','
            << series.trajectories << "\n";
    }
    return out.str();
}

inline nlohmann::json series_to_json(const CorrelationSeries& series, bool normalized) {
    const Complex g0 =
        normalized ? series.normalization.value_or(Complex{1.0, 0.0}) : Complex{1.0, 0.0};
    const Complex div = (std::abs(g0) == 0.0) ? Complex{1.0, 0.0} : g0;
    nlohmann::json j;
    j["time"] = series.times;
    std::vector<double> gr, gi, ga, sr, si, nr, ni;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const Complex g = series.mean[i];
        const Complex gn = g / div;
        gr.push_back(g.real());
        gi.push_back(g.imag());
        ga.push_back(std::abs(g));
        sr.push_back(series.stderr_re[i]);
        si.push_back(series.stderr_im[i]);
        nr.push_back(gn.real());
        ni.push_back(gn.imag());
    }
    j["g_real"] = gr;
    j["g_imag"] = gi;
    j["g_abs"] = ga;
    j["stderr_real"] = sr;
    j["stderr_imag"] = si;
    j["g_norm_real"] = nr;
    j["g_norm_imag"] = ni;
    j["K"] = series.trajectories;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open output file: " + path);
    f << content;
    if (!f) throw config_error("failed writing output file: " + path);
}

inline CorrelationSeries read_series_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open input file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw config_error("empty CSV file: " + path);
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != kSeriesCsvHeader) {
        throw config_error("unexpected CSV header in " + path);
    }
    CorrelationSeries s;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
        if (cols.size() != 9) throw config_error("bad CSV row in " + path);
        s.times.push_back(cols[0]);
        s.mean.emplace_back(cols[1], cols[2]);
        s.stderr_re.push_back(cols[4]);
        s.stderr_im.push_back(cols[5]);
        s.trajectories = static_cast<std::size_t>(cols[8]);
    }
    if (!s.times.empty()) s.normalization = s.mean.front();
    s.validate();
    return s;
}

// ------------------------------- matrix files --------------------------------
// JSON matrix: {"rows": r, "cols": c, "data": [[re, im], ...]} in row-major
// order; vectors use {"dim": n, "data": [[re, im], ...]}. Tensor-product
// spaces use the first-factor-major index convention documented in hilbert.hpp.

inline Matrix read_matrix_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open matrix file: " + path);
    try {
        nlohmann::json j;
        f >> j;
        const Index rows = j.at("rows").get<Index>();
        const Index cols = j.at("cols").get<Index>();
        const auto& data = j.at("data");
        if (rows < 1 || cols < 1 || static_cast<Index>(data.size()) != rows * cols) {
            throw config_error("bad matrix dimensions in " + path);
        }
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index c = 0; c < cols; ++c) {
                const auto& e = data[static_cast<std::size_t>(i * cols + c)];
                m(i, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("bad matrix file " + path + ": " + e.what());
    }
}

inline StateVector read_vector_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open vector file: " + path);
    try {
        nlohmann::json j;
        f >> j;
        const Index dim = j.at("dim").get<Index>();
        const auto& data = j.at("data");
        if (dim < 1 || static_cast<Index>(data.size()) != dim) {
            throw config_error("bad vector dimension in " + path);
        }
        Vector v(dim);
        for (Index i = 0; i < dim; ++i) {
            const auto& e = data[static_cast<std::size_t>(i)];
            v[i] = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        }
        StateVector s(std::move(v));
        if (!s.finite()) throw config_error("vector file contains non-finite entries: " + path);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("bad vector file " + path + ": " + e.what());
    }
}

}  // namespace pairtraj
