#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dkwm/bands.hpp"
#include "dkwm/types.hpp"

namespace dkwm {

// A file could not be opened or its contents could not be parsed. Maps to
// CLI exit code 3.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// 17 significant digits reproduce any double bit-exactly on re-parse.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

}  // namespace detail

// Sample input: one numeric value per line. A single non-numeric first line
// is treated as a header; blank lines are skipped; any other malformed line
// is a hard error naming the line.
inline std::vector<double> read_samples(std::istream& in, const std::string& source = "<input>") {
    std::vector<double> out;
    std::string line;
    std::size_t line_no = 0;
    bool seen_value = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        double v = 0.0;
        if (!detail::parse_double(body, v)) {
            if (!seen_value && line_no == 1) continue;  // header line
            throw io_error(source + ":" + std::to_string(line_no) + ": not a number: '" +
                           body + "'");
        }
        out.push_back(v);
        seen_value = true;
    }
    return out;
}

inline std::vector<double> read_samples_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    return read_samples(in, path);
}

// Band CSV: a header row then one knot per line, everything at 17
// significant digits so a written band re-reads bit-exactly. When the data
// coordinates are supplied, knot k >= 1 is joined to the k-th order
// statistic (knot 0 has no data coordinate and gets an empty field).
inline void write_band_csv(std::ostream& out, const StepBand& band, bool verbose = false,
                           const std::vector<double>* data_coords = nullptr) {
    out << "q,lower";
    if (verbose) out << ",unclamped";
    if (data_coords) out << ",t";
    out << "\n";
    for (std::size_t k = 0; k < band.knots.size(); ++k) {
        const BandKnot& knot = band.knots[k];
        out << format_g17(knot.q) << "," << format_g17(knot.lower);
        if (verbose) out << "," << format_g17(knot.unclamped);
        if (data_coords) {
            out << ",";
            if (k >= 1 && k <= data_coords->size()) out << format_g17((*data_coords)[k - 1]);
        }
        out << "\n";
    }
}

// Reads a band CSV produced by write_band_csv back into knots; extra columns
// (t) are ignored, an unclamped column is honoured when present.
inline std::vector<BandKnot> read_band_knots_csv(std::istream& in,
                                                 const std::string& source = "<input>") {
    std::vector<BandKnot> knots;
    std::string line;
    std::size_t line_no = 0;
    int unclamped_col = -1;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(body);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(detail::trim(field));
        if (!have_header) {
            if (fields.size() < 2 || fields[0] != "q" || fields[1] != "lower") {
                throw io_error(source + ":" + std::to_string(line_no) +
                               ": expected a band header starting 'q,lower'");
            }
            for (std::size_t i = 2; i < fields.size(); ++i) {
                if (fields[i] == "unclamped") unclamped_col = static_cast<int>(i);
            }
            have_header = true;
            continue;
        }
        BandKnot knot{0.0, 0.0, 0.0};
        if (fields.size() < 2 || !detail::parse_double(fields[0], knot.q) ||
            !detail::parse_double(fields[1], knot.lower)) {
            throw io_error(source + ":" + std::to_string(line_no) + ": malformed band row");
        }
        knot.unclamped = knot.lower;
        if (unclamped_col >= 0 && static_cast<std::size_t>(unclamped_col) < fields.size()) {
            if (!detail::parse_double(fields[static_cast<std::size_t>(unclamped_col)],
                                      knot.unclamped)) {
                throw io_error(source + ":" + std::to_string(line_no) + ": malformed band row");
            }
        }
        knots.push_back(knot);
    }
    if (!have_header) throw io_error(source + ": empty band file");
    return knots;
}

}  // namespace dkwm
