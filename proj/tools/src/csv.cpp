#include "byzsgd_cli/csv.hpp"

#include <byzsgd/error.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

namespace byzsgd::cli {

std::string format_double(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_run_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
    out << kRunHeader << '\n';
    const double nan = std::nan("");
    for (const auto& r : records) {
        double cos = nan, d1 = nan, d2 = nan;
        if (r.alignment && !r.alignment->empty()) {
            cos = r.alignment->front().cos_phi;
            d1 = r.alignment->front().max_diff1;
            d2 = r.alignment->front().max_diff2;
        }
        out << r.step << ',' << format_double(r.sim_time) << ',' << format_double(r.train_loss) << ','
            << format_double(r.test_accuracy) << ',' << format_double(r.max_pairwise_dist) << ','
            << format_double(cos) << ',' << format_double(d1) << ',' << format_double(d2) << '\n';
    }
}

void write_variance_csv(std::ostream& out, const VarianceReport& report) {
    out << "step,rule,lhs,rhs,satisfied\n";
    for (const auto& s : report.per_step)
        out << s.step << ',' << to_string(s.rule) << ',' << format_double(s.lhs) << ',' << format_double(s.rhs)
            << ',' << (s.satisfied ? 1 : 0) << '\n';
    for (const auto& [rule, fraction] : report.satisfaction)
        out << "summary," << to_string(rule) << ",nan,nan," << format_double(fraction) << '\n';
}

void write_vector_row(std::ostream& out, const ParamVector& v) {
    for (std::size_t i = 0; i < v.dim(); ++i)
        out << (i ? "," : "") << format_double(v[i]);
    out << '\n';
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view cell, std::size_t line) {
    cell = trim(cell);
    if (cell == "nan" || cell == "NaN")
        return std::nan("");
    if (cell == "inf")
        return INFINITY;
    if (cell == "-inf")
        return -INFINITY;
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw Error(Errc::ParseError,
                    "line " + std::to_string(line) + ": '" + std::string(cell) + "' is not a number");
    return value;
}

} // namespace

std::vector<ParamVector> read_vectors_csv(std::istream& in) {
    std::vector<ParamVector> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = trim(line);
        if (text.empty())
            continue;
        std::vector<double> values;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = text.find(',', start);
            values.push_back(parse_number(text.substr(start, comma - start), lineno));
            if (comma == std::string_view::npos)
                break;
            start = comma + 1;
        }
        if (!rows.empty() && values.size() != rows.front().dim())
            throw Error(Errc::DimensionMismatch, "line " + std::to_string(lineno) + " has " +
                                                     std::to_string(values.size()) + " values, expected " +
                                                     std::to_string(rows.front().dim()));
        rows.emplace_back(std::move(values));
    }
    return rows;
}

} // namespace byzsgd::cli
