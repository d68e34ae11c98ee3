#include "deconviv/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "deconviv/errors.hpp"

namespace deconviv {

namespace {

std::string strip_cr(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    return line;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_field(const std::string& field, std::size_t line_no) {
    const char* b = field.data();
    const char* e = b + field.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    const char* stop = e;
    while (stop > b && (stop[-1] == ' ' || stop[-1] == '\t')) --stop;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(b, stop, v);
    if (ec != std::errc{} || ptr != stop)
        throw MalformedCsv("line " + std::to_string(line_no) + ": cannot parse number '" +
                           field + "'");
    if (!std::isfinite(v))
        throw MalformedCsv("line " + std::to_string(line_no) + ": non-finite value '" + field +
                           "'");
    return v;
}

} // namespace

Sample read_sample_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedCsv("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw MissingColumn("'" + path + "' is empty, header y,x,w1,w2 expected");
    if (strip_cr(line) != "y,x,w1,w2")
        throw MissingColumn("header must be exactly y,x,w1,w2, got '" + strip_cr(line) + "'");
    Sample s;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = strip_cr(line);
        if (body.empty()) continue;
        const auto fields = split_commas(body);
        if (fields.size() != 4)
            throw MalformedCsv("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                               std::to_string(fields.size()));
        s.y.push_back(parse_field(fields[0], line_no));
        s.x.push_back(parse_field(fields[1], line_no));
        s.w1.push_back(parse_field(fields[2], line_no));
        s.w2.push_back(parse_field(fields[3], line_no));
    }
    validate(s);
    return s;
}

void write_sample_csv(const std::string& path, const Sample& s) {
    validate(s);
    std::ofstream out(path);
    if (!out) throw MalformedCsv("cannot open '" + path + "' for writing");
    out << "y,x,w1,w2\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_g17(s.y[i]) << ',' << format_g17(s.x[i]) << ',' << format_g17(s.w1[i])
            << ',' << format_g17(s.w2[i]) << '\n';
    if (!out) throw MalformedCsv("write to '" + path + "' failed");
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace deconviv
