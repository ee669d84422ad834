#include "drlab/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drlab/errors.hpp"

namespace drlab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header)
    : os_(os), columns_(header.size()) {
    if (header.empty()) throw UsageError("csv: header must not be empty");
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
}

void CsvWriter::sep() {
    if (filled_ == columns_) throw DomainError("csv: too many cells in row");
    if (filled_++) os_ << ',';
}

CsvWriter& CsvWriter::cell(double v) {
    sep();
    os_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t v) {
    sep();
    os_ << v;
    return *this;
}

CsvWriter& CsvWriter::cell(std::uint64_t v) {
    sep();
    os_ << v;
    return *this;
}

CsvWriter& CsvWriter::cell(std::string_view s) {
    if (s.find_first_of(",\"\n") != std::string_view::npos)
        throw DomainError("csv: cell needs quoting, not supported");
    sep();
    os_ << s;
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_) throw DomainError("csv: short row");
    os_ << '\n';
    filled_ = 0;
}

namespace {

template <class T>
T parse_field(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw UsageError("pmf csv: cannot parse '" + std::string(s) + "' at " + where);
    return v;
}

}  // namespace

std::vector<std::pair<std::int64_t, double>> read_pmf_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("pmf csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw UsageError("pmf csv: empty file " + path);
    std::vector<std::pair<std::int64_t, double>> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw UsageError("pmf csv: expected value,prob at line " + std::to_string(lineno));
        const std::string where = path + ":" + std::to_string(lineno);
        out.emplace_back(parse_field<std::int64_t>(std::string_view(line).substr(0, comma), where),
                         parse_field<double>(std::string_view(line).substr(comma + 1), where));
    }
    if (out.empty()) throw UsageError("pmf csv: no rows in " + path);
    return out;
}

}  // namespace drlab
