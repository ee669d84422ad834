#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace drlab {

/// 17 significant digits, locale independent; round-trips every double.
std::string format_double(double v);

/// Minimal CSV writer: ',' separator, '.' decimal, header first.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header);

    CsvWriter& cell(double v);
    CsvWriter& cell(std::int64_t v);
    CsvWriter& cell(std::uint64_t v);
    CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
    CsvWriter& cell(std::string_view s);
    void end_row();

private:
    void sep();
    std::ostream& os_;
    std::size_t columns_, filled_ = 0;
};

/// Reads "value,prob" rows after a header line.
std::vector<std::pair<std::int64_t, double>> read_pmf_csv(const std::string& path);

}  // namespace drlab
