#include "chord/csv.hpp"

#include <cmath>
#include <cstdio>

#include "chord/types.hpp"

namespace chord {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw ConfigError("cannot write " + path);
    std::vector<CsvCell> cells(header.begin(), header.end());
    row(cells);
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
    if (cells.size() != columns_) throw DomainError("csv row has wrong column count");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        if (auto s = std::get_if<std::string>(&cells[i]))
            out_ << *s;
        else if (auto d = std::get_if<double>(&cells[i]))
            out_ << format_number(*d);
        else
            out_ << std::get<int64_t>(cells[i]);
    }
    out_ << '\n';
}

}  // namespace chord
