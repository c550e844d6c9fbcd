#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace chord {

using CsvCell = std::variant<std::string, double, int64_t>;

// Locale-independent number rendering: doubles with 17 significant digits.
std::string format_number(double v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<CsvCell>& cells);

private:
    std::ofstream out_;
    size_t columns_;
};

}  // namespace chord
