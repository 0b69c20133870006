#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qcl::io {

// Tabular artifact with 17-significant-digit reals and '.' decimal separator.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::string format_real(double v);                 // %.17g, C locale
std::string to_csv(const Table& t);
std::string to_json(const Table& t);               // array of column->value objects

enum class Format { csv, json };

// Writes body to path, creating parent directories. Returns the byte count.
size_t write_file(const std::filesystem::path& path, const std::string& body);

uint32_t crc32(const std::string& data);

} // namespace qcl::io
