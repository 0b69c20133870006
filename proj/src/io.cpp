#include "qcl/io.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "qcl/errors.hpp"

namespace qcl::io {

std::string format_real(double v) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

std::string to_csv(const Table& t) {
    std::string out;
    for (size_t c = 0; c < t.columns.size(); ++c) {
        out += t.columns[c];
        out += c + 1 < t.columns.size() ? ',' : '\n';
    }
    for (const auto& row : t.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            out += format_real(row[c]);
            out += c + 1 < row.size() ? ',' : '\n';
        }
    }
    return out;
}

std::string to_json(const Table& t) {
    std::string out = "[\n";
    for (size_t r = 0; r < t.rows.size(); ++r) {
        out += "  {";
        for (size_t c = 0; c < t.rows[r].size(); ++c) {
            out += "\"" + t.columns[c] + "\": " + format_real(t.rows[r][c]);
            if (c + 1 < t.rows[r].size()) out += ", ";
        }
        out += r + 1 < t.rows.size() ? "},\n" : "}\n";
    }
    out += "]\n";
    return out;
}

size_t write_file(const std::filesystem::path& path, const std::string& body) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw qcl::IoError("cannot open " + path.string() + " for writing");
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) throw qcl::IoError("short write to " + path.string());
    return body.size();
}

uint32_t crc32(const std::string& data) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t crc = 0xFFFFFFFFu;
    for (unsigned char ch : data) crc = table[(crc ^ ch) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

} // namespace qcl::io
