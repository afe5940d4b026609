#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poc/matrix.hpp"

namespace poc {

// Fixed decimal formatting (17 significant digits) so emitted files are
// byte-stable and round-trip exactly.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;

    int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::filesystem::path& path);
std::string to_csv(const std::vector<std::string>& header, const Matrix& values);

// Write via a temp file and rename, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit content digest, hex-encoded; used by run manifests.
std::string digest_hex(const std::string& content);

}  // namespace poc
