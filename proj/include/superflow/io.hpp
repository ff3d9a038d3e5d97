#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace superflow::io {

// FNV-1a, used for config hashes and output checksums
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

// RFC-4180 CSV with '.' decimal separator; numbers use shortest round-trip
std::string csv_field(const std::string& s);
std::string format_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<std::string>& cells);
    void row_values(const std::vector<double>& values);
    const std::string& text() const { return buf_; }

private:
    std::string buf_;
    std::size_t columns_ = 0;
};

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// Run manifest: written before experiment outputs, rewritten with checksums
// once the outputs exist.
class Manifest {
public:
    Manifest(std::filesystem::path out_dir, const nlohmann::json& config, std::uint64_t seed);

    // registers and writes an artifact, updating the manifest on disk
    void emit(const std::string& filename, const std::string& contents);
    const std::filesystem::path& dir() const { return out_dir_; }

private:
    void flush() const;
    std::filesystem::path out_dir_;
    nlohmann::json doc_;
};

}  // namespace superflow::io
