#include "superflow/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "superflow/version.hpp"

namespace superflow::io {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += csv_field(header[i]);
    }
    buf_ += "\r\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::runtime_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += csv_field(cells[i]);
    }
    buf_ += "\r\n";
}

void CsvWriter::row_values(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(contents.data(), std::streamsize(contents.size()));
    if (!os.good()) throw std::runtime_error("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return s;
}

Manifest::Manifest(std::filesystem::path out_dir, const nlohmann::json& config, std::uint64_t seed)
    : out_dir_(std::move(out_dir)) {
    std::filesystem::create_directories(out_dir_);
    doc_["config"] = config;
    doc_["config_hash"] = hex64(fnv1a(config.dump()));
    doc_["master_seed"] = seed;
    doc_["version"] = SUPERFLOW_VERSION;
    doc_["outputs"] = nlohmann::json::object();
    flush();
}

void Manifest::emit(const std::string& filename, const std::string& contents) {
    write_file(out_dir_ / filename, contents);
    doc_["outputs"][filename] = hex64(fnv1a(contents));
    flush();
}

void Manifest::flush() const { write_file(out_dir_ / "manifest.json", doc_.dump(2) + "\n"); }

}  // namespace superflow::io
