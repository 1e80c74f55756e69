#include "qsync/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "qsync/types.hpp"

namespace qsync {

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "fnv1a64_file", "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(bytes.data(), bytes.size());
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

std::string CsvWriter::format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void CsvWriter::add_row(const std::vector<double>& values) {
    require(values.size() == header_.size(), Errc::io, "CsvWriter::add_row",
            "column count mismatch");
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line += ',';
        line += format_double(values[i]);
    }
    rows_.push_back(std::move(line));
}

void CsvWriter::add_raw_row(const std::string& line) { rows_.push_back(line); }

std::uint64_t CsvWriter::write(const std::filesystem::path& path) const {
    std::string content;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) content += ',';
        content += header_[i];
    }
    content += '\n';
    for (const auto& r : rows_) {
        content += r;
        content += '\n';
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(out.good(), Errc::io, "CsvWriter::write", "cannot write " + path.string());
    out << content;
    out.close();
    return fnv1a64(content.data(), content.size());
}

RunManifest::RunManifest(std::string tool_version, std::string subcommand)
    : version_(std::move(tool_version)), subcommand_(std::move(subcommand)) {}

void RunManifest::set_option(const std::string& key, const std::string& value) {
    options_[key] = value;
}

void RunManifest::set_seed(std::uint64_t seed) { seed_ = seed; }

void RunManifest::add_timing(const std::string& step, double seconds) {
    timings_.emplace_back(step, seconds);
}

void RunManifest::add_output(const std::filesystem::path& path, std::uint64_t hash) {
    outputs_.emplace_back(path.string(), hash);
}

void RunManifest::write(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["tool"] = "qsync";
    j["version"] = version_;
    j["subcommand"] = subcommand_;
    j["master_seed"] = seed_;
    j["options"] = options_;
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    for (const auto& [k, v] : timings_) timings[k] = v;
    j["timings_seconds"] = timings;
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const auto& [p, h] : outputs_) {
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
        outs.push_back({{"path", p}, {"fnv1a64", hex}});
    }
    j["outputs"] = outs;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    require(out.good(), Errc::io, "RunManifest::write", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace qsync
