#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qsync {

/// FNV-1a 64-bit content hash (manifest integrity, not cryptographic).
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

/// Column-oriented CSV writer with locale-free shortest round-trip doubles.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);

    void add_row(const std::vector<double>& values);
    void add_raw_row(const std::string& line);

    /// Write to disk and return the content hash.
    std::uint64_t write(const std::filesystem::path& path) const;

    static std::string format_double(double v);

  private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

/// Per-invocation record: resolved configuration, seed, timings, and the
/// emitted files with their content hashes. Sufficient to re-run the command
/// and obtain bit-identical data files.
class RunManifest {
  public:
    RunManifest(std::string tool_version, std::string subcommand);

    void set_option(const std::string& key, const std::string& value);
    void set_seed(std::uint64_t seed);
    void add_timing(const std::string& step, double seconds);
    void add_output(const std::filesystem::path& path, std::uint64_t hash);

    void write(const std::filesystem::path& path) const;

  private:
    std::string version_;
    std::string subcommand_;
    std::uint64_t seed_ = 0;
    std::map<std::string, std::string> options_;
    std::vector<std::pair<std::string, double>> timings_;
    std::vector<std::pair<std::string, std::uint64_t>> outputs_;
};

}  // namespace qsync
