#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "memoryheat/grid.hpp"

namespace memoryheat {

using json = nlohmann::json;

// Shortest round-trip decimal representation (byte-stable across runs).
std::string format_double(double x);

// FNV-1a 64-bit hex digest of the canonicalized (sorted-key, shortest-float)
// serialization of a JSON document.
std::string canonical_hash(const json& doc);

// Column-oriented CSV writer with deterministic formatting.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}
    void add_row(const std::vector<double>& row);
    void write(const std::filesystem::path& path) const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

void write_json(const json& doc, const std::filesystem::path& path);

// Flat little-endian float64 dump of the interior nodes, row-major, plus the
// {nx, ny, t} JSON sidecar at path + ".json".
void write_snapshot(const GridFunction& u, double t, const std::filesystem::path& path);
GridFunction read_snapshot(const Grid& grid, const std::filesystem::path& path);

// Run manifest: every output file listed, plus the assertion outcomes.
struct Assertion {
    std::string name;
    bool pass = false;
    double value = 0.0;
};

class RunManifest {
public:
    RunManifest(std::string scenario_hash, std::string tool_version)
        : scenario_hash_(std::move(scenario_hash)), tool_version_(std::move(tool_version)) {}

    void add_output(const std::string& name, const std::filesystem::path& path,
                    const std::string& format);
    void add_assertion(const std::string& name, bool pass, double value);
    bool all_passed() const;
    const std::vector<Assertion>& assertions() const { return assertions_; }

    json to_json() const;
    void write(const std::filesystem::path& dir) const;

private:
    std::string scenario_hash_;
    std::string tool_version_;
    std::vector<std::array<std::string, 3>> outputs_;
    std::vector<Assertion> assertions_;
};

constexpr const char* kToolVersion = "0.1.0";

} // namespace memoryheat
