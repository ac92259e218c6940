#include "memoryheat/output.hpp"

#include <charconv>
#include <cstring>
#include <fstream>

namespace memoryheat {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string canonical_hash(const json& doc) {
    const std::string canon = doc.dump(); // nlohmann sorts object keys
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

void CsvWriter::add_row(const std::vector<double>& row) {
    if (row.size() != columns_.size())
        throw ConfigError("csv", "row width does not match the header");
    rows_.push_back(row);
}

void CsvWriter::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("output", "cannot write " + path.string());
    for (std::size_t c = 0; c < columns_.size(); ++c)
        out << (c ? "," : "") << columns_[c];
    out << '\n';
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << format_double(row[c]);
        out << '\n';
    }
}

void write_json(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("output", "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

void write_snapshot(const GridFunction& u, double t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("output", "cannot write " + path.string());
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(u.v.data()),
              static_cast<std::streamsize>(u.v.size() * sizeof(double)));
    json sidecar;
    sidecar["nx"] = u.grid.nx;
    sidecar["ny"] = u.grid.ny;
    sidecar["t"] = t;
    write_json(sidecar, path.string() + ".json");
}

GridFunction read_snapshot(const Grid& grid, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("field.file", "cannot open " + path.string());
    GridFunction u(grid);
    in.read(reinterpret_cast<char*>(u.v.data()),
            static_cast<std::streamsize>(u.v.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != u.v.size() * sizeof(double))
        throw ConfigError("field.file", path.string() + " is shorter than the grid requires");
    return u;
}

void RunManifest::add_output(const std::string& name, const std::filesystem::path& path,
                             const std::string& format) {
    outputs_.push_back({name, path.filename().string(), format});
}

void RunManifest::add_assertion(const std::string& name, bool pass, double value) {
    assertions_.push_back({name, pass, value});
}

bool RunManifest::all_passed() const {
    for (const auto& a : assertions_)
        if (!a.pass) return false;
    return true;
}

json RunManifest::to_json() const {
    json doc;
    doc["scenario_hash"] = scenario_hash_;
    doc["tool_version"] = tool_version_;
    json outs = json::array();
    for (const auto& o : outputs_) {
        json e;
        e["name"] = o[0];
        e["path"] = o[1];
        e["format"] = o[2];
        outs.push_back(e);
    }
    doc["outputs"] = outs;
    json asserts = json::array();
    for (const auto& a : assertions_) {
        json e;
        e["name"] = a.name;
        e["pass"] = a.pass;
        e["value"] = a.value;
        asserts.push_back(e);
    }
    doc["assertions"] = asserts;
    return doc;
}

void RunManifest::write(const std::filesystem::path& dir) const {
    write_json(to_json(), dir / "manifest.json");
}

} // namespace memoryheat
