#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace drlab {

inline constexpr std::string_view library_version = "1.0.0";
inline constexpr std::string_view manifest_name = "manifest.json";

std::string sha256_hex(std::string_view data);

/// Fully resolved run configuration. `argv` is the canonical command line
/// (without --out) that reproduces the run.
struct RunConfig {
    std::string subcommand;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 1;
    std::string out_dir;
    std::vector<std::string> formats;
    int workers = 1;
    std::vector<std::string> argv;

    nlohmann::json to_json() const;
};

struct RunManifest {
    RunConfig config;
    std::string generator;
    std::map<std::string, std::string> checksums;  // file name -> sha256
    double wall_clock = 0.0;
    std::string version{library_version};

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// Output directory that remembers the checksum of everything written.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir);

    void write(const std::string& name, const std::string& content);
    const std::filesystem::path& path() const { return dir_; }
    const std::map<std::string, std::string>& checksums() const { return sums_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> sums_;
};

void write_manifest(OutputDir& out, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& dir);

}  // namespace drlab
