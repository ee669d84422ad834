#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "drlab/errors.hpp"

namespace drlab {

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        s.push_back(hex[md[i] >> 4]);
        s.push_back(hex[md[i] & 15]);
    }
    return s;
}

nlohmann::json RunConfig::to_json() const {
    return {{"subcommand", subcommand}, {"params", params},   {"seed", seed}, {"out_dir", out_dir},
            {"formats", formats},       {"workers", workers}, {"argv", argv}};
}

nlohmann::json RunManifest::to_json() const {
    return {{"config", config.to_json()},
            {"generator", generator},
            {"seed", config.seed},
            {"checksums", checksums},
            {"wall_clock_seconds", wall_clock},
            {"version", version}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    const auto& c = j.at("config");
    m.config.subcommand = c.at("subcommand").get<std::string>();
    m.config.params = c.at("params");
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.out_dir = c.at("out_dir").get<std::string>();
    m.config.formats = c.at("formats").get<std::vector<std::string>>();
    m.config.workers = c.at("workers").get<int>();
    m.config.argv = c.at("argv").get<std::vector<std::string>>();
    m.generator = j.at("generator").get<std::string>();
    m.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
    m.wall_clock = j.at("wall_clock_seconds").get<double>();
    m.version = j.at("version").get<std::string>();
    return m;
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ResourceError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    if (!f) throw ResourceError("cannot write " + (dir_ / name).string());
    sums_[name] = sha256_hex(content);
}

void write_manifest(OutputDir& out, const RunManifest& m) {
    std::ofstream f(out.path() / std::string(manifest_name), std::ios::binary);
    f << m.to_json().dump(2) << '\n';
    if (!f) throw ResourceError("cannot write manifest in " + out.path().string());
}

RunManifest read_manifest(const std::filesystem::path& dir) {
    std::ifstream f(dir / std::string(manifest_name));
    if (!f) throw UsageError("no manifest in " + dir.string());
    return RunManifest::from_json(nlohmann::json::parse(f));
}

}  // namespace drlab
