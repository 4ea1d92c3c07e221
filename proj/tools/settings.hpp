#pragma once

// Named run settings shared by the command line and JSON config files.
// Every setting is a long flag (--filter.beta) and a config key
// ("filter.beta" or {"filter": {"beta": ...}}). Flags win over the config.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace revert::cli {

// Bad flags, unknown keys, values of the wrong type or out of range. Exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Settings {
public:
    using Target = std::variant<double*, int*, std::uint64_t*, std::string*, bool*>;

    void add(const std::string& key, Target target, const std::string& help,
             bool required = false);
    // Adds one option per setting and --config.
    void bind(CLI::App& app);
    // Loads the config file (if --config was given) into settings that were
    // not set on the command line, then checks required settings.
    void resolve();
    [[nodiscard]] nlohmann::json resolved() const;

private:
    struct Entry {
        std::string key;
        Target target;
        std::string help;
        bool required = false;
        CLI::Option* option = nullptr;
        bool from_config = false;
    };
    void apply(Entry& entry, const nlohmann::json& value);

    std::vector<Entry> entries_;
    std::string config_path_;
};

// Writes `doc` as pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// Manifest written beside an output: command, version, master seed, the
// resolved settings and the files produced.
void write_manifest(const std::filesystem::path& path, const std::string& command,
                    std::uint64_t seed, const nlohmann::json& settings,
                    const std::vector<std::filesystem::path>& outputs);

// "<file>.manifest.json" for a file output, "<dir>/manifest.json" for a directory.
std::filesystem::path manifest_path(const std::filesystem::path& output, bool directory);

// Shortest round-trip text for a double; "nan" for NaN.
std::string format_double(double v);

}  // namespace revert::cli
