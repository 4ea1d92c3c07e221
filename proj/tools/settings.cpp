#include "settings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#ifndef REVERT_FIELD_VERSION
#define REVERT_FIELD_VERSION "unknown"
#endif

namespace revert::cli {

void Settings::add(const std::string& key, Target target, const std::string& help, bool required) {
    entries_.push_back(Entry{key, target, help, required, nullptr, false});
}

void Settings::bind(CLI::App& app) {
    app.add_option("--config", config_path_, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);
    for (auto& e : entries_) {
        const std::string flag = "--" + e.key;
        e.option = std::visit(
            [&](auto* target) { return app.add_option(flag, *target, e.help)->capture_default_str(); },
            e.target);
    }
}

namespace {

void flatten(const nlohmann::json& node, const std::string& prefix,
             std::map<std::string, nlohmann::json>& out) {
    if (node.is_object()) {
        for (const auto& [k, v] : node.items()) {
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
        }
    } else {
        out[prefix] = node;
    }
}

}  // namespace

void Settings::apply(Entry& entry, const nlohmann::json& value) {
    const auto fail = [&](const char* expected) {
        throw ConfigError("config key '" + entry.key + "' expects " + expected + ", got " +
                          value.dump());
    };
    std::visit(
        [&](auto* target) {
            using T = std::remove_pointer_t<decltype(target)>;
            if constexpr (std::is_same_v<T, double>) {
                if (!value.is_number()) fail("a number");
                *target = value.get<double>();
            } else if constexpr (std::is_same_v<T, int>) {
                if (!value.is_number_integer()) fail("an integer");
                *target = value.get<int>();
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                if (!value.is_number_unsigned()) fail("a non-negative integer");
                *target = value.get<std::uint64_t>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!value.is_boolean()) fail("a boolean");
                *target = value.get<bool>();
            } else {
                if (!value.is_string()) fail("a string");
                *target = value.get<std::string>();
            }
        },
        entry.target);
    entry.from_config = true;
}

void Settings::resolve() {
    if (!config_path_.empty()) {
        std::ifstream in(config_path_);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& ex) {
            throw ConfigError("cannot parse config " + config_path_ + ": " + ex.what());
        }
        if (!doc.is_object()) throw ConfigError("config must be a JSON object");
        std::map<std::string, nlohmann::json> flat;
        flatten(doc, "", flat);
        for (const auto& [key, value] : flat) {
            auto it = std::find_if(entries_.begin(), entries_.end(),
                                   [&](const Entry& e) { return e.key == key; });
            if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
            if (it->option && it->option->count() > 0) continue;
            apply(*it, value);
        }
    }
    for (const auto& e : entries_) {
        const bool given = (e.option && e.option->count() > 0) || e.from_config;
        if (e.required && !given) throw ConfigError("missing required setting --" + e.key);
    }
}

nlohmann::json Settings::resolved() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& e : entries_) {
        std::visit([&](auto* target) { out[e.key] = *target; }, e.target);
    }
    return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    std::uint64_t seed, const nlohmann::json& settings,
                    const std::vector<std::filesystem::path>& outputs) {
    nlohmann::json doc;
    doc["command"] = command;
    doc["version"] = REVERT_FIELD_VERSION;
    doc["seed"] = seed;
    doc["settings"] = settings;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& p : outputs) files.push_back(p.filename().string());
    doc["outputs"] = files;
    write_json(path, doc);
}

std::filesystem::path manifest_path(const std::filesystem::path& output, bool directory) {
    if (directory) return output / "manifest.json";
    std::filesystem::path p = output;
    p += ".manifest.json";
    return p;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace revert::cli
