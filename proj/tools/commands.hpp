#pragma once

#include <memory>
#include <string>
#include <vector>

#include "settings.hpp"

namespace revert::cli {

class Command {
public:
    virtual ~Command() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::string description() const = 0;
    virtual void declare(Settings& settings) = 0;
    // Runs after the settings are resolved; returns the process exit code.
    virtual int run(const Settings& settings) = 0;
};

std::unique_ptr<Command> make_bench_distance();
std::unique_ptr<Command> make_calibrate_noise();
std::unique_ptr<Command> make_field_grid();
std::unique_ptr<Command> make_ugw_sim();
std::unique_ptr<Command> make_echoloc();
std::unique_ptr<Command> make_map();

// "200x150" -> (200, 150). Throws ConfigError.
std::pair<int, int> parse_grid_size(const std::string& text);
// Comma-separated numbers; empty text gives an empty list. Throws ConfigError.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace revert::cli
