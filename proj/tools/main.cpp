#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace revert::cli;
    CLI::App app{"Distance fields from noisy point clouds by reverting GP latent fields"};
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Command>> commands;
    commands.push_back(make_bench_distance());
    commands.push_back(make_calibrate_noise());
    commands.push_back(make_field_grid());
    commands.push_back(make_ugw_sim());
    commands.push_back(make_echoloc());
    commands.push_back(make_map());

    std::vector<Settings> settings(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i]->name(), commands[i]->description());
        commands[i]->declare(settings[i]);
        settings[i].bind(*sub);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        try {
            settings[i].resolve();
            return commands[i]->run(settings[i]);
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n\n" << subs[i]->help();
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}
