#include "archive.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "settings.hpp"

namespace revert::cli {

namespace {

std::string indexed(const char* stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03zu.csv", stem, i);
    return buf;
}

double parse_number(const std::string& text, const std::filesystem::path& file) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("malformed number '" + text + "' in " + file.string());
    }
}

}  // namespace

nlohmann::json ugw_config_json(const ugw::UgwConfig& c) {
    return {{"sample_rate", c.sample_rate},       {"duration", c.duration},
            {"center_freq", c.center_freq},       {"burst_cycles", c.burst_cycles},
            {"group_velocity", c.group_velocity}, {"dispersion", c.dispersion},
            {"snr_db", std::isfinite(c.snr_db) ? nlohmann::json(c.snr_db) : nlohmann::json("inf")}};
}

std::vector<std::filesystem::path> write_archive(const std::filesystem::path& dir,
                                                 const ugw::GridDataset& data) {
    std::filesystem::create_directories(dir);
    const auto& m = data.measurements;
    const ugw::UgwModel model(data.spec.ugw, data.scene.diameter());
    const double dt = 1.0 / data.spec.ugw.sample_rate;
    std::vector<std::filesystem::path> files = {dir / "archive.json"};
    nlohmann::json positions = nlohmann::json::array();
    nlohmann::json signal_files = nlohmann::json::array();
    nlohmann::json envelope_files = nlohmann::json::array();
    for (std::size_t i = 0; i < m.positions.size(); ++i) {
        positions.push_back({m.positions[i].x(), m.positions[i].y()});
        const auto sig = indexed("signal", i);
        const auto env = indexed("envelope", i);
        signal_files.push_back(sig);
        envelope_files.push_back(env);
        std::ofstream s(dir / sig, std::ios::binary);
        s << "t,z\n";
        for (std::size_t k = 0; k < m.signals[i].size(); ++k) {
            s << format_double(static_cast<double>(k) * dt) << ',' << format_double(m.signals[i][k]) << '\n';
        }
        std::ofstream e(dir / env, std::ios::binary);
        e << "d,e\n";
        for (std::size_t k = 0; k < m.envelopes[i].values.size(); ++k) {
            e << format_double(m.envelopes[i].distance(k)) << ',' << format_double(m.envelopes[i].values[k]) << '\n';
        }
        if (!s || !e) throw std::runtime_error("cannot write archive files in " + dir.string());
        files.push_back(dir / sig);
        files.push_back(dir / env);
    }
    nlohmann::json doc;
    doc["width"] = data.spec.width;
    doc["height"] = data.spec.height;
    doc["rows"] = data.spec.rows;
    doc["cols"] = data.spec.cols;
    doc["spacing"] = data.spec.spacing;
    doc["seed"] = data.spec.seed;
    doc["ugw"] = ugw_config_json(data.spec.ugw);
    doc["envelope_step"] = model.distance_step();
    doc["positions"] = positions;
    doc["signals"] = signal_files;
    doc["envelopes"] = envelope_files;
    write_json(dir / "archive.json", doc);
    return files;
}

Archive read_archive(const std::filesystem::path& dir) {
    std::ifstream in(dir / "archive.json");
    if (!in) throw std::runtime_error("no archive.json in " + dir.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
        Archive a;
        a.spec.width = doc.at("width").get<double>();
        a.spec.height = doc.at("height").get<double>();
        a.spec.rows = doc.at("rows").get<int>();
        a.spec.cols = doc.at("cols").get<int>();
        a.spec.spacing = doc.at("spacing").get<double>();
        a.spec.seed = doc.at("seed").get<std::uint64_t>();
        const auto& u = doc.at("ugw");
        a.spec.ugw.sample_rate = u.at("sample_rate").get<double>();
        a.spec.ugw.duration = u.at("duration").get<double>();
        a.spec.ugw.center_freq = u.at("center_freq").get<double>();
        a.spec.ugw.burst_cycles = u.at("burst_cycles").get<int>();
        a.spec.ugw.group_velocity = u.at("group_velocity").get<double>();
        a.spec.ugw.dispersion = u.at("dispersion").get<std::vector<double>>();
        a.spec.ugw.snr_db = u.at("snr_db").is_string() ? std::numeric_limits<double>::infinity()
                                                       : u.at("snr_db").get<double>();
        const double step = doc.at("envelope_step").get<double>();
        for (const auto& p : doc.at("positions")) a.positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        const auto names = doc.at("envelopes").get<std::vector<std::string>>();
        if (names.size() != a.positions.size()) throw std::runtime_error("archive position/envelope count mismatch");
        for (const auto& name : names) {
            const auto file = dir / name;
            std::ifstream ef(file);
            if (!ef) throw std::runtime_error("missing envelope file " + file.string());
            ugw::EnvelopeSignal e;
            e.step = step;
            std::string line;
            std::getline(ef, line);  // header
            while (std::getline(ef, line)) {
                if (line.empty()) continue;
                const auto comma = line.find(',');
                if (comma == std::string::npos) throw std::runtime_error("malformed line in " + file.string());
                e.values.push_back(parse_number(line.substr(comma + 1), file));
            }
            a.envelopes.push_back(std::move(e));
        }
        return a;
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error("malformed archive.json: " + std::string(ex.what()));
    }
}

}  // namespace revert::cli
