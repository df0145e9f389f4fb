#ifndef PLCMAC_CONFIG_IO_HPP
#define PLCMAC_CONFIG_IO_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "plcmac/config.hpp"

namespace plcmac {

/// Parses a JSON config document:
///   { "m": 4, "cw": [8,16,32,64], "dc": [0,1,"inf",15],
///     "timing": { "slot_sigma": 35.84, ... } }
/// "m" is optional and, when present, must match the list lengths.
/// Timing fields not given keep their standard defaults.
inline ProtocolConfig parse_config_json(const nlohmann::json& j,
                                        TimingParams* timing = nullptr) {
    ProtocolConfig cfg;
    if (!j.contains("cw") || !j.contains("dc"))
        throw ConfigError("config file needs 'cw' and 'dc' lists");
    for (const auto& v : j.at("cw")) cfg.cw.push_back(v.get<int>());
    for (const auto& v : j.at("dc")) {
        if (v.is_string()) {
            if (v.get<std::string>() != "inf")
                throw ConfigError("dc entries must be integers or \"inf\"");
            cfg.dc.push_back(kInfiniteDeferral);
        } else {
            cfg.dc.push_back(v.get<int>());
        }
    }
    if (j.contains("m") && j.at("m").get<int>() != cfg.stages())
        throw ConfigError("'m' does not match cw/dc lengths");
    cfg.validate();
    if (timing && j.contains("timing")) {
        const auto& t = j.at("timing");
        auto get = [&](const char* key, double& field) {
            if (t.contains(key)) field = t.at(key).get<double>();
        };
        get("slot_sigma", timing->slot_sigma);
        get("prs", timing->prs);
        get("cifs", timing->cifs);
        get("rifs", timing->rifs);
        get("preamble", timing->preamble);
        get("ack", timing->ack);
        get("frame_d", timing->frame_d);
        get("eifs", timing->eifs);
    }
    return cfg;
}

inline ProtocolConfig load_config_file(const std::string& path,
                                       TimingParams* timing = nullptr) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return parse_config_json(j, timing);
}

}  // namespace plcmac

#endif
