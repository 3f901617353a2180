#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace elslab::detail {

struct KeyParts {
    std::string name;
    std::map<std::string, std::string> params;
};

/// Parses catalog keys of the form "name" or "name:k1=v1,k2=v2".
/// Parameter values may themselves contain ':' (nested keys) but not ','.
inline KeyParts parse_key(const std::string& key) {
    KeyParts out;
    const auto colon = key.find(':');
    out.name = key.substr(0, colon);
    if (out.name.empty())
        throw std::invalid_argument("empty catalog key: '" + key + "'");
    if (colon == std::string::npos) return out;

    std::string rest = key.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        auto comma = rest.find(',', pos);
        if (comma == std::string::npos) comma = rest.size();
        const std::string item = rest.substr(pos, comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("malformed parameter '" + item +
                                        "' in catalog key '" + key + "'");
        out.params[item.substr(0, eq)] = item.substr(eq + 1);
        pos = comma + 1;
        if (comma == rest.size()) break;
    }
    return out;
}

inline double require_number(const KeyParts& parts, const std::string& name) {
    const auto it = parts.params.find(name);
    if (it == parts.params.end())
        throw std::invalid_argument("catalog key '" + parts.name +
                                    "' requires parameter '" + name + "'");
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("parameter '" + name + "' of '" +
                                    parts.name + "' is not a number: '" +
                                    it->second + "'");
    }
}

inline std::string require_string(const KeyParts& parts,
                                  const std::string& name) {
    const auto it = parts.params.find(name);
    if (it == parts.params.end())
        throw std::invalid_argument("catalog key '" + parts.name +
                                    "' requires parameter '" + name + "'");
    return it->second;
}

}  // namespace elslab::detail
