// Minimal "key = value" text format with '#' comments.

#ifndef NV0_KVFILE_HPP
#define NV0_KVFILE_HPP

#include "nv0/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nv0 {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KeyValue {
    std::string key;
    std::string value;
    int line = 0;
};

inline std::vector<KeyValue> parse_kv(std::string_view content, const std::string& origin = "<string>") {
    std::vector<KeyValue> out;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) {
            if (nl == content.size()) break;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            std::ostringstream os;
            os << origin << ":" << lineno << ": expected 'key = value'";
            throw ConfigError(os.str());
        }
        KeyValue kv{std::string(text::trim(line.substr(0, eq))),
                    std::string(text::trim(line.substr(eq + 1))), lineno};
        if (kv.key.empty()) {
            std::ostringstream os;
            os << origin << ":" << lineno << ": empty key";
            throw ConfigError(os.str());
        }
        out.push_back(std::move(kv));
        if (nl == content.size()) break;
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace nv0

#endif  // NV0_KVFILE_HPP
