#include "docfsl/config.hpp"

#include <fstream>
#include <sstream>

#include "docfsl/common.hpp"

namespace docfsl {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile cf;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw UsageError("config line " + std::to_string(lineno) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw UsageError("config line " + std::to_string(lineno) + ": empty key or value");
        }
        cf.values_[section.empty() ? key : section + "." + key] = value;
    }
    return cf;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

std::optional<std::string> ConfigFile::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& def) const {
    auto v = raw(key);
    if (!v) return def;
    std::string s = *v;
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

int64_t ConfigFile::get_int(const std::string& key, int64_t def) const {
    auto v = raw(key);
    if (!v) return def;
    try {
        size_t pos = 0;
        int64_t out = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': expected integer, got '" + *v + "'");
    }
}

double ConfigFile::get_double(const std::string& key, double def) const {
    auto v = raw(key);
    if (!v) return def;
    try {
        size_t pos = 0;
        double out = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': expected number, got '" + *v + "'");
    }
}

bool ConfigFile::get_bool(const std::string& key, bool def) const {
    auto v = raw(key);
    if (!v) return def;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw UsageError("config key '" + key + "': expected true/false, got '" + *v + "'");
}

TrainConfig train_config_from_file(const ConfigFile& f) {
    TrainConfig c;
    c.mode = fsl_mode_from_string(f.get_string("fsl.mode", to_string(c.mode)));
    c.k = static_cast<int>(f.get_int("fsl.k", c.k));
    c.q = static_cast<int>(f.get_int("fsl.q", c.q));
    c.head = head_kind_from_string(f.get_string("fsl.head", "prototype"));

    c.episodes = static_cast<int>(f.get_int("training.episodes", c.episodes));
    c.eval_every = static_cast<int>(f.get_int("training.eval_every", c.eval_every));
    c.eval_episodes = static_cast<int>(f.get_int("training.eval_episodes", c.eval_episodes));
    c.learning_rate = f.get_double("training.learning_rate", c.learning_rate);
    c.seed = static_cast<uint64_t>(f.get_int("training.seed", static_cast<int64_t>(c.seed)));

    c.backbone = backbone_kind_from_string(f.get_string("backbone.kind", to_string(c.backbone)));
    c.backbone_file = f.get_string("backbone.file", c.backbone_file);
    c.mock_feature_dim = static_cast<int>(f.get_int("backbone.mock_feature_dim",
                                                    c.mock_feature_dim));
    c.backbone_frozen = f.get_bool("backbone.frozen", c.backbone_frozen);

    c.ru_kind = ru_kind_from_string(f.get_string("recurrent.kind", to_string(c.ru_kind)));
    c.hidden_dim = static_cast<int>(f.get_int("recurrent.hidden_dim", c.hidden_dim));

    c.rescale = f.get_bool("patching.rescale", c.rescale);
    c.ref_height = static_cast<int>(f.get_int("patching.ref_height", c.ref_height));
    c.ref_width = static_cast<int>(f.get_int("patching.ref_width", c.ref_width));
    c.patch_size = static_cast<int>(f.get_int("patching.patch_size", c.patch_size));
    return c;
}

}  // namespace docfsl
