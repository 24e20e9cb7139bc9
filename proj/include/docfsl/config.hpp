#pragma once

#include <map>
#include <optional>
#include <string>

#include "docfsl/training.hpp"

namespace docfsl {

// Minimal TOML-style config: [section] headers, key = value lines, values are
// strings ("..."), integers, floats, or booleans; '#' starts a comment.
// Keys are addressed as "section.key".
class ConfigFile {
  public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    std::optional<std::string> raw(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& def) const;
    int64_t get_int(const std::string& key, int64_t def) const;
    double get_double(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

// Fills a TrainConfig from the file's [fsl], [training], [backbone],
// [recurrent] and [patching] sections; unset keys keep their defaults.
TrainConfig train_config_from_file(const ConfigFile& file);

}  // namespace docfsl
