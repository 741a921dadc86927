#ifndef PDEIMG_CONFIG_HPP
#define PDEIMG_CONFIG_HPP

#include "errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pdeimg
{

/// Flat `key=value` settings. Lines starting with '#' are comments; later
/// assignments override earlier ones.
class KeyValues
{
public:
  static KeyValues parse(std::string_view text)
  {
    KeyValues kv;
    std::istringstream in{std::string(text)};
    int lineno = 0;
    for (std::string line; std::getline(in, line);)
    {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t.front() == '#')
        continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
      const std::string key = trim(t.substr(0, eq));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      kv.set(key, trim(t.substr(eq + 1)));
    }
    return kv;
  }

  static KeyValues load(const std::filesystem::path& path)
  {
    std::ifstream in(path);
    if (!in)
      throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  void merge(const KeyValues& other)
  {
    for (const auto& [k, v] : other.entries_)
      entries_[k] = v;
  }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::optional<std::string> find(const std::string& key) const
  {
    const auto it = entries_.find(key);
    if (it == entries_.end())
      return std::nullopt;
    return it->second;
  }

  std::string get(const std::string& key, const std::string& fallback) const
  {
    return find(key).value_or(fallback);
  }

  double get_double(const std::string& key, double fallback) const
  {
    const auto v = find(key);
    return v ? to_double(key, *v) : fallback;
  }

  std::optional<double> get_optional_double(const std::string& key) const
  {
    const auto v = find(key);
    if (!v)
      return std::nullopt;
    return to_double(key, *v);
  }

  long get_long(const std::string& key, long fallback) const
  {
    const auto v = find(key);
    if (!v)
      return fallback;
    long out = 0;
    const auto* end = v->data() + v->size();
    const auto [p, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || p != end)
      throw ConfigError("key '" + key + "': expected an integer, got '" + *v + "'");
    return out;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const
  {
    const auto v = find(key);
    if (!v)
      return fallback;
    std::uint64_t out = 0;
    const auto* end = v->data() + v->size();
    const auto [p, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || p != end)
      throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + *v + "'");
    return out;
  }

  bool get_bool(const std::string& key, bool fallback) const
  {
    const auto v = find(key);
    if (!v)
      return fallback;
    if (*v == "1" || *v == "true" || *v == "yes" || *v == "on")
      return true;
    if (*v == "0" || *v == "false" || *v == "no" || *v == "off")
      return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
  }

  /// Comma-separated list; an empty value gives an empty list.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const
  {
    const auto v = find(key);
    if (!v)
      return fallback;
    std::vector<std::string> out;
    std::istringstream in(*v);
    for (std::string item; std::getline(in, item, ',');)
    {
      item = trim(item);
      if (!item.empty())
        out.push_back(item);
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const
  {
    if (!has(key))
      return fallback;
    std::vector<double> out;
    for (const auto& s : get_list(key, {}))
      out.push_back(to_double(key, s));
    return out;
  }

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

private:
  static std::string trim(const std::string& s)
  {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
      return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& s)
  {
    try
    {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used != s.size())
        throw std::invalid_argument(s);
      return d;
    }
    catch (const std::exception&)
    {
      throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
    }
  }

  std::map<std::string, std::string> entries_;
};

} // namespace pdeimg

#endif
