#pragma once

// strict reading of config objects: every key must be consumed, errors carry the key path

#include "fracheat/errors.h"

#include "json.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace fracheat::detail {

  class ObjReader {
  public:
    ObjReader(const nlohmann::json& j, std::string path) : m_j(j), m_path(std::move(path))
    {
      if (!m_j.is_object())
        throw ConfigError(m_path + ": expected an object");
    }

    const std::string& path() const { return m_path; }
    std::string sub(const std::string& key) const { return m_path + "." + key; }
    bool has(const std::string& key) const { return m_j.contains(key); }

    const nlohmann::json& raw(const std::string& key)
    {
      if (!m_j.contains(key))
        throw ConfigError(sub(key) + ": required key missing");
      m_used.insert(key);
      return m_j.at(key);
    }

    double num(const std::string& key)
    {
      const auto& v = raw(key);
      if (!v.is_number())
        throw ConfigError(sub(key) + ": expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d))
        throw ConfigError(sub(key) + ": must be finite");
      return d;
    }
    double num(const std::string& key, double dflt) { return has(key) ? num(key) : dflt; }

    double num_in(const std::string& key, double dflt, double lo, double hi, bool open_lo, bool open_hi)
    {
      const double v = num(key, dflt);
      const bool ok = (open_lo ? v > lo : v >= lo) && (open_hi ? v < hi : v <= hi);
      if (!ok) {
        char buf[160];
        std::snprintf(buf, sizeof buf, ": %g outside %c%g, %g%c", v, open_lo ? '(' : '[', lo, hi, open_hi ? ')' : ']');
        throw ConfigError(sub(key) + buf);
      }
      return v;
    }

    long long integer(const std::string& key)
    {
      const auto& v = raw(key);
      if (!v.is_number_integer())
        throw ConfigError(sub(key) + ": expected an integer");
      return v.get<long long>();
    }
    long long integer(const std::string& key, long long dflt) { return has(key) ? integer(key) : dflt; }
    long long int_min(const std::string& key, long long dflt, long long lo)
    {
      const long long v = integer(key, dflt);
      if (v < lo)
        throw ConfigError(sub(key) + ": must be >= " + std::to_string(lo));
      return v;
    }

    bool boolean(const std::string& key, bool dflt)
    {
      if (!has(key))
        return dflt;
      const auto& v = raw(key);
      if (!v.is_boolean())
        throw ConfigError(sub(key) + ": expected true or false");
      return v.get<bool>();
    }

    std::string str(const std::string& key)
    {
      const auto& v = raw(key);
      if (!v.is_string())
        throw ConfigError(sub(key) + ": expected a string");
      return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& dflt) { return has(key) ? str(key) : dflt; }

    std::vector<double> vec(const std::string& key, std::size_t len)
    {
      const auto& v = raw(key);
      if (!v.is_array())
        throw ConfigError(sub(key) + ": expected an array of numbers");
      std::vector<double> out;
      for (const auto& e : v) {
        if (!e.is_number())
          throw ConfigError(sub(key) + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
      if (len && out.size() != len)
        throw ConfigError(sub(key) + ": expected " + std::to_string(len) + " entries, got " + std::to_string(out.size()));
      return out;
    }
    std::vector<double> vec(const std::string& key, std::size_t len, std::vector<double> dflt)
    {
      return has(key) ? vec(key, len) : dflt;
    }

    // scalar accepted as a 1-vector
    std::vector<double> vec_or_scalar(const std::string& key, std::size_t len, std::vector<double> dflt)
    {
      if (has(key) && m_j.at(key).is_number()) {
        std::vector<double> v(len ? len : 1, num(key));
        if (len > 1)
          throw ConfigError(sub(key) + ": expected " + std::to_string(len) + " entries");
        return v;
      }
      return vec(key, len, std::move(dflt));
    }

    void finish() const
    {
      for (auto it = m_j.begin(); it != m_j.end(); ++it)
        if (!m_used.count(it.key()))
          throw ConfigError(sub(it.key()) + ": unknown key");
    }

  private:
    const nlohmann::json& m_j;
    std::string m_path;
    std::set<std::string> m_used;
  };

}
