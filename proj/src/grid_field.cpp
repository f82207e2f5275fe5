#include "fracheat/grid_field.h"
#include "fracheat/errors.h"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace fracheat {

  using nlohmann::json;

  std::size_t GridField::spatial_count() const
  {
    std::size_t c = 1;
    for (const auto& a : axes)
      c *= static_cast<std::size_t>(a.steps);
    return c;
  }

  std::size_t GridField::index(std::span<const int> ix, int k) const
  {
    std::size_t flat = static_cast<std::size_t>(k);
    for (int d = n() - 1; d >= 0; --d)
      flat = flat * axes[d].steps + ix[d];
    return flat;
  }

  void GridField::unravel(std::size_t flat, std::vector<int>& ix, int& k) const
  {
    ix.resize(n());
    for (int d = 0; d < n(); ++d) {
      ix[d] = static_cast<int>(flat % axes[d].steps);
      flat /= axes[d].steps;
    }
    k = static_cast<int>(flat);
  }

  void GridField::coords(std::size_t flat, std::vector<double>& x, double& t) const
  {
    std::vector<int> ix;
    int k;
    unravel(flat, ix, k);
    x.resize(n());
    for (int d = 0; d < n(); ++d)
      x[d] = axes[d].node(ix[d]);
    t = time_axis.node(k);
  }

  namespace {

    // cell index and weight along one axis; false when outside
    bool locate(const Axis& a, double v, int& i0, double& w)
    {
      if (a.steps == 1) {
        i0 = 0;
        w = 0.0;
        return v == a.min;
      }
      const double lo = std::min(a.min, a.max), hi = std::max(a.min, a.max);
      if (v < lo || v > hi)
        return false;
      double f = (v - a.min) / (a.max - a.min) * (a.steps - 1);
      i0 = std::clamp(static_cast<int>(std::floor(f)), 0, a.steps - 2);
      w = f - i0;
      return true;
    }

  }

  double GridField::interpolate(std::span<const double> x, double t, bool* inside) const
  {
    const int nd = n();
    std::vector<int> i0(nd + 1);
    std::vector<double> w(nd + 1);
    bool in = true;
    for (int d = 0; d < nd && in; ++d)
      in = locate(axes[d], x[d], i0[d], w[d]);
    if (in)
      in = locate(time_axis, t, i0[nd], w[nd]);
    if (inside)
      *inside = in;
    if (!in)
      return 0.0;
    double acc = 0.0;
    std::vector<int> ix(nd);
    for (unsigned corner = 0; corner < (1u << (nd + 1)); ++corner) {
      double wt = 1.0;
      for (int d = 0; d <= nd; ++d) {
        bool up = (corner >> d) & 1u;
        double wd = up ? w[d] : 1.0 - w[d];
        if (wd == 0.0) {
          wt = 0.0;
          break;
        }
        wt *= wd;
      }
      if (wt == 0.0)
        continue;
      for (int d = 0; d < nd; ++d)
        ix[d] = i0[d] + ((corner >> d) & 1u);
      int k = i0[nd] + ((corner >> nd) & 1u);
      acc += wt * values[index(ix, k)];
    }
    return acc;
  }

  void GridField::validate() const
  {
    if (axes.empty())
      throw ArgumentError("grid '" + name + "': no spatial axes");
    for (const auto& a : axes)
      if (a.steps < 1 || !std::isfinite(a.min) || !std::isfinite(a.max))
        throw ArgumentError("grid '" + name + "': bad axis");
    if (time_axis.steps < 1)
      throw ArgumentError("grid '" + name + "': bad time axis");
    if (values.size() != expected_size())
      throw ArgumentError("grid '" + name + "': " + std::to_string(values.size()) + " values, expected "
                          + std::to_string(expected_size()));
    for (double v : values)
      if (!std::isfinite(v))
        throw ArgumentError("grid '" + name + "': non-finite value");
  }

  GridField GridField::like(const GridField& tmpl, std::string name)
  {
    GridField g = make(std::move(name), tmpl.axes, tmpl.time_axis);
    return g;
  }

  GridField GridField::make(std::string name, std::vector<Axis> axes, Axis time_axis)
  {
    GridField g;
    g.name = std::move(name);
    g.axes = std::move(axes);
    g.time_axis = time_axis;
    g.values.assign(g.expected_size(), 0.0);
    return g;
  }

  std::string csv_path_for(const std::string& manifest_path)
  {
    auto dot = manifest_path.rfind('.');
    auto slash = manifest_path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
      return manifest_path + ".csv";
    return manifest_path.substr(0, dot) + ".csv";
  }

  namespace {

    json axis_json(const Axis& a) { return json{{"min", a.min}, {"max", a.max}, {"steps", a.steps}}; }

    Axis axis_from(const json& j, const std::string& where)
    {
      if (!j.is_object() || j.size() != 3 || !j.contains("min") || !j.contains("max") || !j.contains("steps"))
        throw IoError(where + ": axis needs exactly {min, max, steps}");
      Axis a;
      a.min = j.at("min").get<double>();
      a.max = j.at("max").get<double>();
      a.steps = j.at("steps").get<int>();
      if (a.steps < 1)
        throw IoError(where + ": steps must be >= 1");
      return a;
    }

  }

  void save_grid(const GridField& g, const std::string& manifest_path)
  {
    g.validate();
    json m;
    m["name"] = g.name;
    m["n"] = g.n();
    json axes = json::array();
    for (const auto& a : g.axes)
      axes.push_back(axis_json(a));
    m["axes"] = axes;
    m["time_axis"] = axis_json(g.time_axis);
    m["order"] = "row-major-x1-fastest";
    {
      std::ofstream f(manifest_path);
      if (!f)
        throw IoError("cannot write " + manifest_path);
      f << m.dump(2) << "\n";
    }
    const std::string csv = csv_path_for(manifest_path);
    std::FILE* f = std::fopen(csv.c_str(), "w");
    if (!f)
      throw IoError("cannot write " + csv);
    for (double v : g.values)
      std::fprintf(f, "%.17g\n", v);
    std::fclose(f);
  }

  GridField load_grid(const std::string& manifest_path)
  {
    std::ifstream in(manifest_path);
    if (!in)
      throw IoError("cannot read " + manifest_path);
    json m;
    try {
      in >> m;
    } catch (const std::exception& e) {
      throw IoError(manifest_path + ": malformed manifest: " + e.what());
    }
    for (auto it = m.begin(); it != m.end(); ++it)
      if (it.key() != "name" && it.key() != "n" && it.key() != "axes" && it.key() != "time_axis"
          && it.key() != "order")
        throw IoError(manifest_path + ": unknown manifest key '" + it.key() + "'");
    for (const char* k : {"name", "n", "axes", "time_axis", "order"})
      if (!m.contains(k))
        throw IoError(manifest_path + ": missing manifest key '" + std::string(k) + "'");
    if (m.at("order") != "row-major-x1-fastest")
      throw IoError(manifest_path + ": unsupported order");
    GridField g;
    try {
      g.name = m.at("name").get<std::string>();
      int n = m.at("n").get<int>();
      if (!m.at("axes").is_array() || static_cast<int>(m.at("axes").size()) != n || n < 1)
        throw IoError(manifest_path + ": axes length must equal n >= 1");
      for (const auto& a : m.at("axes"))
        g.axes.push_back(axis_from(a, manifest_path));
      g.time_axis = axis_from(m.at("time_axis"), manifest_path);
    } catch (const json::exception& e) {
      throw IoError(manifest_path + ": " + e.what());
    }
    const std::string csv = csv_path_for(manifest_path);
    std::ifstream vin(csv);
    if (!vin)
      throw IoError("cannot read " + csv);
    std::string line;
    while (std::getline(vin, line)) {
      if (line.empty())
        continue;
      char* end = nullptr;
      double v = std::strtod(line.c_str(), &end);
      if (end == line.c_str() || *end != '\0')
        throw IoError(csv + ": bad value '" + line + "'");
      g.values.push_back(v);
    }
    if (g.values.size() != g.expected_size())
      throw IoError(csv + ": " + std::to_string(g.values.size()) + " values, manifest expects "
                    + std::to_string(g.expected_size()));
    g.validate();
    return g;
  }

  FieldHandle grid_as_field(std::shared_ptr<const GridField> g, Growth growth)
  {
    FieldHandle u;
    u.n = g->n();
    u.eval = [g](std::span<const double> x, double t) { return g->interpolate(x, t); };
    u.growth = growth;
    u.name = g->name;
    u.grid_source = g;
    // zero before the first time node
    u.time_floor = std::min(g->time_axis.min, g->time_axis.max);
    return u;
  }

  void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body)
  {
    threads = std::max(1, threads);
    if (threads == 1 || count < 2) {
      for (std::size_t i = 0; i < count; ++i)
        body(i);
      return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(threads);
    const std::size_t block = (count + threads - 1) / threads;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w * block; i < std::min(count, (w + 1) * block); ++i)
            body(i);
        } catch (...) {
          errs[w] = std::current_exception();
        }
      });
    for (auto& th : pool)
      th.join();
    for (auto& e : errs)
      if (e)
        std::rethrow_exception(e);
  }

  void sample_into(GridField& out, const FieldHandle& u, int threads)
  {
    if (u.n != out.n())
      throw ArgumentError("sample_into: dimension mismatch");
    out.values.assign(out.expected_size(), 0.0);
    if (!u.concurrent_safe)
      threads = 1;
    parallel_for(out.values.size(), threads, [&](std::size_t i) {
      std::vector<double> x;
      double t;
      out.coords(i, x, t);
      out.values[i] = u.eval(x, t);
    });
  }

}
