#pragma once

#include "fracheat/field.h"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fracheat {

  struct Axis {
    double min = 0.0, max = 1.0;
    int steps = 2;
    double node(int i) const { return steps == 1 ? min : min + (max - min) * i / (steps - 1); }
    double spacing() const { return steps > 1 ? (max - min) / (steps - 1) : 0.0; }
    bool operator==(const Axis&) const = default;
  };

  // Values on a rectilinear space-time grid, x1 fastest, t slowest.
  struct GridField {
    std::string name;
    std::vector<Axis> axes;   // spatial, length n
    Axis time_axis;
    std::vector<double> values;

    int n() const { return static_cast<int>(axes.size()); }
    std::size_t spatial_count() const;
    std::size_t expected_size() const { return spatial_count() * time_axis.steps; }
    std::size_t index(std::span<const int> ix, int k) const;
    void unravel(std::size_t flat, std::vector<int>& ix, int& k) const;
    void coords(std::size_t flat, std::vector<double>& x, double& t) const;
    double at(std::span<const int> ix, int k) const { return values[index(ix, k)]; }

    // multilinear interpolation; zero outside the grid box (inside set accordingly)
    double interpolate(std::span<const double> x, double t, bool* inside = nullptr) const;
    void validate() const;   // throws on size mismatch or non-finite values

    static GridField like(const GridField& tmpl, std::string name);
    static GridField make(std::string name, std::vector<Axis> axes, Axis time_axis);
  };

  // manifest JSON plus sibling CSV (same stem, .csv)
  void save_grid(const GridField& g, const std::string& manifest_path);
  GridField load_grid(const std::string& manifest_path);
  std::string csv_path_for(const std::string& manifest_path);

  // Lazy field view with zero extension outside the grid box.
  FieldHandle grid_as_field(std::shared_ptr<const GridField> g, Growth growth = Growth::bounded());

  // Sample u at every node; nodes are split over threads by contiguous index ranges.
  void sample_into(GridField& out, const FieldHandle& u, int threads = 1);

  // Run body(i) for i in [0, count) on up to `threads` threads, contiguous blocks.
  void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}
