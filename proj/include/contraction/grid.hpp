#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "contraction/linalg.hpp"

namespace contraction {

// Faces of a rectangular domain. Axis 0 is x, axis 1 is y.
enum class Face { XLow, XHigh, YLow, YHigh };

inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
// Sign of the outward normal along the face's axis.
inline double face_normal_sign(Face f) { return static_cast<int>(f) % 2 == 0 ? -1.0 : 1.0; }
std::string_view face_name(Face f);

// Uniform rectangular grid in one or two dimensions. Node index runs fastest
// along x.
class Grid {
 public:
  Grid(std::vector<double> lengths, std::vector<int> nodes);

  static Grid line(double length, int nodes) { return Grid({length}, {nodes}); }
  static Grid rect(double lx, double ly, int nx, int ny) { return Grid({lx, ly}, {nx, ny}); }

  [[nodiscard]] int dims() const { return static_cast<int>(lengths_.size()); }
  [[nodiscard]] double length(int axis) const { return lengths_[axis]; }
  [[nodiscard]] int nodes(int axis) const { return nodes_[axis]; }
  [[nodiscard]] double spacing(int axis) const { return lengths_[axis] / (nodes_[axis] - 1); }
  [[nodiscard]] double min_spacing() const;
  [[nodiscard]] int size() const { return size_; }

  [[nodiscard]] int index(int i, int j = 0) const { return i + nodes_[0] * j; }
  [[nodiscard]] std::array<int, 2> position(int node) const;
  // Node along `axis` displaced by `offset` steps, or -1 when that leaves the grid.
  [[nodiscard]] int neighbor(int node, int axis, int offset) const;
  [[nodiscard]] Vec coords(int node) const;

  [[nodiscard]] std::vector<Face> faces() const;
  [[nodiscard]] bool on_face(int node, Face f) const;

  // Trapezoidal quadrature weights (product rule in 2-D).
  [[nodiscard]] Vec quadrature_weights() const;

  // Width of the control volume of `node` along `axis` (half cell on edges).
  [[nodiscard]] double cell_width(int node, int axis) const;

 private:
  std::vector<double> lengths_;
  std::vector<int> nodes_;
  int size_ = 0;
};

// Node values of an n-component state: column k holds the state at node k.
struct Field {
  Mat values;

  Field() = default;
  explicit Field(Mat v) : values(std::move(v)) {}
  Field(int n_state, int n_nodes) : values(Mat::Zero(n_state, n_nodes)) {}

  [[nodiscard]] int n_state() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] int n_nodes() const { return static_cast<int>(values.cols()); }

  double& operator()(int component, int node) { return values(component, node); }
  double operator()(int component, int node) const { return values(component, node); }

  static Field sample(const Grid& grid, int n_state, const std::function<Vec(const Vec&)>& fn);
};

void require_shape(const Field& field, const Grid& grid, int n_state);

// Trapezoidal approximation of the integral of δᵀ M δ over the grid (M = I when empty).
double integrate_squared(const Field& diff, const Grid& grid, const Mat& metric = Mat());

// One row per node: coordinates then component values, with a header row.
void write_field_csv(std::ostream& out, const Field& field, const Grid& grid,
                     const std::vector<std::string>& component_names = {});
Field read_field_csv(std::istream& in, const Grid& grid, int n_state);

}  // namespace contraction
