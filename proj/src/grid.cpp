#include "contraction/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "contraction/error.hpp"

namespace contraction {

std::string_view face_name(Face f) {
  switch (f) {
    case Face::XLow: return "x_low";
    case Face::XHigh: return "x_high";
    case Face::YLow: return "y_low";
    case Face::YHigh: return "y_high";
  }
  return "?";
}

Grid::Grid(std::vector<double> lengths, std::vector<int> nodes)
    : lengths_(std::move(lengths)), nodes_(std::move(nodes)) {
  if (lengths_.empty() || lengths_.size() > 2 || lengths_.size() != nodes_.size())
    throw Error(ErrorCode::BadParams, "grid must be 1-D or 2-D with one node count per axis");
  size_ = 1;
  for (std::size_t a = 0; a < lengths_.size(); ++a) {
    if (!(lengths_[a] > 0.0)) throw Error(ErrorCode::BadParams, "grid lengths must be positive");
    if (nodes_[a] < 3) throw Error(ErrorCode::BadParams, "grid needs at least 3 nodes per axis");
    size_ *= nodes_[a];
  }
}

double Grid::min_spacing() const {
  double h = spacing(0);
  for (int a = 1; a < dims(); ++a) h = std::min(h, spacing(a));
  return h;
}

std::array<int, 2> Grid::position(int node) const {
  return {node % nodes_[0], node / nodes_[0]};
}

int Grid::neighbor(int node, int axis, int offset) const {
  auto pos = position(node);
  const int moved = pos[axis] + offset;
  if (moved < 0 || moved >= nodes_[axis]) return -1;
  pos[axis] = moved;
  return index(pos[0], pos[1]);
}

Vec Grid::coords(int node) const {
  const auto pos = position(node);
  Vec x(dims());
  for (int a = 0; a < dims(); ++a) x(a) = pos[a] * spacing(a);
  return x;
}

std::vector<Face> Grid::faces() const {
  if (dims() == 1) return {Face::XLow, Face::XHigh};
  return {Face::XLow, Face::XHigh, Face::YLow, Face::YHigh};
}

bool Grid::on_face(int node, Face f) const {
  const int axis = face_axis(f);
  if (axis >= dims()) return false;
  const auto pos = position(node);
  return face_normal_sign(f) < 0 ? pos[axis] == 0 : pos[axis] == nodes_[axis] - 1;
}

double Grid::cell_width(int node, int axis) const {
  const auto pos = position(node);
  const bool edge = pos[axis] == 0 || pos[axis] == nodes_[axis] - 1;
  return edge ? 0.5 * spacing(axis) : spacing(axis);
}

Vec Grid::quadrature_weights() const {
  Vec w(size_);
  for (int k = 0; k < size_; ++k) {
    double weight = 1.0;
    for (int a = 0; a < dims(); ++a) weight *= cell_width(k, a);
    w(k) = weight;
  }
  return w;
}

Field Field::sample(const Grid& grid, int n_state, const std::function<Vec(const Vec&)>& fn) {
  Field f(n_state, grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const Vec v = fn(grid.coords(k));
    if (v.size() != n_state) throw Error(ErrorCode::ShapeMismatch, "sample function returned wrong size");
    f.values.col(k) = v;
  }
  return f;
}

void require_shape(const Field& field, const Grid& grid, int n_state) {
  if (field.n_nodes() != grid.size() || field.n_state() != n_state) {
    std::ostringstream msg;
    msg << "field is " << field.n_state() << "x" << field.n_nodes() << ", expected " << n_state << "x"
        << grid.size();
    throw Error(ErrorCode::ShapeMismatch, msg.str());
  }
}

double integrate_squared(const Field& diff, const Grid& grid, const Mat& metric) {
  if (diff.n_nodes() != grid.size()) throw Error(ErrorCode::ShapeMismatch, "field does not match grid");
  const Vec w = grid.quadrature_weights();
  double total = 0.0;
  for (int k = 0; k < grid.size(); ++k) {
    const auto col = diff.values.col(k);
    const double q = metric.size() == 0 ? col.squaredNorm() : col.dot(metric * col);
    total += w(k) * q;
  }
  return total;
}

void write_field_csv(std::ostream& out, const Field& field, const Grid& grid,
                     const std::vector<std::string>& component_names) {
  static const char* axis_names[] = {"x", "y"};
  for (int a = 0; a < grid.dims(); ++a) out << (a ? "," : "") << axis_names[a];
  for (int i = 0; i < field.n_state(); ++i) {
    out << ',';
    if (i < static_cast<int>(component_names.size())) out << component_names[i];
    else out << "phi" << i;
  }
  out << '\n';
  char buf[64];
  for (int k = 0; k < grid.size(); ++k) {
    const Vec x = grid.coords(k);
    for (int a = 0; a < grid.dims(); ++a) {
      std::snprintf(buf, sizeof buf, "%.9g", x(a));
      out << (a ? "," : "") << buf;
    }
    for (int i = 0; i < field.n_state(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g", field(i, k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

Field read_field_csv(std::istream& in, const Grid& grid, int n_state) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty field CSV");
  Field f(n_state, grid.size());
  int k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (k >= grid.size()) throw Error(ErrorCode::ShapeMismatch, "field CSV has more rows than grid nodes");
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != grid.dims() + n_state)
      throw Error(ErrorCode::ShapeMismatch, "field CSV row has wrong column count");
    for (int i = 0; i < n_state; ++i) f(i, k) = row[grid.dims() + i];
    ++k;
  }
  if (k != grid.size()) throw Error(ErrorCode::ShapeMismatch, "field CSV has fewer rows than grid nodes");
  return f;
}

}  // namespace contraction
