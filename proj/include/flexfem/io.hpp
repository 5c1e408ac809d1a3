#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flexfem/common.hpp"
#include "flexfem/fem.hpp"
#include "flexfem/mesh.hpp"

namespace flexfem::io {

// ---------------------------------------------------------------------------
// CSV

/// Header row plus string cells. Numbers are converted on demand.
struct CsvTable {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(const std::string &name) const;
  std::vector<double> column(const std::string &name) const;
  /// Every cell as a number; throws naming the first non-numeric cell.
  std::vector<std::vector<double>> numeric() const;
  /// Appends numbers formatted with `precision` significant digits.
  void add_row(std::span<const double> values, int precision = 17);
};

/// Comma separated, optional double quotes ("" escapes a quote), LF or CRLF.
CsvTable csv_parse(std::string_view text);
std::string csv_format(const CsvTable &table);
CsvTable csv_read(const std::string &path);
void csv_write(const std::string &path, const CsvTable &table);

// ---------------------------------------------------------------------------
// Time series interpolation

enum class InterpMode {
  Linear,
  CubicSpline,
  SmoothingSpline,
  Trigonometric,
  DerivativeLinear,
  DerivativeSpline
};

std::string to_string(InterpMode m);
InterpMode interp_mode_from_string(const std::string &s);

/// Interpolant of samples (t_i, y_i). Outside [t_0, t_N] the non-periodic
/// modes evaluate at the nearest endpoint.
class TimeSeries {
 public:
  /// `smoothing` is the residual budget S of SmoothingSpline:
  /// sum (g(t_i) - y_i)^2 <= S with minimal curvature.
  TimeSeries(std::vector<double> times, std::vector<double> values,
             InterpMode mode = InterpMode::Linear, double smoothing = 0.0);

  double operator()(double t) const;
  InterpMode mode() const { return mode_; }
  const std::vector<double> &times() const { return t_; }
  const std::vector<double> &values() const { return y_; }
  /// Node values of the spline actually used (differs from the samples only
  /// for SmoothingSpline with S > 0).
  const std::vector<double> &node_values() const { return g_; }
  /// Second derivatives at the nodes (spline modes).
  const std::vector<double> &second_derivatives() const { return m_; }

 private:
  std::size_t interval(double t) const;
  double spline_value(double t, bool derivative) const;
  double trig_value(double t) const;

  std::vector<double> t_, y_;
  InterpMode mode_;
  std::vector<double> g_, m_;
  // Trigonometric: real DFT coefficients.
  std::vector<double> re_, im_;
};

// ---------------------------------------------------------------------------
// Checkpoints

/// Binary layout (little endian): "FXCP", u32 version, f64 time, u64 step,
/// f64 dt, u32 bdf_order, mesh (u32 dim, 3 f64 lower, 3 f64 upper,
/// 3 u32 subdivisions, u32 degree), u32 vector count, then per vector
/// u32 name length, name bytes, u64 length, f64 values.
struct Checkpoint {
  static constexpr std::uint32_t version = 1;

  double time = 0.0;
  std::uint64_t step = 0;
  double dt = 0.0;
  std::uint32_t bdf_order = 1;
  mesh::BoxDescriptor mesh;
  std::uint32_t degree = 1;
  std::vector<std::pair<std::string, DVector>> vectors;

  void add(const std::string &name, DVector v);
  bool has(const std::string &name) const;
  const DVector &vector(const std::string &name) const;
};

std::string checkpoint_serialize(const Checkpoint &cp);
Checkpoint checkpoint_deserialize(std::string_view bytes);
void checkpoint_save(const std::string &path, const Checkpoint &cp);
Checkpoint checkpoint_load(const std::string &path);

// ---------------------------------------------------------------------------
// Legacy VTK

struct VtkField {
  std::string name;
  const fem::FeSpace *space;
  std::span<const double> values;
};

/// ASCII unstructured grid on the node lattice of degree `lattice_degree`
/// (one VTK line/quad/hexahedron per lattice sub-cell). Fields of lower
/// degree are evaluated at the lattice points. Fields with `dim` components
/// (or 3) are written as VECTORS, scalar fields as SCALARS, others one
/// SCALARS array per component. The time is stored as FIELD data "TIME".
void vtk_write(const std::string &path, const mesh::Mesh &mesh, int lattice_degree,
               const std::vector<VtkField> &fields, double time);

struct GridArray {
  std::string name;
  int n_components = 1;
  std::vector<double> values;  // [point * n_components + c]
};

/// Values on a uniform lattice of points, x fastest.
struct GridData {
  int dim = 3;
  std::array<int, 3> dims{1, 1, 1};
  Point origin{};
  Point spacing{1, 1, 1};
  double time = 0.0;
  bool has_time = false;
  std::vector<GridArray> arrays;

  std::size_t n_points() const { return std::size_t(dims[0]) * dims[1] * dims[2]; }
  Point point(std::size_t index) const;
  const GridArray &array(const std::string &name) const;
};

/// Reads STRUCTURED_POINTS (point or cell data) or an UNSTRUCTURED_GRID whose
/// points form a uniform lattice, such as the files written by vtk_write.
GridData grid_read(const std::string &path);
GridData grid_parse(std::string_view text);

enum class GridEval { ClosestPoint, LinearInterp };

/// All components of `array` at `p`; LinearInterp is multilinear in the
/// containing lattice cell, both methods clamp to the lattice bounds.
std::vector<double> grid_eval(const GridData &data, const std::string &array, const Point &p,
                              GridEval method);

// ---------------------------------------------------------------------------
// Isocontours

/// Level set of a scalar field on the lattice of its space, by marching
/// triangles (2D, segments) or tetrahedra (3D, triangles).
struct Isosurface {
  double level = 0.0;
  std::vector<Point> points;
  std::vector<std::vector<std::size_t>> cells;  // 2 (segment) or 3 (triangle) points
};

Isosurface extract_isosurface(const fem::FeSpace &space, std::span<const double> values,
                              double level, int component = 0);

/// Legacy VTK POLYDATA with every surface; CELL_DATA "level" holds the value.
void vtk_write_isosurfaces(const std::string &path, const std::vector<Isosurface> &surfaces);

}  // namespace flexfem::io
