#pragma once

// Bilinear (Q1) finite elements on uniform rectangular meshes for
// -div(A grad u) = f with homogeneous Dirichlet data, and for the periodic
// mean-zero cell problem. Sparse CSR storage and Jacobi-preconditioned CG.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "homoglab/fields.hpp"

namespace homoglab::fem2d {

/// Symmetric 2x2 coefficient [[a11, a12], [a12, a22]].
struct SymTensor2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  static constexpr SymTensor2 isotropic(double a) noexcept { return {a, 0.0, a}; }
  std::array<double, 2> apply(const std::array<double, 2>& v) const noexcept {
    return {a11 * v[0] + a12 * v[1], a12 * v[0] + a22 * v[1]};
  }
  /// Smallest eigenvalue; the tensor is positive definite iff this is > 0.
  double min_eigenvalue() const noexcept;
  friend bool operator==(const SymTensor2&, const SymTensor2&) = default;
};

/// Uniform nx x ny element mesh of [x0, x0 + lx] x [y0, y0 + ly].
/// Node (i, j) has index i + j (nx + 1); element (i, j) has index i + j nx.
class StructuredMesh {
 public:
  /// Throws ValidationError unless nx, ny >= 2 and both lengths are positive.
  StructuredMesh(int nx, int ny, double x0 = 0.0, double y0 = 0.0, double lx = 1.0, double ly = 1.0);
  static StructuredMesh unit_square(int n) { return {n, n}; }

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double hx() const noexcept { return lx_ / nx_; }
  double hy() const noexcept { return ly_ / ny_; }
  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }

  std::size_t node_count() const noexcept { return static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(ny_ + 1); }
  std::size_t element_count() const noexcept { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }
  std::size_t node(int i, int j) const noexcept { return static_cast<std::size_t>(i + j * (nx_ + 1)); }
  std::size_t element(int i, int j) const noexcept { return static_cast<std::size_t>(i + j * nx_); }
  double node_x(int i) const noexcept { return x0_ + i * hx(); }
  double node_y(int j) const noexcept { return y0_ + j * hy(); }
  std::array<double, 2> centroid(int i, int j) const noexcept {
    return {x0_ + (i + 0.5) * hx(), y0_ + (j + 0.5) * hy()};
  }
  /// Nodes (i, j), (i+1, j), (i+1, j+1), (i, j+1) of element (i, j).
  std::array<std::size_t, 4> element_nodes(int i, int j) const noexcept;

 private:
  int nx_;
  int ny_;
  double x0_;
  double y0_;
  double lx_;
  double ly_;
};

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

class CsrMatrix {
 public:
  CsrMatrix() = default;
  /// Sums duplicate entries in insertion order, so identical inputs give
  /// bit-identical matrices.
  static CsrMatrix from_triplets(std::size_t n, std::vector<Triplet> entries);

  std::size_t size() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }
  const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> diagonal() const;
  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  /// max |a_ij - a_ji| over stored entries.
  double max_asymmetry() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

/// Local node order (0,0), (1,0), (1,1), (0,1).
using ElementMatrix = std::array<std::array<double, 4>, 4>;

/// Exact integral of a grad(phi_i) . grad(phi_j) over an hx x hy element.
ElementMatrix element_stiffness_q1(double a_elem, double hx, double hy);
/// Same for a constant symmetric tensor, by 2x2 Gauss (exact for Q1).
ElementMatrix element_stiffness_q1(const SymTensor2& a_elem, double hx, double hy);

struct LinearSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
};

using Source2D = std::function<double(double, double)>;

/// f(x) = C / (2 pi L) exp(-((x1 - 1/2)^2 + (x2 - 1/2)^2) / (2 L)).
Source2D gaussian_source(double amplitude, double width);

/// Interior unknown index of node (i, j), 1 <= i < nx, 1 <= j < ny.
inline std::size_t interior_index(const StructuredMesh& m, int i, int j) noexcept {
  return static_cast<std::size_t>((i - 1) + (j - 1) * (m.nx() - 1));
}

/// System on the interior nodes; load by 2x2 Gauss per element. One
/// coefficient per element. Throws ValidationError for a coefficient that is
/// not positive definite or a size mismatch.
LinearSystem assemble_dirichlet(const StructuredMesh& mesh, std::span<const SymTensor2> coeff_per_element,
                                const Source2D& f);
LinearSystem assemble_dirichlet(const StructuredMesh& mesh, std::span<const double> coeff_per_element,
                                const Source2D& f);

struct CgResult {
  std::vector<double> x;
  long iterations = 0;
  double residual = 0.0;  // ||b - A x|| / ||b||, recomputed at exit
};

/// 100 sqrt(n), rounded up.
long default_max_iterations(std::size_t n) noexcept;

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
/// Throws NotConvergedError when the relative residual is still above tol
/// after max_iter iterations (max_iter <= 0 selects the default).
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol = 1e-10, long max_iter = 0);

struct CgOptions {
  double tol = 1e-10;
  long max_iter = 0;
};

struct FemSolution {
  StructuredMesh mesh;
  std::vector<double> u;  // all nodes, boundary included
  std::vector<SymTensor2> coefficient;
  std::vector<std::array<double, 2>> gradient;  // per element, at the centroid
  std::vector<std::array<double, 2>> flux;      // A grad u at the centroid
  long iterations = 0;
  double residual = 0.0;
};

FemSolution solve_dirichlet(const StructuredMesh& mesh, std::vector<SymTensor2> coeff_per_element, const Source2D& f,
                            CgOptions opts = {});

/// Coefficient sampled at element centroids of x / eps.
std::vector<SymTensor2> sample_coefficients(const StructuredMesh& mesh, const fields::Checkerboard2D& realization,
                                            fields::ScaleParameter eps);

/// True when every scaled tile boundary is a mesh line.
bool mesh_aligned(const StructuredMesh& mesh, const fields::Checkerboard2D& realization, fields::ScaleParameter eps);

/// Full pipeline on the scaled realization. Throws ValidationError when the
/// mesh does not align with the scaled tiles.
FemSolution solve_dirichlet(const StructuredMesh& mesh, const fields::Checkerboard2D& realization,
                            fields::ScaleParameter eps, const Source2D& f, CgOptions opts = {});

/// L2 norm of the bilinear interpolant of nodal values (2x2 Gauss per element).
double l2_norm(const StructuredMesh& mesh, std::span<const double> nodal);
double l2_distance(const StructuredMesh& mesh, std::span<const double> a, std::span<const double> b);

/// sum_e int_e A grad u . grad phi_node, by 2x2 Gauss.
double flux_against_hat(const FemSolution& sol, int i, int j);
/// int f phi_node, by 2x2 Gauss.
double load_against_hat(const StructuredMesh& mesh, const Source2D& f, int i, int j);

/// Cell problem on the torus [0, L)^2 made of unit tiles with
/// elements_per_tile^2 elements each: find periodic chi with
/// int A (grad chi + xi) . grad phi = 0 for all periodic phi.
struct PeriodicCellProblem {
  int tiles = 0;
  int elements_per_tile = 4;
  std::vector<SymTensor2> coefficient;  // per element, index i + j n
  std::array<double, 2> xi{1.0, 0.0};

  int n() const noexcept { return tiles * elements_per_tile; }
  double h() const noexcept { return 1.0 / elements_per_tile; }
  std::size_t periodic_node(int i, int j) const noexcept;
  /// Throws ValidationError for tiles < 2, a coefficient size mismatch or a
  /// coefficient that is not positive definite.
  void validate() const;
};

/// System over periodic nodes with node 0 pinned to zero and removed:
/// unknown k corresponds to periodic node k + 1.
LinearSystem assemble_periodic_cell(const PeriodicCellProblem& problem);

struct CellSolution {
  std::vector<double> chi;  // n * n periodic nodes, mean zero
  long iterations = 0;
  double residual = 0.0;
};

CellSolution solve_periodic_cell(const PeriodicCellProblem& problem, CgOptions opts = {});

/// Element gradients of the bilinear field chi at 2x2 Gauss points, in the
/// order (q0, q1, q2, q3) of element e.
std::array<std::array<double, 2>, 4> periodic_element_gradients(const PeriodicCellProblem& problem,
                                                                std::span<const double> chi, int i, int j);

}  // namespace homoglab::fem2d
