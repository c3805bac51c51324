#include "homoglab/fem2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "homoglab/errors.hpp"
#include "homoglab/quadrature.hpp"

namespace homoglab::fem2d {

namespace {

using Vec2 = std::array<double, 2>;

constexpr double kGaussLo = 0.5 - 0.5 * 0.57735026918962576451;
constexpr double kGaussHi = 0.5 + 0.5 * 0.57735026918962576451;
constexpr std::array<Vec2, 4> kGaussPoints{{{kGaussLo, kGaussLo}, {kGaussHi, kGaussLo}, {kGaussHi, kGaussHi},
                                            {kGaussLo, kGaussHi}}};

/// Reference-element values of the four bilinear basis functions.
std::array<double, 4> basis(double s, double t) noexcept {
  return {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
}

/// Physical gradients of the basis at reference point (s, t).
std::array<Vec2, 4> basis_gradients(double s, double t, double hx, double hy) noexcept {
  return {{{-(1 - t) / hx, -(1 - s) / hy}, {(1 - t) / hx, -s / hy}, {t / hx, s / hy}, {-t / hx, (1 - s) / hy}}};
}

void check_positive_definite(const SymTensor2& a, std::size_t element) {
  if (!(a.a11 > 0.0) || !(a.min_eigenvalue() > 0.0) || !std::isfinite(a.a11 + a.a12 + a.a22)) {
    std::ostringstream msg;
    msg << "coefficient on element " << element << " is not positive definite (" << a.a11 << ", " << a.a12 << ", "
        << a.a22 << ")";
    throw ValidationError(msg.str());
  }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double SymTensor2::min_eigenvalue() const noexcept {
  const double mean = 0.5 * (a11 + a22);
  const double diff = 0.5 * (a11 - a22);
  return mean - std::hypot(diff, a12);
}

StructuredMesh::StructuredMesh(int nx, int ny, double x0, double y0, double lx, double ly)
    : nx_(nx), ny_(ny), x0_(x0), y0_(y0), lx_(lx), ly_(ly) {
  if (nx < 2 || ny < 2) throw ValidationError("structured mesh needs at least 2 x 2 elements");
  if (!(lx > 0.0) || !(ly > 0.0)) throw ValidationError("structured mesh needs positive side lengths");
}

std::array<std::size_t, 4> StructuredMesh::element_nodes(int i, int j) const noexcept {
  return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::vector<Triplet> entries) {
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.n_ = n;
  m.row_offsets_.assign(n + 1, 0);
  m.columns_.reserve(entries.size() / 2);
  m.values_.reserve(entries.size() / 2);
  std::size_t k = 0;
  for (std::size_t row = 0; row < n; ++row) {
    while (k < entries.size() && entries[k].row == row) {
      const std::size_t col = entries[k].col;
      double v = 0.0;
      while (k < entries.size() && entries[k].row == row && entries[k].col == col) v += entries[k++].value;
      m.columns_.push_back(col);
      m.values_.push_back(v);
    }
    m.row_offsets_[row + 1] = m.columns_.size();
  }
  if (k != entries.size()) throw ValidationError("csr: triplet row index out of range");
  return m;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k] * x[columns_[k]];
    y[i] = s;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n_);
  multiply(x, y);
  return y;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - columns_.begin())];
}

double CsrMatrix::max_asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      worst = std::max(worst, std::abs(values_[k] - at(columns_[k], i)));
  return worst;
}

ElementMatrix element_stiffness_q1(double a_elem, double hx, double hy) {
  static constexpr double mx[4][4] = {{2, -2, -1, 1}, {-2, 2, 1, -1}, {-1, 1, 2, -2}, {1, -1, -2, 2}};
  static constexpr double my[4][4] = {{2, 1, -1, -2}, {1, 2, -2, -1}, {-1, -2, 2, 1}, {-2, -1, 1, 2}};
  const double cx = a_elem * hy / (6.0 * hx);
  const double cy = a_elem * hx / (6.0 * hy);
  ElementMatrix k{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) k[i][j] = cx * mx[i][j] + cy * my[i][j];
  return k;
}

ElementMatrix element_stiffness_q1(const SymTensor2& a, double hx, double hy) {
  ElementMatrix k{};
  const double w = 0.25 * hx * hy;
  for (const auto& q : kGaussPoints) {
    const auto g = basis_gradients(q[0], q[1], hx, hy);
    for (int i = 0; i < 4; ++i) {
      const auto ag = a.apply(g[i]);
      for (int j = i; j < 4; ++j) k[i][j] += w * (ag[0] * g[j][0] + ag[1] * g[j][1]);
    }
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) k[i][j] = k[j][i];
  return k;
}

namespace {

ElementMatrix stiffness_for(const SymTensor2& a, double hx, double hy) {
  if (a.a12 == 0.0 && a.a11 == a.a22) return element_stiffness_q1(a.a11, hx, hy);
  return element_stiffness_q1(a, hx, hy);
}

}  // namespace

Source2D gaussian_source(double amplitude, double width) {
  if (!(width > 0.0)) throw ValidationError("gaussian source width must be positive");
  return [amplitude, width](double x1, double x2) {
    const double r2 = (x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5);
    return amplitude / (2.0 * std::numbers::pi * width) * std::exp(-r2 / (2.0 * width));
  };
}

LinearSystem assemble_dirichlet(const StructuredMesh& mesh, std::span<const SymTensor2> coeff, const Source2D& f) {
  if (coeff.size() != mesh.element_count())
    throw ValidationError("assemble_dirichlet: expected one coefficient per element");
  const int nx = mesh.nx();
  const int ny = mesh.ny();
  const std::size_t n = static_cast<std::size_t>(nx - 1) * static_cast<std::size_t>(ny - 1);
  const double hx = mesh.hx();
  const double hy = mesh.hy();
  std::vector<Triplet> entries;
  entries.reserve(mesh.element_count() * 16);
  std::vector<double> rhs(n, 0.0);

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t e = mesh.element(i, j);
      check_positive_definite(coeff[e], e);
      const auto k = stiffness_for(coeff[e], hx, hy);
      // local node -> interior unknown, or npos on the boundary
      constexpr std::size_t npos = static_cast<std::size_t>(-1);
      const std::array<std::pair<int, int>, 4> ij{{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
      std::array<std::size_t, 4> dof{};
      for (int a = 0; a < 4; ++a) {
        const auto [ii, jj] = ij[a];
        dof[a] = (ii > 0 && ii < nx && jj > 0 && jj < ny) ? interior_index(mesh, ii, jj) : npos;
      }
      std::array<double, 4> load{};
      for (const auto& q : kGaussPoints) {
        const auto phi = basis(q[0], q[1]);
        const double fq = f(mesh.node_x(i) + q[0] * hx, mesh.node_y(j) + q[1] * hy);
        for (int a = 0; a < 4; ++a) load[a] += 0.25 * hx * hy * fq * phi[a];
      }
      for (int a = 0; a < 4; ++a) {
        if (dof[a] == npos) continue;
        rhs[dof[a]] += load[a];
        for (int b = 0; b < 4; ++b)
          if (dof[b] != npos) entries.push_back({dof[a], dof[b], k[a][b]});
      }
    }
  }
  return {CsrMatrix::from_triplets(n, std::move(entries)), std::move(rhs)};
}

LinearSystem assemble_dirichlet(const StructuredMesh& mesh, std::span<const double> coeff, const Source2D& f) {
  std::vector<SymTensor2> t(coeff.size());
  std::transform(coeff.begin(), coeff.end(), t.begin(), [](double a) { return SymTensor2::isotropic(a); });
  return assemble_dirichlet(mesh, t, f);
}

long default_max_iterations(std::size_t n) noexcept {
  return static_cast<long>(std::ceil(100.0 * std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)))));
}

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, long max_iter) {
  const std::size_t n = a.size();
  if (b.size() != n) throw ValidationError("cg_solve: right-hand side size mismatch");
  if (max_iter <= 0) max_iter = default_max_iterations(n);
  CgResult out;
  out.x.assign(n, 0.0);
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) return out;

  auto inv_diag = a.diagonal();
  for (auto& d : inv_diag) {
    if (!(d > 0.0)) throw NumericalError("cg_solve: matrix diagonal must be positive");
    d = 1.0 / d;
  }
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(n), p(n), ap(n);
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  };
  precondition();
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;

  for (long it = 1; it <= max_iter; ++it) {
    a.multiply(p, ap);
    const double alpha = rz / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    rel = std::sqrt(dot(r, r)) / b_norm;
    out.iterations = it;
    if (rel <= tol) {
      // the recursive residual drifts; confirm with the true one
      a.multiply(out.x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      rel = std::sqrt(dot(r, r)) / b_norm;
      if (rel <= tol) {
        out.residual = rel;
        return out;
      }
      precondition();
      p = z;
      rz = dot(r, z);
      continue;
    }
    precondition();
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  a.multiply(out.x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  throw NotConvergedError(max_iter, std::sqrt(dot(r, r)) / b_norm);
}

FemSolution solve_dirichlet(const StructuredMesh& mesh, std::vector<SymTensor2> coeff, const Source2D& f,
                            CgOptions opts) {
  const auto system = assemble_dirichlet(mesh, coeff, f);
  const auto cg = cg_solve(system.matrix, system.rhs, opts.tol, opts.max_iter);

  FemSolution sol{mesh, std::vector<double>(mesh.node_count(), 0.0), std::move(coeff), {}, {}, cg.iterations,
                  cg.residual};
  for (int j = 1; j < mesh.ny(); ++j)
    for (int i = 1; i < mesh.nx(); ++i) sol.u[mesh.node(i, j)] = cg.x[interior_index(mesh, i, j)];

  sol.gradient.resize(mesh.element_count());
  sol.flux.resize(mesh.element_count());
  for (int j = 0; j < mesh.ny(); ++j) {
    for (int i = 0; i < mesh.nx(); ++i) {
      const auto nodes = mesh.element_nodes(i, j);
      const auto g = basis_gradients(0.5, 0.5, mesh.hx(), mesh.hy());
      Vec2 grad{0.0, 0.0};
      for (int a = 0; a < 4; ++a) {
        grad[0] += sol.u[nodes[a]] * g[a][0];
        grad[1] += sol.u[nodes[a]] * g[a][1];
      }
      const std::size_t e = mesh.element(i, j);
      sol.gradient[e] = grad;
      sol.flux[e] = sol.coefficient[e].apply(grad);
    }
  }
  return sol;
}

std::vector<SymTensor2> sample_coefficients(const StructuredMesh& mesh, const fields::Checkerboard2D& realization,
                                            fields::ScaleParameter eps) {
  std::vector<SymTensor2> out(mesh.element_count());
  for (int j = 0; j < mesh.ny(); ++j)
    for (int i = 0; i < mesh.nx(); ++i)
      out[mesh.element(i, j)] = SymTensor2::isotropic(fields::eval_scaled(realization, eps, mesh.centroid(i, j)));
  return out;
}

bool mesh_aligned(const StructuredMesh& mesh, const fields::Checkerboard2D& realization, fields::ScaleParameter eps) {
  auto near_integer = [](double v) { return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v)); };
  const std::array<double, 2> h{mesh.hx(), mesh.hy()};
  const std::array<double, 2> origin{mesh.x0(), mesh.y0()};
  for (int d = 0; d < 2; ++d) {
    const double per_tile = eps.value() / h[d];
    const double shift = (origin[d] + realization.offset()[d] * eps.value()) / h[d];
    if (!near_integer(per_tile) || !near_integer(shift)) return false;
  }
  return true;
}

FemSolution solve_dirichlet(const StructuredMesh& mesh, const fields::Checkerboard2D& realization,
                            fields::ScaleParameter eps, const Source2D& f, CgOptions opts) {
  if (!mesh_aligned(mesh, realization, eps)) {
    std::ostringstream msg;
    msg << "mesh " << mesh.nx() << "x" << mesh.ny() << " does not align with tiles of width " << eps.value();
    throw ValidationError(msg.str());
  }
  return solve_dirichlet(mesh, sample_coefficients(mesh, realization, eps), f, opts);
}

double l2_distance(const StructuredMesh& mesh, std::span<const double> a, std::span<const double> b) {
  if (a.size() != mesh.node_count() || (!b.empty() && b.size() != mesh.node_count()))
    throw ValidationError("l2 norm: nodal vector size mismatch");
  const double w = 0.25 * mesh.hx() * mesh.hy();
  double sum = 0.0;
  for (int j = 0; j < mesh.ny(); ++j)
    for (int i = 0; i < mesh.nx(); ++i) {
      const auto nodes = mesh.element_nodes(i, j);
      for (const auto& q : kGaussPoints) {
        const auto phi = basis(q[0], q[1]);
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += phi[k] * (a[nodes[k]] - (b.empty() ? 0.0 : b[nodes[k]]));
        sum += w * v * v;
      }
    }
  return std::sqrt(sum);
}

double l2_norm(const StructuredMesh& mesh, std::span<const double> nodal) { return l2_distance(mesh, nodal, {}); }

double flux_against_hat(const FemSolution& sol, int i, int j) {
  const auto& mesh = sol.mesh;
  double total = 0.0;
  for (int ej = j - 1; ej <= j; ++ej)
    for (int ei = i - 1; ei <= i; ++ei) {
      if (ei < 0 || ej < 0 || ei >= mesh.nx() || ej >= mesh.ny()) continue;
      const auto nodes = mesh.element_nodes(ei, ej);
      const int local = static_cast<int>(std::find(nodes.begin(), nodes.end(), mesh.node(i, j)) - nodes.begin());
      const auto& a = sol.coefficient[mesh.element(ei, ej)];
      for (const auto& q : kGaussPoints) {
        const auto g = basis_gradients(q[0], q[1], mesh.hx(), mesh.hy());
        Vec2 grad{0.0, 0.0};
        for (int k = 0; k < 4; ++k) {
          grad[0] += sol.u[nodes[k]] * g[k][0];
          grad[1] += sol.u[nodes[k]] * g[k][1];
        }
        const auto flux = a.apply(grad);
        total += 0.25 * mesh.hx() * mesh.hy() * (flux[0] * g[local][0] + flux[1] * g[local][1]);
      }
    }
  return total;
}

double load_against_hat(const StructuredMesh& mesh, const Source2D& f, int i, int j) {
  double total = 0.0;
  for (int ej = j - 1; ej <= j; ++ej)
    for (int ei = i - 1; ei <= i; ++ei) {
      if (ei < 0 || ej < 0 || ei >= mesh.nx() || ej >= mesh.ny()) continue;
      const auto nodes = mesh.element_nodes(ei, ej);
      const int local = static_cast<int>(std::find(nodes.begin(), nodes.end(), mesh.node(i, j)) - nodes.begin());
      for (const auto& q : kGaussPoints) {
        const auto phi = basis(q[0], q[1]);
        total += 0.25 * mesh.hx() * mesh.hy() * f(mesh.node_x(ei) + q[0] * mesh.hx(), mesh.node_y(ej) + q[1] * mesh.hy()) *
                 phi[local];
      }
    }
  return total;
}

std::size_t PeriodicCellProblem::periodic_node(int i, int j) const noexcept {
  const int m = n();
  const int ii = ((i % m) + m) % m;
  const int jj = ((j % m) + m) % m;
  return static_cast<std::size_t>(ii + jj * m);
}

void PeriodicCellProblem::validate() const {
  if (tiles < 2) throw ValidationError("periodic cell problem needs L >= 2 tiles");
  if (elements_per_tile < 1) throw ValidationError("periodic cell problem needs >= 1 element per tile");
  const auto expected = static_cast<std::size_t>(n()) * static_cast<std::size_t>(n());
  if (coefficient.size() != expected) throw ValidationError("periodic cell problem: expected one coefficient per element");
  for (std::size_t e = 0; e < coefficient.size(); ++e) check_positive_definite(coefficient[e], e);
}

LinearSystem assemble_periodic_cell(const PeriodicCellProblem& problem) {
  problem.validate();
  const int m = problem.n();
  const double h = problem.h();
  const std::size_t total = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
  std::vector<Triplet> entries;
  entries.reserve(total * 16);
  std::vector<double> rhs(total - 1, 0.0);

  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto& a = problem.coefficient[static_cast<std::size_t>(i + j * m)];
      const auto k = stiffness_for(a, h, h);
      const std::array<std::size_t, 4> nodes{problem.periodic_node(i, j), problem.periodic_node(i + 1, j),
                                             problem.periodic_node(i + 1, j + 1), problem.periodic_node(i, j + 1)};
      const auto axi = a.apply(problem.xi);
      std::array<double, 4> load{};
      for (const auto& q : kGaussPoints) {
        const auto g = basis_gradients(q[0], q[1], h, h);
        for (int b = 0; b < 4; ++b) load[b] -= 0.25 * h * h * (axi[0] * g[b][0] + axi[1] * g[b][1]);
      }
      for (int r = 0; r < 4; ++r) {
        if (nodes[r] == 0) continue;
        rhs[nodes[r] - 1] += load[r];
        for (int c = 0; c < 4; ++c)
          if (nodes[c] != 0) entries.push_back({nodes[r] - 1, nodes[c] - 1, k[r][c]});
      }
    }
  }
  return {CsrMatrix::from_triplets(total - 1, std::move(entries)), std::move(rhs)};
}

CellSolution solve_periodic_cell(const PeriodicCellProblem& problem, CgOptions opts) {
  const auto system = assemble_periodic_cell(problem);
  const auto cg = cg_solve(system.matrix, system.rhs, opts.tol, opts.max_iter);
  CellSolution out;
  out.iterations = cg.iterations;
  out.residual = cg.residual;
  out.chi.assign(cg.x.size() + 1, 0.0);
  std::copy(cg.x.begin(), cg.x.end(), out.chi.begin() + 1);
  const double mean = std::accumulate(out.chi.begin(), out.chi.end(), 0.0) / static_cast<double>(out.chi.size());
  for (auto& v : out.chi) v -= mean;
  return out;
}

std::array<std::array<double, 2>, 4> periodic_element_gradients(const PeriodicCellProblem& problem,
                                                                std::span<const double> chi, int i, int j) {
  const double h = problem.h();
  const std::array<std::size_t, 4> nodes{problem.periodic_node(i, j), problem.periodic_node(i + 1, j),
                                         problem.periodic_node(i + 1, j + 1), problem.periodic_node(i, j + 1)};
  std::array<std::array<double, 2>, 4> out{};
  for (std::size_t q = 0; q < 4; ++q) {
    const auto g = basis_gradients(kGaussPoints[q][0], kGaussPoints[q][1], h, h);
    for (int k = 0; k < 4; ++k) {
      out[q][0] += chi[nodes[k]] * g[k][0];
      out[q][1] += chi[nodes[k]] * g[k][1];
    }
  }
  return out;
}

}  // namespace homoglab::fem2d
