#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cornerfem/mesh.hpp"
#include "cornerfem/quadrature.hpp"
#include "cornerfem/space.hpp"
#include "cornerfem/sparse.hpp"

namespace cornerfem {

// Composite quadrature over one cell.  The base rule can be sharpened by
// uniform red subdivision, and cells whose closed hull contains the grading
// point x0 are split into a fan of geometric annuli around x0 so that
// integrands with an r^beta blow-up at x0 converge quickly.  The innermost
// tip triangle is kept and integrated with the base rule; its points stay
// strictly inside, so the integrand is never evaluated at x0 itself.
struct QuadPolicy {
  int degree = 4;
  int uniform_subdiv = 0;
  bool graded = false;
  Vec x0{};
  int annulus_depth = 24;
  // Fan and annulus triangles see the raw singularity up close, so they get
  // their own, sharper rule independent of the base degree.
  int graded_degree = 12;
  int graded_subdiv = 1;
};

// fn(t, p, w): reference coords within the cell, physical point, physical weight.
template <class F>
void for_cell_quadrature(const Mesh& mesh, int c, const QuadPolicy& pol, F&& fn) {
  const int* cv = mesh.cell_v(c);
  if (mesh.kind == CellKind::Tri3) {
    const Vec v0 = mesh.verts[cv[0]];
    const Vec e1 = mesh.verts[cv[1]] - v0, e2 = mesh.verts[cv[2]] - v0;
    const double detc = std::abs(e1.x * e2.y - e1.y * e2.x);

    // Emits `rule` on the ref-space triangle (A,B,C) after `levels` red
    // subdivisions.
    auto emit = [&](Vec A, Vec B, Vec C, int levels, const QuadRule& rule, auto&& self) -> void {
      if (levels > 0) {
        const Vec ab = 0.5 * (A + B), bc = 0.5 * (B + C), ca = 0.5 * (C + A);
        self(A, ab, ca, levels - 1, rule, self);
        self(B, bc, ab, levels - 1, rule, self);
        self(C, ca, bc, levels - 1, rule, self);
        self(ab, bc, ca, levels - 1, rule, self);
        return;
      }
      const Vec f1 = B - A, f2 = C - A;
      const double dets = std::abs(f1.x * f2.y - f1.y * f2.x);
      if (dets == 0.0) return;
      for (size_t q = 0; q < rule.pts.size(); ++q) {
        const Vec t = A + rule.pts[q].x * f1 + rule.pts[q].y * f2;
        const Vec p = v0 + t.x * e1 + t.y * e2;
        fn(t, p, rule.w[q] * dets * detc);
      }
    };

    Vec t0{};
    bool grade_here = false;
    if (pol.graded) {
      // Barycentric preimage of x0; grade only if x0 lies in the closed cell.
      const Vec d = pol.x0 - v0;
      const double det = e1.x * e2.y - e1.y * e2.x;
      t0 = {(d.x * e2.y - d.y * e2.x) / det, (e1.x * d.y - e1.y * d.x) / det, 0.0};
      const double tol = 1e-12;
      grade_here = t0.x > -tol && t0.y > -tol && t0.x + t0.y < 1.0 + tol;
    }
    if (!grade_here) {
      emit({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, pol.uniform_subdiv, tri_rule(pol.degree), emit);
      return;
    }
    const QuadRule& grule = tri_rule(pol.graded_degree);
    const Vec corner[3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    for (int e = 0; e < 3; ++e) {
      const Vec a = corner[e], b = corner[(e + 1) % 3];
      if (std::abs(tri_signed_area(t0, a, b)) < 1e-14) continue;
      const Vec ra = a - t0, rb = b - t0;
      double s = 1.0;
      for (int j = 0; j < pol.annulus_depth; ++j) {
        const double s2 = 0.5 * s;
        const Vec pa = t0 + s * ra, pb = t0 + s * rb;
        const Vec qa = t0 + s2 * ra, qb = t0 + s2 * rb;
        emit(qa, pb, pa, pol.graded_subdiv, grule, emit);
        emit(qa, qb, pb, pol.graded_subdiv, grule, emit);
        s = s2;
      }
      emit(t0, t0 + s * ra, t0 + s * rb, pol.graded_subdiv, grule, emit);
    }
    return;
  }

  // Hexahedra: tensor Gauss on uniformly subdivided reference cubes with the
  // trilinear Jacobian evaluated pointwise.  Grading around a point is a
  // triangle-only feature; the 3D studies only integrate smooth data.
  if (pol.graded) {
    const Vec lo = mesh.verts[cv[0]], hi = mesh.verts[cv[7]];
    if (pol.x0.x > lo.x - 1e-12 && pol.x0.x < hi.x + 1e-12 && pol.x0.y > lo.y - 1e-12 &&
        pol.x0.y < hi.y + 1e-12 && pol.x0.z > lo.z - 1e-12 && pol.x0.z < hi.z + 1e-12)
      throw std::runtime_error("for_cell_quadrature: graded rules are not available on hexahedra");
  }
  const int n = pol.degree / 2 + 1;
  const QuadRule& g1 = gauss_rule(n);
  const int m = 1 << pol.uniform_subdiv;
  const double inv_m3 = 1.0 / (static_cast<double>(m) * m * m);
  Vec vv[8];
  for (int b = 0; b < 8; ++b) vv[b] = mesh.verts[cv[b]];
  double N[8];
  Vec dN[8];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int qi = 0; qi < n; ++qi)
          for (int qj = 0; qj < n; ++qj)
            for (int qk = 0; qk < n; ++qk) {
              const Vec t = {(i + g1.pts[qi].x) / m, (j + g1.pts[qj].x) / m,
                             (k + g1.pts[qk].x) / m};
              shape_values(Family::Q1, t, N);
              shape_grads(Family::Q1, t, dN);
              Vec p{}, jx{}, jy{}, jz{};
              for (int b = 0; b < 8; ++b) {
                p = p + N[b] * vv[b];
                jx = jx + dN[b].x * vv[b];
                jy = jy + dN[b].y * vv[b];
                jz = jz + dN[b].z * vv[b];
              }
              const double det = dot(jx, cross(jy, jz));
              fn(t, p, g1.w[qi] * g1.w[qj] * g1.w[qk] * inv_m3 * std::abs(det));
            }
}

namespace detail {

// Physical gradients of all shape functions at reference point t, plus the
// Jacobian determinant there.
inline double physical_grads(const Mesh& mesh, int c, Family fam, Vec t, Vec* gp) {
  const int* cv = mesh.cell_v(c);
  const int nsh = shape_count(fam);
  Vec dN[8];
  shape_grads(fam, t, dN);
  if (mesh.kind == CellKind::Tri3) {
    const Vec e1 = mesh.verts[cv[1]] - mesh.verts[cv[0]];
    const Vec e2 = mesh.verts[cv[2]] - mesh.verts[cv[0]];
    const double det = e1.x * e2.y - e1.y * e2.x;
    for (int i = 0; i < nsh; ++i)
      gp[i] = {(e2.y * dN[i].x - e1.y * dN[i].y) / det,
               (-e2.x * dN[i].x + e1.x * dN[i].y) / det, 0.0};
    return std::abs(det);
  }
  Vec jx{}, jy{}, jz{};
  for (int b = 0; b < 8; ++b) {
    jx = jx + dN[b].x * mesh.verts[cv[b]];
    jy = jy + dN[b].y * mesh.verts[cv[b]];
    jz = jz + dN[b].z * mesh.verts[cv[b]];
  }
  // Rows of the inverse transpose via the cofactor columns of J = [jx jy jz]^T.
  const double det = dot(jx, cross(jy, jz));
  const Vec c1 = cross(jy, jz), c2 = cross(jz, jx), c3 = cross(jx, jy);
  for (int i = 0; i < nsh; ++i)
    gp[i] = (1.0 / det) * (dN[i].x * c1 + dN[i].y * c2 + dN[i].z * c3);
  return std::abs(det);
}

}  // namespace detail

using MatrixCoefficient = std::function<std::array<double, 9>(const Vec&)>;

// Galerkin stiffness for -div(A grad u).  A defaults to the identity and must
// be symmetric; `order`, when given, is a cell permutation used for the
// accumulation, which the result must not depend on beyond rounding.
inline Csr assemble_stiffness(const FemSpace& S, const MatrixCoefficient& coeff = nullptr,
                              const std::vector<int>* order = nullptr) {
  const Mesh& mesh = *S.mesh;
  const int nd = S.dofs_per_cell;
  std::vector<std::vector<int>> adj(S.ndofs);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const int* cd = S.cdofs(c);
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j) adj[cd[i]].push_back(cd[j]);
  }
  Csr K;
  K.n = S.ndofs;
  K.row_ptr.assign(S.ndofs + 1, 0);
  for (int i = 0; i < S.ndofs; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    K.row_ptr[i + 1] = K.row_ptr[i] + static_cast<int>(row.size());
    K.col.insert(K.col.end(), row.begin(), row.end());
  }
  K.val.assign(K.col.size(), 0.0);

  QuadPolicy pol;
  pol.degree = S.family == Family::P2 ? 6 : 4;
  bool checked = false;
  std::vector<double> local(static_cast<size_t>(nd) * nd);
  std::vector<Vec> gp(nd);
  for (int cc = 0; cc < mesh.num_cells(); ++cc) {
    const int c = order ? (*order)[cc] : cc;
    std::fill(local.begin(), local.end(), 0.0);
    for_cell_quadrature(mesh, c, pol, [&](Vec t, Vec p, double w) {
      detail::physical_grads(mesh, c, S.family, t, gp.data());
      std::array<double, 9> A{1, 0, 0, 0, 1, 0, 0, 0, 1};
      if (coeff) {
        A = coeff(p);
        if (!checked) {
          checked = true;
          double amax = 0.0, asym = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              amax = std::max(amax, std::abs(A[3 * i + j]));
              asym = std::max(asym, std::abs(A[3 * i + j] - A[3 * j + i]));
            }
          if (asym > 1e-12 * std::max(1.0, amax))
            throw std::invalid_argument("assemble_stiffness: coefficient must be symmetric");
        }
      }
      for (int j = 0; j < nd; ++j) {
        const Vec Ag = {A[0] * gp[j].x + A[1] * gp[j].y + A[2] * gp[j].z,
                        A[3] * gp[j].x + A[4] * gp[j].y + A[5] * gp[j].z,
                        A[6] * gp[j].x + A[7] * gp[j].y + A[8] * gp[j].z};
        for (int i = 0; i < nd; ++i) local[i * nd + j] += w * dot(gp[i], Ag);
      }
    });
    const int* cd = S.cdofs(c);
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j) K.add(cd[i], cd[j], local[i * nd + j]);
  }
  return K;
}

// Load vector for the source term.  f receives the physical point and the
// centroid of the cell being integrated, so callers can disambiguate values
// on a branch cut from the side the cell lies on.
inline std::vector<double> assemble_load(const FemSpace& S,
                                         const std::function<double(const Vec&, const Vec&)>& f,
                                         const QuadPolicy& pol) {
  const Mesh& mesh = *S.mesh;
  const int nd = S.dofs_per_cell;
  std::vector<double> b(S.ndofs, 0.0);
  double N[8];
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Vec cc = mesh.centroid(c);
    const int* cd = S.cdofs(c);
    for_cell_quadrature(mesh, c, pol, [&](Vec t, Vec p, double w) {
      const double fv = f(p, cc);
      shape_values(S.family, t, N);
      for (int i = 0; i < nd; ++i) b[cd[i]] += w * fv * N[i];
    });
  }
  return b;
}

struct ReducedSystem {
  Csr K;                         // free-by-free block
  std::vector<double> b;         // load minus stiffness times lift
  std::vector<double> lift;      // full-length; boundary values, zero inside
  std::vector<int> free_dofs;    // reduced index -> full dof
  std::vector<int> full_to_free; // -1 on Dirichlet dofs
};

// Eliminates Dirichlet dofs by nodal interpolation of g.  g receives the dof
// point and the centroid of a cell owning the dof (the branch-cut hint again:
// the two copies of a slit-edge node report centroids on opposite banks).
inline ReducedSystem apply_dirichlet_nodal(
    const FemSpace& S, const Csr& K, const std::vector<double>& b,
    const std::function<double(const Vec&, const Vec&)>& g) {
  ReducedSystem R;
  R.lift.assign(S.ndofs, 0.0);
  R.full_to_free.assign(S.ndofs, -1);
  for (int d : S.dirichlet_dofs) R.lift[d] = g(S.dof_point[d], S.dof_centroid[d]);
  for (int i = 0; i < S.ndofs; ++i)
    if (!S.dirichlet[i]) {
      R.full_to_free[i] = static_cast<int>(R.free_dofs.size());
      R.free_dofs.push_back(i);
    }
  std::vector<double> Kl(S.ndofs);
  K.matvec(R.lift, Kl);
  const int nf = static_cast<int>(R.free_dofs.size());
  R.b.resize(nf);
  R.K.n = nf;
  R.K.row_ptr.assign(nf + 1, 0);
  for (int r = 0; r < nf; ++r) {
    const int i = R.free_dofs[r];
    R.b[r] = b[i] - Kl[i];
    for (int kk = K.row_ptr[i]; kk < K.row_ptr[i + 1]; ++kk)
      if (R.full_to_free[K.col[kk]] >= 0) ++R.K.row_ptr[r + 1];
  }
  for (int r = 0; r < nf; ++r) R.K.row_ptr[r + 1] += R.K.row_ptr[r];
  R.K.col.resize(R.K.row_ptr[nf]);
  R.K.val.resize(R.K.row_ptr[nf]);
  for (int r = 0; r < nf; ++r) {
    int out = R.K.row_ptr[r];
    const int i = R.free_dofs[r];
    for (int kk = K.row_ptr[i]; kk < K.row_ptr[i + 1]; ++kk) {
      const int cf = R.full_to_free[K.col[kk]];
      if (cf >= 0) {
        R.K.col[out] = cf;
        R.K.val[out] = K.val[kk];
        ++out;
      }
    }
  }
  return R;
}

inline std::vector<double> compose_solution(const ReducedSystem& R,
                                            const std::vector<double>& x_free) {
  std::vector<double> u = R.lift;
  for (size_t r = 0; r < R.free_dofs.size(); ++r) u[R.free_dofs[r]] = x_free[r];
  return u;
}

}  // namespace cornerfem
