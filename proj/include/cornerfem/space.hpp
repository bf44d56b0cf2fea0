#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "cornerfem/mesh.hpp"

namespace cornerfem {

enum class Family { P1, P2, Q1 };

inline int family_degree(Family f) { return f == Family::P2 ? 2 : 1; }

// Reference shape functions.  Triangle: barycentric l0 = 1-xi-eta, l1 = xi,
// l2 = eta; P2 adds edge bubbles on local edges (0,1), (1,2), (2,0), matching
// the facet numbering of the mesh.  Hex: trilinear in bit order on [0,1]^3.
inline int shape_count(Family f) { return f == Family::P1 ? 3 : f == Family::P2 ? 6 : 8; }

inline void shape_values(Family f, Vec t, double* N) {
  if (f == Family::P1) {
    N[0] = 1.0 - t.x - t.y;
    N[1] = t.x;
    N[2] = t.y;
  } else if (f == Family::P2) {
    const double l0 = 1.0 - t.x - t.y, l1 = t.x, l2 = t.y;
    N[0] = l0 * (2.0 * l0 - 1.0);
    N[1] = l1 * (2.0 * l1 - 1.0);
    N[2] = l2 * (2.0 * l2 - 1.0);
    N[3] = 4.0 * l0 * l1;
    N[4] = 4.0 * l1 * l2;
    N[5] = 4.0 * l2 * l0;
  } else {
    for (int b = 0; b < 8; ++b)
      N[b] = (b & 1 ? t.x : 1.0 - t.x) * (b & 2 ? t.y : 1.0 - t.y) * (b & 4 ? t.z : 1.0 - t.z);
  }
}

inline void shape_grads(Family f, Vec t, Vec* dN) {
  if (f == Family::P1) {
    dN[0] = {-1.0, -1.0, 0.0};
    dN[1] = {1.0, 0.0, 0.0};
    dN[2] = {0.0, 1.0, 0.0};
  } else if (f == Family::P2) {
    const double l0 = 1.0 - t.x - t.y, l1 = t.x, l2 = t.y;
    const Vec d0 = {-1.0, -1.0, 0.0}, d1 = {1.0, 0.0, 0.0}, d2 = {0.0, 1.0, 0.0};
    dN[0] = (4.0 * l0 - 1.0) * d0;
    dN[1] = (4.0 * l1 - 1.0) * d1;
    dN[2] = (4.0 * l2 - 1.0) * d2;
    dN[3] = 4.0 * (l1 * d0 + l0 * d1);
    dN[4] = 4.0 * (l2 * d1 + l1 * d2);
    dN[5] = 4.0 * (l0 * d2 + l2 * d0);
  } else {
    for (int b = 0; b < 8; ++b) {
      const double fx = b & 1 ? t.x : 1.0 - t.x, gx = b & 1 ? 1.0 : -1.0;
      const double fy = b & 2 ? t.y : 1.0 - t.y, gy = b & 2 ? 1.0 : -1.0;
      const double fz = b & 4 ? t.z : 1.0 - t.z, gz = b & 4 ? 1.0 : -1.0;
      dN[b] = {gx * fy * fz, fx * gy * fz, fx * fy * gz};
    }
  }
}

struct FemSpace {
  const Mesh* mesh = nullptr;
  Family family = Family::P1;
  int ndofs = 0;
  int dofs_per_cell = 3;
  std::vector<int> cell_dofs;      // stride dofs_per_cell
  std::vector<Vec> dof_point;      // nodal point of each dof
  std::vector<Vec> dof_centroid;   // centroid of a cell containing the dof
  std::vector<char> dirichlet;     // mask over dofs
  std::vector<int> dirichlet_dofs; // sorted

  const int* cdofs(int c) const {
    return cell_dofs.data() + static_cast<size_t>(c) * dofs_per_cell;
  }
};

// Deterministic dof numbering: vertex dofs first (mesh order), then P2 edge
// dofs in order of first appearance during the cell scan.  Dirichlet dofs are
// exactly the dofs carried by boundary facets, which counts the slit banks
// separately since each bank has its own vertices.
inline FemSpace build_space(const Mesh& mesh, Family family) {
  if ((family == Family::Q1) != (mesh.kind == CellKind::Hex8))
    throw std::invalid_argument("build_space: family does not match mesh cell type");
  FemSpace S;
  S.mesh = &mesh;
  S.family = family;
  S.dofs_per_cell = shape_count(family);
  const int nv = static_cast<int>(mesh.verts.size());
  std::map<std::pair<int, int>, int> edge_dof;
  if (family == Family::P1 || family == Family::Q1) {
    S.ndofs = nv;
    S.cell_dofs = mesh.cells;
    S.dof_point = mesh.verts;
  } else {
    S.ndofs = nv;
    S.dof_point = mesh.verts;
    S.cell_dofs.reserve(static_cast<size_t>(mesh.num_cells()) * 6);
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const int* cv = mesh.cell_v(c);
      for (int i = 0; i < 3; ++i) S.cell_dofs.push_back(cv[i]);
      const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
      for (auto& e : pairs) {
        const int a = std::min(cv[e[0]], cv[e[1]]), b = std::max(cv[e[0]], cv[e[1]]);
        auto [it, inserted] = edge_dof.try_emplace({a, b}, S.ndofs);
        if (inserted) {
          ++S.ndofs;
          S.dof_point.push_back(0.5 * (mesh.verts[a] + mesh.verts[b]));
        }
        S.cell_dofs.push_back(it->second);
      }
    }
  }
  S.dof_centroid.assign(S.ndofs, Vec{});
  std::vector<char> seen(S.ndofs, 0);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Vec cc = mesh.centroid(c);
    const int* cd = S.cdofs(c);
    for (int i = 0; i < S.dofs_per_cell; ++i)
      if (!seen[cd[i]]) {
        seen[cd[i]] = 1;
        S.dof_centroid[cd[i]] = cc;
      }
  }
  S.dirichlet.assign(S.ndofs, 0);
  for (const auto& bf : mesh.boundary) {
    for (int i = 0; i < bf.nv; ++i) S.dirichlet[bf.v[i]] = 1;
    if (family == Family::P2) {
      const int a = std::min(bf.v[0], bf.v[1]), b = std::max(bf.v[0], bf.v[1]);
      S.dirichlet[edge_dof.at({a, b})] = 1;
    }
  }
  for (int i = 0; i < S.ndofs; ++i)
    if (S.dirichlet[i]) S.dirichlet_dofs.push_back(i);
  return S;
}

}  // namespace cornerfem
