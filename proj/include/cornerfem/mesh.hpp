#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cornerfem/geometry.hpp"

namespace cornerfem {

// All domains have side length 2.  The reentrant feature sits at the origin:
// LShape removes the closed quadrant [0,1]x[-1,0], Slit removes the segment
// (0,1]x{0} (represented by duplicated vertices, tip shared), FicheraCube
// removes the closed octant [0,1]^3.
enum class Domain { UnitSquareCentered, LShape, Slit, FicheraCube };

enum class CellKind { Tri3, Hex8 };

struct BoundaryFacet {
  int cell = -1;
  int local = -1;               // facet index within the cell
  std::array<int, 4> v = {-1, -1, -1, -1};
  int nv = 0;
  Vec normal;                   // unit outward
  double measure = 0.0;         // length in 2D, area in 3D
};

// Triangle facet f is the edge (v[f], v[(f+1)%3]).  Hex vertices use bit
// order b = bx + 2*by + 4*bz over the unit-cube offsets; faces are listed
// -x,+x,-y,+y,-z,+z as closed loops.
inline constexpr int hex_face_loop[6][4] = {
    {0, 2, 6, 4}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 5, 7, 6}};

struct Mesh {
  Domain domain = Domain::UnitSquareCentered;
  int dim = 2;
  CellKind kind = CellKind::Tri3;
  int level = 0;
  double h0 = 0.5;
  std::vector<Vec> verts;
  std::vector<int> cells;       // flat connectivity, stride() entries per cell
  std::vector<BoundaryFacet> boundary;

  int stride() const { return kind == CellKind::Tri3 ? 3 : 8; }
  int num_cells() const { return static_cast<int>(cells.size()) / stride(); }
  const int* cell_v(int c) const { return cells.data() + static_cast<size_t>(c) * stride(); }
  double h() const { return h0 * std::ldexp(1.0, -level); }

  Vec centroid(int c) const {
    Vec s;
    const int* cv = cell_v(c);
    for (int i = 0; i < stride(); ++i) s = s + verts[cv[i]];
    return (1.0 / stride()) * s;
  }
};

namespace detail {

inline std::array<int, 4> facet_key(const Mesh& m, int c, int f) {
  std::array<int, 4> k = {-1, -1, -1, -1};
  const int* cv = m.cell_v(c);
  if (m.kind == CellKind::Tri3) {
    k[0] = cv[f];
    k[1] = cv[(f + 1) % 3];
    if (k[0] > k[1]) std::swap(k[0], k[1]);
  } else {
    for (int i = 0; i < 4; ++i) k[i] = cv[hex_face_loop[f][i]];
    std::sort(k.begin(), k.end());
  }
  return k;
}

inline double hex_center_jacobian(const Mesh& m, int c) {
  const int* cv = m.cell_v(c);
  Vec col[3];
  for (int axis = 0; axis < 3; ++axis) {
    Vec hi, lo;
    for (int b = 0; b < 8; ++b) {
      if (b & (1 << axis))
        hi = hi + m.verts[cv[b]];
      else
        lo = lo + m.verts[cv[b]];
    }
    col[axis] = 0.25 * (hi - lo);
  }
  return dot(col[0], cross(col[1], col[2]));
}

}  // namespace detail

// Rebuilds boundary facets and validates orientation and conformity (every
// facet shared by at most two cells).
inline void finalize_mesh(Mesh& m) {
  const int nfacets = m.kind == CellKind::Tri3 ? 3 : 6;
  std::map<std::array<int, 4>, std::array<int, 3>> count;  // key -> {n, cell, local}
  for (int c = 0; c < m.num_cells(); ++c) {
    if (m.kind == CellKind::Tri3) {
      const int* cv = m.cell_v(c);
      if (tri_signed_area(m.verts[cv[0]], m.verts[cv[1]], m.verts[cv[2]]) <= 0.0)
        throw std::runtime_error("finalize_mesh: non-positive triangle " + std::to_string(c));
    } else {
      if (detail::hex_center_jacobian(m, c) <= 0.0)
        throw std::runtime_error("finalize_mesh: non-positive hex " + std::to_string(c));
    }
    for (int f = 0; f < nfacets; ++f) {
      auto key = detail::facet_key(m, c, f);
      auto it = count.find(key);
      if (it == count.end())
        count[key] = {1, c, f};
      else if (++it->second[0] > 2)
        throw std::runtime_error("finalize_mesh: facet shared by more than two cells");
    }
  }
  m.boundary.clear();
  for (auto& [key, cnt] : count) {
    if (cnt[0] != 1) continue;
    BoundaryFacet bf;
    bf.cell = cnt[1];
    bf.local = cnt[2];
    const int* cv = m.cell_v(bf.cell);
    const Vec cc = m.centroid(bf.cell);
    if (m.kind == CellKind::Tri3) {
      bf.nv = 2;
      bf.v[0] = cv[bf.local];
      bf.v[1] = cv[(bf.local + 1) % 3];
      const Vec a = m.verts[bf.v[0]], b = m.verts[bf.v[1]];
      const Vec t = b - a;
      bf.measure = norm(t);
      Vec n = {t.y / bf.measure, -t.x / bf.measure, 0.0};
      if (dot(n, 0.5 * (a + b) - cc) < 0.0) n = -1.0 * n;
      bf.normal = n;
    } else {
      bf.nv = 4;
      for (int i = 0; i < 4; ++i) bf.v[i] = cv[hex_face_loop[bf.local][i]];
      const Vec p0 = m.verts[bf.v[0]], p1 = m.verts[bf.v[1]], p2 = m.verts[bf.v[2]],
                p3 = m.verts[bf.v[3]];
      Vec n = cross(p2 - p0, p3 - p1);
      const double a2 = norm(n);
      bf.measure = 0.5 * a2;
      n = (1.0 / a2) * n;
      const Vec fc = 0.25 * (p0 + p1 + p2 + p3);
      if (dot(n, fc - cc) < 0.0) n = -1.0 * n;
      bf.normal = n;
    }
    m.boundary.push_back(bf);
  }
}

inline Mesh build_coarse_mesh(Domain dom) {
  Mesh m;
  m.domain = dom;
  m.level = 0;
  m.h0 = 0.5;
  if (dom == Domain::FicheraCube) {
    m.dim = 3;
    m.kind = CellKind::Hex8;
    const int n = 4;
    std::vector<int> vid((n + 1) * (n + 1) * (n + 1), -1);
    auto gidx = [&](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
    auto coord = [&](int i) { return -1.0 + 0.5 * i; };
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double cx = coord(i) + 0.25, cy = coord(j) + 0.25, cz = coord(k) + 0.25;
          if (cx > 0.0 && cy > 0.0 && cz > 0.0) continue;  // inside removed octant
          for (int b = 0; b < 8; ++b) {
            const int g = gidx(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
            if (vid[g] < 0) {
              vid[g] = static_cast<int>(m.verts.size());
              const int gi = g % (n + 1), gj = (g / (n + 1)) % (n + 1), gk = g / ((n + 1) * (n + 1));
              m.verts.push_back({coord(gi), coord(gj), coord(gk)});
            }
            m.cells.push_back(vid[g]);
          }
        }
    finalize_mesh(m);
    return m;
  }
  m.dim = 2;
  m.kind = CellKind::Tri3;
  const int n = 4;
  std::vector<int> vid((n + 1) * (n + 1), -1);
  auto coord = [&](int i) { return -1.0 + 0.5 * i; };
  auto use = [&](int i, int j) {
    const int g = j * (n + 1) + i;
    if (vid[g] < 0) {
      vid[g] = static_cast<int>(m.verts.size());
      m.verts.push_back({coord(i), coord(j), 0.0});
    }
    return vid[g];
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double cx = coord(i) + 0.25, cy = coord(j) + 0.25;
      if (dom == Domain::LShape && cx > 0.0 && cy < 0.0) continue;
      // split by the lower-left to upper-right diagonal
      const int a = use(i, j), b = use(i + 1, j), c = use(i + 1, j + 1), d = use(i, j + 1);
      m.cells.insert(m.cells.end(), {a, b, c, a, c, d});
    }
  if (dom == Domain::Slit) {
    // duplicate vertices on (0,1]x{0}; cells below the slit take the copy
    std::vector<int> lower_copy(m.verts.size(), -1);
    for (int v = 0; v < static_cast<int>(lower_copy.size()); ++v)
      if (m.verts[v].y == 0.0 && m.verts[v].x > 0.0) {
        lower_copy[v] = static_cast<int>(m.verts.size());
        m.verts.push_back(m.verts[v]);
      }
    for (int c = 0; c < m.num_cells(); ++c) {
      if (m.centroid(c).y >= 0.0) continue;
      for (int i = 0; i < 3; ++i) {
        int& v = m.cells[3 * c + i];
        if (lower_copy[v] >= 0) v = lower_copy[v];
      }
    }
  }
  finalize_mesh(m);
  return m;
}

// One level of red refinement: triangles split into four congruent children
// via edge midpoints, hexes into eight via edge/face/body midpoints.
// Midpoints are deduplicated through parent vertex indices, which keeps the
// slit banks separated and the tip shared without special cases.
inline Mesh refine_red(const Mesh& parent) {
  Mesh m;
  m.domain = parent.domain;
  m.dim = parent.dim;
  m.kind = parent.kind;
  m.level = parent.level + 1;
  m.h0 = parent.h0;
  m.verts = parent.verts;
  std::map<std::array<int, 2>, int> edge_mid;
  auto midpoint = [&](int a, int b) {
    std::array<int, 2> k = {std::min(a, b), std::max(a, b)};
    auto it = edge_mid.find(k);
    if (it != edge_mid.end()) return it->second;
    const int idx = static_cast<int>(m.verts.size());
    m.verts.push_back(0.5 * (m.verts[a] + m.verts[b]));
    edge_mid[k] = idx;
    return idx;
  };
  if (parent.kind == CellKind::Tri3) {
    m.cells.reserve(parent.cells.size() * 4);
    for (int c = 0; c < parent.num_cells(); ++c) {
      const int* cv = parent.cell_v(c);
      const int v0 = cv[0], v1 = cv[1], v2 = cv[2];
      const int m01 = midpoint(v0, v1), m12 = midpoint(v1, v2), m02 = midpoint(v0, v2);
      m.cells.insert(m.cells.end(), {v0, m01, m02, v1, m12, m01, v2, m02, m12, m01, m12, m02});
    }
  } else {
    std::map<std::array<int, 4>, int> face_mid;
    auto face_center = [&](std::array<int, 4> f) {
      auto k = f;
      std::sort(k.begin(), k.end());
      auto it = face_mid.find(k);
      if (it != face_mid.end()) return it->second;
      const int idx = static_cast<int>(m.verts.size());
      m.verts.push_back(0.25 * (m.verts[f[0]] + m.verts[f[1]] + m.verts[f[2]] + m.verts[f[3]]));
      face_mid[k] = idx;
      return idx;
    };
    m.cells.reserve(parent.cells.size() * 8);
    for (int c = 0; c < parent.num_cells(); ++c) {
      const int* cv = parent.cell_v(c);
      int lat[3][3][3];
      for (int k = 0; k < 3; k += 2)
        for (int j = 0; j < 3; j += 2)
          for (int i = 0; i < 3; i += 2) lat[i][j][k] = cv[(i / 2) + 2 * (j / 2) + 4 * (k / 2)];
      auto corner = [&](int i, int j, int k) { return lat[i][j][k]; };
      for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j)
          for (int i = 0; i < 3; ++i) {
            const int odd = (i % 2) + (j % 2) + (k % 2);
            if (odd == 0) continue;
            if (odd == 1) {
              const int i0 = i % 2 ? i - 1 : i, j0 = j % 2 ? j - 1 : j, k0 = k % 2 ? k - 1 : k;
              const int i1 = i % 2 ? i + 1 : i, j1 = j % 2 ? j + 1 : j, k1 = k % 2 ? k + 1 : k;
              lat[i][j][k] = midpoint(corner(i0, j0, k0), corner(i1, j1, k1));
            } else if (odd == 2) {
              const int is[2] = {i % 2 ? i - 1 : i, i % 2 ? i + 1 : i};
              const int js[2] = {j % 2 ? j - 1 : j, j % 2 ? j + 1 : j};
              const int ks[2] = {k % 2 ? k - 1 : k, k % 2 ? k + 1 : k};
              std::array<int, 4> f;
              int t = 0;
              for (int ck = 0; ck < (k % 2 ? 2 : 1); ++ck)
                for (int cj = 0; cj < (j % 2 ? 2 : 1); ++cj)
                  for (int ci = 0; ci < (i % 2 ? 2 : 1); ++ci)
                    f[t++] = corner(is[ci], js[cj], ks[ck]);
              lat[i][j][k] = face_center(f);
            } else {
              int idx = static_cast<int>(m.verts.size());
              Vec s;
              for (int b = 0; b < 8; ++b) s = s + m.verts[cv[b]];
              m.verts.push_back(0.125 * s);
              lat[i][j][k] = idx;
            }
          }
      for (int ok = 0; ok < 2; ++ok)
        for (int oj = 0; oj < 2; ++oj)
          for (int oi = 0; oi < 2; ++oi)
            for (int b = 0; b < 8; ++b)
              m.cells.push_back(lat[oi + (b & 1)][oj + ((b >> 1) & 1)][ok + ((b >> 2) & 1)]);
    }
  }
  finalize_mesh(m);
  return m;
}

inline Mesh build_mesh(Domain dom, int level) {
  Mesh m = build_coarse_mesh(dom);
  for (int l = 0; l < level; ++l) m = refine_red(m);
  return m;
}

inline double cell_measure(const Mesh& m, int c) {
  const int* cv = m.cell_v(c);
  if (m.kind == CellKind::Tri3)
    return tri_signed_area(m.verts[cv[0]], m.verts[cv[1]], m.verts[cv[2]]);
  // trilinear Jacobian has degree <= 2 per axis; 2x2x2 Gauss integrates it
  double vol = 0.0;
  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) {
        Vec col[3];
        const double t[3] = {g[a], g[b], g[d]};
        for (int axis = 0; axis < 3; ++axis) {
          Vec s;
          for (int bit = 0; bit < 8; ++bit) {
            double w = bit & (1 << axis) ? 1.0 : -1.0;
            for (int other = 0; other < 3; ++other) {
              if (other == axis) continue;
              w *= bit & (1 << other) ? t[other] : 1.0 - t[other];
            }
            s = s + w * m.verts[cv[bit]];
          }
          col[axis] = s;
        }
        vol += 0.125 * dot(col[0], cross(col[1], col[2]));
      }
  return vol;
}

inline double mesh_measure(const Mesh& m) {
  double s = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) s += cell_measure(m, c);
  return s;
}

inline double boundary_measure(const Mesh& m) {
  double s = 0.0;
  for (const auto& bf : m.boundary) s += bf.measure;
  return s;
}

inline std::vector<char> boundary_vertex_mask(const Mesh& m) {
  std::vector<char> on(m.verts.size(), 0);
  for (const auto& bf : m.boundary)
    for (int i = 0; i < bf.nv; ++i) on[bf.v[i]] = 1;
  return on;
}

// Cells with at least one vertex on the boundary: the one-element layer S_h.
inline std::vector<int> element_layer_strip(const Mesh& m) {
  const auto on = boundary_vertex_mask(m);
  std::vector<int> cells;
  for (int c = 0; c < m.num_cells(); ++c) {
    const int* cv = m.cell_v(c);
    for (int i = 0; i < m.stride(); ++i)
      if (on[cv[i]]) {
        cells.push_back(c);
        break;
      }
  }
  return cells;
}

inline double dist_to_boundary(const Mesh& m, Vec p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& bf : m.boundary) {
    if (bf.nv == 2) {
      best = std::min(best, dist_point_segment(p, m.verts[bf.v[0]], m.verts[bf.v[1]]));
    } else {
      // faces of our hex meshes are axis-aligned rectangles
      Vec lo = m.verts[bf.v[0]], hi = lo;
      for (int i = 1; i < 4; ++i) {
        const Vec q = m.verts[bf.v[i]];
        lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.z, q.z)};
        hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.z, q.z)};
      }
      const Vec cl = {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y),
                      std::clamp(p.z, lo.z, hi.z)};
      best = std::min(best, norm(p - cl));
    }
  }
  return best;
}

// Text dump: "dim ncells nverts", vertex lines, cell connectivity lines,
// then boundary-facet lines "cell local nx ny [nz]".  17 significant digits.
inline std::string dump_mesh(const Mesh& m) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d %d %zu\n", m.dim, m.num_cells(), m.verts.size());
  out += buf;
  for (const Vec& v : m.verts) {
    if (m.dim == 2)
      std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
    else
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x, v.y, v.z);
    out += buf;
  }
  for (int c = 0; c < m.num_cells(); ++c) {
    const int* cv = m.cell_v(c);
    for (int i = 0; i < m.stride(); ++i) {
      std::snprintf(buf, sizeof buf, i + 1 == m.stride() ? "%d\n" : "%d ", cv[i]);
      out += buf;
    }
  }
  for (const auto& bf : m.boundary) {
    if (m.dim == 2)
      std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", bf.cell, bf.local, bf.normal.x,
                    bf.normal.y);
    else
      std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %.17g\n", bf.cell, bf.local,
                    bf.normal.x, bf.normal.y, bf.normal.z);
    out += buf;
  }
  return out;
}

}  // namespace cornerfem
