#include "lamegap/mesh.hpp"
#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace lamegap {

namespace {

constexpr double kAspect = 2.0;        // horizontal/vertical cell ratio in the gap
constexpr double kNotchGrade = 0.35;   // cell growth rate along the notch
constexpr double kNotchSlopeMax = 0.9; // stop the strip where graphs steepen
constexpr double kMarchGrowth = 1.25;  // boundary node spacing growth
constexpr double kOnionStep = 0.8;     // ring offset as fraction of spacing
constexpr double kDecimGrowth = 1.6;   // spacing cap growth per ring

struct Builder {
  const GapGeometry& g;
  int h_gap;
  double h_far;
  Mesh mesh;

  int add_node(const Vec2& p) {
    mesh.nodes.push_back(p);
    return static_cast<int>(mesh.nodes.size()) - 1;
  }
  void add_tri(int a, int b, int c, Region r) {
    mesh.triangles.push_back({{a, b, c}, r});
  }
  void add_bedge(int a, int b, BoundaryTag t) {
    mesh.boundary_edges.push_back({a, b, t});
  }
  Vec2 node(int i) const { return mesh.nodes[i]; }
};

double tri_quality_min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  const double area2 = std::abs((b - a).x() * (c - a).y() -
                                (b - a).y() * (c - a).x());
  if (la <= 0 || lb <= 0 || lc <= 0) return 0.0;
  // sin of each angle via area; min angle is opposite the shortest edge
  const double sa = area2 / (lb * lc);
  const double sb = area2 / (la * lc);
  const double sc = area2 / (la * lb);
  return std::asin(std::clamp(std::min({sa, sb, sc}), 0.0, 1.0));
}

// Splits quad (bl, br, tr, tl) given CCW into two triangles choosing the
// diagonal with the better worst angle. Deterministic.
void split_quad(Builder& bld, int bl, int br, int tr, int tl, Region reg) {
  const Vec2 A = bld.node(bl), B = bld.node(br), C = bld.node(tr),
             D = bld.node(tl);
  const double q1 = std::min(tri_quality_min_angle(A, B, C),
                             tri_quality_min_angle(A, C, D));
  const double q2 = std::min(tri_quality_min_angle(A, B, D),
                             tri_quality_min_angle(B, C, D));
  if (q1 >= q2) {
    bld.add_tri(bl, br, tr, reg);
    bld.add_tri(bl, tr, tl, reg);
  } else {
    bld.add_tri(bl, br, tl, reg);
    bld.add_tri(br, tr, tl, reg);
  }
}

struct StripColumn {
  double x;
  int layers;                 // number of cells across the gap at this column
  std::vector<int> node_ids;  // layers+1 nodes, bottom to top
};

// Ring node state used by the onion phases.
struct RingNode {
  int id;
  Vec2 dir;        // unit direction from the onion center
  double rho;      // current radius about the center
  double rho0;     // radius at annulus start (transfinite blending)
  double dist;     // remaining distance to the target circle
};

double ring_spacing(const std::vector<RingNode>& ring, size_t i,
                    const std::vector<Vec2>& nodes) {
  const size_t n = ring.size();
  const Vec2 p = nodes[ring[i].id];
  const Vec2 prev = nodes[ring[(i + n - 1) % n].id];
  const Vec2 next = nodes[ring[(i + 1) % n].id];
  return 0.5 * ((p - prev).norm() + (p - next).norm());
}

// Ladder triangulation between two closed rings. `parent[j]` is the index in
// `old_ring` that new node j descends from; parents are cyclically
// non-decreasing and must wrap exactly once.
void stitch_rings(Builder& bld, const std::vector<int>& old_ring,
                  const std::vector<int>& new_ring,
                  const std::vector<int>& parent, bool outward, Region reg) {
  const int n_old = static_cast<int>(old_ring.size());
  const int n_new = static_cast<int>(new_ring.size());
  int wrap = 0;
  for (int j = 0; j < n_new; ++j) {
    const int jn = (j + 1) % n_new;
    int p = parent[j];
    int pn = parent[jn];
    if (jn == 0) pn += n_old;
    if (pn < p) throw MeshError("stitch_rings: parent order broken");
    wrap += pn - p;
    for (int k = p; k < pn; ++k) {
      const int ok = old_ring[k % n_old];
      const int ok1 = old_ring[(k + 1) % n_old];
      if (outward)
        bld.add_tri(new_ring[j], ok1, ok, reg);
      else
        bld.add_tri(new_ring[j], ok, ok1, reg);
    }
    const int oc = old_ring[pn % n_old];
    if (outward)
      bld.add_tri(new_ring[j], new_ring[jn], oc, reg);
    else
      bld.add_tri(new_ring[j], oc, new_ring[jn], reg);
  }
  if (wrap != n_old) throw MeshError("stitch_rings: parent wrap mismatch");
}

// --- gap strip -------------------------------------------------------------

// Makes the symmetric x-partition of the strip including the notch extension,
// together with the per-column layer counts. Positions are cell boundaries;
// there is no column at x = 0.
void make_strip_partition(const GapGeometry& g, int L, double h_far,
                          std::vector<double>& xs, std::vector<int>& layers) {
  const double R = g.r_local;
  const double eps = g.epsilon;
  auto two_delta = [&](double x) {
    return eps + graph_value(g, 0, x) - graph_value(g, 1, x);
  };
  auto dx_window = [&](double x) {
    const double dv = kAspect * two_delta(x) / L;
    return std::min(dv, std::sqrt(eps * std::max(eps, std::abs(x))));
  };

  // window part: half-partition starting at dx(0)/2
  std::vector<double> right;
  std::vector<int> right_layers;
  double x = dx_window(0.0) / 2.0;
  right.push_back(x);
  right_layers.push_back(L);
  while (x < R) {
    x += dx_window(x);
    right.push_back(x);
    right_layers.push_back(L);
  }
  // land the window exactly at R
  const double scale = R / right.back();
  for (double& v : right) v *= scale;
  right.back() = R;

  // notch extension with layer halving
  const double x_limit = (g.shape_kind == ShapeKind::MFlat)
                             ? g.mflat_graph_extent()
                             : 0.995 * std::min(g.radius[0], g.radius[1]);
  const double base_height = two_delta(R) / L;
  int Lcur = L;
  x = R;
  while (true) {
    const double slope = std::max(std::abs(graph_slope(g, 0, x)),
                                  std::abs(graph_slope(g, 1, x)));
    if (slope > kNotchSlopeMax || x >= x_limit) break;
    const double h_des = std::min(h_far / kAspect,
                                  base_height + kNotchGrade * (x - R));
    while (Lcur > 4 && two_delta(x) / (Lcur / 2) <= 1.35 * h_des) Lcur /= 2;
    const double dx = kAspect * two_delta(x) / Lcur;
    if (x + dx > x_limit) break;
    x += dx;
    right.push_back(x);
    right_layers.push_back(Lcur);
  }

  xs.clear();
  layers.clear();
  for (size_t i = right.size(); i-- > 0;) {
    xs.push_back(-right[i]);
    layers.push_back(right_layers[i]);
  }
  for (size_t i = 0; i < right.size(); ++i) {
    xs.push_back(right[i]);
    layers.push_back(right_layers[i]);
  }
}

std::vector<StripColumn> build_strip(Builder& bld,
                                     const std::vector<double>& xs,
                                     const std::vector<int>& layers) {
  const GapGeometry& g = bld.g;
  std::vector<StripColumn> cols(xs.size());
  for (size_t c = 0; c < xs.size(); ++c) {
    cols[c].x = xs[c];
    cols[c].layers = layers[c];
    const double yb = -g.epsilon / 2.0 + graph_value(g, 1, xs[c]);
    const double yt = g.epsilon / 2.0 + graph_value(g, 0, xs[c]);
    for (int j = 0; j <= layers[c]; ++j) {
      const double t = static_cast<double>(j) / layers[c];
      cols[c].node_ids.push_back(bld.add_node({xs[c], yb + t * (yt - yb)}));
    }
  }
  for (size_t c = 0; c + 1 < cols.size(); ++c) {
    const StripColumn& a = cols[c];
    const StripColumn& b = cols[c + 1];
    if (a.layers == b.layers) {
      for (int j = 0; j < a.layers; ++j)
        split_quad(bld, a.node_ids[j], b.node_ids[j], b.node_ids[j + 1],
                   a.node_ids[j + 1], Region::Matrix);
    } else if (a.layers == 2 * b.layers) {
      for (int j = 0; j < b.layers; ++j) {
        const int a0 = a.node_ids[2 * j], a1 = a.node_ids[2 * j + 1],
                  a2 = a.node_ids[2 * j + 2];
        const int b0 = b.node_ids[j], b1 = b.node_ids[j + 1];
        bld.add_tri(a0, b0, a1, Region::Matrix);
        bld.add_tri(b0, b1, a1, Region::Matrix);
        bld.add_tri(a1, b1, a2, Region::Matrix);
      }
    } else if (2 * a.layers == b.layers) {
      for (int j = 0; j < a.layers; ++j) {
        const int b0 = b.node_ids[2 * j], b1 = b.node_ids[2 * j + 1],
                  b2 = b.node_ids[2 * j + 2];
        const int a0 = a.node_ids[j], a1 = a.node_ids[j + 1];
        bld.add_tri(a0, b0, b1, Region::Matrix);
        bld.add_tri(a0, b1, a1, Region::Matrix);
        bld.add_tri(a1, b1, b2, Region::Matrix);
      }
    } else {
      throw MeshError("strip: layer transition must halve or double");
    }
    for (int side = 0; side < 2; ++side) {
      const int na = side == 0 ? a.node_ids.back() : a.node_ids.front();
      const int nb = side == 0 ? b.node_ids.back() : b.node_ids.front();
      bld.add_bedge(na, nb, side == 0 ? BoundaryTag::Gamma1
                                      : BoundaryTag::Gamma2);
    }
  }
  return cols;
}

// --- inclusion boundary marching --------------------------------------------

// Points on the boundary of inclusion `which` outside the strip, right half,
// from the strip end corner to the far pole, with geometrically growing
// spacing. Returns the newly created node ids (corner excluded, pole
// included).
std::vector<int> march_boundary(Builder& bld, int which, double x_start,
                                double start_spacing, double cap) {
  const GapGeometry& g = bld.g;
  const int S = 8192;
  std::vector<Vec2> pts(S + 1);
  std::vector<double> cum(S + 1, 0.0);
  for (int k = 0; k <= S; ++k)
    pts[k] = boundary_path_point(g, which, static_cast<double>(k) / S);
  for (int k = 1; k <= S; ++k)
    cum[k] = cum[k - 1] + (pts[k] - pts[k - 1]).norm();
  // The path parameter starts at the window corner; the strip may extend
  // further. Find the first (ascending) crossing of x_start.
  double s0 = 0.0;
  if (x_start > pts[0].x()) {
    for (int k = 1; k <= S; ++k) {
      if (pts[k].x() >= x_start && pts[k - 1].x() < x_start) {
        s0 = cum[k];
        break;
      }
    }
  }
  const double total = cum[S] - s0;

  // spacing ladder, rescaled to land exactly on the pole
  std::vector<double> steps;
  double d = start_spacing, acc = 0.0;
  while (acc < total) {
    steps.push_back(d);
    acc += d;
    d = std::min(d * kMarchGrowth, cap);
  }
  const double rescale = total / acc;

  std::vector<int> ids;
  double target = s0;
  size_t hint = 0;
  for (size_t i = 0; i < steps.size(); ++i) {
    target += steps[i] * rescale;
    while (hint + 1 < cum.size() && cum[hint + 1] < target) ++hint;
    double t;
    if (hint + 1 >= cum.size()) {
      t = 1.0;
    } else {
      const double seg = cum[hint + 1] - cum[hint];
      const double frac = seg > 0 ? (target - cum[hint]) / seg : 0.0;
      t = (static_cast<double>(hint) + std::clamp(frac, 0.0, 1.0)) / S;
    }
    if (i + 1 == steps.size()) t = 1.0;
    ids.push_back(bld.add_node(boundary_path_point(g, which, t)));
  }
  return ids;
}

// --- onion phases ------------------------------------------------------------

// One decimation pass: keeps a subset of ring positions with spacing close to
// the per-node targets, anchored at index 0. The targets limit how fast the
// spacing may grow locally, which keeps the ladder fans shallow. Returns kept
// indices.
std::vector<int> decimate_indices(const std::vector<RingNode>& ring,
                                  const std::vector<Vec2>& nodes,
                                  const std::vector<double>& target,
                                  int min_keep) {
  const int n = static_cast<int>(ring.size());
  std::vector<int> kept;
  kept.push_back(0);
  double acc = 0.0;
  for (int i = 1; i < n; ++i) {
    acc += (nodes[ring[i].id] - nodes[ring[i - 1].id]).norm();
    if (acc >= 0.72 * target[i]) {
      kept.push_back(i);
      acc = 0.0;
    }
  }
  if (static_cast<int>(kept.size()) < min_keep) {
    kept.clear();
    const int stride = std::max(1, n / min_keep);
    for (int i = 0; i < n; i += stride) kept.push_back(i);
  }
  // avoid a short closing edge
  if (kept.size() >= 2) {
    double closing = 0.0;
    for (int i = kept.back(); i < n; ++i)
      closing += (nodes[ring[(i + 1) % n].id] - nodes[ring[i].id]).norm();
    if (closing < 0.4 * target[0] && static_cast<int>(kept.size()) > min_keep)
      kept.pop_back();
  }
  return kept;
}

// Enforces step_i <= step_j + alpha * dist(i, j) between neighbors so that
// fast-moving stretches cannot wrap around slow ones.
void lipschitz_limit(const std::vector<RingNode>& ring,
                     const std::vector<Vec2>& nodes,
                     std::vector<double>& step, double alpha) {
  const size_t n = ring.size();
  for (int pass = 0; pass < 4; ++pass) {
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      const size_t j = (i + 1) % n;
      const double d = (nodes[ring[j].id] - nodes[ring[i].id]).norm();
      if (step[j] > step[i] + alpha * d) {
        step[j] = step[i] + alpha * d;
        changed = true;
      }
    }
    for (size_t i = n; i-- > 0;) {
      const size_t j = (i + 1) % n;
      const double d = (nodes[ring[j].id] - nodes[ring[i].id]).norm();
      if (step[i] > step[j] + alpha * d) {
        step[i] = step[j] + alpha * d;
        changed = true;
      }
    }
    if (!changed) break;
  }
}

std::vector<double> smoothed_spacing(const std::vector<RingNode>& ring,
                                     const std::vector<Vec2>& nodes) {
  const size_t n = ring.size();
  std::vector<double> s(n), t(n);
  for (size_t i = 0; i < n; ++i) s[i] = ring_spacing(ring, i, nodes);
  for (int pass = 0; pass < 2; ++pass) {
    for (size_t i = 0; i < n; ++i)
      t[i] = 0.25 * s[(i + n - 1) % n] + 0.5 * s[i] + 0.25 * s[(i + 1) % n];
    s.swap(t);
  }
  return s;
}

// Shrinks the ring toward `center` until small enough, then fans. Ring must
// be CCW around the center.
void onion_inward(Builder& bld, std::vector<RingNode> ring, const Vec2& center,
                  double cap, Region reg) {
  for (int iter = 0; iter < 200; ++iter) {
    const auto spacing = smoothed_spacing(ring, bld.mesh.nodes);
    double max_rho = 0.0, mean_s = 0.0;
    for (size_t i = 0; i < ring.size(); ++i) {
      max_rho = std::max(max_rho, ring[i].rho);
      mean_s += spacing[i];
    }
    mean_s /= static_cast<double>(ring.size());
    if (std::getenv("LAMEGAP_MESH_DEBUG"))
      std::fprintf(stderr, "inward iter=%d n=%zu max_rho=%g mean_s=%g cap=%g\n",
                   iter, ring.size(), max_rho, mean_s, cap);
    if (ring.size() <= 10 ||
        (max_rho <= 1.35 * mean_s && ring.size() <= 12)) {
      const int c = bld.add_node(center);
      const int n = static_cast<int>(ring.size());
      for (int i = 0; i < n; ++i)
        bld.add_tri(c, ring[i].id, ring[(i + 1) % n].id, reg);
      return;
    }

    // offset inward
    std::vector<double> step(ring.size());
    for (size_t i = 0; i < ring.size(); ++i)
      step[i] = std::min(kOnionStep * spacing[i], 0.5 * ring[i].rho);
    lipschitz_limit(ring, bld.mesh.nodes, step, 0.5);
    std::vector<RingNode> next;
    for (size_t i = 0; i < ring.size(); ++i) {
      RingNode rn = ring[i];
      rn.rho -= step[i];
      next.push_back(rn);
    }
    // decimate on the provisional positions
    std::vector<RingNode> prov = next;
    std::vector<Vec2> tmp_nodes = bld.mesh.nodes;
    for (auto& rn : prov) {
      rn.id = static_cast<int>(tmp_nodes.size());
      tmp_nodes.push_back(center + rn.rho * rn.dir);
    }
    std::vector<double> target(ring.size());
    for (size_t i = 0; i < ring.size(); ++i)
      target[i] = std::min(cap, kDecimGrowth * spacing[i]);
    auto kept = decimate_indices(prov, tmp_nodes, target, 6);

    std::vector<int> old_ids, new_ids, parent;
    for (const auto& rn : ring) old_ids.push_back(rn.id);
    std::vector<RingNode> ring2;
    for (int idx : kept) {
      RingNode rn = next[idx];
      rn.id = bld.add_node(center + rn.rho * rn.dir);
      ring2.push_back(rn);
      new_ids.push_back(rn.id);
      parent.push_back(idx);
    }
    stitch_rings(bld, old_ids, new_ids, parent, /*outward=*/false, reg);
    ring.swap(ring2);
  }
  throw MeshError("onion_inward: failed to close the region");
}

// Smoothed outward unit normals of a CCW ring.
std::vector<Vec2> ring_normals(const std::vector<RingNode>& ring,
                               const std::vector<Vec2>& nodes) {
  const size_t n = ring.size();
  std::vector<Vec2> nr(n);
  for (size_t i = 0; i < n; ++i) {
    const Vec2 t =
        nodes[ring[(i + 1) % n].id] - nodes[ring[(i + n - 1) % n].id];
    Vec2 m{t.y(), -t.x()};
    const double len = m.norm();
    nr[i] = (len > 0) ? Vec2(m / len) : ring[i].dir;
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<Vec2> sm(n);
    for (size_t i = 0; i < n; ++i) {
      Vec2 a = 0.25 * nr[(i + n - 1) % n] + 0.5 * nr[i] +
               0.25 * nr[(i + 1) % n];
      sm[i] = a.normalized();
    }
    nr.swap(sm);
  }
  return nr;
}

// Grows the ring from the composite inclusion boundary out to the outer
// circle: normal-offset collar rings until the ring is round and the spacing
// saturated, then a radial transfinite ladder with midpoint insertion so the
// angular spacing tracks the radius.
void onion_outward(Builder& bld, std::vector<RingNode> ring, double h_far) {
  const double R_out = bld.g.outer_radius;
  const Region reg = Region::Matrix;

  auto theta_cap = [&](double rho) {
    return h_far * std::max(rho / R_out, 0.3);
  };

  for (int iter = 0; iter < 120; ++iter) {
    const auto spacing = smoothed_spacing(ring, bld.mesh.nodes);
    const auto normals = ring_normals(ring, bld.mesh.nodes);
    double min_ratio = std::numeric_limits<double>::max();
    double min_align = 1.0;
    for (size_t i = 0; i < ring.size(); ++i) {
      min_ratio = std::min(min_ratio, spacing[i] / theta_cap(ring[i].rho));
      min_align = std::min(min_align, normals[i].dot(ring[i].dir));
    }
    if (std::getenv("LAMEGAP_MESH_DEBUG")) {
      std::fprintf(stderr,
                   "collar iter=%d n=%zu min_ratio=%g min_align=%g\n", iter,
                   ring.size(), min_ratio, min_align);
      if (std::getenv("LAMEGAP_MESH_RINGDUMP")) {
        char name[64];
        std::snprintf(name, sizeof(name), "/tmp/ring_%03d.txt", iter);
        std::FILE* f = std::fopen(name, "w");
        for (size_t i = 0; i < ring.size(); ++i) {
          const Vec2 p = bld.mesh.nodes[ring[i].id];
          std::fprintf(f, "%g %g %g %g\n", p.x(), p.y(), normals[i].x(),
                       normals[i].y());
        }
        std::fclose(f);
      }
    }
    if (min_ratio > 0.55 && min_align > 0.92) break;
    if (iter == 119)
      throw MeshError("onion_outward: collar failed to round the ring");

    std::vector<RingNode> next = ring;
    std::vector<Vec2> tmp_nodes = bld.mesh.nodes;
    std::vector<double> step(ring.size());
    for (size_t i = 0; i < ring.size(); ++i) {
      const double room = R_out - ring[i].rho;
      step[i] = std::min(kOnionStep * spacing[i], 0.28 * room);
    }
    lipschitz_limit(ring, bld.mesh.nodes, step, 0.5);
    for (size_t i = 0; i < ring.size(); ++i) {
      const Vec2 pos = bld.mesh.nodes[ring[i].id] + step[i] * normals[i];
      next[i].rho = pos.norm();
      next[i].dir = pos / next[i].rho;
    }
    std::vector<RingNode> prov = next;
    for (auto& rn : prov) {
      rn.id = static_cast<int>(tmp_nodes.size());
      tmp_nodes.push_back(rn.rho * rn.dir);
    }
    std::vector<double> target(ring.size());
    for (size_t i = 0; i < ring.size(); ++i)
      target[i] =
          std::min(theta_cap(next[i].rho), kDecimGrowth * spacing[i]);
    auto kept = decimate_indices(prov, tmp_nodes, target, 12);

    std::vector<int> old_ids, new_ids, parent;
    for (const auto& rn : ring) old_ids.push_back(rn.id);
    std::vector<RingNode> ring2;
    const int nk = static_cast<int>(kept.size());
    for (int a = 0; a < nk; ++a) {
      const int ia = kept[a];
      const int ib = kept[(a + 1) % nk];
      RingNode rn = next[ia];
      rn.id = bld.add_node(rn.rho * rn.dir);
      ring2.push_back(rn);
      new_ids.push_back(rn.id);
      parent.push_back(ia);
      // concave corners stretch the offset curve; split long chords
      const Vec2 pa = rn.rho * rn.dir;
      const Vec2 pb = next[ib].rho * next[ib].dir;
      const double chord = (pb - pa).norm();
      const double cap_pair =
          theta_cap(0.5 * (rn.rho + next[ib].rho));
      const int extra = static_cast<int>(chord / (1.25 * cap_pair));
      for (int e = 1; e <= extra; ++e) {
        const double f = static_cast<double>(e) / (extra + 1);
        const Vec2 pos = (1 - f) * pa + f * pb;
        RingNode mid;
        mid.rho = pos.norm();
        mid.dir = pos / mid.rho;
        mid.id = bld.add_node(pos);
        ring2.push_back(mid);
        new_ids.push_back(mid.id);
        parent.push_back(ia);
      }
    }
    stitch_rings(bld, old_ids, new_ids, parent, /*outward=*/true, reg);
    ring.swap(ring2);
  }

  // transfinite ladder to the circle
  for (auto& rn : ring) {
    rn.rho0 = rn.rho;
    rn.dist = R_out - rn.rho;
  }
  double sigma = 0.0;
  for (int iter = 0; iter < 200 && sigma < 1.0; ++iter) {
    const auto spacing = smoothed_spacing(ring, bld.mesh.nodes);
    double dsig = std::numeric_limits<double>::max();
    for (size_t i = 0; i < ring.size(); ++i)
      dsig = std::min(dsig, 0.85 * spacing[i] / std::max(ring[i].dist, 1e-12));
    dsig = std::clamp(dsig, 0.02, 0.5);
    const bool last = sigma + 1.45 * dsig >= 1.0;
    const double sig_new = last ? 1.0 : sigma + dsig;

    // positions at sig_new; chords only grow, so only insertion is needed
    std::vector<RingNode> next = ring;
    for (auto& rn : next) rn.rho = rn.rho0 + sig_new * rn.dist;

    std::vector<int> old_ids;
    for (const auto& rn : ring) old_ids.push_back(rn.id);
    std::vector<int> new_ids, parent;
    std::vector<RingNode> ring2;
    const int nk = static_cast<int>(next.size());
    for (int a = 0; a < nk; ++a) {
      const int ib = (a + 1) % nk;
      RingNode rn = next[a];
      rn.id = bld.add_node(rn.rho * rn.dir);
      ring2.push_back(rn);
      new_ids.push_back(rn.id);
      parent.push_back(a);
      const Vec2 pa = rn.rho * rn.dir;
      const RingNode& rb = next[ib];
      const Vec2 pb = rb.rho * rb.dir;
      const double chord = (pb - pa).norm();
      const double cap = theta_cap(0.5 * (rn.rho + rb.rho));
      const int extra = static_cast<int>(chord / (1.08 * cap));
      for (int e = 1; e <= extra; ++e) {
        const double f = static_cast<double>(e) / (extra + 1);
        RingNode mid;
        mid.dir = ((1 - f) * rn.dir + f * rb.dir).normalized();
        mid.rho = (1 - f) * rn.rho + f * rb.rho;
        mid.rho0 = (1 - f) * rn.rho0 + f * rb.rho0;
        mid.dist = (1 - f) * rn.dist + f * rb.dist;
        if (last) mid.rho = R_out;
        mid.id = bld.add_node(mid.rho * mid.dir);
        ring2.push_back(mid);
        new_ids.push_back(mid.id);
        parent.push_back(a);
      }
    }
    stitch_rings(bld, old_ids, new_ids, parent, /*outward=*/true, reg);
    ring.swap(ring2);
    sigma = sig_new;
  }
  if (sigma < 1.0) throw MeshError("onion_outward: failed to reach the outer circle");

  const int n = static_cast<int>(ring.size());
  for (int i = 0; i < n; ++i)
    bld.add_bedge(ring[i].id, ring[(i + 1) % n].id, BoundaryTag::Outer);
}

double polygon_area(const std::vector<int>& ids,
                    const std::vector<Vec2>& nodes) {
  double a = 0.0;
  const int n = static_cast<int>(ids.size());
  for (int i = 0; i < n; ++i) {
    const Vec2& p = nodes[ids[i]];
    const Vec2& q = nodes[ids[(i + 1) % n]];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

std::vector<RingNode> make_ring(const std::vector<int>& ids,
                                const std::vector<Vec2>& nodes,
                                const Vec2& center) {
  std::vector<RingNode> ring(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    ring[i].id = ids[i];
    const Vec2 d = nodes[ids[i]] - center;
    ring[i].rho = d.norm();
    ring[i].dir = d / ring[i].rho;
    ring[i].rho0 = ring[i].rho;
    ring[i].dist = 0.0;
  }
  return ring;
}

}  // namespace

Mesh build_mesh(const GapGeometry& geom, int h_gap, double h_far) {
  validate_geometry(geom);
  if (h_gap < 4) throw ConfigError("build_mesh: h_gap must be >= 4");
  if (!(h_far > 0.0) || h_far > geom.outer_radius / 8.0)
    throw ConfigError("build_mesh: h_far must be in (0, outer_radius/8]");
  if (geom.epsilon < 1e-5 * geom.outer_radius)
    throw ConfigError(
        "build_mesh: epsilon below the resolvable floor (1e-5 * outer_radius); "
        "refusing to build a degenerate gap mesh");

  Builder bld{geom, h_gap, h_far, {}};
  bld.mesh.h_gap = h_gap;
  const int L = 2 * h_gap;

  const bool debug = std::getenv("LAMEGAP_MESH_DEBUG") != nullptr;
  auto phase = [&](const char* name) {
    if (debug)
      std::fprintf(stderr, "phase %s: %d nodes, %d tris\n", name,
                   bld.mesh.node_count(), bld.mesh.tri_count());
  };

  std::vector<double> xs;
  std::vector<int> layers;
  make_strip_partition(geom, L, h_far, xs, layers);
  auto cols = build_strip(bld, xs, layers);
  phase("strip");

  const double x_end = cols.back().x;
  const StripColumn& right = cols.back();
  const StripColumn& left = cols.front();

  // boundary marching outside the strip, both inclusions
  std::vector<std::vector<int>> march_right(2), march_left(2);
  for (int which = 0; which < 2; ++which) {
    const double corner_h =
        (geom.epsilon + graph_value(geom, 0, x_end) -
         graph_value(geom, 1, x_end)) /
        right.layers;
    const double dx_end = xs[xs.size() - 1] - xs[xs.size() - 2];
    const double start_spacing = std::max(corner_h, dx_end);
    const double scale = (geom.shape_kind == ShapeKind::Disk)
                             ? geom.radius[which]
                             : std::min(geom.mflat_half_width(),
                                        geom.mflat_half_height(which));
    const double cap = std::min(h_far, 0.35 * scale);
    march_right[which] =
        march_boundary(bld, which, x_end, start_spacing, cap);
    // mirror for the left half (pole at x=0 shared)
    auto& lm = march_left[which];
    for (size_t i = 0; i + 1 < march_right[which].size(); ++i) {
      const Vec2 p = bld.node(march_right[which][i]);
      lm.push_back(bld.add_node({-p.x(), p.y()}));
    }
  }

  // Gamma edges along the marched arcs
  for (int which = 0; which < 2; ++which) {
    const BoundaryTag tag =
        which == 0 ? BoundaryTag::Gamma1 : BoundaryTag::Gamma2;
    const int corner_r =
        which == 0 ? right.node_ids.back() : right.node_ids.front();
    const int corner_l =
        which == 0 ? left.node_ids.back() : left.node_ids.front();
    int prev = corner_r;
    for (int id : march_right[which]) {
      bld.add_bedge(prev, id, tag);
      prev = id;
    }
    prev = corner_l;
    for (int id : march_left[which]) {
      bld.add_bedge(prev, id, tag);
      prev = id;
    }
    // closing edge from last left-marched node to the pole
    const int pole = march_right[which].back();
    if (!march_left[which].empty())
      bld.add_bedge(march_left[which].back(), pole, tag);
    else
      bld.add_bedge(corner_l, pole, tag);
  }

  // inclusion interiors
  for (int which = 0; which < 2; ++which) {
    std::vector<int> cycle;
    if (which == 0) {
      for (const auto& c : cols) cycle.push_back(c.node_ids.back());
      for (int id : march_right[0]) cycle.push_back(id);
      for (size_t i = march_left[0].size(); i-- > 0;)
        cycle.push_back(march_left[0][i]);
    } else {
      // CCW around D2: along the graph right-to-left, then around the bottom
      for (size_t c = cols.size(); c-- > 0;)
        cycle.push_back(cols[c].node_ids.front());
      for (int id : march_left[1]) cycle.push_back(id);
      for (size_t i = march_right[1].size(); i-- > 0;)
        cycle.push_back(march_right[1][i]);
    }
    if (polygon_area(cycle, bld.mesh.nodes) <= 0.0)
      throw MeshError("inclusion boundary cycle is not counter-clockwise");
    const Vec2 center = geom.center(which);
    const double scale = (geom.shape_kind == ShapeKind::Disk)
                             ? geom.radius[which]
                             : std::min(geom.mflat_half_width(),
                                        geom.mflat_half_height(which));
    const double cap = std::min(h_far, 0.35 * scale);
    onion_inward(bld, make_ring(cycle, bld.mesh.nodes, center), center, cap,
                 inclusion_region(which));
    phase(which == 0 ? "incl1" : "incl2");
  }

  // far field: composite curve around (D1 u strip u D2), CCW about the origin
  {
    std::vector<int> cycle;
    for (int j = 0; j <= right.layers; ++j)
      cycle.push_back(right.node_ids[j]);  // right cut, bottom to top
    for (int id : march_right[0]) cycle.push_back(id);
    for (size_t i = march_left[0].size(); i-- > 0;) cycle.push_back(march_left[0][i]);
    for (int j = left.layers; j >= 0; --j)
      cycle.push_back(left.node_ids[j]);  // left cut, top to bottom
    for (int id : march_left[1]) cycle.push_back(id);
    for (size_t i = march_right[1].size(); i-- > 0;)
      cycle.push_back(march_right[1][i]);
    // drop duplicated corner/pole entries introduced by the shared ids
    std::vector<int> clean;
    for (int id : cycle)
      if (clean.empty() || (clean.back() != id && clean.front() != id))
        clean.push_back(id);
    if (polygon_area(clean, bld.mesh.nodes) <= 0.0)
      throw MeshError("far-field start cycle is not counter-clockwise");
    onion_outward(bld, make_ring(clean, bld.mesh.nodes, {0.0, 0.0}), h_far);
    phase("farfield");
  }

  if (std::getenv("LAMEGAP_MESH_NOGATE")) return std::move(bld.mesh);

  // invariant gate
  const QualityReport q = mesh_quality(bld.mesh);
  if (q.min_angle_deg < 15.0)
    throw MeshError("build_mesh: min angle below 15 degrees (" +
                    std::to_string(q.min_angle_deg) + ")");
  if (q.gap_layers < h_gap)
    throw MeshError("build_mesh: gap fiber crosses fewer than h_gap layers");
  const double fit = boundary_fit_residual(bld.mesh, geom);
  if (fit > 1e-10 * geom.outer_radius)
    throw MeshError("build_mesh: Gamma edges stray from the analytic boundary");
  return std::move(bld.mesh);
}

QualityReport mesh_quality(const Mesh& mesh) {
  QualityReport q;
  q.nodes = mesh.node_count();
  q.triangles = mesh.tri_count();
  q.min_angle_deg = 180.0;
  q.max_angle_deg = 0.0;
  q.min_area = std::numeric_limits<double>::max();

  for (int t = 0; t < mesh.tri_count(); ++t) {
    const double a = mesh.signed_area(t);
    if (!(a > 0.0))
      throw MeshError("mesh_quality: non-positive triangle area at index " +
                      std::to_string(t));
    q.min_area = std::min(q.min_area, a);
    const auto& tr = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const Vec2 p = mesh.nodes[tr.v[k]];
      const Vec2 u = mesh.nodes[tr.v[(k + 1) % 3]] - p;
      const Vec2 v = mesh.nodes[tr.v[(k + 2) % 3]] - p;
      const double ang =
          std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v)) *
          180.0 / M_PI;
      q.min_angle_deg = std::min(q.min_angle_deg, ang);
      q.max_angle_deg = std::max(q.max_angle_deg, ang);
    }
  }

  // conformity
  std::map<std::pair<int, int>, int> edge_count;
  std::map<std::pair<int, int>, std::pair<Region, Region>> edge_regions;
  auto key = [](int a, int b) {
    return std::make_pair(std::min(a, b), std::max(a, b));
  };
  for (const auto& tr : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto e = key(tr.v[k], tr.v[(k + 1) % 3]);
      auto [it, fresh] = edge_count.try_emplace(e, 0);
      if (it->second == 0)
        edge_regions[e] = {tr.region, tr.region};
      else
        edge_regions[e].second = tr.region;
      if (++it->second > 2)
        throw MeshError("mesh_quality: edge shared by more than two triangles");
    }
  }
  q.edges = static_cast<int>(edge_count.size());

  std::map<std::pair<int, int>, BoundaryTag> tagged;
  for (const auto& be : mesh.boundary_edges) {
    tagged[key(be.a, be.b)] = be.tag;
    switch (be.tag) {
      case BoundaryTag::Outer: ++q.outer_edges; break;
      case BoundaryTag::Gamma1: ++q.gamma1_edges; break;
      case BoundaryTag::Gamma2: ++q.gamma2_edges; break;
    }
  }
  for (const auto& [e, cnt] : edge_count) {
    auto it = tagged.find(e);
    if (cnt == 1) {
      if (it == tagged.end() || it->second != BoundaryTag::Outer)
        throw MeshError("mesh_quality: untagged or mistagged hull edge");
    } else if (it != tagged.end() && it->second != BoundaryTag::Outer) {
      const auto [r1, r2] = edge_regions[e];
      if (r1 == r2)
        throw MeshError("mesh_quality: Gamma edge not on a region interface");
    }
  }

  // gap layer count along the P1P2 fiber at x = 0
  double y_top = std::numeric_limits<double>::max();
  double y_bot = std::numeric_limits<double>::lowest();
  for (const auto& be : mesh.boundary_edges) {
    for (int id : {be.a, be.b}) {
      const double y = mesh.nodes[id].y();
      if (be.tag == BoundaryTag::Gamma1) y_top = std::min(y_top, y);
      if (be.tag == BoundaryTag::Gamma2) y_bot = std::max(y_bot, y);
    }
  }
  int crossings = 0;
  if (y_top > y_bot) {
    for (const auto& tr : mesh.triangles) {
      if (tr.region != Region::Matrix) continue;
      double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
      double lo = std::numeric_limits<double>::max(), hi = -lo;
      for (int v : tr.v) {
        xmin = std::min(xmin, mesh.nodes[v].x());
        xmax = std::max(xmax, mesh.nodes[v].x());
      }
      if (!(xmin < 0.0 && xmax > 0.0)) continue;
      // y-interval of the triangle at x = 0
      for (int k = 0; k < 3; ++k) {
        const Vec2 p = mesh.nodes[tr.v[k]];
        const Vec2 r = mesh.nodes[tr.v[(k + 1) % 3]];
        if ((p.x() < 0.0) == (r.x() < 0.0)) continue;
        const double t = -p.x() / (r.x() - p.x());
        const double y = p.y() + t * (r.y() - p.y());
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
      if (lo < hi && hi > y_bot && lo < y_top) ++crossings;
    }
  }
  q.gap_layers = crossings / 2;

  // Euler characteristic of the matrix submesh
  {
    std::map<std::pair<int, int>, int> medges;
    std::vector<char> mnode(mesh.nodes.size(), 0);
    int mtris = 0;
    for (const auto& tr : mesh.triangles) {
      if (tr.region != Region::Matrix) continue;
      ++mtris;
      for (int k = 0; k < 3; ++k) {
        mnode[tr.v[k]] = 1;
        medges[key(tr.v[k], tr.v[(k + 1) % 3])] = 1;
      }
    }
    int mnodes = 0;
    for (char c : mnode) mnodes += c;
    q.euler_matrix = mnodes - static_cast<int>(medges.size()) + mtris;
  }
  return q;
}

double boundary_fit_residual(const Mesh& mesh, const GapGeometry& geom) {
  double worst = 0.0;
  for (const auto& be : mesh.boundary_edges) {
    if (be.tag == BoundaryTag::Outer) {
      for (int id : {be.a, be.b})
        worst = std::max(
            worst, std::abs(mesh.nodes[id].norm() - geom.outer_radius));
    } else {
      const int which = (be.tag == BoundaryTag::Gamma1) ? 0 : 1;
      for (int id : {be.a, be.b})
        worst = std::max(worst,
                         boundary_residual(geom, which, mesh.nodes[id]));
    }
  }
  return worst;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh out;
  out.nodes = mesh.nodes;
  out.h_gap = mesh.h_gap * 2;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto k = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = midpoint.find(k);
    if (it != midpoint.end()) return it->second;
    out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    const int id = static_cast<int>(out.nodes.size()) - 1;
    midpoint.emplace(k, id);
    return id;
  };
  for (const auto& tr : mesh.triangles) {
    const int a = tr.v[0], b = tr.v[1], c = tr.v[2];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    out.triangles.push_back({{a, ab, ca}, tr.region});
    out.triangles.push_back({{ab, b, bc}, tr.region});
    out.triangles.push_back({{ca, bc, c}, tr.region});
    out.triangles.push_back({{ab, bc, ca}, tr.region});
  }
  for (const auto& be : mesh.boundary_edges) {
    const int m = mid(be.a, be.b);
    out.boundary_edges.push_back({be.a, m, be.tag});
    out.boundary_edges.push_back({m, be.b, be.tag});
  }
  return out;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os.precision(17);
  for (const auto& p : mesh.nodes) os << "n " << p.x() << " " << p.y() << "\n";
  for (const auto& t : mesh.triangles)
    os << "t " << t.v[0] << " " << t.v[1] << " " << t.v[2] << " "
       << static_cast<int>(t.region) << "\n";
  for (const auto& b : mesh.boundary_edges)
    os << "b " << b.a << " " << b.b << " " << static_cast<int>(b.tag) << "\n";
}

Mesh read_mesh(std::istream& is) {
  Mesh mesh;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    char kind;
    ss >> kind;
    if (kind == 'n') {
      double x, y;
      ss >> x >> y;
      mesh.nodes.emplace_back(x, y);
    } else if (kind == 't') {
      int i, j, k, r;
      ss >> i >> j >> k >> r;
      mesh.triangles.push_back({{i, j, k}, static_cast<Region>(r)});
    } else if (kind == 'b') {
      int i, j, t;
      ss >> i >> j >> t;
      mesh.boundary_edges.push_back({i, j, static_cast<BoundaryTag>(t)});
    } else {
      throw MeshError("read_mesh: unknown record '" + line + "'");
    }
  }
  return mesh;
}

}  // namespace lamegap
