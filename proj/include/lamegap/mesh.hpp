#pragma once

#include "lamegap/geometry.hpp"
#include "lamegap/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace lamegap {

enum class Region : std::uint8_t { Matrix = 0, Incl1 = 1, Incl2 = 2 };
enum class BoundaryTag : std::uint8_t { Outer = 0, Gamma1 = 1, Gamma2 = 2 };

inline Region inclusion_region(int i) {
  return (i == 0) ? Region::Incl1 : Region::Incl2;
}

/// Conforming triangulation of the full outer disk. Inclusion interiors are
/// meshed (regions Incl1/Incl2); Gamma edges are the interfaces between the
/// matrix and the inclusions, Outer edges lie on the outer circle.
struct Mesh {
  struct Tri {
    std::array<int, 3> v;  // counter-clockwise
    Region region;
  };
  struct BEdge {
    int a, b;
    BoundaryTag tag;
  };

  std::vector<Vec2> nodes;
  std::vector<Tri> triangles;
  std::vector<BEdge> boundary_edges;
  int h_gap = 0;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int tri_count() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const {
    const auto& tr = triangles[t];
    const Vec2 e1 = nodes[tr.v[1]] - nodes[tr.v[0]];
    const Vec2 e2 = nodes[tr.v[2]] - nodes[tr.v[0]];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
  }
};

struct QualityReport {
  double min_angle_deg = 0.0;
  double max_angle_deg = 0.0;
  double min_area = 0.0;
  int gap_layers = 0;  // element layers crossed by the P1P2 fiber
  int nodes = 0;
  int triangles = 0;
  int edges = 0;
  int outer_edges = 0;
  int gamma1_edges = 0;
  int gamma2_edges = 0;
  // Euler characteristic of the matrix submesh; -1 for two holes.
  int euler_matrix = 0;
};

/// Builds the graded mesh. Element heights across the gap are
/// 2*delta(z1)/(2*h_gap) so the fiber at x1 = 0 crosses 2*h_gap layers;
/// horizontal sizes are capped by sqrt(eps*max(eps,|z1|)) and by a fixed
/// aspect bound. Construction is deterministic.
/// Throws ConfigError when epsilon is below the resolvable floor
/// (1e-5 * outer_radius) and MeshError when a quality invariant fails.
Mesh build_mesh(const GapGeometry& geom, int h_gap, double h_far);

/// Computes the quality report; throws MeshError on invariant violations
/// (flipped triangles, nonconforming edges). Pure function of the mesh.
QualityReport mesh_quality(const Mesh& mesh);

/// Checks that Gamma-tagged edge endpoints lie within tol of the analytic
/// inclusion boundaries. Returns the worst residual.
double boundary_fit_residual(const Mesh& mesh, const GapGeometry& geom);

/// Red refinement: every triangle split into four via edge midpoints.
/// Boundary midpoints stay on the chords (the polygonal domain is preserved
/// exactly), so refined meshes are for verification studies, not for
/// re-checking analytic boundary fit.
Mesh refine_uniform(const Mesh& mesh);

// Plain-text mesh format, one entity per line (see docs/mesh-format.md):
//   n x y
//   t i j k region
//   b i j tag
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

}  // namespace lamegap
