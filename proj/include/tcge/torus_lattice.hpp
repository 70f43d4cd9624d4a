#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace tcge {

using VertexId = std::uint32_t;
using LinkId = std::uint32_t;

enum class Orientation : std::uint8_t { horizontal = 0, vertical = 1 };

// L x L periodic square lattice. Classical spins live on vertices, qubits on
// links. Vertex (x, y) has id x + L*y; link 2*v + o leaves vertex v in the +x
// (o = 0) or +y (o = 1) direction, so v is the link's anchor.
class TorusGeometry {
 public:
  explicit TorusGeometry(int size);

  int size() const { return size_; }
  std::size_t n_spins() const { return static_cast<std::size_t>(size_) * size_; }
  std::size_t n_links() const { return 2 * n_spins(); }

  VertexId vertex(int x, int y) const;
  int x_of(VertexId v) const { return static_cast<int>(v) % size_; }
  int y_of(VertexId v) const { return static_cast<int>(v) / size_; }
  LinkId link(int x, int y, Orientation o) const;

  // Throws std::out_of_range for link >= n_links().
  std::pair<VertexId, VertexId> endpoints(LinkId link) const;
  Orientation orientation(LinkId link) const;
  VertexId anchor(LinkId link) const { return link / 2; }

  // The four links touching v. At L = 2 two of them may join the same pair.
  std::span<const LinkId, 4> incident_links(VertexId v) const {
    return std::span<const LinkId, 4>(incidence_.data() + 4 * std::size_t{v}, 4);
  }
  // Vertex across each incident link, in incident_links() order.
  std::span<const VertexId, 4> neighbors(VertexId v) const {
    return std::span<const VertexId, 4>(neighbors_.data() + 4 * std::size_t{v}, 4);
  }

  bool operator==(const TorusGeometry&) const = default;

 private:
  int size_;
  std::vector<std::array<VertexId, 2>> endpoints_;
  std::vector<LinkId> incidence_;
  std::vector<VertexId> neighbors_;
};

// Throws std::invalid_argument for L < 2.
TorusGeometry build_geometry(int size);

std::pair<VertexId, VertexId> link_endpoints(const TorusGeometry& geom, LinkId link);

enum class PairKind : std::uint8_t { hh = 0, hv = 1, vv = 2 };

const char* to_string(PairKind kind);

// Orbit of unordered link pairs under lattice translations. For hh/vv the
// displacement is the lexicographically smaller of d and -d (mod L); for hv it
// is anchor(vertical) - anchor(horizontal) (mod L).
struct PairClass {
  PairKind kind;
  int dx;
  int dy;
  std::uint64_t multiplicity;

  bool operator==(const PairClass&) const = default;
};

// Sorted by (kind, dx, dy). Multiplicities come from exhaustive enumeration
// of all n_links*(n_links-1)/2 pairs.
std::vector<PairClass> classify_pairs(const TorusGeometry& geom);

// Lookup structure over classify_pairs(): maps link pairs and raw
// displacements to class indices.
class PairClassTable {
 public:
  explicit PairClassTable(const TorusGeometry& geom);

  int size() const { return size_; }
  const std::vector<PairClass>& classes() const { return classes_; }
  std::size_t n_classes() const { return classes_.size(); }

  // Class index for a raw displacement (dx, dy) in [0, L) between anchors;
  // -1 for the self-pair (same-orientation, zero displacement).
  int index(PairKind kind, int dx, int dy) const {
    return lookup_[static_cast<std::size_t>(kind)][dx + size_ * dy];
  }
  // Throws std::invalid_argument if a == b.
  int class_of(const TorusGeometry& geom, LinkId a, LinkId b) const;

  // Minimum-image squared distance between anchors of a class.
  int distance_squared(std::size_t cls) const;

  std::uint64_t total_pairs() const;

 private:
  int size_;
  std::vector<PairClass> classes_;
  std::array<std::vector<int>, 3> lookup_;
};

}  // namespace tcge
