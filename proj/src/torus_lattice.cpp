#include "tcge/torus_lattice.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>

namespace tcge {

namespace {

int wrap(int a, int n) { return ((a % n) + n) % n; }

struct RawKey {
  PairKind kind;
  int dx;
  int dy;
  auto operator<=>(const RawKey&) const = default;
};

RawKey canonical_key(const TorusGeometry& geom, LinkId a, LinkId b) {
  const int L = geom.size();
  const Orientation oa = geom.orientation(a);
  const Orientation ob = geom.orientation(b);
  const VertexId pa = geom.anchor(a);
  const VertexId pb = geom.anchor(b);
  if (oa != ob) {
    const VertexId h = oa == Orientation::horizontal ? pa : pb;
    const VertexId v = oa == Orientation::horizontal ? pb : pa;
    return {PairKind::hv, wrap(geom.x_of(v) - geom.x_of(h), L),
            wrap(geom.y_of(v) - geom.y_of(h), L)};
  }
  const int dx = wrap(geom.x_of(pb) - geom.x_of(pa), L);
  const int dy = wrap(geom.y_of(pb) - geom.y_of(pa), L);
  const int mx = wrap(-dx, L);
  const int my = wrap(-dy, L);
  const auto [cx, cy] = std::min(std::pair{dx, dy}, std::pair{mx, my});
  return {oa == Orientation::horizontal ? PairKind::hh : PairKind::vv, cx, cy};
}

}  // namespace

TorusGeometry::TorusGeometry(int size) : size_(size) {
  if (size < 2) {
    throw std::invalid_argument("lattice size must be >= 2, got " + std::to_string(size));
  }
  const std::size_t ns = n_spins();
  endpoints_.resize(2 * ns);
  incidence_.resize(4 * ns);
  neighbors_.resize(4 * ns);
  for (int y = 0; y < size_; ++y) {
    for (int x = 0; x < size_; ++x) {
      const VertexId v = vertex(x, y);
      endpoints_[2 * v] = {v, vertex(x + 1, y)};
      endpoints_[2 * v + 1] = {v, vertex(x, y + 1)};
    }
  }
  // Incident links per vertex: +x, +y, -x, -y.
  for (int y = 0; y < size_; ++y) {
    for (int x = 0; x < size_; ++x) {
      const VertexId v = vertex(x, y);
      const std::array<LinkId, 4> links = {
          link(x, y, Orientation::horizontal), link(x, y, Orientation::vertical),
          link(x - 1, y, Orientation::horizontal), link(x, y - 1, Orientation::vertical)};
      for (int k = 0; k < 4; ++k) {
        incidence_[4 * v + k] = links[k];
        const auto [u, w] = endpoints_[links[k]];
        neighbors_[4 * v + k] = u == v ? w : u;
      }
    }
  }
}

VertexId TorusGeometry::vertex(int x, int y) const {
  return static_cast<VertexId>(wrap(x, size_) + size_ * wrap(y, size_));
}

LinkId TorusGeometry::link(int x, int y, Orientation o) const {
  return 2 * vertex(x, y) + static_cast<LinkId>(o);
}

std::pair<VertexId, VertexId> TorusGeometry::endpoints(LinkId link) const {
  if (link >= endpoints_.size()) {
    throw std::out_of_range("link id " + std::to_string(link) + " out of range");
  }
  return {endpoints_[link][0], endpoints_[link][1]};
}

Orientation TorusGeometry::orientation(LinkId link) const {
  if (link >= endpoints_.size()) {
    throw std::out_of_range("link id " + std::to_string(link) + " out of range");
  }
  return static_cast<Orientation>(link & 1U);
}

TorusGeometry build_geometry(int size) { return TorusGeometry(size); }

std::pair<VertexId, VertexId> link_endpoints(const TorusGeometry& geom, LinkId link) {
  return geom.endpoints(link);
}

const char* to_string(PairKind kind) {
  switch (kind) {
    case PairKind::hh: return "hh";
    case PairKind::hv: return "hv";
    case PairKind::vv: return "vv";
  }
  return "?";
}

std::vector<PairClass> classify_pairs(const TorusGeometry& geom) {
  const int L = geom.size();
  const std::size_t cells = static_cast<std::size_t>(L) * L;
  std::vector<std::uint64_t> counts(3 * cells, 0);
  const auto n = static_cast<LinkId>(geom.n_links());
  for (LinkId a = 0; a < n; ++a) {
    for (LinkId b = a + 1; b < n; ++b) {
      const RawKey key = canonical_key(geom, a, b);
      ++counts[static_cast<std::size_t>(key.kind) * cells + key.dx + L * key.dy];
    }
  }
  // Flat index order (kind, dy, dx) differs from the (kind, dx, dy) key order.
  std::vector<PairClass> out;
  for (std::size_t k = 0; k < 3; ++k) {
    for (int dx = 0; dx < L; ++dx) {
      for (int dy = 0; dy < L; ++dy) {
        const std::uint64_t m = counts[k * cells + dx + L * dy];
        if (m > 0) out.push_back({static_cast<PairKind>(k), dx, dy, m});
      }
    }
  }
  return out;
}

PairClassTable::PairClassTable(const TorusGeometry& geom)
    : size_(geom.size()), classes_(classify_pairs(geom)) {
  const int L = size_;
  for (auto& table : lookup_) table.assign(static_cast<std::size_t>(L) * L, -1);
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const PairClass& pc = classes_[c];
    auto& table = lookup_[static_cast<std::size_t>(pc.kind)];
    table[pc.dx + L * pc.dy] = static_cast<int>(c);
    if (pc.kind != PairKind::hv) {
      table[wrap(-pc.dx, L) + L * wrap(-pc.dy, L)] = static_cast<int>(c);
    }
  }
}

int PairClassTable::class_of(const TorusGeometry& geom, LinkId a, LinkId b) const {
  if (a == b) throw std::invalid_argument("pair class requires two distinct links");
  const RawKey key = canonical_key(geom, a, b);
  return index(key.kind, key.dx, key.dy);
}

int PairClassTable::distance_squared(std::size_t cls) const {
  const PairClass& pc = classes_.at(cls);
  const int mx = std::min(pc.dx, size_ - pc.dx);
  const int my = std::min(pc.dy, size_ - pc.dy);
  return mx * mx + my * my;
}

std::uint64_t PairClassTable::total_pairs() const {
  std::uint64_t total = 0;
  for (const auto& pc : classes_) total += pc.multiplicity;
  return total;
}

}  // namespace tcge
