#include "extasym/grid.hpp"

#include "extasym/csv.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace extasym {

std::string to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Interior: return "interior";
    case NodeClass::InnerBoundary: return "inner_boundary";
    case NodeClass::OuterBoundary: return "outer_boundary";
  }
  return "unknown";
}

namespace {

int exact_multiple(double r, double h, const char* what) {
  const double q = r / h;
  const long k = std::lround(q);
  if (std::abs(q - static_cast<double>(k)) > 1e-9 * std::max(1.0, q)) {
    std::ostringstream os;
    os << "AnnulusGrid: " << what << " = " << r << " is not a multiple of h = " << h;
    throw InvalidInput(os.str());
  }
  return static_cast<int>(k);
}

}  // namespace

AnnulusGrid::AnnulusGrid(int n, double r_in, double r_out, double h) : n_(n), h_(h) {
  if (n != 2 && n != 3) throw InvalidInput("AnnulusGrid: n must be 2 or 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("AnnulusGrid: h must be positive");
  m_in_ = exact_multiple(r_in, h, "r_in");
  m_out_ = exact_multiple(r_out, h, "r_out");
  if (m_in_ < 1) throw InvalidInput("AnnulusGrid: r_in must be at least h");
  if (m_out_ < m_in_ + 8) throw InvalidInput("AnnulusGrid: r_out must be at least r_in + 8h");
  side_ = 2 * m_out_ + 1;
  stencil_width_ = 2 * n + 2 * n * (n - 1);

  std::size_t box = 1;
  for (int i = 0; i < n; ++i) box *= static_cast<std::size_t>(side_);
  box_to_node_.assign(box, -1);

  std::array<int, 3> idx{0, 0, 0};
  for (std::size_t b = 0; b < box; ++b) {
    // b enumerates the box with x₁ slowest, matching lexicographic order.
    std::size_t rem = b;
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % side_);
      rem /= side_;
    }
    int maxabs = 0;
    for (int i = 0; i < n; ++i) maxabs = std::max(maxabs, std::abs(idx[i] - m_out_));
    if (maxabs < m_in_) continue;
    const auto id = static_cast<std::int32_t>(cls_.size());
    box_to_node_[b] = id;
    idx_.push_back(idx);
    if (maxabs == m_out_) {
      cls_.push_back(NodeClass::OuterBoundary);
      outer_.push_back(id);
      slot_.push_back(-1);
    } else if (maxabs == m_in_) {
      cls_.push_back(NodeClass::InnerBoundary);
      inner_.push_back(id);
      slot_.push_back(-1);
    } else {
      cls_.push_back(NodeClass::Interior);
      slot_.push_back(static_cast<std::int32_t>(interior_.size()));
      interior_.push_back(id);
    }
  }

  stencil_.resize(interior_.size() * stencil_width_);
  std::array<int, 3> off{0, 0, 0};
  for (std::size_t s = 0; s < interior_.size(); ++s) {
    std::int32_t* out = stencil_.data() + s * stencil_width_;
    int k = 0;
    const std::size_t node = interior_[s];
    for (int i = 0; i < n; ++i) {
      for (int sgn : {+1, -1}) {
        off = {0, 0, 0};
        off[i] = sgn;
        out[k++] = neighbor(node, std::span<const int>(off.data(), n));
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (auto [si, sj] : {std::pair{1, 1}, std::pair{1, -1}, std::pair{-1, 1}, std::pair{-1, -1}}) {
          off = {0, 0, 0};
          off[i] = si;
          off[j] = sj;
          out[k++] = neighbor(node, std::span<const int>(off.data(), n));
        }
      }
    }
    for (int q = 0; q < stencil_width_; ++q)
      if (out[q] < 0) throw Error("AnnulusGrid: interior node with incomplete stencil");
  }
}

std::size_t AnnulusGrid::box_index(std::span<const int> idx) const {
  std::size_t b = 0;
  for (int i = 0; i < n_; ++i) b = b * side_ + static_cast<std::size_t>(idx[i]);
  return b;
}

Point AnnulusGrid::coord(std::size_t node) const {
  Point x(n_);
  for (int i = 0; i < n_; ++i) x(i) = (idx_[node][i] - m_out_) * h_;
  return x;
}

std::int32_t AnnulusGrid::neighbor(std::size_t node, std::span<const int> offset) const {
  std::array<int, 3> idx = idx_[node];
  for (int i = 0; i < n_; ++i) {
    idx[i] += offset[i];
    if (idx[i] < 0 || idx[i] >= side_) return -1;
  }
  return box_to_node_[box_index(std::span<const int>(idx.data(), n_))];
}

std::vector<std::int32_t> AnnulusGrid::shell_nodes(double r_lo, double r_hi) const {
  std::vector<std::int32_t> out;
  for (std::int32_t node : interior_) {
    const double r = radius(node);
    if (r >= r_lo && r < r_hi) out.push_back(node);
  }
  return out;
}

Field::Field(std::shared_ptr<const AnnulusGrid> grid, double fill)
    : grid_(std::move(grid)), values_(grid_->node_count(), fill) {}

Field::Field(std::shared_ptr<const AnnulusGrid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->node_count()) throw InvalidInput("Field: value count does not match node count");
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field sample(std::shared_ptr<const AnnulusGrid> grid, const PointFn& g) {
  Field f(grid);
  for (std::size_t i = 0; i < grid->node_count(); ++i) f[i] = g(grid->coord(i));
  return f;
}

Field impose_boundary(const Field& f, const PointFn& g) {
  Field out = f;
  const AnnulusGrid& grid = f.grid();
  auto put = [&](std::span<const std::int32_t> nodes) {
    for (std::int32_t node : nodes) {
      const double v = g(grid.coord(node));
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "impose_boundary: non-finite boundary value at node " << node;
        throw InvalidInput(os.str());
      }
      out[node] = v;
    }
  };
  put(grid.inner_boundary());
  put(grid.outer_boundary());
  return out;
}

SymMatrix hessian_at(const Field& f, std::size_t node) {
  const AnnulusGrid& g = f.grid();
  const std::int32_t slot = g.interior_slot(node);
  if (slot < 0) throw InvalidInput("hessian_at: node " + std::to_string(node) + " is not interior");
  const int n = g.dim();
  const std::span<const std::int32_t> st = g.stencil(slot);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const double u0 = f[node];
  SymMatrix H(n);
  int k = 0;
  for (int i = 0; i < n; ++i, k += 2) H.set(i, i, (f[st[k]] - 2.0 * u0 + f[st[k + 1]]) * inv_h2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, k += 4)
      H.set(i, j, (f[st[k]] - f[st[k + 1]] - f[st[k + 2]] + f[st[k + 3]]) * 0.25 * inv_h2);
  return H;
}

Point gradient_at(const Field& f, std::size_t node) {
  const AnnulusGrid& g = f.grid();
  const int n = g.dim();
  Point grad(n);
  for (int i = 0; i < n; ++i) {
    std::array<int, 3> off{0, 0, 0};
    auto at = [&](int s) {
      off = {0, 0, 0};
      off[i] = s;
      return g.neighbor(node, std::span<const int>(off.data(), n));
    };
    const std::int32_t p1 = at(1), m1 = at(-1);
    if (p1 >= 0 && m1 >= 0) {
      grad(i) = (f[p1] - f[m1]) / (2.0 * g.h());
    } else if (p1 >= 0 && at(2) >= 0) {
      grad(i) = (-3.0 * f[node] + 4.0 * f[p1] - f[at(2)]) / (2.0 * g.h());
    } else if (m1 >= 0 && at(-2) >= 0) {
      grad(i) = (3.0 * f[node] - 4.0 * f[m1] + f[at(-2)]) / (2.0 * g.h());
    } else {
      throw Error("gradient_at: no admissible stencil at node " + std::to_string(node));
    }
  }
  return grad;
}

void write_field_csv(std::ostream& os, const Field& f) {
  const AnnulusGrid& g = f.grid();
  std::vector<std::string> cols;
  for (int i = 0; i < g.dim(); ++i) cols.push_back("x" + std::to_string(i + 1));
  cols.push_back("class");
  cols.push_back("value");
  CsvWriter csv(os, "field", 1, cols);
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    const Point x = g.coord(node);
    std::vector<std::string> row;
    for (int i = 0; i < g.dim(); ++i) row.push_back(format_double(x(i)));
    row.push_back(to_string(g.node_class(node)));
    row.push_back(format_double(f[node]));
    csv.row(row);
  }
}

}  // namespace extasym
