#pragma once

#include "extasym/sym_matrix.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace extasym {

enum class NodeClass : std::uint8_t { Interior, InnerBoundary, OuterBoundary };

std::string to_string(NodeClass c);

/// Cartesian exterior domain: the box [−r_out, r_out]^n with the open box
/// (−r_in, r_in)^n removed, sampled at spacing h. Nodes are numbered
/// lexicographically by coordinates (x₁ slowest).
///
/// Every interior node owns the full narrow Hessian stencil (the 3^n cube
/// minus the corners in 3D), since a neighbor's max-norm differs from the
/// node's by at most h.
class AnnulusGrid {
public:
  /// r_in and r_out must be integer multiples of h with r_in >= h and
  /// r_out >= r_in + 8h.
  AnnulusGrid(int n, double r_in, double r_out, double h);

  int dim() const { return n_; }
  double r_in() const { return m_in_ * h_; }
  double r_out() const { return m_out_ * h_; }
  double h() const { return h_; }
  int cells_in() const { return m_in_; }
  int cells_out() const { return m_out_; }

  std::size_t node_count() const { return cls_.size(); }
  std::size_t interior_count() const { return interior_.size(); }
  NodeClass node_class(std::size_t node) const { return cls_[node]; }
  Point coord(std::size_t node) const;
  double radius(std::size_t node) const { return coord(node).norm(); }

  /// Interior node ids in lexicographic order.
  std::span<const std::int32_t> interior() const { return interior_; }
  std::span<const std::int32_t> inner_boundary() const { return inner_; }
  std::span<const std::int32_t> outer_boundary() const { return outer_; }
  /// Position of a node within interior(), or −1.
  std::int32_t interior_slot(std::size_t node) const { return slot_[node]; }

  /// Node at integer offset from `node`, or −1 when outside the annulus.
  std::int32_t neighbor(std::size_t node, std::span<const int> offset) const;

  /// Stencil layout per interior slot: for each axis i the pair (+e_i, −e_i),
  /// then for each i < j the quadruple (++, +−, −+, −−).
  int stencil_width() const { return stencil_width_; }
  std::span<const std::int32_t> stencil(std::size_t slot) const {
    return {stencil_.data() + slot * stencil_width_, static_cast<std::size_t>(stencil_width_)};
  }

  /// Interior nodes with Euclidean radius in [r_lo, r_hi), lexicographic.
  std::vector<std::int32_t> shell_nodes(double r_lo, double r_hi) const;

  /// Lexicographically first inner-boundary node (the corner −r_in·(1,…,1)).
  std::int32_t anchor_node() const { return inner_.front(); }

private:
  std::size_t box_index(std::span<const int> idx) const;

  int n_;
  double h_;
  int m_in_;
  int m_out_;
  int side_;
  int stencil_width_;
  std::vector<std::int32_t> box_to_node_;
  std::vector<std::array<int, 3>> idx_;
  std::vector<NodeClass> cls_;
  std::vector<std::int32_t> interior_, inner_, outer_, slot_;
  std::vector<std::int32_t> stencil_;
};

/// One real value per node of a grid.
class Field {
public:
  explicit Field(std::shared_ptr<const AnnulusGrid> grid, double fill = 0.0);
  Field(std::shared_ptr<const AnnulusGrid> grid, std::vector<double> values);

  const AnnulusGrid& grid() const { return *grid_; }
  const std::shared_ptr<const AnnulusGrid>& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t node) const { return values_[node]; }
  double& operator[](std::size_t node) { return values_[node]; }

  bool all_finite() const;

private:
  std::shared_ptr<const AnnulusGrid> grid_;
  std::vector<double> values_;
};

using PointFn = std::function<double(const Point&)>;

/// Samples g at every node.
Field sample(std::shared_ptr<const AnnulusGrid> grid, const PointFn& g);

/// Copy of f with boundary values overwritten by g. Rejects non-finite g.
Field impose_boundary(const Field& f, const PointFn& g);

/// Discrete Hessian at an interior node.
SymMatrix hessian_at(const Field& f, std::size_t node);

/// Central differences where both neighbors exist, one-sided second-order
/// differences otherwise.
Point gradient_at(const Field& f, std::size_t node);

/// Header "x1,…,xn,class,value", preceded by a schema line.
void write_field_csv(std::ostream& os, const Field& f);

}  // namespace extasym
