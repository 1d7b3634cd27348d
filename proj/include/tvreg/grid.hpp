#pragma once

// Masked 3D domain and the discrete differential operators living on it.
//
// Active voxels are numbered in (k, j, i) lexicographic order (k slowest),
// which is also the order of the flat grid index `i + p_i * (j + p_j * k)`.
// A site outside the grid is treated exactly like a site outside the mask.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tvreg/error.hpp"
#include "tvreg/power_method.hpp"

namespace tvreg {

using Index = Eigen::Index;

struct Dims {
  int ni = 0;
  int nj = 0;
  int nk = 0;

  Index volume() const {
    return static_cast<Index>(ni) * static_cast<Index>(nj) *
           static_cast<Index>(nk);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct Coord {
  int i = 0;
  int j = 0;
  int k = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

inline std::string to_string(const Dims& d) {
  return std::to_string(d.ni) + "x" + std::to_string(d.nj) + "x" +
         std::to_string(d.nk);
}

class Mask;
SpectralEstimate laplacian_lipschitz(const Mask& mask, std::uint64_t seed = 0,
                                     double tol = 1e-7, int max_iter = 10000);

class Mask {
 public:
  static constexpr Index kNone = -1;

  /// `flags` holds one byte per lattice site in flat grid order; nonzero
  /// means inside.
  Mask(Dims dims, std::vector<std::uint8_t> flags)
      : dims_(dims), flags_(std::move(flags)) {
    if (dims_.ni <= 0 || dims_.nj <= 0 || dims_.nk <= 0)
      throw InvalidArgument("mask dimensions must be positive, got " +
                            to_string(dims_));
    if (static_cast<Index>(flags_.size()) != dims_.volume())
      throw DimensionError("mask flag count " + std::to_string(flags_.size()) +
                           " does not match grid " + to_string(dims_));
    for (auto& f : flags_) f = f ? 1 : 0;
    build_index();
    if (active_.empty()) throw InvalidArgument("mask has no active voxel");
  }

  static Mask full(Dims dims) {
    return Mask(dims, std::vector<std::uint8_t>(
                          static_cast<std::size_t>(std::max<Index>(
                              dims.volume(), 0)),
                          1));
  }

  const Dims& dims() const { return dims_; }
  /// Number of active voxels (p).
  Index size() const { return static_cast<Index>(active_.size()); }
  const std::vector<std::uint8_t>& flags() const { return flags_; }

  Index flat_index(int i, int j, int k) const {
    return static_cast<Index>(i) +
           dims_.ni * (static_cast<Index>(j) + dims_.nj * static_cast<Index>(k));
  }
  bool in_grid(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_.ni && j < dims_.nj &&
           k < dims_.nk;
  }
  bool contains(int i, int j, int k) const {
    return in_grid(i, j, k) && flags_[flat_index(i, j, k)] != 0;
  }

  /// Active ordinal of a site, or kNone.
  Index ordinal(int i, int j, int k) const {
    return in_grid(i, j, k) ? ordinal_of_flat_[flat_index(i, j, k)] : kNone;
  }
  Index ordinal_of_flat(Index flat) const { return ordinal_of_flat_[flat]; }
  Index flat_of_ordinal(Index ord) const { return active_[ord]; }

  Coord coords(Index ord) const {
    const Index flat = active_[ord];
    const Index plane = static_cast<Index>(dims_.ni) * dims_.nj;
    return {static_cast<int>(flat % dims_.ni),
            static_cast<int>((flat % plane) / dims_.ni),
            static_cast<int>(flat / plane)};
  }

  /// Ordinal of the +1 neighbour along `axis` (0 = i, 1 = j, 2 = k).
  Index forward(int axis, Index ord) const { return fwd_[axis][ord]; }
  Index backward(int axis, Index ord) const { return bwd_[axis][ord]; }

  bool same_geometry(const Mask& other) const {
    return this == &other || (dims_ == other.dims_ && flags_ == other.flags_);
  }

  /// Spectral norm of div∘grad on this mask, computed once per mask geometry
  /// with the default power-method settings. Thread-safe.
  double laplacian_norm() const {
    std::call_once(cache_->once, [this] {
      cache_->value = laplacian_lipschitz(*this).value;
    });
    return cache_->value;
  }

 private:
  struct NormCache {
    std::once_flag once;
    double value = 0.0;
  };

  void build_index() {
    const Index total = dims_.volume();
    ordinal_of_flat_.assign(static_cast<std::size_t>(total), kNone);
    active_.clear();
    for (Index flat = 0; flat < total; ++flat) {
      if (flags_[flat]) {
        ordinal_of_flat_[flat] = static_cast<Index>(active_.size());
        active_.push_back(flat);
      }
    }
    const Index p = static_cast<Index>(active_.size());
    for (int a = 0; a < 3; ++a) {
      fwd_[a].assign(static_cast<std::size_t>(p), kNone);
      bwd_[a].assign(static_cast<std::size_t>(p), kNone);
    }
    for (Index o = 0; o < p; ++o) {
      const Coord c = coords(o);
      const std::array<Coord, 3> next = {Coord{c.i + 1, c.j, c.k},
                                         Coord{c.i, c.j + 1, c.k},
                                         Coord{c.i, c.j, c.k + 1}};
      for (int a = 0; a < 3; ++a) {
        const Index n = ordinal(next[a].i, next[a].j, next[a].k);
        fwd_[a][o] = n;
        if (n != kNone) bwd_[a][n] = o;
      }
    }
  }

  Dims dims_;
  std::vector<std::uint8_t> flags_;
  std::vector<Index> active_;
  std::vector<Index> ordinal_of_flat_;
  std::array<std::vector<Index>, 3> fwd_;
  std::array<std::vector<Index>, 3> bwd_;
  std::shared_ptr<NormCache> cache_ = std::make_shared<NormCache>();
};

using MaskPtr = std::shared_ptr<const Mask>;

inline MaskPtr make_mask(Dims dims, std::vector<std::uint8_t> flags) {
  return std::make_shared<const Mask>(dims, std::move(flags));
}
inline MaskPtr make_full_mask(Dims dims) {
  return std::make_shared<const Mask>(Mask::full(dims));
}

inline bool same_domain(const MaskPtr& a, const MaskPtr& b) {
  return a && b && (a == b || a->same_geometry(*b));
}

/// Scalar field over the active voxels of a mask.
class MaskedVolume {
 public:
  MaskedVolume() = default;
  explicit MaskedVolume(MaskPtr mask)
      : mask_(std::move(mask)), values_(Eigen::VectorXd::Zero(mask_->size())) {}
  MaskedVolume(MaskPtr mask, Eigen::VectorXd values)
      : mask_(std::move(mask)), values_(std::move(values)) {
    if (values_.size() != mask_->size())
      throw DimensionError("volume has " + std::to_string(values_.size()) +
                           " values for a mask of " +
                           std::to_string(mask_->size()) + " voxels");
  }
  static MaskedVolume constant(MaskPtr mask, double c) {
    const Index p = mask->size();
    return MaskedVolume(std::move(mask), Eigen::VectorXd::Constant(p, c));
  }

  const MaskPtr& mask() const { return mask_; }
  Index size() const { return values_.size(); }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Ref<Eigen::VectorXd> values() { return values_; }
  double operator[](Index o) const { return values_[o]; }
  double& operator[](Index o) { return values_[o]; }

 private:
  MaskPtr mask_;
  Eigen::VectorXd values_;
};

/// Three-component field (one forward difference per axis) over a mask.
class VectorField {
 public:
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, 3>;

  VectorField() = default;
  explicit VectorField(MaskPtr mask)
      : mask_(std::move(mask)), comps_(Storage::Zero(mask_->size(), 3)) {}
  VectorField(MaskPtr mask, Storage comps)
      : mask_(std::move(mask)), comps_(std::move(comps)) {
    if (comps_.rows() != mask_->size())
      throw DimensionError("vector field rows do not match the mask");
  }

  const MaskPtr& mask() const { return mask_; }
  Index size() const { return comps_.rows(); }
  const Storage& components() const { return comps_; }
  Storage& components() { return comps_; }
  auto x() const { return comps_.col(0); }
  auto y() const { return comps_.col(1); }
  auto z() const { return comps_.col(2); }
  auto x() { return comps_.col(0); }
  auto y() { return comps_.col(1); }
  auto z() { return comps_.col(2); }

 private:
  MaskPtr mask_;
  Storage comps_;
};

namespace detail {

inline void gradient_into(const Mask& m, const Eigen::VectorXd& v,
                          VectorField::Storage& out) {
  const Index p = m.size();
  out.resize(p, 3);
  for (int a = 0; a < 3; ++a) {
    for (Index o = 0; o < p; ++o) {
      const Index n = m.forward(a, o);
      out(o, a) = n == Mask::kNone ? 0.0 : v[n] - v[o];
    }
  }
}

// Negative adjoint of gradient_into. The outgoing term is gated on the
// forward neighbour so the identity holds for arbitrary fields, not only for
// fields that already vanish across the mask border.
inline void divergence_into(const Mask& m, const VectorField::Storage& f,
                            Eigen::VectorXd& out) {
  const Index p = m.size();
  out.setZero(p);
  for (int a = 0; a < 3; ++a) {
    for (Index o = 0; o < p; ++o) {
      if (m.forward(a, o) != Mask::kNone) out[o] += f(o, a);
      const Index b = m.backward(a, o);
      if (b != Mask::kNone) out[o] -= f(b, a);
    }
  }
}

inline double tv_of(const VectorField::Storage& g) {
  double s = 0.0;
  for (Index o = 0; o < g.rows(); ++o) s += g.row(o).norm();
  return s;
}

}  // namespace detail

inline VectorField gradient(const MaskedVolume& v) {
  VectorField::Storage g;
  detail::gradient_into(*v.mask(), v.values(), g);
  return VectorField(v.mask(), std::move(g));
}

inline MaskedVolume divergence(const VectorField& f) {
  Eigen::VectorXd d;
  detail::divergence_into(*f.mask(), f.components(), d);
  return MaskedVolume(f.mask(), std::move(d));
}

/// Isotropic total variation: sum over voxels of the Euclidean norm of the
/// three forward differences.
inline double tv(const MaskedVolume& v) {
  VectorField::Storage g;
  detail::gradient_into(*v.mask(), v.values(), g);
  return detail::tv_of(g);
}

inline double inner(const MaskedVolume& a, const MaskedVolume& b) {
  if (!same_domain(a.mask(), b.mask()))
    throw DimensionError("inner product of volumes on different masks");
  return a.values().dot(b.values());
}

inline double inner(const VectorField& a, const VectorField& b) {
  if (!same_domain(a.mask(), b.mask()))
    throw DimensionError("inner product of fields on different masks");
  return (a.components().array() * b.components().array()).sum();
}

/// Spectral norm of the masked Laplacian div∘grad by power iteration on the
/// positive semidefinite operator −div∘grad.
inline SpectralEstimate laplacian_lipschitz(const Mask& mask,
                                            std::uint64_t seed, double tol,
                                            int max_iter) {
  VectorField::Storage g;
  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    detail::gradient_into(mask, x, g);
    detail::divergence_into(mask, g, out);
    out = -out;
  };
  return power_iteration(apply, mask.size(), seed, tol, max_iter);
}

/// Dense copy in flat grid order; inactive sites get `fill`.
inline std::vector<double> to_dense(const MaskedVolume& v, double fill = 0.0) {
  const Mask& m = *v.mask();
  std::vector<double> out(static_cast<std::size_t>(m.dims().volume()), fill);
  for (Index o = 0; o < m.size(); ++o) out[m.flat_of_ordinal(o)] = v[o];
  return out;
}

inline MaskedVolume from_dense(MaskPtr mask, const std::vector<double>& dense) {
  if (static_cast<Index>(dense.size()) != mask->dims().volume())
    throw DimensionError("dense grid size does not match mask grid");
  Eigen::VectorXd vals(mask->size());
  for (Index o = 0; o < mask->size(); ++o) vals[o] = dense[mask->flat_of_ordinal(o)];
  return MaskedVolume(std::move(mask), std::move(vals));
}

}  // namespace tvreg
