#pragma once

// Little-endian binary containers for volumes (TVV1), datasets (TVD1) and
// fitted models (TVM1).
//
//   TVV1   "TVV1" | u32 p_i p_j p_k | mask bytes (0/1, flat grid order)
//          | p × f64 values (active-ordinal order)
//   TVD1   "TVD1" | u32 n | u32 p_i p_j p_k | mask bytes | n·p × f64 (rows)
//          | u8 task (0 regression, 1 binary, 2 multiclass)
//          | n × f64 targets (regression) or n × i32 labels
//   TVM1   "TVM1" | u8 loss (0 squared, 1 logistic, 2 one-vs-one logistic)
//          | f64 λ | u32 K | f64 gap_factor | f64 safety | f64 outer_tol
//          | u32 seed | f64 intercept | TVV1 weights
//          | [loss == 2: u32 k, then per pair i<j: u32 i | u32 j | f64 b | TVV1 w]

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tvreg/error.hpp"
#include "tvreg/grid.hpp"
#include "tvreg/loss.hpp"
#include "tvreg/solver.hpp"

namespace tvreg::io {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::string_view kVolumeMagic = "TVV1";
inline constexpr std::string_view kDatasetMagic = "TVD1";
inline constexpr std::string_view kModelMagic = "TVM1";

class Writer {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) bytes_.push_back(static_cast<std::uint8_t>(bits >> s));
  }
  void raw(const std::vector<std::uint8_t>& b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

class Reader {
 public:
  explicit Reader(const Bytes& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void magic(std::string_view expect, const char* field) {
    need(expect.size(), field);
    if (std::memcmp(bytes_.data() + pos_, expect.data(), expect.size()) != 0)
      throw ParseError(field, pos_, "expected magic \"" + std::string(expect) + "\"");
    pos_ += expect.size();
  }
  std::uint8_t u8(const char* field) {
    need(1, field);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(bytes_[pos_ + s]) << (8 * s);
    pos_ += 4;
    return v;
  }
  std::int32_t i32(const char* field) { return static_cast<std::int32_t>(u32(field)); }
  double f64(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int s = 0; s < 8; ++s) v |= static_cast<std::uint64_t>(bytes_[pos_ + s]) << (8 * s);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  void need(std::size_t count, const char* field) const {
    if (bytes_.size() - pos_ < count)
      throw ParseError(field, pos_,
                       "truncated: need " + std::to_string(count) + " bytes, " +
                           std::to_string(bytes_.size() - pos_) + " left");
  }
  [[noreturn]] void fail(const char* field, const std::string& what) const {
    throw ParseError(field, pos_, what);
  }
  void expect_end(const char* what) const {
    if (!at_end())
      throw ParseError(what, pos_, std::to_string(bytes_.size() - pos_) + " trailing bytes");
  }

 private:
  const Bytes& bytes_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- mask header

inline void write_mask_header(Writer& w, const Mask& m) {
  w.u32(static_cast<std::uint32_t>(m.dims().ni));
  w.u32(static_cast<std::uint32_t>(m.dims().nj));
  w.u32(static_cast<std::uint32_t>(m.dims().nk));
  w.raw(m.flags());
}

inline MaskPtr read_mask_header(Reader& r) {
  Dims d;
  const std::size_t at = r.offset();
  const std::uint32_t ni = r.u32("dims.p_i");
  const std::uint32_t nj = r.u32("dims.p_j");
  const std::uint32_t nk = r.u32("dims.p_k");
  constexpr std::uint32_t kMaxAxis = 1u << 16;
  if (ni == 0 || nj == 0 || nk == 0 || ni > kMaxAxis || nj > kMaxAxis || nk > kMaxAxis)
    throw ParseError("dims", at, "invalid grid dimensions");
  d = {static_cast<int>(ni), static_cast<int>(nj), static_cast<int>(nk)};
  const auto total = static_cast<std::size_t>(d.volume());
  r.need(total, "mask");
  std::vector<std::uint8_t> flags(total);
  const std::size_t mask_at = r.offset();
  for (std::size_t s = 0; s < total; ++s) {
    flags[s] = r.u8("mask");
    if (flags[s] > 1) throw ParseError("mask", mask_at + s, "mask byte must be 0 or 1");
  }
  try {
    return make_mask(d, std::move(flags));
  } catch (const Error& e) {
    throw ParseError("mask", mask_at, e.what());
  }
}

// --------------------------------------------------------------------- volume

inline void write_volume(Writer& w, const MaskedVolume& v) {
  w.magic(kVolumeMagic);
  write_mask_header(w, *v.mask());
  for (Index o = 0; o < v.size(); ++o) w.f64(v[o]);
}

inline MaskedVolume read_volume(Reader& r) {
  r.magic(kVolumeMagic, "volume.magic");
  MaskPtr m = read_mask_header(r);
  r.need(static_cast<std::size_t>(m->size()) * 8, "volume.values");
  Eigen::VectorXd vals(m->size());
  for (Index o = 0; o < m->size(); ++o) vals[o] = r.f64("volume.values");
  return MaskedVolume(std::move(m), std::move(vals));
}

inline Bytes encode_volume(const MaskedVolume& v) {
  Writer w;
  write_volume(w, v);
  return w.take();
}

inline MaskedVolume decode_volume(const Bytes& b) {
  Reader r(b);
  MaskedVolume v = read_volume(r);
  r.expect_end("volume");
  return v;
}

// -------------------------------------------------------------------- dataset

inline Bytes encode_dataset(const Dataset& d) {
  d.validate();
  Writer w;
  w.magic(kDatasetMagic);
  w.u32(static_cast<std::uint32_t>(d.n()));
  write_mask_header(w, *d.mask);
  for (Index i = 0; i < d.n(); ++i)
    for (Index j = 0; j < d.p(); ++j) w.f64(d.X(i, j));
  w.u8(static_cast<std::uint8_t>(d.task));
  for (Index i = 0; i < d.n(); ++i) {
    if (d.task == Task::regression)
      w.f64(d.y[i]);
    else
      w.i32(static_cast<std::int32_t>(d.y[i]));
  }
  return w.take();
}

inline Dataset decode_dataset(const Bytes& b) {
  Reader r(b);
  r.magic(kDatasetMagic, "dataset.magic");
  const std::uint32_t n = r.u32("dataset.n");
  if (n == 0) r.fail("dataset.n", "dataset has no samples");
  Dataset d;
  d.mask = read_mask_header(r);
  const Index p = d.mask->size();
  r.need(static_cast<std::size_t>(n) * static_cast<std::size_t>(p) * 8, "dataset.rows");
  d.X.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) d.X(i, j) = r.f64("dataset.rows");
  const std::size_t tag_at = r.offset();
  const std::uint8_t tag = r.u8("dataset.task");
  if (tag > 2) throw ParseError("dataset.task", tag_at, "unknown task tag " + std::to_string(tag));
  d.task = static_cast<Task>(tag);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const std::size_t at = r.offset();
    if (d.task == Task::regression) {
      d.y[i] = r.f64("dataset.targets");
    } else {
      const std::int32_t lab = r.i32("dataset.labels");
      if (d.task == Task::binary && lab != 1 && lab != -1)
        throw ParseError("dataset.labels", at, "binary label must be -1 or +1");
      if (d.task == Task::multiclass && lab < 0)
        throw ParseError("dataset.labels", at, "class id must be >= 0");
      d.y[i] = lab;
    }
  }
  r.expect_end("dataset");
  return d;
}

// ---------------------------------------------------------------------- model

/// A fitted single model or a one-vs-one ensemble.
using AnyModel = std::variant<Model, OvoModel>;

namespace detail {

inline void write_config(Writer& w, const SolverConfig& c) {
  w.f64(c.lambda);
  w.u32(static_cast<std::uint32_t>(c.max_outer));
  w.f64(c.gap_factor);
  w.f64(c.lipschitz_safety);
  w.f64(c.outer_tol);
  w.u32(c.seed);
}

inline SolverConfig read_config(Reader& r) {
  SolverConfig c;
  c.lambda = r.f64("config.lambda");
  c.max_outer = static_cast<int>(r.u32("config.max_outer"));
  c.gap_factor = r.f64("config.gap_factor");
  c.lipschitz_safety = r.f64("config.lipschitz_safety");
  c.outer_tol = r.f64("config.outer_tol");
  c.seed = r.u32("config.seed");
  return c;
}

}  // namespace detail

inline Bytes encode_model(const AnyModel& any) {
  Writer w;
  w.magic(kModelMagic);
  if (const auto* m = std::get_if<Model>(&any)) {
    w.u8(static_cast<std::uint8_t>(m->loss));
    detail::write_config(w, m->config);
    w.f64(m->b);
    write_volume(w, m->w);
    return w.take();
  }
  const auto& ovo = std::get<OvoModel>(any);
  if (ovo.pairs.empty()) throw InvalidArgument("cannot encode an empty one-vs-one model");
  const Model& first = ovo.pairs.front().model;
  w.u8(2);
  detail::write_config(w, first.config);
  w.f64(0.0);
  write_volume(w, MaskedVolume(first.w.mask()));
  w.u32(static_cast<std::uint32_t>(ovo.k));
  for (const auto& pair : ovo.pairs) {
    w.u32(static_cast<std::uint32_t>(pair.first));
    w.u32(static_cast<std::uint32_t>(pair.second));
    w.f64(pair.model.b);
    write_volume(w, pair.model.w);
  }
  return w.take();
}

inline AnyModel decode_model(const Bytes& b) {
  Reader r(b);
  r.magic(kModelMagic, "model.magic");
  const std::size_t tag_at = r.offset();
  const std::uint8_t tag = r.u8("model.loss");
  if (tag > 2) throw ParseError("model.loss", tag_at, "unknown loss tag " + std::to_string(tag));
  const SolverConfig cfg = detail::read_config(r);
  Model top;
  top.loss = tag == 0 ? LossKind::squared : LossKind::logistic;
  top.config = cfg;
  top.b = r.f64("model.intercept");
  top.w = read_volume(r);
  if (tag != 2) {
    r.expect_end("model");
    return top;
  }

  OvoModel ovo;
  const std::size_t k_at = r.offset();
  const std::uint32_t k = r.u32("ovo.k");
  if (k < 2 || k > 1u << 15) throw ParseError("ovo.k", k_at, "invalid class count");
  ovo.k = static_cast<int>(k);
  for (int i = 0; i < ovo.k; ++i) {
    for (int j = i + 1; j < ovo.k; ++j) {
      const std::size_t at = r.offset();
      OvoPair pair;
      pair.first = static_cast<int>(r.u32("ovo.pair.first"));
      pair.second = static_cast<int>(r.u32("ovo.pair.second"));
      if (pair.first != i || pair.second != j)
        throw ParseError("ovo.pair", at, "pairs must be listed in (i<j) order");
      pair.model.loss = LossKind::logistic;
      pair.model.config = cfg;
      pair.model.classes = {i, j};
      pair.model.b = r.f64("ovo.pair.intercept");
      pair.model.w = read_volume(r);
      if (!pair.model.w.mask()->same_geometry(*top.w.mask()))
        throw ParseError("ovo.pair.weights", at, "pair mask differs from model mask");
      ovo.pairs.push_back(std::move(pair));
    }
  }
  r.expect_end("model");
  return ovo;
}

// ---------------------------------------------------------------- file access

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Whitespace-separated values over a full grid, flat grid order.
inline MaskedVolume read_text_volume(std::istream& in, Dims dims) {
  MaskPtr m = make_full_mask(dims);
  Eigen::VectorXd vals(m->size());
  for (Index o = 0; o < m->size(); ++o) {
    if (!(in >> vals[o]))
      throw ParseError("text.values", static_cast<std::size_t>(o),
                       "expected " + std::to_string(m->size()) + " numbers");
  }
  double extra;
  if (in >> extra)
    throw ParseError("text.values", static_cast<std::size_t>(m->size()), "more values than voxels");
  return MaskedVolume(std::move(m), std::move(vals));
}

}  // namespace tvreg::io
