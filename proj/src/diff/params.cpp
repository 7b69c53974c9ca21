#include "siegelnet/diff/params.hpp"

namespace siegelnet::diff {
namespace {

Eigen::Index tri(Eigen::Index m) { return m * (m + 1) / 2; }

Mat sym_from_raw(const Vec& raw, Eigen::Index offset, Eigen::Index m) {
  Mat out(m, m);
  Eigen::Index k = offset;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j, ++k) out(i, j) = out(j, i) = raw(k);
  }
  return out;
}

Vec raw_of_sym(const Mat& s) {
  const Eigen::Index m = s.rows();
  Vec out(tri(m));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j, ++k) out(k) = 0.5 * (s(i, j) + s(j, i));
  }
  return out;
}

Var reshape(Var column, Eigen::Index rows, Eigen::Index cols) {
  const Mat v = column.value().reshaped(rows, cols);
  return column.tape->record(v, {column}, [column, rows, cols](Tape& t, const Mat& g) {
    t.accumulate(column, g.reshaped(rows * cols, 1));
  });
}

siegel::SiegelUpperPoint siegel_from_raw(const Vec& raw, Eigen::Index offset, Eigen::Index m) {
  return siegel::SiegelUpperPoint(matfun::RealSymMatrix(sym_from_raw(raw, offset, m)),
                                  matfun::sym_exp(matfun::RealSymMatrix(sym_from_raw(raw, offset + tri(m), m))));
}

TSiegel siegel_from_raw(Var raw, Eigen::Index offset, Eigen::Index m) {
  const Var u = sym_from_vec(slice(raw, offset, tri(m)), m);
  const Var v = sym_fun(sym_from_vec(slice(raw, offset + tri(m), tri(m)), m), matfun::MatFn::Exp);
  return {u, v};
}

void check_range(const ParamBlock& b, Eigen::Index raw_len) {
  if (b.offset < 0 || b.offset + b.size > raw_len) {
    fail(ErrorKind::ShapeMismatch, "block '" + b.name + "' exceeds raw vector of length " + std::to_string(raw_len));
  }
  if (b.size != raw_size(b.kind, b.rows, b.cols, b.signature)) {
    fail(ErrorKind::ShapeMismatch, "block '" + b.name + "' has inconsistent size");
  }
}

// Rank-deficient raw blocks (a measure-zero set, e.g. all zeros) still map to
// a frame: Gram-Schmidt over the raw columns, then the standard basis.
Mat complete_frame(const Mat& a) {
  Mat q(a.rows(), a.cols());
  Eigen::Index filled = 0;
  const double scale = std::max(a.norm(), 1.0);
  auto push = [&](Vec v, double tol) {
    for (int pass = 0; pass < 2; ++pass) v -= q.leftCols(filled) * (q.leftCols(filled).transpose() * v);
    const double n = v.norm();
    if (n > tol) q.col(filled++) = v / n;
  };
  for (Eigen::Index k = 0; k < a.cols() && filled < a.cols(); ++k) push(a.col(k), 1e-8 * scale);
  for (Eigen::Index k = 0; k < a.rows() && filled < a.cols(); ++k) push(Vec::Unit(a.rows(), k), 0.5);
  return q;
}

bool full_rank(const Mat& a) {
  try {
    matfun::stiefel_qr(a);
    return true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RankDeficient) throw;
    return false;
  }
}

}  // namespace

std::string to_string(BlockKind k) {
  switch (k) {
    case BlockKind::Sym: return "sym";
    case BlockKind::Spd: return "spd";
    case BlockKind::Stiefel: return "stiefel";
    case BlockKind::Chamber: return "chamber";
    case BlockKind::SiegelPoint: return "siegel_point";
    case BlockKind::ProductPoint: return "product_point";
    case BlockKind::Scalar: return "scalar";
  }
  return "unknown";
}

Eigen::Index raw_size(BlockKind kind, Eigen::Index rows, Eigen::Index cols, const gyro::Signature& sig) {
  switch (kind) {
    case BlockKind::Sym:
    case BlockKind::Spd: return tri(rows);
    case BlockKind::Stiefel: return rows * cols;
    case BlockKind::Chamber: return rows;
    case BlockKind::SiegelPoint: return 2 * tri(rows);
    case BlockKind::Scalar: return 1;
    case BlockKind::ProductPoint: {
      Eigen::Index n = 0;
      for (const auto& f : sig) n += f.kind == gyro::FactorKind::Spd ? tri(f.dim) : 2 * tri(f.dim);
      return n;
    }
  }
  return 0;
}

std::size_t ParamLayout::add(std::string name, BlockKind kind, Eigen::Index rows, Eigen::Index cols,
                             gyro::Signature signature) {
  if (rows < 1) fail(ErrorKind::ShapeMismatch, "parameter block '" + name + "' needs a positive dimension");
  if (kind == BlockKind::Stiefel && !(cols >= 1 && cols < rows)) {
    fail(ErrorKind::ShapeMismatch, "Stiefel block '" + name + "' needs 1 <= cols < rows");
  }
  ParamBlock b{std::move(name), kind, size_, 0, rows, cols, std::move(signature)};
  b.size = raw_size(kind, rows, cols, b.signature);
  size_ += b.size;
  blocks_.push_back(std::move(b));
  return blocks_.size() - 1;
}

Constrained materialize(const ParamBlock& b, const Vec& raw) {
  check_range(b, raw.size());
  if (!raw.segment(b.offset, b.size).allFinite()) fail(ErrorKind::InvalidInput, "non-finite raw values in '" + b.name + "'");
  switch (b.kind) {
    case BlockKind::Sym: return matfun::RealSymMatrix(sym_from_raw(raw, b.offset, b.rows));
    case BlockKind::Spd: return matfun::sym_exp(matfun::RealSymMatrix(sym_from_raw(raw, b.offset, b.rows)));
    case BlockKind::Stiefel: {
      const Mat a = raw.segment(b.offset, b.size).reshaped(b.rows, b.cols);
      return full_rank(a) ? matfun::stiefel_qr(a) : matfun::StiefelMatrix(complete_frame(a));
    }
    case BlockKind::Chamber: {
      const Vec x = raw.segment(b.offset, b.size);
      const double n = x.norm();
      if (!(n > 1e-300)) return layers::ChamberDirection(Vec::Unit(b.rows, 0));
      Vec y = x.cwiseAbs() / n;
      std::stable_sort(y.begin(), y.end(), std::greater<>());
      return layers::ChamberDirection(y);
    }
    case BlockKind::SiegelPoint: return siegel_from_raw(raw, b.offset, b.rows);
    case BlockKind::ProductPoint: {
      std::vector<gyro::Factor> factors;
      Eigen::Index off = b.offset;
      for (const auto& f : b.signature) {
        if (f.kind == gyro::FactorKind::Spd) {
          factors.emplace_back(spd::SPDPoint(matfun::sym_exp(matfun::RealSymMatrix(sym_from_raw(raw, off, f.dim)))));
          off += tri(f.dim);
        } else {
          factors.emplace_back(siegel_from_raw(raw, off, f.dim));
          off += 2 * tri(f.dim);
        }
      }
      return gyro::ProductPoint(std::move(factors));
    }
    case BlockKind::Scalar: return raw(b.offset);
  }
  fail(ErrorKind::InvalidInput, "unknown block kind");
}

TConstrained materialize(const ParamBlock& b, Var raw) {
  if (raw.cols() != 1) fail(ErrorKind::ShapeMismatch, "raw parameters must be a column");
  check_range(b, raw.rows());
  switch (b.kind) {
    case BlockKind::Sym: return sym_from_vec(slice(raw, b.offset, b.size), b.rows);
    case BlockKind::Spd: return sym_fun(sym_from_vec(slice(raw, b.offset, b.size), b.rows), matfun::MatFn::Exp);
    case BlockKind::Stiefel: {
      Var a = reshape(slice(raw, b.offset, b.size), b.rows, b.cols);
      if (full_rank(a.value())) return qr_q(a);
      // locally constant off the generic set; no gradient flows
      return a.tape->record(complete_frame(a.value()), {a}, [](Tape&, const Mat&) {});
    }
    case BlockKind::Chamber: return chamber_normalize(slice(raw, b.offset, b.size));
    case BlockKind::SiegelPoint: return siegel_from_raw(raw, b.offset, b.rows);
    case BlockKind::ProductPoint: {
      TProduct out;
      Eigen::Index off = b.offset;
      for (const auto& f : b.signature) {
        if (f.kind == gyro::FactorKind::Spd) {
          out.emplace_back(TSpd{sym_fun(sym_from_vec(slice(raw, off, tri(f.dim)), f.dim), matfun::MatFn::Exp)});
          off += tri(f.dim);
        } else {
          out.emplace_back(siegel_from_raw(raw, off, f.dim));
          off += 2 * tri(f.dim);
        }
      }
      return out;
    }
    case BlockKind::Scalar: return slice(raw, b.offset, 1);
  }
  fail(ErrorKind::InvalidInput, "unknown block kind");
}

Vec raw_from_sym(const Mat& s) { return raw_of_sym(s); }

Vec raw_from_spd(const Mat& p) {
  return raw_of_sym(matfun::spd_fun(matfun::SPDMatrix(p), matfun::MatFn::Log));
}

Vec raw_from_siegel(const siegel::SiegelUpperPoint& x) {
  Vec out(2 * tri(x.dim()));
  out << raw_of_sym(x.u()), raw_from_spd(x.v());
  return out;
}

Vec raw_from_stiefel(const Mat& q) { return q.reshaped(q.size(), 1); }

Var slice(Var raw, Eigen::Index offset, Eigen::Index size) {
  if (offset == 0 && size == raw.rows()) return raw;
  return block(raw, offset, 0, size, 1);
}

}  // namespace siegelnet::diff
