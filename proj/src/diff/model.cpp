#include "siegelnet/diff/model.hpp"

#include <limits>
#include <random>

namespace siegelnet::diff {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kInitStd = 0.01;

using matfun::MatFn;

template <class T>
const T& as(const TConstrained& c) {
  return std::get<T>(c);
}

Var only_var(const TConstrained& c) { return std::get<Var>(c); }

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::AfcQmlr: return "afc-qmlr";
    case ModelKind::DfcQmlr: return "dfc-qmlr";
    case ModelKind::AfcVmlr: return "afc-vmlr";
    case ModelKind::Qmlr: return "qmlr";
    case ModelKind::Vmlr: return "vmlr";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  for (ModelKind k : {ModelKind::AfcQmlr, ModelKind::DfcQmlr, ModelKind::AfcVmlr, ModelKind::Qmlr, ModelKind::Vmlr}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::ConfigError, "unknown model '" + name + "'");
}

Eigen::Index default_dfc_dim(Eigen::Index m) {
  switch (m) {
    case 3: return 2;
    case 4: return 3;
    case 5: return 3;
    case 6: return 4;
    default: return m - 1;
  }
}

bool Model::has_fc() const {
  return spec_.kind == ModelKind::AfcQmlr || spec_.kind == ModelKind::DfcQmlr || spec_.kind == ModelKind::AfcVmlr;
}

bool Model::is_vmlr() const { return spec_.kind == ModelKind::AfcVmlr || spec_.kind == ModelKind::Vmlr; }

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.classes < 2) fail(ErrorKind::ConfigError, "a classifier needs at least 2 classes");
  if (spec_.input.empty()) fail(ErrorKind::ConfigError, "empty input signature");
  if (is_vmlr() && (spec_.input.size() != 1 || spec_.input[0].kind != gyro::FactorKind::Siegel)) {
    fail(ErrorKind::ConfigError, "VMLR models need a single Siegel factor, got " + gyro::to_string(spec_.input));
  }
  const bool dfc = spec_.kind == ModelKind::DfcQmlr;
  if (dfc && !spec_.dfc_dims.empty() && spec_.dfc_dims.size() != spec_.input.size()) {
    fail(ErrorKind::ConfigError, "dfc_dims must list one size per input factor");
  }

  hidden_ = spec_.input;
  fc_a_.assign(spec_.input.size(), kNone);
  fc_b_.assign(spec_.input.size(), kNone);
  if (has_fc()) {
    for (std::size_t j = 0; j < spec_.input.size(); ++j) {
      const auto& f = spec_.input[j];
      const std::string tag = "fc" + std::to_string(j);
      if (dfc) {
        const Eigen::Index m2 = spec_.dfc_dims.empty() ? default_dfc_dim(f.dim) : spec_.dfc_dims[j];
        if (m2 < 1 || m2 >= f.dim) {
          fail(ErrorKind::ConfigError, "DFC output size " + std::to_string(m2) + " invalid for input size " +
                                           std::to_string(f.dim));
        }
        hidden_[j].dim = m2;
        fc_b_[j] = layout_.add(tag + ".b", BlockKind::Stiefel, f.dim, m2);
        if (f.kind == gyro::FactorKind::Siegel) fc_a_[j] = layout_.add(tag + ".a", BlockKind::Sym, m2);
      } else {
        fc_b_[j] = layout_.add(tag + ".b", BlockKind::Spd, f.dim);
        if (f.kind == gyro::FactorKind::Siegel) fc_a_[j] = layout_.add(tag + ".a", BlockKind::Sym, f.dim);
      }
    }
  }

  for (int c = 0; c < spec_.classes; ++c) {
    const std::string tag = "head" + std::to_string(c);
    if (is_vmlr()) {
      const Eigen::Index m = hidden_[0].dim;
      head_p_.push_back(layout_.add(tag + ".p", BlockKind::SiegelPoint, m));
      head_xi_.push_back(layout_.add(tag + ".xi", BlockKind::Chamber, m));
      head_scale_.push_back(layout_.add(tag + ".scale", BlockKind::Scalar, 1));
    } else {
      head_a_.push_back(layout_.add(tag + ".a", BlockKind::ProductPoint, 1, 0, hidden_));
      head_p_.push_back(layout_.add(tag + ".p", BlockKind::ProductPoint, 1, 0, hidden_));
    }
  }
}

Vec Model::init(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, kInitStd);
  Vec raw = Vec::Zero(layout_.size());
  for (const auto& b : layout_.blocks()) {
    auto seg = raw.segment(b.offset, b.size);
    switch (b.kind) {
      case BlockKind::Sym:
      case BlockKind::Spd:
        break;  // a = 0, b = exp(0) = I
      case BlockKind::Stiefel: {
        const Mat q = Mat::Identity(b.rows, b.cols);
        seg = raw_from_stiefel(q);
        for (Eigen::Index k = 0; k < seg.size(); ++k) seg(k) += noise(rng);
        break;
      }
      case BlockKind::Scalar:
        seg(0) = 1.0;
        break;
      case BlockKind::Chamber:
      case BlockKind::SiegelPoint:
      case BlockKind::ProductPoint:
        for (Eigen::Index k = 0; k < seg.size(); ++k) seg(k) = noise(rng);
        break;
    }
  }
  return raw;
}

void Model::check_input(const gyro::ProductPoint& x) const {
  if (x.signature() != spec_.input) {
    fail(ErrorKind::ConfigError, "input signature " + gyro::to_string(x.signature()) + " does not match model " +
                                     gyro::to_string(spec_.input));
  }
}

std::vector<Var> Model::prepare(Tape& t, Var raw) const {
  (void)t;
  std::vector<Var> out;
  if (has_fc()) {
    const bool dfc = spec_.kind == ModelKind::DfcQmlr;
    for (std::size_t j = 0; j < spec_.input.size(); ++j) {
      const Var b = only_var(materialize(layout_.block(fc_b_[j]), raw));
      out.push_back(dfc ? b : sym_fun(b, MatFn::Sqrt));
      if (fc_a_[j] != kNone) out.push_back(only_var(materialize(layout_.block(fc_a_[j]), raw)));
    }
  }
  for (int c = 0; c < spec_.classes; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    if (is_vmlr()) {
      const auto p = as<TSiegel>(materialize(layout_.block(head_p_[uc]), raw));
      out.push_back(sym_fun(p.v, MatFn::InvSqrt));
      out.push_back(p.u);
      out.push_back(only_var(materialize(layout_.block(head_xi_[uc]), raw)));
      out.push_back(only_var(materialize(layout_.block(head_scale_[uc]), raw)));
    } else {
      const auto a = as<TProduct>(materialize(layout_.block(head_a_[uc]), raw));
      const auto p = as<TProduct>(materialize(layout_.block(head_p_[uc]), raw));
      for (std::size_t j = 0; j < hidden_.size(); ++j) {
        if (hidden_[j].kind == gyro::FactorKind::Siegel) {
          const auto& pj = std::get<TSiegel>(p[j]);
          out.push_back(sym_fun(pj.v, MatFn::InvSqrt));
          out.push_back(pj.u);
          out.push_back(log_gram(std::get<TSiegel>(a[j])));
        } else {
          out.push_back(sym_fun(std::get<TSpd>(p[j]).p, MatFn::InvSqrt));
          out.push_back(log_gram(std::get<TSpd>(a[j])));
        }
      }
    }
  }
  return out;
}

Var Model::logits(Tape& t, const std::vector<Var>& prep, const TProduct& x) const {
  (void)t;
  if (x.size() != spec_.input.size()) fail(ErrorKind::ShapeMismatch, "input factor count mismatch");
  std::size_t k = 0;
  auto next = [&]() -> Var {
    if (k >= prep.size()) fail(ErrorKind::ShapeMismatch, "prepared parameter list too short");
    return prep[k++];
  };

  TProduct h = x;
  if (has_fc()) {
    const bool dfc = spec_.kind == ModelKind::DfcQmlr;
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (auto* s = std::get_if<TSiegel>(&h[j])) {
        const Var b = next();
        const Var a = next();
        *s = dfc ? dfc_forward(*s, a, b) : afc_prepared(*s, b, a);
      } else {
        auto& p = std::get<TSpd>(h[j]);
        const Var b = next();
        p = dfc ? spd_bimap(p, b) : spd_translate(p, b);
      }
    }
  }

  std::vector<Var> out;
  for (int c = 0; c < spec_.classes; ++c) {
    if (is_vmlr()) {
      const Var s = next(), u = next(), xi = next(), sc = next();
      const Var comps = vvd_from_origin(translate_to_origin(s, u, std::get<TSiegel>(h[0])));
      out.push_back(scale(dot(comps, xi), sc));
    } else {
      Var total;
      for (const auto& f : h) {
        Var term;
        if (const auto* s = std::get_if<TSiegel>(&f)) {
          const Var ps = next(), pu = next(), la = next();
          term = q_logit_prepared(*s, ps, pu, la);
        } else {
          const Var ps = next(), la = next();
          term = q_logit_prepared(std::get<TSpd>(f), ps, la);
        }
        total = total.valid() ? total + term : term;
      }
      out.push_back(total);
    }
  }
  return stack_scalars(out);
}

Vec Model::predict_logits(const Vec& raw, const gyro::ProductPoint& x) const {
  check_input(x);
  Tape t;
  const Var r = t.constant(raw);
  const auto prep = prepare(t, r);
  return logits(t, prep, constant(t, x)).value().col(0);
}

int Model::predict(const Vec& raw, const gyro::ProductPoint& x) const {
  Eigen::Index best = 0;
  predict_logits(raw, x).maxCoeff(&best);
  return static_cast<int>(best);
}

Vec Model::reference_logits(const Vec& raw, const gyro::ProductPoint& x) const {
  check_input(x);
  std::vector<gyro::Factor> hidden_factors;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto& f = x.factors()[j];
    if (!has_fc()) {
      hidden_factors.push_back(f);
      continue;
    }
    const auto b = materialize(layout_.block(fc_b_[j]), raw);
    if (spec_.kind == ModelKind::DfcQmlr) {
      const auto& q = std::get<matfun::StiefelMatrix>(b);
      if (const auto* s = std::get_if<siegel::SiegelUpperPoint>(&f)) {
        const auto a = std::get<matfun::RealSymMatrix>(materialize(layout_.block(fc_a_[j]), raw));
        hidden_factors.emplace_back(layers::dfc_forward(*s, layers::DFCParams{a, q}));
      } else {
        const Mat& p = std::get<spd::SPDPoint>(f).mat();
        hidden_factors.emplace_back(spd::SPDPoint(Mat(q.mat().transpose() * p * q.mat())));
      }
    } else {
      const auto& bm = std::get<matfun::SPDMatrix>(b);
      if (const auto* s = std::get_if<siegel::SiegelUpperPoint>(&f)) {
        const auto a = std::get<matfun::RealSymMatrix>(materialize(layout_.block(fc_a_[j]), raw));
        hidden_factors.emplace_back(layers::afc_forward(*s, layers::AFCParams{a, bm}));
      } else {
        const Mat r = matfun::spd_fun(bm, MatFn::Sqrt);
        hidden_factors.emplace_back(spd::SPDPoint(Mat(r * std::get<spd::SPDPoint>(f).mat() * r)));
      }
    }
  }
  const gyro::ProductPoint hx(std::move(hidden_factors));

  std::vector<layers::Head> heads;
  const bool single_siegel = hidden_.size() == 1 && hidden_[0].kind == gyro::FactorKind::Siegel;
  for (int c = 0; c < spec_.classes; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    if (is_vmlr()) {
      heads.emplace_back(layers::VHyperplane{
          std::get<siegel::SiegelUpperPoint>(materialize(layout_.block(head_p_[uc]), raw)),
          std::get<layers::ChamberDirection>(materialize(layout_.block(head_xi_[uc]), raw)),
          std::get<double>(materialize(layout_.block(head_scale_[uc]), raw))});
    } else {
      auto a = std::get<gyro::ProductPoint>(materialize(layout_.block(head_a_[uc]), raw));
      auto p = std::get<gyro::ProductPoint>(materialize(layout_.block(head_p_[uc]), raw));
      if (single_siegel) {
        heads.emplace_back(layers::QHyperplane{std::get<siegel::SiegelUpperPoint>(a.factors()[0]),
                                               std::get<siegel::SiegelUpperPoint>(p.factors()[0])});
      } else {
        heads.emplace_back(layers::ProductQHyperplane{std::move(a), std::move(p)});
      }
    }
  }
  if (single_siegel) return layers::mlr_logits(std::get<siegel::SiegelUpperPoint>(hx.factors()[0]), heads);
  return layers::mlr_logits(hx, heads);
}

}  // namespace siegelnet::diff
