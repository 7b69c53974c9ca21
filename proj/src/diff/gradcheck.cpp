#include "siegelnet/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>

#include "siegelnet/diff/model.hpp"

namespace siegelnet::diff {
namespace {

using matfun::MatFn;
using Rng = std::mt19937_64;

struct Case {
  ParamLayout layout;
  Vec raw;
  std::function<Var(Var)> loss;
  bool usable = true;
};

using Builder = std::function<Case(Rng&, Eigen::Index)>;

/// Raw spread for single-point ops and for ops that sum over many factors.
constexpr double kSpread = 0.5;
constexpr double kWideSpread = 0.25;

Vec gaussian(Rng& rng, Eigen::Index n, double sd) {
  std::normal_distribution<double> d(0.0, sd);
  Vec v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = d(rng);
  return v;
}

Mat gaussian_mat(Rng& rng, Eigen::Index r, Eigen::Index c) { return gaussian(rng, r * c, 1.0).reshaped(r, c); }

/// Random linear functional of an op output.
Var weigh(Var out, const Mat& w) { return dot(out, out.tape->constant(w)); }

TSiegel siegel_at(const ParamBlock& b, Var raw) { return std::get<TSiegel>(materialize(b, raw)); }
Var var_at(const ParamBlock& b, Var raw) { return std::get<Var>(materialize(b, raw)); }
TProduct product_at(const ParamBlock& b, Var raw) { return std::get<TProduct>(materialize(b, raw)); }

/// Builds a case whose raw vector is Gaussian over the whole layout.
Case make(ParamLayout layout, Rng& rng, std::function<Var(const ParamLayout&, Var)> f, double sd = kSpread) {
  Case c;
  c.raw = gaussian(rng, layout.size(), sd);
  c.layout = layout;
  c.loss = [layout = std::move(layout), f = std::move(f)](Var raw) { return f(layout, raw); };
  return c;
}

bool gaps_ok(const siegel::SiegelUpperPoint& x, const siegel::SiegelUpperPoint& y) {
  const Vec r = siegel::cross_ratio_eigenvalues(x, y);
  if (r.minCoeff() < kSpectralGapGuard) return false;
  for (Eigen::Index k = 1; k < r.size(); ++k) {
    if (r(k) - r(k - 1) < kSpectralGapGuard) return false;
  }
  return true;
}

siegel::SiegelUpperPoint plain_siegel(const ParamBlock& b, const Vec& raw) {
  return std::get<siegel::SiegelUpperPoint>(materialize(b, raw));
}

Builder spd_fun_op(MatFn f) {
  return [f](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("p", BlockKind::Spd, m);
    const Mat w = gaussian_mat(rng, m, m);
    return make(l, rng, [f, w](const ParamLayout& l, Var raw) {
      return weigh(sym_fun(var_at(l.block(0), raw), f), w);
    });
  };
}

Builder siegel_unary(std::function<Var(const TSiegel&, Rng&)> body) {
  return [body](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("x", BlockKind::SiegelPoint, m);
    // The closure replays its output weights from a fixed seed.
    const auto seed = rng();
    return make(l, rng, [body, seed](const ParamLayout& l, Var raw) {
      Rng r(seed);
      return body(siegel_at(l.block(0), raw), r);
    });
  };
}

Var weigh_c(const CVar& z, Rng& r) {
  const Eigen::Index n = z.re.rows(), c = z.re.cols();
  return weigh(z.re, gaussian_mat(r, n, c)) + weigh(z.im, gaussian_mat(r, n, c));
}

Var weigh_s(const TSiegel& x, Rng& r) {
  return weigh(x.u, gaussian_mat(r, x.dim(), x.dim())) + weigh(x.v, gaussian_mat(r, x.dim(), x.dim()));
}

Builder siegel_binary(std::function<Var(const TSiegel&, const TSiegel&, Rng&)> body, bool guard_gaps = false) {
  return [body, guard_gaps](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("x", BlockKind::SiegelPoint, m);
    l.add("y", BlockKind::SiegelPoint, m);
    const auto seed = rng();
    Case c = make(l, rng, [body, seed](const ParamLayout& l, Var raw) {
      Rng r(seed);
      return body(siegel_at(l.block(0), raw), siegel_at(l.block(1), raw), r);
    });
    if (guard_gaps) c.usable = gaps_ok(plain_siegel(l.block(0), c.raw), plain_siegel(l.block(1), c.raw));
    return c;
  };
}

gyro::Signature mixed_signature(Eigen::Index m) {
  return {{gyro::FactorKind::Spd, m}, {gyro::FactorKind::Siegel, m}, {gyro::FactorKind::Siegel, m}};
}

Builder model_op(ModelKind kind, bool product) {
  return [kind, product](Rng& rng, Eigen::Index m) {
    if (kind == ModelKind::DfcQmlr) m = std::max<Eigen::Index>(m, 2);
    ModelSpec spec;
    spec.kind = kind;
    spec.classes = 3;
    spec.input = product ? gyro::Signature{{gyro::FactorKind::Spd, m}, {gyro::FactorKind::Siegel, m}}
                         : gyro::Signature{{gyro::FactorKind::Siegel, m}};
    auto model = std::make_shared<Model>(spec);
    ParamLayout in;
    in.add("input", BlockKind::ProductPoint, 1, 0, spec.input);
    const gyro::ProductPoint x =
        std::get<gyro::ProductPoint>(materialize(in.block(0), gaussian(rng, in.size(), kWideSpread)));
    const Mat w = gaussian_mat(rng, spec.classes, 1);
    Case c;
    c.layout = model->layout();
    c.raw = gaussian(rng, c.layout.size(), kWideSpread);
    c.loss = [model, x, w](Var raw) {
      Tape& t = *raw.tape;
      return weigh(model->logits(t, model->prepare(t, raw), constant(t, x)), w);
    };
    return c;
  };
}

std::map<std::string, Builder> registry() {
  std::map<std::string, Builder> r;
  r["spd_fun.sqrt"] = spd_fun_op(MatFn::Sqrt);
  r["spd_fun.inv_sqrt"] = spd_fun_op(MatFn::InvSqrt);
  r["spd_fun.log"] = spd_fun_op(MatFn::Log);
  r["spd_fun.inv"] = spd_fun_op(MatFn::Inv);
  r["sym_exp"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("s", BlockKind::Sym, m);
    const Mat w = gaussian_mat(rng, m, m);
    return make(l, rng, [w](const ParamLayout& l, Var raw) {
      return weigh(sym_fun(var_at(l.block(0), raw), MatFn::Exp), w);
    });
  };
  r["stiefel_qr"] = [](Rng& rng, Eigen::Index m) {
    m = std::max<Eigen::Index>(m, 2);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m - 1));
    ParamLayout l;
    l.add("b", BlockKind::Stiefel, m, k);
    const Mat w = gaussian_mat(rng, m, k);
    Case c = make(l, rng, [w](const ParamLayout& l, Var raw) { return weigh(var_at(l.block(0), raw), w); }, 1.0);
    return c;
  };
  r["chamber"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("xi", BlockKind::Chamber, m);
    const Mat w = gaussian_mat(rng, m, 1);
    Case c = make(l, rng, [w](const ParamLayout& l, Var raw) { return weigh(var_at(l.block(0), raw), w); }, 1.0);
    // Ties in |raw| are a measure-zero kink; keep magnitudes apart.
    Vec a = c.raw.cwiseAbs();
    std::sort(a.begin(), a.end());
    for (Eigen::Index k = 1; k < a.size(); ++k) c.usable = c.usable && a(k) - a(k - 1) > 1e-3;
    return c;
  };
  r["cayley"] = siegel_unary([](const TSiegel& x, Rng& g) { return weigh_c(cayley(x), g); });
  r["inverse_cayley"] = siegel_unary([](const TSiegel& x, Rng& g) { return weigh_s(inverse_cayley(cayley(x)), g); });
  r["canonical_rep"] = siegel_unary([](const TSiegel& x, Rng& g) {
    return weigh(canonical_rep(x), gaussian_mat(g, 2 * x.dim(), 2 * x.dim()));
  });
  r["symplectic_action"] = siegel_binary([](const TSiegel& x, const TSiegel& y, Rng& g) {
    const Var k = x.u.tape->constant(siegel::sample_spo(x.dim(), g()).mat());
    return weigh_s(symplectic_action(canonical_rep(x) * k, y), g);
  });
  r["cross_ratio"] = siegel_binary([](const TSiegel& x, const TSiegel& y, Rng& g) {
    return weigh_c(cross_ratio(x, y), g);
  });
  r["distance"] = siegel_binary([](const TSiegel& x, const TSiegel& y, Rng&) { return distance(x, y); });
  r["distance_sq"] = siegel_binary([](const TSiegel& x, const TSiegel& y, Rng&) { return distance_sq(x, y); });
  r["vvd"] = siegel_binary(
      [](const TSiegel& x, const TSiegel& y, Rng& g) { return weigh(vvd(x, y), gaussian_mat(g, x.dim(), 1)); }, true);
  r["spd_distance"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("p", BlockKind::Spd, m);
    l.add("q", BlockKind::Spd, m);
    return make(l, rng, [](const ParamLayout& l, Var raw) {
      return spd_distance(TSpd{var_at(l.block(0), raw)}, TSpd{var_at(l.block(1), raw)});
    });
  };
  r["spd_canonical_rep"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("p", BlockKind::Spd, m);
    const Mat w = gaussian_mat(rng, m, m);
    return make(l, rng, [w](const ParamLayout& l, Var raw) {
      return weigh(spd_canonical_rep(TSpd{var_at(l.block(0), raw)}), w);
    });
  };
  r["log_gram"] = siegel_unary([](const TSiegel& x, Rng& g) {
    return weigh(log_gram(x), gaussian_mat(g, 2 * x.dim(), 2 * x.dim()));
  });
  r["oplus"] = siegel_binary([](const TSiegel& x, const TSiegel& y, Rng& g) { return weigh_s(oplus(x, y), g); });
  r["ominus"] = siegel_unary([](const TSiegel& x, Rng& g) { return weigh_s(ominus(x), g); });
  r["inner_S"] = siegel_binary([](const TSiegel& x, const TSiegel& y, Rng&) { return inner_S(x, y); });
  r["norm_S"] = siegel_unary([](const TSiegel& x, Rng&) { return norm_S(x); });
  r["inner_S.product"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("x", BlockKind::ProductPoint, 1, 0, mixed_signature(m));
    l.add("y", BlockKind::ProductPoint, 1, 0, mixed_signature(m));
    return make(l, rng, [](const ParamLayout& l, Var raw) {
      return inner_S(product_at(l.block(0), raw), product_at(l.block(1), raw));
    }, kWideSpread);
  };
  auto q_case = [](bool dist) {
    return [dist](Rng& rng, Eigen::Index m) {
      ParamLayout l;
      l.add("x", BlockKind::SiegelPoint, m);
      l.add("a", BlockKind::SiegelPoint, m);
      l.add("p", BlockKind::SiegelPoint, m);
      return make(l, rng, [dist](const ParamLayout& l, Var raw) {
        const TQHyperplane h{siegel_at(l.block(1), raw), siegel_at(l.block(2), raw)};
        const TSiegel x = siegel_at(l.block(0), raw);
        return dist ? q_distance(x, h) : q_logit(x, h);
      });
    };
  };
  r["q_logit"] = q_case(false);
  r["q_distance"] = q_case(true);
  auto qp_case = [](bool dist) {
    return [dist](Rng& rng, Eigen::Index m) {
      ParamLayout l;
      for (const char* n : {"x", "a", "p"}) l.add(n, BlockKind::ProductPoint, 1, 0, mixed_signature(m));
      return make(l, rng, [dist](const ParamLayout& l, Var raw) {
        const TProductQHyperplane h{product_at(l.block(1), raw), product_at(l.block(2), raw)};
        const TProduct x = product_at(l.block(0), raw);
        return dist ? q_product_distance(x, h) : q_product_logit(x, h);
      }, kWideSpread);
    };
  };
  r["q_product_logit"] = qp_case(false);
  r["q_product_distance"] = qp_case(true);
  r["v_logit"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("x", BlockKind::SiegelPoint, m);
    l.add("p", BlockKind::SiegelPoint, m);
    l.add("xi", BlockKind::Chamber, m);
    l.add("scale", BlockKind::Scalar, 1);
    Case c = make(l, rng, [](const ParamLayout& l, Var raw) {
      const TVHyperplane h{siegel_at(l.block(1), raw), var_at(l.block(2), raw), var_at(l.block(3), raw)};
      return v_logit(siegel_at(l.block(0), raw), h);
    });
    c.usable = gaps_ok(plain_siegel(l.block(0), c.raw), plain_siegel(l.block(1), c.raw));
    Vec a = c.raw.segment(l.block(2).offset, m).cwiseAbs();
    std::sort(a.begin(), a.end());
    for (Eigen::Index k = 1; k < a.size(); ++k) c.usable = c.usable && a(k) - a(k - 1) > 1e-3;
    return c;
  };
  r["afc_forward"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout l;
    l.add("x", BlockKind::SiegelPoint, m);
    l.add("a", BlockKind::Sym, m);
    l.add("b", BlockKind::Spd, m);
    const auto seed = rng();
    return make(l, rng, [seed](const ParamLayout& l, Var raw) {
      Rng g(seed);
      return weigh_s(afc_forward(siegel_at(l.block(0), raw), var_at(l.block(1), raw), var_at(l.block(2), raw)), g);
    });
  };
  r["dfc_forward"] = [](Rng& rng, Eigen::Index m) {
    m = std::max<Eigen::Index>(m, 2);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m - 1));
    ParamLayout l;
    l.add("x", BlockKind::SiegelPoint, m);
    l.add("a", BlockKind::Sym, k);
    l.add("b", BlockKind::Stiefel, m, k);
    const auto seed = rng();
    return make(l, rng, [seed](const ParamLayout& l, Var raw) {
      Rng g(seed);
      return weigh_s(dfc_forward(siegel_at(l.block(0), raw), var_at(l.block(1), raw), var_at(l.block(2), raw)), g);
    });
  };
  r["softmax_xent"] = [](Rng& rng, Eigen::Index m) {
    ParamLayout logits;
    const Eigen::Index classes = m + 1;
    for (Eigen::Index k = 0; k < classes; ++k) logits.add("z" + std::to_string(k), BlockKind::Scalar, 1);
    const auto label = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(classes));
    return make(logits, rng, [label](const ParamLayout&, Var raw) { return softmax_xent(raw, label); }, 1.0);
  };
  r["model.afc-qmlr"] = model_op(ModelKind::AfcQmlr, true);
  r["model.dfc-qmlr"] = model_op(ModelKind::DfcQmlr, true);
  r["model.qmlr"] = model_op(ModelKind::Qmlr, false);
  return r;
}

const std::map<std::string, Builder>& ops() {
  static const std::map<std::string, Builder> r = registry();
  return r;
}

double evaluate(const Case& c, const Vec& raw) {
  Tape t;
  return c.loss(t.constant(raw)).scalar();
}

std::string block_of(const ParamLayout& l, Eigen::Index k) {
  for (const auto& b : l.blocks()) {
    if (k >= b.offset && k < b.offset + b.size) return b.name;
  }
  return "?";
}

}  // namespace

std::vector<std::string> differentiable_ops() {
  std::vector<std::string> names;
  for (const auto& [name, builder] : ops()) names.push_back(name);
  return names;
}

GradCheckReport grad_check(const std::string& op, int trials, std::uint64_t seed, Eigen::Index max_m) {
  const auto it = ops().find(op);
  if (it == ops().end()) fail(ErrorKind::NotDifferentiable, "no gradient check registered for '" + op + "'");
  if (max_m < 1) fail(ErrorKind::InvalidInput, "max_m must be >= 1");

  GradCheckReport rep;
  rep.op = op;
  Rng rng(seed);
  const int max_attempts = 50 * std::max(trials, 1);
  for (int attempt = 0; attempt < max_attempts && rep.trials < trials; ++attempt) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(max_m));
    Case c;
    Vec grad;
    try {
      c = it->second(rng, m);
      if (!c.usable) continue;
      Tape t;
      const Var raw = t.variable(c.raw);
      t.backward(c.loss(raw));
      grad = t.grad(raw).col(0);
    } catch (const Error&) {
      continue;  // configuration outside the op's domain (e.g. near-singular); draw another
    }
    ++rep.trials;
    for (Eigen::Index k = 0; k < c.raw.size(); ++k) {
      if (std::abs(grad(k)) < kGradSkip) continue;
      Vec plus = c.raw, minus = c.raw;
      plus(k) += kFdStep;
      minus(k) -= kFdStep;
      const double fd = (evaluate(c, plus) - evaluate(c, minus)) / (2.0 * kFdStep);
      const double err = std::abs(fd - grad(k)) / std::abs(grad(k));
      ++rep.compared;
      if (!(err <= kGradRelTol)) ++rep.failures;
      rep.max_rel_err = std::max(rep.max_rel_err, err);
      auto& worst = rep.per_param[block_of(c.layout, k)];
      worst = std::max(worst, err);
    }
  }
  return rep;
}

}  // namespace siegelnet::diff
