#include "tape.hpp"

#include <cmath>

#include "mgcn/errors.hpp"
#include "mgcn/frechet.hpp"

namespace mgcn::detail {

Tape::Id Tape::push(Vec v, std::function<void(Tape&, Id)> back) {
  values_.push_back(std::move(v));
  backs_.push_back(std::move(back));
  return static_cast<Id>(values_.size() - 1);
}

Tape::Id Tape::leaf(Vec v) { return push(std::move(v), nullptr); }

Tape::Id Tape::exp(const Manifold& m, Id p, Id x) {
  return push(m.exp(values_[p], values_[x]), [&m, p, x](Tape& t, Id self) {
    m.exp_vjp(t.values_[p], t.values_[x], t.grads_[self], t.grads_[p], t.grads_[x]);
  });
}

Tape::Id Tape::log(const Manifold& m, Id p, Id q) {
  return push(m.log(values_[p], values_[q]), [&m, p, q](Tape& t, Id self) {
    m.log_vjp(t.values_[p], t.values_[q], t.grads_[self], t.grads_[p], t.grads_[q]);
  });
}

Tape::Id Tape::dist(const Manifold& m, Id p, Id q) {
  return push(Vec::Constant(1, m.dist(values_[p], values_[q])), [&m, p, q](Tape& t, Id self) {
    m.dist_vjp(t.values_[p], t.values_[q], t.grads_[self](0), t.grads_[p], t.grads_[q]);
  });
}

Tape::Id Tape::inner(const Manifold& m, Id p, Id x, Id y) {
  return push(Vec::Constant(1, m.inner(values_[p], values_[x], values_[y])),
              [&m, p, x, y](Tape& t, Id self) {
                // x and y may be the same node; accumulate through temporaries
                Vec gx = Vec::Zero(t.values_[x].size());
                Vec gy = Vec::Zero(t.values_[y].size());
                m.inner_vjp(t.values_[p], t.values_[x], t.values_[y], t.grads_[self](0), t.grads_[p],
                            gx, gy);
                t.grads_[x] += gx;
                t.grads_[y] += gy;
              });
}

Tape::Id Tape::norm(const Manifold& m, Id p, Id x) {
  const double n = std::sqrt(std::max(0.0, m.inner(values_[p], values_[x], values_[x])));
  return push(Vec::Constant(1, n), [&m, p, x, n](Tape& t, Id self) {
    if (n == 0.0) return;
    Vec gx = Vec::Zero(t.values_[x].size());
    Vec gy = Vec::Zero(t.values_[x].size());
    m.inner_vjp(t.values_[p], t.values_[x], t.values_[x], t.grads_[self](0) / (2.0 * n), t.grads_[p],
                gx, gy);
    t.grads_[x] += gx + gy;
  });
}

Tape::Id Tape::frechet(const Manifold& m, const std::vector<Id>& pts, const std::vector<Id>& weights) {
  const auto c = static_cast<Eigen::Index>(pts.size());
  Mat pm(m.ambient_dim(), c);
  Vec wv(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    pm.col(i) = values_[pts[i]];
    wv(i) = values_[weights[i]](0);
  }
  FrechetOptions opts;
  opts.record_path = true;
  FrechetResult r = frechet_mean(m, pm, wv, opts);
  Vec mean = std::move(r.mean);
  return push(std::move(mean), [&m, pts, weights, r = std::move(r), wv](Tape& t, Id self) {
    const Eigen::Index n = wv.size();
    Vec g = t.grads_[self];
    for (std::size_t k = r.steps.size(); k-- > 0;) {
      const Vec& mu = r.path[k];
      const double tau = r.steps[k];
      Vec gmu = Vec::Zero(mu.size());
      Vec gv = Vec::Zero(mu.size());
      m.exp_vjp(mu, tau * r.directions[k], g, gmu, gv);
      gv *= tau;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vec& x = t.values_[pts[i]];
        t.grads_[weights[i]](0) += m.log(mu, x).dot(gv);
        m.log_vjp(mu, x, wv(i) * gv, gmu, t.grads_[pts[i]]);
      }
      g = std::move(gmu);
    }
    t.grads_[pts[r.start_index]] += g;
  });
}

Tape::Id Tape::lincomb(std::vector<Term> terms, Eigen::Index size) {
  Vec out = Vec::Zero(size);
  for (const Term& term : terms) {
    const double c = term.coef >= 0 ? term.scale * values_[term.coef](0) : term.scale;
    out += c * values_[term.vec];
  }
  return push(std::move(out), [terms = std::move(terms)](Tape& t, Id self) {
    const Vec& g = t.grads_[self];
    for (const Term& term : terms) {
      const double c = term.coef >= 0 ? term.scale * t.values_[term.coef](0) : term.scale;
      if (term.coef >= 0) t.grads_[term.coef](0) += term.scale * t.values_[term.vec].dot(g);
      t.grads_[term.vec] += c * g;
    }
  });
}

Tape::Id Tape::divide(Id v, Id s) {
  const double d = values_[s](0);
  return push(values_[v] / d, [v, s, d](Tape& t, Id self) {
    const Vec& g = t.grads_[self];
    t.grads_[v] += g / d;
    t.grads_[s](0) -= t.values_[self].dot(g) / d;
  });
}

Tape::Id Tape::leaky_relu(Id v, double slope) {
  Vec out = values_[v];
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) < 0.0) out(i) *= slope;
  }
  return push(std::move(out), [v, slope](Tape& t, Id self) {
    const Vec& x = t.values_[v];
    const Vec& g = t.grads_[self];
    for (Eigen::Index i = 0; i < x.size(); ++i) t.grads_[v](i) += (x(i) >= 0.0 ? 1.0 : slope) * g(i);
  });
}

Tape::Id Tape::softmax(Id logits) {
  const Vec& z = values_[logits];
  Vec e = (z.array() - z.maxCoeff()).exp();
  e /= e.sum();
  return push(std::move(e), [logits](Tape& t, Id self) {
    const Vec& s = t.values_[self];
    const Vec& g = t.grads_[self];
    t.grads_[logits] += s.cwiseProduct(g) - s * s.dot(g);
  });
}

Tape::Id Tape::log_softmax(Id logits) {
  const Vec& z = values_[logits];
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return push(Vec(z.array() - lse), [logits](Tape& t, Id self) {
    const Vec& g = t.grads_[self];
    const Vec p = t.values_[self].array().exp();
    t.grads_[logits] += g - p * g.sum();
  });
}

Tape::Id Tape::slice(Id v, Eigen::Index offset, Eigen::Index length) {
  return push(values_[v].segment(offset, length), [v, offset, length](Tape& t, Id self) {
    t.grads_[v].segment(offset, length) += t.grads_[self];
  });
}

Tape::Id Tape::concat(const std::vector<Id>& parts) {
  Eigen::Index total = 0;
  for (Id p : parts) total += values_[p].size();
  Vec out(total);
  Eigen::Index at = 0;
  for (Id p : parts) {
    out.segment(at, values_[p].size()) = values_[p];
    at += values_[p].size();
  }
  return push(std::move(out), [parts](Tape& t, Id self) {
    Eigen::Index off = 0;
    for (Id p : parts) {
      const Eigen::Index len = t.values_[p].size();
      t.grads_[p] += t.grads_[self].segment(off, len);
      off += len;
    }
  });
}

Tape::Id Tape::max(const std::vector<Id>& parts) {
  if (parts.empty()) throw ContractViolation("max of no values");
  Id best = parts.front();
  for (Id p : parts) {
    if (values_[p](0) > values_[best](0)) best = p;
  }
  return push(values_[best], [best](Tape& t, Id self) { t.grads_[best] += t.grads_[self]; });
}

Tape::Id Tape::affine(Id w, Id b, Id x, Eigen::Index rows) {
  const Eigen::Index cols = values_[x].size();
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> wm(values_[w].data(), rows, cols);
  Vec out = wm * values_[x] + values_[b];
  return push(std::move(out), [w, b, x, rows, cols](Tape& t, Id self) {
    const Vec& g = t.grads_[self];
    const Eigen::Map<const RowMat> wm(t.values_[w].data(), rows, cols);
    Eigen::Map<RowMat> gw(t.grads_[w].data(), rows, cols);
    gw += g * t.values_[x].transpose();
    t.grads_[x] += wm.transpose() * g;
    t.grads_[b] += g;
  });
}

void Tape::backward(Id out) {
  grads_.assign(values_.size(), Vec());
  for (std::size_t i = 0; i < values_.size(); ++i) grads_[i] = Vec::Zero(values_[i].size());
  grads_[out](0) = 1.0;
  for (Id i = out; i >= 0; --i) {
    if (backs_[i] && !grads_[i].isZero(0.0)) backs_[i](*this, i);
  }
}

}  // namespace mgcn::detail
