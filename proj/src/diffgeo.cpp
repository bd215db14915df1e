#include "diffgeo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace nst {

namespace {

// Inverse of a metric with the positive-definiteness gate the spec of
// christoffel demands.
Mat metric_inverse(const Mat& g, const char* who) {
  if (!cholesky(g)) throw SingularMetric(std::string(who) + ": metric not positive definite");
  return lu_inverse(lu_factor(g));
}

}  // namespace

// ---- MatrixField ----

MatrixField MatrixField::from_expressions(int dim, std::vector<Expr> entries) {
  if (dim <= 0) throw std::invalid_argument("MatrixField: dim must be positive");
  if (entries.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim))
    throw std::invalid_argument("MatrixField: expected dim*dim entries");
  MatrixField f;
  f.dim_ = dim;
  f.m_ = SmoothMap::from_expressions(std::move(entries), dim);
  return f;
}

MatrixField MatrixField::from_callable(int dim, std::function<Mat(std::span<const double>)> fn,
                                       double fd_step) {
  if (dim <= 0) throw std::invalid_argument("MatrixField: dim must be positive");
  if (!fn) throw std::invalid_argument("MatrixField: null callable");
  const auto d = static_cast<std::size_t>(dim);
  MatrixField f;
  f.dim_ = dim;
  f.m_ = SmoothMap::from_callable(
      dim, dim * dim,
      [fn = std::move(fn), d](std::span<const double> x) {
        const Mat m = fn(x);
        if (m.rows() != d || m.cols() != d)
          throw std::runtime_error("MatrixField: callable returned wrong shape");
        Vec flat(d * d);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) flat[i * d + j] = m(i, j);
        return flat;
      },
      fd_step);
  return f;
}

MatrixField MatrixField::constant(const Mat& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw std::invalid_argument("MatrixField: constant matrix must be square");
  std::vector<Expr> entries;
  entries.reserve(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) entries.push_back(Expr::constant(m(i, j)));
  return from_expressions(static_cast<int>(m.rows()), std::move(entries));
}

MatrixField MatrixField::euclidean(int dim) {
  return constant(Mat::identity(static_cast<std::size_t>(dim)));
}

Mat MatrixField::value(std::span<const double> x) const {
  const Vec flat = m_(x);
  const auto d = static_cast<std::size_t>(dim_);
  Mat out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = flat[i * d + j];
  return out;
}

Tensor3 MatrixField::derivative(std::span<const double> x) const {
  const Mat jac = m_.jacobian(x);
  const auto d = static_cast<std::size_t>(dim_);
  Tensor3 out(d, d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) out(k, i, j) = jac(i * d + j, k);
  return out;
}

MatrixJet MatrixField::jet(std::span<const double> x) const {
  const std::vector<Jet2> jets = m_.jets(x);
  const auto d = static_cast<std::size_t>(dim_);
  MatrixJet out{Mat(d, d), Tensor3(d, d, d), Tensor4(d, d, d, d)};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const Jet2& e = jets[i * d + j];
      out.m(i, j) = e.v;
      for (std::size_t k = 0; k < d; ++k) out.d(k, i, j) = e.g[k];
      for (std::size_t l = 0; l < d; ++l)
        for (std::size_t k = 0; k < d; ++k) out.dd(l, k, i, j) = e.h(l, k);
    }
  return out;
}

// ---- jet utilities ----

Jet2 entry_jet(const MatrixJet& mj, std::size_t i, std::size_t j) {
  const std::size_t n = mj.d.dim0();
  Jet2 out = Jet2::constant(mj.m(i, j), n);
  for (std::size_t k = 0; k < n; ++k) out.g[k] = mj.d(k, i, j);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k) out.h(l, k) = mj.dd(l, k, i, j);
  return out;
}

void set_entry(MatrixJet& mj, std::size_t i, std::size_t j, const Jet2& v) {
  const std::size_t n = v.n();
  mj.m(i, j) = v.v;
  for (std::size_t k = 0; k < n; ++k) mj.d(k, i, j) = v.g[k];
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k) mj.dd(l, k, i, j) = v.h(l, k);
}

MatrixJet compose_jet(const MatrixField& g, const SmoothMap& map, std::span<const double> Q) {
  if (map.n_out() != g.dim())
    throw std::invalid_argument("compose_jet: map range does not match field arity");
  const auto d = static_cast<std::size_t>(g.dim());    // matrix size and q arity
  const auto n = static_cast<std::size_t>(map.n_in()); // Q arity
  const std::vector<Jet2> qj = map.jets(Q);
  Vec q(d);
  for (std::size_t a = 0; a < d; ++a) q[a] = qj[a].v;
  const MatrixJet gq = g.jet(q);

  MatrixJet out{gq.m, Tensor3(n, d, d), Tensor4(n, n, d, d)};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a) s += gq.d(a, i, j) * qj[a].g[k];
        out.d(k, i, j) = s;
      }
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < n; ++k) {
          double s = 0.0;
          for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b)
              s += gq.dd(b, a, i, j) * qj[b].g[l] * qj[a].g[k];
            s += gq.d(a, i, j) * qj[a].h(l, k);
          }
          out.dd(l, k, i, j) = s;
        }
    }
  return out;
}

Jet2 compose_scalar_jet(const ScalarField& v, const SmoothMap& map, std::span<const double> Q) {
  if (map.n_out() != v.n_in())
    throw std::invalid_argument("compose_scalar_jet: map range does not match field arity");
  const auto d = static_cast<std::size_t>(v.n_in());
  const auto n = static_cast<std::size_t>(map.n_in());
  const std::vector<Jet2> qj = map.jets(Q);
  Vec q(d);
  for (std::size_t a = 0; a < d; ++a) q[a] = qj[a].v;
  const Jet2 vq = v.jet(q);

  Jet2 out = Jet2::constant(vq.v, n);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) s += vq.g[a] * qj[a].g[k];
    out.g[k] = s;
  }
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) s += vq.h(b, a) * qj[b].g[l] * qj[a].g[k];
        s += vq.g[a] * qj[a].h(l, k);
      }
      out.h(l, k) = s;
    }
  return out;
}

MatrixJet pulled_metric_jet(const MatrixJet& e, const MatrixJet& g_at_q) {
  const std::size_t d = e.m.rows();
  const std::size_t n = e.d.dim0();
  MatrixJet out{Mat(d, d), Tensor3(n, d, d), Tensor4(n, n, d, d)};
  for (std::size_t lam = 0; lam < d; ++lam)
    for (std::size_t mu = lam; mu < d; ++mu) {
      Jet2 acc = Jet2::constant(0.0, n);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          acc = acc + entry_jet(e, i, lam) * entry_jet(e, j, mu) * entry_jet(g_at_q, i, j);
      set_entry(out, lam, mu, acc);
      if (mu != lam) set_entry(out, mu, lam, acc);
    }
  return out;
}

// ---- Levi-Civita machinery ----

Tensor3 christoffel(const MetricJet& g) {
  const std::size_t n = g.m.rows();
  const Mat ginv = metric_inverse(g.m, "christoffel");
  Tensor3 gamma(n, n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t)
          s += ginv(c, t) * (g.d(a, t, b) + g.d(b, t, a) - g.d(t, a, b));
        gamma(a, b, c) = 0.5 * s;
      }
  return gamma;
}

Tensor3 christoffel(const MetricField& g, std::span<const double> x) {
  MetricJet mj;
  mj.m = g.value(x);
  mj.d = g.derivative(x);
  return christoffel(mj);
}

void christoffel_with_derivative(const MetricJet& g, Tensor3* gamma, Tensor4* dgamma) {
  const std::size_t n = g.m.rows();
  const Mat ginv = metric_inverse(g.m, "christoffel");
  // d_s g^{-1} = -g^{-1} (d_s g) g^{-1}
  std::vector<Mat> dginv(n);
  for (std::size_t s = 0; s < n; ++s) {
    Mat dg(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dg(i, j) = g.d(s, i, j);
    dginv[s] = -1.0 * (ginv * dg * ginv);
  }
  *gamma = Tensor3(n, n, n);
  *dgamma = Tensor4(n, n, n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        double v = 0.0;
        for (std::size_t t = 0; t < n; ++t)
          v += ginv(c, t) * (g.d(a, t, b) + g.d(b, t, a) - g.d(t, a, b));
        (*gamma)(a, b, c) = 0.5 * v;
        for (std::size_t s = 0; s < n; ++s) {
          double w = 0.0;
          for (std::size_t t = 0; t < n; ++t) {
            w += dginv[s](c, t) * (g.d(a, t, b) + g.d(b, t, a) - g.d(t, a, b));
            w += ginv(c, t) * (g.dd(s, a, t, b) + g.dd(s, b, t, a) - g.dd(s, t, a, b));
          }
          (*dgamma)(s, a, b, c) = 0.5 * w;
        }
      }
}

Tensor4 riemann_tensor(const Tensor3& gamma, const Tensor4& dgamma) {
  const std::size_t n = gamma.dim0();
  Tensor4 r(n, n, n, n);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < n; ++k) {
          double s = dgamma(m, v, l, k) - dgamma(v, m, l, k);
          for (std::size_t t = 0; t < n; ++t)
            s += gamma(v, l, t) * gamma(m, t, k) - gamma(m, l, t) * gamma(v, t, k);
          r(m, v, l, k) = s;
        }
  return r;
}

Mat ricci_tensor(const Tensor4& riemann) {
  const std::size_t n = riemann.dim0();
  Mat ric(n, n);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t m = 0; m < n; ++m) s += riemann(m, v, l, m);
      ric(v, l) = s;
    }
  return ric;
}

double scalar_curvature(const Mat& ginv, const Tensor3& gamma, const Tensor4& dgamma) {
  const Mat ric = ricci_tensor(riemann_tensor(gamma, dgamma));
  double s = 0.0;
  for (std::size_t v = 0; v < ginv.rows(); ++v)
    for (std::size_t l = 0; l < ginv.cols(); ++l) s += ginv(v, l) * ric(v, l);
  return s;
}

double riemann_scalar(const MetricField& g, std::span<const double> x) {
  const MetricJet mj = g.jet(x);
  Tensor3 gamma;
  Tensor4 dgamma;
  christoffel_with_derivative(mj, &gamma, &dgamma);
  const Mat ginv = metric_inverse(mj.m, "riemann_scalar");
  return scalar_curvature(ginv, gamma, dgamma);
}

// ---- frames, holonomy, torsion ----

MatrixField holonomic_frame(const SmoothMap& map) {
  if (!map.valid()) throw std::invalid_argument("holonomic_frame: empty map");
  if (map.n_in() != map.n_out())
    throw UnsupportedDimension("holonomic_frame: space map must be square (got " +
                               std::to_string(map.n_out()) + " components of " +
                               std::to_string(map.n_in()) + " variables)");
  const int d = map.n_in();
  if (const auto* comps = map.expressions()) {
    std::vector<Expr> entries;
    entries.reserve(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      for (int lam = 0; lam < d; ++lam)
        entries.push_back((*comps)[static_cast<std::size_t>(i)].derivative(lam));
    return MatrixField::from_expressions(d, std::move(entries));
  }
  SmoothMap m = map;
  return MatrixField::from_callable(
      d, [m = std::move(m)](std::span<const double> x) { return m.jacobian(x); });
}

double schwarz_residual(const MatrixField& e, std::span<const double> x) {
  const Tensor3 de = e.derivative(x);
  const std::size_t d = de.dim1();
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t lam = 0; lam < d; ++lam)
      for (std::size_t mu = lam + 1; mu < d; ++mu)
        worst = std::max(worst, std::abs(de(mu, i, lam) - de(lam, i, mu)));
  return worst;
}

double schwarz_residual(const SmoothMap& map, std::span<const double> x) {
  return schwarz_residual(holonomic_frame(map), x);
}

// ---- FrameField ----

FrameField FrameField::from_space_map(const SmoothMap& q, ScalarField f) {
  if (!f.valid()) throw std::invalid_argument("FrameField: empty time scale");
  MatrixField e = holonomic_frame(q);
  if (f.n_in() != e.dim())
    throw std::invalid_argument("FrameField: time scale arity does not match map dimension");
  FrameField fr;
  fr.e_ = std::move(e);
  fr.f_ = std::move(f);
  fr.map_ = q;
  return fr;
}

FrameField FrameField::from_components(MatrixField e, ScalarField f) {
  if (!e.valid()) throw std::invalid_argument("FrameField: empty space block");
  if (!f.valid()) throw std::invalid_argument("FrameField: empty time scale");
  if (f.n_in() != e.dim())
    throw std::invalid_argument("FrameField: time scale arity does not match frame dimension");
  FrameField fr;
  fr.e_ = std::move(e);
  fr.f_ = std::move(f);
  return fr;
}

Mat FrameField::vielbein(std::span<const double> Q) const {
  const auto d = static_cast<std::size_t>(dim());
  const double fv = f_(Q);
  if (!(fv > 0.0))
    throw DegenerateFrame("vielbein: time scale f = " + std::to_string(fv) + " is not positive");
  const Mat ev = e_.value(Q);
  Mat E(d + 1, d + 1);
  E(0, 0) = fv;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t mu = 0; mu < d; ++mu) E(1 + i, 1 + mu) = ev(i, mu);
  return E;
}

Mat FrameField::inverse_vielbein(std::span<const double> Q) const {
  const auto d = static_cast<std::size_t>(dim());
  const Mat E = vielbein(Q);
  Mat espace(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t mu = 0; mu < d; ++mu) espace(i, mu) = E(1 + i, 1 + mu);
  Mat einv;
  try {
    einv = inverse(espace);
  } catch (const std::runtime_error&) {
    throw DegenerateFrame("inverse_vielbein: singular space block");
  }
  Mat out(d + 1, d + 1);
  out(0, 0) = 1.0 / E(0, 0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t mu = 0; mu < d; ++mu) out(1 + i, 1 + mu) = einv(i, mu);
  return out;
}

Tensor3 cartan_connection(const FrameField& frame, std::span<const double> Q) {
  const auto d = static_cast<std::size_t>(frame.dim());
  const std::size_t n = d + 1;
  const double fv = frame.time_scale()(Q);
  if (!(fv > 0.0))
    throw DegenerateFrame("cartan_connection: time scale f = " + std::to_string(fv) +
                          " is not positive");
  const Vec fg = frame.time_scale().gradient(Q);
  const Mat ev = frame.space_block().value(Q);
  const Tensor3 de = frame.space_block().derivative(Q);
  Mat einv;
  try {
    einv = inverse(ev);
  } catch (const std::runtime_error&) {
    throw DegenerateFrame("cartan_connection: singular space block");
  }
  // Gamma_LamMu^Nu = E_I^Nu d_Lam E^I_Mu; the frame is static, so every
  // Lam = 0 slice vanishes, and the two blocks never mix.
  Tensor3 gamma(n, n, n);
  for (std::size_t lam = 0; lam < d; ++lam) {
    gamma(1 + lam, 0, 0) = fg[lam] / fv;
    for (std::size_t mu = 0; mu < d; ++mu)
      for (std::size_t nu = 0; nu < d; ++nu) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += einv(nu, i) * de(lam, i, mu);
        gamma(1 + lam, 1 + mu, 1 + nu) = s;
      }
  }
  return gamma;
}

Vec torsion_contracted(const FrameField& frame, std::span<const double> Q) {
  const auto d = static_cast<std::size_t>(frame.dim());
  const std::size_t n = d + 1;
  const Tensor3 gamma = cartan_connection(frame, Q);
  Vec s(d, 0.0);
  for (std::size_t lam = 0; lam < d; ++lam) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) acc += gamma(1 + lam, m, m) - gamma(m, 1 + lam, m);
    s[lam] = 0.5 * acc;
  }
  return s;
}

// ---- spacetime curvature with torsion ----

namespace {

// Jets of the D+1 spacetime metric G = E^T diag(1, g_init(q(Q))) E and of the
// frame E itself, with all time derivatives zero.
struct SpacetimeJets {
  std::size_t d = 0, n = 0;
  Jet2 fj;
  MatrixJet ghat;  // D-dimensional, over the D spatial coordinates
  MatrixJet G;     // (D+1)-dimensional, over the D+1 spacetime coordinates
  MatrixJet E;
};

SpacetimeJets spacetime_jets(const FrameField& frame, const MetricField& g_init,
                             std::span<const double> Q) {
  const auto d = static_cast<std::size_t>(frame.dim());
  const std::size_t n = d + 1;
  if (static_cast<std::size_t>(g_init.dim()) != d)
    throw std::invalid_argument("cartan_scalar: initial metric dimension mismatch");

  SpacetimeJets out;
  out.d = d;
  out.n = n;
  out.fj = frame.time_scale().jet(Q);
  if (!(out.fj.v > 0.0))
    throw DegenerateFrame("cartan_scalar: time scale f = " + std::to_string(out.fj.v) +
                          " is not positive");
  const MatrixJet ej = frame.space_block().jet(Q);

  // g_init expressed in Q coordinates: through the space map when the frame
  // has one, directly otherwise (constant metrics, or fields already declared
  // over Q).
  MatrixJet gq;
  if (const SmoothMap* map = frame.space_map()) {
    gq = compose_jet(g_init, *map, Q);
  } else {
    gq = g_init.jet(Q);
  }
  out.ghat = pulled_metric_jet(ej, gq);

  out.G = MatrixJet{Mat(n, n), Tensor3(n, n, n), Tensor4(n, n, n, n)};
  const Jet2 T = out.fj * out.fj;
  out.G.m(0, 0) = T.v;
  for (std::size_t k = 0; k < d; ++k) out.G.d(1 + k, 0, 0) = T.g[k];
  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t k = 0; k < d; ++k) out.G.dd(1 + l, 1 + k, 0, 0) = T.h(l, k);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      out.G.m(1 + a, 1 + b) = out.ghat.m(a, b);
      for (std::size_t k = 0; k < d; ++k) out.G.d(1 + k, 1 + a, 1 + b) = out.ghat.d(k, a, b);
      for (std::size_t l = 0; l < d; ++l)
        for (std::size_t k = 0; k < d; ++k)
          out.G.dd(1 + l, 1 + k, 1 + a, 1 + b) = out.ghat.dd(l, k, a, b);
    }

  out.E = MatrixJet{Mat(n, n), Tensor3(n, n, n), Tensor4(n, n, n, n)};
  out.E.m(0, 0) = out.fj.v;
  for (std::size_t k = 0; k < d; ++k) out.E.d(1 + k, 0, 0) = out.fj.g[k];
  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t k = 0; k < d; ++k) out.E.dd(1 + l, 1 + k, 0, 0) = out.fj.h(l, k);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t mu = 0; mu < d; ++mu) {
      out.E.m(1 + i, 1 + mu) = ej.m(i, mu);
      for (std::size_t k = 0; k < d; ++k) out.E.d(1 + k, 1 + i, 1 + mu) = ej.d(k, i, mu);
      for (std::size_t l = 0; l < d; ++l)
        for (std::size_t k = 0; k < d; ++k)
          out.E.dd(1 + l, 1 + k, 1 + i, 1 + mu) = ej.dd(l, k, i, mu);
    }
  return out;
}

Mat slice(const Tensor3& t, std::size_t k) {
  Mat m(t.dim1(), t.dim2());
  for (std::size_t i = 0; i < t.dim1(); ++i)
    for (std::size_t j = 0; j < t.dim2(); ++j) m(i, j) = t(k, i, j);
  return m;
}

}  // namespace

CartanAudit cartan_audit(const FrameField& frame, const MetricField& g_init,
                         std::span<const double> Q, TorsionSquareMetric ts,
                         double conformal_exponent) {
  const SpacetimeJets st = spacetime_jets(frame, g_init, Q);
  const std::size_t n = st.n;
  const std::size_t d = st.d;

  const Mat Ginv = metric_inverse(st.G.m, "cartan_scalar");
  Tensor3 gamma_lc;
  Tensor4 dgamma_lc;
  christoffel_with_derivative(st.G, &gamma_lc, &dgamma_lc);

  // Teleparallel connection of the frame and its first derivative.
  Mat Einv;
  try {
    Einv = inverse(st.E.m);
  } catch (const std::runtime_error&) {
    throw DegenerateFrame("cartan_scalar: singular frame");
  }
  std::vector<Mat> dEinv(n);
  for (std::size_t k = 0; k < n; ++k) dEinv[k] = -1.0 * (Einv * slice(st.E.d, k) * Einv);

  Tensor3 gam_t(n, n, n);
  Tensor4 dgam_t(n, n, n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += Einv(c, i) * st.E.d(a, i, b);
        gam_t(a, b, c) = v;
        for (std::size_t s = 0; s < n; ++s) {
          double w = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            w += dEinv[s](c, i) * st.E.d(a, i, b) + Einv(c, i) * st.E.dd(s, a, i, b);
          dgam_t(s, a, b, c) = w;
        }
      }

  // Torsion S_ab^c, lowered S_abc, contortion K_abc = S_abc - S_bca + S_cab,
  // raised back with G — all with first derivatives carried along.
  Tensor3 tor(n, n, n);
  Tensor4 dtor(n, n, n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        tor(a, b, c) = 0.5 * (gam_t(a, b, c) - gam_t(b, a, c));
        for (std::size_t s = 0; s < n; ++s)
          dtor(s, a, b, c) = 0.5 * (dgam_t(s, a, b, c) - dgam_t(s, b, a, c));
      }

  Tensor3 torl(n, n, n);
  Tensor4 dtorl(n, n, n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        double v = 0.0;
        for (std::size_t t = 0; t < n; ++t) v += st.G.m(c, t) * tor(a, b, t);
        torl(a, b, c) = v;
        for (std::size_t s = 0; s < n; ++s) {
          double w = 0.0;
          for (std::size_t t = 0; t < n; ++t)
            w += st.G.d(s, c, t) * tor(a, b, t) + st.G.m(c, t) * dtor(s, a, b, t);
          dtorl(s, a, b, c) = w;
        }
      }

  std::vector<Mat> dGinv(n);
  for (std::size_t k = 0; k < n; ++k) dGinv[k] = -1.0 * (Ginv * slice(st.G.d, k) * Ginv);

  Tensor3 kt(n, n, n);
  Tensor4 dkt(n, n, n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        double v = 0.0;
        for (std::size_t t = 0; t < n; ++t)
          v += Ginv(c, t) * (torl(a, b, t) - torl(b, t, a) + torl(t, a, b));
        kt(a, b, c) = v;
        for (std::size_t s = 0; s < n; ++s) {
          double w = 0.0;
          for (std::size_t t = 0; t < n; ++t) {
            w += dGinv[s](c, t) * (torl(a, b, t) - torl(b, t, a) + torl(t, a, b));
            w += Ginv(c, t) * (dtorl(s, a, b, t) - dtorl(s, b, t, a) + dtorl(s, t, a, b));
          }
          dkt(s, a, b, c) = w;
        }
      }

  Tensor3 gamma_full(n, n, n);
  Tensor4 dgamma_full(n, n, n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        gamma_full(a, b, c) = gamma_lc(a, b, c) + kt(a, b, c);
        for (std::size_t s = 0; s < n; ++s)
          dgamma_full(s, a, b, c) = dgamma_lc(s, a, b, c) + dkt(s, a, b, c);
      }

  CartanAudit out;
  out.f = st.fj.v;
  out.cartan_scalar = scalar_curvature(Ginv, gamma_full, dgamma_full);
  out.riemann_scalar = scalar_curvature(Ginv, gamma_lc, dgamma_lc);
  out.ghat = st.ghat.m;

  out.torsion = Vec(d, 0.0);
  for (std::size_t lam = 0; lam < d; ++lam) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) acc += tor(1 + lam, m, m);
    out.torsion[lam] = acc;
  }
  const Mat ghat_inv = metric_inverse(st.ghat.m, "cartan_audit");
  double s2 = 0.0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) s2 += ghat_inv(a, b) * out.torsion[a] * out.torsion[b];
  if (ts == TorsionSquareMetric::kTransformed)
    s2 *= std::pow(st.fj.v, -conformal_exponent);
  out.torsion_square = s2;
  return out;
}

double cartan_scalar(const FrameField& frame, const MetricField& g_init,
                     std::span<const double> Q) {
  return cartan_audit(frame, g_init, Q).cartan_scalar;
}

double spacetime_riemann_scalar(const FrameField& frame, const MetricField& g_init,
                                std::span<const double> Q) {
  return cartan_audit(frame, g_init, Q).riemann_scalar;
}

}  // namespace nst
