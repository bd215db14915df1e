#include "transform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>

namespace nst {

namespace {

std::string num_str(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string point_str(std::span<const double> x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += num_str(x[i]);
  }
  return s + ")";
}

}  // namespace

bool DomainBox::contains(std::span<const double> x, double pad) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= lo[i] - pad && x[i] <= hi[i] + pad)) return false;
  return true;
}

std::vector<Vec> DomainBox::grid(int per_dim) const {
  const std::size_t d = dim();
  std::vector<Vec> pts;
  if (d == 0 || per_dim <= 0) return pts;
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_dim);
  pts.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec p(d);
    std::size_t rest = flat;
    for (std::size_t i = 0; i < d; ++i) {
      const auto k = static_cast<double>(rest % per_dim);
      rest /= static_cast<std::size_t>(per_dim);
      p[i] = lo[i] + (hi[i] - lo[i]) * (k + 1.0) / (per_dim + 1.0);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

std::vector<std::string> SystemSpec::validate() const {
  std::vector<std::string> issues;
  if (dim <= 0) issues.push_back("system: dimension must be positive");
  if (!(mass > 0.0)) issues.push_back("system: mass must be positive");
  if (!(hbar >= 0.0)) issues.push_back("system: hbar must be nonnegative");
  if (!metric.valid())
    issues.push_back("system: metric is missing");
  else if (dim > 0 && metric.dim() != dim)
    issues.push_back("system: metric dimension " + std::to_string(metric.dim()) +
                     " does not match system dimension " + std::to_string(dim));
  if (!scalar_potential.valid())
    issues.push_back("system: scalar potential is missing");
  else if (dim > 0 && scalar_potential.n_in() != dim)
    issues.push_back("system: scalar potential arity does not match dimension");
  if (vector_potential.valid() && dim > 0 &&
      (vector_potential.n_in() != dim || vector_potential.n_out() != dim))
    issues.push_back("system: vector potential must have one component per coordinate");
  if (domain.lo.size() != static_cast<std::size_t>(dim > 0 ? dim : 0) ||
      domain.hi.size() != domain.lo.size()) {
    issues.push_back("system: domain box must give one [lo, hi] pair per coordinate");
  } else {
    for (std::size_t i = 0; i < domain.lo.size(); ++i)
      if (!(domain.lo[i] < domain.hi[i])) {
        issues.push_back("system: domain box has empty extent in coordinate " + std::to_string(i));
        break;
      }
  }
  return issues;
}

std::vector<std::string> TransformSpec::validate(int dim) const {
  std::vector<std::string> issues;
  if (!space_map.valid())
    issues.push_back("transform: space map is missing");
  else if (space_map.n_in() != dim || space_map.n_out() != dim)
    issues.push_back("transform: space map must take and return " + std::to_string(dim) +
                     " coordinates");
  if (inverse_map.valid() && (inverse_map.n_in() != dim || inverse_map.n_out() != dim))
    issues.push_back("transform: inverse map must take and return " + std::to_string(dim) +
                     " coordinates");
  if (!time_scale.valid())
    issues.push_back("transform: time scale f is missing");
  else if (time_scale.n_in() != dim)
    issues.push_back("transform: time scale arity does not match dimension");
  if (conformal_exponent != 1 && conformal_exponent != -1)
    issues.push_back("transform: conformal exponent must be +1 or -1");
  if (!std::isfinite(energy)) issues.push_back("transform: energy must be finite");
  if (domain.lo.size() != static_cast<std::size_t>(dim > 0 ? dim : 0) ||
      domain.hi.size() != domain.lo.size()) {
    issues.push_back("transform: domain box must give one [lo, hi] pair per coordinate");
  } else {
    for (std::size_t i = 0; i < domain.lo.size(); ++i)
      if (!(domain.lo[i] < domain.hi[i])) {
        issues.push_back("transform: domain box has empty extent in coordinate " +
                         std::to_string(i));
        break;
      }
  }
  return issues;
}

const char* to_string(ChristoffelReading r) {
  return r == ChristoffelReading::kRaisedLower ? "raised_lower" : "contracted_upper";
}

const char* to_string(TorsionSquareMetric m) {
  return m == TorsionSquareMetric::kSpacetime ? "spacetime" : "transformed";
}

MetricField pull_metric(const SystemSpec& init, const TransformSpec& tr) {
  const int d = init.dim;
  const int eps = tr.conformal_exponent;
  if (tr.space_map.exact() && init.metric.exact() && tr.time_scale.exact()) {
    const std::vector<Expr>& q = *tr.space_map.expressions();
    const std::vector<Expr>& g = *init.metric.expressions();
    const Expr& f = *tr.time_scale.expression();
    std::vector<Expr> e(static_cast<std::size_t>(d) * d);  // e[i*d+lam] = d q^i / d Q^lam
    std::vector<Expr> gq(static_cast<std::size_t>(d) * d);  // g_ij at q(Q)
    for (int i = 0; i < d; ++i)
      for (int lam = 0; lam < d; ++lam) {
        e[i * d + lam] = q[i].derivative(lam);
        gq[i * d + lam] = g[i * d + lam].substitute(q);
      }
    std::vector<Expr> out(static_cast<std::size_t>(d) * d);
    for (int lam = 0; lam < d; ++lam)
      for (int mu = lam; mu < d; ++mu) {
        Expr acc;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            acc = acc + e[i * d + lam] * e[j * d + mu] * gq[i * d + j];
        out[lam * d + mu] = eps == 1 ? f * acc : acc / f;
        out[mu * d + lam] = out[lam * d + mu];
      }
    return MetricField::from_expressions(d, std::move(out));
  }
  MetricField gi = init.metric;
  SmoothMap map = tr.space_map;
  ScalarField f = tr.time_scale;
  return MetricField::from_callable(d, [=](std::span<const double> Q) {
    const double fv = f(Q);
    if (!(fv > 0.0))
      throw NonPositiveTimeScale("pull_metric: f(Q) = " + num_str(fv) + " at Q = " + point_str(Q));
    const Mat e = map.jacobian(Q);
    const Mat gq = gi.value(map(Q));
    Mat out(d, d);
    for (int lam = 0; lam < d; ++lam)
      for (int mu = lam; mu < d; ++mu) {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) s += e(i, lam) * e(j, mu) * gq(i, j);
        s = eps == 1 ? s * fv : s / fv;
        out(lam, mu) = s;
        out(mu, lam) = s;
      }
    return out;
  });
}

SmoothMap pull_vector_potential(const SystemSpec& init, const TransformSpec& tr) {
  if (!init.has_vector_potential()) return {};
  const int d = init.dim;
  if (tr.space_map.exact() && init.vector_potential.exact()) {
    const std::vector<Expr>& q = *tr.space_map.expressions();
    const std::vector<Expr>& a = *init.vector_potential.expressions();
    std::vector<Expr> out(d);
    for (int lam = 0; lam < d; ++lam) {
      Expr acc;
      for (int i = 0; i < d; ++i) acc = acc + q[i].derivative(lam) * a[i].substitute(q);
      out[lam] = acc;
    }
    return SmoothMap::from_expressions(std::move(out), d);
  }
  SmoothMap a = init.vector_potential;
  SmoothMap map = tr.space_map;
  return SmoothMap::from_callable(d, d, [=](std::span<const double> Q) {
    const Mat e = map.jacobian(Q);
    const Vec aq = a(map(Q));
    Vec out(d, 0.0);
    for (int lam = 0; lam < d; ++lam)
      for (int i = 0; i < d; ++i) out[lam] += e(i, lam) * aq[i];
    return out;
  });
}

ScalarField classical_potential(const SystemSpec& init, const TransformSpec& tr) {
  const int d = init.dim;
  if (tr.space_map.exact() && init.scalar_potential.exact() && tr.time_scale.exact()) {
    const Expr v = init.scalar_potential.expression()->substitute(*tr.space_map.expressions());
    const Expr& f = *tr.time_scale.expression();
    return ScalarField::from_expression(f * (v - Expr::constant(tr.energy)), d);
  }
  ScalarField v = init.scalar_potential;
  ScalarField f = tr.time_scale;
  SmoothMap map = tr.space_map;
  const double energy = tr.energy;
  return ScalarField::from_callable(
      d, [=](std::span<const double> Q) { return f(Q) * (v(map(Q)) - energy); });
}

namespace {

// One evaluation of the direct-form data: the classical part f (V - E) and the
// hbar^2/m correction, kept separate so the same pipeline serves both the
// full transformed potential and the bare correction.
class DirectPotentialEvaluator {
 public:
  DirectPotentialEvaluator(const SystemSpec& init, const TransformSpec& tr, ChristoffelReading reading)
      : metric_(init.metric),
        potential_(init.scalar_potential),
        map_(tr.space_map),
        f_(tr.time_scale),
        frame_(holonomic_frame(tr.space_map)),
        dim_(init.dim),
        eps_(tr.conformal_exponent),
        energy_(tr.energy),
        h2m_(init.hbar * init.hbar / init.mass),
        reading_(reading) {}

  struct Parts {
    double classical = 0.0;
    double quantum = 0.0;
  };

  Parts eval(std::span<const double> Q) const {
    const int d = dim_;
    const Jet2 fj = f_.jet(Q);
    if (!(fj.v > 0.0))
      throw NonPositiveTimeScale("transformed potential: f(Q) = " + num_str(fj.v) +
                                 " at Q = " + point_str(Q));
    Parts parts;
    parts.classical = fj.v * (potential_(map_(Q)) - energy_);
    if (h2m_ == 0.0) return parts;

    const MatrixJet ej = frame_.jet(Q);
    const MatrixJet gq = compose_jet(metric_, map_, Q);
    const MatrixJet ghat = pulled_metric_jet(ej, gq);
    const Jet2 fac = eps_ == 1 ? fj : inv(fj);
    MatrixJet gf = ghat;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        const Jet2 v = fac * entry_jet(ghat, i, j);
        set_entry(gf, i, j, v);
        if (j != i) set_entry(gf, j, i, v);
      }
    const Tensor3 gamma = christoffel(gf);  // rejects non-SPD g^(f)
    const Mat gfinv = lu_inverse(lu_factor(gf.m));

    Vec grad_log(d);
    for (int k = 0; k < d; ++k) grad_log[k] = fj.g[k] / fj.v;

    Vec curly(d, 0.0);
    if (reading_ == ChristoffelReading::kRaisedLower) {
      for (int mu = 0; mu < d; ++mu)
        for (int lam = 0; lam < d; ++lam)
          for (int sig = 0; sig < d; ++sig) curly[mu] += gfinv(lam, sig) * gamma(sig, lam, mu);
    } else {
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu) {
          double trace = 0.0;
          for (int lam = 0; lam < d; ++lam) trace += gamma(lam, nu, lam);
          curly[mu] += gfinv(mu, nu) * trace;
        }
    }

    const double c1 = (2.0 - d) / 8.0;
    const double c2 = (d - 2.0) * (d - 6.0) / 32.0;
    const double c3 = (d - 2.0) / 8.0;
    double t1 = 0.0;
    for (int mu = 0; mu < d; ++mu) t1 += curly[mu] * grad_log[mu];
    double t2 = 0.0;
    for (int lam = 0; lam < d; ++lam)
      for (int mu = 0; mu < d; ++mu)
        t2 += gfinv(lam, mu) * (c2 * grad_log[lam] * grad_log[mu] + c3 * fj.h(lam, mu) / fj.v);
    parts.quantum = h2m_ * (c1 * t1 + t2);
    return parts;
  }

 private:
  MetricField metric_;
  ScalarField potential_;
  SmoothMap map_;
  ScalarField f_;
  MatrixField frame_;
  int dim_;
  int eps_;
  double energy_;
  double h2m_;
  ChristoffelReading reading_;
};

}  // namespace

ScalarField quantum_potential_direct(const SystemSpec& init, const TransformSpec& tr,
                                     ChristoffelReading reading) {
  auto ev = std::make_shared<DirectPotentialEvaluator>(init, tr, reading);
  return ScalarField::from_callable(init.dim, [ev](std::span<const double> Q) {
    const DirectPotentialEvaluator::Parts p = ev->eval(Q);
    return p.classical + p.quantum;
  });
}

ScalarField quantum_potential_geometric(const SystemSpec& init, const TransformSpec& tr,
                                        TorsionSquareMetric ts) {
  const int d = init.dim;
  FrameField frame = FrameField::from_space_map(tr.space_map, tr.time_scale);
  MetricField g = init.metric;
  const double h2m = init.hbar * init.hbar / init.mass;
  const double eps = tr.conformal_exponent;
  const double c1 = (4.0 - static_cast<double>(d) * d) / 8.0;
  const double c2 = (d - 2.0) / 16.0;
  return ScalarField::from_callable(d, [=](std::span<const double> Q) {
    const CartanAudit a = cartan_audit(frame, g, Q, ts, eps);
    return a.f * h2m * (c1 * a.torsion_square + c2 * (a.cartan_scalar - a.riemann_scalar));
  });
}

TransformedSystem transform_system(const SystemSpec& init, const TransformSpec& tr,
                                   ChristoffelReading reading) {
  TransformedSystem out;
  out.initial = init;
  out.transform = tr;
  out.reading = reading;
  SystemSpec& s = out.system;
  s.dim = init.dim;
  s.mass = init.mass;
  s.hbar = init.hbar;
  s.metric = pull_metric(init, tr);
  s.vector_potential = pull_vector_potential(init, tr);
  s.domain = tr.domain;
  if (init.hbar > 0.0) {
    s.scalar_potential = quantum_potential_direct(init, tr, reading);
    auto ev = std::make_shared<DirectPotentialEvaluator>(init, tr, reading);
    out.quantum_correction = ScalarField::from_callable(
        init.dim, [ev](std::span<const double> Q) { return ev->eval(Q).quantum; });
  } else {
    s.scalar_potential = classical_potential(init, tr);
    out.quantum_correction = ScalarField::zero(init.dim);
  }
  return out;
}

std::vector<std::string> transform_validation_issues(const SystemSpec& init,
                                                     const TransformSpec& tr,
                                                     int samples_per_dim) {
  std::vector<std::string> issues = init.validate();
  {
    std::vector<std::string> more = tr.validate(init.dim);
    issues.insert(issues.end(), more.begin(), more.end());
  }
  if (!issues.empty()) return issues;  // structure broken; sampling would just throw

  constexpr double kSchwarzTol = 1e-8;
  constexpr double kInverseTol = 1e-9;
  samples_per_dim = std::max(samples_per_dim, 1);

  for (const Vec& q : init.domain.grid(samples_per_dim)) {
    if (!cholesky(init.metric.value(q))) {
      issues.push_back("initial metric is not positive definite at q = " + point_str(q));
      break;
    }
  }

  const MatrixField e = holonomic_frame(tr.space_map);
  const MetricField gf = pull_metric(init, tr);
  double worst_schwarz = 0.0;
  Vec worst_at;
  bool f_flagged = false, spd_flagged = false, inv_flagged = false;
  for (const Vec& Q : tr.domain.grid(samples_per_dim)) {
    const double fv = tr.time_scale(Q);
    if (!(fv > 0.0)) {
      if (!f_flagged)
        issues.push_back("time scale f(Q) = " + num_str(fv) + " is not positive at Q = " +
                         point_str(Q));
      f_flagged = true;
    }
    const double sr = schwarz_residual(e, Q);
    if (sr > worst_schwarz) {
      worst_schwarz = sr;
      worst_at = Q;
    }
    if (fv > 0.0 && !spd_flagged && !cholesky(gf.value(Q))) {
      issues.push_back("transformed metric is not positive definite at Q = " + point_str(Q) +
                       " (degenerate space map?)");
      spd_flagged = true;
    }
    if (tr.inverse_map.valid() && !inv_flagged) {
      const Vec back = tr.inverse_map(tr.space_map(Q));
      double err = 0.0;
      for (std::size_t i = 0; i < back.size(); ++i) err = std::max(err, std::abs(back[i] - Q[i]));
      if (err > kInverseTol) {
        issues.push_back("inverse map disagrees with space map: |Q(q(Q)) - Q| = " + num_str(err) +
                         " at Q = " + point_str(Q));
        inv_flagged = true;
      }
    }
  }
  if (worst_schwarz > kSchwarzTol)
    issues.push_back("space map is not holonomic: Schwarz residual " + num_str(worst_schwarz) +
                     " at Q = " + point_str(worst_at) + " exceeds " + num_str(kSchwarzTol));
  return issues;
}

}  // namespace nst
