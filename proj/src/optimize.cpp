#include "lapmax/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>

#include "lapmax/errors.hpp"
#include "lapmax/rng.hpp"

namespace lapmax {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::boundary_divergence: return "boundary_divergence";
  }
  return "unknown";
}

namespace {

/// Thrown inside objective evaluations when an iterate runs into the
/// simplex boundary or past the eigenvalue cap.
struct BoundaryHit {
  LengthFunction lengths;
};

double lambda1_of(const Graph& g, const LengthFunction& l) {
  return lambda1_value(laplacian_from_lengths(g, l));
}

/// Open-simplex chart: z ∈ R^{m-1} → lengths with Σl = 1/2, last
/// coordinate pinned to zero before the softmax.
Vec chart_to_lengths(const Vec& z) {
  int m = static_cast<int>(z.size()) + 1;
  Vec expz(m);
  double zmax = 0.0;
  for (double v : z) zmax = std::max(zmax, v);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    double zi = i + 1 < m ? z[i] : 0.0;
    expz[i] = std::exp(zi - zmax);
    total += expz[i];
  }
  for (double& v : expz) v = 0.5 * v / total;
  return expz;
}

Vec lengths_to_chart(const Vec& l) {
  int m = static_cast<int>(l.size());
  Vec z(m - 1);
  for (int i = 0; i + 1 < m; ++i) z[i] = std::log(l[i] / l[m - 1]);
  return z;
}

/// Nelder-Mead minimization, standard coefficients. Returns the best
/// vertex; `trace` collects the best objective value per iteration.
Vec nelder_mead(const std::function<double(const Vec&)>& f, Vec z0, int max_iter, Vec* trace) {
  const int d = static_cast<int>(z0.size());
  if (d == 0) return z0;
  const double step = 0.25;
  std::vector<Vec> pts(d + 1, z0);
  Vec fv(d + 1);
  for (int i = 0; i < d; ++i) pts[i + 1][i] += step;
  for (int i = 0; i <= d; ++i) fv[i] = f(pts[i]);

  auto order = [&]() {
    std::vector<int> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Vec> p2(d + 1);
    Vec f2(d + 1);
    for (int i = 0; i <= d; ++i) {
      p2[i] = pts[idx[i]];
      f2[i] = fv[idx[i]];
    }
    pts = std::move(p2);
    fv = std::move(f2);
  };

  for (int it = 0; it < max_iter; ++it) {
    order();
    if (trace) trace->push_back(-fv[0]);
    double spread = fv[d] - fv[0];
    double diam = 0.0;
    for (int i = 1; i <= d; ++i)
      for (int k = 0; k < d; ++k) diam = std::max(diam, std::abs(pts[i][k] - pts[0][k]));
    if (spread <= 1e-13 * (1.0 + std::abs(fv[0])) && diam <= 1e-9) break;

    Vec centroid(d, 0.0);
    for (int i = 0; i < d; ++i) axpy(1.0 / d, pts[i], centroid);
    auto blend = [&](double coef) {
      Vec p(d);
      for (int k = 0; k < d; ++k) p[k] = centroid[k] + coef * (pts[d][k] - centroid[k]);
      return p;
    };

    Vec refl = blend(-1.0);
    double frefl = f(refl);
    if (frefl < fv[0]) {
      Vec expd = blend(-2.0);
      double fexpd = f(expd);
      if (fexpd < frefl) {
        pts[d] = std::move(expd);
        fv[d] = fexpd;
      } else {
        pts[d] = std::move(refl);
        fv[d] = frefl;
      }
    } else if (frefl < fv[d - 1]) {
      pts[d] = std::move(refl);
      fv[d] = frefl;
    } else {
      bool outside = frefl < fv[d];
      Vec contr = blend(outside ? -0.5 : 0.5);
      double fcontr = f(contr);
      if (fcontr < std::min(frefl, fv[d])) {
        pts[d] = std::move(contr);
        fv[d] = fcontr;
      } else {
        for (int i = 1; i <= d; ++i) {
          for (int k = 0; k < d; ++k) pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
          fv[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  return pts[0];
}

/// Minimum-norm point of the convex hull of `pts` via Frank-Wolfe with
/// exact line search (the dual of the max-min direction subproblem).
Vec min_norm_point(const std::vector<Vec>& pts, int max_iter = 2000) {
  Vec z = pts.front();
  for (int it = 0; it < max_iter; ++it) {
    double best = std::numeric_limits<double>::infinity();
    int kbest = 0;
    for (size_t k = 0; k < pts.size(); ++k) {
      double v = dot(pts[k], z);
      if (v < best) {
        best = v;
        kbest = static_cast<int>(k);
      }
    }
    double zz = dot(z, z);
    if (zz - best <= 1e-14 * std::max(1.0, zz)) break;
    Vec diff = z;
    axpy(-1.0, pts[kbest], diff);
    double dd = dot(diff, diff);
    if (dd <= 0.0) break;
    double t = std::clamp(dot(z, diff) / dd, 0.0, 1.0);
    for (size_t i = 0; i < z.size(); ++i) z[i] = (1.0 - t) * z[i] + t * pts[kbest][i];
    if (t <= 0.0) break;
  }
  return z;
}

/// Unit coefficient vectors on the μ-sphere whose q-forms generate the
/// sampled spectral set. Antipodal pairs are redundant (q is even).
std::vector<Vec> sphere_samples(int mu, int count, uint64_t seed) {
  if (mu == 1) return {Vec{1.0}};
  std::vector<Vec> cs;
  if (mu == 2) {
    for (int k = 0; k < count; ++k) {
      double theta = std::numbers::pi * k / count;
      cs.push_back({std::cos(theta), std::sin(theta)});
    }
    return cs;
  }
  for (int i = 0; i < mu; ++i) {
    Vec e(mu, 0.0);
    e[i] = 1.0;
    cs.push_back(std::move(e));
  }
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  for (int k = 0; k < count * mu; ++k) {
    Vec c = rng.normal_vec(mu);
    double n = norm(c);
    if (n < 1e-12) continue;
    for (double& v : c) v /= n;
    cs.push_back(std::move(c));
  }
  return cs;
}

/// Zero-sum projections of the sampled q-vectors; the polish step
/// ascends against their min-norm hull point.
std::vector<Vec> projected_q_samples(const Graph& g, const SpectralState& st,
                                     const EdgeQuadraticForms& forms, int count, uint64_t seed) {
  const int mu = st.eigenpair.multiplicity;
  const int ne = g.edge_count();
  std::vector<Vec> out;
  for (const Vec& c : sphere_samples(mu, count, seed)) {
    Vec q(ne);
    double mean = 0.0;
    for (int e = 0; e < ne; ++e) {
      double s = 0.0;
      for (int i = 0; i < mu; ++i)
        for (int j = 0; j < mu; ++j) s += c[i] * c[j] * forms.q[e](i, j);
      q[e] = s;
      mean += s;
    }
    mean /= ne;
    for (double& v : q) v -= mean;
    out.push_back(std::move(q));
  }
  return out;
}

/// Newton refinement for a simple first eigenvalue: drive the q-form
/// differences q_e - q_last to zero over the chart of free lengths
/// (the remainder pinned by the normalization). Quadratic convergence
/// where gradient steps on λ₁ stall against eigensolver noise.
bool newton_polish(const Graph& g, LengthFunction& l, double mult_tol) {
  const int ne = g.edge_count();
  const int d = ne - 1;
  if (d == 0) return true;

  auto q_at = [&](const Vec& lengths) -> std::optional<Vec> {
    try {
      LengthFunction lf{lengths, true};
      WeightedLaplacian lap = laplacian_from_lengths(g, lf);
      EigenspaceBasis pair = first_eigenpair(lap, mult_tol);
      if (pair.multiplicity != 1) return std::nullopt;
      return q_form(g, pair.basis[0], lf, pair.lambda1);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  auto residual = [&](const Vec& q) {
    Vec f(d);
    for (int e = 0; e < d; ++e) f[e] = q[e] - q[ne - 1];
    return f;
  };
  auto with_free = [&](const Vec& base, int j, double delta) {
    Vec lengths = base;
    lengths[j] += delta;
    lengths[ne - 1] -= delta;
    return lengths;
  };

  Vec cur = l.value;
  std::optional<Vec> q0 = q_at(cur);
  if (!q0) return false;
  Vec f = residual(*q0);
  double fnorm = max_abs(f);
  double qscale = std::max(1.0, max_abs(*q0));
  bool improved = false;

  for (int it = 0; it < 30 && fnorm > 1e-12 * qscale; ++it) {
    double h = 1e-7 * *std::min_element(cur.begin(), cur.end());
    Mat jac(d, d);
    bool ok = true;
    for (int j = 0; j < d && ok; ++j) {
      std::optional<Vec> qp = q_at(with_free(cur, j, h));
      std::optional<Vec> qm = q_at(with_free(cur, j, -h));
      if (!qp || !qm) {
        ok = false;
        break;
      }
      Vec fp = residual(*qp), fm = residual(*qm);
      for (int i = 0; i < d; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
    if (!ok) break;
    Vec delta;
    if (!solve_dense(jac, scaled(f, -1.0), delta)) break;

    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 12 && !accepted; ++half, step *= 0.5) {
      Vec trial = cur;
      double moved = 0.0;
      for (int j = 0; j < d; ++j) {
        trial[j] += step * delta[j];
        moved += step * delta[j];
      }
      trial[ne - 1] -= moved;
      if (std::any_of(trial.begin(), trial.end(), [](double v) { return !(v > 0.0); })) continue;
      std::optional<Vec> qt = q_at(trial);
      if (!qt) continue;
      Vec ft = residual(*qt);
      double fnorm_t = max_abs(ft);
      if (fnorm_t < fnorm) {
        cur = std::move(trial);
        f = std::move(ft);
        fnorm = fnorm_t;
        accepted = improved = true;
      }
    }
    if (!accepted) break;
  }
  if (improved) l = LengthFunction{cur, true};
  return fnorm <= 1e-12 * qscale;
}

void attach_certificate(OptResult& res, const Graph& g, const SpectralState& st,
                        const SolveOptions& opts) {
  EdgeQuadraticForms forms =
      edge_form_matrices(g, st.eigenpair, st.laplacian.m0, st.lengths, CertMode::problem1);
  Vec targets = cone_targets(g, st.lengths, CertMode::problem1);
  ConeSolution sol = solve_cone_feasibility(forms, targets, opts.cone);
  res.feasibility = sol.report;
  if (sol.report.status == FeasibilityStatus::feasible && sol.gram) {
    res.certificate =
        build_embedding(g, *sol.gram, st.eigenpair, st.lengths, CertMode::problem1, 1.0);
    res.certificate_report =
        verify_certificate(*res.certificate, st.laplacian, st.lengths, 10.0 * opts.cone.tol);
  }
}

}  // namespace

OptResult maximize_lengths(const Graph& g, const LengthFunction& init, const SolveOptions& opts) {
  for (double v : init.value)
    if (!(v > 0.0)) throw InvalidInit("initial lengths must be positive");
  if (!is_normalized(init)) throw InvalidInit("initial lengths are not normalized");

  OptResult res;
  LengthFunction l = init;
  l.normalized = true;

  auto boundary_result = [&](const LengthFunction& at) {
    res.lengths = at;
    res.termination = Termination::boundary_divergence;
    WeightedLaplacian lap = laplacian_from_lengths(g, at);
    Spectrum s = eig_sym(lap.matrix);
    res.lambda1 = s.eigenvalues[1];
    res.multiplicity = 0;
    for (double mt = DEFAULT_MULT_TOL; mt <= 1e-3; mt *= 100.0) {
      try {
        res.multiplicity = first_eigenpair(lap, mt).multiplicity;
        break;
      } catch (const Error&) {
      }
    }
    res.trace.push_back(res.lambda1);
    return res;
  };

  auto guarded_lambda = [&](const LengthFunction& lf) {
    for (double v : lf.value)
      if (v < opts.boundary_eps) throw BoundaryHit{lf};
    double lam;
    try {
      lam = lambda1_of(g, lf);
    } catch (const ZeroNotSimple&) {
      // The matrix scale has outrun the eigenvalue: an edge weight is
      // effectively collapsing, which is boundary behavior.
      throw BoundaryHit{lf};
    }
    if (lam > opts.lambda_cap) throw BoundaryHit{lf};
    return lam;
  };

  // Phase 1: derivative-free polish through the simplex chart.
  if (opts.derivative_free_phase && g.edge_count() > 1) {
    auto objective = [&](const Vec& z) {
      LengthFunction lf{chart_to_lengths(z), true};
      return -guarded_lambda(lf);
    };
    try {
      Vec zbest = nelder_mead(objective, lengths_to_chart(l.value), opts.nm_max_iter, &res.trace);
      l = LengthFunction{chart_to_lengths(zbest), true};
    } catch (const BoundaryHit& hit) {
      return boundary_result(hit.lengths);
    }
  }

  // Phase 2: multiplicity-aware first-order refinement.
  double mult_tol_eff = opts.mult_tol;
  bool escalated = false;
  auto analyze_robust = [&](const LengthFunction& lf) {
    for (;;) {
      try {
        return analyze_lengths(g, lf, mult_tol_eff);
      } catch (const DegenerateGap&) {
        if (mult_tol_eff > 1e-3) {
          // Still straddling at the widest tolerance: absorb the whole
          // chain of near-coincident branches.
          SpectralState st{lf, laplacian_from_lengths(g, lf), {}};
          st.eigenpair = first_eigenpair_chain(st.laplacian, mult_tol_eff);
          return st;
        }
        mult_tol_eff *= 100.0;
      }
    }
  };

  SpectralState st = analyze_robust(l);
  res.trace.push_back(st.eigenpair.lambda1);
  double h_warm = 0.01;

  if (g.edge_count() == 1) {
    // Single edge: the normalized point is the whole feasible set.
    res.termination = Termination::converged;
  } else {
    for (int iter = 0; iter < opts.polish_max_iter; ++iter) {
      double lam = st.eigenpair.lambda1;
      double minl = *std::min_element(l.value.begin(), l.value.end());
      if (minl < opts.boundary_eps || lam > opts.lambda_cap) return boundary_result(l);

      EdgeQuadraticForms forms =
          edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::problem1);
      std::vector<Vec> qs =
          projected_q_samples(g, st, forms, opts.spectral_samples, opts.seed + iter);
      Vec z = min_norm_point(qs);
      double ascent = norm(z);

      if (ascent <= opts.direction_tol_factor * std::max(1.0, lam)) {
        res.termination = Termination::converged;
        break;
      }

      // Close to a simple-eigenvalue root of the extremality system the
      // gradient steps stall against eigensolver noise; switch to the
      // quadratically convergent root solve.
      if (st.eigenpair.multiplicity == 1 && ascent <= 1e-3 * std::max(1.0, lam)) {
        LengthFunction refined = l;
        bool hit = newton_polish(g, refined, mult_tol_eff);
        double lam_ref = lambda1_of(g, refined);
        if (hit && lam_ref >= lam - 1e-6 * std::max(1.0, lam)) {
          l = normalize_lengths(refined);
          st = analyze_robust(l);
          res.trace.push_back(st.eigenpair.lambda1);
          res.termination = Termination::converged;
          break;
        }
      }

      Vec rho = scaled(z, -1.0 / ascent);
      double h_max = std::numeric_limits<double>::infinity();
      for (int e = 0; e < g.edge_count(); ++e)
        if (rho[e] < 0.0) h_max = std::min(h_max, -0.9 * l.value[e] / rho[e]);
      double h = std::min(h_warm * 4.0, h_max);
      bool accepted = false;
      while (h >= 1e-15) {
        LengthFunction trial = l;
        axpy(h, rho, trial.value);
        double lam_new;
        try {
          lam_new = guarded_lambda(trial);
        } catch (const BoundaryHit& hit) {
          return boundary_result(hit.lengths);
        }
        if (lam_new >= lam + 0.1 * h * ascent) {
          l = normalize_lengths(trial);
          st = analyze_robust(l);
          res.trace.push_back(st.eigenpair.lambda1);
          h_warm = h;
          accepted = true;
          break;
        }
        h *= 0.5;
      }
      if (!accepted) {
        if (!escalated && mult_tol_eff < 1e-3) {
          // Likely a nonsmooth crease between eigenvalue branches:
          // widen the cluster tolerance and retry with the larger
          // spectral set.
          escalated = true;
          mult_tol_eff = std::min(1e-3, mult_tol_eff * 100.0);
          st = analyze_robust(l);
          continue;
        }
        res.termination = Termination::converged;
        break;
      }
    }
  }

  res.lengths = l;
  res.lambda1 = st.eigenpair.lambda1;
  res.multiplicity = st.eigenpair.multiplicity;

  std::vector<Vec> dirs =
      sample_constraint_directions(g.edge_count(), opts.extremality_directions, opts.seed);
  res.extremality =
      extremality_check(g, l, st.eigenpair, st.laplacian.m0, st.laplacian.m1, dirs,
                        opts.extremality_tol_factor * std::max(1.0, st.eigenpair.lambda1));
  if (res.termination == Termination::converged && !res.extremality->pass)
    res.termination = Termination::max_iter;

  attach_certificate(res, g, st, opts);
  return res;
}

namespace {

/// Euclidean projection onto {x ≥ 0, Σ w·x = 1} by bisection on the
/// piecewise-linear multiplier.
Vec project_weighted_simplex(const Vec& y, const Vec& w) {
  const int n = static_cast<int>(y.size());
  auto value = [&](double tau) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += w[i] * std::max(0.0, y[i] - tau * w[i]);
    return s;
  };
  double ww = 0.0, wy = 0.0;
  for (int i = 0; i < n; ++i) {
    ww += w[i] * w[i];
    wy += w[i] * y[i];
  }
  double lo = (wy - 1.0) / ww;  // value(lo) ≥ 1
  double hi = 0.0;
  for (int i = 0; i < n; ++i) hi = std::max(hi, y[i] / w[i]);
  if (value(lo) < 1.0) lo = hi - std::max(1.0, std::abs(hi));
  while (value(lo) < 1.0) lo -= std::max(1.0, hi - lo);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (value(mid) >= 1.0 ? lo : hi) = mid;
  }
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = std::max(0.0, y[i] - lo * w[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += w[i] * x[i];
  for (double& v : x) v /= s;
  return x;
}

}  // namespace

OptResult maximize_ghw(const Graph& g, const VertexWeight& m0, const LengthFunction& l,
                       const GhwOptions& opts) {
  const int ne = g.edge_count();
  double m0_total = 0.0;
  for (double v : m0.value) {
    if (!(v > 0.0)) throw InvalidVertexWeight("vertex weights must be positive");
    m0_total += v;
  }
  if (std::abs(m0_total - 1.0) > 1e-10)
    throw InvalidVertexWeight("vertex weights must sum to one");
  for (double v : l.value)
    if (!(v > 0.0)) throw NonPositiveLength("edge lengths must be positive");

  Vec w(ne);
  for (int e = 0; e < ne; ++e) w[e] = l.value[e] * l.value[e];

  double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  EdgeWeight m1{Vec(ne, 1.0 / wsum)};

  auto clamp_support = [&](Vec& x) {
    std::vector<bool> support(ne);
    for (int e = 0; e < ne; ++e) support[e] = x[e] > opts.support_tol;
    if (!support_connected(g, support)) return;  // keep tiny weights alive
    for (int e = 0; e < ne; ++e)
      if (!support[e]) x[e] = 0.0;
  };

  double mult_tol_eff = opts.mult_tol;
  auto eigen_at = [&](const EdgeWeight& m) {
    WeightedLaplacian lap = assemble_laplacian(g, m0, m);
    for (;;) {
      try {
        return std::pair<WeightedLaplacian, EigenspaceBasis>(lap, first_eigenpair(lap, mult_tol_eff));
      } catch (const DegenerateGap&) {
        if (mult_tol_eff > 1e-3) throw;
        mult_tol_eff *= 100.0;
      }
    }
  };

  OptResult res;
  auto [lap, pair] = eigen_at(m1);
  res.trace.push_back(pair.lambda1);

  auto supergradient = [&](const WeightedLaplacian& lp, const EigenspaceBasis& basis) {
    const int mu = basis.multiplicity;
    auto diff_sq = [&](const Vec& coeff) {
      Vec q(ne);
      for (int e = 0; e < ne; ++e) {
        double d = 0.0;
        for (int i = 0; i < mu; ++i)
          d += coeff[i] * (basis.basis[i][g.edge(e).u] - basis.basis[i][g.edge(e).v]);
        q[e] = d * d;
      }
      return q;
    };
    if (mu == 1) return diff_sq({1.0});
    // Average supergradient, then refine with the minimum-eigenvalue
    // coefficient vector of the first-order matrix along its own
    // tangent projection.
    Vec avg(ne, 0.0);
    for (int i = 0; i < mu; ++i) {
      Vec ci(mu, 0.0);
      ci[i] = 1.0;
      axpy(1.0 / mu, diff_sq(ci), avg);
    }
    Vec d = avg;
    double scale = dot(d, w) / dot(w, w);
    axpy(-scale, w, d);
    PerturbationDirection dir;
    dir.m0_dot.assign(g.vertex_count(), 0.0);
    dir.m1_dot = d;
    Mat m = perturbation_matrix(g, basis, lp.m0, lp.m1, dir);
    Spectrum s = eig_sym(m);
    return diff_sq(s.eigenvectors.column(0));
  };

  auto duality_gap = [&](const WeightedLaplacian& lp, const EigenspaceBasis& basis,
                         OptResult& out) -> std::optional<double> {
    std::vector<int> support;
    for (int e = 0; e < ne; ++e)
      if (lp.m1.value[e] > opts.support_tol) support.push_back(e);
    EdgeQuadraticForms forms =
        edge_form_matrices(g, basis, lp.m0, l, CertMode::ghw);
    EdgeQuadraticForms sub{CertMode::ghw, {}};
    Vec targets;
    for (int e : support) {
      sub.q.push_back(forms.q[e]);
      targets.push_back(l.value[e] * l.value[e]);
    }
    ConeSolution sol = solve_cone_feasibility(sub, targets, opts.cone);
    out.feasibility = sol.report;
    if (sol.report.status != FeasibilityStatus::feasible || !sol.gram) return std::nullopt;
    out.certificate = build_embedding(g, *sol.gram, basis, l, CertMode::ghw, 1.0);
    out.certificate_report = verify_certificate(*out.certificate, lp, l, 10.0 * opts.cone.tol);
    if (support.size() < static_cast<size_t>(ne)) {
      // Dropped edges only owe the distance inequality, which the dual
      // check covers; judge the equation on the support alone.
      double worst = 0.0;
      for (int e : support) worst = std::max(worst, out.certificate_report->edge_residuals[e]);
      out.certificate_report->pass =
          worst < 10.0 * opts.cone.tol &&
          out.certificate_report->max_eigen_residual < 1e-8 * std::max(1.0, basis.lambda1);
    }
    VarianceDualReport dual = variance_dual_check(*out.certificate, g, m0, lp.m1, l, 1e-7);
    out.ghw_duality_gap = dual.gap;
    return std::abs(dual.gap);
  };

  double h_warm = 1.0;
  bool done = false;
  for (int iter = 0; iter < opts.max_iter && !done; ++iter) {
    double lam = pair.lambda1;
    Vec grad = supergradient(lap, pair);

    double h = h_warm * 4.0;
    bool accepted = false;
    while (h >= 1e-13) {
      Vec trial = m1.value;
      axpy(h, grad, trial);
      trial = project_weighted_simplex(trial, w);
      clamp_support(trial);
      EdgeWeight m_trial{trial};
      std::vector<bool> support(ne);
      for (int e = 0; e < ne; ++e) support[e] = trial[e] > 0.0;
      if (!support_connected(g, support)) {
        h *= 0.5;
        continue;
      }
      std::pair<WeightedLaplacian, EigenspaceBasis> next = [&] {
        try {
          return eigen_at(m_trial);
        } catch (const Error&) {
          // Near-degenerate trial (some weight collapsed): reject it.
          return std::pair<WeightedLaplacian, EigenspaceBasis>(lap, pair);
        }
      }();
      auto& [lap_t, pair_t] = next;
      if (pair_t.lambda1 > lam + 1e-14 * std::max(1.0, lam)) {
        m1 = m_trial;
        lap = std::move(lap_t);
        pair = std::move(pair_t);
        res.trace.push_back(pair.lambda1);
        h_warm = h;
        accepted = true;
        break;
      }
      h *= 0.5;
    }

    bool check_gap = !accepted || (iter % 10 == 9);
    if (check_gap) {
      std::optional<double> gap = duality_gap(lap, pair, res);
      if (gap && *gap < opts.gap_tol) {
        res.termination = Termination::converged;
        done = true;
      }
    }
    if (!accepted && !done) {
      // Step size underflow in a concave program: no ascent remains.
      res.termination = Termination::converged;
      done = true;
    }
  }

  res.weights = m1;
  res.lambda1 = pair.lambda1;
  res.multiplicity = pair.multiplicity;
  res.ghw_degenerate =
      std::any_of(m1.value.begin(), m1.value.end(), [](double v) { return v == 0.0; });
  if (!res.certificate) duality_gap(lap, pair, res);
  return res;
}

GridTable landscape_scan(const Graph& g, const GridSpec& spec) {
  if (spec.axes.empty()) throw EmptyGrid("scan needs at least one axis");
  long total = 1;
  for (const GridAxis& ax : spec.axes) {
    if (ax.count < 1) throw EmptyGrid("axis '" + ax.label + "' has no points");
    total *= ax.count;
  }
  std::vector<int> assigned(g.edge_count(), 0);
  auto tally = [&](const std::vector<int>& ids) {
    for (int e : ids) {
      if (e < 0 || e >= g.edge_count()) throw EmptyGrid("scan references an unknown edge");
      ++assigned[e];
    }
  };
  for (const GridAxis& ax : spec.axes) tally(ax.edge_ids);
  for (const auto& [ids, val] : spec.fixed) tally(ids);
  tally(spec.computed);
  for (int e = 0; e < g.edge_count(); ++e)
    if (assigned[e] != 1)
      throw EmptyGrid("edge " + g.edge_label(e) + " must get exactly one length assignment");

  GridTable table;
  table.axes = spec.axes;
  table.points.reserve(total);

  std::vector<int> idx(spec.axes.size(), 0);
  const int ne = g.edge_count();
  for (long p = 0; p < total; ++p) {
    GridPoint pt;
    Vec lengths(ne, -1.0);
    double assigned = 0.0;
    for (size_t a = 0; a < spec.axes.size(); ++a) {
      const GridAxis& ax = spec.axes[a];
      double val = ax.count == 1
                       ? ax.lo
                       : ax.lo + (ax.hi - ax.lo) * idx[a] / (ax.count - 1);
      pt.coords.push_back(val);
      for (int e : ax.edge_ids) {
        lengths[e] = val;
        assigned += val;
      }
    }
    for (const auto& [ids, val] : spec.fixed)
      for (int e : ids) {
        lengths[e] = val;
        assigned += val;
      }
    if (!spec.computed.empty()) {
      double remainder = 0.5 - assigned;
      double share = remainder / static_cast<double>(spec.computed.size());
      for (int e : spec.computed) lengths[e] = share;
    }

    double total = std::accumulate(lengths.begin(), lengths.end(), 0.0);
    pt.valid = std::all_of(lengths.begin(), lengths.end(),
                           [&](double v) { return v >= spec.min_length; }) &&
               std::abs(2.0 * total - 1.0) <= 1e-9;
    if (pt.valid) {
      LengthFunction lf{lengths, true};
      double mult_tol = spec.mult_tol;
      for (;;) {
        try {
          EigenspaceBasis pair = first_eigenpair(laplacian_from_lengths(g, lf), mult_tol);
          pt.lambda1 = pair.lambda1;
          pt.multiplicity = pair.multiplicity;
          break;
        } catch (const DegenerateGap&) {
          if (mult_tol > 1e-3) throw;
          mult_tol *= 100.0;
        }
      }
      pt.divergent = pt.lambda1 > spec.lambda_cap;
    } else {
      pt.lambda1 = std::numeric_limits<double>::quiet_NaN();
      pt.divergent = true;
    }
    table.points.push_back(std::move(pt));

    for (int a = static_cast<int>(idx.size()) - 1; a >= 0; --a) {
      if (++idx[a] < spec.axes[a].count) break;
      idx[a] = 0;
    }
  }
  return table;
}

std::string grid_to_csv(const GridTable& table) {
  if (table.points.empty()) throw EmptyGrid("empty grid table");
  std::string out;
  for (const GridAxis& ax : table.axes) {
    out += ax.label;
    out += ',';
  }
  out += "lambda1,multiplicity,divergent\n";
  char buf[64];
  for (const GridPoint& pt : table.points) {
    for (double c : pt.coords) {
      std::snprintf(buf, sizeof buf, "%.12g,", c);
      out += buf;
    }
    if (pt.valid) {
      std::snprintf(buf, sizeof buf, "%.12g,%d,%d\n", pt.lambda1, pt.multiplicity,
                    pt.divergent ? 1 : 0);
    } else {
      std::snprintf(buf, sizeof buf, "nan,0,1\n");
    }
    out += buf;
  }
  return out;
}

VarianceDualReport variance_dual_check(const EmbeddingCertificate& cert, const Graph& g,
                                       const VertexWeight& m0, const EdgeWeight& m1,
                                       const LengthFunction& l, double tol) {
  if (cert.mode != CertMode::ghw)
    throw WrongMode("variance dual check needs a ghw-mode certificate");

  const int n = g.vertex_count();
  double m0_total = 0.0;
  for (double v : m0.value) m0_total += v;

  VarianceDualReport report;
  Vec mean(cert.dim, 0.0);
  for (int k = 0; k < cert.dim; ++k) {
    for (int u = 0; u < n; ++u) mean[k] += m0.value[u] * cert.map(k, u);
    mean[k] /= m0_total;
  }
  for (int u = 0; u < n; ++u) {
    double s = 0.0;
    for (int k = 0; k < cert.dim; ++k) {
      double d = cert.map(k, u) - mean[k];
      s += d * d;
    }
    report.variance += m0.value[u] * s;
  }
  report.bound = 1.0 / cert.lambda1;
  report.gap = report.bound - report.variance;
  report.weak_duality_ok = report.variance <= report.bound + tol;

  for (int e = 0; e < g.edge_count(); ++e) {
    int u = g.edge(e).u, v = g.edge(e).v;
    double d2 = 0.0;
    for (int k = 0; k < cert.dim; ++k) {
      double d = cert.map(k, u) - cert.map(k, v);
      d2 += d * d;
    }
    double le = l.value[e];
    report.max_edge_violation =
        std::max(report.max_edge_violation, std::sqrt(d2) - le);
    report.max_slackness =
        std::max(report.max_slackness, std::abs(m1.value[e] * (le * le - d2)));
  }
  report.max_edge_violation = std::max(0.0, report.max_edge_violation);
  report.pass =
      report.weak_duality_ok && report.max_edge_violation <= tol && report.max_slackness <= tol;
  return report;
}

}  // namespace lapmax
