#include "lapmax/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "lapmax/errors.hpp"

namespace lapmax {

EdgeQuadraticForms edge_form_matrices(const Graph& g, const EigenspaceBasis& basis,
                                      const VertexWeight& m0, const LengthFunction& l,
                                      CertMode mode) {
  if (orthonormality_residual(basis.basis, m0) > 1e-8)
    throw BasisMismatch("eigenspace basis is not m0-orthonormal");
  const int mu = basis.multiplicity;
  EdgeQuadraticForms forms;
  forms.mode = mode;
  forms.q.reserve(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!(l.value[e] > 0.0)) throw NonPositiveLength("nonpositive length on " + g.edge_label(e));
    int u = g.edge(e).u, v = g.edge(e).v;
    double inv_l2 = 1.0 / (l.value[e] * l.value[e]);
    Mat q(mu, mu);
    for (int i = 0; i < mu; ++i) {
      for (int j = i; j < mu; ++j) {
        double di = basis.basis[i][u] - basis.basis[i][v];
        double dj = basis.basis[j][u] - basis.basis[j][v];
        double s;
        if (mode == CertMode::problem1) {
          s = inv_l2 * di * dj + basis.lambda1 * (basis.basis[i][u] * basis.basis[j][u] +
                                                  basis.basis[i][v] * basis.basis[j][v]);
        } else {
          s = di * dj;
        }
        q(i, j) = q(j, i) = s;
      }
    }
    forms.q.push_back(std::move(q));
  }
  return forms;
}

Vec cone_targets(const Graph& g, const LengthFunction& l, CertMode mode) {
  Vec t(g.edge_count(), 1.0);
  if (mode == CertMode::ghw)
    for (int e = 0; e < g.edge_count(); ++e) t[e] = l.value[e] * l.value[e];
  return t;
}

namespace {

/// Spectral pseudo-inverse apply and range projection for the Gram of
/// the constraint matrices, built once per solve.
struct GramSolver {
  Spectrum spec;
  double cutoff = 0.0;

  explicit GramSolver(const Mat& gram) : spec(eig_sym(gram)) {
    double sigma_max = 0.0;
    for (double s : spec.eigenvalues) sigma_max = std::max(sigma_max, std::abs(s));
    cutoff = 1e-12 * std::max(sigma_max, 1e-300);
  }

  Vec pinv_apply(const Vec& r) const {
    int n = static_cast<int>(r.size());
    Vec out(n, 0.0);
    for (int k = 0; k < n; ++k) {
      if (spec.eigenvalues[k] <= cutoff) continue;
      Vec uk = spec.eigenvectors.column(k);
      axpy(dot(uk, r) / spec.eigenvalues[k], uk, out);
    }
    return out;
  }

  Vec range_complement(const Vec& t) const {
    int n = static_cast<int>(t.size());
    Vec out = t;
    for (int k = 0; k < n; ++k) {
      if (spec.eigenvalues[k] <= cutoff) continue;
      Vec uk = spec.eigenvectors.column(k);
      axpy(-dot(uk, t), uk, out);
    }
    return out;
  }
};

Vec constraint_values(const EdgeQuadraticForms& forms, const Mat& x) {
  Vec v(forms.q.size());
  for (size_t e = 0; e < forms.q.size(); ++e) v[e] = frob_dot(forms.q[e], x);
  return v;
}

Mat psd_project(const Mat& x, double* neg_part) {
  Spectrum s = eig_sym(x);
  int n = x.rows();
  Mat out(n, n);
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    double lam = s.eigenvalues[k];
    if (lam < 0.0) {
      worst = std::max(worst, -lam);
      continue;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) += lam * s.eigenvectors(i, k) * s.eigenvectors(j, k);
  }
  if (neg_part) *neg_part = worst;
  return out;
}

}  // namespace

ConeSolution solve_cone_feasibility(const EdgeQuadraticForms& forms, const Vec& targets,
                                    const ConeSolveOptions& opts) {
  const int ne = static_cast<int>(forms.q.size());
  const int mu = forms.q.front().rows();

  Mat gram(ne, ne);
  for (int e = 0; e < ne; ++e)
    for (int f = e; f < ne; ++f) gram(e, f) = gram(f, e) = frob_dot(forms.q[e], forms.q[f]);
  GramSolver gs(gram);

  auto affine_project = [&](const Mat& x) {
    Vec r = targets;
    Vec vals = constraint_values(forms, x);
    for (int e = 0; e < ne; ++e) r[e] -= vals[e];
    Vec alpha = gs.pinv_apply(r);
    Mat y = x;
    for (int e = 0; e < ne; ++e) y += alpha[e] * forms.q[e];
    return y;
  };

  Mat x = affine_project(Mat(mu, mu));
  Mat corr(mu, mu);
  double psd_res = 0.0;
  x = psd_project(x, &psd_res);

  double best = std::numeric_limits<double>::infinity();
  int stall = 0;
  ConeSolution sol;
  FeasibilityReport& rep = sol.report;

  for (int it = 1; it <= opts.max_iter; ++it) {
    Mat y = affine_project(x);
    Mat z = y + corr;
    x = psd_project(z, &psd_res);
    corr = z - x;

    Vec vals = constraint_values(forms, x);
    double aff_res = 0.0;
    for (int e = 0; e < ne; ++e) aff_res = std::max(aff_res, std::abs(vals[e] - targets[e]));

    rep.iterations = it;
    rep.affine_residual = aff_res;
    rep.psd_residual = psd_res;

    if (aff_res <= opts.tol) {
      rep.status = FeasibilityStatus::feasible;
      sol.gram = x;
      return sol;
    }
    if (aff_res < best * (1.0 - opts.stall_rel_improve)) {
      best = aff_res;
      stall = 0;
    } else if (++stall >= opts.stall_window) {
      rep.status = FeasibilityStatus::infeasible;
      break;
    }
  }
  if (rep.status != FeasibilityStatus::infeasible) {
    rep.status = FeasibilityStatus::max_iter;
    return sol;
  }

  // Separating witness: the affine-correction coefficients carry the
  // displacement between the two sets, and any component of the target
  // outside the constraint range is an obstruction on its own.
  Vec r = targets;
  Vec vals = constraint_values(forms, x);
  for (int e = 0; e < ne; ++e) r[e] -= vals[e];
  Vec nu = gs.pinv_apply(r);
  Vec t_perp = gs.range_complement(targets);
  axpy(1.0, t_perp, nu);
  double nn = norm(nu);
  if (nn > 0.0) {
    for (double& v : nu) v /= nn;
    rep.witness_target_dot = dot(nu, targets);
    Mat combo(mu, mu);
    for (int e = 0; e < ne; ++e) combo += nu[e] * forms.q[e];
    Spectrum cs = eig_sym(combo);
    rep.witness_form_max_eig = cs.eigenvalues.back();
    double scale = std::max(1.0, max_abs(combo));
    rep.witness_valid = rep.witness_target_dot > 0.0 && rep.witness_form_max_eig <= 1e-7 * scale;
    rep.witness = std::move(nu);
  }
  return sol;
}

namespace {

double edge_defect(const EmbeddingCertificate& cert, const Graph& g, const LengthFunction& l,
                   int e) {
  int u = g.edge(e).u, v = g.edge(e).v;
  double d2 = 0.0, nu2 = 0.0, nv2 = 0.0;
  for (int k = 0; k < cert.dim; ++k) {
    double du = cert.map(k, u), dv = cert.map(k, v);
    d2 += (du - dv) * (du - dv);
    nu2 += du * du;
    nv2 += dv * dv;
  }
  double le = l.value[e];
  if (cert.mode == CertMode::problem1)
    return d2 / (le * le) + cert.lambda1 * (nu2 + nv2) - cert.constant;
  return d2 - le * le;
}

}  // namespace

EmbeddingCertificate build_embedding(const Graph& g, const Mat& gram,
                                     const EigenspaceBasis& basis, const LengthFunction& l,
                                     CertMode mode, double constant, double rank_tol) {
  const int mu = basis.multiplicity;
  const int n = g.vertex_count();
  Spectrum s = eig_sym(gram);
  double lam_max = std::max(0.0, s.eigenvalues.back());
  if (s.eigenvalues.front() < -1e-9 * std::max(1.0, lam_max))
    throw NotPSD("Gram matrix has a negative eigenvalue beyond tolerance");

  std::vector<int> kept;
  for (int k = 0; k < mu; ++k)
    if (s.eigenvalues[k] > rank_tol * lam_max && s.eigenvalues[k] > 0.0) kept.push_back(k);

  EmbeddingCertificate cert;
  cert.mode = mode;
  cert.lambda1 = basis.lambda1;
  cert.gram = gram;
  cert.constant = constant;
  cert.dim = static_cast<int>(kept.size());
  cert.factor = Mat(cert.dim, mu);
  // Map scaled by sqrt(constant); with constant = 1 this realizes the
  // unscaled target equation.
  for (int row = 0; row < cert.dim; ++row) {
    double w = std::sqrt(s.eigenvalues[kept[row]] * constant);
    for (int i = 0; i < mu; ++i) cert.factor(row, i) = w * s.eigenvectors(i, kept[row]);
  }
  cert.map = Mat(cert.dim, n);
  for (int row = 0; row < cert.dim; ++row)
    for (int u = 0; u < n; ++u) {
      double acc = 0.0;
      for (int i = 0; i < mu; ++i) acc += cert.factor(row, i) * basis.basis[i][u];
      cert.map(row, u) = acc;
    }
  cert.degenerate = cert.dim == 0;

  cert.residuals.resize(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) cert.residuals[e] = std::abs(edge_defect(cert, g, l, e));
  return cert;
}

CertificateReport verify_certificate(const EmbeddingCertificate& cert,
                                     const WeightedLaplacian& lap, const LengthFunction& l,
                                     double tol) {
  const Graph& g = lap.graph;
  CertificateReport report;
  report.edge_residuals.resize(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    report.edge_residuals[e] = std::abs(edge_defect(cert, g, l, e));
    report.max_edge_residual = std::max(report.max_edge_residual, report.edge_residuals[e]);
  }
  for (int k = 0; k < cert.dim; ++k) {
    Vec coord(g.vertex_count());
    for (int u = 0; u < g.vertex_count(); ++u) coord[u] = cert.map(k, u);
    report.max_eigen_residual =
        std::max(report.max_eigen_residual, eigen_residual(lap, coord, cert.lambda1));
  }
  report.pass = report.max_edge_residual < tol &&
                report.max_eigen_residual < 1e-8 * std::max(1.0, cert.lambda1);

  if (cert.mode == CertMode::problem1 && cert.dim > 0) {
    // When the mass term is constant across edges the map admits an
    // exactly isometric rescale.
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int e = 0; e < g.edge_count(); ++e) {
      int u = g.edge(e).u, v = g.edge(e).v;
      double s = 0.0;
      for (int k = 0; k < cert.dim; ++k)
        s += cert.map(k, u) * cert.map(k, u) + cert.map(k, v) * cert.map(k, v);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    if (hi - lo < tol) {
      double denom = cert.constant - cert.lambda1 * 0.5 * (lo + hi);
      if (denom > 0.0) {
        report.mass_term_constant = true;
        Mat iso = cert.map;
        iso *= 1.0 / std::sqrt(denom);
        double worst = 0.0;
        for (int e = 0; e < g.edge_count(); ++e) {
          int u = g.edge(e).u, v = g.edge(e).v;
          double d2 = 0.0;
          for (int k = 0; k < cert.dim; ++k) {
            double dd = iso(k, u) - iso(k, v);
            d2 += dd * dd;
          }
          worst = std::max(worst, std::abs(l.value[e] - std::sqrt(d2)));
        }
        report.isometric_residual = worst;
        report.isometric_map = std::move(iso);
      }
    }
  }
  return report;
}

std::string certificate_to_json(const EmbeddingCertificate& cert, const CertificateReport& report,
                                int multiplicity) {
  nlohmann::json j;
  j["lambda1"] = cert.lambda1;
  j["multiplicity"] = multiplicity;
  j["dimension"] = cert.dim;
  j["constant"] = cert.constant;
  j["mode"] = cert.mode == CertMode::problem1 ? "problem1" : "ghw";
  j["degenerate"] = cert.degenerate;
  auto& map = j["map"] = nlohmann::json::array();
  for (int u = 0; u < cert.map.cols(); ++u) {
    nlohmann::json pt = nlohmann::json::array();
    for (int k = 0; k < cert.dim; ++k) pt.push_back(cert.map(k, u));
    map.push_back(pt);
  }
  j["edge_residuals"] = report.edge_residuals;
  j["max_edge_residual"] = report.max_edge_residual;
  j["max_eigen_residual"] = report.max_eigen_residual;
  j["pass"] = report.pass;
  if (report.mass_term_constant) j["isometric_residual"] = report.isometric_residual;
  return j.dump(2);
}

}  // namespace lapmax
