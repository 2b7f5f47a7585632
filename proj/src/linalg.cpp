#include "spthe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spthe/errors.hpp"

namespace spthe {

SymmetricEigen jacobi_eigen(const Matrix& a, double tol, int max_sweeps) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "jacobi_eigen: matrix is not square");
  }
  const Eigen::Index n = a.rows();
  Matrix m = 0.5 * (a + a.transpose());
  Matrix v = Matrix::Identity(n, n);

  SymmetricEigen out;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (std::sqrt(off) <= tol * scale) break;
    out.sweeps = sweep + 1;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        m(p, p) -= t * apq;
        m(q, q) += t * apq;
        m(p, q) = m(q, p) = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r != p && r != q) {
            const double arp = m(r, p);
            const double arq = m(r, q);
            m(r, p) = m(p, r) = arp - s * (arq + tau * arp);
            m(r, q) = m(q, r) = arq + s * (arp - tau * arq);
          }
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto i, auto k) { return m(i, i) < m(k, k); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = m(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) throw Error(ErrorKind::DimensionMismatch, "empty matrix");
  return jacobi_eigen(symmetric).values(0);
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Vector values = jacobi_eigen(a.transpose() * a).values;
  return std::sqrt(std::max(values(values.size() - 1), 0.0));
}

double symmetry_defect(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "symmetry_defect: matrix is not square");
  }
  if (a.size() == 0) return 0.0;
  const double norm = a.cwiseAbs().maxCoeff();
  if (norm == 0.0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / norm;
}

}  // namespace spthe
