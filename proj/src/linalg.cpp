#include "contraction/linalg.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

namespace contraction {

namespace {

constexpr int kDenseLimit = 800;

double dense_min(const SparseMat& a) {
  Mat dense = Mat(a);
  Eigen::SelfAdjointEigenSolver<Mat> solver(symmetric_part(dense), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

}  // namespace

double max_sym_eigenvalue(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1) return a(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> solver(symmetric_part(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(a.rows() - 1);
}

double min_sym_eigenvalue(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1) return a(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat> solver(symmetric_part(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

double min_eigenvalue(const SparseMat& symmetric) {
  const auto n = symmetric.rows();
  if (n == 0) return 0.0;
  if (n <= kDenseLimit) return dense_min(symmetric);

  // Gershgorin radius sets the scale for the shift.
  double radius = 0.0;
  Vec row_abs = Vec::Zero(n);
  for (int k = 0; k < symmetric.outerSize(); ++k)
    for (SparseMat::InnerIterator it(symmetric, k); it; ++it) row_abs(it.row()) += std::abs(it.value());
  radius = row_abs.maxCoeff();

  // M + τI has only nonnegative pivots iff λ_min(M) ≥ −τ.
  const double tau = 1e-10;
  SparseMat shifted = symmetric;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += tau;
  shifted.makeCompressed();
  Eigen::SimplicialLDLT<SparseMat> ldlt(shifted);
  const bool factored = ldlt.info() == Eigen::Success;
  const bool nonnegative = factored && ldlt.vectorD().minCoeff() >= 0.0;

  if (nonnegative) {
    // Inverse iteration converges to the eigenvalue nearest −τ, i.e. the smallest.
    Vec v = Vec::Ones(n).normalized();
    for (int i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(1.0 + i);
    v.normalize();
    double rq = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      Vec w = ldlt.solve(v);
      if (!w.allFinite() || w.norm() == 0.0) break;
      v = w.normalized();
      const double next = v.dot(symmetric * v);
      if (iter > 5 && std::abs(next - rq) <= 1e-14 * std::max(1.0, radius)) {
        rq = next;
        break;
      }
      rq = next;
    }
    return rq;
  }

  // Indefinite: power iteration on (σI − M) finds σ − λ_min.
  const double sigma = radius;
  Vec v = Vec::Ones(n);
  for (int i = 0; i < n; ++i) v(i) += std::sin(0.37 * i);
  v.normalize();
  double mu = 0.0;
  for (int iter = 0; iter < 5000; ++iter) {
    Vec w = sigma * v - symmetric * v;
    const double next = v.dot(w);
    v = w.normalized();
    if (iter > 10 && std::abs(next - mu) <= 1e-12 * std::max(1.0, sigma)) {
      mu = next;
      break;
    }
    mu = next;
  }
  return std::min(sigma - mu, -tau);
}

bool spd_inverse(const Mat& a, Mat& inverse) {
  Eigen::LLT<Mat> llt(symmetric_part(a));
  if (llt.info() != Eigen::Success) return false;
  inverse = llt.solve(Mat::Identity(a.rows(), a.cols()));
  return inverse.allFinite();
}

bool all_finite(const Mat& a) { return a.allFinite(); }

}  // namespace contraction
