#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace contraction {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;

inline Mat symmetric_part(const Mat& a) { return 0.5 * (a + a.transpose()); }

// Largest eigenvalue of the symmetric part of `a`.
double max_sym_eigenvalue(const Mat& a);

// Smallest eigenvalue of the symmetric part of `a`.
double min_sym_eigenvalue(const Mat& a);

// Smallest eigenvalue of a sparse symmetric matrix. Small matrices go through
// a dense solver; large ones use a shifted LDLT (Sylvester inertia) plus
// inverse iteration.
double min_eigenvalue(const SparseMat& symmetric);

// Inverse of a symmetric positive definite matrix, or nothing if the
// Cholesky factorization fails.
bool spd_inverse(const Mat& a, Mat& inverse);

bool all_finite(const Mat& a);

}  // namespace contraction
