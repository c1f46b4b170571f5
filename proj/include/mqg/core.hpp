#pragma once

/*
 * core.hpp — dense complex linear algebra helpers shared by the whole
 * library: norms, Kronecker products, Hermitian functional calculus,
 * antilinear operators, and subspace arithmetic.
 *
 * Everything is plain Eigen::MatrixXcd. Tolerances are absolute residuals;
 * the default (1e-9) is meant for carrier dimensions up to ~64.
 */

#include <Eigen/Dense>
#include <complex>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqg {

using cd  = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-9;

inline const cd kI{0.0, 1.0};

// ---------------------------------------------------------------- norms

inline double opNorm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  // largest eigenvalue of a*a, cheaper than a full SVD for the sizes here
  Mat gram = a.rows() <= a.cols() ? Mat(a * a.adjoint()) : Mat(a.adjoint() * a);
  Eigen::SelfAdjointEigenSolver<Mat> es(
      (gram + gram.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  double top = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
  return std::sqrt(std::max(0.0, top));
}

inline double frobNorm(const Mat& a) { return a.norm(); }

inline Mat eye(Eigen::Index n) { return Mat::Identity(n, n); }

// Kronecker product, first factor major: (A⊗B)[(i,k),(j,l)] = A(i,j)B(k,l)
inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vec kronVec(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// tensor flip H⊗K -> K⊗H as a permutation matrix
inline Mat tensorFlip(Eigen::Index dimH, Eigen::Index dimK) {
  Mat s = Mat::Zero(dimH * dimK, dimH * dimK);
  for (Eigen::Index i = 0; i < dimH; ++i)
    for (Eigen::Index j = 0; j < dimK; ++j)
      s(j * dimH + i, i * dimK + j) = 1.0;
  return s;
}

// column-major vectorization and its inverse
inline Vec vecm(const Mat& a) {
  return Eigen::Map<const Vec>(a.data(), a.size());
}
inline Mat unvec(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

// ------------------------------------------- Hermitian functional calculus

struct EighResult {
  Eigen::VectorXd vals;
  Mat vecs;
};

inline EighResult eigh(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es((a + a.adjoint()) / 2.0);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigh: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// f(P) for Hermitian P through its spectral decomposition
template <class F>
Mat hermFun(const Mat& p, F&& f) {
  auto [vals, vecs] = eigh(p);
  Vec fv(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) fv(i) = f(vals(i));
  return vecs * fv.asDiagonal() * vecs.adjoint();
}

// P^z for positive semidefinite P. Eigenvalues below `cut` are treated as
// exact zeros (support-restricted calculus); negative powers of a singular P
// are rejected.
inline Mat opPower(const Mat& p, cd z, double cut = kDefaultTol) {
  auto [vals, vecs] = eigh(p);
  double scale = vals.size() ? std::max(std::abs(vals.maxCoeff()), 1.0) : 1.0;
  Vec fv(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    double v = vals(i);
    if (v < -cut * scale)
      throw std::runtime_error("opPower: matrix is not positive");
    if (v <= cut * scale) {
      if (z.real() < 0)
        throw std::runtime_error("opPower: negative power of singular matrix");
      fv(i) = (z == cd(0.0)) ? 1.0 : 0.0;
    } else {
      fv(i) = std::exp(z * std::log(v));
    }
  }
  return vecs * fv.asDiagonal() * vecs.adjoint();
}

// P^z on the support of P (Moore–Penrose for negative powers)
inline Mat opPowerSupport(const Mat& p, cd z, double cut = kDefaultTol) {
  auto [vals, vecs] = eigh(p);
  double scale = vals.size() ? std::max(std::abs(vals.maxCoeff()), 1.0) : 1.0;
  Vec fv(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    double v = vals(i);
    fv(i) = (v <= cut * scale) ? cd(0.0) : std::exp(z * std::log(v));
  }
  return vecs * fv.asDiagonal() * vecs.adjoint();
}

// principal logarithm of a positive definite matrix
inline Mat logPos(const Mat& p, double cut = kDefaultTol) {
  auto [vals, vecs] = eigh(p);
  double scale = std::max(std::abs(vals.maxCoeff()), 1.0);
  Vec fv(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) <= cut * scale)
      throw std::runtime_error("logPos: matrix is not positive definite");
    fv(i) = std::log(vals(i));
  }
  return vecs * fv.asDiagonal() * vecs.adjoint();
}

inline bool isPositive(const Mat& p, double tol = kDefaultTol) {
  if (opNorm(p - p.adjoint()) > tol * std::max(1.0, opNorm(p))) return false;
  auto [vals, vecs] = eigh(p);
  (void)vecs;
  return vals.size() == 0 || vals.minCoeff() > -tol * std::max(1.0, std::abs(vals.maxCoeff()));
}

// ---------------------------------------------------------- antilinear ops

/*
 * An antilinear operator is stored as v ↦ mat · conj(v) in the fixed
 * standard basis. Composition and adjoint then stay inside this encoding:
 *   (A∘B).mat = A.mat · conj(B.mat),   (A*).mat = A.matᵀ.
 */
struct AntilinearOp {
  Mat mat;

  Vec apply(const Vec& v) const { return mat * v.conjugate(); }
  Mat applyToColumns(const Mat& m) const { return mat * m.conjugate(); }

  AntilinearOp compose(const AntilinearOp& other) const {
    return {mat * other.mat.conjugate()};
  }
  // antilinear ∘ linear and linear ∘ antilinear both stay antilinear
  AntilinearOp composeLinear(const Mat& lin) const {  // this ∘ lin
    return {mat * lin.conjugate()};
  }
  AntilinearOp precomposeLinear(const Mat& lin) const {  // lin ∘ this
    return {lin * mat};
  }
  AntilinearOp adjoint() const { return {mat.transpose()}; }

  static AntilinearOp conjugation(Eigen::Index n) { return {eye(n)}; }
};

// A∘A as a linear operator
inline Mat antilinearSquare(const AntilinearOp& a) {
  return a.mat * a.mat.conjugate();
}

struct AntilinearPolar {
  AntilinearOp isom;  // antilinear (partial) isometry I
  Mat pos;            // positive D with G = I ∘ D^{1/2}
};

// polar decomposition G = I D^{1/2} of an injective antilinear operator
inline AntilinearPolar polarAntilinear(const AntilinearOp& g,
                                       double tol = kDefaultTol) {
  // D = G*G acts linearly: v ↦ Gᵀ conj(G conj(v)) = Gᵀ conj(G) v
  Mat d = g.mat.transpose() * g.mat.conjugate();
  Mat dInvHalf = opPower(d, cd(-0.5), tol);  // throws if G is singular
  AntilinearOp isom{g.mat * dInvHalf.conjugate()};
  return {isom, d};
}

// ------------------------------------------------------------- subspaces

/*
 * A subspace of ℂⁿ is handled through an orthonormal column basis obtained
 * by SVD compression; equality of subspaces is projector distance.
 */
inline Mat orthonormalColumns(const Mat& cols, double tol = kDefaultTol) {
  if (cols.cols() == 0) return Mat(cols.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  double cut = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  return svd.matrixU().leftCols(rank);
}

// orthonormal basis of the span of a list of matrices (viewed as vectors)
inline std::vector<Mat> spanBasis(const std::vector<Mat>& mats,
                                  double tol = kDefaultTol) {
  if (mats.empty()) return {};
  Eigen::Index r = mats[0].rows(), c = mats[0].cols();
  Mat stacked(r * c, static_cast<Eigen::Index>(mats.size()));
  for (size_t k = 0; k < mats.size(); ++k) stacked.col(k) = vecm(mats[k]);
  Mat u = orthonormalColumns(stacked, tol);
  std::vector<Mat> out;
  out.reserve(u.cols());
  for (Eigen::Index k = 0; k < u.cols(); ++k) out.push_back(unvec(u.col(k), r, c));
  return out;
}

inline Mat projectorOnto(const Mat& orthoCols) {
  return orthoCols * orthoCols.adjoint();
}

inline bool sameSubspace(const Mat& basisA, const Mat& basisB,
                         double tol = kDefaultTol) {
  if (basisA.rows() != basisB.rows()) return false;
  Mat a = orthonormalColumns(basisA, tol), b = orthonormalColumns(basisB, tol);
  if (a.cols() != b.cols()) return false;
  return opNorm(projectorOnto(a) - projectorOnto(b)) <= std::sqrt(tol);
}

inline bool sameSpan(const std::vector<Mat>& as, const std::vector<Mat>& bs,
                     double tol = kDefaultTol) {
  auto pack = [](const std::vector<Mat>& ms) {
    if (ms.empty()) return Mat(0, 0);
    Mat stacked(ms[0].size(), static_cast<Eigen::Index>(ms.size()));
    for (size_t k = 0; k < ms.size(); ++k) stacked.col(k) = vecm(ms[k]);
    return stacked;
  };
  return sameSubspace(pack(as), pack(bs), tol);
}

// orthonormal basis of the nullspace of a (stacked) linear system
inline Mat nullspace(const Mat& a, double tol = kDefaultTol) {
  if (a.rows() == 0) return eye(a.cols());
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cut) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

inline Vec leastSquares(const Mat& a, const Vec& b) {
  return a.completeOrthogonalDecomposition().solve(b);
}

// solve A X = B in the least-squares sense, column by column
inline Mat leastSquaresMat(const Mat& a, const Mat& b) {
  return a.completeOrthogonalDecomposition().solve(b);
}

// -------------------------------------------------------------- sampling

// the t-grid used for every one-parameter-group identity in the suite
inline const std::vector<double>& tGrid() {
  static const std::vector<double> g{1.0, -1.0, 0.5, -0.5, 0.25, -0.25};
  return g;
}

struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// ------------------------------------------------------------- reporting

// one verified identity: the residual actually measured against its bound
struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = kDefaultTol;
  bool pass = false;
};

inline void addCheck(std::vector<CheckResult>& out, const std::string& name,
                     double residual, double tolerance = kDefaultTol) {
  out.push_back({name, residual, tolerance, residual <= tolerance});
}

inline bool allPass(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace mqg
