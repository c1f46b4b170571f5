#pragma once

/*
 * algebra.hpp — finite-dimensional *-algebras of complex matrices.
 *
 * A MultiMatrixAlgebra is a *-closed subalgebra A ⊆ L(ℂⁿ) together with its
 * structure data: the unit of A (a projection on the carrier, not
 * necessarily the identity), the minimal central projections, and the block
 * sizes n_k of the isomorphism A ≅ ⊕_k M_{n_k}(ℂ).
 *
 * The reference trace is the non-normalized block trace: tr(x) restricted to
 * block k counts each matrix unit once, independently of the multiplicity
 * with which the block acts on the carrier. Densities of states/weights are
 * always taken against this trace.
 */

#include "core.hpp"

#include <algorithm>
#include <cstdint>

namespace mqg {

namespace detail {
// deterministic pseudo-random stream for generic-element tricks
inline double detRand(std::uint64_t& state) {
  state = state * 6364136223846793005ULL + 1442695040888963407ULL;
  return static_cast<double>((state >> 11) & ((1ULL << 53) - 1)) /
         static_cast<double>(1ULL << 53);
}
}  // namespace detail

struct MultiMatrixAlgebra {
  Eigen::Index carrierDim = 0;
  std::vector<Mat> basis;           // orthonormal for the Hilbert-Schmidt form
  Mat basisStack;                   // vectorized basis, one column per element
  Mat unit;                         // unit of A (projection on the carrier)
  std::vector<int> blocks;          // n_k
  std::vector<Mat> centralProjs;    // minimal central projections z_k
  std::vector<double> multiplicity; // m_k = Tr(z_k)/n_k

  Eigen::Index algDim() const { return static_cast<Eigen::Index>(basis.size()); }

  Vec coeffs(const Mat& x) const { return basisStack.adjoint() * vecm(x); }

  Mat fromCoeffs(const Vec& c) const {
    return unvec(basisStack * c, carrierDim, carrierDim);
  }

  // orthogonal projection of x onto the algebra (as a linear subspace)
  Mat project(const Mat& x) const { return fromCoeffs(coeffs(x)); }

  bool contains(const Mat& x, double tol = kDefaultTol) const {
    return frobNorm(x - project(x)) <= tol * std::max(1.0, frobNorm(x));
  }

  // non-normalized block trace
  cd refTrace(const Mat& x) const {
    cd out = 0.0;
    for (size_t k = 0; k < centralProjs.size(); ++k)
      out += (centralProjs[k] * x).trace() / multiplicity[k];
    return out;
  }

  bool isAbelian(double tol = kDefaultTol) const {
    for (const auto& a : basis)
      for (const auto& b : basis)
        if (frobNorm(a * b - b * a) > tol) return false;
    return true;
  }
};

namespace detail {

inline Mat stackOf(const std::vector<Mat>& mats) {
  if (mats.empty()) return Mat(0, 0);
  Mat s(mats[0].size(), static_cast<Eigen::Index>(mats.size()));
  for (size_t k = 0; k < mats.size(); ++k) s.col(k) = vecm(mats[k]);
  return s;
}

// unit of a *-closed span: solve e·b = b for all basis b within the span
inline Mat algebraUnit(const std::vector<Mat>& basis, Eigen::Index n,
                       double tol) {
  const Eigen::Index d = static_cast<Eigen::Index>(basis.size());
  Mat sys(n * n * d, d);
  Vec rhs(n * n * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j)
      sys.col(j).segment(i * n * n, n * n) = vecm(basis[j] * basis[i]);
    rhs.segment(i * n * n, n * n) = vecm(basis[i]);
  }
  Vec c = leastSquares(sys, rhs);
  Mat e = Mat::Zero(n, n);
  for (Eigen::Index j = 0; j < d; ++j) e += c(j) * basis[j];
  for (const auto& b : basis) {
    if (frobNorm(e * b - b) > tol * std::max(1.0, frobNorm(b)) ||
        frobNorm(b * e - b) > tol * std::max(1.0, frobNorm(b)))
      throw StructuralError("algebra has no unit in its span (not *-closed?)");
  }
  return (e + e.adjoint()) / 2.0;
}

// coefficient vectors of the elements commuting with the whole span
inline Mat commutingCoefficients(const std::vector<Mat>& basis, double tol) {
  const Eigen::Index d = static_cast<Eigen::Index>(basis.size());
  if (d == 0) return Mat(0, 0);
  const Eigen::Index nn = basis[0].size();
  Mat sys(nn * d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      sys.col(j).segment(i * nn, nn) = vecm(basis[j] * basis[i] - basis[i] * basis[j]);
  return nullspace(sys, tol);
}

}  // namespace detail

// Build a MultiMatrixAlgebra from a *-closed spanning set (no closure
// iteration; closure is verified). The span must be closed under products
// and adjoints.
inline MultiMatrixAlgebra algebraFromSpan(const std::vector<Mat>& span,
                                          Eigen::Index carrierDim,
                                          double tol = kDefaultTol) {
  MultiMatrixAlgebra A;
  A.carrierDim = carrierDim;
  std::vector<Mat> gens = span;
  for (const auto& m : span) gens.push_back(m.adjoint());
  A.basis = spanBasis(gens, tol);
  if (A.basis.empty()) throw StructuralError("empty algebra span");
  A.basisStack = detail::stackOf(A.basis);

  // verify multiplicative closure
  for (const auto& a : A.basis)
    for (const auto& b : A.basis)
      if (!A.contains(a * b, 10 * tol))
        throw StructuralError("span is not closed under products");

  A.unit = detail::algebraUnit(A.basis, carrierDim, 100 * tol);

  // Work on the support of the unit so the center has no spurious kernel.
  Mat u = orthonormalColumns(A.unit, tol);  // isometry ℂ^r → carrier
  const Eigen::Index r = u.cols();
  std::vector<Mat> compressed;
  compressed.reserve(A.basis.size());
  for (const auto& b : A.basis) compressed.push_back(u.adjoint() * b * u);

  Mat centerCoeff = detail::commutingCoefficients(A.basis, tol);
  const Eigen::Index zdim = centerCoeff.cols();

  // generic Hermitian central element; its spectral clusters give the
  // minimal central projections
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  for (int attempt = 0; attempt < 32; ++attempt) {
    Mat z = Mat::Zero(r, r);
    for (Eigen::Index j = 0; j < zdim; ++j) {
      cd c(detail::detRand(seed) - 0.5, detail::detRand(seed) - 0.5);
      Mat zj = Mat::Zero(r, r);
      for (Eigen::Index k = 0; k < A.algDim(); ++k)
        zj += centerCoeff(k, j) * compressed[k];
      z += c * zj + std::conj(c) * zj.adjoint();
    }
    auto [vals, vecs] = eigh(z);
    double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    // cluster eigenvalues
    std::vector<std::pair<double, Eigen::Index>> sorted;
    for (Eigen::Index i = 0; i < vals.size(); ++i) sorted.push_back({vals(i), i});
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::vector<Eigen::Index>> clusters;
    for (const auto& [v, i] : sorted) {
      if (!clusters.empty() &&
          std::abs(v - vals(clusters.back().back())) < 1e-6 * scale)
        clusters.back().push_back(i);
      else
        clusters.push_back({i});
    }
    if (static_cast<Eigen::Index>(clusters.size()) != zdim) continue;

    A.centralProjs.clear();
    A.blocks.clear();
    A.multiplicity.clear();
    bool ok = true;
    for (const auto& cl : clusters) {
      Mat p = Mat::Zero(r, r);
      for (auto i : cl) p += vecs.col(i) * vecs.col(i).adjoint();
      Mat pc = u * p * u.adjoint();  // back to the carrier
      if (!A.contains(pc, 1e-6)) { ok = false; break; }
      // block size from the dimension of z_k·A
      std::vector<Mat> reduced;
      for (const auto& b : A.basis) reduced.push_back(pc * b);
      Eigen::Index dk = static_cast<Eigen::Index>(spanBasis(reduced, tol).size());
      double nk = std::sqrt(static_cast<double>(dk));
      if (std::abs(nk - std::round(nk)) > 1e-6) { ok = false; break; }
      double mk = pc.trace().real() / std::round(nk);
      A.centralProjs.push_back(pc);
      A.blocks.push_back(static_cast<int>(std::round(nk)));
      A.multiplicity.push_back(mk);
    }
    if (!ok) continue;
    Eigen::Index total = 0;
    for (int nk : A.blocks) total += static_cast<Eigen::Index>(nk) * nk;
    if (total != A.algDim()) continue;
    std::sort(A.blocks.begin(), A.blocks.end());
    return A;
  }
  throw StructuralError("could not resolve the block structure of the algebra");
}

// *-algebra generated by a list of matrices
inline MultiMatrixAlgebra buildAlgebra(const std::vector<Mat>& generators,
                                       Eigen::Index carrierDim,
                                       double tol = kDefaultTol) {
  std::vector<Mat> cur = generators;
  for (const auto& g : generators) cur.push_back(g.adjoint());
  cur = spanBasis(cur, tol);
  const Eigen::Index cap = carrierDim * carrierDim;
  for (int round = 0; round < 64; ++round) {
    std::vector<Mat> next = cur;
    for (const auto& a : cur)
      for (const auto& b : cur) next.push_back(a * b);
    next = spanBasis(next, tol);
    if (next.size() == cur.size()) return algebraFromSpan(cur, carrierDim, tol);
    if (static_cast<Eigen::Index>(next.size()) > cap)
      throw StructuralError("algebra closure exceeds the carrier bound");
    cur = std::move(next);
  }
  throw StructuralError("algebra closure did not converge");
}

// commutant of A inside L(ℂ^withinDim)
inline MultiMatrixAlgebra commutant(const MultiMatrixAlgebra& A,
                                    Eigen::Index withinDim,
                                    double tol = kDefaultTol) {
  if (withinDim != A.carrierDim)
    throw StructuralError("commutant: carrier dimension mismatch");
  const Eigen::Index n = A.carrierDim;
  Mat sys(n * n * A.algDim(), n * n);
  for (Eigen::Index i = 0; i < A.algDim(); ++i) {
    const Mat& b = A.basis[i];
    // vec(XB − BX) = (Bᵀ⊗1 − 1⊗B) vec(X), column-major vec
    sys.middleRows(i * n * n, n * n) =
        kron(b.transpose(), eye(n)) - kron(eye(n), b);
  }
  Mat null = nullspace(sys, tol);
  std::vector<Mat> span;
  for (Eigen::Index k = 0; k < null.cols(); ++k)
    span.push_back(unvec(null.col(k), n, n));
  return algebraFromSpan(span, n, tol);
}

inline MultiMatrixAlgebra center(const MultiMatrixAlgebra& A,
                                 double tol = kDefaultTol) {
  Mat cc = detail::commutingCoefficients(A.basis, tol);
  std::vector<Mat> span;
  for (Eigen::Index j = 0; j < cc.cols(); ++j) {
    Mat z = Mat::Zero(A.carrierDim, A.carrierDim);
    for (Eigen::Index k = 0; k < A.algDim(); ++k) z += cc(k, j) * A.basis[k];
    span.push_back(z);
  }
  return algebraFromSpan(span, A.carrierDim, tol);
}

// ----------------------------------------------------------------- states

/*
 * A state (or positive weight) on A, stored through its density against the
 * reference trace: φ(x) = tr_A(ρ x). For states tr_A(ρ) = 1; weights drop
 * the normalization.
 */
struct StateOnAlgebra {
  const MultiMatrixAlgebra* alg = nullptr;
  Mat rho;

  cd eval(const Mat& x) const { return alg->refTrace(rho * x); }

  bool isPositiveDensity(double tol = kDefaultTol) const {
    return alg->contains(rho, 10 * tol) && isPositive(rho, tol);
  }

  bool faithful(double tol = kDefaultTol) const {
    // invertible within A ⟺ rank(ρ) equals rank of the algebra unit
    auto [vals, vecs] = eigh(rho);
    (void)vecs;
    double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      if (vals(i) > std::sqrt(tol) * scale) ++rank;
    return rank == static_cast<Eigen::Index>(std::round(alg->unit.trace().real()));
  }
};

// σ_t^φ(x) = ρ^{it} x ρ^{-it}; for a non-unital embedding the powers are
// taken on the support of ρ, which carries the whole algebra when φ is
// faithful.
inline Mat modularAut(const StateOnAlgebra& phi, double t, const Mat& x,
                      double tol = kDefaultTol) {
  Mat ut = opPower(phi.rho, kI * t, tol);
  Mat utInv = opPower(phi.rho, -kI * t, tol);
  return ut * x * utInv;
}

// Connes cocycle [Dφ : Dψ]_t = ρ_φ^{it} ρ_ψ^{-it}
inline Mat connesCocycle(const StateOnAlgebra& phi, const StateOnAlgebra& psi,
                         double t, double tol = kDefaultTol) {
  if (phi.alg != psi.alg)
    throw StructuralError("connesCocycle: states live on different algebras");
  if (!phi.faithful(tol) || !psi.faithful(tol))
    throw StructuralError("connesCocycle: both states must be faithful");
  return opPower(phi.rho, kI * t, tol) * opPower(psi.rho, -kI * t, tol);
}

}  // namespace mqg
