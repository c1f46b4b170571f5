#pragma once

/*
 * hopf.hpp — weak Hopf C*-algebras and the bimodule coproduct picture.
 *
 * Two layers live here:
 *
 *  1. Wha: a finite-dimensional algebra M with coproduct Δ : M → M⊗M
 *     (possibly non-unital), counit ε and antipode κ, all stored on M's
 *     defining carrier. verifyWha checks the full axiom list; haarState
 *     solves the linear invariance system for the Haar functional.
 *
 *  2. Amqg: the same structure reorganized over the base N = ε_t(M) with
 *     α the inclusion, β = κ|_N, weight ν = h∘α, and the Haar conditional
 *     expectations as the invariant operator-valued weights.
 *     buildStandardForm moves everything onto the GNS space of Φ and
 *     realizes the coproduct as an operator family on H_Φ β⊗α H_Φ.
 */

#include "reltensor.hpp"

#include <map>
#include <memory>

namespace mqg {

// ---------------------------------------------------------------- helpers

// coefficients of a carrier⊗carrier matrix over the basis pairs b_p⊗b_q;
// the basis is HS-orthonormal so the pairs are too. The vectorized pair
// basis is cached per algebra since these expansions dominate the runtime.
inline const Mat& pairStackOf(const MultiMatrixAlgebra& A) {
  // the address alone is unsafe as a key (freed algebras may be reused at
  // the same location), so the cached entry carries a content fingerprint
  static thread_local std::map<const MultiMatrixAlgebra*, std::pair<Mat, Mat>>
      cache;
  Eigen::Index d = A.algDim(), n = A.carrierDim;
  Mat finger = Mat::Zero(n, n);
  for (const auto& b : A.basis) finger += b;
  auto it = cache.find(&A);
  if (it != cache.end() && it->second.first.cols() == d * d &&
      it->second.second.rows() == n &&
      (it->second.second - finger).norm() < 1e-12)
    return it->second.first;
  Mat stack(n * n * n * n, d * d);
  for (Eigen::Index p = 0; p < d; ++p)
    for (Eigen::Index q = 0; q < d; ++q)
      stack.col(p * d + q) = vecm(kron(A.basis[p], A.basis[q]));
  auto& slot = cache[&A];
  slot = {std::move(stack), std::move(finger)};
  return slot.first;
}

inline Mat pairCoeffs(const MultiMatrixAlgebra& A, const Mat& big,
                      double* residual = nullptr) {
  Eigen::Index d = A.algDim();
  const Mat& stack = pairStackOf(A);
  Vec flat = stack.adjoint() * vecm(big);
  Mat c(d, d);
  for (Eigen::Index p = 0; p < d; ++p)
    for (Eigen::Index q = 0; q < d; ++q) c(p, q) = flat(p * d + q);
  if (residual) *residual = (stack * flat - vecm(big)).norm();
  return c;
}

// state on A with prescribed values on the basis
inline StateOnAlgebra stateFromFunctional(const MultiMatrixAlgebra& A,
                                          const Vec& values) {
  Mat sys(A.algDim(), A.algDim());
  for (Eigen::Index i = 0; i < A.algDim(); ++i)
    for (Eigen::Index j = 0; j < A.algDim(); ++j)
      sys(i, j) = A.refTrace(A.basis[j] * A.basis[i]);
  Vec c = leastSquares(sys, values);
  Mat rho = A.fromCoeffs(c);
  rho = ((rho + rho.adjoint()) / 2.0).eval();
  for (Eigen::Index i = 0; i < A.algDim(); ++i)
    if (std::abs(A.refTrace(rho * A.basis[i]) - values(i)) > 1e-7)
      throw StructuralError("stateFromFunctional: functional has no density");
  return StateOnAlgebra{&A, rho};
}

// ------------------------------------------------------- weak Hopf algebra

struct Wha {
  std::shared_ptr<MultiMatrixAlgebra> M;
  std::vector<Mat> deltaLift;  // Δ(basis[j]) on carrier ⊗ carrier
  Vec eps;                     // ε(basis[j])
  std::vector<Mat> kappaImg;   // κ(basis[j]) on the carrier

  Mat deltaOf(const Mat& x) const {
    Vec c = M->coeffs(x);
    Eigen::Index n = M->carrierDim;
    Mat out = Mat::Zero(n * n, n * n);
    for (Eigen::Index j = 0; j < M->algDim(); ++j) out += c(j) * deltaLift[j];
    return out;
  }

  cd epsOf(const Mat& x) const {
    // Σ_j ε(b_j)·coeff_j(x), linear in x
    return eps.conjugate().dot(M->coeffs(x));
  }

  Mat kappaOf(const Mat& x) const {
    Vec c = M->coeffs(x);
    Mat out = Mat::Zero(M->carrierDim, M->carrierDim);
    for (Eigen::Index j = 0; j < M->algDim(); ++j) out += c(j) * kappaImg[j];
    return out;
  }

  Mat deltaOne() const { return deltaOf(M->unit); }
};

/*
 * Assemble a Wha from generators that span M linearly, with Δ, ε, κ given
 * on the generators and extended by linearity.
 */
inline Wha whaFromGenerators(const std::vector<Mat>& gens,
                             const std::vector<Mat>& deltaOfGens,
                             const std::vector<cd>& epsOfGens,
                             const std::vector<Mat>& kappaOfGens,
                             double tol = kDefaultTol) {
  Wha w;
  Eigen::Index n = gens.at(0).rows();
  w.M = std::make_shared<MultiMatrixAlgebra>(buildAlgebra(gens, n, tol));
  Mat genStack(n * n, static_cast<Eigen::Index>(gens.size()));
  for (size_t k = 0; k < gens.size(); ++k) genStack.col(k) = vecm(gens[k]);

  w.eps.resize(w.M->algDim());
  for (Eigen::Index j = 0; j < w.M->algDim(); ++j) {
    Vec c = leastSquares(genStack, vecm(w.M->basis[j]));
    if ((genStack * c - vecm(w.M->basis[j])).norm() > 1e-7)
      throw StructuralError("whaFromGenerators: generators do not span M");
    Mat d = Mat::Zero(n * n, n * n), k2 = Mat::Zero(n, n);
    cd e = 0.0;
    for (size_t g = 0; g < gens.size(); ++g) {
      d += c(static_cast<Eigen::Index>(g)) * deltaOfGens[g];
      e += c(static_cast<Eigen::Index>(g)) * epsOfGens[g];
      k2 += c(static_cast<Eigen::Index>(g)) * kappaOfGens[g];
    }
    w.deltaLift.push_back(d);
    w.eps(j) = e;
    w.kappaImg.push_back(k2);
  }
  return w;
}

// target and source counits ε_t = m(id⊗κ)Δ and ε_s = m(κ⊗id)Δ
inline Mat epsT(const Wha& w, const Mat& x) {
  Mat c = pairCoeffs(*w.M, w.deltaOf(x));
  Mat out = Mat::Zero(w.M->carrierDim, w.M->carrierDim);
  for (Eigen::Index p = 0; p < w.M->algDim(); ++p)
    for (Eigen::Index q = 0; q < w.M->algDim(); ++q)
      out += c(p, q) * w.M->basis[p] * w.kappaOf(w.M->basis[q]);
  return out;
}

inline Mat epsS(const Wha& w, const Mat& x) {
  Mat c = pairCoeffs(*w.M, w.deltaOf(x));
  Mat out = Mat::Zero(w.M->carrierDim, w.M->carrierDim);
  for (Eigen::Index p = 0; p < w.M->algDim(); ++p)
    for (Eigen::Index q = 0; q < w.M->algDim(); ++q)
      out += c(p, q) * w.kappaOf(w.M->basis[p]) * w.M->basis[q];
  return out;
}

inline std::vector<CheckResult> verifyWha(const Wha& w,
                                          double tol = kDefaultTol) {
  std::vector<CheckResult> out;
  const auto& M = *w.M;
  Eigen::Index n = M.carrierDim;
  auto scaleTol = [&](double t) { return t * std::max<double>(1.0, n); };

  // Δ is a multiplicative *-map (not necessarily unital)
  double multRes = 0, starRes = 0;
  for (const auto& x : M.basis)
    for (const auto& y : M.basis)
      multRes = std::max(multRes,
                         opNorm(w.deltaOf(x * y) - w.deltaOf(x) * w.deltaOf(y)));
  for (const auto& x : M.basis)
    starRes = std::max(starRes,
                       opNorm(w.deltaOf(x.adjoint()) - w.deltaOf(x).adjoint()));
  addCheck(out, "coproduct multiplicative", multRes, scaleTol(tol));
  addCheck(out, "coproduct star map", starRes, scaleTol(tol));

  // coassociativity on the plain triple tensor
  double coRes = 0;
  for (const auto& x : M.basis) {
    Mat c = pairCoeffs(M, w.deltaOf(x));
    Mat lhs = Mat::Zero(n * n * n, n * n * n);
    Mat rhs = Mat::Zero(n * n * n, n * n * n);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q) {
        lhs += c(p, q) * kron(w.deltaOf(M.basis[p]), M.basis[q]);
        rhs += c(p, q) * kron(M.basis[p], w.deltaOf(M.basis[q]));
      }
    coRes = std::max(coRes, opNorm(lhs - rhs));
  }
  addCheck(out, "coassociativity", coRes, scaleTol(tol));

  // counit property and the weak multiplicativity of ε
  double cuRes = 0, weakRes = 0;
  Mat d1 = w.deltaOne();
  for (const auto& x : M.basis) {
    Mat c = pairCoeffs(M, w.deltaOf(x));
    Mat left = Mat::Zero(n, n), right = Mat::Zero(n, n);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q) {
        left += c(p, q) * w.epsOf(M.basis[p]) * M.basis[q];
        right += c(p, q) * M.basis[p] * w.epsOf(M.basis[q]);
      }
    cuRes = std::max({cuRes, opNorm(left - x), opNorm(right - x)});
  }
  for (const auto& x : M.basis)
    for (const auto& y : M.basis) {
      Mat c = pairCoeffs(M, kron(x, eye(n)) * d1 * kron(eye(n), y));
      cd v = 0.0;
      for (Eigen::Index p = 0; p < M.algDim(); ++p)
        for (Eigen::Index q = 0; q < M.algDim(); ++q)
          v += c(p, q) * w.epsOf(M.basis[p]) * w.epsOf(M.basis[q]);
      weakRes = std::max(weakRes, std::abs(v - w.epsOf(x * y)));
    }
  addCheck(out, "counit property", cuRes, scaleTol(tol));
  addCheck(out, "weak counit multiplicativity", weakRes, scaleTol(tol));

  // weak comultiplicativity of the unit
  {
    Mat c = pairCoeffs(M, d1);
    Mat d2 = Mat::Zero(n * n * n, n * n * n);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q)
        d2 += c(p, q) * kron(w.deltaOf(M.basis[p]), M.basis[q]);
    Mat a = kron(d1, eye(n)) * kron(eye(n), d1);
    Mat b = kron(eye(n), d1) * kron(d1, eye(n));
    addCheck(out, "weak unit comultiplicativity",
             std::max(opNorm(d2 - a), opNorm(d2 - b)), scaleTol(tol));
  }

  // antipode axioms: m(κ⊗id)Δ = ε_s, m(id⊗κ)Δ = ε_t, and the counit
  // realizations of ε_t, ε_s through Δ(1)
  double axRes = 0, etRes = 0, esRes = 0;
  Mat cd1 = pairCoeffs(M, d1);
  for (const auto& x : M.basis) {
    Mat et = Mat::Zero(n, n), es = Mat::Zero(n, n);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q) {
        et += cd1(p, q) * w.epsOf(M.basis[p] * x) * M.basis[q];
        es += cd1(p, q) * M.basis[p] * w.epsOf(x * M.basis[q]);
      }
    etRes = std::max(etRes, opNorm(epsT(w, x) - et));
    esRes = std::max(esRes, opNorm(epsS(w, x) - es));
  }
  addCheck(out, "target counit through the unit", etRes, scaleTol(tol));
  addCheck(out, "source counit through the unit", esRes, scaleTol(tol));

  // κ(x_(1)) x_(2) ⊗ x_(3) = (1⊗x)Δ(1), and the mirror identity
  for (const auto& x : M.basis) {
    Mat c = pairCoeffs(M, w.deltaOf(x));
    Mat lhs = Mat::Zero(n * n, n * n), mir = Mat::Zero(n * n, n * n);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q) {
        Mat cp = pairCoeffs(M, w.deltaOf(M.basis[p]));
        for (Eigen::Index r = 0; r < M.algDim(); ++r)
          for (Eigen::Index s = 0; s < M.algDim(); ++s) {
            lhs += c(p, q) * cp(r, s) *
                   kron(Mat(w.kappaOf(M.basis[r]) * M.basis[s]), M.basis[q]);
          }
        Mat cq = pairCoeffs(M, w.deltaOf(M.basis[q]));
        for (Eigen::Index r = 0; r < M.algDim(); ++r)
          for (Eigen::Index s = 0; s < M.algDim(); ++s)
            mir += c(p, q) * cq(r, s) *
                   kron(M.basis[p], Mat(M.basis[r] * w.kappaOf(M.basis[s])));
      }
    axRes = std::max(axRes, opNorm(lhs - kron(eye(n), x) * d1));
    axRes = std::max(axRes, opNorm(mir - d1 * kron(x, eye(n))));
  }
  addCheck(out, "antipode exchange identity", axRes, scaleTol(tol));

  // κ is an algebra and coalgebra anti-homomorphism with (κ∘*)² = id
  double antiRes = 0, coAntiRes = 0, invRes = 0;
  Mat flip = tensorFlip(n, n);
  for (const auto& x : M.basis) {
    for (const auto& y : M.basis)
      antiRes = std::max(antiRes, opNorm(w.kappaOf(x * y) -
                                         w.kappaOf(y) * w.kappaOf(x)));
    Mat c = pairCoeffs(M, w.deltaOf(x));
    Mat want = Mat::Zero(n * n, n * n);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q)
        want += c(p, q) * kron(w.kappaOf(M.basis[q]), w.kappaOf(M.basis[p]));
    coAntiRes = std::max(coAntiRes, opNorm(w.deltaOf(w.kappaOf(x)) - want));
    invRes = std::max(invRes,
                      opNorm(w.kappaOf(w.kappaOf(x.adjoint()).adjoint()) - x));
  }
  addCheck(out, "antipode algebra anti-homomorphism", antiRes, scaleTol(tol));
  addCheck(out, "antipode coalgebra anti-homomorphism", coAntiRes,
           scaleTol(tol));
  addCheck(out, "antipode star involution", invRes, scaleTol(tol));

  // exchange between the counits: κ∘ε_t = ε_s∘κ, and the two counital
  // subalgebras commute
  double exRes = 0, commRes = 0;
  std::vector<Mat> ets, ess;
  for (const auto& x : M.basis) {
    ets.push_back(epsT(w, x));
    ess.push_back(epsS(w, x));
    exRes = std::max(exRes, opNorm(w.kappaOf(epsT(w, x)) -
                                   epsS(w, w.kappaOf(x))));
  }
  for (const auto& a : ets)
    for (const auto& b : ess)
      commRes = std::max(commRes, opNorm(a * b - b * a));
  addCheck(out, "antipode exchanges the counits", exRes, scaleTol(tol));
  addCheck(out, "counital subalgebras commute", commRes, scaleTol(tol));

  // κ² is the identity on the target counital subalgebra
  double sqRes = 0;
  for (const auto& x : ets)
    sqRes = std::max(sqRes, opNorm(w.kappaOf(w.kappaOf(x)) - x));
  addCheck(out, "antipode squares to id on the base", sqRes, scaleTol(tol));

  return out;
}

// ------------------------------------------------------------ Haar state

struct HaarData {
  Vec values;           // h on the basis of M
  StateOnAlgebra state; // with its density
  Eigen::Index solutionDim = 0;  // of the unnormalized invariance system
};

/*
 * The Haar functional is the unique normalized two-sided integral. A
 * functional h is a left integral exactly when (id⊗h)Δ(a) lies in the
 * target counital subalgebra for every a, and a right integral when
 * (h⊗id)Δ(a) lies in the source one — both conditions are linear in h.
 * h is found as the nullspace of the stacked system; the solution space
 * must be exactly one-dimensional.
 */
inline HaarData haarState(const Wha& w, double tol = kDefaultTol) {
  const auto& M = *w.M;
  Eigen::Index d = M.algDim(), n = M.carrierDim;

  std::vector<Mat> tImg, sImg;
  for (const auto& x : M.basis) {
    tImg.push_back(epsT(w, x));
    sImg.push_back(epsS(w, x));
  }
  Mat pT = projectorOnto(orthonormalColumns(detail::stackOf(spanBasis(tImg))));
  Mat pS = projectorOnto(orthonormalColumns(detail::stackOf(spanBasis(sImg))));
  Mat qT = eye(n * n) - pT, qS = eye(n * n) - pS;

  std::vector<Mat> rows;
  for (const auto& a : M.basis) {
    double res = 0;
    Mat c = pairCoeffs(M, w.deltaOf(a), &res);
    if (res > 1e-7)
      throw StructuralError("haarState: coproduct lands outside M⊗M");
    // (id⊗h)Δ(a) = Σ_q h_q Y_q with Y_q = Σ_p c(p,q) b_p; constrain the
    // component of Y_q orthogonal to ε_t(M)
    Mat zl(n * n, d), zr(n * n, d);
    for (Eigen::Index q = 0; q < d; ++q) {
      Mat y = Mat::Zero(n, n);
      for (Eigen::Index p = 0; p < d; ++p) y += c(p, q) * M.basis[p];
      zl.col(q) = qT * vecm(y);
    }
    for (Eigen::Index p = 0; p < d; ++p) {
      Mat y2 = Mat::Zero(n, n);
      for (Eigen::Index q = 0; q < d; ++q) y2 += c(p, q) * M.basis[q];
      zr.col(p) = qS * vecm(y2);
    }
    rows.push_back(zl);
    rows.push_back(zr);
  }
  Mat sys(static_cast<Eigen::Index>(rows.size()) * n * n, d);
  for (size_t k = 0; k < rows.size(); ++k)
    sys.block(static_cast<Eigen::Index>(k) * n * n, 0, n * n, d) = rows[k];
  Mat null = nullspace(sys, 1e-9);

  HaarData h;
  h.solutionDim = null.cols();
  if (h.solutionDim != 1)
    throw StructuralError("haarState: integral space is not one-dimensional");
  Vec v = null.col(0);
  cd atUnit = v.conjugate().dot(M.coeffs(M.unit));  // h(1) for this scaling
  if (std::abs(atUnit) < tol)
    throw StructuralError("haarState: integral vanishes on the unit");
  h.values = (v / atUnit).eval();
  // h(x) = Σ_j values(j) coeffs(x)(j); build the density
  Vec onBasis(d);
  for (Eigen::Index j = 0; j < d; ++j) onBasis(j) = h.values(j);
  h.state = stateFromFunctional(M, onBasis);
  if (!h.state.isPositiveDensity(1e-7))
    throw StructuralError("haarState: the Haar functional is not positive");
  return h;
}

inline cd haarEval(const HaarData& h, const MultiMatrixAlgebra& M,
                   const Mat& x) {
  return h.values.conjugate().dot(M.coeffs(x));
}

// The sliced coproduct (id⊗h)Δ maps onto the target subalgebra but, when the
// coproduct is non-unital, it contracts that subalgebra instead of fixing it
// pointwise.  Composing with the inverse of its restriction turns it into the
// genuine invariant projection.  `spanMats` spans the range.
inline CpMap normalizedOnRange(const CpMap& raw,
                               const std::vector<Mat>& spanMats) {
  auto rangeBasis = spanBasis(spanMats);
  Mat stack(spanMats[0].size(), static_cast<Eigen::Index>(rangeBasis.size()));
  for (size_t j = 0; j < rangeBasis.size(); ++j)
    stack.col(static_cast<Eigen::Index>(j)) = vecm(rangeBasis[j]);
  Mat restr = stack.adjoint() * raw.vecMat * stack;
  Mat corr = stack * restr.inverse() * stack.adjoint();
  CpMap out;
  out.dimIn = raw.dimIn;
  out.dimOut = raw.dimOut;
  out.vecMat = corr * raw.vecMat;
  return out;
}

// Haar projections onto the counital subalgebras, built from E^t = (id⊗h)Δ
// and E^s = (h⊗id)Δ renormalized on their ranges
inline CpMap haarExpectationT(const Wha& w, const HaarData& h) {
  const auto& M = *w.M;
  CpMap raw = CpMap::fromFunction(
      M.carrierDim, M.carrierDim, [&w, &h, &M](const Mat& y) {
        Mat c = pairCoeffs(M, w.deltaOf(M.project(y)));
        Mat out = Mat::Zero(M.carrierDim, M.carrierDim);
        for (Eigen::Index p = 0; p < M.algDim(); ++p)
          for (Eigen::Index q = 0; q < M.algDim(); ++q)
            out += c(p, q) * haarEval(h, M, M.basis[q]) * M.basis[p];
        return out;
      });
  std::vector<Mat> range;
  for (const auto& b : M.basis) range.push_back(epsT(w, b));
  return normalizedOnRange(raw, range);
}

inline CpMap haarExpectationS(const Wha& w, const HaarData& h) {
  const auto& M = *w.M;
  CpMap raw = CpMap::fromFunction(
      M.carrierDim, M.carrierDim, [&w, &h, &M](const Mat& y) {
        Mat c = pairCoeffs(M, w.deltaOf(M.project(y)));
        Mat out = Mat::Zero(M.carrierDim, M.carrierDim);
        for (Eigen::Index p = 0; p < M.algDim(); ++p)
          for (Eigen::Index q = 0; q < M.algDim(); ++q)
            out += c(p, q) * haarEval(h, M, M.basis[p]) * M.basis[q];
        return out;
      });
  std::vector<Mat> range;
  for (const auto& b : M.basis) range.push_back(epsS(w, b));
  return normalizedOnRange(raw, range);
}

// ------------------------------------------- base-algebra (bimodule) form

/*
 * Amqg holds the data of a candidate measured quantum groupoid on the
 * defining carrier of M: the base N with its weight ν, the two embeddings
 * α (representation) and β (anti-representation) of N into M, the coproduct
 * lift, the two invariant operator-valued weights, and the induced weights
 * Φ = ν∘α⁻¹∘T_L and Ψ = ν∘β⁻¹∘T_R on M.
 */
struct Amqg {
  std::shared_ptr<MultiMatrixAlgebra> N;
  StateOnAlgebra nu;
  std::shared_ptr<GnsData> nuG;

  std::shared_ptr<MultiMatrixAlgebra> M;
  std::vector<Mat> alphaB, betaB;  // images of N.basis on the M carrier
  std::vector<Mat> gammaLift;      // Δ(M.basis[j]) on carrier ⊗ carrier
  CpMap TL, TR;
  StateOnAlgebra Phi, Psi;

  Mat alphaOf(const Mat& n) const {
    Vec c = N->coeffs(n);
    Mat out = Mat::Zero(M->carrierDim, M->carrierDim);
    for (Eigen::Index j = 0; j < N->algDim(); ++j) out += c(j) * alphaB[j];
    return out;
  }
  Mat betaOf(const Mat& n) const {
    Vec c = N->coeffs(n);
    Mat out = Mat::Zero(M->carrierDim, M->carrierDim);
    for (Eigen::Index j = 0; j < N->algDim(); ++j) out += c(j) * betaB[j];
    return out;
  }
  // solve α(n) = x (resp. β(n) = x) for x in the image
  Mat alphaInv(const Mat& x) const {
    Mat stack(x.size(), N->algDim());
    for (Eigen::Index j = 0; j < N->algDim(); ++j) stack.col(j) = vecm(alphaB[j]);
    Vec c = leastSquares(stack, vecm(x));
    if ((stack * c - vecm(x)).norm() > 1e-7 * std::max(1.0, frobNorm(x)))
      throw StructuralError("alphaInv: element is not in the image of α");
    return N->fromCoeffs(c);
  }
  Mat betaInv(const Mat& x) const {
    Mat stack(x.size(), N->algDim());
    for (Eigen::Index j = 0; j < N->algDim(); ++j) stack.col(j) = vecm(betaB[j]);
    Vec c = leastSquares(stack, vecm(x));
    if ((stack * c - vecm(x)).norm() > 1e-7 * std::max(1.0, frobNorm(x)))
      throw StructuralError("betaInv: element is not in the image of β");
    return N->fromCoeffs(c);
  }
  Mat gammaLiftOf(const Mat& x) const {
    Vec c = M->coeffs(x);
    Eigen::Index n = M->carrierDim;
    Mat out = Mat::Zero(n * n, n * n);
    for (Eigen::Index j = 0; j < M->algDim(); ++j) out += c(j) * gammaLift[j];
    return out;
  }
};

/*
 * Rebuild the structure over the base N = ε_t(M) with the Haar state
 * supplying every weight: α the inclusion, β = κ|_N, ν = h|_N,
 * T_L, T_R the Haar expectations, Φ = Ψ = h.
 */
inline std::shared_ptr<Amqg> whaToAmqg(const Wha& w, const HaarData& h,
                                       double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  const auto& M = *w.M;

  std::vector<Mat> nGens;
  for (const auto& x : M.basis) nGens.push_back(epsT(w, x));
  a->N = std::make_shared<MultiMatrixAlgebra>(
      buildAlgebra(nGens, M.carrierDim, tol));

  Vec nuVals(a->N->algDim());
  for (Eigen::Index j = 0; j < a->N->algDim(); ++j)
    nuVals(j) = haarEval(h, M, a->N->basis[j]);
  a->nu = stateFromFunctional(*a->N, nuVals);
  a->nu.alg = a->N.get();
  a->nuG = std::make_shared<GnsData>(gns(*a->N, a->nu, tol));

  a->M = w.M;
  for (const auto& nb : a->N->basis) {
    a->alphaB.push_back(nb);            // α is the inclusion
    a->betaB.push_back(w.kappaOf(nb));  // β = κ restricted to the base
  }
  a->gammaLift = w.deltaLift;
  a->TL = haarExpectationT(w, h);
  a->TR = haarExpectationS(w, h);
  a->Phi = h.state;
  a->Phi.alg = a->M.get();
  a->Psi = h.state;
  a->Psi.alg = a->M.get();
  return a;
}

// ------------------------------------------------------- standard form

/*
 * Everything realized on the GNS space of Φ: the modules (H_Φ, β) and
 * (H_Φ, α) over (N, ν), the relative tensor square, and the coproduct as
 * descended operators. gammaCoeff[j] are the pair coefficients of
 * Δ(basis[j]) over the M basis; they transport the lift through any
 * representation of M.
 */
struct StandardForm {
  std::shared_ptr<const Amqg> a;
  GnsData phiG;
  ModuleStructure modA, modB;
  RelTensorSpace rel;
  std::vector<Mat> gammaCoeff;
  std::vector<Mat> gammaDesc;

  Mat piOf(const Mat& x) const { return phiG.pi(x); }

  Mat gammaOf(const Mat& x) const {
    Vec c = a->M->coeffs(x);
    Mat out = Mat::Zero(rel.dim, rel.dim);
    for (Eigen::Index j = 0; j < a->M->algDim(); ++j)
      out += c(j) * gammaDesc[j];
    return out;
  }

  // the coproduct of x on the undescended H_Φ ⊗ H_Φ (a representative)
  Mat gammaAmbient(const Mat& x) const {
    Vec c = a->M->coeffs(x);
    Eigen::Index n = phiG.dim;
    Mat out = Mat::Zero(n * n, n * n);
    for (Eigen::Index j = 0; j < a->M->algDim(); ++j) {
      const Mat& cc = gammaCoeff[j];
      for (Eigen::Index p = 0; p < a->M->algDim(); ++p)
        for (Eigen::Index q = 0; q < a->M->algDim(); ++q)
          out += c(j) * cc(p, q) *
                 kron(phiG.pi(a->M->basis[p]), phiG.pi(a->M->basis[q]));
    }
    return out;
  }
};

inline StandardForm buildStandardForm(std::shared_ptr<const Amqg> a,
                                      const StateOnAlgebra& weight,
                                      double tol = kDefaultTol) {
  StandardForm sf;
  sf.a = a;
  sf.phiG = gns(*a->M, weight, tol);

  sf.modA.N = a->N.get();
  sf.modA.dimH = sf.phiG.dim;
  sf.modA.anti = false;
  sf.modA.nu = a->nu;
  sf.modA.nuGns = a->nuG.get();
  sf.modB = sf.modA;
  sf.modB.anti = true;
  for (Eigen::Index j = 0; j < a->N->algDim(); ++j) {
    sf.modA.act.push_back(sf.phiG.pi(a->alphaB[j]));
    sf.modB.act.push_back(sf.phiG.pi(a->betaB[j]));
  }
  if (!sf.modA.verify(1e-7) || !sf.modB.verify(1e-7))
    throw StructuralError("buildStandardForm: α/β do not act properly");

  sf.rel = relTensor(sf.modB, sf.modA, tol);

  for (Eigen::Index j = 0; j < a->M->algDim(); ++j) {
    double res = 0;
    Mat c = pairCoeffs(*a->M, a->gammaLift[j], &res);
    if (res > 1e-7)
      throw StructuralError("buildStandardForm: coproduct lift outside M⊗M");
    sf.gammaCoeff.push_back(c);
    Mat amb = Mat::Zero(sf.phiG.dim * sf.phiG.dim, sf.phiG.dim * sf.phiG.dim);
    for (Eigen::Index p = 0; p < a->M->algDim(); ++p)
      for (Eigen::Index q = 0; q < a->M->algDim(); ++q)
        amb += c(p, q) * kron(sf.phiG.pi(a->M->basis[p]),
                              sf.phiG.pi(a->M->basis[q]));
    double dres = 0;
    Mat desc = sf.rel.descend(amb, &dres);
    if (dres > 1e-6)
      throw StructuralError("buildStandardForm: coproduct does not descend");
    sf.gammaDesc.push_back(desc);
  }
  return sf;
}

inline StandardForm buildStandardForm(std::shared_ptr<const Amqg> a,
                                      double tol = kDefaultTol) {
  return buildStandardForm(a, a->Phi, tol);
}

/*
 * Hopf bimodule axioms on the standard form: Γ is a unital *-homomorphism
 * into operators on the relative tensor square, it restricts to
 * α(n)β(m) ↦ α(n)⊗β(m), and it is coassociative. Coassociativity is
 * checked on the two iterated triple products, identified by the canonical
 * unitary between their coordinatizations.
 */
inline std::vector<CheckResult> verifyHopfBimodule(const StandardForm& sf,
                                                   double tol = kDefaultTol) {
  std::vector<CheckResult> out;
  const auto& a = *sf.a;
  const auto& M = *a.M;
  Eigen::Index g = sf.phiG.dim;
  auto scaleTol = [&](double t) { return t * std::max<double>(1.0, g); };

  double homRes = 0, starRes = 0;
  for (const auto& x : M.basis)
    for (const auto& y : M.basis)
      homRes = std::max(homRes,
                        opNorm(sf.gammaOf(x * y) - sf.gammaOf(x) * sf.gammaOf(y)));
  for (const auto& x : M.basis)
    starRes = std::max(starRes, opNorm(sf.gammaOf(x.adjoint()) -
                                       sf.gammaOf(x).adjoint()));
  addCheck(out, "bimodule coproduct multiplicative", homRes, scaleTol(tol));
  addCheck(out, "bimodule coproduct star map", starRes, scaleTol(tol));
  addCheck(out, "bimodule coproduct unital",
           opNorm(sf.gammaOf(M.unit) - eye(sf.rel.dim)), scaleTol(tol));

  double legRes = 0;
  for (const auto& n1 : a.N->basis)
    for (const auto& n2 : a.N->basis) {
      Mat x = a.alphaOf(n1) * a.betaOf(n2);
      double dres = 0;
      Mat want = sf.rel.descend(
          kron(sf.phiG.pi(a.alphaOf(n1)), sf.phiG.pi(a.betaOf(n2))), &dres);
      legRes = std::max({legRes, dres, opNorm(sf.gammaOf(x) - want)});
    }
  addCheck(out, "coproduct on the base legs", legRes, scaleTol(tol));

  // coassociativity through the two triple products
  ModuleStructure m12 = sf.modB;  // β surviving on the second leg
  m12.dimH = sf.rel.dim;
  m12.act.clear();
  ModuleStructure m23 = sf.modA;  // α surviving on the first leg
  m23.dimH = sf.rel.dim;
  m23.act.clear();
  double carryRes = 0;
  for (Eigen::Index j = 0; j < a.N->algDim(); ++j) {
    double r1 = 0, r2 = 0;
    m12.act.push_back(sf.rel.descend(kron(eye(g), sf.modB.act[j]), &r1));
    m23.act.push_back(sf.rel.descend(kron(sf.modA.act[j], eye(g)), &r2));
    carryRes = std::max({carryRes, r1, r2});
  }
  addCheck(out, "base actions descend to the square", carryRes, scaleTol(tol));

  auto tL = relTensor(m12, sf.modA, tol);
  auto tR = relTensor(sf.modB, m23, tol);
  Mat cA = tL.coord * kron(sf.rel.coord, eye(g));
  Mat cB = tR.coord * kron(eye(g), sf.rel.coord);
  Mat u = cB * cA.completeOrthogonalDecomposition().pseudoInverse();
  double uniRes = std::max(opNorm(u * u.adjoint() - eye(tR.dim)),
                           opNorm(u.adjoint() * u - eye(tL.dim)));
  uniRes = std::max(uniRes, opNorm(u * cA - cB));
  addCheck(out, "triple product identification unitary", uniRes,
           std::sqrt(tol));

  double coRes = 0;
  for (Eigen::Index j = 0; j < M.algDim(); ++j) {
    const Mat& c = sf.gammaCoeff[j];
    Mat lhsAmb = Mat::Zero(sf.rel.dim * g, sf.rel.dim * g);
    Mat rhsAmb = Mat::Zero(g * sf.rel.dim, g * sf.rel.dim);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q) {
        lhsAmb += c(p, q) * kron(sf.gammaDesc[p], sf.phiG.pi(M.basis[q]));
        rhsAmb += c(p, q) * kron(sf.phiG.pi(M.basis[p]), sf.gammaDesc[q]);
      }
    double r1 = 0, r2 = 0;
    Mat lhs = tL.descend(lhsAmb, &r1);
    Mat rhs = tR.descend(rhsAmb, &r2);
    coRes = std::max({coRes, r1, r2, opNorm(u * lhs * u.adjoint() - rhs)});
  }
  addCheck(out, "bimodule coassociativity", coRes, std::sqrt(tol));
  return out;
}

/*
 * Invariance of the operator-valued weights against the coproduct, in both
 * the scalar form (id⋆Φ)Γ(x) = π(T_L(x)) and the operator form
 * (id⋆T_L)Γ(x) = T_L(x)⊗1 (through the lift-based slice).
 */
inline std::vector<CheckResult> verifyInvariance(const StandardForm& sf,
                                                 double tol = kDefaultTol) {
  std::vector<CheckResult> out;
  const auto& a = *sf.a;
  const auto& M = *a.M;
  Eigen::Index g = sf.phiG.dim;
  auto scaleTol = [&](double t) { return t * std::max<double>(1.0, g); };

  // π(M) as an algebra on the GNS carrier with the transported states
  std::vector<Mat> piGens;
  for (const auto& b : M.basis) piGens.push_back(sf.phiG.pi(b));
  auto piM = buildAlgebra(piGens, g, tol);
  Vec phiVals(piM.algDim()), psiVals(piM.algDim());
  Mat backStack(g * g, M.algDim());
  for (Eigen::Index j = 0; j < M.algDim(); ++j)
    backStack.col(j) = vecm(sf.phiG.pi(M.basis[j]));
  for (Eigen::Index j = 0; j < piM.algDim(); ++j) {
    Vec c = leastSquares(backStack, vecm(piM.basis[j]));
    phiVals(j) = a.Phi.eval(M.fromCoeffs(c));
    psiVals(j) = a.Psi.eval(M.fromCoeffs(c));
  }
  auto phiPi = stateFromFunctional(piM, phiVals);
  auto psiPi = stateFromFunctional(piM, psiVals);

  double leftRes = 0, rightRes = 0;
  for (const auto& x : M.basis) {
    Mat got = sliceRightWeight(sf.rel, piM, phiPi, sf.gammaOf(x), tol);
    leftRes = std::max(leftRes,
                       opNorm(got - sf.phiG.pi(a.TL.apply(x))));
    Mat got2 = sliceLeftWeight(sf.rel, piM, psiPi, sf.gammaOf(x), tol);
    rightRes = std::max(rightRes,
                        opNorm(got2 - sf.phiG.pi(a.TR.apply(x))));
  }
  addCheck(out, "left invariance (scalar form)", leftRes, scaleTol(tol));
  addCheck(out, "right invariance (scalar form)", rightRes, scaleTol(tol));

  // operator form through the coefficient lift of Γ(x)
  double leftOp = 0, rightOp = 0;
  for (Eigen::Index j = 0; j < M.algDim(); ++j) {
    const Mat& c = sf.gammaCoeff[j];
    Mat lhs = Mat::Zero(g * g, g * g), rhs = Mat::Zero(g * g, g * g);
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q) {
        lhs += c(p, q) * kron(sf.phiG.pi(M.basis[p]),
                              sf.phiG.pi(a.TL.apply(M.basis[q])));
        rhs += c(p, q) * kron(sf.phiG.pi(a.TR.apply(M.basis[p])),
                              sf.phiG.pi(M.basis[q]));
      }
    double r1 = 0, r2 = 0;
    Mat lhsD = sf.rel.descend(lhs, &r1);
    Mat rhsD = sf.rel.descend(rhs, &r2);
    Mat wantL = sf.rel.descend(
        kron(sf.phiG.pi(a.TL.apply(M.basis[j])), eye(g)));
    Mat wantR = sf.rel.descend(
        kron(eye(g), sf.phiG.pi(a.TR.apply(M.basis[j]))));
    leftOp = std::max({leftOp, r1, opNorm(lhsD - wantL)});
    rightOp = std::max({rightOp, r2, opNorm(rhsD - wantR)});
  }
  addCheck(out, "left invariance (operator form)", leftOp, scaleTol(tol));
  addCheck(out, "right invariance (operator form)", rightOp, scaleTol(tol));

  // adaptedness of Φ to the base: σ_t^Φ(β(n)) = β(σ_{-t}^ν(n))
  double adRes = 0;
  for (double t : tGrid())
    for (const auto& n : a.N->basis)
      adRes = std::max(adRes, opNorm(modularAut(a.Phi, t, a.betaOf(n)) -
                                     a.betaOf(modularAut(a.nu, -t, n))));
  addCheck(out, "weight adapted to the base", adRes, scaleTol(tol));
  return out;
}

}  // namespace mqg
