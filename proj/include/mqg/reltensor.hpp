#pragma once

/*
 * reltensor.hpp — relative tensor products over a basis algebra N with a
 * faithful weight ν, realized through their Gram operator.
 *
 * A module structure is a (anti)representation of N on a carrier H. For a
 * vector ξ ∈ H the operator R(ξ) : H_ν → H is determined by
 *
 *   representation  (α-type):  R(ξ) Λ_ν(y) = α(y) ξ
 *   anti-rep        (β-type):  R(ξ) Λ_ν(y) = β(σ_{i/2}(y)) ξ
 *
 * The β-type domain is really the GNS space of the opposite weight; the
 * modular twist σ_{i/2}(y) = ρ^{-1/2} y ρ^{1/2} realizes that space on H_ν
 * (through J_ν Λ_ν(y*) = Λ_ν(σ_{-i/2}(y))). With this convention
 * R(η)*R(ξ) = π_ν(⟨ξ,η⟩) for β-type modules, while for α-type modules it
 * equals J_ν π_ν(⟨ξ,η⟩*) J_ν; either way the bracket is a positive
 * N-valued inner product.
 *
 * The relative tensor product of a left module (H, b) and a right module
 * (K, a) is the quotient of H⊗K by the kernel of the positive form
 *
 *   ⟨ξ₁⊗η₁, ξ₂⊗η₂⟩_rel = ⟨η₁, a(⟨ξ₂,ξ₁⟩_b) η₂⟩ ,
 *
 * encoded as a Gram operator Q on H⊗K. Coordinates on the quotient are
 * D^{1/2}U* with Q = U D U* restricted to the support; operators descend by
 * conjugation with the coordinate maps (with a well-definedness residual).
 */

#include "gns.hpp"

#include <optional>

namespace mqg {

struct ModuleStructure {
  const MultiMatrixAlgebra* N = nullptr;
  Eigen::Index dimH = 0;
  std::vector<Mat> act;  // act[i] = action of N.basis[i] on the carrier
  bool anti = false;     // false: representation, true: anti-representation
  StateOnAlgebra nu;     // faithful weight on N
  const GnsData* nuGns = nullptr;  // GNS of ν (owned by the caller)

  Mat actOf(const Mat& n) const {
    Vec c = N->coeffs(n);
    Mat out = Mat::Zero(dimH, dimH);
    for (Eigen::Index i = 0; i < N->algDim(); ++i) out += c(i) * act[i];
    return out;
  }

  // R(ξ) : H_ν → H
  Mat rOp(const Vec& xi) const {
    const GnsData& g = *nuGns;
    Mat rh = opPower(nu.rho, cd(0.5));
    Mat rhInv = opPowerSupport(nu.rho, cd(-0.5));
    Mat r(dimH, g.dim);
    for (Eigen::Index k = 0; k < g.dim; ++k) {
      Mat y = g.fromLambda(Vec::Unit(g.dim, k));
      r.col(k) = anti ? actOf(rhInv * y * rh) * xi : actOf(y) * xi;
    }
    return r;
  }

  // θ(ξ,η) = R(ξ)R(η)* on the carrier
  Mat theta(const Vec& xi, const Vec& eta) const {
    return rOp(xi) * rOp(eta).adjoint();
  }

  bool verify(double tol = kDefaultTol) const {
    // *-(anti)homomorphism property and non-degeneracy on the basis
    for (Eigen::Index i = 0; i < N->algDim(); ++i) {
      for (Eigen::Index j = 0; j < N->algDim(); ++j) {
        Mat prod = N->basis[i] * N->basis[j];
        Mat want = anti ? actOf(N->basis[j]) * actOf(N->basis[i])
                        : actOf(N->basis[i]) * actOf(N->basis[j]);
        if (opNorm(actOf(prod) - want) > tol) return false;
      }
      if (opNorm(actOf(N->basis[i].adjoint()) - actOf(N->basis[i]).adjoint()) > tol)
        return false;
    }
    return opNorm(actOf(N->unit) - eye(dimH)) <= tol;
  }
};

// N-valued bracket ⟨ξ,η⟩; positive in the first-equals-second case.
// β-type: R(η)*R(ξ) = π_ν(⟨ξ,η⟩);  α-type: R(η)*R(ξ) = J π_ν(⟨ξ,η⟩*) J.
inline Mat bracket(const ModuleStructure& m, const Vec& xi, const Vec& eta,
                   double tol = kDefaultTol) {
  const GnsData& g = *m.nuGns;
  Mat op = m.rOp(eta).adjoint() * m.rOp(xi);
  Mat sys(op.size(), m.N->algDim());
  for (Eigen::Index j = 0; j < m.N->algDim(); ++j) {
    Mat rep = m.anti
                  ? g.pi(m.N->basis[j])
                  : Mat(g.J.mat * g.pi(m.N->basis[j].adjoint()).conjugate() *
                        g.J.mat.conjugate());
    sys.col(j) = vecm(rep);
  }
  Vec c = leastSquares(sys, vecm(op));
  double resid = (sys * c - vecm(op)).norm();
  if (resid > 100 * tol * std::max(1.0, frobNorm(op)))
    throw StructuralError("bracket: R(η)*R(ξ) is not in the expected copy of N");
  Mat out = Mat::Zero(m.N->carrierDim, m.N->carrierDim);
  for (Eigen::Index j = 0; j < m.N->algDim(); ++j) out += c(j) * m.N->basis[j];
  return out;
}

// ----------------------------------------------------------- module bases

struct RelBasis {
  std::vector<Vec> vectors;
  std::vector<Mat> rOps;  // partial isometries with final supports summing to 1
};

/*
 * Greedy construction of a basis of the module: peel off partial-isometry
 * R-operators until the defect projection 1 − Σ R_i R_i* vanishes. The
 * polar part of an intertwiner is again an intertwiner, and any intertwiner
 * u equals R(u Λ_ν(1)), so each step stays inside the bounded-vector
 * calculus.
 */
inline RelBasis moduleBasis(const ModuleStructure& m, double tol = kDefaultTol) {
  RelBasis out;
  const GnsData& g = *m.nuGns;
  Vec lambdaOne = g.lambda(m.N->unit);
  Mat defect = eye(m.dimH);
  for (int guard = 0; guard < 4 * static_cast<int>(m.dimH) + 4; ++guard) {
    if (opNorm(defect) < std::sqrt(tol)) break;
    // candidate with the largest remaining component
    Eigen::Index best = 0;
    double bestNorm = 0;
    for (Eigen::Index j = 0; j < m.dimH; ++j) {
      double n = (defect * Vec::Unit(m.dimH, j)).norm();
      if (n > bestNorm) { bestNorm = n; best = j; }
    }
    Vec xi = defect * Vec::Unit(m.dimH, best);
    Mat r = m.rOp(xi);
    Mat u = r * opPowerSupport(r.adjoint() * r, cd(-0.5), std::sqrt(tol));
    Vec xiN = u * lambdaOne;
    if (opNorm(m.rOp(xiN) - u) > 1e-6)
      throw StructuralError("moduleBasis: polar part is not an R-operator");
    out.vectors.push_back(xiN);
    out.rOps.push_back(u);
    defect -= u * u.adjoint();
  }
  Mat sum = Mat::Zero(m.dimH, m.dimH);
  for (const auto& u : out.rOps) sum += u * u.adjoint();
  if (opNorm(sum - eye(m.dimH)) > 1e-6)
    throw StructuralError("moduleBasis: completeness defect");
  return out;
}

// --------------------------------------------------- relative tensor space

struct RelTensorSpace {
  ModuleStructure left;   // supplies the bracket
  ModuleStructure right;  // receives the bracket through its action
  Eigen::Index dimH = 0, dimK = 0, dim = 0;
  Mat Q;          // Gram operator on H⊗K
  Mat V;          // support isometry, V V* = supp(Q)
  Mat coord;      // C : H⊗K → ℂ^dim, ⟨Cx, Cy⟩ = ⟨x, Qy⟩
  Mat coordPinv;  // C⁺ : ℂ^dim → H⊗K (canonical representatives)

  // descended operator on the quotient; *residual measures whether X is
  // well defined on classes (i.e. preserves ker Q)
  Mat descend(const Mat& x, double* residual = nullptr) const {
    if (residual) {
      Mat supp = V * V.adjoint();
      *residual = opNorm(coord * x * (eye(dimH * dimK) - supp));
    }
    return coord * x * coordPinv;
  }

  // ξ ⊗_ν (·) : K → quotient
  Mat lambdaOp(const Vec& xi) const {
    return coord * kron(Mat(xi), eye(dimK));
  }
  // (·) ⊗_ν η : H → quotient
  Mat rhoOp(const Vec& eta) const {
    return coord * kron(eye(dimH), Mat(eta));
  }

  Vec embedVec(const Vec& xi, const Vec& eta) const {
    return coord * kronVec(xi, eta);
  }
};

inline RelTensorSpace relTensor(const ModuleStructure& left,
                                const ModuleStructure& right,
                                double tol = kDefaultTol) {
  if (left.N != right.N)
    throw StructuralError("relTensor: modules over different basis algebras");
  if (frobNorm(left.nu.rho - right.nu.rho) > tol)
    throw StructuralError("relTensor: modules over different weights");
  RelTensorSpace t;
  t.left = left;
  t.right = right;
  t.dimH = left.dimH;
  t.dimK = right.dimH;
  const Eigen::Index n = t.dimH * t.dimK;

  t.Q = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < t.dimH; ++i)
    for (Eigen::Index k = 0; k < t.dimH; ++k) {
      // ⟨e_i⊗f_j, Q e_k⊗f_l⟩ = ⟨f_j, a(⟨e_k,e_i⟩_b) f_l⟩
      Mat a = right.actOf(bracket(left, Vec::Unit(t.dimH, k),
                                  Vec::Unit(t.dimH, i), tol));
      t.Q.block(i * t.dimK, k * t.dimK, t.dimK, t.dimK) = a;
    }
  t.Q = ((t.Q + t.Q.adjoint()) / 2.0).eval();

  auto [vals, vecs] = eigh(t.Q);
  double cut = tol * std::max(1.0, vals.cwiseAbs().maxCoeff());
  if (vals.minCoeff() < -1e-6 * std::max(1.0, vals.cwiseAbs().maxCoeff()))
    throw StructuralError("relTensor: gram operator is not positive");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals(i) > cut) keep.push_back(i);
  t.dim = static_cast<Eigen::Index>(keep.size());
  t.V.resize(n, t.dim);
  Vec dHalf(t.dim), dHalfInv(t.dim);
  for (Eigen::Index j = 0; j < t.dim; ++j) {
    t.V.col(j) = vecs.col(keep[j]);
    dHalf(j) = std::sqrt(vals(keep[j]));
    dHalfInv(j) = 1.0 / dHalf(j).real();
  }
  t.coord = dHalf.asDiagonal() * t.V.adjoint();
  t.coordPinv = t.V * dHalfInv.asDiagonal();
  return t;
}

// the flip σ : H ⊗_ν K → K ⊗_ν H as a matrix between the two quotients
inline Mat flipUnitary(const RelTensorSpace& from, const RelTensorSpace& to) {
  return to.coord * tensorFlip(from.dimH, from.dimK) * from.coordPinv;
}

// ------------------------------------------------------------ fiber product

/*
 * Fiber product M₁ ⋆ M₂: commutant, inside the quotient space, of the
 * descended M₁′ ⊗ M₂′. In finite dimensions this coincides with the
 * compression of M₁ ⊗ M₂ by the support of the Gram operator; the caller
 * can verify that through fiberProductAsCompression.
 */
inline MultiMatrixAlgebra fiberProduct(const MultiMatrixAlgebra& m1,
                                       const MultiMatrixAlgebra& m2,
                                       const RelTensorSpace& t,
                                       double tol = kDefaultTol) {
  auto c1 = commutant(m1, t.dimH, tol);
  auto c2 = commutant(m2, t.dimK, tol);
  std::vector<Mat> span;
  for (const auto& x : c1.basis)
    for (const auto& y : c2.basis) {
      double resid = 0;
      Mat d = t.descend(kron(x, y), &resid);
      if (resid > 1e-6)
        throw StructuralError("fiberProduct: commutant tensor does not descend");
      span.push_back(d);
    }
  auto inner = algebraFromSpan(span, t.dim, tol);
  return commutant(inner, t.dim, tol);
}

inline MultiMatrixAlgebra fiberProductAsCompression(
    const MultiMatrixAlgebra& m1, const MultiMatrixAlgebra& m2,
    const RelTensorSpace& t, double tol = kDefaultTol) {
  std::vector<Mat> span;
  for (const auto& x : m1.basis)
    for (const auto& y : m2.basis)
      span.push_back(t.V.adjoint() * kron(x, y) * t.V);
  // compress with the isometry V so the result is *-closed on the nose
  std::vector<Mat> conj;
  Mat toV = t.V.adjoint() * t.coordPinv;   // coordinates → V-frame
  Mat fromV = t.coord * t.V;               // V-frame → coordinates
  for (auto& s : span) conj.push_back(fromV * s * toV);
  return algebraFromSpan(conj, t.dim, tol);
}

// ---------------------------------------------------------------- slices

// (ω_{ξ₁,ξ₂} ⋆ id)(A) = λ_{ξ₂}* A λ_{ξ₁}, an operator on K
inline Mat sliceLeft(const RelTensorSpace& t, const Vec& xi1, const Vec& xi2,
                     const Mat& a) {
  return t.lambdaOp(xi2).adjoint() * a * t.lambdaOp(xi1);
}

// (id ⋆ ω_{η₁,η₂})(A) = ρ_{η₂}* A ρ_{η₁}, an operator on H
inline Mat sliceRight(const RelTensorSpace& t, const Vec& eta1, const Vec& eta2,
                      const Mat& a) {
  return t.rhoOp(eta2).adjoint() * a * t.rhoOp(eta1);
}

// decomposition of a functional on M₂ into vector functionals on the carrier:
// φ(y) = Σ_k ⟨η_k, y η_k⟩ with η_k the scaled eigenvectors of the extended
// density Σ_k z_k ρ / m_k
inline std::vector<Vec> vectorDecomposition(const MultiMatrixAlgebra& alg,
                                            const StateOnAlgebra& phi,
                                            double tol = kDefaultTol) {
  Mat sigma = Mat::Zero(alg.carrierDim, alg.carrierDim);
  for (size_t k = 0; k < alg.centralProjs.size(); ++k)
    sigma += alg.centralProjs[k] * phi.rho / alg.multiplicity[k];
  sigma = ((sigma + sigma.adjoint()) / 2.0).eval();
  auto [vals, vecs] = eigh(sigma);
  std::vector<Vec> out;
  double cut = tol * std::max(1.0, vals.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (vals(i) > cut) out.push_back(std::sqrt(vals(i)) * vecs.col(i));
  return out;
}

// (id ⋆ φ)(A) for a positive functional φ on the right-leg algebra
inline Mat sliceRightWeight(const RelTensorSpace& t,
                            const MultiMatrixAlgebra& m2,
                            const StateOnAlgebra& phi, const Mat& a,
                            double tol = kDefaultTol) {
  Mat out = Mat::Zero(t.dimH, t.dimH);
  for (const auto& eta : vectorDecomposition(m2, phi, tol))
    out += t.rhoOp(eta).adjoint() * a * t.rhoOp(eta);
  return out;
}

// (φ ⋆ id)(A) for a positive functional φ on the left-leg algebra
inline Mat sliceLeftWeight(const RelTensorSpace& t,
                           const MultiMatrixAlgebra& m1,
                           const StateOnAlgebra& phi, const Mat& a,
                           double tol = kDefaultTol) {
  Mat out = Mat::Zero(t.dimK, t.dimK);
  for (const auto& xi : vectorDecomposition(m1, phi, tol))
    out += t.lambdaOp(xi).adjoint() * a * t.lambdaOp(xi);
  return out;
}

// -------------------------------------------- operator-valued weight slices

/*
 * A completely positive map between matrix algebras, stored by its action
 * on the vectorized carrier. Positivity is tested through the Choi matrix.
 */
struct CpMap {
  Eigen::Index dimIn = 0, dimOut = 0;
  Mat vecMat;  // maps vec(x) to vec(T(x)), column-major vec

  Mat apply(const Mat& x) const { return unvec(vecMat * vecm(x), dimOut, dimOut); }

  Mat choi() const {
    Mat c = Mat::Zero(dimIn * dimOut, dimIn * dimOut);
    for (Eigen::Index i = 0; i < dimIn; ++i)
      for (Eigen::Index j = 0; j < dimIn; ++j) {
        Mat eij = Mat::Zero(dimIn, dimIn);
        eij(i, j) = 1.0;
        Mat tij = apply(eij);
        for (Eigen::Index k = 0; k < dimOut; ++k)
          for (Eigen::Index l = 0; l < dimOut; ++l)
            c(i * dimOut + k, j * dimOut + l) = tij(k, l);
      }
    return c;
  }

  bool completelyPositive(double tol = kDefaultTol) const {
    return isPositive(choi(), std::sqrt(tol));
  }

  static CpMap fromFunction(Eigen::Index dimIn, Eigen::Index dimOut,
                            const std::function<Mat(const Mat&)>& f) {
    CpMap t;
    t.dimIn = dimIn;
    t.dimOut = dimOut;
    t.vecMat.resize(dimOut * dimOut, dimIn * dimIn);
    for (Eigen::Index j = 0; j < dimIn; ++j)
      for (Eigen::Index i = 0; i < dimIn; ++i) {
        Mat eij = Mat::Zero(dimIn, dimIn);
        eij(i, j) = 1.0;
        t.vecMat.col(j * dimIn + i) = vecm(f(eij));
      }
    return t;
  }
};

// minimum-norm lift of a descended operator back into span(M₁ ⊗ M₂)
inline Mat liftToTensor(const RelTensorSpace& t, const MultiMatrixAlgebra& m1,
                        const MultiMatrixAlgebra& m2, const Mat& a,
                        double* residual = nullptr) {
  Mat sys(t.dim * t.dim, m1.algDim() * m2.algDim());
  Eigen::Index col = 0;
  for (Eigen::Index p = 0; p < m1.algDim(); ++p)
    for (Eigen::Index q = 0; q < m2.algDim(); ++q)
      sys.col(col++) = vecm(t.descend(kron(m1.basis[p], m2.basis[q])));
  Vec c = leastSquares(sys, vecm(a));
  if (residual) *residual = (sys * c - vecm(a)).norm();
  Mat lift = Mat::Zero(t.dimH * t.dimK, t.dimH * t.dimK);
  col = 0;
  for (Eigen::Index p = 0; p < m1.algDim(); ++p)
    for (Eigen::Index q = 0; q < m2.algDim(); ++q)
      lift += c(col++) * kron(m1.basis[p], m2.basis[q]);
  return lift;
}

// (id ⋆ T)(A): lift, apply id⊗T on the lifted tensor legs, descend again
inline Mat ovwSliceRight(const RelTensorSpace& t, const MultiMatrixAlgebra& m1,
                         const MultiMatrixAlgebra& m2, const CpMap& T,
                         const Mat& a, double tol = kDefaultTol) {
  double resid = 0;
  Mat lift = liftToTensor(t, m1, m2, a, &resid);
  if (resid > 1e-6 * std::max(1.0, frobNorm(a)))
    throw StructuralError("ovwSliceRight: operator is not in the fiber product");
  // id ⊗ T on simple tensors of the algebra bases
  Mat out = Mat::Zero(t.dimH * t.dimK, t.dimH * t.dimK);
  Mat sys(static_cast<Eigen::Index>(t.dimH * t.dimK) *
              static_cast<Eigen::Index>(t.dimH * t.dimK), 0);
  // decompose the lift over basis pairs again (coefficients are cheap to
  // recompute and keep this function self-contained)
  Mat pairStack(lift.size(), m1.algDim() * m2.algDim());
  Eigen::Index col = 0;
  for (Eigen::Index p = 0; p < m1.algDim(); ++p)
    for (Eigen::Index q = 0; q < m2.algDim(); ++q)
      pairStack.col(col++) = vecm(kron(m1.basis[p], m2.basis[q]));
  Vec c = leastSquares(pairStack, vecm(lift));
  col = 0;
  for (Eigen::Index p = 0; p < m1.algDim(); ++p)
    for (Eigen::Index q = 0; q < m2.algDim(); ++q)
      out += c(col++) * kron(m1.basis[p], T.apply(m2.basis[q]));
  return t.descend(out);
}

// (T ⋆ id)(A), symmetric version
inline Mat ovwSliceLeft(const RelTensorSpace& t, const MultiMatrixAlgebra& m1,
                        const MultiMatrixAlgebra& m2, const CpMap& T,
                        const Mat& a, double tol = kDefaultTol) {
  double resid = 0;
  Mat lift = liftToTensor(t, m1, m2, a, &resid);
  if (resid > 1e-6 * std::max(1.0, frobNorm(a)))
    throw StructuralError("ovwSliceLeft: operator is not in the fiber product");
  Mat pairStack(lift.size(), m1.algDim() * m2.algDim());
  Eigen::Index col = 0;
  for (Eigen::Index p = 0; p < m1.algDim(); ++p)
    for (Eigen::Index q = 0; q < m2.algDim(); ++q)
      pairStack.col(col++) = vecm(kron(m1.basis[p], m2.basis[q]));
  Vec c = leastSquares(pairStack, vecm(lift));
  Mat out = Mat::Zero(t.dimH * t.dimK, t.dimH * t.dimK);
  col = 0;
  for (Eigen::Index p = 0; p < m1.algDim(); ++p)
    for (Eigen::Index q = 0; q < m2.algDim(); ++q)
      out += c(col++) * kron(T.apply(m1.basis[p]), m2.basis[q]);
  return t.descend(out);
}

}  // namespace mqg
