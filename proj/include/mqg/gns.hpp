#pragma once

/*
 * gns.hpp — GNS construction for a faithful positive functional on a
 * multi-matrix algebra, with the modular data in the standard form:
 *
 *   ⟨Λ(x), Λ(y)⟩ = φ(x* y)           (inner product linear in the 2nd slot)
 *   Δ Λ(x)  = Λ(ρ x ρ⁻¹)
 *   J Λ(x)  = Λ(ρ^{1/2} x* ρ^{-1/2})
 *   S       = J Δ^{1/2},  S Λ(x) = Λ(x*)
 *
 * where ρ is the density of φ against the reference trace. Coordinates on
 * the GNS space are G^{1/2}·(algebra coefficients), G the Gram matrix of
 * the algebra basis, so the standard inner product realizes the form.
 */

#include "algebra.hpp"

#include <functional>

namespace mqg {

struct GnsData {
  const MultiMatrixAlgebra* alg = nullptr;
  StateOnAlgebra phi;
  Eigen::Index dim = 0;

  Mat gramHalf, gramHalfInv;  // on algebra-coefficient space
  Mat Delta;                  // modular operator on GNS coordinates
  AntilinearOp J;             // modular conjugation
  AntilinearOp S;             // S = J ∘ Δ^{1/2}

  Vec lambda(const Mat& x) const { return gramHalf * alg->coeffs(x); }

  Mat fromLambda(const Vec& v) const {
    return alg->fromCoeffs(gramHalfInv * v);
  }

  // coefficient-space matrix of a linear map f : A → A
  Mat coeffMap(const std::function<Mat(const Mat&)>& f) const {
    Mat m(alg->algDim(), alg->algDim());
    for (Eigen::Index j = 0; j < alg->algDim(); ++j)
      m.col(j) = alg->coeffs(f(alg->basis[j]));
    return m;
  }

  // GNS-coordinate matrix of a linear map on the algebra
  Mat onGns(const std::function<Mat(const Mat&)>& f) const {
    return gramHalf * coeffMap(f) * gramHalfInv;
  }

  // left representation π(x) Λ(y) = Λ(xy)
  Mat pi(const Mat& x) const {
    return onGns([&](const Mat& y) { return x * y; });
  }

  // right multiplication Λ(y) ↦ Λ(yx) (an anti-representation)
  Mat piRight(const Mat& x) const {
    return onGns([&](const Mat& y) { return y * x; });
  }

  Mat deltaPow(cd z, double tol = kDefaultTol) const {
    return opPower(Delta, z, tol);
  }
};

inline GnsData gns(const MultiMatrixAlgebra& A, const StateOnAlgebra& phi,
                   double tol = kDefaultTol) {
  if (phi.alg != &A) throw StructuralError("gns: state is not on this algebra");
  if (!phi.isPositiveDensity(tol) || !phi.faithful(tol))
    throw StructuralError("gns: functional must be faithful and positive");

  GnsData g;
  g.alg = &A;
  g.phi = phi;
  g.dim = A.algDim();

  Mat gram(g.dim, g.dim);
  for (Eigen::Index i = 0; i < g.dim; ++i)
    for (Eigen::Index j = 0; j < g.dim; ++j)
      gram(i, j) = phi.eval(A.basis[i].adjoint() * A.basis[j]);
  g.gramHalf = opPower(gram, cd(0.5), tol);
  g.gramHalfInv = opPower(gram, cd(-0.5), tol);

  const Mat rho = phi.rho;
  const Mat rhoInv = opPower(rho, cd(-1.0), tol);
  const Mat rhoH = opPower(rho, cd(0.5), tol);
  const Mat rhoHInv = opPower(rho, cd(-0.5), tol);

  g.Delta = g.onGns([&](const Mat& x) { return rho * x * rhoInv; });
  g.Delta = (g.Delta + g.Delta.adjoint()).eval() / 2.0;

  // star map is antilinear: coeffs(x*) = S_* conj(coeffs(x))
  Mat starCoeff(g.dim, g.dim);
  for (Eigen::Index j = 0; j < g.dim; ++j)
    starCoeff.col(j) = A.coeffs(A.basis[j].adjoint());

  Mat jmat = g.gramHalf *
             g.coeffMap([&](const Mat& x) { return rhoH * x * rhoHInv; }) *
             starCoeff * g.gramHalfInv.conjugate();
  g.J = AntilinearOp{jmat};
  g.S = g.J.composeLinear(opPower(g.Delta, cd(0.5), tol));
  return g;
}

}  // namespace mqg
