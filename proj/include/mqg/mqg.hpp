#pragma once

/*
 * mqg.hpp — antipode machinery and the full structure verifier.
 *
 * Starting from a standard form over Φ and its fundamental unitary, the
 * antilinear operator G is assembled on its spanning family
 *
 *   (λ_{Λ_Ψ(σ^Ψ_{-i}(b*))})* U (Λ_Ψ(a) ⊗ Λ_Φ((cd)*))  ↦  same with (a,b)↔(c,d)
 *
 * and its polar decomposition G = I D^{1/2} yields the unitary antipode
 * R(m) = I m* I, the scaling group τ_t = Ad(D^{-it}) and the antipode
 * S = R ∘ τ_{-i/2}. The modulus δ and the scaling element λ come from the
 * densities of Ψ and Φ; P is the positive operator with
 * P^{it} Λ_Φ(x) = Λ_Φ(λ^{t/2} τ_t(x)).
 *
 * Both GNS pictures live on one Hilbert space: Λ_Ψ(x) = Λ_Φ(x·k) with
 * k = ρ_Ψ^{1/2} ρ_Φ^{-1/2}, the identification fixed by the common
 * standard cone (the modular conjugation ξ ↦ ξ* is weight-independent).
 */

#include "funit.hpp"

namespace mqg {

// I x I for antilinear I and linear x, as a linear operator
inline Mat antiConj(const AntilinearOp& i, const Mat& x) {
  return i.mat * x.conjugate() * i.mat.conjugate();
}

struct MqgData {
  std::shared_ptr<const Amqg> a;
  StandardForm sf;        // over Φ
  FundamentalUnitary fu;  // left fundamental unitary on H_Φ

  Mat kPsi;  // carrier element with Λ_Ψ(x) = Λ_Φ(x·kPsi)

  AntilinearOp G, I;
  Mat Dop;             // positive part, G = I ∘ Dop^{1/2}
  double gResidual = 0;

  Mat delta, lambdaEl;  // modulus and scaling element on the carrier of M
  Mat P;                // manageable operator on H_Φ

  Mat piStack;  // columns vecm(π(basis_j)), for inverting π

  // ---- maps on the carrier algebra M

  Mat piInv(const Mat& y, double* residual = nullptr) const {
    Vec c = leastSquares(piStack, vecm(y));
    if (residual) *residual = (piStack * c - vecm(y)).norm();
    return a->M->fromCoeffs(c);
  }

  Vec lambdaPsi(const Mat& x) const { return sf.phiG.lambda(x * kPsi); }

  // τ_z(x) = D^{-iz} π(x) D^{iz} pulled back to the carrier (z complex)
  Mat tauC(cd z, const Mat& x) const {
    Mat l = opPower(Dop, -kI * z);
    Mat r = opPower(Dop, kI * z);
    return piInv(l * sf.piOf(x) * r);
  }
  Mat tau(double t, const Mat& x) const { return tauC(cd(t, 0.0), x); }

  Mat rOf(const Mat& x) const {
    return piInv(antiConj(I, sf.piOf(x).adjoint()));
  }

  Mat sOf(const Mat& x) const { return rOf(tauC(cd(0.0, -0.5), x)); }

  // γ_t on the base, normalized so that adapted structures give γ_t = σ_t^ν
  Mat gammaBase(double t, const Mat& n) const {
    return a->betaInv(modularAut(a->Phi, -t, a->betaOf(n)));
  }

  Mat deltaPow(cd z) const { return opPowerSupport(delta, z); }
  Mat lambdaPow(cd z) const { return opPowerSupport(lambdaEl, z); }
};

// ------------------------------------------------------------- helpers

// descended Σ c_pq f(b_p) ⊗ g(b_q) for the coproduct coefficients of x
inline Mat gammaTwistedAmbient(const StandardForm& sf, const Mat& x,
                               const std::function<Mat(const Mat&)>& f,
                               const std::function<Mat(const Mat&)>& g) {
  const auto& M = *sf.a->M;
  Vec cx = M.coeffs(x);
  Eigen::Index n = sf.phiG.dim;
  Mat amb = Mat::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < M.algDim(); ++j) {
    if (std::abs(cx(j)) < 1e-15) continue;
    const Mat& c = sf.gammaCoeff[j];
    for (Eigen::Index p = 0; p < M.algDim(); ++p)
      for (Eigen::Index q = 0; q < M.algDim(); ++q)
        amb += cx(j) * c(p, q) *
               kron(sf.phiG.pi(f(M.basis[p])), sf.phiG.pi(g(M.basis[q])));
  }
  return amb;
}

inline Mat gammaTwisted(const StandardForm& sf, const Mat& x,
                        const std::function<Mat(const Mat&)>& f,
                        const std::function<Mat(const Mat&)>& g,
                        double* residual = nullptr) {
  return sf.rel.descend(gammaTwistedAmbient(sf, x, f, g), residual);
}

// f(c) for a central (hence normal) element c of the algebra
template <class F>
Mat normalFun(const Mat& c, F&& f) {
  Eigen::ComplexEigenSolver<Mat> es(c);
  if (es.info() != Eigen::Success)
    throw StructuralError("normalFun: eigensolver failed");
  Mat v = es.eigenvectors();
  Vec fv(c.rows());
  for (Eigen::Index i = 0; i < c.rows(); ++i) fv(i) = f(es.eigenvalues()(i));
  return v * fv.asDiagonal() * v.inverse();
}

// -------------------------------------------------------- construction

/*
 * The defining relation of G swaps (a,b) and (c,d) in the spanning family;
 * consistency of the induced antilinear operator is exactly adaptedness of
 * the pair of invariant weights, so the least-squares defect is checked.
 */
inline void buildAntipodeG(MqgData& m, double tol) {
  const auto& M = *m.a->M;
  Eigen::Index g = m.sf.phiG.dim, d = M.algDim();

  Mat rhoPsi = m.a->Psi.rho;
  Mat rhoPsiInv = opPowerSupport(rhoPsi, cd(-1.0), tol);

  // λ-vectors of the b-leg and the paired Λ_Φ((cd)*) vectors
  std::vector<Mat> lOps(d);
  for (Eigen::Index b = 0; b < d; ++b) {
    Mat sig = rhoPsi * M.basis[b].adjoint() * rhoPsiInv;  // σ^Ψ_{-i}(b*)
    lOps[b] = (m.sf.rel.lambdaOp(m.lambdaPsi(sig)).adjoint() * m.fu.u *
               m.fu.tgt.coord)
                  .eval();  // g × g², applied to ambient kron vectors
  }
  std::vector<Vec> aVecs(d);
  for (Eigen::Index i = 0; i < d; ++i) aVecs[i] = m.lambdaPsi(M.basis[i]);
  std::vector<std::vector<Vec>> cdVecs(d, std::vector<Vec>(d));
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index e = 0; e < d; ++e)
      cdVecs[c][e] = m.sf.phiG.lambda((M.basis[c] * M.basis[e]).adjoint());

  Eigen::Index cols = d * d * d * d;
  Mat dom(g, cols), img(g, cols);
  auto vecAt = [&](Eigen::Index ia, Eigen::Index ib, Eigen::Index ic,
                   Eigen::Index id) {
    return (lOps[ib] * kronVec(aVecs[ia], cdVecs[ic][id])).eval();
  };
  Eigen::Index col = 0;
  for (Eigen::Index ia = 0; ia < d; ++ia)
    for (Eigen::Index ib = 0; ib < d; ++ib)
      for (Eigen::Index ic = 0; ic < d; ++ic)
        for (Eigen::Index id = 0; id < d; ++id, ++col) {
          dom.col(col) = vecAt(ia, ib, ic, id);
          img.col(col) = vecAt(ic, id, ia, ib);
        }

  Mat gm = leastSquaresMat(dom.conjugate().transpose(), img.transpose())
               .transpose();
  m.G = AntilinearOp{gm};
  m.gResidual =
      opNorm(gm * dom.conjugate() - img) / std::max(1.0, opNorm(img));
  if (m.gResidual > 1e-6)
    throw StructuralError(
        "buildAntipodeG: defining relations are inconsistent (the invariant "
        "weights are not adapted to the base)");

  auto polar = polarAntilinear(m.G, tol);
  m.I = polar.isom;
  m.Dop = polar.pos;
}

/*
 * Modulus δ from the densities, δ = exp(log ρ_Ψ − log ρ_Φ), and scaling
 * element λ extracted from the Connes cocycle [DΨ:DΦ]_t = λ^{it²/2} δ^{it}
 * at t = 1 through the principal logarithm.
 */
inline void buildModulusAndScaling(MqgData& m, double tol) {
  const auto& M = *m.a->M;
  Mat ld = logPos(m.a->Psi.rho, tol) - logPos(m.a->Phi.rho, tol);
  ld = ((ld + ld.adjoint()) / 2.0).eval();
  m.delta = hermFun(ld, [](double x) { return std::exp(x); });
  if (!M.contains(m.delta, 1e-7))
    throw StructuralError("modulus: δ does not belong to the algebra");

  Mat u1 = connesCocycle(m.a->Psi, m.a->Phi, 1.0, tol);
  Mat c = M.project(u1 * opPowerSupport(m.delta, -kI, tol));
  for (const auto& b : M.basis)
    if (opNorm(c * b - b * c) > 1e-6)
      throw StructuralError("modulus: scaling candidate is not central");
  // c = λ^{i/2}, so log λ = -2i log c on the principal branch
  Mat lam = normalFun(c, [](cd w) { return std::exp(-2.0 * kI * std::log(w)); });
  lam = ((lam + lam.adjoint()) / 2.0).eval();
  if (!isPositive(lam, 1e-7))
    throw StructuralError("modulus: scaling element is not positive");
  m.lambdaEl = lam;
  Mat logLam = hermFun(lam, [](double x) { return std::log(std::max(x, 1e-300)); });
  if (opNorm(logLam) >= 8.0 * std::atan(1.0))
    throw StructuralError("modulus: principal branch unsafe for log λ");
}

/*
 * Manageable operator: P = exp(-i(½ π(log λ) + Z)) with Z the GNS image of
 * the derivation generating τ. The defining relation is re-verified on the
 * grid by verifyMqg.
 */
inline void buildManageableP(MqgData& m, double tol) {
  Mat ell = logPos(m.Dop, tol);
  double worst = 0;
  Mat z = m.sf.phiG.onGns([&](const Mat& x) {
    double r = 0;
    Mat px = m.sf.piOf(x);
    Mat y = m.piInv(-kI * (ell * px - px * ell), &r);
    worst = std::max(worst, r);
    return y;
  });
  if (worst > 1e-6)
    throw StructuralError("manageableP: scaling derivation leaves the algebra");
  Mat logLam = hermFun(m.lambdaEl,
                       [](double x) { return std::log(std::max(x, 1e-300)); });
  Mat k = -kI * (0.5 * m.sf.phiG.pi(logLam) + z);
  if (opNorm(k - k.adjoint()) > 1e-6 * std::max(1.0, opNorm(k)))
    throw StructuralError("manageableP: generator is not symmetric");
  k = ((k + k.adjoint()) / 2.0).eval();
  m.P = hermFun(k, [](double x) { return std::exp(x); });
}

inline MqgData buildMqg(std::shared_ptr<const Amqg> a,
                        double tol = kDefaultTol) {
  MqgData m;
  m.a = a;
  m.sf = buildStandardForm(a, tol);
  m.fu = buildLeftUnitary(m.sf, tol);

  const auto& M = *a->M;
  m.kPsi = opPowerSupport(a->Psi.rho, cd(0.5), tol) *
           opPowerSupport(a->Phi.rho, cd(-0.5), tol);
  m.piStack.resize(m.sf.phiG.dim * m.sf.phiG.dim, M.algDim());
  for (Eigen::Index j = 0; j < M.algDim(); ++j)
    m.piStack.col(j) = vecm(m.sf.piOf(M.basis[j]));

  buildAntipodeG(m, tol);
  buildModulusAndScaling(m, tol);
  buildManageableP(m, tol);
  return m;
}

// ------------------------------------------------------------- verifier

inline std::vector<CheckResult> verifyMqg(const MqgData& m,
                                          double tol = kDefaultTol) {
  std::vector<CheckResult> out;
  const auto& a = *m.a;
  const auto& M = *a.M;
  const auto& sf = m.sf;
  Eigen::Index g = sf.phiG.dim;
  auto scaleTol = [&](double t) { return t * std::max<double>(1.0, g); };
  const double sqTol = std::sqrt(tol);

  // polar pieces of G
  {
    double r = m.gResidual;
    r = std::max(r, opNorm(antilinearSquare(m.G) - eye(g)));
    r = std::max(r, opNorm(m.I.mat - m.I.mat.transpose()));
    r = std::max(r,
                 opNorm(antiConj(m.I, m.Dop) - opPower(m.Dop, cd(-1.0), tol)));
    addCheck(out, "antipode generator involutive", r, scaleTol(sqTol));
  }

  // unitary antipode: involutive *-anti-automorphism exchanging the legs
  {
    double r = 0;
    for (const auto& x : M.basis) {
      r = std::max(r, opNorm(m.rOf(m.rOf(x)) - x));
      r = std::max(r, opNorm(m.rOf(x.adjoint()) - m.rOf(x).adjoint()));
      for (const auto& y : M.basis)
        r = std::max(r, opNorm(m.rOf(x * y) - m.rOf(y) * m.rOf(x)));
    }
    for (const auto& n : a.N->basis) {
      r = std::max(r, opNorm(m.rOf(a.alphaOf(n)) - a.betaOf(n)));
      r = std::max(r, opNorm(m.rOf(a.betaOf(n)) - a.alphaOf(n)));
    }
    addCheck(out, "unitary antipode co-involution", r, scaleTol(sqTol));
  }

  // ς (R ⋆ R) Γ = Γ R
  {
    double r = 0;
    Mat sig = tensorFlip(g, g);
    for (const auto& x : M.basis) {
      double r1 = 0;
      Mat amb = gammaTwistedAmbient(
          sf, x, [&](const Mat& p) { return m.rOf(p); },
          [&](const Mat& q) { return m.rOf(q); });
      // the leg exchange acts on the ambient square before descending
      Mat lhs = sf.rel.descend(sig * amb * sig, &r1);
      r = std::max({r, r1, opNorm(lhs - sf.gammaOf(m.rOf(x)))});
    }
    addCheck(out, "coproduct co-involution", r, scaleTol(sqTol));
  }

  // strong invariance and its scaled version
  {
    auto sliceElem = [&](const Vec& xi, const Mat& x) {
      return m.piInv(sliceRight(sf.rel, xi, xi, sf.gammaOf(x)));
    };
    double r = 0, rt = 0;
    for (const auto& xa : M.basis)
      for (const auto& xb : M.basis) {
        Vec ja = m.sf.phiG.J.apply(sf.phiG.lambda(xa));
        Vec jb = m.sf.phiG.J.apply(sf.phiG.lambda(xb));
        Mat lhs = m.rOf(sliceElem(ja, xb.adjoint() * xb));
        Mat rhs = sliceElem(jb, xa.adjoint() * xa);
        r = std::max(r, opNorm(lhs - rhs));
        for (double t : {0.5, 1.0}) {
          Mat sa = modularAut(a.Phi, t, xa);
          Mat sb = modularAut(a.Phi, t, xb.adjoint() * xb);
          Vec jsa = m.sf.phiG.J.apply(sf.phiG.lambda(sa));
          Mat l2 = m.tau(t, sliceElem(ja, xb.adjoint() * xb));
          Mat r2 = sliceElem(jsa, sb);
          rt = std::max(rt, opNorm(l2 - r2));
        }
      }
    addCheck(out, "strong invariance of the antipode", r, scaleTol(sqTol));
    addCheck(out, "scaled invariance of the antipode", rt, scaleTol(sqTol));
  }

  // base leg behaviour of the scaling group and γ-invariance of ν
  {
    double r = 0, rnu = 0;
    for (double t : tGrid())
      for (const auto& n : a.N->basis) {
        Mat sn = modularAut(a.nu, t, n);
        r = std::max(r, opNorm(m.tau(t, a.alphaOf(n)) - a.alphaOf(sn)));
        r = std::max(r, opNorm(m.tau(t, a.betaOf(n)) - a.betaOf(sn)));
        rnu = std::max(rnu, std::abs(a.nu.eval(m.gammaBase(t, n)) -
                                     a.nu.eval(n)));
      }
    addCheck(out, "scaling group on the base legs", r, scaleTol(sqTol));
    addCheck(out, "base weight invariant under gamma", rnu, scaleTol(tol));
  }

  // modulus/scaling cocycle at the four sampled times
  {
    double r = 0;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
      Mat ut = connesCocycle(a.Psi, a.Phi, t, tol);
      Mat want = m.lambdaPow(kI * (t * t / 2.0)) * m.deltaPow(kI * t);
      r = std::max(r, opNorm(ut - want));
    }
    addCheck(out, "modulus and scaling cocycle", r, scaleTol(tol));
  }

  // δ group-like and its conjugation action on the coproduct
  {
    double r1 = 0, rr = 0;
    Mat dd = sf.rel.descend(kron(sf.piOf(m.delta), sf.piOf(m.delta)), &r1);
    rr = std::max({r1, opNorm(sf.gammaOf(m.delta) - dd)});
    addCheck(out, "modulus group-like", rr, scaleTol(sqTol));

    double rc = 0;
    for (double t : tGrid()) {
      Mat dit = m.deltaPow(kI * t), dmit = m.deltaPow(-kI * t);
      double r2 = 0;
      Mat cd2 = sf.rel.descend(kron(sf.piOf(dit), sf.piOf(dit)), &r2);
      Mat cdm = sf.rel.descend(kron(sf.piOf(dmit), sf.piOf(dmit)), &r2);
      for (const auto& x : M.basis)
        rc = std::max({rc, r2, opNorm(cd2 * sf.gammaOf(x) * cdm -
                                      sf.gammaOf(dit * x * dmit))});
    }
    addCheck(out, "modulus conjugation of the coproduct", rc, scaleTol(sqTol));
  }

  // behaviour of δ and λ under R, τ, and centrality of λ
  {
    double r = 0;
    r = std::max(r, opNorm(m.rOf(m.delta) - opPowerSupport(m.delta, cd(-1.0))));
    r = std::max(r, opNorm(m.rOf(m.lambdaEl) - m.lambdaEl));
    for (double t : tGrid()) {
      r = std::max(r, opNorm(m.tau(t, m.delta) - m.delta));
      r = std::max(r, opNorm(m.tau(t, m.lambdaEl) - m.lambdaEl));
    }
    for (const auto& x : M.basis)
      r = std::max(r, opNorm(m.lambdaEl * x - x * m.lambdaEl));
    double rImg = 1.0;
    try {
      (void)a.alphaInv(m.lambdaEl);
      (void)a.betaInv(m.lambdaEl);
      rImg = 0.0;
    } catch (const StructuralError&) {
    }
    r = std::max(r, rImg);
    addCheck(out, "scaling element central and leg-compatible", r,
             scaleTol(sqTol));
  }

  // the three modular groups commute pairwise
  {
    double r = 0;
    for (double t : {0.5, 1.0})
      for (double s : {0.5, 1.0})
        for (const auto& x : M.basis) {
          Mat pp = modularAut(a.Phi, t, modularAut(a.Psi, s, x)) -
                   modularAut(a.Psi, s, modularAut(a.Phi, t, x));
          Mat pt = modularAut(a.Phi, t, m.tau(s, x)) -
                   m.tau(s, modularAut(a.Phi, t, x));
          Mat qt = modularAut(a.Psi, t, m.tau(s, x)) -
                   m.tau(s, modularAut(a.Psi, t, x));
          r = std::max({r, opNorm(pp), opNorm(pt), opNorm(qt)});
        }
    addCheck(out, "modular groups commute", r, scaleTol(sqTol));
  }

  // compatibility of Γ with the modular and scaling groups
  {
    double r1 = 0, r2 = 0, r3 = 0;
    for (double t : tGrid())
      for (const auto& x : M.basis) {
        double rr = 0;
        Mat tw1 = gammaTwisted(
            sf, x, [&](const Mat& p) { return m.tau(t, p); },
            [&](const Mat& q) { return modularAut(a.Phi, t, q); }, &rr);
        r1 = std::max({r1, rr, opNorm(tw1 - sf.gammaOf(modularAut(a.Phi, t, x)))});
        Mat tw2 = gammaTwisted(
            sf, x, [&](const Mat& p) { return m.tau(t, p); },
            [&](const Mat& q) { return m.tau(t, q); }, &rr);
        r2 = std::max({r2, rr, opNorm(tw2 - sf.gammaOf(m.tau(t, x)))});
        Mat tw3 = gammaTwisted(
            sf, x, [&](const Mat& p) { return modularAut(a.Phi, t, p); },
            [&](const Mat& q) { return modularAut(a.Psi, -t, q); }, &rr);
        r3 = std::max({r3, rr, opNorm(tw3 - sf.gammaOf(m.tau(t, x)))});
      }
    addCheck(out, "coproduct and left modular group", r1, scaleTol(sqTol));
    addCheck(out, "coproduct and scaling group", r2, scaleTol(sqTol));
    addCheck(out, "coproduct and both modular groups", r3, scaleTol(sqTol));
  }

  // antipode square and the conjugate identity
  {
    double r = 0;
    for (const auto& x : M.basis) {
      r = std::max(r, opNorm(m.sOf(m.sOf(x)) - m.tauC(cd(0.0, -1.0), x)));
      r = std::max(r, opNorm(m.sOf(m.sOf(x).adjoint()).adjoint() - x));
    }
    addCheck(out, "antipode square is the scaling at -i", r, scaleTol(sqTol));
  }

  // antipode on the slices of the fundamental unitary
  {
    double r = 0;
    for (Eigen::Index i = 0; i < g; ++i)
      for (Eigen::Index j = 0; j < g; ++j) {
        Vec v = Vec::Unit(g, i), w = Vec::Unit(g, j);
        Mat sw = sliceOfW(m.fu, v, w);
        Mat swstar =
            m.fu.src.rhoOp(w).adjoint() * m.fu.u * m.fu.tgt.rhoOp(v);
        double rr = 0;
        Mat x = m.piInv(sw, &rr);
        r = std::max({r, rr, opNorm(sf.piOf(m.sOf(x)) - swstar)});
      }
    addCheck(out, "antipode exchanges the unitary and its adjoint", r,
             scaleTol(sqTol));
  }

  // manageable operator: defining relation on the grid
  {
    double r = 0;
    for (double t : tGrid()) {
      Mat pit = opPower(m.P, kI * t, tol);
      Mat lt = m.lambdaPow(cd(t / 2.0, 0.0));
      for (const auto& x : M.basis) {
        Vec got = pit * sf.phiG.lambda(x);
        Vec want = sf.phiG.lambda(lt * m.tau(t, x));
        r = std::max(r, (got - want).norm());
      }
    }
    addCheck(out, "manageable operator relation", r, scaleTol(sqTol));
  }

  // the right weight is the reflection of the left one
  {
    double r = 0;
    for (const auto& x : M.basis)
      r = std::max(r, std::abs(a.Psi.eval(x) - a.Phi.eval(m.rOf(x))));
    addCheck(out, "right weight is the reflected left weight", r,
             scaleTol(sqTol));
  }

  // manageability of W against P and I
  for (auto& c : manageabilityCheck(m.fu, m.P, m.I, tol)) out.push_back(c);

  return out;
}

// --------------------------------------------------------- classification

struct MqgClassification {
  bool adapted = false;
  bool quantumGroup = false;
  bool compactType = false;
  bool discreteType = false;
  double adaptedResidual = 0;
};

namespace detail {

// does ξ admit a positive scalar rescaling making all three base brackets
// equal to the unit of N on its carrier?
inline bool biNormalizable(const MqgData& m, const Vec& xi, double tol) {
  const Mat& unit = m.a->N->unit;
  if (xi.norm() < tol) return false;
  try {
    Mat ba = bracket(m.fu.modA, xi, xi, tol);
    Mat bb = bracket(m.fu.modB, xi, xi, tol);
    Mat bh = bracket(m.fu.modHat, xi, xi, tol);
    cd c = ba.trace() / unit.trace();
    if (std::abs(c) < tol) return false;
    double s = 1.0 / std::real(c);
    if (s <= 0) return false;
    double r = std::max({opNorm(s * ba - unit), opNorm(s * bb - unit),
                         opNorm(s * bh - unit)});
    return r < 1e-6;
  } catch (const StructuralError&) {
    return false;
  }
}

// candidate witnesses inside a nullspace: its basis vectors, their sum, and
// the projection of Λ_Φ(1)
inline std::vector<Vec> witnessCandidates(const MqgData& m, const Mat& null) {
  std::vector<Vec> out;
  if (null.cols() == 0) return out;
  for (Eigen::Index j = 0; j < null.cols(); ++j) out.push_back(null.col(j));
  out.push_back(null.rowwise().sum());
  Vec l1 = m.sf.phiG.lambda(m.a->M->unit);
  out.push_back(null * (null.adjoint() * l1));
  return out;
}

}  // namespace detail

inline MqgClassification classify(const MqgData& m, double tol = kDefaultTol) {
  MqgClassification c;
  const auto& a = *m.a;
  Eigen::Index g = m.sf.phiG.dim;

  double ar = 0;
  for (double t : tGrid())
    for (const auto& n : a.N->basis)
      ar = std::max(ar, opNorm(m.gammaBase(t, n) - modularAut(a.nu, t, n)));
  c.adaptedResidual = ar;
  c.adapted = ar < 1e-6 * std::max<double>(1.0, g);

  c.quantumGroup = a.N->algDim() == 1;

  // co-fixed vectors: U(v ⊗ η) = v ⊗ η for all v, η in the second leg
  {
    Mat sys(g * m.fu.src.dim, g);
    for (Eigen::Index i = 0; i < g; ++i) {
      Mat vk = kron(Mat(Vec::Unit(g, i)), eye(g));
      sys.block(i * m.fu.src.dim, 0, m.fu.src.dim, g) =
          m.fu.u * m.fu.tgt.coord * vk - m.fu.src.coord * vk;
    }
    Mat null = nullspace(sys, 1e-7);
    for (const auto& xi : detail::witnessCandidates(m, null))
      if (detail::biNormalizable(m, xi, tol)) c.compactType = true;
  }
  // fixed vectors: W(ξ ⊗ η) = ξ ⊗ η for all η, ξ in the first leg
  {
    Mat sys(g * m.fu.tgt.dim, g);
    for (Eigen::Index i = 0; i < g; ++i) {
      Mat ek = kron(eye(g), Mat(Vec::Unit(g, i)));
      sys.block(i * m.fu.tgt.dim, 0, m.fu.tgt.dim, g) =
          m.fu.w * m.fu.src.coord * ek - m.fu.tgt.coord * ek;
    }
    Mat null = nullspace(sys, 1e-7);
    for (const auto& xi : detail::witnessCandidates(m, null))
      if (detail::biNormalizable(m, xi, tol)) c.discreteType = true;
  }
  return c;
}

// ------------------------------------------------------ uniqueness probe

struct UniquenessResult {
  bool accepted = false;
  Mat h;               // central positive element of N
  double residual = 0;
};

/*
 * Any other left-invariant operator-valued weight differs from T_L by a
 * central positive element of the base pushed through β: the Connes cocycle
 * of the induced weights is β(h^{it}). Inputs failing left invariance or
 * α(N)-valuedness are rejected.
 */
inline UniquenessResult uniquenessProbe(const MqgData& m, const CpMap& tlp,
                                        double tol = kDefaultTol) {
  UniquenessResult res;
  const auto& a = *m.a;
  const auto& M = *a.M;
  const auto& sf = m.sf;
  Eigen::Index g = sf.phiG.dim;

  // range in α(N) and left invariance (operator form)
  try {
    double r = 0;
    for (Eigen::Index j = 0; j < M.algDim(); ++j) {
      (void)a.alphaInv(tlp.apply(M.basis[j]));
      const Mat& c = sf.gammaCoeff[j];
      Mat lhs = Mat::Zero(g * g, g * g);
      for (Eigen::Index p = 0; p < M.algDim(); ++p)
        for (Eigen::Index q = 0; q < M.algDim(); ++q)
          lhs += c(p, q) *
                 kron(sf.piOf(M.basis[p]), sf.piOf(tlp.apply(M.basis[q])));
      double r1 = 0;
      Mat lhsD = sf.rel.descend(lhs, &r1);
      Mat want =
          sf.rel.descend(kron(sf.piOf(tlp.apply(M.basis[j])), eye(g)));
      r = std::max({r, r1, opNorm(lhsD - want)});
    }
    res.residual = r;
    if (r > 1e-6 * std::max<double>(1.0, g)) return res;
  } catch (const StructuralError&) {
    res.residual = 1.0;
    return res;
  }

  // induced weight and its cocycle against Φ
  Vec vals(M.algDim());
  for (Eigen::Index j = 0; j < M.algDim(); ++j)
    vals(j) = a.nu.eval(a.alphaInv(tlp.apply(M.basis[j])));
  StateOnAlgebra phiP = stateFromFunctional(M, vals);
  if (!phiP.isPositiveDensity(1e-7) || !phiP.faithful(1e-7)) {
    res.residual = 1.0;
    return res;
  }

  try {
    Mat u1 = connesCocycle(phiP, a.Phi, 1.0, tol);
    Mat n1 = a.betaInv(u1);
    for (const auto& nb : a.N->basis)
      if (opNorm(n1 * nb - nb * n1) > 1e-6) {
        res.residual = 1.0;
        return res;
      }
    Mat h = normalFun(n1, [](cd w) { return std::exp(-kI * std::log(w)); });
    h = ((h + h.adjoint()) / 2.0).eval();
    if (!isPositive(h, 1e-7)) {
      res.residual = 1.0;
      return res;
    }
    double r = res.residual;
    for (double t : tGrid()) {
      Mat ut = connesCocycle(phiP, a.Phi, t, tol);
      Mat want = a.betaOf(opPower(h, kI * t, tol));
      r = std::max(r, opNorm(ut - want));
    }
    res.residual = r;
    if (r > 1e-6 * std::max<double>(1.0, g)) return res;
    res.h = h;
    res.accepted = true;
  } catch (const StructuralError&) {
    res.residual = 1.0;
  }
  return res;
}

// --------------------------------------- back to a weak Hopf C*-algebra

/*
 * Finite-dimensional reconstruction of the weak Hopf picture on H_Φ ⊗ H_Φ:
 * the relative tensor square embeds by
 *
 *   ξ ⊗_ν η ↦ e (β(n_o)^{-1/2} ξ ⊗ α(d)^{-1/2} η)
 *
 * with e the support of the Gram operator, n_o the normalized partial trace
 * of e over the second leg and d the density of ν against the normalized
 * carrier trace of α. The coproduct is pushed through this isometry, the
 * antipode is corrected into κ, and the counit is solved from the counit
 * axiom (it is unique when it exists).
 */
struct WhaReconstruction {
  Wha wha;
  Mat inu;      // ambient isometry, coordinates of the square → H⊗H
  Mat no, dEl;  // elements of N
};

inline Mat kappaFromAntipode(const MqgData& m, const Mat& no, const Mat& dEl,
                             const Mat& x) {
  const auto& a = *m.a;
  Mat nd = no * dEl;  // n_o is central in N, so the order is immaterial
  Mat l = a.alphaOf(opPowerSupport(nd, cd(0.5))) *
          a.betaOf(opPowerSupport(nd, cd(-0.5)));
  Mat r = a.alphaOf(opPowerSupport(nd, cd(-0.5))) *
          a.betaOf(opPowerSupport(nd, cd(0.5)));
  return l * m.sOf(x) * r;
}

inline WhaReconstruction amqgToWha(const MqgData& m,
                                   double tol = kDefaultTol) {
  const auto& a = *m.a;
  const auto& M = *a.M;
  const auto& sf = m.sf;
  Eigen::Index g = sf.phiG.dim, d = M.algDim();

  auto cls = classify(m, tol);
  if (!cls.adapted)
    throw StructuralError("amqgToWha: structure is not adapted to the base");

  WhaReconstruction rec;
  const auto& N = *a.N;

  // density of ν against the normalized trace through α
  auto tauOf = [&](const Mat& n) {
    return m.fu.modA.actOf(n).trace() / static_cast<double>(g);
  };
  {
    Mat sys(N.algDim(), N.algDim());
    Vec vals(N.algDim());
    for (Eigen::Index i = 0; i < N.algDim(); ++i) {
      vals(i) = a.nu.eval(N.basis[i]);
      for (Eigen::Index j = 0; j < N.algDim(); ++j)
        sys(i, j) = tauOf(N.basis[j] * N.basis[i]);
    }
    rec.dEl = N.fromCoeffs(leastSquares(sys, vals));
    rec.dEl = ((rec.dEl + rec.dEl.adjoint()) / 2.0).eval();
    if (!isPositive(rec.dEl, 1e-7))
      throw StructuralError("amqgToWha: base density is not positive");
  }

  // n_o from the normalized partial trace of the support projection
  Mat e = sf.rel.V * sf.rel.V.adjoint();
  {
    Mat pt = Mat::Zero(g, g);
    for (Eigen::Index i = 0; i < g; ++i)
      for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index j = 0; j < g; ++j)
          pt(i, k) += e(i * g + j, k * g + j) / static_cast<double>(g);
    Mat stack(g * g, N.algDim());
    for (Eigen::Index j = 0; j < N.algDim(); ++j)
      stack.col(j) = vecm(m.fu.modB.act[j]);
    Vec c = leastSquares(stack, vecm(pt));
    if ((stack * c - vecm(pt)).norm() > 1e-6)
      throw StructuralError("amqgToWha: partial trace leaves β(N)");
    rec.no = N.fromCoeffs(c);
    rec.no = ((rec.no + rec.no.adjoint()) / 2.0).eval();
  }

  rec.inu = e *
            kron(m.fu.modB.actOf(opPowerSupport(rec.no, cd(-0.5), tol)),
                 m.fu.modA.actOf(opPowerSupport(rec.dEl, cd(-0.5), tol))) *
            sf.rel.coordPinv;
  if (opNorm(rec.inu.adjoint() * rec.inu - eye(sf.rel.dim)) > 1e-6)
    throw StructuralError("amqgToWha: embedding is not isometric");

  std::vector<Mat> gens(d), dl(d), kp(d);
  std::vector<cd> ep(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    gens[j] = sf.piOf(M.basis[j]);
    dl[j] = rec.inu * sf.gammaDesc[j] * rec.inu.adjoint();
    kp[j] = sf.piOf(kappaFromAntipode(m, rec.no, rec.dEl, M.basis[j]));
  }

  // counit from the counit axiom, solved as a linear system over the basis
  {
    Mat pairStack(g * g * g * g, d * d);
    for (Eigen::Index p = 0; p < d; ++p)
      for (Eigen::Index q = 0; q < d; ++q)
        pairStack.col(p * d + q) = vecm(kron(gens[p], gens[q]));
    Mat sys(2 * d * g * g, d);
    Vec rhs(2 * d * g * g);
    for (Eigen::Index j = 0; j < d; ++j) {
      Vec flat = leastSquares(pairStack, vecm(dl[j]));
      if ((pairStack * flat - vecm(dl[j])).norm() > 1e-6)
        throw StructuralError("amqgToWha: coproduct lands outside M⊗M");
      Mat left(g * g, d), right(g * g, d);
      for (Eigen::Index p = 0; p < d; ++p) {
        Mat yl = Mat::Zero(g, g), yr = Mat::Zero(g, g);
        for (Eigen::Index q = 0; q < d; ++q) {
          yl += flat(p * d + q) * gens[q];   // coefficient of ε(b_p)
          yr += flat(q * d + p) * gens[q];   // coefficient of ε(b_p)
        }
        left.col(p) = vecm(yl);
        right.col(p) = vecm(yr);
      }
      sys.block(2 * j * g * g, 0, g * g, d) = left;
      sys.block((2 * j + 1) * g * g, 0, g * g, d) = right;
      rhs.segment(2 * j * g * g, g * g) = vecm(gens[j]);
      rhs.segment((2 * j + 1) * g * g, g * g) = vecm(gens[j]);
    }
    Vec epsSol = leastSquares(sys, rhs);
    if ((sys * epsSol - rhs).norm() > 1e-6)
      throw StructuralError("amqgToWha: counit axiom has no solution");
    for (Eigen::Index j = 0; j < d; ++j) ep[j] = epsSol(j);
  }

  rec.wha = whaFromGenerators(gens, dl, ep, kp, tol);
  return rec;
}

}  // namespace mqg
