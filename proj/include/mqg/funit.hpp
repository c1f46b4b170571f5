#pragma once

/*
 * funit.hpp — the fundamental unitary of a standard form.
 *
 * With H the GNS space of Φ, W is the unitary
 *
 *     W : H β⊗α H  →  H α⊗β̂ H ,     β̂(n) = J π(α(n*)) J ,
 *
 * whose adjoint U = W* is pinned down on the spanning vectors v ⊗ Λ(a) by
 *
 *     U (v ⊗ Λ(a)) = Σᵢ ξᵢ ⊗ Λ((ω_{v,ξᵢ} ⋆ id) Γ(a))
 *
 * over a module basis (ξᵢ) of the β-leg. The coproduct is recovered as
 * Γ(m) = W*(1⊗m)W, and W satisfies a pentagon identity whose legs run
 * through a chain of triple relative tensor products connected by flips.
 */

#include "hopf.hpp"

namespace mqg {

// n ↦ J x* J for x = π(α(n)) (an anti-representation commuting with M)
inline Mat hatConjugate(const GnsData& g, const Mat& x) {
  return g.J.mat * x.conjugate() * g.J.mat.conjugate();
}

struct FundamentalUnitary {
  std::shared_ptr<const Amqg> a;
  GnsData gG;                     // GNS data of the weight in use
  ModuleStructure modA, modB, modHat;
  RelTensorSpace src;             // H β⊗α H (domain of W)
  RelTensorSpace tgt;             // H α⊗β̂ H (codomain of W)
  RelBasis basis;                 // module basis of the β-leg
  Mat u;                          // U : tgt → src
  Mat w;                          // W = U* : src → tgt
  double buildResidual = 0;       // least-squares defect on the spanning set

  Mat wAmbient() const { return tgt.coordPinv * w * src.coord; }
};

/*
 * Left fundamental unitary from a standard form. The defining formula only
 * uses the descended coproduct, the module basis of (H, β) and the GNS
 * transform of Φ.
 */
inline FundamentalUnitary buildLeftUnitary(const StandardForm& sf,
                                           double tol = kDefaultTol) {
  FundamentalUnitary f;
  f.a = sf.a;
  f.gG = sf.phiG;
  f.modA = sf.modA;
  f.modB = sf.modB;

  f.modHat = sf.modA;
  f.modHat.anti = true;
  f.modHat.act.clear();
  for (Eigen::Index j = 0; j < sf.a->N->algDim(); ++j)
    f.modHat.act.push_back(hatConjugate(
        sf.phiG, sf.phiG.pi(sf.a->alphaOf(sf.a->N->basis[j].adjoint()))));
  if (!f.modHat.verify(1e-7))
    throw StructuralError("buildLeftUnitary: hat leg does not act properly");

  f.src = sf.rel;
  f.tgt = relTensor(f.modA, f.modHat, tol);
  if (f.src.dim != f.tgt.dim)
    throw StructuralError("buildLeftUnitary: leg spaces have different size");
  f.basis = moduleBasis(f.modB, tol);

  const auto& M = *sf.a->M;
  Eigen::Index g = sf.phiG.dim;
  Vec lambdaOne = sf.phiG.lambda(M.unit);
  Eigen::Index cols = g * M.algDim();
  Mat dom(f.tgt.dim, cols), img(f.src.dim, cols);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < g; ++i) {
    Vec v = Vec::Unit(g, i);
    for (Eigen::Index j = 0; j < M.algDim(); ++j, ++c) {
      dom.col(c) = f.tgt.embedVec(v, sf.phiG.lambda(M.basis[j]));
      Vec im = Vec::Zero(f.src.dim);
      for (const auto& xi : f.basis.vectors) {
        Mat slice = sliceLeft(f.src, v, xi, sf.gammaDesc[j]);
        im += f.src.embedVec(xi, slice * lambdaOne);
      }
      img.col(c) = im;
    }
  }
  f.u = leastSquaresMat(dom.transpose(), img.transpose()).transpose();
  f.buildResidual =
      opNorm(f.u * dom - img) / std::max(1.0, opNorm(img));
  f.w = f.u.adjoint();
  return f;
}

/*
 * Right fundamental unitary on the GNS space of Ψ:
 *
 *   W' : H α̂⊗β H → H β⊗α H ,    α̂(n) = J π(β(n*)) J ,
 *   W'(Λ(a) ⊗ v) = Σᵢ Λ((id ⋆ ω_{v,ηᵢ}) Γ(a)) ⊗ ηᵢ
 *
 * with (ηᵢ) a module basis of the α-leg. The caller provides the standard
 * form built over Ψ.
 */
inline FundamentalUnitary buildRightUnitary(const StandardForm& sf,
                                            double tol = kDefaultTol) {
  FundamentalUnitary f;
  f.a = sf.a;
  f.gG = sf.phiG;
  f.modA = sf.modA;
  f.modB = sf.modB;

  f.modHat = sf.modB;
  f.modHat.anti = false;
  f.modHat.act.clear();
  for (Eigen::Index j = 0; j < sf.a->N->algDim(); ++j)
    f.modHat.act.push_back(hatConjugate(
        sf.phiG, sf.phiG.pi(sf.a->betaOf(sf.a->N->basis[j].adjoint()))));
  if (!f.modHat.verify(1e-7))
    throw StructuralError("buildRightUnitary: hat leg does not act properly");

  f.src = relTensor(f.modHat, f.modB, tol);
  f.tgt = sf.rel;
  if (f.src.dim != f.tgt.dim)
    throw StructuralError("buildRightUnitary: leg spaces have different size");
  f.basis = moduleBasis(f.modA, tol);

  const auto& M = *sf.a->M;
  Eigen::Index g = sf.phiG.dim;
  Vec lambdaOne = sf.phiG.lambda(M.unit);
  Eigen::Index cols = g * M.algDim();
  Mat dom(f.src.dim, cols), img(f.tgt.dim, cols);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < g; ++i) {
    Vec v = Vec::Unit(g, i);
    for (Eigen::Index j = 0; j < M.algDim(); ++j, ++c) {
      dom.col(c) = f.src.embedVec(sf.phiG.lambda(M.basis[j]), v);
      Vec im = Vec::Zero(f.tgt.dim);
      for (const auto& eta : f.basis.vectors) {
        Mat slice = sliceRight(f.tgt, v, eta, sf.gammaDesc[j]);
        im += f.tgt.embedVec(slice * lambdaOne, eta);
      }
      img.col(c) = im;
    }
  }
  f.w = leastSquaresMat(dom.transpose(), img.transpose()).transpose();
  f.buildResidual = opNorm(f.w * dom - img) / std::max(1.0, opNorm(img));
  f.u = f.w.adjoint();
  return f;
}

// ------------------------------------------------------------ triple spaces

/*
 * Iterated relative tensor products used by the pentagon. A triple space is
 * an outer relative product whose inner factor is itself a quotient; `cc`
 * coordinatizes it over the ambient H⊗H⊗H, so operators and flips written
 * ambiently can be conjugated between any two of them.
 */
struct TripleSpace {
  RelTensorSpace outer;
  Mat cc, ccPinv;
  Eigen::Index dim = 0;
  double actResidual = 0;  // descent defect of the outer action on the block
};

namespace detail {

inline ModuleStructure blockModule(const RelTensorSpace& block,
                                   const ModuleStructure& proto,
                                   const std::vector<Mat>& acts, int leg,
                                   bool anti, double* resid) {
  ModuleStructure m = proto;
  m.dimH = block.dim;
  m.anti = anti;
  m.act.clear();
  Eigen::Index h = block.dimH, k = block.dimK;
  for (const auto& a : acts) {
    double r = 0;
    Mat ext = leg == 0 ? kron(a, eye(k)) : kron(eye(h), a);
    m.act.push_back(block.descend(ext, &r));
    *resid = std::max(*resid, r);
  }
  return m;
}

}  // namespace detail

// H ⊗ (block on legs 2,3); the outer right action acts on the given block leg
inline TripleSpace tripleRight(const RelTensorSpace& block,
                               const ModuleStructure& leftMod,
                               const std::vector<Mat>& acts, int leg,
                               bool anti, double tol = kDefaultTol) {
  TripleSpace t;
  ModuleStructure rightMod =
      detail::blockModule(block, leftMod, acts, leg, anti, &t.actResidual);
  t.outer = relTensor(leftMod, rightMod, tol);
  t.cc = t.outer.coord * kron(eye(leftMod.dimH), block.coord);
  t.ccPinv = kron(eye(leftMod.dimH), block.coordPinv) * t.outer.coordPinv;
  t.dim = t.outer.dim;
  return t;
}

// (block on legs 1,2) ⊗ H; the outer left bracket comes from the given leg
inline TripleSpace tripleLeft(const RelTensorSpace& block,
                              const ModuleStructure& rightMod,
                              const std::vector<Mat>& acts, int leg, bool anti,
                              double tol = kDefaultTol) {
  TripleSpace t;
  ModuleStructure leftMod =
      detail::blockModule(block, rightMod, acts, leg, anti, &t.actResidual);
  t.outer = relTensor(leftMod, rightMod, tol);
  t.cc = t.outer.coord * kron(block.coord, eye(rightMod.dimH));
  t.ccPinv = kron(block.coordPinv, eye(rightMod.dimH)) * t.outer.coordPinv;
  t.dim = t.outer.dim;
  return t;
}

// ambient operator conjugated into the coordinates of two triple spaces,
// with the kernel-leak defect of the conjugation
inline Mat tripleMap(const TripleSpace& from, const TripleSpace& to,
                     const Mat& ambient, double* leak) {
  Mat m = to.cc * ambient * from.ccPinv;
  if (leak) {
    Mat onSupp = m * from.cc;              // action on representatives
    *leak = opNorm(onSupp - to.cc * ambient);
  }
  return m;
}

/*
 * Pentagon for the left fundamental unitary,
 *
 *   (W⊗1)(σ⊗1)(1⊗W) σ₂ (1⊗σ)(1⊗W) = (1⊗W)(W⊗1) ,
 *
 * as matrices between seven triple products. Reading right to left, each
 * stage moves between explicitly constructed spaces; the sliding of the
 * outer base action from one leg to another is forced by the intertwining
 * relations of W, and every stage is checked to be unitary and to respect
 * the quotient kernels.
 */
inline std::vector<CheckResult> pentagonChecks(const FundamentalUnitary& f,
                                               double tol = kDefaultTol) {
  std::vector<CheckResult> out;
  Eigen::Index g = f.gG.dim;
  const Mat wa = f.wAmbient();
  const Mat swap = tensorFlip(g, g);
  const auto& alpha = f.modA.act;
  const auto& beta = f.modB.act;
  const auto& bhat = f.modHat.act;

  RelTensorSpace tba = f.src, tabh = f.tgt;
  RelTensorSpace tbha = relTensor(f.modHat, f.modA, tol);
  RelTensorSpace tab = relTensor(f.modA, f.modB, tol);

  // boundary spaces of the six-stage chain
  TripleSpace b0 = tripleRight(tba, f.modB, alpha, 0, false, tol);
  TripleSpace b1 = tripleRight(tabh, f.modB, alpha, 1, false, tol);
  TripleSpace b2 = tripleRight(tbha, f.modB, alpha, 0, false, tol);
  TripleSpace b3 = tripleRight(tba, f.modA, bhat, 1, true, tol);
  TripleSpace b4 = tripleRight(tabh, f.modA, beta, 0, true, tol);
  TripleSpace b5 = tripleLeft(tba, f.modHat, alpha, 0, false, tol);
  TripleSpace b6 = tripleLeft(tabh, f.modHat, alpha, 1, false, tol);
  // right-hand side intermediates
  TripleSpace r1 = tripleLeft(tabh, f.modA, beta, 1, true, tol);
  TripleSpace r2 = tripleRight(tabh, f.modA, bhat, 0, true, tol);

  double actRes = 0;
  for (const TripleSpace* t : {&b0, &b1, &b2, &b3, &b4, &b5, &b6, &r1, &r2})
    actRes = std::max(actRes, t->actResidual);
  addCheck(out, "outer actions descend to the blocks", actRes, 1e-6);

  Mat perm = kron(swap, eye(g)) * kron(eye(g), swap);  // leg 3 to the front

  struct Stage {
    const TripleSpace *from, *to;
    Mat ambient;
  };
  std::vector<Stage> stages = {
      {&b0, &b1, kron(eye(g), wa)},   {&b1, &b2, kron(eye(g), swap)},
      {&b2, &b3, perm},               {&b3, &b4, kron(eye(g), wa)},
      {&b4, &b5, kron(swap, eye(g))}, {&b5, &b6, kron(wa, eye(g))},
  };
  double leakRes = 0, uniRes = 0;
  Mat lhs = eye(b0.dim);
  for (const auto& s : stages) {
    double leak = 0;
    Mat m = tripleMap(*s.from, *s.to, s.ambient, &leak);
    leakRes = std::max(leakRes, leak);
    uniRes = std::max({uniRes, opNorm(m.adjoint() * m - eye(s.from->dim)),
                       opNorm(m * m.adjoint() - eye(s.to->dim))});
    lhs = (m * lhs).eval();
  }

  double leak1 = 0, leak2 = 0;
  Mat n1 = tripleMap(b0, r1, kron(wa, eye(g)), &leak1);
  Mat n2 = tripleMap(r1, r2, kron(eye(g), wa), &leak2);
  leakRes = std::max({leakRes, leak1, leak2});
  for (const Mat& m : {n1, n2})
    uniRes = std::max({uniRes, opNorm(m.adjoint() * m - eye(b0.dim)),
                       opNorm(m * m.adjoint() - eye(b0.dim))});
  addCheck(out, "pentagon stages preserve the kernels", leakRes, 1e-6);
  addCheck(out, "pentagon stages unitary", uniRes, std::sqrt(tol));

  double idLeak = 0;
  Mat ident = tripleMap(r2, b6, eye(g * g * g), &idLeak);
  uniRes = std::max({opNorm(ident.adjoint() * ident - eye(r2.dim)),
                     opNorm(ident * ident.adjoint() - eye(b6.dim)), idLeak});
  addCheck(out, "final space identification unitary", uniRes, std::sqrt(tol));

  addCheck(out, "pentagon identity", opNorm(lhs - ident * n2 * n1),
           std::sqrt(tol));
  return out;
}

// ------------------------------------------------------------------ slices

// (ω_{v,w} * id)(U) = (λ_w^src)* U λ_v^tgt, an operator on H
inline Mat sliceOfU(const FundamentalUnitary& f, const Vec& v, const Vec& w) {
  return f.src.lambdaOp(w).adjoint() * f.u * f.tgt.lambdaOp(v);
}

// (id * ω_{v,w})(W) = (ρ_w^tgt)* W ρ_v^src, an operator on H
inline Mat sliceOfW(const FundamentalUnitary& f, const Vec& v, const Vec& w) {
  return f.tgt.rhoOp(w).adjoint() * f.w * f.src.rhoOp(v);
}

/*
 * Structural checks tying W to the coproduct:
 *  - unitarity and the defining least-squares consistency;
 *  - Γ(m) = W*(1⊗m)W;
 *  - W commutes with x⊗1 for x in the commutant of π(M);
 *  - the four base-leg intertwining relations;
 *  - the slice relation (ω_{v,w}*id)(U) Λ(a) = Λ((ω_{v,w}⋆id)Γ(a)).
 */
inline std::vector<CheckResult> verifyFunit(const FundamentalUnitary& f,
                                            const StandardForm& sf,
                                            double tol = kDefaultTol) {
  std::vector<CheckResult> out;
  Eigen::Index g = f.gG.dim;
  auto scaleTol = [&](double t) { return t * std::max<double>(1.0, g); };
  const auto& M = *f.a->M;

  addCheck(out, "fundamental unitary spanning consistency", f.buildResidual,
           scaleTol(tol));
  addCheck(out, "fundamental unitary unitary",
           std::max(opNorm(f.w.adjoint() * f.w - eye(f.src.dim)),
                    opNorm(f.w * f.w.adjoint() - eye(f.tgt.dim))),
           scaleTol(tol));

  double gamRes = 0;
  for (Eigen::Index j = 0; j < M.algDim(); ++j) {
    double r = 0;
    Mat oneM = f.tgt.descend(kron(eye(g), f.gG.pi(M.basis[j])), &r);
    gamRes = std::max(
        {gamRes, r, opNorm(f.w.adjoint() * oneM * f.w - sf.gammaDesc[j])});
  }
  addCheck(out, "coproduct from the fundamental unitary", gamRes,
           scaleTol(tol));

  std::vector<Mat> piGens;
  for (const auto& b : M.basis) piGens.push_back(f.gG.pi(b));
  auto piM = buildAlgebra(piGens, g, tol);
  auto comm = commutant(piM, g, tol);
  double commRes = 0;
  for (const auto& x : comm.basis) {
    double r1 = 0, r2 = 0;
    Mat lhs = f.w * f.src.descend(kron(x, eye(g)), &r1);
    Mat rhs = f.tgt.descend(kron(x, eye(g)), &r2) * f.w;
    commRes = std::max({commRes, r1, r2, opNorm(lhs - rhs)});
  }
  addCheck(out, "first leg commutant passes through", commRes, scaleTol(tol));

  double baseRes = 0;
  for (Eigen::Index i = 0; i < f.a->N->algDim(); ++i)
    for (Eigen::Index j = 0; j < f.a->N->algDim(); ++j) {
      const Mat &an = f.modA.act[i], &bn = f.modB.act[j],
                &hn = f.modHat.act[j];
      double r = 0;
      Mat lhs1 = f.tgt.descend(kron(bn, an), &r) * f.w;
      baseRes = std::max(baseRes, r);
      Mat rhs1 = f.w * f.src.descend(kron(an, hn), &r);
      baseRes = std::max({baseRes, r, opNorm(lhs1 - rhs1)});
      const Mat& hi = f.modHat.act[i];
      Mat lhs2 = f.tgt.descend(kron(hi, bn), &r) * f.w;
      baseRes = std::max(baseRes, r);
      Mat rhs2 = f.w * f.src.descend(kron(hi, bn), &r);
      baseRes = std::max({baseRes, r, opNorm(lhs2 - rhs2)});
    }
  addCheck(out, "base leg intertwining", baseRes, scaleTol(tol));

  Vec lambdaOne = f.gG.lambda(M.unit);
  double slRes = 0;
  for (Eigen::Index i = 0; i < g; ++i)
    for (Eigen::Index j = 0; j < g; ++j) {
      Vec v = Vec::Unit(g, i), wv = Vec::Unit(g, j);
      Mat op = sliceOfU(f, v, wv);
      for (Eigen::Index k = 0; k < M.algDim(); ++k) {
        Vec got = op * f.gG.lambda(M.basis[k]);
        Vec want = sliceLeft(sf.rel, v, wv, sf.gammaDesc[k]) * lambdaOne;
        slRes = std::max(slRes, (got - want).norm());
      }
    }
  addCheck(out, "slice relation with the coproduct", slRes, scaleTol(tol));
  return out;
}

/*
 * Weak regularity: the operators (λ_v)* σW*σ ρ_w span the commutant of the
 * α-leg. σW*σ is computed through the flips of the two leg spaces.
 */
inline CheckResult weakRegularityCheck(const FundamentalUnitary& f,
                                       double tol = kDefaultTol) {
  RelTensorSpace tbha = relTensor(f.modHat, f.modA, tol);
  RelTensorSpace tab = relTensor(f.modA, f.modB, tol);
  Mat wHat = flipUnitary(f.src, tab) * f.u * flipUnitary(tbha, f.tgt);
  Eigen::Index g = f.gG.dim;
  std::vector<Mat> ops;
  for (Eigen::Index i = 0; i < g; ++i)
    for (Eigen::Index j = 0; j < g; ++j)
      ops.push_back(tab.lambdaOp(Vec::Unit(g, i)).adjoint() * wHat *
                    tbha.rhoOp(Vec::Unit(g, j)));
  auto alphaAlg = algebraFromSpan(
      std::vector<Mat>(f.modA.act.begin(), f.modA.act.end()), g, tol);
  auto alphaComm = commutant(alphaAlg, g, tol);
  bool same = sameSpan(ops, alphaComm.basis, tol);
  CheckResult c;
  c.name = "weak regularity";
  c.residual = same ? 0.0 : 1.0;
  c.tolerance = 0.5;
  c.pass = same;
  return c;
}

/*
 * Manageability data supplied by the caller: a positive operator P on H and
 * an antilinear involution I on H. Checked are the commutation of W with
 * P^{it} ⊗ Δ^{it} on the grid and the antilinear exchange
 * (I ⊗ J) U* = U (I ⊗ J) read through the ambient coordinates.
 */
inline std::vector<CheckResult> manageabilityCheck(const FundamentalUnitary& f,
                                                   const Mat& p,
                                                   const AntilinearOp& anti,
                                                   double tol = kDefaultTol) {
  std::vector<CheckResult> out;
  Eigen::Index g = f.gG.dim;
  auto scaleTol = [&](double t) { return t * std::max<double>(1.0, g); };
  double comRes = 0;
  for (double t : tGrid()) {
    Mat pt = opPower(p, cd(0, t));
    Mat dt = f.gG.deltaPow(cd(0, t));
    double r1 = 0, r2 = 0;
    Mat lhs = f.w * f.src.descend(kron(pt, dt), &r1);
    Mat rhs = f.tgt.descend(kron(pt, dt), &r2) * f.w;
    comRes = std::max({comRes, r1, r2, opNorm(lhs - rhs)});
  }
  addCheck(out, "manageability grid commutation", comRes, scaleTol(tol));

  // ambient antilinear exchange: (I⊗J) U* = U (I⊗J) between the leg spaces
  Mat ij = kron(anti.mat, f.gG.J.mat);
  Mat uAmb = f.src.coordPinv * f.u * f.tgt.coord;
  Mat lhs = ij * uAmb.transpose();           // (I⊗J) ∘ U* as antilinear parts
  Mat rhs = uAmb * ij;
  Mat proj = f.tgt.coordPinv * f.tgt.coord;  // support of the target metric
  addCheck(out, "manageability antilinear exchange",
           opNorm((lhs - rhs) * proj), scaleTol(std::sqrt(tol)));
  return out;
}

}  // namespace mqg
