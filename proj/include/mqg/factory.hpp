#pragma once

/*
 * factory.hpp — constructors producing concrete structures for the whole
 * suite: finite groupoids and their function algebras, the pairs and
 * quantum-space structures attached to a von Neumann algebra with a state,
 * and the closure operations (direct sum, tensor product, opposite,
 * commutant, transport along an iso or anti-iso).
 *
 * Every constructor returns an Amqg ready for buildMqg; the verification
 * battery is expected to pass on each output and the tests exercise that.
 */

#include "duality.hpp"

#include <functional>

namespace mqg {

// ------------------------------------------------------- finite groupoids

/*
 * A finite groupoid: objects 0..nObjects-1, morphisms 0..nMorphisms-1 with
 * source/range maps, a partial composition comp(a,b) defined exactly when
 * src[a] == rng[b] (convention: (ab) means a after b, so src(ab) = src(b),
 * rng(ab) = rng(a)), inverses, unit morphisms, and a strictly positive
 * measure on the objects.
 */
struct FiniteGroupoid {
  int nObjects = 0;
  int nMorphisms = 0;
  std::vector<int> src, rng;    // per morphism
  std::vector<int> inv;         // per morphism
  std::vector<int> unitAt;      // per object
  std::vector<int> comp;        // comp[a*nMorphisms+b], -1 if not composable
  std::vector<double> mu;       // per object, strictly positive

  int composeIdx(int a, int b) const { return comp[a * nMorphisms + b]; }

  void validate() const {
    auto fail = [](const std::string& s) { throw StructuralError("groupoid: " + s); };
    if (static_cast<int>(src.size()) != nMorphisms ||
        static_cast<int>(rng.size()) != nMorphisms ||
        static_cast<int>(inv.size()) != nMorphisms ||
        static_cast<int>(unitAt.size()) != nObjects ||
        static_cast<int>(comp.size()) != nMorphisms * nMorphisms ||
        static_cast<int>(mu.size()) != nObjects)
      fail("inconsistent table sizes");
    for (double w : mu)
      if (!(w > 0)) fail("measure must be strictly positive");
    for (int o = 0; o < nObjects; ++o) {
      int e = unitAt[o];
      if (src[e] != o || rng[e] != o) fail("unit morphism has wrong endpoints");
    }
    for (int a = 0; a < nMorphisms; ++a) {
      for (int b = 0; b < nMorphisms; ++b) {
        int ab = composeIdx(a, b);
        if ((src[a] == rng[b]) != (ab >= 0)) fail("composability table mismatch");
        if (ab >= 0 && (src[ab] != src[b] || rng[ab] != rng[a]))
          fail("composition has wrong endpoints");
      }
      if (composeIdx(a, unitAt[src[a]]) != a || composeIdx(unitAt[rng[a]], a) != a)
        fail("unit laws fail");
      int ia = inv[a];
      if (src[ia] != rng[a] || rng[ia] != src[a]) fail("inverse has wrong endpoints");
      if (composeIdx(a, ia) != unitAt[rng[a]] || composeIdx(ia, a) != unitAt[src[a]])
        fail("inverse laws fail");
    }
    for (int a = 0; a < nMorphisms; ++a)
      for (int b = 0; b < nMorphisms; ++b)
        for (int c = 0; c < nMorphisms; ++c) {
          if (src[a] != rng[b] || src[b] != rng[c]) continue;
          if (composeIdx(composeIdx(a, b), c) != composeIdx(a, composeIdx(b, c)))
            fail("associativity fails");
        }
  }
};

inline FiniteGroupoid onePointGroupoid() {
  FiniteGroupoid g;
  g.nObjects = 1;
  g.nMorphisms = 1;
  g.src = {0};
  g.rng = {0};
  g.inv = {0};
  g.unitAt = {0};
  g.comp = {0};
  g.mu = {1.0};
  g.validate();
  return g;
}

// pair groupoid on `pts` points: morphisms (i,j) : j → i, (i,j)(j,k) = (i,k)
inline FiniteGroupoid pairGroupoid(int pts, std::vector<double> mu = {}) {
  FiniteGroupoid g;
  g.nObjects = pts;
  g.nMorphisms = pts * pts;
  if (mu.empty()) mu.assign(pts, 1.0 / pts);
  g.mu = std::move(mu);
  auto idx = [pts](int i, int j) { return i * pts + j; };
  g.src.resize(g.nMorphisms);
  g.rng.resize(g.nMorphisms);
  g.inv.resize(g.nMorphisms);
  g.comp.assign(g.nMorphisms * g.nMorphisms, -1);
  g.unitAt.resize(pts);
  for (int i = 0; i < pts; ++i) {
    g.unitAt[i] = idx(i, i);
    for (int j = 0; j < pts; ++j) {
      g.rng[idx(i, j)] = i;
      g.src[idx(i, j)] = j;
      g.inv[idx(i, j)] = idx(j, i);
      for (int k = 0; k < pts; ++k)
        g.comp[idx(i, j) * g.nMorphisms + idx(j, k)] = idx(i, k);
    }
  }
  g.validate();
  return g;
}

// one-object groupoid from a group multiplication table
inline FiniteGroupoid groupGroupoid(int n,
                                    const std::function<int(int, int)>& mul,
                                    const std::function<int(int)>& invOf,
                                    int identity) {
  FiniteGroupoid g;
  g.nObjects = 1;
  g.nMorphisms = n;
  g.src.assign(n, 0);
  g.rng.assign(n, 0);
  g.unitAt = {identity};
  g.mu = {1.0};
  g.inv.resize(n);
  g.comp.resize(n * n);
  for (int a = 0; a < n; ++a) {
    g.inv[a] = invOf(a);
    for (int b = 0; b < n; ++b) g.comp[a * n + b] = mul(a, b);
  }
  g.validate();
  return g;
}

/*
 * Function-algebra structure of a finite groupoid: M = functions on the
 * morphisms (diagonal matrices), base N = functions on the objects,
 * α = pullback along the range map, β = pullback along the source map,
 * Γ(f)(a,b) = f(ab) on composable pairs, T_L summing over range fibers and
 * T_R over source fibers (counting measure on each fiber).
 */
inline std::shared_ptr<Amqg> fromFiniteGroupoid(const FiniteGroupoid& G,
                                                double tol = kDefaultTol) {
  G.validate();
  const int nO = G.nObjects, nM = G.nMorphisms;
  auto a = std::make_shared<Amqg>();

  auto diagUnit = [](int n, int i) {
    Mat e = Mat::Zero(n, n);
    e(i, i) = 1.0;
    return e;
  };
  std::vector<Mat> nSpan, mSpan;
  for (int o = 0; o < nO; ++o) nSpan.push_back(diagUnit(nO, o));
  for (int x = 0; x < nM; ++x) mSpan.push_back(diagUnit(nM, x));
  a->N = std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(nSpan, nO, tol));
  a->M = std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(mSpan, nM, tol));

  Mat rhoNu = Mat::Zero(nO, nO), rhoPhi = Mat::Zero(nM, nM),
      rhoPsi = Mat::Zero(nM, nM);
  for (int o = 0; o < nO; ++o) rhoNu(o, o) = G.mu[o];
  for (int x = 0; x < nM; ++x) {
    rhoPhi(x, x) = G.mu[G.rng[x]];
    rhoPsi(x, x) = G.mu[G.src[x]];
  }
  a->nu = StateOnAlgebra{a->N.get(), rhoNu};
  a->nuG = std::make_shared<GnsData>(gns(*a->N, a->nu, tol));

  for (const auto& z : a->N->basis) {
    Mat al = Mat::Zero(nM, nM), be = Mat::Zero(nM, nM);
    for (int x = 0; x < nM; ++x) {
      al(x, x) = z(G.rng[x], G.rng[x]);
      be(x, x) = z(G.src[x], G.src[x]);
    }
    a->alphaB.push_back(al);
    a->betaB.push_back(be);
  }

  for (const auto& f : a->M->basis) {
    Mat lift = Mat::Zero(nM * nM, nM * nM);
    for (int p = 0; p < nM; ++p)
      for (int q = 0; q < nM; ++q) {
        int pq = G.composeIdx(p, q);
        if (pq >= 0) lift += f(pq, pq) * kron(mSpan[p], mSpan[q]);
      }
    a->gammaLift.push_back(lift);
  }

  a->TL = CpMap::fromFunction(nM, nM, [&G, nM](const Mat& x) {
    Mat out = Mat::Zero(nM, nM);
    for (int y = 0; y < nM; ++y)
      for (int z = 0; z < nM; ++z)
        if (G.rng[z] == G.rng[y]) out(y, y) += x(z, z);
    return out;
  });
  a->TR = CpMap::fromFunction(nM, nM, [&G, nM](const Mat& x) {
    Mat out = Mat::Zero(nM, nM);
    for (int y = 0; y < nM; ++y)
      for (int z = 0; z < nM; ++z)
        if (G.src[z] == G.src[y]) out(y, y) += x(z, z);
    return out;
  });
  a->Phi = StateOnAlgebra{a->M.get(), rhoPhi};
  a->Psi = StateOnAlgebra{a->M.get(), rhoPsi};
  return a;
}

// the two structures attached to a groupoid: the commutative one and its
// symmetric partner, the convolution algebra obtained through duality
struct GroupoidPair {
  std::shared_ptr<Amqg> functions;
  std::shared_ptr<Amqg> convolution;
};

inline GroupoidPair groupoidStructures(const FiniteGroupoid& G,
                                       double tol = kDefaultTol) {
  GroupoidPair out;
  out.functions = fromFiniteGroupoid(G, tol);
  auto m = buildMqg(out.functions, tol);
  out.convolution = dualize(m, tol).dual;
  return out;
}

/*
 * Translation operators of the groupoid on the GNS space of Φ: for a
 * morphism a, e_b ↦ e_{ab} on composable b. For the uniform measure these
 * span the convolution algebra, which is the independent oracle for the
 * symmetric partner produced by duality.
 */
inline std::vector<Mat> groupoidTranslations(const FiniteGroupoid& G,
                                             const GnsData& phiG) {
  std::vector<Mat> out;
  const int nM = G.nMorphisms;
  for (int m = 0; m < nM; ++m) {
    out.push_back(phiG.onGns([&G, m, nM](const Mat& f) {
      Mat g = Mat::Zero(nM, nM);
      for (int y = 0; y < nM; ++y) {
        if (G.rng[y] != G.rng[m]) continue;
        int z = G.composeIdx(G.inv[m], y);
        if (z >= 0) g(y, y) = f(z, z);
      }
      return g;
    }));
  }
  return out;
}

// -------------------------------------------------------- common helpers

namespace detail {

// j(x) = J x* J, the canonical linear *-anti-automorphism of B(H_φ)
inline Mat modularConj(const GnsData& g, const Mat& x) {
  return g.J.mat * x.transpose() * g.J.mat.conjugate();
}

// linear extension of a map given on a (possibly dependent) spanning family
struct FamilyMap {
  Mat famStack;             // columns: vectorized family members
  std::vector<Mat> images;  // image of each member

  Mat apply(const Mat& x, double* residual = nullptr) const {
    Vec c = leastSquares(famStack, vecm(x));
    if (residual) *residual = (famStack * c - vecm(x)).norm();
    Mat out = Mat::Zero(images[0].rows(), images[0].cols());
    for (size_t l = 0; l < images.size(); ++l)
      out += c(static_cast<Eigen::Index>(l)) * images[l];
    return out;
  }
};

}  // namespace detail

// --------------------------------------------------------- pairs structure

/*
 * Pairs structure of (M, ν): the algebra M′⊗M on L²(M)⊗L²(M) over the base
 * M, with α(m) = 1⊗m, β(m) = j(m)⊗1, coproduct n⊗m ↦ [1⊗m]⊗[n⊗1], and the
 * invariant weights T_L = ν′⊗id, T_R = id⊗ν. The induced weight Φ = ν′⊗ν
 * coincides with Ψ, so the modulus and scaling element are trivial.
 */
inline std::shared_ptr<Amqg> pairsQg(std::shared_ptr<MultiMatrixAlgebra> base,
                                     const Mat& nuRho,
                                     double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  a->N = base;
  a->nu = StateOnAlgebra{base.get(), nuRho};
  a->nuG = std::make_shared<GnsData>(gns(*base, a->nu, tol));
  const GnsData& g0 = *a->nuG;
  const Eigen::Index h = g0.dim;

  std::vector<Mat> piGens;
  for (const auto& b : base->basis) piGens.push_back(g0.pi(b));
  auto piM = algebraFromSpan(piGens, h, tol);
  auto Mp = commutant(piM, h, tol);

  // pull an operator of π(M) back to the abstract algebra
  Mat piStack(h * h, base->algDim());
  for (Eigen::Index j = 0; j < base->algDim(); ++j)
    piStack.col(j) = vecm(g0.pi(base->basis[j]));
  auto piInv = [&](const Mat& y) {
    Vec c = leastSquares(piStack, vecm(y));
    if ((piStack * c - vecm(y)).norm() > 1e-7 * std::max(1.0, frobNorm(y)))
      throw StructuralError("pairsQg: operator is not in pi(M)");
    return base->fromCoeffs(c);
  };
  // ν′ = ν∘j on the commutant
  auto nuPrime = [&](const Mat& n) {
    return a->nu.eval(piInv(detail::modularConj(g0, n)));
  };

  std::vector<Mat> bigSpan;
  detail::FamilyMap gammaMap, tlMap, trMap;
  Vec phiVals;
  const Eigen::Index dP = Mp.algDim(), dM = base->algDim();
  gammaMap.famStack.resize(h * h * h * h, dP * dM);
  std::vector<cd> phiFam;
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < dP; ++i)
    for (Eigen::Index j = 0; j < dM; ++j) {
      Mat nb = Mp.basis[i], mb = g0.pi(base->basis[j]);
      Mat fam = kron(nb, mb);
      bigSpan.push_back(fam);
      gammaMap.famStack.col(col) = vecm(fam);
      gammaMap.images.push_back(
          kron(kron(eye(h), mb), kron(nb, eye(h))));
      tlMap.images.push_back(nuPrime(nb) * kron(eye(h), mb));
      trMap.images.push_back(a->nu.eval(base->basis[j]) * kron(nb, eye(h)));
      phiFam.push_back(nuPrime(nb) * a->nu.eval(base->basis[j]));
      ++col;
    }
  tlMap.famStack = gammaMap.famStack;
  trMap.famStack = gammaMap.famStack;

  a->M = std::make_shared<MultiMatrixAlgebra>(
      algebraFromSpan(bigSpan, h * h, tol));

  for (const auto& nb : base->basis) {
    a->alphaB.push_back(kron(eye(h), g0.pi(nb)));
    a->betaB.push_back(kron(detail::modularConj(g0, g0.pi(nb)), eye(h)));
  }

  phiVals.resize(a->M->algDim());
  for (Eigen::Index k = 0; k < a->M->algDim(); ++k) {
    double res = 0;
    Vec c = leastSquares(gammaMap.famStack, vecm(a->M->basis[k]));
    res = (gammaMap.famStack * c - vecm(a->M->basis[k])).norm();
    if (res > 1e-7)
      throw StructuralError("pairsQg: basis element outside the pair span");
    a->gammaLift.push_back(gammaMap.apply(a->M->basis[k]));
    cd v = 0;
    for (size_t l = 0; l < phiFam.size(); ++l)
      v += c(static_cast<Eigen::Index>(l)) * phiFam[l];
    phiVals(k) = v;
  }

  const auto* bigPtr = a->M.get();
  auto tlm = tlMap, trm = trMap;  // captured copies keep the maps alive
  a->TL = CpMap::fromFunction(h * h, h * h, [bigPtr, tlm](const Mat& x) {
    return tlm.apply(bigPtr->project(x));
  });
  a->TR = CpMap::fromFunction(h * h, h * h, [bigPtr, trm](const Mat& x) {
    return trm.apply(bigPtr->project(x));
  });
  a->Phi = stateFromFunctional(*a->M, phiVals);
  a->Psi = a->Phi;
  return a;
}

// --------------------------------------------------- quantum-space structure

/*
 * Quantum-space structure of (M, tr, ν): the algebra M′⊗M amalgamated over
 * the center, acting on L²(M) ⊗_tr L²(M), with the same leg maps and
 * coproduct shape as the pairs structure. tr is a faithful trace on Z(M)
 * given by one weight per minimal central projection; T : M → Z(M) is the
 * unique central expectation with ν = tr∘T, and T_R = id ⋆ T.
 */
inline std::shared_ptr<Amqg> quantumSpaceQg(
    std::shared_ptr<MultiMatrixAlgebra> base, const Mat& nuRho,
    std::vector<double> trWeights = {}, double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  a->N = base;
  a->nu = StateOnAlgebra{base.get(), nuRho};
  a->nuG = std::make_shared<GnsData>(gns(*base, a->nu, tol));
  const GnsData& g0 = *a->nuG;
  const Eigen::Index h = g0.dim;
  const size_t nZ = base->centralProjs.size();
  if (trWeights.empty()) trWeights.assign(nZ, 1.0);
  if (trWeights.size() != nZ)
    throw StructuralError("quantumSpaceQg: one trace weight per central block");

  std::vector<Mat> piGens;
  for (const auto& b : base->basis) piGens.push_back(g0.pi(b));
  auto piM = algebraFromSpan(piGens, h, tol);
  auto Mp = commutant(piM, h, tol);

  Mat piStack(h * h, base->algDim());
  for (Eigen::Index j = 0; j < base->algDim(); ++j)
    piStack.col(j) = vecm(g0.pi(base->basis[j]));
  auto piInv = [&](const Mat& y) {
    Vec c = leastSquares(piStack, vecm(y));
    if ((piStack * c - vecm(y)).norm() > 1e-7 * std::max(1.0, frobNorm(y)))
      throw StructuralError("quantumSpaceQg: operator is not in pi(M)");
    return base->fromCoeffs(c);
  };

  // T(m) = Σ_k ν(z_k m)/tr(z_k) · z_k, the central expectation with ν = tr∘T
  auto centralT = [&](const Mat& m) {
    Mat out = Mat::Zero(base->carrierDim, base->carrierDim);
    for (size_t k = 0; k < nZ; ++k)
      out += a->nu.eval(base->centralProjs[k] * m) / trWeights[k] *
             base->centralProjs[k];
    return out;
  };

  // the relative tensor square of L²(M) over (Z(M), tr)
  auto zShared = std::make_shared<MultiMatrixAlgebra>([&] {
    std::vector<Mat> zSpan;
    for (const auto& z : base->centralProjs) zSpan.push_back(g0.pi(z));
    return algebraFromSpan(zSpan, h, tol);
  }());
  Vec trVals(zShared->algDim());
  Mat zStack(h * h, static_cast<Eigen::Index>(nZ));
  for (size_t k = 0; k < nZ; ++k) zStack.col(static_cast<Eigen::Index>(k)) =
      vecm(g0.pi(base->centralProjs[k]));
  for (Eigen::Index j = 0; j < zShared->algDim(); ++j) {
    Vec c = leastSquares(zStack, vecm(zShared->basis[j]));
    cd v = 0;
    for (size_t k = 0; k < nZ; ++k)
      v += c(static_cast<Eigen::Index>(k)) * trWeights[k];
    trVals(j) = v;
  }
  auto trState = stateFromFunctional(*zShared, trVals);
  auto trGns = std::make_shared<GnsData>(gns(*zShared, trState, tol));

  ModuleStructure modL, modR;
  modL.N = zShared.get();
  modL.dimH = h;
  modL.anti = true;
  modL.nu = trState;
  modL.nuGns = trGns.get();
  modR = modL;
  modR.anti = false;
  for (const auto& zb : zShared->basis) {
    modL.act.push_back(zb);
    modR.act.push_back(zb);
  }
  if (!modL.verify(1e-7) || !modR.verify(1e-7))
    throw StructuralError("quantumSpaceQg: center does not act properly");
  auto sq = relTensor(modL, modR, tol);

  std::vector<Mat> bigSpan;
  detail::FamilyMap gammaMap, trMap, rMap;
  const Eigen::Index dP = Mp.algDim(), dM = base->algDim();
  const Eigen::Index k2 = sq.dim;
  gammaMap.famStack.resize(k2 * k2, dP * dM);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < dP; ++i)
    for (Eigen::Index j = 0; j < dM; ++j) {
      Mat nb = Mp.basis[i], mb = g0.pi(base->basis[j]);
      double r1 = 0, r2 = 0, r3 = 0, r4 = 0, r5 = 0;
      Mat fam = sq.descend(kron(nb, mb), &r1);
      Mat aleg = sq.descend(kron(eye(h), mb), &r2);
      Mat bleg = sq.descend(kron(nb, eye(h)), &r3);
      Mat trImg = sq.descend(kron(nb, g0.pi(centralT(base->basis[j]))), &r4);
      Mat rImg = sq.descend(kron(detail::modularConj(g0, mb),
                                 detail::modularConj(g0, nb)), &r5);
      if (std::max({r1, r2, r3, r4, r5}) > 1e-6)
        throw StructuralError("quantumSpaceQg: pair operator does not descend");
      bigSpan.push_back(fam);
      gammaMap.famStack.col(col) = vecm(fam);
      gammaMap.images.push_back(kron(aleg, bleg));
      trMap.images.push_back(trImg);
      rMap.images.push_back(rImg);
      ++col;
    }
  trMap.famStack = gammaMap.famStack;
  rMap.famStack = gammaMap.famStack;

  a->M = std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(bigSpan, k2, tol));

  for (const auto& nb : base->basis) {
    double r1 = 0, r2 = 0;
    a->alphaB.push_back(sq.descend(kron(eye(h), g0.pi(nb)), &r1));
    a->betaB.push_back(
        sq.descend(kron(detail::modularConj(g0, g0.pi(nb)), eye(h)), &r2));
    if (std::max(r1, r2) > 1e-6)
      throw StructuralError("quantumSpaceQg: leg maps do not descend");
  }

  for (Eigen::Index k = 0; k < a->M->algDim(); ++k) {
    double res = 0;
    Mat lift = gammaMap.apply(a->M->basis[k], &res);
    if (res > 1e-7)
      throw StructuralError("quantumSpaceQg: basis element outside the span");
    a->gammaLift.push_back(lift);
  }

  const auto* bigPtr = a->M.get();
  auto trm = trMap, rm = rMap;
  a->TR = CpMap::fromFunction(k2, k2, [bigPtr, trm](const Mat& x) {
    return trm.apply(bigPtr->project(x));
  });
  auto rOf = [bigPtr, rm](const Mat& x) {
    return rm.apply(bigPtr->project(x));
  };
  CpMap trCopy = a->TR;
  a->TL = CpMap::fromFunction(k2, k2, [rOf, trCopy](const Mat& x) {
    return rOf(trCopy.apply(rOf(x)));
  });

  // Φ = ν∘α⁻¹∘T_L and Ψ = ν∘β⁻¹∘T_R, solved through the leg stacks
  Mat aStack(k2 * k2, base->algDim()), bStack(k2 * k2, base->algDim());
  for (Eigen::Index j = 0; j < base->algDim(); ++j) {
    aStack.col(j) = vecm(a->alphaB[j]);
    bStack.col(j) = vecm(a->betaB[j]);
  }
  Vec phiVals(a->M->algDim()), psiVals(a->M->algDim());
  for (Eigen::Index k = 0; k < a->M->algDim(); ++k) {
    Mat tl = a->TL.apply(a->M->basis[k]);
    Mat tr2 = a->TR.apply(a->M->basis[k]);
    Vec ca = leastSquares(aStack, vecm(tl));
    Vec cb = leastSquares(bStack, vecm(tr2));
    if ((aStack * ca - vecm(tl)).norm() > 1e-6 ||
        (bStack * cb - vecm(tr2)).norm() > 1e-6)
      throw StructuralError("quantumSpaceQg: weights do not land in the legs");
    phiVals(k) = a->nu.eval(base->fromCoeffs(ca));
    psiVals(k) = a->nu.eval(base->fromCoeffs(cb));
  }
  a->Phi = stateFromFunctional(*a->M, phiVals);
  a->Psi = stateFromFunctional(*a->M, psiVals);
  return a;
}

// ------------------------------------------------------------- direct sum

inline std::shared_ptr<Amqg> directSum(const Amqg& a1, const Amqg& a2,
                                       double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  const Eigen::Index n1 = a1.N->carrierDim, n2 = a2.N->carrierDim;
  const Eigen::Index c1 = a1.M->carrierDim, c2 = a2.M->carrierDim;

  auto embed = [](const Mat& x, Eigen::Index total, Eigen::Index at) {
    Mat out = Mat::Zero(total, total);
    out.block(at, at, x.rows(), x.cols()) = x;
    return out;
  };

  std::vector<Mat> nSpan, mSpan;
  for (const auto& b : a1.N->basis) nSpan.push_back(embed(b, n1 + n2, 0));
  for (const auto& b : a2.N->basis) nSpan.push_back(embed(b, n1 + n2, n1));
  for (const auto& b : a1.M->basis) mSpan.push_back(embed(b, c1 + c2, 0));
  for (const auto& b : a2.M->basis) mSpan.push_back(embed(b, c1 + c2, c1));
  a->N = std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(nSpan, n1 + n2, tol));
  a->M = std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(mSpan, c1 + c2, tol));

  Mat rhoNu = Mat::Zero(n1 + n2, n1 + n2);
  rhoNu.topLeftCorner(n1, n1) = a1.nu.rho;
  rhoNu.bottomRightCorner(n2, n2) = a2.nu.rho;
  a->nu = StateOnAlgebra{a->N.get(), rhoNu};
  a->nuG = std::make_shared<GnsData>(gns(*a->N, a->nu, tol));

  auto blocksOfN = [&](const Mat& z) {
    return std::make_pair(Mat(z.topLeftCorner(n1, n1)),
                          Mat(z.bottomRightCorner(n2, n2)));
  };
  for (const auto& z : a->N->basis) {
    auto [z1, z2] = blocksOfN(z);
    Mat al = Mat::Zero(c1 + c2, c1 + c2), be = al;
    al.topLeftCorner(c1, c1) = a1.alphaOf(z1);
    al.bottomRightCorner(c2, c2) = a2.alphaOf(z2);
    be.topLeftCorner(c1, c1) = a1.betaOf(z1);
    be.bottomRightCorner(c2, c2) = a2.betaOf(z2);
    a->alphaB.push_back(al);
    a->betaB.push_back(be);
  }

  // embedding of carrier_i ⊗ carrier_i into the square of the summed carrier
  const Eigen::Index c = c1 + c2;
  Mat e1 = Mat::Zero(c, c1), e2 = Mat::Zero(c, c2);
  e1.topRows(c1) = eye(c1);
  e2.bottomRows(c2) = eye(c2);
  Mat ee1 = kron(e1, e1), ee2 = kron(e2, e2);
  for (const auto& x : a->M->basis) {
    Mat x1 = x.topLeftCorner(c1, c1), x2 = x.bottomRightCorner(c2, c2);
    a->gammaLift.push_back(ee1 * a1.gammaLiftOf(x1) * ee1.adjoint() +
                           ee2 * a2.gammaLiftOf(x2) * ee2.adjoint());
  }

  auto blockCp = [&](const CpMap& t1, const CpMap& t2) {
    return CpMap::fromFunction(c, c, [=](const Mat& x) {
      Mat out = Mat::Zero(c, c);
      out.topLeftCorner(c1, c1) = t1.apply(x.topLeftCorner(c1, c1));
      out.bottomRightCorner(c2, c2) = t2.apply(x.bottomRightCorner(c2, c2));
      return out;
    });
  };
  a->TL = blockCp(a1.TL, a2.TL);
  a->TR = blockCp(a1.TR, a2.TR);

  Mat rhoPhi = Mat::Zero(c, c), rhoPsi = Mat::Zero(c, c);
  rhoPhi.topLeftCorner(c1, c1) = a1.Phi.rho;
  rhoPhi.bottomRightCorner(c2, c2) = a2.Phi.rho;
  rhoPsi.topLeftCorner(c1, c1) = a1.Psi.rho;
  rhoPsi.bottomRightCorner(c2, c2) = a2.Psi.rho;
  a->Phi = StateOnAlgebra{a->M.get(), rhoPhi};
  a->Psi = StateOnAlgebra{a->M.get(), rhoPsi};
  return a;
}

// ---------------------------------------------------------- tensor product

inline std::shared_ptr<Amqg> tensorProduct(const Amqg& a1, const Amqg& a2,
                                           double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  const Eigen::Index n1 = a1.N->carrierDim, n2 = a2.N->carrierDim;
  const Eigen::Index c1 = a1.M->carrierDim, c2 = a2.M->carrierDim;

  std::vector<Mat> nSpan, mSpan;
  for (const auto& p : a1.N->basis)
    for (const auto& q : a2.N->basis) nSpan.push_back(kron(p, q));
  for (const auto& p : a1.M->basis)
    for (const auto& q : a2.M->basis) mSpan.push_back(kron(p, q));
  a->N = std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(nSpan, n1 * n2, tol));
  a->M = std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(mSpan, c1 * c2, tol));

  a->nu = StateOnAlgebra{a->N.get(), kron(a1.nu.rho, a2.nu.rho)};
  a->nuG = std::make_shared<GnsData>(gns(*a->N, a->nu, tol));

  // decomposition of the rebuilt bases over the factor pairs
  Mat nStack(n1 * n1 * n2 * n2, a1.N->algDim() * a2.N->algDim());
  {
    Eigen::Index col = 0;
    for (Eigen::Index p = 0; p < a1.N->algDim(); ++p)
      for (Eigen::Index q = 0; q < a2.N->algDim(); ++q)
        nStack.col(col++) = vecm(kron(a1.N->basis[p], a2.N->basis[q]));
  }
  for (const auto& z : a->N->basis) {
    Vec cc = leastSquares(nStack, vecm(z));
    Mat al = Mat::Zero(c1 * c2, c1 * c2), be = al;
    Eigen::Index col = 0;
    for (Eigen::Index p = 0; p < a1.N->algDim(); ++p)
      for (Eigen::Index q = 0; q < a2.N->algDim(); ++q) {
        al += cc(col) * kron(a1.alphaB[p], a2.alphaB[q]);
        be += cc(col) * kron(a1.betaB[p], a2.betaB[q]);
        ++col;
      }
    a->alphaB.push_back(al);
    a->betaB.push_back(be);
  }

  // middle-leg swap (c1⊗c1)⊗(c2⊗c2) → (c1⊗c2)⊗(c1⊗c2)
  Mat perm = Mat::Zero(c1 * c2 * c1 * c2, c1 * c1 * c2 * c2);
  for (Eigen::Index i1 = 0; i1 < c1; ++i1)
    for (Eigen::Index j1 = 0; j1 < c1; ++j1)
      for (Eigen::Index i2 = 0; i2 < c2; ++i2)
        for (Eigen::Index j2 = 0; j2 < c2; ++j2)
          perm(((i1 * c2 + i2) * c1 + j1) * c2 + j2,
               ((i1 * c1 + j1) * c2 + i2) * c2 + j2) = 1.0;

  Mat mStack(c1 * c1 * c2 * c2, a1.M->algDim() * a2.M->algDim());
  {
    Eigen::Index col = 0;
    for (Eigen::Index p = 0; p < a1.M->algDim(); ++p)
      for (Eigen::Index q = 0; q < a2.M->algDim(); ++q)
        mStack.col(col++) = vecm(kron(a1.M->basis[p], a2.M->basis[q]));
  }
  Vec phiVals(a->M->algDim()), psiVals(a->M->algDim());
  std::vector<Vec> mCoeffs;
  for (Eigen::Index k = 0; k < a->M->algDim(); ++k) {
    Vec cc = leastSquares(mStack, vecm(a->M->basis[k]));
    if ((mStack * cc - vecm(a->M->basis[k])).norm() > 1e-7)
      throw StructuralError("tensorProduct: basis does not split over pairs");
    mCoeffs.push_back(cc);
    Mat lift = Mat::Zero(c1 * c2 * c1 * c2, c1 * c2 * c1 * c2);
    cd pv = 0, sv = 0;
    Eigen::Index col = 0;
    for (Eigen::Index p = 0; p < a1.M->algDim(); ++p)
      for (Eigen::Index q = 0; q < a2.M->algDim(); ++q) {
        if (std::abs(cc(col)) > 1e-13)
          lift += cc(col) * perm *
                  kron(a1.gammaLift[p], a2.gammaLift[q]) * perm.adjoint();
        pv += cc(col) * a1.Phi.eval(a1.M->basis[p]) * a2.Phi.eval(a2.M->basis[q]);
        sv += cc(col) * a1.Psi.eval(a1.M->basis[p]) * a2.Psi.eval(a2.M->basis[q]);
        ++col;
      }
    a->gammaLift.push_back(lift);
    phiVals(k) = pv;
    psiVals(k) = sv;
  }

  auto tensorCp = [&](const CpMap& t1, const CpMap& t2) {
    const auto* mPtr = a->M.get();
    Mat stack = mStack;
    const auto& b1 = a1.M->basis;
    const auto& b2 = a2.M->basis;
    return CpMap::fromFunction(c1 * c2, c1 * c2, [=](const Mat& x) {
      Vec cc = leastSquares(stack, vecm(mPtr->project(x)));
      Mat out = Mat::Zero(c1 * c2, c1 * c2);
      Eigen::Index col = 0;
      for (size_t p = 0; p < b1.size(); ++p)
        for (size_t q = 0; q < b2.size(); ++q)
          out += cc(col++) * kron(t1.apply(b1[p]), t2.apply(b2[q]));
      return out;
    });
  };
  a->TL = tensorCp(a1.TL, a2.TL);
  a->TR = tensorCp(a1.TR, a2.TR);
  a->Phi = stateFromFunctional(*a->M, phiVals);
  a->Psi = stateFromFunctional(*a->M, psiVals);
  return a;
}

// ----------------------------------------------------- opposite structure

/*
 * Opposite structure: same algebra, legs exchanged, coproduct flipped, left
 * and right weights exchanged. The base is replaced by its transpose copy
 * so that the old β becomes a genuine representation of the new base.
 * Expected invariants: δ_op = δ⁻¹ and λ_op = λ⁻¹.
 */
inline std::shared_ptr<Amqg> opposite(const Amqg& a1, double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  std::vector<Mat> nSpan;
  for (const auto& b : a1.N->basis) nSpan.push_back(b.transpose());
  a->N = std::make_shared<MultiMatrixAlgebra>(
      algebraFromSpan(nSpan, a1.N->carrierDim, tol));
  a->nu = StateOnAlgebra{a->N.get(), a1.nu.rho.transpose()};
  a->nuG = std::make_shared<GnsData>(gns(*a->N, a->nu, tol));

  a->M = a1.M;
  for (const auto& z : a->N->basis) {
    a->alphaB.push_back(a1.betaOf(z.transpose()));
    a->betaB.push_back(a1.alphaOf(z.transpose()));
  }
  Mat flip = tensorFlip(a1.M->carrierDim, a1.M->carrierDim);
  for (const auto& g : a1.gammaLift) a->gammaLift.push_back(flip * g * flip);
  a->TL = a1.TR;
  a->TR = a1.TL;
  a->Phi = a1.Psi;
  a->Phi.alg = a->M.get();
  a->Psi = a1.Phi;
  a->Psi.alg = a->M.get();
  return a;
}

// -------------------------------------------- transport along (anti-)isos

/*
 * Transport along a *-isomorphism π of M onto an algebra on a (possibly
 * different) carrier: every map is conjugated by π, the base is unchanged.
 * Expected invariants: δ₂ = π(δ₁), λ₂ = π(λ₁).
 */
inline std::shared_ptr<Amqg> transportIso(
    const Amqg& a1, const std::function<Mat(const Mat&)>& piF,
    Eigen::Index newCarrier, double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  a->N = a1.N;
  a->nu = a1.nu;
  a->nuG = a1.nuG;

  std::vector<Mat> mSpan;
  for (const auto& b : a1.M->basis) mSpan.push_back(piF(b));
  a->M = std::make_shared<MultiMatrixAlgebra>(
      algebraFromSpan(mSpan, newCarrier, tol));

  Mat imgStack(newCarrier * newCarrier, a1.M->algDim());
  for (Eigen::Index j = 0; j < a1.M->algDim(); ++j)
    imgStack.col(j) = vecm(piF(a1.M->basis[j]));
  auto pullback = [imgStack, &a1](const Mat& y) {
    Vec c = leastSquares(imgStack, vecm(y));
    if ((imgStack * c - vecm(y)).norm() > 1e-7 * std::max(1.0, frobNorm(y)))
      throw StructuralError("transportIso: element is not in the image");
    return a1.M->fromCoeffs(c);
  };

  for (Eigen::Index j = 0; j < a1.N->algDim(); ++j) {
    a->alphaB.push_back(piF(a1.alphaB[j]));
    a->betaB.push_back(piF(a1.betaB[j]));
  }
  Vec phiVals(a->M->algDim()), psiVals(a->M->algDim());
  for (Eigen::Index k = 0; k < a->M->algDim(); ++k) {
    Mat x = pullback(a->M->basis[k]);
    Mat gc = pairCoeffs(*a1.M, a1.gammaLiftOf(x));
    Mat lift = Mat::Zero(newCarrier * newCarrier, newCarrier * newCarrier);
    for (Eigen::Index p = 0; p < a1.M->algDim(); ++p)
      for (Eigen::Index q = 0; q < a1.M->algDim(); ++q)
        if (std::abs(gc(p, q)) > 1e-13)
          lift += gc(p, q) * kron(piF(a1.M->basis[p]), piF(a1.M->basis[q]));
    a->gammaLift.push_back(lift);
    phiVals(k) = a1.Phi.eval(x);
    psiVals(k) = a1.Psi.eval(x);
  }
  auto moveCp = [&](const CpMap& t) {
    return CpMap::fromFunction(newCarrier, newCarrier, [=, &a1](const Mat& y) {
      Vec c = leastSquares(imgStack, vecm(y));
      return piF(t.apply(a1.M->fromCoeffs(c)));
    });
  };
  a->TL = moveCp(a1.TL);
  a->TR = moveCp(a1.TR);
  a->Phi = stateFromFunctional(*a->M, phiVals);
  a->Psi = stateFromFunctional(*a->M, psiVals);
  return a;
}

/*
 * Transport along a *-anti-isomorphism j of M. The base is replaced by its
 * transpose copy, the legs are exchanged through j, and the weights move as
 * in the isomorphism case. Expected: δ₂ = j(δ₁), λ₂ = j(λ₁⁻¹) = j(λ₁)⁻¹.
 */
inline std::shared_ptr<Amqg> transportAnti(
    const Amqg& a1, const std::function<Mat(const Mat&)>& jF,
    Eigen::Index newCarrier, double tol = kDefaultTol) {
  auto a = std::make_shared<Amqg>();
  std::vector<Mat> nSpan;
  for (const auto& b : a1.N->basis) nSpan.push_back(b.transpose());
  a->N = std::make_shared<MultiMatrixAlgebra>(
      algebraFromSpan(nSpan, a1.N->carrierDim, tol));
  a->nu = StateOnAlgebra{a->N.get(), a1.nu.rho.transpose()};
  a->nuG = std::make_shared<GnsData>(gns(*a->N, a->nu, tol));

  std::vector<Mat> mSpan;
  for (const auto& b : a1.M->basis) mSpan.push_back(jF(b));
  a->M = std::make_shared<MultiMatrixAlgebra>(
      algebraFromSpan(mSpan, newCarrier, tol));

  Mat imgStack(newCarrier * newCarrier, a1.M->algDim());
  for (Eigen::Index j = 0; j < a1.M->algDim(); ++j)
    imgStack.col(j) = vecm(jF(a1.M->basis[j]));
  auto pullback = [imgStack, &a1](const Mat& y) {
    Vec c = leastSquares(imgStack, vecm(y));
    if ((imgStack * c - vecm(y)).norm() > 1e-7 * std::max(1.0, frobNorm(y)))
      throw StructuralError("transportAnti: element is not in the image");
    return a1.M->fromCoeffs(c);
  };

  for (const auto& z : a->N->basis) {
    a->alphaB.push_back(jF(a1.alphaOf(z.transpose())));
    a->betaB.push_back(jF(a1.betaOf(z.transpose())));
  }
  Vec phiVals(a->M->algDim()), psiVals(a->M->algDim());
  for (Eigen::Index k = 0; k < a->M->algDim(); ++k) {
    Mat x = pullback(a->M->basis[k]);
    Mat gc = pairCoeffs(*a1.M, a1.gammaLiftOf(x));
    Mat lift = Mat::Zero(newCarrier * newCarrier, newCarrier * newCarrier);
    for (Eigen::Index p = 0; p < a1.M->algDim(); ++p)
      for (Eigen::Index q = 0; q < a1.M->algDim(); ++q)
        if (std::abs(gc(p, q)) > 1e-13)
          lift += gc(p, q) * kron(jF(a1.M->basis[p]), jF(a1.M->basis[q]));
    a->gammaLift.push_back(lift);
    phiVals(k) = a1.Phi.eval(x);
    psiVals(k) = a1.Psi.eval(x);
  }
  auto moveCp = [&](const CpMap& t) {
    return CpMap::fromFunction(newCarrier, newCarrier, [=, &a1](const Mat& y) {
      Vec c = leastSquares(imgStack, vecm(y));
      return jF(t.apply(a1.M->fromCoeffs(c)));
    });
  };
  a->TL = moveCp(a1.TL);
  a->TR = moveCp(a1.TR);
  a->Phi = stateFromFunctional(*a->M, phiVals);
  a->Psi = stateFromFunctional(*a->M, psiVals);
  return a;
}

/*
 * Commutant structure: the image of the whole structure under the modular
 * anti-automorphism j(x) = J_Φ x* J_Φ on the GNS space of Φ, composed with
 * the GNS representation. Expected: δ_c = j(δ), λ_c = λ⁻¹.
 */
inline std::shared_ptr<Amqg> commutantStructure(const MqgData& m,
                                                double tol = kDefaultTol) {
  const GnsData& g = m.sf.phiG;
  auto onGns = transportIso(
      *m.a, [&g](const Mat& x) { return g.pi(x); }, g.dim, tol);
  return transportAnti(
      *onGns, [&g](const Mat& x) { return detail::modularConj(g, x); }, g.dim,
      tol);
}

}  // namespace mqg
