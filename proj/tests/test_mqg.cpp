#include <catch2/catch_amalgamated.hpp>

#include "mqg/mqg.hpp"
#include "wha_examples.hpp"

using namespace mqg;
using examples::requireAll;

namespace {

MqgData fromWha(const Wha& w) {
  auto h = haarState(w);
  auto a = whaToAmqg(w, h);
  return buildMqg(a);
}

}  // namespace

TEST_CASE("function algebra of Z/3: full structure") {
  auto w = examples::functionWha(examples::cyclic(3));
  auto m = fromWha(w);
  requireAll(verifyMqg(m));

  // the antipode inverts the group in the function picture
  auto g = examples::cyclic(3);
  for (int x = 0; x < 3; ++x) {
    Mat ex = examples::diagUnit(3, x);
    CHECK(opNorm(m.sOf(ex) - examples::diagUnit(3, g.inv[x])) < 1e-7);
    // tracial Haar weight: the antipode is already the unitary one
    CHECK(opNorm(m.rOf(ex) - m.sOf(ex)) < 1e-7);
  }

  // trivial modulus and scaling element
  CHECK(opNorm(m.delta - Mat::Identity(3, 3)) < 1e-7);
  CHECK(opNorm(m.lambdaEl - Mat::Identity(3, 3)) < 1e-7);

  auto cls = classify(m);
  CHECK(cls.adapted);
  CHECK(cls.quantumGroup);
  CHECK(cls.compactType);
  CHECK(cls.discreteType);
}

TEST_CASE("group algebra of Z/3: antipode inverts group elements") {
  auto g = examples::cyclic(3);
  auto w = examples::groupWha(g);
  auto m = fromWha(w);
  requireAll(verifyMqg(m));

  auto u = examples::regularRep(g);
  for (int a = 0; a < g.n; ++a) {
    CHECK(opNorm(m.sOf(u[a]) - u[g.inv[a]]) < 1e-7);
    CHECK(opNorm(m.rOf(u[a]) - u[g.inv[a]]) < 1e-7);
  }
  CHECK(opNorm(m.delta - Mat::Identity(g.n, g.n)) < 1e-7);
  CHECK(opNorm(m.lambdaEl - Mat::Identity(g.n, g.n)) < 1e-7);

  auto cls = classify(m);
  CHECK(cls.adapted);
  CHECK(cls.quantumGroup);
  CHECK(cls.compactType);
  CHECK(cls.discreteType);
}

TEST_CASE("group algebra of S3: nonabelian antipode and scaling") {
  auto g = examples::s3();
  auto w = examples::groupWha(g);
  auto m = fromWha(w);
  requireAll(verifyMqg(m));

  auto u = examples::regularRep(g);
  for (int a = 0; a < g.n; ++a)
    CHECK(opNorm(m.sOf(u[a]) - u[g.inv[a]]) < 1e-6);
  CHECK(opNorm(m.delta - Mat::Identity(g.n, g.n)) < 1e-7);
  CHECK(opNorm(m.lambdaEl - Mat::Identity(g.n, g.n)) < 1e-7);

  // the scaling group is trivial for a tracial Haar weight
  for (double t : tGrid())
    for (const auto& b : m.a->M->basis)
      CHECK(opNorm(m.tau(t, b) - b) < 1e-6);
}

TEST_CASE("pair groupoid on two points: base-nontrivial structure") {
  auto w = examples::pairGroupoidWha(2);
  auto m = fromWha(w);
  requireAll(verifyMqg(m));

  auto cls = classify(m);
  CHECK(cls.adapted);
  CHECK_FALSE(cls.quantumGroup);
  CHECK(cls.compactType);
  CHECK(cls.discreteType);

  // arrow reversal: the antipode sends e_{(i,k)} to e_{(k,i)}
  int pts = 2, n = pts * pts;
  auto idx = [pts](int i, int j) { return i * pts + j; };
  for (int i = 0; i < pts; ++i)
    for (int k = 0; k < pts; ++k)
      CHECK(opNorm(m.sOf(examples::diagUnit(n, idx(i, k))) -
                   examples::diagUnit(n, idx(k, i))) < 1e-7);
}

TEST_CASE("uniqueness probe for the left invariant weight") {
  auto w = examples::pairGroupoidWha(2);
  auto m = fromWha(w);
  const auto& a = *m.a;

  SECTION("the canonical weight itself gives h = 1") {
    auto res = uniquenessProbe(m, a.TL);
    REQUIRE(res.accepted);
    CHECK(opNorm(res.h - a.N->unit) < 1e-6);
  }

  SECTION("a centrally rescaled weight is recovered") {
    // h0 = diag(1, 2) in the two-point base
    Mat h0 = a.N->unit;
    bool scaled = false;
    for (const auto& nb : a.N->basis) {
      Mat cand = a.N->unit + nb.adjoint() * nb;
      if (opNorm(cand - a.N->unit) > 0.1 &&
          opNorm(cand * cand.adjoint() - cand.adjoint() * cand) < 1e-9) {
        h0 = cand;
        scaled = true;
        break;
      }
    }
    REQUIRE(scaled);
    Mat rootB = a.betaOf(hermFun(h0, [](double x) { return std::sqrt(x); }));
    CpMap tlp = CpMap::fromFunction(
        a.M->carrierDim, a.M->carrierDim,
        [&](const Mat& x) { return a.TL.apply(rootB * x * rootB); });
    auto res = uniquenessProbe(m, tlp);
    REQUIRE(res.accepted);
    CHECK(opNorm(res.h - h0) < 1e-6);
  }

  SECTION("a non-invariant candidate is rejected") {
    Mat skew = a.M->basis[1] + a.M->basis[1].adjoint() + 3.0 * a.M->unit;
    CpMap bad = CpMap::fromFunction(
        a.M->carrierDim, a.M->carrierDim,
        [&](const Mat& x) { return a.TL.apply(skew * x * skew); });
    auto res = uniquenessProbe(m, bad);
    CHECK_FALSE(res.accepted);
  }
}

TEST_CASE("reconstruction of the weak Hopf picture") {
  auto checkRoundTrip = [](const Wha& w) {
    auto m = fromWha(w);
    auto rec = amqgToWha(m);
    requireAll(verifyWha(rec.wha));
    auto h = haarState(rec.wha);
    CHECK(h.solutionDim == 1);

    // the corrected antipode matches the one of the input structure, read
    // through the representation on the invariant-weight space
    const auto& M = *m.a->M;
    for (const auto& b : M.basis)
      CHECK(opNorm(rec.wha.kappaOf(m.sf.piOf(b)) -
                   m.sf.piOf(w.kappaOf(b))) < 1e-6);
  };

  SECTION("function algebra of Z/3") {
    checkRoundTrip(examples::functionWha(examples::cyclic(3)));
  }
  SECTION("group algebra of S3") {
    checkRoundTrip(examples::groupWha(examples::s3()));
  }
  SECTION("pair groupoid on two points") {
    checkRoundTrip(examples::pairGroupoidWha(2));
  }
}
