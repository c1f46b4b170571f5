#pragma once

// Shared example structures for the test suite: finite groups given by
// multiplication tables, their function algebras and group algebras as weak
// Hopf data, and the function algebra of the pair groupoid.

#include "mqg/hopf.hpp"

namespace examples {

using namespace mqg;

// a finite group as a multiplication table
struct Group {
  int n = 1;
  std::vector<std::vector<int>> mul;
  std::vector<int> inv;
  int e = 0;
};

inline Group cyclic(int n) {
  Group g;
  g.n = n;
  g.mul.assign(n, std::vector<int>(n));
  g.inv.assign(n, 0);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) g.mul[a][b] = (a + b) % n;
    g.inv[a] = (n - a) % n;
  }
  return g;
}

inline Group s3() {
  // permutations of three letters, composed left to right: (pq)(x)=p(q(x))
  std::vector<std::array<int, 3>> perms = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1},
                                           {1, 0, 2}, {0, 2, 1}, {2, 1, 0}};
  Group g;
  g.n = 6;
  g.mul.assign(6, std::vector<int>(6));
  g.inv.assign(6, 0);
  auto find = [&](const std::array<int, 3>& p) {
    for (int i = 0; i < 6; ++i)
      if (perms[i] == p) return i;
    throw std::logic_error("s3 table");
  };
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      std::array<int, 3> c{};
      for (int x = 0; x < 3; ++x) c[x] = perms[a][perms[b][x]];
      g.mul[a][b] = find(c);
    }
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      if (g.mul[a][b] == 0) g.inv[a] = b;
  return g;
}

inline Mat diagUnit(int n, int i) {
  Mat e = Mat::Zero(n, n);
  e(i, i) = 1.0;
  return e;
}

// function algebra C(G) with the convolution coproduct
inline Wha functionWha(const Group& g) {
  std::vector<Mat> gens, dl, kp;
  std::vector<cd> ep;
  for (int x = 0; x < g.n; ++x) {
    gens.push_back(diagUnit(g.n, x));
    Mat d = Mat::Zero(g.n * g.n, g.n * g.n);
    for (int a = 0; a < g.n; ++a)
      for (int b = 0; b < g.n; ++b)
        if (g.mul[a][b] == x) d += kron(diagUnit(g.n, a), diagUnit(g.n, b));
    dl.push_back(d);
    ep.push_back(x == g.e ? 1.0 : 0.0);
    kp.push_back(diagUnit(g.n, g.inv[x]));
  }
  return whaFromGenerators(gens, dl, ep, kp);
}

// left regular representation of the group, u_a(h) = ah
inline std::vector<Mat> regularRep(const Group& g) {
  std::vector<Mat> u(g.n, Mat::Zero(g.n, g.n));
  for (int a = 0; a < g.n; ++a)
    for (int h = 0; h < g.n; ++h) u[a](g.mul[a][h], h) = 1.0;
  return u;
}

// group algebra C[G] on the left regular representation
inline Wha groupWha(const Group& g) {
  auto u = regularRep(g);
  std::vector<Mat> gens, dl, kp;
  std::vector<cd> ep;
  for (int a = 0; a < g.n; ++a) {
    gens.push_back(u[a]);
    dl.push_back(kron(u[a], u[a]));
    ep.push_back(1.0);
    kp.push_back(u[g.inv[a]]);
  }
  return whaFromGenerators(gens, dl, ep, kp);
}

// function algebra of the pair groupoid on `pts` points: arrows (i,j),
// composition (i,j)(j,k) = (i,k), units on the diagonal
inline Wha pairGroupoidWha(int pts) {
  int n = pts * pts;
  auto idx = [pts](int i, int j) { return i * pts + j; };
  std::vector<Mat> gens, dl, kp;
  std::vector<cd> ep;
  for (int i = 0; i < pts; ++i)
    for (int k = 0; k < pts; ++k) {
      gens.push_back(diagUnit(n, idx(i, k)));
      Mat d = Mat::Zero(n * n, n * n);
      for (int j = 0; j < pts; ++j)
        d += kron(diagUnit(n, idx(i, j)), diagUnit(n, idx(j, k)));
      dl.push_back(d);
      ep.push_back(i == k ? 1.0 : 0.0);
      kp.push_back(diagUnit(n, idx(k, i)));
    }
  return whaFromGenerators(gens, dl, ep, kp);
}

}  // namespace examples
