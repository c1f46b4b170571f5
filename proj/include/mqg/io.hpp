#pragma once

/*
 * io.hpp — JSON structure files and machine-readable verification reports.
 *
 * A structure file declares its kind (groupoid | wha | mqg | composite) and
 * carries every table needed to rebuild the object: complex scalars are
 * two-element [re, im] arrays, matrices are row-major nested arrays, maps
 * are matrices over the declared bases, composites are recipes over embedded
 * inputs. Serialization is canonical — keys are emitted in sorted order and
 * floats use the shortest round-tripping decimal — so write → read → write
 * is byte-identical.
 */

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "factory.hpp"

namespace mqg {

using Json = nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------- scalars

inline Json complexToJson(cd z) { return Json::array({z.real(), z.imag()}); }

inline cd complexFromJson(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw IoError("expected a complex scalar as a [re, im] pair");
  return cd(j[0].get<double>(), j[1].get<double>());
}

// ----------------------------------------------------------- matrices

inline Json matToJson(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(complexToJson(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline Mat matFromJson(const Json& j) {
  if (!j.is_array() || j.empty()) throw IoError("expected a non-empty matrix");
  Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty())
    throw IoError("expected matrix rows as arrays");
  Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
      throw IoError("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = complexFromJson(j[i][c]);
  }
  return m;
}

inline Json matsToJson(const std::vector<Mat>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) out.push_back(matToJson(m));
  return out;
}

inline std::vector<Mat> matsFromJson(const Json& j) {
  if (!j.is_array()) throw IoError("expected an array of matrices");
  std::vector<Mat> out;
  for (const auto& e : j) out.push_back(matFromJson(e));
  return out;
}

template <typename T>
Json intsToJson(const std::vector<T>& v) {
  Json out = Json::array();
  for (T x : v) out.push_back(x);
  return out;
}

inline std::vector<int> intsFromJson(const Json& j) {
  if (!j.is_array()) throw IoError("expected an integer array");
  std::vector<int> out;
  for (const auto& e : j) {
    if (!e.is_number_integer()) throw IoError("expected an integer array");
    out.push_back(e.get<int>());
  }
  return out;
}

inline std::vector<double> doublesFromJson(const Json& j) {
  if (!j.is_array()) throw IoError("expected a numeric array");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw IoError("expected a numeric array");
    out.push_back(e.get<double>());
  }
  return out;
}

// ----------------------------------------------------------- groupoids

inline Json groupoidToJson(const FiniteGroupoid& g) {
  Json j;
  j["kind"] = "groupoid";
  j["objects"] = g.nObjects;
  j["morphisms"] = g.nMorphisms;
  j["source"] = intsToJson(g.src);
  j["range"] = intsToJson(g.rng);
  j["inverse"] = intsToJson(g.inv);
  j["units"] = intsToJson(g.unitAt);
  j["measure"] = g.mu;
  Json comp = Json::array();
  for (int a = 0; a < g.nMorphisms; ++a) {
    Json row = Json::array();
    for (int b = 0; b < g.nMorphisms; ++b) row.push_back(g.composeIdx(a, b));
    comp.push_back(row);
  }
  j["compose"] = comp;
  return j;
}

inline FiniteGroupoid groupoidFromJson(const Json& j) {
  FiniteGroupoid g;
  try {
    g.nObjects = j.at("objects").get<int>();
    g.nMorphisms = j.at("morphisms").get<int>();
    g.src = intsFromJson(j.at("source"));
    g.rng = intsFromJson(j.at("range"));
    g.inv = intsFromJson(j.at("inverse"));
    g.unitAt = intsFromJson(j.at("units"));
    g.mu = doublesFromJson(j.at("measure"));
    const Json& comp = j.at("compose");
    if (!comp.is_array() ||
        static_cast<int>(comp.size()) != g.nMorphisms)
      throw IoError("composition table has the wrong shape");
    g.comp.assign(static_cast<size_t>(g.nMorphisms) * g.nMorphisms, -1);
    for (int a = 0; a < g.nMorphisms; ++a) {
      auto row = intsFromJson(comp[a]);
      if (static_cast<int>(row.size()) != g.nMorphisms)
        throw IoError("composition table has the wrong shape");
      for (int b = 0; b < g.nMorphisms; ++b)
        g.comp[static_cast<size_t>(a) * g.nMorphisms + b] = row[b];
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("groupoid schema: ") + e.what());
  }
  g.validate();
  return g;
}

// ----------------------------------------------------------- weak Hopf data

inline Json whaToJson(const Wha& w) {
  Json j;
  j["kind"] = "wha";
  j["carrier"] = w.M->carrierDim;
  j["basis"] = matsToJson(w.M->basis);
  j["coproduct"] = matsToJson(w.deltaLift);
  Json eps = Json::array();
  for (Eigen::Index k = 0; k < w.eps.size(); ++k)
    eps.push_back(complexToJson(w.eps(k)));
  j["counit"] = eps;
  j["antipode"] = matsToJson(w.kappaImg);
  return j;
}

inline Wha whaFromJson(const Json& j) {
  try {
    Eigen::Index c = j.at("carrier").get<Eigen::Index>();
    auto basis = matsFromJson(j.at("basis"));
    auto dl = matsFromJson(j.at("coproduct"));
    auto kp = matsFromJson(j.at("antipode"));
    const Json& ej = j.at("counit");
    if (!ej.is_array() || ej.size() != basis.size())
      throw IoError("counit length mismatch");
    std::vector<cd> eps;
    for (const auto& e : ej) eps.push_back(complexFromJson(e));
    if (dl.size() != basis.size() || kp.size() != basis.size())
      throw IoError("weak Hopf tables have mismatched lengths");
    for (const auto& b : basis)
      if (b.rows() != c || b.cols() != c)
        throw IoError("weak Hopf basis dimension mismatch");
    return whaFromGenerators(basis, dl, eps, kp);
  } catch (const Json::exception& e) {
    throw IoError(std::string("wha schema: ") + e.what());
  }
}

// ----------------------------------------------------------- full structures

/*
 * Build an algebra keeping the declared basis and its order, so tables
 * indexed over it (legs, coproduct lifts) keep their meaning. The declared
 * basis must be orthonormal for the Hilbert-Schmidt form — a schema
 * invariant of structure files, and automatic for files written here.
 */
inline std::shared_ptr<MultiMatrixAlgebra> algebraWithDeclaredBasis(
    const std::vector<Mat>& basis, Eigen::Index carrier, double tol) {
  MultiMatrixAlgebra A;
  try {
    A = algebraFromSpan(basis, carrier, tol);
  } catch (const StructuralError& e) {
    throw IoError(std::string("declared basis: ") + e.what());
  }
  if (A.algDim() != static_cast<Eigen::Index>(basis.size()))
    throw IoError("declared basis is linearly dependent");
  Mat stack(carrier * carrier, A.algDim());
  for (Eigen::Index k = 0; k < A.algDim(); ++k) stack.col(k) = vecm(basis[k]);
  if (opNorm(Mat(stack.adjoint() * stack) - eye(A.algDim())) > std::sqrt(tol))
    throw IoError("declared basis must be Hilbert-Schmidt orthonormal");
  A.basis = basis;
  A.basisStack = stack;
  return std::make_shared<MultiMatrixAlgebra>(std::move(A));
}

inline Json amqgToJson(const Amqg& a) {
  Json j;
  j["kind"] = "mqg";
  Json base;
  base["carrier"] = a.N->carrierDim;
  base["basis"] = matsToJson(a.N->basis);
  base["density"] = matToJson(a.nu.rho);
  j["base"] = base;
  Json alg;
  alg["carrier"] = a.M->carrierDim;
  alg["basis"] = matsToJson(a.M->basis);
  j["algebra"] = alg;
  j["alpha"] = matsToJson(a.alphaB);
  j["beta"] = matsToJson(a.betaB);
  j["coproduct"] = matsToJson(a.gammaLift);
  j["left_invariant"] = matToJson(a.TL.vecMat);
  j["right_invariant"] = matToJson(a.TR.vecMat);
  j["phi_density"] = matToJson(a.Phi.rho);
  j["psi_density"] = matToJson(a.Psi.rho);
  return j;
}

inline std::shared_ptr<Amqg> amqgFromJson(const Json& j,
                                          double tol = kDefaultTol) {
  try {
    auto a = std::make_shared<Amqg>();
    const Json& base = j.at("base");
    Eigen::Index nc = base.at("carrier").get<Eigen::Index>();
    a->N = algebraWithDeclaredBasis(matsFromJson(base.at("basis")), nc, tol);
    a->nu = StateOnAlgebra{a->N.get(), matFromJson(base.at("density"))};
    if (!a->nu.isPositiveDensity(std::sqrt(tol)) || !a->nu.faithful(tol))
      throw IoError("base density is not faithful positive");
    a->nuG = std::make_shared<GnsData>(gns(*a->N, a->nu, tol));
    const Json& alg = j.at("algebra");
    Eigen::Index c = alg.at("carrier").get<Eigen::Index>();
    a->M = algebraWithDeclaredBasis(matsFromJson(alg.at("basis")), c, tol);
    a->alphaB = matsFromJson(j.at("alpha"));
    a->betaB = matsFromJson(j.at("beta"));
    a->gammaLift = matsFromJson(j.at("coproduct"));
    if (a->alphaB.size() != static_cast<size_t>(a->N->algDim()) ||
        a->betaB.size() != static_cast<size_t>(a->N->algDim()))
      throw IoError("leg tables must match the base dimension");
    if (a->gammaLift.size() != static_cast<size_t>(a->M->algDim()))
      throw IoError("coproduct table must match the algebra dimension");
    for (const auto& m : a->gammaLift)
      if (m.rows() != c * c || m.cols() != c * c)
        throw IoError("coproduct lifts must act on carrier squared");
    a->TL = CpMap{c, c, matFromJson(j.at("left_invariant"))};
    a->TR = CpMap{c, c, matFromJson(j.at("right_invariant"))};
    if (a->TL.vecMat.rows() != c * c || a->TL.vecMat.cols() != c * c ||
        a->TR.vecMat.rows() != c * c || a->TR.vecMat.cols() != c * c)
      throw IoError("invariant maps must act on carrier squared");
    a->Phi = StateOnAlgebra{a->M.get(), matFromJson(j.at("phi_density"))};
    a->Psi = StateOnAlgebra{a->M.get(), matFromJson(j.at("psi_density"))};
    if (!a->Phi.isPositiveDensity(std::sqrt(tol)) ||
        !a->Psi.isPositiveDensity(std::sqrt(tol)))
      throw IoError("invariant weight densities must be positive");
    return a;
  } catch (const Json::exception& e) {
    throw IoError(std::string("mqg schema: ") + e.what());
  }
}

// ----------------------------------------------------------- materialization

inline std::shared_ptr<Amqg> materialize(const Json& j,
                                         double tol = kDefaultTol);

inline Json readStructure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw IoError(std::string("parse error in ") + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw IoError("structure file must declare a kind");
  return j;
}

inline void writeStructure(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline std::string canonicalDump(const Json& j) { return j.dump(2) + "\n"; }

inline std::shared_ptr<Amqg> materialize(const Json& j, double tol) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "groupoid") return fromFiniteGroupoid(groupoidFromJson(j), tol);
  if (kind == "wha") {
    Wha w = whaFromJson(j);
    return whaToAmqg(w, haarState(w, tol), tol);
  }
  if (kind == "mqg") return amqgFromJson(j, tol);
  if (kind == "composite") {
    std::string op;
    std::vector<std::shared_ptr<Amqg>> in;
    try {
      op = j.at("op").get<std::string>();
      for (const auto& e : j.at("inputs")) in.push_back(materialize(e, tol));
    } catch (const Json::exception& e) {
      throw IoError(std::string("composite schema: ") + e.what());
    }
    auto arity = [&](size_t n) {
      if (in.size() != n)
        throw IoError("composite op '" + op + "' expects " +
                      std::to_string(n) + " inputs");
    };
    if (op == "sum") {
      arity(2);
      return directSum(*in[0], *in[1], tol);
    }
    if (op == "tensor") {
      arity(2);
      return tensorProduct(*in[0], *in[1], tol);
    }
    if (op == "opposite") {
      arity(1);
      return opposite(*in[0], tol);
    }
    if (op == "commutant") {
      arity(1);
      return commutantStructure(buildMqg(in[0], tol), tol);
    }
    throw IoError("unknown composite op '" + op + "'");
  }
  throw IoError("unknown structure kind '" + kind + "'");
}

// ----------------------------------------------------------- reports

// stable internal anchor identifiers for check names: a slug of the name,
// so reports can be grepped and diffed across runs
inline std::string anchorOf(const std::string& name) {
  std::string out = "check:";
  bool dash = false;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      dash = false;
    } else if (!dash && !out.empty() && out.back() != ':') {
      out += '-';
      dash = true;
    }
  }
  if (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

inline Json reportToJson(const std::vector<CheckResult>& checks, double tol,
                         const std::vector<Eigen::Index>& dims) {
  Json j;
  Json arr = Json::array();
  int passed = 0;
  for (const auto& c : checks) {
    Json e;
    e["name"] = c.name;
    e["anchor"] = anchorOf(c.name);
    e["residual"] = c.residual;
    e["tolerance"] = c.tolerance;
    e["pass"] = c.pass;
    arr.push_back(e);
    if (c.pass) ++passed;
  }
  j["checks"] = arr;
  Json summary;
  summary["total"] = checks.size();
  summary["passed"] = passed;
  summary["pass"] = passed == static_cast<int>(checks.size());
  j["summary"] = summary;
  Json env;
  env["tolerance"] = tol;
  env["dimensions"] = intsToJson(dims);
  j["environment"] = env;
  return j;
}

}  // namespace mqg
