/*
 * mqg — command-line front end.
 *
 * Commands: verify | construct | dualize | bidual | compose | invariants.
 * Structure files are canonical JSON (see io.hpp). Exit codes: 0 all checks
 * pass, 1 a verification check failed, 2 bad input (parse/schema/usage).
 */

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "mqg/duality.hpp"
#include "mqg/io.hpp"

using namespace mqg;

namespace {

double envTol() {
  if (const char* s = std::getenv("MQG_TOL")) {
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end != s && v > 0) return v;
  }
  return kDefaultTol;
}

std::vector<Eigen::Index> dimsOf(const Amqg& a) {
  return {a.N->carrierDim, a.M->carrierDim, a.nuG ? a.nuG->dim : 0};
}

void emitReport(const Json& rep, const std::string& reportPath) {
  if (reportPath.empty())
    std::cout << canonicalDump(rep);
  else
    writeStructure(reportPath, rep);
}

int finish(const std::vector<CheckResult>& checks, double tol,
           const std::vector<Eigen::Index>& dims,
           const std::string& reportPath) {
  emitReport(reportToJson(checks, tol, dims), reportPath);
  for (const auto& c : checks)
    if (!c.pass) {
      std::cerr << "FAIL " << c.name << " residual " << c.residual
                << " tolerance " << c.tolerance << "\n";
      return 1;
    }
  return 0;
}

// full verifier chain for a structure file
int runVerify(const std::string& file, double tol,
              const std::string& reportPath) {
  Json j = readStructure(file);
  std::string kind = j["kind"].get<std::string>();
  std::vector<CheckResult> checks;
  std::vector<Eigen::Index> dims;
  if (kind == "wha") {
    Wha w = whaFromJson(j);
    checks = verifyWha(w, tol);
    auto h = haarState(w, tol);
    addCheck(checks, "haar solution space is one dimensional",
             h.solutionDim == 1 ? 0.0 : 1.0, 0.5);
    auto m = buildMqg(whaToAmqg(w, h, tol), tol);
    auto more = verifyMqg(m, tol);
    checks.insert(checks.end(), more.begin(), more.end());
    dims = dimsOf(*m.a);
  } else {
    auto a = materialize(j, tol);
    auto m = buildMqg(a, tol);
    checks = verifyMqg(m, tol);
    dims = dimsOf(*a);
  }
  return finish(checks, tol, dims, reportPath);
}

FiniteGroupoid s3Groupoid() {
  std::vector<std::array<int, 3>> perms = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1},
                                           {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
  auto find = [&](const std::array<int, 3>& p) {
    for (int i = 0; i < 6; ++i)
      if (perms[i] == p) return i;
    return -1;
  };
  auto mul = [&](int a, int b) {
    const auto& pa = perms[a];
    const auto& pb = perms[b];
    return find({pa[pb[0]], pa[pb[1]], pa[pb[2]]});
  };
  auto inv = [&](int a) {
    const auto& p = perms[a];
    std::array<int, 3> q{};
    for (int i = 0; i < 3; ++i) q[p[i]] = i;
    return find(q);
  };
  return groupGroupoid(6, mul, inv, 0);
}

std::shared_ptr<MultiMatrixAlgebra> baseAlgebra(const std::string& shape,
                                                int n) {
  std::vector<Mat> span;
  if (shape == "diag") {
    for (int i = 0; i < n; ++i) {
      Mat e = Mat::Zero(n, n);
      e(i, i) = 1.0;
      span.push_back(e);
    }
  } else if (shape == "full") {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Mat e = Mat::Zero(n, n);
        e(i, j) = 1.0;
        span.push_back(e);
      }
  } else {
    throw IoError("base shape must be diag or full");
  }
  return std::make_shared<MultiMatrixAlgebra>(algebraFromSpan(span, n));
}

Mat diagDensity(const std::vector<double>& w, int n) {
  if (static_cast<int>(w.size()) != n)
    throw IoError("expected " + std::to_string(n) + " weights");
  Mat rho = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (w[i] <= 0) throw IoError("weights must be positive");
    rho(i, i) = w[i];
  }
  return rho;
}

int runConstruct(const std::string& family, int n, const std::string& shape,
                 const std::vector<double>& measure,
                 const std::vector<double>& weights, double tol,
                 const std::string& outPath) {
  Json j;
  if (family == "trivial") {
    j = groupoidToJson(onePointGroupoid());
  } else if (family == "pair") {
    j = groupoidToJson(pairGroupoid(n, measure));
  } else if (family == "cyclic") {
    j = groupoidToJson(groupGroupoid(
        n, [n](int a, int b) { return (a + b) % n; },
        [n](int a) { return (n - a) % n; }, 0));
  } else if (family == "s3") {
    j = groupoidToJson(s3Groupoid());
  } else if (family == "pairs-qg" || family == "quantum-space-qg") {
    if (weights.empty()) throw IoError("--weights required for " + family);
    if (static_cast<int>(weights.size()) != n)
      throw IoError("--weights must list one value per base dimension");
    auto base = baseAlgebra(shape, n);
    Mat rho = diagDensity(weights, n);
    auto a = family == "pairs-qg" ? pairsQg(base, rho, tol)
                                  : quantumSpaceQg(base, rho, {}, tol);
    j = amqgToJson(*a);
  } else {
    throw IoError("unknown construct family '" + family + "'");
  }
  if (outPath.empty())
    std::cout << canonicalDump(j);
  else
    writeStructure(outPath, j);
  return 0;
}

int runDualize(const std::string& file, double tol,
               const std::string& outPath) {
  auto a = materialize(readStructure(file), tol);
  auto d = dualize(buildMqg(a, tol), tol);
  Json j = amqgToJson(*d.dual);
  if (outPath.empty())
    std::cout << canonicalDump(j);
  else
    writeStructure(outPath, j);
  return 0;
}

int runBidual(const std::string& file, double tol,
              const std::string& reportPath) {
  auto a = materialize(readStructure(file), tol);
  auto m = buildMqg(a, tol);
  auto checks = bidualCheck(m, tol);
  return finish(checks, tol, dimsOf(*a), reportPath);
}

int runCompose(const std::string& op, const std::vector<std::string>& files,
               double tol, const std::string& outPath) {
  Json recipe;
  recipe["kind"] = "composite";
  recipe["op"] = op;
  Json inputs = Json::array();
  for (const auto& f : files) inputs.push_back(readStructure(f));
  recipe["inputs"] = inputs;
  auto a = materialize(recipe, tol);
  Json j = amqgToJson(*a);
  if (outPath.empty())
    std::cout << canonicalDump(j);
  else
    writeStructure(outPath, j);
  return 0;
}

int runInvariants(const std::string& file, double tol,
                  const std::string& reportPath) {
  auto a = materialize(readStructure(file), tol);
  auto m = buildMqg(a, tol);
  auto cls = classify(m, tol);
  Json j;
  j["delta"] = matToJson(m.delta);
  j["lambda"] = matToJson(m.lambdaEl);
  auto spec = [](const Mat& x) {
    Eigen::SelfAdjointEigenSolver<Mat> es(x);
    Json out = Json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out.push_back(es.eigenvalues()(i));
    return out;
  };
  j["modular_spectrum"] = spec(m.sf.phiG.Delta);
  j["manageable_spectrum"] = spec(m.P);
  Json flags;
  flags["adapted"] = cls.adapted;
  flags["quantum_group"] = cls.quantumGroup;
  flags["compact_type"] = cls.compactType;
  flags["discrete_type"] = cls.discreteType;
  j["classification"] = flags;
  Json env;
  env["tolerance"] = tol;
  env["dimensions"] = intsToJson(dimsOf(*a));
  j["environment"] = env;
  emitReport(j, reportPath);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"measured quantum groupoid toolkit"};
  app.require_subcommand(1);
  double tol = envTol();
  std::string reportPath, outPath, file, family, op, shape = "diag";
  int n = 2;
  std::vector<double> measure, weights;
  std::vector<std::string> files;

  app.add_option("--tol", tol, "verification tolerance");

  auto* verify = app.add_subcommand("verify", "run the verifier chain");
  verify->add_option("file", file)->required();
  verify->add_option("--report", reportPath);

  auto* construct = app.add_subcommand("construct", "emit a structure file");
  construct->add_option("family", family,
                        "trivial|pair|cyclic|s3|pairs-qg|quantum-space-qg")
      ->required();
  construct->add_option("n", n, "size parameter");
  construct->add_option("--base", shape, "base algebra shape: diag|full");
  construct->add_option("--measure", measure, "object measure values");
  construct->add_option("--weights", weights, "base state weights");
  construct->add_option("-o", outPath);

  auto* dual = app.add_subcommand("dualize", "write the dual structure");
  dual->add_option("file", file)->required();
  dual->add_option("-o", outPath);

  auto* bidual = app.add_subcommand("bidual", "check double dualization");
  bidual->add_option("file", file)->required();
  bidual->add_option("--report", reportPath);

  auto* compose = app.add_subcommand("compose", "combine structures");
  compose->add_option("op", op, "sum|tensor|opposite|commutant")->required();
  compose->add_option("files", files)->required();
  compose->add_option("-o", outPath);

  auto* invariants =
      app.add_subcommand("invariants", "list modulus, scaling, spectra");
  invariants->add_option("file", file)->required();
  invariants->add_option("--report", reportPath);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) return runVerify(file, tol, reportPath);
    if (*construct)
      return runConstruct(family, n, shape, measure, weights, tol, outPath);
    if (*dual) return runDualize(file, tol, outPath);
    if (*bidual) return runBidual(file, tol, reportPath);
    if (*compose) return runCompose(op, files, tol, outPath);
    if (*invariants) return runInvariants(file, tol, reportPath);
  } catch (const IoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const StructuralError& e) {
    std::cerr << "verification error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
