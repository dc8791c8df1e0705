#pragma once

// Self-checks shared by the `check` command and the test suite: finite-difference derivative
// checks over a fixed objective zoo, and theory-envelope checks on small instances.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "levelset/bench.hpp"

namespace levelset {

struct ZooEntry {
  Problem problem;
  /// Random test points are w0 + scale * N(0, I), or uniform in [-scale, scale] when `box`.
  double scale = 1.0;
  bool box = false;
  /// C^2 everywhere except on a null set.
  bool smooth = true;

  Vector sample(std::mt19937_64& rng) const;
};

/// quadratic, booth, goldstein_price, h2_chain, distance_counterexample, logreg, mlp (binary
/// and multiclass, softplus), and a ReLU mlp marked non-smooth.
std::vector<ZooEntry> objective_zoo(std::uint64_t seed = 0);

/// ||a - b|| / (1 + ||b||).
double rel_error(const Vector& a, const Vector& b);

struct DerivativeErrors {
  double gradient = 0.0;
  double hvp = 0.0;
  /// |<u, H v> - <v, H u>| / max(1, ||H u|| ||v||).
  double symmetry = 0.0;
  /// ||H(a u + b v) - a H u - b H v|| / max(1, |a| ||H u|| + |b| ||H v||).
  double linearity = 0.0;
};

/// Central differences with step h * max(1, ||w||_inf).
DerivativeErrors check_derivatives(const Objective& obj, const Vector& w, std::mt19937_64& rng, double h = 1e-5);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DerivativeTolerances {
  double gradient = 1e-5;
  double hvp = 1e-5;
  double symmetry = 1e-8;
  double linearity = 1e-10;
};

/// One result per smooth zoo entry, `points` seeded points each.
std::vector<CheckResult> run_derivative_checks(int points = 100, std::uint64_t seed = 0,
                                               const DerivativeTolerances& tol = {});

/// Convergence bounds against observed runs on small instances.
std::vector<CheckResult> run_envelope_checks();

}  // namespace levelset
