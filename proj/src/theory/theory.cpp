#include "levelset/theory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "levelset/io.hpp"

namespace levelset {

namespace {

void check_inputs(const RateInputs& in) {
  require(in.K >= 0, "bounds: K must be >= 0");
  require(in.L > 0.0, "bounds: L must be > 0");
  require(in.mu >= 0.0 && in.mu <= in.L, "bounds: need 0 <= mu <= L");
  require(in.mu_tilde > 0.0 && in.mu_tilde <= in.L_tilde, "bounds: need 0 < mu~ <= L~");
  require(in.R > 0.0, "bounds: R must be > 0");
  in.schedule.validate();
}

void require_zero_not_in_t(const Schedule& s) {
  require(!schedule_member(s, 0), "bounds: the schedule must not teleport at k = 0");
}

/// Blocks of T truncated to iterations below K.
std::vector<std::pair<int, int>> blocks_below(const Schedule& s, int K) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < s.block_starts.size(); ++i) {
    const int start = s.block_starts[i];
    if (start >= K) break;
    out.emplace_back(start, std::min(s.block_lengths[i], K - start));
  }
  return out;
}

int members_below(const Schedule& s, int K) {
  int n = 0;
  for (const auto& [start, len] : blocks_below(s, K)) {
    (void)start;
    n += len;
  }
  return n;
}

double lambda_at(const RateInputs& in, int k) {
  require(k >= 0 && static_cast<std::size_t>(k) < in.lambda_sequence.size(),
          "bounds: lambda_sequence has no entry for teleport iteration " + std::to_string(k));
  return in.lambda_sequence[static_cast<std::size_t>(k)];
}

double gap_at(const std::vector<double>& gaps, int j) {
  require(j >= 0 && static_cast<std::size_t>(j) < gaps.size(),
          "bounds: missing observed gap for iteration " + std::to_string(j));
  return gaps[static_cast<std::size_t>(j)];
}

/// 1/delta with delta = 0 treated as an infinitely strong certificate.
double inverse_gap(double delta) { return delta > 0.0 ? 1.0 / delta : kNoBound; }

bool is_every_other(const Schedule& s, int K) {
  if (s.block_starts.empty()) return false;
  return s.members(K) == Schedule::every_other(K).members(K);
}

}  // namespace

double RateInputs::eta_at(int k) const {
  if (eta_sequence.empty()) return eta;
  require(k >= 0 && static_cast<std::size_t>(k) < eta_sequence.size(), "bounds: eta_sequence too short");
  return eta_sequence[static_cast<std::size_t>(k)];
}

BoundCurve convex_bound(const RateInputs& in) {
  check_inputs(in);
  require(in.eta > 0.0 && in.eta < 2.0 / in.L, "convex_bound: need 0 < eta < 2/L");
  BoundCurve c{"convex_fixed_step", std::vector<double>(static_cast<std::size_t>(in.K) + 1, kNoBound)};
  const double xi = in.eta * (2.0 - in.L * in.eta);
  for (int k = 1; k <= in.K; ++k) c.bound[static_cast<std::size_t>(k)] = 2.0 * in.R * in.R / (k * xi);
  return c;
}

StronglyConvexBounds strongly_convex_bounds(const RateInputs& in) {
  check_inputs(in);
  require(in.mu > 0.0, "strongly_convex_bounds: mu must be > 0");
  require(in.delta0 >= 0.0, "strongly_convex_bounds: delta0 must be >= 0");
  StronglyConvexBounds out;
  out.slow.tag = "sc_slow";
  out.nonexpansive.tag = "sc_nonexpansive";
  double slow = in.delta0;
  double fast = in.L / in.mu * in.delta0;
  out.slow.bound.push_back(slow);
  out.nonexpansive.bound.push_back(fast);
  for (int i = 0; i < in.K; ++i) {
    const double eta = in.eta_at(i);
    require(eta > 0.0 && eta < 2.0 / in.L, "strongly_convex_bounds: need 0 < eta_i < 2/L");
    slow *= 1.0 - 2.0 * in.mu * eta * (1.0 - eta * in.L / 2.0);
    const double a = 1.0 - eta * in.L;
    const double b = 1.0 - eta * in.mu;
    fast *= std::max(a * a, b * b);
    out.slow.bound.push_back(slow);
    out.nonexpansive.bound.push_back(fast);
  }
  return out;
}

double stability_ratio(double L_tilde, double mu_tilde) {
  require(mu_tilde > 0.0 && mu_tilde <= L_tilde, "stability_ratio: need 0 < mu~ <= L~");
  if (L_tilde == mu_tilde) return kNoBound;
  return L_tilde / (L_tilde - mu_tilde);
}

namespace {
double stability_ls_at(const RateInputs& in, const std::vector<double>& gaps, int K) {
  const double r = stability_ratio(in.L_tilde, in.mu_tilde);
  const double c = 2.0 * in.R * in.R * in.L;
  const int M = K - members_below(in.schedule, K);
  double sum = 0.0;
  for (const auto& [k, b] : blocks_below(in.schedule, K)) {
    const double gain = std::pow(r, b) - 1.0;
    sum += gain * inverse_gap(gap_at(gaps, k - 1));
  }
  const double denom = M + c * sum;
  if (std::isinf(denom)) return 0.0;
  return denom > 0.0 ? c / denom : kNoBound;
}
}  // namespace

double stability_ls_bound(const RateInputs& in, const std::vector<double>& gaps) {
  check_inputs(in);
  require_zero_not_in_t(in.schedule);
  return stability_ls_at(in, gaps, in.K);
}

BoundCurve stability_ls_curve(const RateInputs& in, const std::vector<double>& gaps) {
  check_inputs(in);
  require_zero_not_in_t(in.schedule);
  BoundCurve c{"stability_ls", {}};
  for (int k = 0; k <= in.K; ++k) c.bound.push_back(stability_ls_at(in, gaps, k));
  return c;
}

double every_other_closed_form(double R, double L, double L_tilde, double mu_tilde, double K) {
  const double r = stability_ratio(L_tilde, mu_tilde);
  if (std::isinf(r)) return 0.0;
  const double denom = (L_tilde - mu_tilde) * (std::pow(r, K / 2.0) - 1.0);
  return denom > 0.0 ? 2.0 * R * R * L * mu_tilde / denom : kNoBound;
}

CombinedLsBounds combined_ls_bound(const RateInputs& in) {
  check_inputs(in);
  require_zero_not_in_t(in.schedule);
  const double r = stability_ratio(in.L_tilde, in.mu_tilde);
  const double c = 2.0 * in.R * in.R * in.L;
  CombinedLsBounds out;
  out.general.tag = "combined_ls";
  for (int K = 0; K <= in.K; ++K) {
    double sum = 0.0;
    for (int k = 1; k <= K; ++k) {
      if (schedule_member(in.schedule, k)) continue;
      sum += std::pow(r, teleports_after(in.schedule, k, K));
    }
    out.general.bound.push_back(std::isinf(sum) ? 0.0 : (sum > 0.0 ? c / sum : kNoBound));
  }
  if (is_every_other(in.schedule, in.K)) {
    BoundCurve eo{"every_other_ls", {}};
    for (int K = 0; K <= in.K; ++K) {
      eo.bound.push_back(every_other_closed_form(in.R, in.L, in.L_tilde, in.mu_tilde, K));
    }
    out.every_other = std::move(eo);
  }
  return out;
}

double stability_beta(double lambda, double eta, double L_tilde, double mu_tilde) {
  const double c = 1.0 + lambda * eta * mu_tilde * (L_tilde * lambda * eta - 2.0);
  require(c > 0.0, "stability_beta: contraction factor must be positive");
  return 1.0 / c;
}

double stability_psi(const RateInputs& in, int block_start, int block_length) {
  double prod = 1.0;
  for (int i = block_start; i < block_start + block_length; ++i) {
    prod *= stability_beta(lambda_at(in, i), in.eta, in.L_tilde, in.mu_tilde);
  }
  return prod - 1.0;
}

FixedStepBounds fixed_step_bounds(const RateInputs& in, const std::vector<double>& gaps) {
  check_inputs(in);
  require_zero_not_in_t(in.schedule);
  require(in.eta > 0.0 && in.eta < 2.0 / (in.L * in.L_tilde), "fixed_step_bounds: need 0 < eta < 2/(L L~)");
  for (int k : in.schedule.members(in.K)) {
    const double lam = lambda_at(in, k);
    require(lam >= 0.0 && lam <= in.L * (1.0 + 1e-12), "fixed_step_bounds: lambda_k must lie in [0, L]");
  }
  const double xi = in.eta * (2.0 - in.L * in.eta);
  const double R2 = 2.0 * in.R * in.R;
  FixedStepBounds out;
  out.blockwise.tag = "stability_fixed_blockwise";
  out.combined.tag = "stability_fixed_combined";
  for (int K = 0; K <= in.K; ++K) {
    const int M = K - members_below(in.schedule, K);
    double sum = 0.0;
    for (const auto& [k, b] : blocks_below(in.schedule, K)) {
      sum += stability_psi(in, k, b) * inverse_gap(gap_at(gaps, k - 1));
    }
    const double denom = xi * M + R2 * sum;
    out.blockwise.bound.push_back(std::isinf(denom) ? 0.0 : (denom > 0.0 ? R2 / denom : kNoBound));

    double weights = 0.0;
    for (int k = 1; k <= K; ++k) {
      if (schedule_member(in.schedule, k)) continue;
      double w = 1.0;
      for (int i : in.schedule.members(K)) {
        if (i > k) w *= stability_beta(lambda_at(in, i), in.eta, in.L_tilde, in.mu_tilde);
      }
      weights += w;
    }
    out.combined.bound.push_back(weights > 0.0 ? R2 / (xi * weights) : kNoBound);
  }
  return out;
}

NewtonCollinearity newton_collinearity(const Objective& obj, const Vector& w, double tol) {
  const Vector g = obj.gradient(w);
  const double gnorm = g.norm();
  require(gnorm > 0.0, "newton_collinearity: zero gradient");
  NewtonCollinearity out;
  const Vector Hg = obj.hvp(w, g);
  out.lambda = g.dot(Hg) / (gnorm * gnorm);
  if (Hg.norm() <= 1e-10 * gnorm) return out;

  const Index d = w.size();
  Vector x = Vector::Zero(d);
  Vector r = g;
  Vector p = r;
  double rr = r.squaredNorm();
  const int max_iters = static_cast<int>(10 * d);
  for (int it = 0; it < max_iters && std::sqrt(rr) > tol * gnorm; ++it) {
    const Vector Hp = obj.hvp(w, p);
    const double curv = p.dot(Hp);
    if (!(curv > 1e-14 * p.squaredNorm() * std::max(1.0, std::abs(out.lambda)))) return out;
    const double alpha = rr / curv;
    x += alpha * p;
    r -= alpha * Hp;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++out.cg_iters;
  }
  if (std::sqrt(rr) > 1e-6 * gnorm) return out;
  out.cosine = x.dot(g) / (x.norm() * gnorm);
  out.defined = true;
  return out;
}

ProgressReport stability_progress_check(const Trace& trace, const RateInputs& in, double f_star, bool line_search,
                                        double tol) {
  require(std::isfinite(f_star), "stability_progress_check: f_star required");
  require(in.mu_tilde > 0.0 && in.mu_tilde <= in.L_tilde, "stability_progress_check: need 0 < mu~ <= L~");
  ProgressReport rep;
  const auto& recs = trace.records;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
    const TraceRecord& r = recs[i];
    if (!r.teleport) continue;
    double factor = 0.0;
    if (line_search) {
      factor = 1.0 - in.mu_tilde / in.L_tilde;
    } else {
      const double eta = r.step_size;
      factor = 1.0 + 2.0 * in.mu_tilde * r.lambda * eta * (eta * r.lambda * in.L_tilde / 2.0 - 1.0);
    }
    const double dk = r.f - f_star;
    const double dn = recs[i + 1].f - f_star;
    const double allowed = factor * dk + tol * (1.0 + std::abs(dk));
    ++rep.checked;
    if (dn > allowed) rep.violations.push_back({r.k, dk, dn, allowed});
  }
  return rep;
}

double estimate_radius(const Objective& obj, const Vector& w_star, const Vector& w0, const std::vector<Vector>& points,
                       double level, int probes, std::uint64_t seed) {
  double R = (w0 - w_star).norm();
  for (const Vector& p : points) R = std::max(R, (p - w_star).norm());
  if (obj.value(w_star) >= level) return R;
  std::mt19937_64 rng(seed);
  const double t0 = std::max(R, 1e-8);
  for (int i = 0; i < probes; ++i) {
    Vector u = gaussian_vector(w_star.size(), rng);
    const double un = u.norm();
    if (un == 0.0) continue;
    u /= un;
    double lo = 0.0;
    double hi = t0;
    bool found = false;
    for (int j = 0; j < 200; ++j) {
      const double f = obj.value(w_star + hi * u);
      if (!std::isfinite(f)) break;
      if (f >= level) {
        found = true;
        break;
      }
      lo = hi;
      hi *= 2.0;
    }
    if (!found) continue;
    for (int j = 0; j < 100 && hi - lo > 1e-12 * hi; ++j) {
      const double mid = 0.5 * (lo + hi);
      if (obj.value(w_star + mid * u) >= level) hi = mid;
      else lo = mid;
    }
    R = std::max(R, hi);
  }
  return R;
}

std::vector<double> trace_gaps(const Trace& trace, double f_star) {
  std::vector<double> gaps;
  gaps.reserve(trace.records.size());
  for (const TraceRecord& r : trace.records) gaps.push_back(r.f - f_star);
  return gaps;
}

void fill_from_trace(RateInputs& in, const Trace& trace) {
  in.eta_sequence.clear();
  in.lambda_sequence.assign(trace.records.size(), 0.0);
  for (const TraceRecord& r : trace.records) {
    in.eta_sequence.push_back(r.step_size);
    if (r.teleport) in.lambda_sequence[static_cast<std::size_t>(r.k)] = r.lambda;
  }
  in.K = trace.records.empty() ? 0 : trace.records.back().k;
}

int first_envelope_violation(const std::vector<double>& gaps, const BoundCurve& curve, double rel_tol,
                             double abs_tol) {
  const std::size_t n = std::min(gaps.size(), curve.bound.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double b = curve.bound[k];
    if (std::isinf(b)) continue;
    if (gaps[k] > b * (1.0 + rel_tol) + abs_tol) return static_cast<int>(k);
  }
  return -1;
}

void write_bound_csv(std::ostream& out, const std::vector<BoundCurve>& curves) {
  out << "k,bound,theorem_tag\n";
  for (const BoundCurve& c : curves) {
    for (std::size_t k = 0; k < c.bound.size(); ++k) out << k << ',' << fmt_real(c.bound[k]) << ',' << c.tag << '\n';
  }
}

}  // namespace levelset
