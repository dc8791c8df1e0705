#include "levelset/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "levelset/io.hpp"

namespace levelset {

// ---------------------------------------------------------------- schedules

void Schedule::validate() const {
  require(block_starts.size() == block_lengths.size(), "schedule: starts and lengths differ in size");
  for (std::size_t i = 0; i < block_starts.size(); ++i) {
    require(block_starts[i] >= 0, "schedule: block starts must be >= 0");
    require(block_lengths[i] >= 1, "schedule: block lengths must be >= 1");
    if (i > 0) {
      require(block_starts[i - 1] + block_lengths[i - 1] < block_starts[i],
              "schedule: blocks must be sorted and separated by at least one plain step");
    }
  }
}

int Schedule::total() const { return std::accumulate(block_lengths.begin(), block_lengths.end(), 0); }

std::vector<int> Schedule::members(int limit) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < block_starts.size(); ++i) {
    for (int j = 0; j < block_lengths[i]; ++j) {
      const int k = block_starts[i] + j;
      if (k < limit) out.push_back(k);
    }
  }
  return out;
}

Schedule Schedule::every_other(int K) { return every_nth(1, 2, K, 1); }

Schedule Schedule::every_nth(int start, int period, int K, int block) {
  require(start >= 0 && period >= 1 && block >= 1, "schedule: bad preset parameters");
  require(block < period, "schedule: block must be shorter than the period");
  Schedule s;
  for (int k = start; k < K; k += period) {
    s.block_starts.push_back(k);
    s.block_lengths.push_back(block);
  }
  return s;
}

bool schedule_member(const Schedule& schedule, int k) {
  require(k >= 0, "schedule_member: k must be >= 0");
  auto it = std::upper_bound(schedule.block_starts.begin(), schedule.block_starts.end(), k);
  if (it == schedule.block_starts.begin()) return false;
  const auto idx = static_cast<std::size_t>(std::distance(schedule.block_starts.begin(), it) - 1);
  return k < schedule.block_starts[idx] + schedule.block_lengths[idx];
}

int teleports_after(const Schedule& schedule, int k, int K) {
  int n = 0;
  for (int i : schedule.members(K)) {
    if (i > k) ++n;
  }
  return n;
}

// ---------------------------------------------------------------- step rules

StepRule StepRule::fixed(double eta) {
  StepRule r;
  r.kind = StepKind::kFixed;
  r.eta = eta;
  return r;
}

StepRule StepRule::armijo_rule(double eta_init) {
  StepRule r;
  r.kind = StepKind::kArmijo;
  r.eta = eta_init;
  return r;
}

StepRule StepRule::polyak(double f_star, double eta_max) {
  StepRule r;
  r.kind = StepKind::kPolyak;
  r.f_star = f_star;
  r.eta = eta_max;
  return r;
}

StepRule StepRule::normalized(double eta) {
  StepRule r;
  r.kind = StepKind::kNormalized;
  r.eta = eta;
  return r;
}

StepRule StepRule::momentum(double eta, double beta, double dampening) {
  StepRule r;
  r.kind = StepKind::kMomentum;
  r.eta = eta;
  r.beta = beta;
  r.dampening = dampening;
  return r;
}

void StepRule::validate() const {
  require(eta > 0.0 && std::isfinite(eta), "step rule: eta must be > 0");
  require(beta >= 0.0 && beta < 1.0, "step rule: beta must be in [0, 1)");
  require(dampening >= 0.0 && dampening < 1.0, "step rule: dampening must be in [0, 1)");
  require(armijo.forward > 1.0, "armijo: forward factor must be > 1");
  require(armijo.backward > 0.0 && armijo.backward < 1.0, "armijo: backward factor must be in (0, 1)");
  require(armijo.c > 0.0 && armijo.c < 1.0, "armijo: c must be in (0, 1)");
  require(armijo.max_growths >= 0, "armijo: max_growths must be >= 0");
  require(armijo.floor > 0.0, "armijo: floor must be > 0");
  require(armijo.refine_tol >= 0.0, "armijo: refine_tol must be >= 0");
}

std::string StepRule::name() const { return to_string(kind); }

StepKind parse_step_kind(const std::string& name) {
  if (name == "fixed" || name == "gd") return StepKind::kFixed;
  if (name == "armijo" || name == "ls") return StepKind::kArmijo;
  if (name == "polyak" || name == "sps") return StepKind::kPolyak;
  if (name == "normalized") return StepKind::kNormalized;
  if (name == "momentum") return StepKind::kMomentum;
  throw InvalidArgument("unknown step rule '" + name + "'");
}

std::string to_string(StepKind kind) {
  switch (kind) {
    case StepKind::kFixed: return "fixed";
    case StepKind::kArmijo: return "armijo";
    case StepKind::kPolyak: return "polyak";
    case StepKind::kNormalized: return "normalized";
    case StepKind::kMomentum: return "momentum";
  }
  return "unknown";
}

ArmijoResult armijo_search(const std::function<double(double)>& value_at, double f0, double grad_sq,
                           double eta_init, const ArmijoParams& p) {
  require(eta_init > 0.0, "armijo: initial step must be > 0");
  require(grad_sq > 0.0, "armijo: zero gradient");
  ArmijoResult out;
  auto ok = [&](double eta) {
    ++out.evaluations;
    const double v = value_at(eta);
    return std::isfinite(v) && v <= f0 - p.c * eta * grad_sq;
  };

  double lo = eta_init;
  double hi = 0.0;
  if (ok(eta_init)) {
    int growths = 0;
    for (;;) {
      if (growths >= p.max_growths) {
        out.eta = lo;
        out.hit_cap = true;
        return out;
      }
      const double next = lo * p.forward;
      if (!ok(next)) {
        hi = next;
        break;
      }
      lo = next;
      ++growths;
    }
  } else {
    hi = eta_init;
    for (;;) {
      lo = hi * p.backward;
      if (lo < p.floor) {
        out.eta = p.floor;
        out.hit_floor = true;
        return out;
      }
      if (ok(lo)) break;
      hi = lo;
    }
  }
  while (p.refine_tol > 0.0 && hi - lo > p.refine_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.eta = lo;
  return out;
}

double armijo_step(const Objective& obj, const Vector& w, const Vector& g, double eta_init,
                   const ArmijoParams& params) {
  const double f0 = obj.value(w);
  return armijo_search([&](double eta) { return obj.value(w - eta * g); }, f0, g.squaredNorm(), eta_init, params)
      .eta;
}

double polyak_step(double f_w, double f_star, double grad_sq) {
  require(grad_sq > 0.0, "polyak: zero gradient");
  return positive_part((f_w - f_star) / grad_sq);
}

// ---------------------------------------------------------------- run

void RunConfig::validate() const {
  require(max_iters >= 1, "run: max_iters must be >= 1");
  require(batch_size >= 0, "run: batch_size must be >= 0");
  require(grad_tol >= 0.0, "run: grad_tol must be >= 0");
}

double Trace::min_f() const {
  double m = std::numeric_limits<double>::infinity();
  for (const TraceRecord& r : records) m = std::min(m, r.f);
  return m;
}

namespace {

class BatchSampler {
 public:
  BatchSampler(Index n, Index batch, std::uint64_t seed) : n_(n), batch_(std::min(batch, n)), rng_(seed), perm_(n) {
    std::iota(perm_.begin(), perm_.end(), Index{0});
  }

  Index iters_per_epoch() const { return (n_ + batch_ - 1) / batch_; }

  /// Rows for the next iteration; reshuffles at epoch boundaries.
  std::span<const Index> next() {
    if (pos_ == 0) shuffle();
    const Index len = std::min(batch_, n_ - pos_);
    std::span<const Index> rows(perm_.data() + pos_, static_cast<std::size_t>(len));
    pos_ += len;
    if (pos_ >= n_) pos_ = 0;
    return rows;
  }

 private:
  void shuffle() {
    for (Index i = n_ - 1; i > 0; --i) {
      const auto j = static_cast<Index>(uniform_index(rng_, static_cast<std::uint64_t>(i + 1)));
      std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
    }
  }

  Index n_;
  Index batch_;
  std::mt19937_64 rng_;
  std::vector<Index> perm_;
  Index pos_ = 0;
};

Schedule to_iterations(const Schedule& s, Index iters_per_epoch) {
  Schedule out = s;
  for (int& k : out.block_starts) k = static_cast<int>(k * iters_per_epoch);
  return out;
}

}  // namespace

Trace run(const Objective& obj, const Vector& w0, const StepRule& rule, const Schedule& schedule,
          const TeleportConfig& tconfig, const RunConfig& rconfig, const RunOptions& options) {
  rule.validate();
  schedule.validate();
  rconfig.validate();
  tconfig.validate();
  require(w0.size() == obj.dimension(), "run: dimension mismatch");
  require_finite(w0, "run: w0");

  Trace trace;
  trace.stochastic = rconfig.batch_size > 0;
  if (trace.stochastic) {
    require(obj.num_samples() > 0, "run: batch_size > 0 needs a data-backed objective");
  }
  BatchSampler sampler(std::max<Index>(obj.num_samples(), 1), std::max<Index>(rconfig.batch_size, 1), rconfig.seed);
  const Index ipe = trace.stochastic ? sampler.iters_per_epoch() : 1;
  const Schedule sched =
      trace.stochastic && rconfig.schedule_unit == ScheduleUnit::kEpochs ? to_iterations(schedule, ipe) : schedule;
  sched.validate();

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    if (!rconfig.record_time) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Vector w = w0;
  Vector m = Vector::Zero(w.size());
  double eta_prev = rule.eta;
  const int K = rconfig.max_iters;
  trace.records.reserve(static_cast<std::size_t>(K) + 1);

  for (int k = 0; k <= K; ++k) {
    TraceRecord rec;
    rec.k = k;
    rec.epoch = static_cast<int>(k / ipe);
    rec.epoch_start = trace.stochastic && k % ipe == 0;
    rec.f = obj.value(w);
    if (!std::isfinite(rec.f)) {
      trace.aborted = true;
      trace.diagnostic = "non-finite objective at k=" + std::to_string(k);
      break;
    }

    Vector w_plus = w;
    rec.f_plus = rec.f;
    const bool teleport = k < K && schedule_member(sched, k);
    if (teleport) {
      TeleportResult tr = solve_teleport(obj, w, tconfig, options.keep_teleport_points);
      rec.teleport = true;
      rec.teleport_iters = tr.iterations;
      rec.kkt_residual = tr.kkt_residual;
      rec.lambda = tr.lambda;
      rec.teleport_converged = tr.converged;
      w_plus = std::move(tr.x_plus);
      rec.f_plus = obj.value(w_plus);
      if (options.keep_teleport_points) {
        for (Vector& x : tr.iterates) trace.teleport_points.push_back(std::move(x));
      }
    }
    const Vector g_full = obj.gradient(w_plus);
    rec.grad_norm = g_full.norm();

    const bool last = k == K || (rconfig.grad_tol > 0.0 && rec.grad_norm <= rconfig.grad_tol);
    if (last) {
      rec.cumulative_time = elapsed();
      trace.records.push_back(rec);
      w = w_plus;
      break;
    }

    double fb = rec.f_plus;
    Vector g = g_full;
    std::span<const Index> rows;
    if (trace.stochastic) {
      rows = sampler.next();
      ValueGrad vg = obj.batch_value_grad(w_plus, rows);
      fb = vg.value;
      g = std::move(vg.grad);
    }
    const double grad_sq = g.squaredNorm();

    double eta = 0.0;
    switch (rule.kind) {
      case StepKind::kFixed:
        eta = rule.eta;
        w = w_plus - eta * g;
        break;
      case StepKind::kArmijo: {
        if (grad_sq > 0.0) {
          auto value_at = [&](double e) {
            const Vector trial = w_plus - e * g;
            return trace.stochastic ? obj.batch_value_grad(trial, rows).value : obj.value(trial);
          };
          const ArmijoResult ar = armijo_search(value_at, fb, grad_sq, eta_prev, rule.armijo);
          trace.armijo_floor_hit = trace.armijo_floor_hit || ar.hit_floor;
          eta = ar.eta;
          eta_prev = ar.eta;
        }
        w = w_plus - eta * g;
        break;
      }
      case StepKind::kPolyak:
        eta = grad_sq > 0.0 ? std::min(polyak_step(fb, rule.f_star, grad_sq), rule.eta) : 0.0;
        w = w_plus - eta * g;
        break;
      case StepKind::kNormalized:
        eta = rule.eta;
        if (grad_sq > 0.0) w = w_plus - eta * g / std::sqrt(grad_sq);
        else w = w_plus;
        break;
      case StepKind::kMomentum:
        eta = rule.eta;
        m = rule.beta * m + (1.0 - rule.dampening) * g;
        w = w_plus - eta * m;
        break;
    }
    rec.step_size = eta;
    rec.cumulative_time = elapsed();
    trace.records.push_back(rec);
    if (!w.allFinite()) {
      trace.aborted = true;
      trace.diagnostic = "non-finite iterate after step k=" + std::to_string(k);
      break;
    }
  }
  trace.w_final = w;
  return trace;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "k,phase,f,grad_norm,step_size,teleport_iters,kkt_residual,cumulative_time";
  if (trace.stochastic) out << ",epoch_start";
  out << '\n';
  for (const TraceRecord& r : trace.records) {
    out << r.k << ',' << (r.teleport ? "teleport" : "gd") << ',' << fmt_real(r.f) << ',' << fmt_real(r.grad_norm)
        << ',' << fmt_real(r.step_size) << ',' << r.teleport_iters << ',' << fmt_real(r.kkt_residual) << ','
        << fmt_real(r.cumulative_time);
    if (trace.stochastic) out << ',' << (r.epoch_start ? 1 : 0);
    out << '\n';
  }
}

}  // namespace levelset
