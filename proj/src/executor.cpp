// Copyright 2026 The APALM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "apalm/executor.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "apalm/error.hpp"
#include "apalm/random.hpp"

namespace apalm {
namespace {

MonitorOptions monitor_options(const SolverConfig& cfg, double M,
                               std::size_t m, std::size_t rho) {
  MonitorOptions o;
  o.lyapunov.variant = cfg.variant;
  o.lyapunov.M = M;
  o.lyapunov.tau = cfg.tau;
  o.lyapunov.m = m;
  o.lyapunov.rho_tau = rho;
  o.c = cfg.c;
  o.residual_stride = cfg.effective_residual_stride();
  o.tol_residual = cfg.tol_residual;
  if (cfg.linesearch.enabled) o.linesearch_C = cfg.linesearch.C;
  return o;
}

StepRule make_rule(const SolverConfig& cfg, double M, std::size_t m,
                   std::size_t rho) {
  StepRule r;
  r.variant = cfg.variant;
  r.c = cfg.c;
  r.M = M;
  r.tau = cfg.tau;
  r.m = m;
  r.rho_tau = rho;
  return r;
}

}  // namespace

Schedule make_schedule(const SolverConfig& cfg, std::size_t m,
                       std::uint64_t length, DelayPattern pattern,
                       std::uint64_t seed) {
  Schedule s;
  s.indices = index_sequence(cfg, m, length);
  Rng rng(seed);
  s.delays.reserve(length);
  for (std::uint64_t k = 0; k < length; ++k) {
    DelayRecord d;
    d.k = k;
    d.d.assign(m, 0);
    for (auto& v : d.d) {
      switch (pattern) {
        case DelayPattern::kZero:
          break;
        case DelayPattern::kMax:
          v = cfg.tau;
          break;
        case DelayPattern::kRandom:
          v = uniform_index(rng, cfg.tau + 1);
          break;
      }
    }
    s.delays.push_back(std::move(d));
  }
  return s;
}

Trace replay(const Problem& problem, const BlockVector& x0,
             const SolverConfig& cfg, const ReplayOptions& opts) {
  const std::size_t m = problem.num_blocks();
  cfg.validate(m);
  const Schedule& script = opts.script;
  const std::size_t len = script.size();
  if (len == 0 || script.delays.size() != len) {
    throw ContractViolation("replay script is empty or malformed");
  }
  if (!opts.cyclic && len < cfg.max_iters) {
    throw ContractViolation("replay script has " + std::to_string(len) +
                            " steps but max_iters is " +
                            std::to_string(cfg.max_iters) +
                            "; mark it cyclic or lower max_iters");
  }
  const std::uint64_t n = opts.cyclic ? cfg.max_iters
                                      : std::min<std::uint64_t>(cfg.max_iters, len);
  for (std::size_t q = 0; q < len; ++q) {
    if (script.indices[q] >= m) {
      throw ContractViolation("script block index out of range at k=" +
                              std::to_string(q));
    }
    if (script.delays[q].d.size() != m) {
      throw ContractViolation("script delay vector has wrong length at k=" +
                              std::to_string(q));
    }
    if (script.delays[q].max_delay() > cfg.tau) {
      throw StalenessError("script delay " +
                           std::to_string(script.delays[q].max_delay()) +
                           " at k=" + std::to_string(q) + " exceeds tau=" +
                           std::to_string(cfg.tau));
    }
  }
  std::vector<std::size_t> indices(n);
  for (std::uint64_t k = 0; k < n; ++k) indices[k] = script.indices[k % len];

  const double M = resolve_global_lipschitz(problem, x0);
  std::size_t rho = 0;
  if (cfg.variant == Variant::kDeterministic) {
    rho = rho_tau(indices, cfg.tau);
    const std::size_t K = cfg.declared_K(m);
    if (!essentially_cyclic(indices, m, K)) {
      throw ContractViolation("script is not essentially cyclic with K=" +
                              std::to_string(K));
    }
  }
  const StepRule rule = make_rule(cfg, M, m, rho);
  MonitorOptions mopts = monitor_options(cfg, M, m, rho);
  mopts.stochastic_terms_every_row = opts.stochastic_terms_every_row;
  Monitor monitor(problem, x0, mopts);
  IterateHistory history(x0, cfg.tau + cfg.declared_K(m) + 10);
  XiAccumulator xi(cfg.linesearch.enabled ? mopts.lyapunov.coefficient() : 0.0,
                   cfg.tau);
  std::vector<double> accepted(m, 0.0);

  for (std::uint64_t k = 0; k < n; ++k) {
    const std::size_t j = indices[k];
    DelayRecord d{k, script.delays[k % len].d};
    StepOutcome out;
    if (cfg.linesearch.enabled) {
      const BlockVector snapshot = history.compose_delayed(k, d.d);
      // Successive acceptances compound: the trial is grow^p times the
      // formula stepsize after p accepted steps without a shrink.
      const double gamma0 = std::max(
          rule.gamma(coordinate_lipschitz(problem, snapshot, j),
                     prox_bound(problem.reg(j))),
          accepted[j]);
      out = linesearch_step(problem, history, k, j, d, gamma0, cfg.linesearch,
                            rule, xi, monitor.rows().back().psi);
      accepted[j] = out.gamma;
    } else {
      const BlockVector snapshot = history.compose_delayed(k, d.d);
      const auto anchor = history.block_at(j, static_cast<std::int64_t>(k));
      out = ruled_step(problem, rule, snapshot, anchor, j);
    }
    history.commit(j, out.new_block);
    xi.push(out.step_norm * out.step_norm);
    monitor.consume(CommitRecord{k, std::move(d), std::move(out)});
    if (monitor.converged()) break;
  }
  return monitor.finish();
}

Trace parallel_run(const Problem& problem, const BlockVector& x0,
                   const SolverConfig& cfg_in, const ParallelConfig& pcfg) {
  if (pcfg.workers == 0) throw ConfigError("workers must be at least 1");
  if (cfg_in.linesearch.enabled) {
    throw ConfigError("line search is only supported by the replay executor");
  }
  SolverConfig cfg = cfg_in;
  cfg.tau = pcfg.resolved_tau_max();
  const std::size_t m = problem.num_blocks();
  cfg.validate(m);
  const std::size_t tau_max = cfg.tau;
  const std::uint64_t n = cfg.max_iters;

  const std::vector<std::size_t> indices = index_sequence(cfg, m, n);
  const double M = resolve_global_lipschitz(problem, x0);
  const std::size_t rho =
      cfg.variant == Variant::kDeterministic ? rho_tau(indices, tau_max) : 0;
  const StepRule rule = make_rule(cfg, M, m, rho);
  Monitor monitor(problem, x0, monitor_options(cfg, M, m, rho));
  IterateHistory store(x0, tau_max + cfg.declared_K(m) + pcfg.workers + 10);

  std::mutex mu;  // guards `committed` and the turn order
  std::condition_variable turn_cv;
  std::uint64_t committed = 0;
  std::atomic<std::uint64_t> next_ticket{0};
  std::atomic<bool> stop{false};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  std::mutex error_mu;

  std::mutex qmu;
  std::condition_variable q_cv;
  std::deque<CommitRecord> queue;
  bool producers_done = false;

  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard<std::mutex> lk(error_mu);
      if (!error) error = e;
    }
    abort = true;
    { std::lock_guard<std::mutex> lk(mu); }
    turn_cv.notify_all();
    { std::lock_guard<std::mutex> lk(qmu); }
    q_cv.notify_all();
  };

  auto worker = [&]() {
    try {
      std::vector<std::uint64_t> stamps(m);
      BlockVector snapshot(problem.space());
      for (;;) {
        if (stop || abort) return;
        const std::uint64_t t = next_ticket.fetch_add(1);
        if (t >= n) return;
        const std::size_t j = indices[t];
        if (t > tau_max) {
          std::unique_lock<std::mutex> lk(mu);
          if (pcfg.throttle == Throttle::kError) {
            if (committed + tau_max < t) {
              throw StalenessError("read for iteration " + std::to_string(t) +
                                   " would be staler than tau_max=" +
                                   std::to_string(tau_max));
            }
          } else {
            turn_cv.wait(lk, [&] { return committed + tau_max >= t || abort; });
          }
          if (abort) return;
        }
        for (std::size_t b = 0; b < m; ++b) {
          BlockRead r = store.read_block(b);
          stamps[b] = r.stamp;
          snapshot.set_block(b, r.value);
        }
        StepOutcome out =
            ruled_step(problem, rule, snapshot, snapshot.block(j), j);
        if (pcfg.read_delay.count() > 0) std::this_thread::sleep_for(pcfg.read_delay);

        std::unique_lock<std::mutex> lk(mu);
        turn_cv.wait(lk, [&] { return committed == t || abort; });
        if (abort) return;
        BlockRead cur = store.read_block(j);
        if (cur.stamp != stamps[j]) {
          // Another ticket rewrote block j meanwhile: re-anchor on the
          // current value, keeping the stale gradient and stepsize.
          const double L = out.lipschitz;
          out = prox_gradient_step(problem, j, cur.value, std::move(out.gradient),
                                   out.gamma);
          out.lipschitz = L;
        }
        DelayRecord d;
        d.k = t;
        d.d.resize(m);
        for (std::size_t b = 0; b < m; ++b) {
          d.d[b] = store.realized_delay(b, stamps[b], t);
        }
        store.commit(j, out.new_block);
        {
          std::lock_guard<std::mutex> qlk(qmu);
          queue.push_back(CommitRecord{t, std::move(d), std::move(out)});
        }
        q_cv.notify_one();
        committed = t + 1;
        lk.unlock();
        turn_cv.notify_all();
      }
    } catch (...) {
      fail(std::current_exception());
    }
  };

  std::thread monitor_thread([&]() {
    try {
      for (;;) {
        std::unique_lock<std::mutex> lk(qmu);
        q_cv.wait(lk, [&] { return !queue.empty() || producers_done || abort; });
        if (abort) return;
        if (queue.empty()) return;
        CommitRecord rec = std::move(queue.front());
        queue.pop_front();
        lk.unlock();
        if (stop) continue;  // drain records committed after convergence
        monitor.consume(rec);
        if (monitor.converged()) stop = true;
      }
    } catch (...) {
      fail(std::current_exception());
    }
  });

  std::vector<std::thread> workers;
  workers.reserve(pcfg.workers);
  for (std::size_t w = 0; w < pcfg.workers; ++w) workers.emplace_back(worker);
  for (auto& th : workers) th.join();
  {
    std::lock_guard<std::mutex> lk(qmu);
    producers_done = true;
  }
  q_cv.notify_all();
  monitor_thread.join();
  if (error) std::rethrow_exception(error);
  return monitor.finish();
}

Trace run(const Problem& problem, const BlockVector& x0,
          const SolverConfig& cfg, const ExecutorConfig& exec) {
  if (const auto* r = std::get_if<ReplayOptions>(&exec)) {
    return replay(problem, x0, cfg, *r);
  }
  return parallel_run(problem, x0, cfg, std::get<ParallelConfig>(exec));
}

}  // namespace apalm
