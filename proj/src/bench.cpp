#include "tuplechain/bench.hpp"

#include <boost/lockfree/spsc_queue.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace tuplechain {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Emits at most rate * elapsed + burst items.
class TokenBucket {
 public:
  TokenBucket(double rate, Clock::time_point start)
      : rate_(rate), burst_(std::clamp(rate * 1e-3, 1.0, 1024.0)), start_(start) {}

  bool take(std::uint64_t sent) const { return static_cast<double>(sent) < rate_ * seconds_since(start_) + burst_; }

  void wait(std::uint64_t sent) const {
    const double due = (static_cast<double>(sent) - burst_ + 1) / rate_;
    const double ahead = due - seconds_since(start_);
    if (ahead > 50e-6) std::this_thread::sleep_for(std::chrono::duration<double>(std::min(ahead, 1e-3)));
    else std::this_thread::yield();
  }

 private:
  double rate_, burst_;
  Clock::time_point start_;
};

struct Shared {
  std::atomic<bool> tester_done{false};
  std::atomic<bool> updater_done{false};
  std::atomic<std::uint64_t> keys_offered{0}, keys_dropped{0};
  std::atomic<std::uint64_t> updates_offered{0}, updates_dropped{0};
  std::atomic<std::uint64_t> lookups{0}, updates_applied{0};
};

template <typename Queue>
void run_source(Queue& q, double rate, double duration, std::uint64_t limit, std::size_t cycle, bool lossless,
                std::atomic<std::uint64_t>& offered, std::atomic<std::uint64_t>& dropped, Clock::time_point start) {
  TokenBucket bucket(rate, start);
  std::uint64_t sent = 0, lost = 0;
  while ((limit == 0 || sent < limit) && seconds_since(start) < duration) {
    if (!bucket.take(sent)) {
      bucket.wait(sent);
      continue;
    }
    const auto item = static_cast<std::uint32_t>(sent % cycle);
    if (!q.push(item)) {
      if (lossless) {
        while (!q.push(item)) std::this_thread::yield();
      } else {
        ++lost;
      }
    }
    ++sent;
    if ((sent & 1023) == 0) {
      offered.store(sent, std::memory_order_relaxed);
      dropped.store(lost, std::memory_order_relaxed);
    }
  }
  offered.store(sent, std::memory_order_relaxed);
  dropped.store(lost, std::memory_order_relaxed);
}

}  // namespace

MetricsReport run_bench(Matcher& matcher, std::span<const FieldVector> trace, const UpdateStream* updates,
                        const BenchConfig& config) {
  if (!(config.tx_rate > 0)) throw std::invalid_argument("tx rate must be positive");
  if (config.update_rate < 0) throw std::invalid_argument("update rate must not be negative");
  if (!(config.duration > 0)) throw std::invalid_argument("duration must be positive");
  if (config.queue_capacity < 2) throw std::invalid_argument("queue capacity too small");
  if (trace.size() > UINT32_MAX) throw std::invalid_argument("trace too long");
  const bool with_updates = updates && !updates->ops.empty() && config.update_rate > 0;

  MetricsReport rep;
  rep.algo = std::string(algo_name(matcher.algo()));
  boost::lockfree::spsc_queue<std::uint32_t> keys(config.queue_capacity), ups(config.queue_capacity);
  Shared sh;

  const auto start = Clock::now();
  std::thread tester([&] {
    if (!trace.empty())
      run_source(keys, config.tx_rate, config.duration, config.trace_passes * trace.size(), trace.size(),
                 config.lossless, sh.keys_offered, sh.keys_dropped, start);
    sh.tester_done.store(true, std::memory_order_release);
  });
  std::thread updater([&] {
    if (with_updates)
      run_source(ups, config.update_rate, config.duration, updates->ops.size(), updates->ops.size(), config.lossless,
                 sh.updates_offered, sh.updates_dropped, start);
    sh.updater_done.store(true, std::memory_order_release);
  });

  std::thread executor([&] {
    std::uint64_t lookups = 0, applied = 0;
    while (true) {
      const bool done = sh.tester_done.load(std::memory_order_acquire) && sh.updater_done.load(std::memory_order_acquire);
      std::size_t work = 0;
      std::uint32_t i;
      while (work < 64 && ups.pop(i)) {
        const UpdateOp& op = updates->ops[i];
        try {
          if (op.kind == UpdateOp::Kind::insert) matcher.insert(op.rule);
          else if (!matcher.remove(op.rule)) ++rep.update_failures;
        } catch (const std::exception&) {
          ++rep.update_failures;
        }
        ++applied;
        ++work;
      }
      for (std::size_t n = 0; n < 256 && keys.pop(i); ++n, ++work) {
        const auto [res, bound] = matcher.lookup_bounded(trace[i]);
        ++lookups;
        rep.hits += res.hit();
        rep.probes_total += res.probes;
        rep.probes_max = std::max(rep.probes_max, res.probes);
        if (bound > 0 && res.probes > bound) ++rep.bound_violations;
        if (config.record_results) rep.results.push_back(res);
      }
      sh.lookups.store(lookups, std::memory_order_relaxed);
      sh.updates_applied.store(applied, std::memory_order_relaxed);
      if (work == 0) {
        if (done) break;
        std::this_thread::yield();
      }
    }
  });

  tester.join();
  updater.join();
  const double source_seconds = seconds_since(start);
  executor.join();
  rep.wall_seconds = seconds_since(start);

  rep.keys_offered = sh.keys_offered.load();
  rep.keys_dropped = sh.keys_dropped.load();
  rep.updates_offered = sh.updates_offered.load();
  rep.updates_dropped = sh.updates_dropped.load();
  rep.lookups = sh.lookups.load();
  rep.updates_applied = sh.updates_applied.load();
  rep.offered_rate = source_seconds > 0 ? static_cast<double>(rep.keys_offered) / source_seconds : 0;
  rep.receive_mpps = rep.wall_seconds > 0 ? static_cast<double>(rep.lookups) / rep.wall_seconds / 1e6 : 0;
  rep.update_throughput = rep.wall_seconds > 0 ? static_cast<double>(rep.updates_applied) / rep.wall_seconds : 0;
  rep.avg_probes = rep.lookups ? static_cast<double>(rep.probes_total) / static_cast<double>(rep.lookups) : 0;
  rep.memory_bytes = matcher.memory_bytes();
  rep.rule_count = matcher.rule_count();
  rep.tuple_count = matcher.tuple_count();
  const auto audit = matcher.audit();
  rep.audit_clean = audit.clean;
  rep.audit_violation = audit.violation;
  return rep;
}

nlohmann::json to_json(const MetricsReport& r) {
  return {
      {"algo", r.algo},
      {"keys_offered", r.keys_offered},
      {"keys_dropped", r.keys_dropped},
      {"lookups", r.lookups},
      {"hits", r.hits},
      {"probes_total", r.probes_total},
      {"probes_max", r.probes_max},
      {"avg_probes", r.avg_probes},
      {"bound_violations", r.bound_violations},
      {"updates_offered", r.updates_offered},
      {"updates_dropped", r.updates_dropped},
      {"updates_applied", r.updates_applied},
      {"update_failures", r.update_failures},
      {"wall_seconds", r.wall_seconds},
      {"offered_rate", r.offered_rate},
      {"receive_mpps", r.receive_mpps},
      {"update_throughput", r.update_throughput},
      {"memory_bytes", r.memory_bytes},
      {"rule_count", r.rule_count},
      {"tuple_count", r.tuple_count},
      {"audit_clean", r.audit_clean},
      {"audit_violation", r.audit_violation},
      {"ok", r.ok()},
  };
}

std::string to_text(const MetricsReport& r) {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "algo            %s\n"
                "rules           %zu\n"
                "tuples          %zu\n"
                "lookups         %llu (offered %llu, dropped %llu)\n"
                "hits            %llu\n"
                "receive rate    %.4f Mpps\n"
                "avg probes      %.3f (max %llu)\n"
                "bound violations %llu\n"
                "updates         %llu applied, %llu dropped, %llu failed\n"
                "update rate     %.1f /s\n"
                "memory          %zu bytes\n"
                "wall time       %.3f s\n"
                "audit           %s%s\n",
                r.algo.c_str(), r.rule_count, r.tuple_count, static_cast<unsigned long long>(r.lookups),
                static_cast<unsigned long long>(r.keys_offered), static_cast<unsigned long long>(r.keys_dropped),
                static_cast<unsigned long long>(r.hits), r.receive_mpps, r.avg_probes,
                static_cast<unsigned long long>(r.probes_max), static_cast<unsigned long long>(r.bound_violations),
                static_cast<unsigned long long>(r.updates_applied), static_cast<unsigned long long>(r.updates_dropped),
                static_cast<unsigned long long>(r.update_failures), r.update_throughput, r.memory_bytes,
                r.wall_seconds, r.audit_clean ? "clean" : "FAILED: ", r.audit_violation.c_str());
  return buf;
}

Fault parse_fault(std::string_view name) {
  if (name == "none") return Fault::none;
  if (name == "hint") return Fault::hint;
  if (name == "marker") return Fault::marker;
  if (name == "owner") return Fault::owner;
  throw std::invalid_argument("unknown fault '" + std::string(name) + "'");
}

bool inject_fault(TupleChainClassifier& c, Fault fault) {
  if (fault == Fault::none) return true;
  for (const auto& chain : c.chains())
    for (std::size_t pos = 0; pos < chain->tuple_count(); ++pos)
      for (Entry* e : chain->tuple(pos).entries()) {
        switch (fault) {
          case Fault::hint:
            if (e->rule()) {
              e->hint = nullptr;
              return true;
            }
            break;
          case Fault::marker:
            if (e->marker) {
              e->marker = nullptr;
              return true;
            }
            break;
          case Fault::owner:
            if (!e->owners.empty()) {
              e->owners.pop_back();
              return true;
            }
            break;
          case Fault::none: break;
        }
      }
  return false;
}

AuditOutcome run_audit(Algo algo, const FieldSchema& schema, std::span<const Rule> rules, unsigned min_head_bits,
                       Fault fault) {
  AuditOutcome out;
  out.algo = std::string(algo_name(algo));
  const auto t0 = Clock::now();
  AuditReport report;
  if (algo == Algo::tc) {
    auto c = TupleChainClassifier::build(schema, rules);
    out.build_seconds = seconds_since(t0);
    if (!inject_fault(c, fault)) throw std::invalid_argument("no entry to inject the fault into");
    report = c.audit();
    out.rule_count = c.rule_count();
    out.tuple_count = c.tuple_count();
    out.chain_count = c.chain_count();
    out.memory_bytes = c.memory_bytes();
  } else {
    if (fault != Fault::none) throw std::invalid_argument("fault injection applies to tc only");
    auto m = make_matcher(algo, schema, rules, {min_head_bits});
    out.build_seconds = seconds_since(t0);
    report = m->audit();
    out.rule_count = m->rule_count();
    out.tuple_count = m->tuple_count();
    out.memory_bytes = m->memory_bytes();
  }
  out.clean = report.clean;
  out.violation = report.violation;
  return out;
}

nlohmann::json to_json(const AuditOutcome& a) {
  return {{"algo", a.algo},
          {"clean", a.clean},
          {"violation", a.violation},
          {"rule_count", a.rule_count},
          {"tuple_count", a.tuple_count},
          {"chain_count", a.chain_count},
          {"memory_bytes", a.memory_bytes},
          {"build_seconds", a.build_seconds}};
}

std::vector<EquivOutcome> run_equiv(const FieldSchema& schema, std::span<const Rule> rules,
                                    std::span<const FieldVector> keys, std::span<const Algo> algos,
                                    unsigned min_head_bits) {
  std::vector<MatchResult> expected;
  expected.reserve(keys.size());
  for (const auto& k : keys) expected.push_back(linear_lookup(rules, k));
  std::vector<EquivOutcome> out;
  for (Algo a : algos) {
    EquivOutcome e;
    e.algo = std::string(algo_name(a));
    auto m = make_matcher(a, schema, rules, {min_head_bits});
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto [got, bound] = m->lookup_bounded(keys[i]);
      ++e.lookups;
      if (bound > 0 && got.probes > bound) ++e.bound_violations;
      if (!got.same_match(expected[i])) {
        if (!e.first) e.first = Divergence{i, expected[i], got};
        ++e.divergences;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json to_json(const EquivOutcome& e) {
  nlohmann::json j = {{"algo", e.algo},
                      {"lookups", e.lookups},
                      {"divergences", e.divergences},
                      {"bound_violations", e.bound_violations},
                      {"ok", e.ok()}};
  if (e.first) {
    auto side = [](const MatchResult& r) -> nlohmann::json {
      if (!r.hit()) return "miss";
      return {{"rule", *r.rule}, {"priority", r.priority}};
    };
    j["first_divergence"] = {{"key_index", e.first->key_index},
                             {"expected", side(e.first->expected)},
                             {"got", side(e.first->got)}};
  }
  return j;
}

}  // namespace tuplechain
