#pragma once

#include "tuplechain/matcher.hpp"
#include "tuplechain/workload.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tuplechain {

struct BenchConfig {
  Algo algo = Algo::tc;
  double tx_rate = 1e9;      // keys per second offered by the tester
  double update_rate = 0.0;  // updates per second; 0 disables the update manager
  double duration = 1.0;     // seconds the sources run
  std::size_t trace_passes = 0;  // 0 = cycle the trace until duration ends
  std::size_t queue_capacity = 1 << 14;
  bool lossless = false;        // sources wait instead of dropping on a full queue
  bool record_results = false;  // keep every lookup result in delivery order
};

struct MetricsReport {
  std::string algo;
  std::uint64_t keys_offered = 0;
  std::uint64_t keys_dropped = 0;
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t probes_total = 0;
  std::uint64_t probes_max = 0;
  std::uint64_t bound_violations = 0;
  std::uint64_t updates_offered = 0;
  std::uint64_t updates_dropped = 0;
  std::uint64_t updates_applied = 0;
  std::uint64_t update_failures = 0;
  double wall_seconds = 0;
  double offered_rate = 0;  // keys per second
  double receive_mpps = 0;
  double update_throughput = 0;  // applied updates per second
  double avg_probes = 0;
  std::size_t memory_bytes = 0;
  std::size_t rule_count = 0;
  std::size_t tuple_count = 0;
  bool audit_clean = true;
  std::string audit_violation;
  std::vector<MatchResult> results;

  bool ok() const { return bound_violations == 0 && update_failures == 0 && audit_clean; }
};

/// Runs a tester thread, an update manager thread and one executor thread
/// that owns the matcher. The matcher is left in its final state.
MetricsReport run_bench(Matcher& matcher, std::span<const FieldVector> trace, const UpdateStream* updates,
                        const BenchConfig& config);

nlohmann::json to_json(const MetricsReport& r);
std::string to_text(const MetricsReport& r);

enum class Fault { none, hint, marker, owner };
Fault parse_fault(std::string_view name);

/// Corrupts one entry of a built classifier. Returns false when the
/// structure has no entry the fault applies to.
bool inject_fault(TupleChainClassifier& c, Fault fault);

struct AuditOutcome {
  std::string algo;
  bool clean = true;
  std::string violation;
  std::size_t rule_count = 0;
  std::size_t tuple_count = 0;
  std::size_t chain_count = 0;  // tc only
  std::size_t memory_bytes = 0;
  double build_seconds = 0;
};

AuditOutcome run_audit(Algo algo, const FieldSchema& schema, std::span<const Rule> rules, unsigned min_head_bits,
                       Fault fault = Fault::none);
nlohmann::json to_json(const AuditOutcome& a);

struct Divergence {
  std::size_t key_index;
  MatchResult expected;
  MatchResult got;
};

struct EquivOutcome {
  std::string algo;
  std::size_t lookups = 0;
  std::size_t divergences = 0;
  std::size_t bound_violations = 0;
  std::optional<Divergence> first;
  bool ok() const { return divergences == 0 && bound_violations == 0; }
};

/// Cross-checks each algorithm against the linear oracle on every key.
std::vector<EquivOutcome> run_equiv(const FieldSchema& schema, std::span<const Rule> rules,
                                    std::span<const FieldVector> keys, std::span<const Algo> algos,
                                    unsigned min_head_bits);
nlohmann::json to_json(const EquivOutcome& e);

}  // namespace tuplechain
