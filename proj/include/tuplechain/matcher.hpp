#pragma once

#include "tuplechain/baselines.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace tuplechain {

enum class Algo { tc, etc, tss, linear };

Algo parse_algo(std::string_view name);
std::string_view algo_name(Algo a);

/// Uniform handle over every classifier, used by the harness and the CLI.
class Matcher {
 public:
  virtual ~Matcher() = default;
  virtual Algo algo() const = 0;
  virtual MatchResult lookup(const FieldVector& key) const = 0;
  /// Lookup plus the per-lookup probe bound; 0 means the algorithm has none.
  virtual std::pair<MatchResult, std::uint64_t> lookup_bounded(const FieldVector& key) const {
    return {lookup(key), 0};
  }
  virtual void insert(const Rule& r) = 0;
  virtual bool remove(const Rule& r) = 0;
  virtual AuditReport audit() const { return AuditReport::ok(); }
  virtual std::size_t memory_bytes() const = 0;
  virtual std::size_t rule_count() const = 0;
  virtual std::size_t tuple_count() const = 0;
};

struct MatcherOptions {
  unsigned min_head_bits = 4;
};

std::unique_ptr<Matcher> make_matcher(Algo algo, const FieldSchema& schema, std::span<const Rule> rules,
                                      MatcherOptions options = {});

}  // namespace tuplechain
