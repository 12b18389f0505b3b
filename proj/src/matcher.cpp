#include "tuplechain/matcher.hpp"

#include <stdexcept>

namespace tuplechain {

Algo parse_algo(std::string_view name) {
  if (name == "tc") return Algo::tc;
  if (name == "etc") return Algo::etc;
  if (name == "tss") return Algo::tss;
  if (name == "linear") return Algo::linear;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

std::string_view algo_name(Algo a) {
  switch (a) {
    case Algo::tc: return "tc";
    case Algo::etc: return "etc";
    case Algo::tss: return "tss";
    case Algo::linear: return "linear";
  }
  return "?";
}

namespace {

class TcMatcher final : public Matcher {
 public:
  explicit TcMatcher(TupleChainClassifier c) : c_(std::move(c)) {}
  Algo algo() const override { return Algo::tc; }
  MatchResult lookup(const FieldVector& key) const override { return c_.lookup(key); }
  std::pair<MatchResult, std::uint64_t> lookup_bounded(const FieldVector& key) const override {
    return {c_.lookup(key), c_.probe_bound()};
  }
  void insert(const Rule& r) override { c_.insert(r); }
  bool remove(const Rule& r) override { return c_.remove(r); }
  AuditReport audit() const override { return c_.audit(); }
  std::size_t memory_bytes() const override { return c_.memory_bytes(); }
  std::size_t rule_count() const override { return c_.rule_count(); }
  std::size_t tuple_count() const override { return c_.tuple_count(); }

 private:
  TupleChainClassifier c_;
};

class EtcMatcher final : public Matcher {
 public:
  explicit EtcMatcher(EtcClassifier c) : c_(std::move(c)) {}
  Algo algo() const override { return Algo::etc; }
  MatchResult lookup(const FieldVector& key) const override { return c_.lookup(key); }
  std::pair<MatchResult, std::uint64_t> lookup_bounded(const FieldVector& key) const override {
    return c_.lookup_bounded(key);
  }
  void insert(const Rule& r) override { c_.insert(r); }
  bool remove(const Rule& r) override { return c_.remove(r); }
  AuditReport audit() const override { return c_.audit(); }
  std::size_t memory_bytes() const override { return c_.memory_bytes(); }
  std::size_t rule_count() const override { return c_.rule_count(); }
  std::size_t tuple_count() const override { return c_.stats().local_tuple_total; }

 private:
  EtcClassifier c_;
};

class TssMatcher final : public Matcher {
 public:
  explicit TssMatcher(TssClassifier c) : c_(std::move(c)) {}
  Algo algo() const override { return Algo::tss; }
  MatchResult lookup(const FieldVector& key) const override { return c_.lookup(key); }
  std::pair<MatchResult, std::uint64_t> lookup_bounded(const FieldVector& key) const override {
    return {c_.lookup(key), c_.tuple_count()};
  }
  void insert(const Rule& r) override { c_.insert(r); }
  bool remove(const Rule& r) override { return c_.remove(r); }
  std::size_t memory_bytes() const override { return c_.memory_bytes(); }
  std::size_t rule_count() const override { return c_.rule_count(); }
  std::size_t tuple_count() const override { return c_.tuple_count(); }

 private:
  TssClassifier c_;
};

class LinearMatcher final : public Matcher {
 public:
  explicit LinearMatcher(LinearClassifier c) : c_(std::move(c)) {}
  Algo algo() const override { return Algo::linear; }
  MatchResult lookup(const FieldVector& key) const override { return c_.lookup(key); }
  void insert(const Rule& r) override { c_.insert(r); }
  bool remove(const Rule& r) override { return c_.remove(r); }
  std::size_t memory_bytes() const override { return c_.memory_bytes(); }
  std::size_t rule_count() const override { return c_.rule_count(); }
  std::size_t tuple_count() const override { return 0; }

 private:
  LinearClassifier c_;
};

}  // namespace

std::unique_ptr<Matcher> make_matcher(Algo algo, const FieldSchema& schema, std::span<const Rule> rules,
                                      MatcherOptions options) {
  switch (algo) {
    case Algo::tc: return std::make_unique<TcMatcher>(TupleChainClassifier::build(schema, rules));
    case Algo::etc:
      return std::make_unique<EtcMatcher>(EtcClassifier::build(schema, rules, EtcOptions{options.min_head_bits}));
    case Algo::tss: return std::make_unique<TssMatcher>(TssClassifier::build(schema, rules));
    case Algo::linear: return std::make_unique<LinearMatcher>(LinearClassifier::build(schema, rules));
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace tuplechain
