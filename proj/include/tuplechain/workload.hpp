#pragma once

#include "tuplechain/rule.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tuplechain {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RuleSetFile {
  FieldSchema schema{std::vector<unsigned>{1}};
  std::vector<Rule> rules;
  std::string format;  // "classbench", "generic" or "synthetic"
  std::string path;
  std::size_t source_rules = 0;  // rules before range expansion
  double expansion_factor = 1.0;
};

/// Reads a whole file; gzip-compressed input is inflated transparently.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

struct PrefixBlock {
  FieldValue value;
  unsigned length;  // prefix length in bits
  friend bool operator==(const PrefixBlock&, const PrefixBlock&) = default;
};

/// Minimal set of maximal aligned prefix blocks covering [lo, hi] exactly.
std::vector<PrefixBlock> range_to_prefixes(FieldValue lo, FieldValue hi, unsigned width);

// ClassBench filter lines:
//   @src/len dst/len sport_lo : sport_hi dport_lo : dport_hi proto/mask [flags/mask]
// Schema is (32, 32, 16, 16, 8). The first line gets the highest priority.
FieldSchema classbench_schema();
RuleSetFile parse_classbench_text(std::string_view text, std::string path = {});
RuleSetFile parse_classbench(const std::string& path);

// Generic format:
//   fields: d
//   widths: w1 .. wd
//   value/mask ... value/mask priority      (hex tokens, one rule per line)
// Rule ids are the zero-based rule line order.
RuleSetFile parse_generic_text(std::string_view text, std::string path = {});
RuleSetFile parse_generic(const std::string& path);
std::string format_generic(const FieldSchema& schema, std::span<const Rule> rules);
void write_generic(const FieldSchema& schema, std::span<const Rule> rules, const std::string& path);

RuleSetFile load_rules(const std::string& path, std::string_view format);

/// Fraction of ordered-by-containment mask pairs: |{(a,b) : a < b}| / C(n,2).
double containment_density(std::span<const Mask> masks);

struct TupleProfile {
  enum class Style { lineage, prefix };
  std::size_t mask_count = 50;
  double skew = 1.0;      // Zipf exponent of rules per mask; 0 = even
  double density = 0.3;   // target containment density (lineage style only)
  Style style = Style::lineage;
};

std::string_view style_name(TupleProfile::Style s);
TupleProfile::Style parse_style(std::string_view name);

/// Distinct masks following the profile. Deterministic in seed.
std::vector<Mask> gen_masks(std::uint64_t seed, const FieldSchema& schema, const TupleProfile& profile);

/// count rules over exactly min(count, profile.mask_count) distinct masks.
/// Ids are 0..count-1.
RuleSetFile gen_rules(std::uint64_t seed, std::size_t count, const FieldSchema& schema,
                      const TupleProfile& profile);

struct TraceKey {
  FieldVector key;
  std::optional<Priority> expected;
};

/// hit_ratio of the keys are drawn under a sampled rule's mask; the rest are
/// uniform keys that were checked to miss every rule when possible.
std::vector<FieldVector> gen_trace(std::span<const Rule> rules, const FieldSchema& schema, std::uint64_t seed,
                                   std::size_t count, double hit_ratio);

// Trace file: one key per line, d hex tokens, optional "# expected=<pri>".
std::vector<TraceKey> parse_trace_text(std::string_view text, const FieldSchema& schema);
std::vector<TraceKey> parse_trace(const std::string& path, const FieldSchema& schema);
std::string format_trace(const FieldSchema& schema, std::span<const TraceKey> keys);
void write_trace(const FieldSchema& schema, std::span<const TraceKey> keys, const std::string& path);

struct UpdateOp {
  enum class Kind { insert, remove };
  Kind kind;
  Rule rule;
};

struct UpdateStream {
  FieldSchema schema{std::vector<unsigned>{1}};
  std::vector<UpdateOp> ops;
};

/// Consistent stream: deletes take live rules, inserts create fresh rules
/// (mostly on masks already in use). Fresh ids start above the largest id.
UpdateStream gen_updates(std::span<const Rule> rules, const FieldSchema& schema, std::uint64_t seed,
                         std::size_t count, double insert_ratio);

// Update file: generic header, then "+ id tokens.. priority" or "- id tokens.. priority".
UpdateStream parse_updates_text(std::string_view text);
UpdateStream parse_updates(const std::string& path);
std::string format_updates(const UpdateStream& stream);
void write_updates(const UpdateStream& stream, const std::string& path);

}  // namespace tuplechain
