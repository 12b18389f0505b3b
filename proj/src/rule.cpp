#include "tuplechain/rule.hpp"

#include <stdexcept>

namespace tuplechain {

namespace {

constexpr std::uint64_t kHashSeed = 0x2545F4914F6CDD1DULL;

inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xFF51AFD7ED558CCDULL;
  k ^= k >> 33;
  k *= 0xC4CEB9FE1A85EC53ULL;
  k ^= k >> 33;
  return k;
}

inline std::uint64_t step(std::uint64_t h, std::uint64_t w) {
  return (h ^ fmix64(w + 0x9E3779B97F4A7C15ULL)) * 0x100000001B3ULL;
}

void require_same_width(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("field vectors belong to different schemas");
}

}  // namespace

void MatchResult::merge(const MatchResult& other) {
  const auto total = probes + other.probes;
  if (&better(*this, other) == &other) {
    rule = other.rule;
    priority = other.priority;
  }
  probes = total;
}

const MatchResult& better(const MatchResult& a, const MatchResult& b) {
  if (!a.hit()) return b.hit() ? b : a;
  if (!b.hit()) return a;
  return outranks(b.priority, *b.rule, a.priority, *a.rule) ? b : a;
}

FieldVector apply_mask(const FieldVector& v, const Mask& m) {
  require_same_width(v.word_count(), m.word_count());
  FieldVector out = v;
  auto o = out.words();
  auto mw = m.words();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] &= mw[i];
  return out;
}

bool matches(const FieldVector& key, const Rule& rule) {
  require_same_width(key.word_count(), rule.mask.word_count());
  require_same_width(key.word_count(), rule.fields.word_count());
  auto k = key.words(), m = rule.mask.words(), f = rule.fields.words();
  for (std::size_t i = 0; i < k.size(); ++i)
    if ((k[i] & m[i]) != f[i]) return false;
  return true;
}

bool mask_subset(const Mask& a, const Mask& b) {
  require_same_width(a.word_count(), b.word_count());
  auto aw = a.words(), bw = b.words();
  for (std::size_t i = 0; i < aw.size(); ++i)
    if ((aw[i] & bw[i]) != aw[i]) return false;
  return true;
}

bool mask_less_than(const Mask& a, const Mask& b) { return mask_subset(a, b) && !(a == b); }

Mask intersect(const Mask& a, const Mask& b) { return Mask(apply_mask(a.bits(), b)); }

void validate_rule(const FieldSchema& schema, const Rule& rule) {
  if (!schema.fits(rule.fields) || !schema.fits(rule.mask.bits()))
    throw std::invalid_argument("rule " + std::to_string(rule.id) + " does not fit the field schema");
  if (!(apply_mask(rule.fields, rule.mask) == rule.fields))
    throw std::invalid_argument("rule " + std::to_string(rule.id) + " has field bits outside its mask");
  if (rule.priority == kMissPriority)
    throw std::invalid_argument("rule " + std::to_string(rule.id) + " uses the reserved miss priority");
}

std::uint64_t hash_words(std::span<const std::uint64_t> words) {
  std::uint64_t h = kHashSeed ^ words.size();
  for (auto w : words) h = step(h, w);
  return fmix64(h);
}

std::uint64_t hash_masked(std::span<const std::uint64_t> key, std::span<const std::uint64_t> mask) {
  std::uint64_t h = kHashSeed ^ key.size();
  for (std::size_t i = 0; i < key.size(); ++i) h = step(h, key[i] & mask[i]);
  return fmix64(h);
}

std::string describe(const FieldSchema& schema, const Rule& rule) {
  std::string s = "#" + std::to_string(rule.id) + " pri=" + std::to_string(rule.priority) + " [";
  for (std::size_t i = 0; i < schema.field_count(); ++i) {
    if (i) s += ' ';
    s += to_hex(schema.get(rule.fields, i)) + "/" + to_hex(schema.get(rule.mask.bits(), i));
  }
  return s + "]";
}

}  // namespace tuplechain
