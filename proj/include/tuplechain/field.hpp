#pragma once

#include <absl/container/inlined_vector.h>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tuplechain {

/// Value of a single field. Fields are at most 128 bits wide.
using FieldValue = unsigned __int128;

inline constexpr unsigned kMaxFieldWidth = 128;

/// A packed bit vector holding one value per field of a schema.
///
/// Fields are laid out back to back, LSB first, across 64-bit words, so
/// masking, containment and equality work word by word regardless of where
/// the field boundaries fall. Up to two words are stored inline.
class FieldVector {
 public:
  using Words = absl::InlinedVector<std::uint64_t, 2>;

  FieldVector() = default;
  explicit FieldVector(std::size_t word_count) : words_(word_count, 0) {}
  explicit FieldVector(Words words) : words_(std::move(words)) {}

  std::span<const std::uint64_t> words() const { return {words_.data(), words_.size()}; }
  std::span<std::uint64_t> words() { return {words_.data(), words_.size()}; }
  std::size_t word_count() const { return words_.size(); }

  /// Bytes held outside the object itself.
  std::size_t heap_bytes() const {
    return words_.size() > 2 ? words_.capacity() * sizeof(std::uint64_t) : 0;
  }

  friend bool operator==(const FieldVector&, const FieldVector&) = default;

  template <typename H>
  friend H AbslHashValue(H h, const FieldVector& v) {
    return H::combine_contiguous(std::move(h), v.words_.data(), v.words_.size());
  }

 private:
  Words words_;
};

/// Per-field bitmask. A set bit means "this bit must match".
class Mask {
 public:
  Mask() = default;
  explicit Mask(FieldVector bits) : bits_(std::move(bits)) {}

  const FieldVector& bits() const { return bits_; }
  std::span<const std::uint64_t> words() const { return bits_.words(); }
  std::size_t word_count() const { return bits_.word_count(); }
  unsigned popcount() const;

  friend bool operator==(const Mask&, const Mask&) = default;

  template <typename H>
  friend H AbslHashValue(H h, const Mask& m) {
    return H::combine(std::move(h), m.bits_);
  }

 private:
  FieldVector bits_;
};

/// Total order on masks used wherever iteration order must be
/// deterministic: fewer set bits first, then word-wise lexicographic.
struct MaskOrder {
  bool operator()(const Mask& a, const Mask& b) const;
};

/// Widths of the d fields a classifier matches on.
class FieldSchema {
 public:
  FieldSchema() = default;
  explicit FieldSchema(std::vector<unsigned> widths);
  static FieldSchema uniform(std::size_t field_count, unsigned width);

  std::size_t field_count() const { return widths_.size(); }
  unsigned width(std::size_t field) const { return widths_.at(field); }
  std::span<const unsigned> widths() const { return widths_; }
  unsigned offset(std::size_t field) const { return offsets_.at(field); }
  unsigned total_width() const { return total_width_; }
  std::size_t word_count() const { return (total_width_ + 63) / 64; }

  FieldValue field_limit(std::size_t field) const;  // all-ones of the field width

  FieldVector zeros() const { return FieldVector(word_count()); }
  FieldVector make(std::span<const FieldValue> values) const;
  FieldValue get(const FieldVector& v, std::size_t field) const;
  void set(FieldVector& v, std::size_t field, FieldValue value) const;

  Mask full_mask() const;
  Mask prefix_mask(std::span<const unsigned> prefix_lengths) const;
  Mask make_mask(std::span<const FieldValue> values) const { return Mask(make(values)); }

  /// True when v has this schema's word count and no bits above total_width.
  bool fits(const FieldVector& v) const;

  friend bool operator==(const FieldSchema& a, const FieldSchema& b) { return a.widths_ == b.widths_; }

 private:
  std::vector<unsigned> widths_;
  std::vector<unsigned> offsets_;
  unsigned total_width_ = 0;
};

std::string to_hex(FieldValue v);

}  // namespace tuplechain
