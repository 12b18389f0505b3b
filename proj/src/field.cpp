#include "tuplechain/field.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace tuplechain {

namespace {

FieldValue low_ones(unsigned width) {
  return width >= kMaxFieldWidth ? ~FieldValue{0} : (FieldValue{1} << width) - 1;
}

}  // namespace

unsigned Mask::popcount() const {
  unsigned n = 0;
  for (auto w : words()) n += static_cast<unsigned>(std::popcount(w));
  return n;
}

bool MaskOrder::operator()(const Mask& a, const Mask& b) const {
  auto pa = a.popcount(), pb = b.popcount();
  if (pa != pb) return pa < pb;
  auto wa = a.words(), wb = b.words();
  return std::lexicographical_compare(wa.begin(), wa.end(), wb.begin(), wb.end());
}

FieldSchema::FieldSchema(std::vector<unsigned> widths) : widths_(std::move(widths)) {
  if (widths_.empty()) throw std::invalid_argument("schema needs at least one field");
  offsets_.reserve(widths_.size());
  for (auto w : widths_) {
    if (w < 1 || w > kMaxFieldWidth)
      throw std::invalid_argument("field width must be in 1..128, got " + std::to_string(w));
    offsets_.push_back(total_width_);
    total_width_ += w;
  }
}

FieldSchema FieldSchema::uniform(std::size_t field_count, unsigned width) {
  return FieldSchema(std::vector<unsigned>(field_count, width));
}

FieldValue FieldSchema::field_limit(std::size_t field) const { return low_ones(width(field)); }

FieldVector FieldSchema::make(std::span<const FieldValue> values) const {
  if (values.size() != field_count())
    throw std::invalid_argument("expected " + std::to_string(field_count()) + " field values, got " +
                                std::to_string(values.size()));
  FieldVector v = zeros();
  for (std::size_t i = 0; i < values.size(); ++i) set(v, i, values[i]);
  return v;
}

FieldValue FieldSchema::get(const FieldVector& v, std::size_t field) const {
  const unsigned off = offset(field), width = widths_[field];
  auto words = v.words();
  FieldValue out = 0;
  unsigned done = 0;
  while (done < width) {
    const unsigned bit = off + done;
    const unsigned shift = bit % 64;
    const unsigned take = std::min(64 - shift, width - done);
    std::uint64_t chunk = words[bit / 64] >> shift;
    if (take < 64) chunk &= (std::uint64_t{1} << take) - 1;
    out |= FieldValue{chunk} << done;
    done += take;
  }
  return out;
}

void FieldSchema::set(FieldVector& v, std::size_t field, FieldValue value) const {
  const unsigned off = offset(field), width = widths_[field];
  if (value & ~low_ones(width))
    throw std::invalid_argument("value " + to_hex(value) + " exceeds field " + std::to_string(field) +
                                " width " + std::to_string(width));
  auto words = v.words();
  unsigned done = 0;
  while (done < width) {
    const unsigned bit = off + done;
    const unsigned shift = bit % 64;
    const unsigned take = std::min(64 - shift, width - done);
    const std::uint64_t ones = take < 64 ? (std::uint64_t{1} << take) - 1 : ~std::uint64_t{0};
    const auto chunk = static_cast<std::uint64_t>(value >> done) & ones;
    auto& w = words[bit / 64];
    w = (w & ~(ones << shift)) | (chunk << shift);
    done += take;
  }
}

Mask FieldSchema::full_mask() const {
  FieldVector v = zeros();
  for (std::size_t i = 0; i < field_count(); ++i) set(v, i, field_limit(i));
  return Mask(std::move(v));
}

Mask FieldSchema::prefix_mask(std::span<const unsigned> prefix_lengths) const {
  if (prefix_lengths.size() != field_count()) throw std::invalid_argument("prefix length count mismatch");
  FieldVector v = zeros();
  for (std::size_t i = 0; i < field_count(); ++i) {
    const unsigned w = widths_[i], len = prefix_lengths[i];
    if (len > w) throw std::invalid_argument("prefix length exceeds field width");
    set(v, i, low_ones(w) & ~low_ones(w - len));
  }
  return Mask(std::move(v));
}

bool FieldSchema::fits(const FieldVector& v) const {
  if (v.word_count() != word_count()) return false;
  const unsigned tail = total_width_ % 64;
  if (tail == 0) return true;
  return (v.words().back() >> tail) == 0;
}

std::string to_hex(FieldValue v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  if (v == 0) return "0";
  std::string s;
  while (v) {
    s.push_back(kDigits[static_cast<unsigned>(v & 0xF)]);
    v >>= 4;
  }
  return {s.rbegin(), s.rend()};
}

}  // namespace tuplechain
