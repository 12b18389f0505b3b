#include "tuplechain/workload.hpp"

#include "tuplechain/baselines.hpp"

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace tuplechain {

namespace {

FieldValue low_ones(unsigned width) {
  return width >= kMaxFieldWidth ? ~FieldValue{0} : (FieldValue{1} << width) - 1;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_hex(std::string_view s, FieldValue& out) {
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  if (s.empty()) return false;
  FieldValue v = 0;
  for (char c : s) {
    unsigned d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else return false;
    if (v >> 124) return false;
    v = (v << 4) | d;
  }
  out = v;
  return true;
}

template <typename Int>
bool parse_dec(std::string_view s, Int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

FieldSchema parse_header(const std::vector<std::string_view>& lines, std::size_t& i) {
  std::optional<std::size_t> fields;
  std::optional<std::vector<unsigned>> widths;
  for (; i < lines.size() && !(fields && widths); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto toks = split_ws(line);
    if (toks.front() == "fields:") {
      std::size_t d;
      if (toks.size() != 2 || !parse_dec(toks[1], d) || d == 0) throw ParseError(i + 1, "bad 'fields:' header");
      fields = d;
    } else if (toks.front() == "widths:") {
      std::vector<unsigned> w;
      for (std::size_t k = 1; k < toks.size(); ++k) {
        unsigned x;
        if (!parse_dec(toks[k], x) || x < 1 || x > kMaxFieldWidth) throw ParseError(i + 1, "bad field width");
        w.push_back(x);
      }
      widths = std::move(w);
    } else {
      throw ParseError(i + 1, "expected 'fields:' and 'widths:' header before rules");
    }
  }
  if (!fields || !widths) throw ParseError(i, "missing 'fields:' or 'widths:' header");
  if (widths->size() != *fields)
    throw ParseError(i, "header declares " + std::to_string(*fields) + " fields but lists " +
                            std::to_string(widths->size()) + " widths");
  return FieldSchema(std::move(*widths));
}

// Parses "value/mask" tokens into a canonical (fields, mask) pair.
void parse_value_masks(const FieldSchema& schema, std::span<const std::string_view> toks, std::size_t line,
                       FieldVector& fields, Mask& mask) {
  fields = schema.zeros();
  FieldVector m = schema.zeros();
  for (std::size_t f = 0; f < schema.field_count(); ++f) {
    auto tok = toks[f];
    auto slash = tok.find('/');
    FieldValue v, mk;
    if (slash == std::string_view::npos || !parse_hex(tok.substr(0, slash), v) || !parse_hex(tok.substr(slash + 1), mk))
      throw ParseError(line, "field " + std::to_string(f) + ": expected hexvalue/hexmask, got '" + std::string(tok) + "'");
    const FieldValue limit = schema.field_limit(f);
    if ((v & ~limit) || (mk & ~limit))
      throw ParseError(line, "field " + std::to_string(f) + ": value exceeds width " + std::to_string(schema.width(f)));
    if (v & ~mk) throw ParseError(line, "field " + std::to_string(f) + ": value has bits outside its mask");
    schema.set(fields, f, v);
    schema.set(m, f, mk);
  }
  mask = Mask(std::move(m));
}

std::string format_header(const FieldSchema& schema) {
  std::string out = "fields: " + std::to_string(schema.field_count()) + "\nwidths:";
  for (auto w : schema.widths()) out += " " + std::to_string(w);
  out += "\n";
  return out;
}

void append_value_masks(std::string& out, const FieldSchema& schema, const Rule& r) {
  const FieldVector& m = r.mask.bits();
  for (std::size_t f = 0; f < schema.field_count(); ++f) {
    out += to_hex(schema.get(r.fields, f));
    out += '/';
    out += to_hex(schema.get(m, f));
    out += ' ';
  }
}

FieldVector random_vector(std::mt19937_64& rng, const FieldSchema& schema) {
  FieldVector v = schema.zeros();
  auto w = v.words();
  for (auto& x : w) x = rng();
  if (const unsigned tail = schema.total_width() % 64) w.back() &= (std::uint64_t{1} << tail) - 1;
  return v;
}

FieldVector random_under(std::mt19937_64& rng, const FieldSchema& schema, const Mask& mask) {
  FieldVector v = random_vector(rng, schema);
  auto w = v.words();
  auto m = mask.words();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] &= m[i];
  return v;
}

Mask random_prefix_mask(std::mt19937_64& rng, const FieldSchema& schema) {
  std::vector<unsigned> lengths(schema.field_count());
  for (std::size_t f = 0; f < lengths.size(); ++f)
    lengths[f] = std::uniform_int_distribution<unsigned>(0, schema.width(f))(rng);
  return schema.prefix_mask(lengths);
}

std::uint64_t binom(unsigned n, unsigned k) {
  std::uint64_t r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Smallest k whose middle binomial coefficient reaches n.
unsigned tag_bits_for(std::size_t n) {
  unsigned k = 0;
  while (binom(k, k / 2) < n) ++k;
  return k;
}

// Splits v vertices into lineages whose pairwise comparable count sums to
// the edge target, each lineage at most cap long.
std::vector<std::size_t> lineage_sizes(std::size_t v, std::uint64_t edges, std::size_t cap) {
  std::vector<std::size_t> sizes;
  std::size_t left = v;
  while (left > 0) {
    std::size_t s = 1;
    while (s + 1 <= std::min(left, cap) && (s + 1) * s / 2 <= edges) ++s;
    sizes.push_back(s);
    edges -= s * (s - 1) / 2;
    left -= s;
  }
  return sizes;
}

std::vector<Mask> lineage_masks(std::mt19937_64& rng, const FieldSchema& schema, std::size_t v, double density) {
  const unsigned width = schema.total_width();
  const auto edges = static_cast<std::uint64_t>(std::llround(density * static_cast<double>(v) * (v - 1) / 2.0));
  std::vector<std::size_t> sizes;
  unsigned k = 0;
  for (int round = 0; round < 16; ++round) {
    if (k >= width) throw std::invalid_argument("schema too narrow for the requested mask count");
    sizes = lineage_sizes(v, edges, width - k);
    const unsigned need = tag_bits_for(sizes.size());
    if (need == k) break;
    k = need;
  }
  if (tag_bits_for(sizes.size()) > k || k >= width)
    throw std::invalid_argument("schema too narrow for the requested mask count");

  std::vector<unsigned> bits(width);
  std::iota(bits.begin(), bits.end(), 0u);
  std::shuffle(bits.begin(), bits.end(), rng);
  const std::vector<unsigned> tag_pos(bits.begin(), bits.begin() + k);
  std::vector<unsigned> pool(bits.begin() + k, bits.end());

  auto with_bit = [](FieldVector& f, unsigned b) { f.words()[b / 64] |= std::uint64_t{1} << (b % 64); };

  absl::flat_hash_set<std::vector<bool>> used_tags;
  std::vector<Mask> out;
  out.reserve(v);
  for (std::size_t s : sizes) {
    std::vector<bool> tag(k, false);
    do {
      std::fill(tag.begin(), tag.end(), false);
      std::vector<unsigned> idx(k);
      std::iota(idx.begin(), idx.end(), 0u);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (unsigned j = 0; j < k / 2; ++j) tag[idx[j]] = true;
    } while (!used_tags.insert(tag).second);

    FieldVector m = schema.zeros();
    for (unsigned j = 0; j < k; ++j)
      if (tag[j]) with_bit(m, tag_pos[j]);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t room = pool.size();
    const std::size_t top = (room - (s - 1)) / 2;
    const std::size_t base = std::uniform_int_distribution<std::size_t>(std::min<std::size_t>(width / 8, top), top)(rng);
    std::size_t taken = 0;
    for (; taken < base; ++taken) with_bit(m, pool[taken]);
    out.emplace_back(m);
    for (std::size_t step = 1; step < s; ++step) {
      const std::size_t remaining_steps = s - step;
      const std::size_t spare = room - taken - remaining_steps;
      const std::size_t grow = 1 + std::uniform_int_distribution<std::size_t>(0, spare / (remaining_steps + 1))(rng);
      for (std::size_t g = 0; g < grow; ++g) with_bit(m, pool[taken++]);
      out.emplace_back(m);
    }
  }
  return out;
}

std::vector<Mask> prefix_masks(std::mt19937_64& rng, const FieldSchema& schema, std::size_t v) {
  absl::flat_hash_set<Mask> seen;
  std::vector<Mask> out;
  for (std::size_t attempts = 0; out.size() < v; ++attempts) {
    if (attempts > 1000 * v + 10000) throw std::invalid_argument("cannot draw that many distinct prefix masks");
    Mask m = random_prefix_mask(rng, schema);
    if (seen.insert(m).second) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  int err = 0;
  const char* msg = gzerror(f, &err);
  const std::string detail = msg ? msg : "";
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) throw std::runtime_error("cannot read '" + path + "': " + detail);
  return out;
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<PrefixBlock> range_to_prefixes(FieldValue lo, FieldValue hi, unsigned width) {
  if (width < 1 || width > kMaxFieldWidth) throw std::invalid_argument("bad field width");
  const FieldValue limit = low_ones(width);
  if (lo > hi || hi > limit) throw std::invalid_argument("bad range");
  std::vector<PrefixBlock> out;
  while (true) {
    unsigned k = 0;
    while (k < width && (lo & low_ones(k + 1)) == 0 && (lo | low_ones(k + 1)) <= hi) ++k;
    out.push_back({lo, width - k});
    const FieldValue end = lo | low_ones(k);
    if (end >= hi) break;
    lo = end + 1;
  }
  return out;
}

FieldSchema classbench_schema() { return FieldSchema({32, 32, 16, 16, 8}); }

RuleSetFile parse_classbench_text(std::string_view text, std::string path) {
  RuleSetFile out;
  out.schema = classbench_schema();
  out.format = "classbench";
  out.path = std::move(path);
  const FieldSchema& schema = out.schema;

  const auto lines = split_lines(text);
  std::vector<std::size_t> rule_lines;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    rule_lines.push_back(i);
  }
  out.source_rules = rule_lines.size();

  auto parse_ip = [&](std::string_view tok, std::size_t line, FieldValue& value, unsigned& len) {
    auto slash = tok.find('/');
    if (slash == std::string_view::npos) throw ParseError(line, "expected a.b.c.d/len, got '" + std::string(tok) + "'");
    auto ip = tok.substr(0, slash);
    std::uint32_t v = 0;
    int parts = 0;
    std::size_t start = 0;
    while (start <= ip.size()) {
      auto dot = ip.find('.', start);
      if (dot == std::string_view::npos) dot = ip.size();
      unsigned octet;
      if (!parse_dec(ip.substr(start, dot - start), octet) || octet > 255)
        throw ParseError(line, "bad IPv4 address '" + std::string(ip) + "'");
      v = (v << 8) | octet;
      ++parts;
      start = dot + 1;
    }
    if (parts != 4) throw ParseError(line, "bad IPv4 address '" + std::string(ip) + "'");
    if (!parse_dec(tok.substr(slash + 1), len) || len > 32) throw ParseError(line, "bad prefix length in '" + std::string(tok) + "'");
    value = FieldValue{v} & (low_ones(32) & ~low_ones(32 - len));
  };
  auto parse_range = [&](std::string_view tok, std::size_t line) {
    auto colon = tok.find(':');
    unsigned lo, hi;
    if (colon == std::string_view::npos || !parse_dec(tok.substr(0, colon), lo) || !parse_dec(tok.substr(colon + 1), hi) ||
        lo > hi || hi > 0xFFFF)
      throw ParseError(line, "bad port range '" + std::string(tok) + "'");
    return range_to_prefixes(lo, hi, 16);
  };

  RuleId next_id = 0;
  for (std::size_t n = 0; n < rule_lines.size(); ++n) {
    const std::size_t line_no = rule_lines[n] + 1;
    auto line = trim(lines[rule_lines[n]]);
    if (line.front() != '@') throw ParseError(line_no, "filter line must start with '@'");
    line.remove_prefix(1);
    // "lo : hi" is written with spaces around the colon; glue it back together.
    std::string glued;
    glued.reserve(line.size());
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (std::isspace(static_cast<unsigned char>(line[i]))) {
        std::size_t j = i;
        while (j < line.size() && std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        const bool next_colon = j < line.size() && line[j] == ':';
        const bool prev_colon = !glued.empty() && glued.back() == ':';
        if (!next_colon && !prev_colon) glued += ' ';
        i = j - 1;
        continue;
      }
      glued += line[i];
    }
    const auto toks = split_ws(glued);
    if (toks.size() < 5) throw ParseError(line_no, "expected 5 fields, got " + std::to_string(toks.size()));

    FieldValue src, dst, proto, proto_mask;
    unsigned src_len, dst_len;
    parse_ip(toks[0], line_no, src, src_len);
    parse_ip(toks[1], line_no, dst, dst_len);
    const auto sports = parse_range(toks[2], line_no);
    const auto dports = parse_range(toks[3], line_no);
    auto slash = toks[4].find('/');
    if (slash == std::string_view::npos || !parse_hex(toks[4].substr(0, slash), proto) ||
        !parse_hex(toks[4].substr(slash + 1), proto_mask) || proto > 0xFF || proto_mask > 0xFF)
      throw ParseError(line_no, "bad protocol '" + std::string(toks[4]) + "'");
    proto &= proto_mask;

    const auto priority = static_cast<Priority>(rule_lines.size() - n);
    for (const auto& sp : sports)
      for (const auto& dp : dports) {
        Rule r;
        const FieldValue values[] = {src, dst, sp.value, dp.value, proto};
        r.fields = schema.make(values);
        const FieldValue masks[] = {low_ones(32) & ~low_ones(32 - src_len), low_ones(32) & ~low_ones(32 - dst_len),
                                    low_ones(16) & ~low_ones(16 - sp.length),
                                    low_ones(16) & ~low_ones(16 - dp.length), proto_mask};
        r.mask = schema.make_mask(masks);
        r.priority = priority;
        r.id = next_id++;
        out.rules.push_back(std::move(r));
      }
  }
  out.expansion_factor =
      out.source_rules ? static_cast<double>(out.rules.size()) / static_cast<double>(out.source_rules) : 1.0;
  return out;
}

RuleSetFile parse_classbench(const std::string& path) { return parse_classbench_text(read_text_file(path), path); }

RuleSetFile parse_generic_text(std::string_view text, std::string path) {
  const auto lines = split_lines(text);
  std::size_t i = 0;
  RuleSetFile out;
  out.schema = parse_header(lines, i);
  out.format = "generic";
  out.path = std::move(path);
  const FieldSchema& schema = out.schema;
  const std::size_t d = schema.field_count();
  for (; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto toks = split_ws(line);
    if (toks.size() != d + 1)
      throw ParseError(i + 1, "expected " + std::to_string(d) + " value/mask tokens and a priority");
    Rule r;
    parse_value_masks(schema, std::span(toks).first(d), i + 1, r.fields, r.mask);
    if (!parse_dec(toks[d], r.priority) || r.priority == kMissPriority)
      throw ParseError(i + 1, "bad priority '" + std::string(toks[d]) + "'");
    r.id = out.rules.size();
    out.rules.push_back(std::move(r));
  }
  out.source_rules = out.rules.size();
  return out;
}

RuleSetFile parse_generic(const std::string& path) { return parse_generic_text(read_text_file(path), path); }

std::string format_generic(const FieldSchema& schema, std::span<const Rule> rules) {
  std::string out = format_header(schema);
  for (const auto& r : rules) {
    append_value_masks(out, schema, r);
    out += std::to_string(r.priority);
    out += '\n';
  }
  return out;
}

void write_generic(const FieldSchema& schema, std::span<const Rule> rules, const std::string& path) {
  write_text_file(path, format_generic(schema, rules));
}

RuleSetFile load_rules(const std::string& path, std::string_view format) {
  if (format == "classbench") return parse_classbench(path);
  if (format == "generic") return parse_generic(path);
  throw std::invalid_argument("unknown rule format '" + std::string(format) + "'");
}

double containment_density(std::span<const Mask> masks) {
  const std::size_t n = masks.size();
  if (n < 2) return 0.0;
  std::uint64_t edges = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && mask_less_than(masks[a], masks[b])) ++edges;
  return static_cast<double>(edges) / (static_cast<double>(n) * (n - 1) / 2.0);
}

std::string_view style_name(TupleProfile::Style s) { return s == TupleProfile::Style::lineage ? "lineage" : "prefix"; }

TupleProfile::Style parse_style(std::string_view name) {
  if (name == "lineage") return TupleProfile::Style::lineage;
  if (name == "prefix") return TupleProfile::Style::prefix;
  throw std::invalid_argument("unknown mask style '" + std::string(name) + "'");
}

std::vector<Mask> gen_masks(std::uint64_t seed, const FieldSchema& schema, const TupleProfile& profile) {
  if (profile.density < 0.0 || profile.density > 1.0) throw std::invalid_argument("density must be in [0,1]");
  std::mt19937_64 rng(seed);
  if (profile.mask_count == 0) return {};
  return profile.style == TupleProfile::Style::lineage ? lineage_masks(rng, schema, profile.mask_count, profile.density)
                                                       : prefix_masks(rng, schema, profile.mask_count);
}

RuleSetFile gen_rules(std::uint64_t seed, std::size_t count, const FieldSchema& schema, const TupleProfile& profile) {
  RuleSetFile out;
  out.schema = schema;
  out.format = "synthetic";
  out.source_rules = count;
  if (count == 0) return out;
  TupleProfile p = profile;
  p.mask_count = std::min(p.mask_count, count);
  auto masks = gen_masks(seed, schema, p);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(masks.begin(), masks.end(), rng);

  // Every mask gets one rule; the rest follow Zipf(skew) shares by rank.
  const std::size_t v = masks.size();
  std::vector<double> weight(v);
  for (std::size_t j = 0; j < v; ++j) weight[j] = 1.0 / std::pow(static_cast<double>(j + 1), p.skew);
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  const std::size_t spare = count - v;
  std::vector<std::size_t> per(v, 1);
  std::size_t given = 0;
  for (std::size_t j = 0; j < v; ++j) {
    const auto share = static_cast<std::size_t>(std::floor(static_cast<double>(spare) * weight[j] / total));
    per[j] += share;
    given += share;
  }
  for (std::size_t j = 0; given < spare; j = (j + 1) % v, ++given) ++per[j];

  out.rules.reserve(count);
  std::uniform_int_distribution<Priority> pri(0, static_cast<Priority>(4 * count));
  for (std::size_t j = 0; j < v; ++j)
    for (std::size_t c = 0; c < per[j]; ++c) {
      Rule r;
      r.fields = random_under(rng, schema, masks[j]);
      r.mask = masks[j];
      r.priority = pri(rng);
      out.rules.push_back(std::move(r));
    }
  std::shuffle(out.rules.begin(), out.rules.end(), rng);
  for (std::size_t i = 0; i < out.rules.size(); ++i) out.rules[i].id = i;
  return out;
}

std::vector<FieldVector> gen_trace(std::span<const Rule> rules, const FieldSchema& schema, std::uint64_t seed,
                                   std::size_t count, double hit_ratio) {
  if (hit_ratio < 0.0 || hit_ratio > 1.0) throw std::invalid_argument("hit_ratio must be in [0,1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution hit(hit_ratio);
  std::optional<TssClassifier> oracle;
  absl::flat_hash_map<RuleId, std::size_t> by_id;
  std::vector<FieldVector> keys;
  keys.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!rules.empty() && hit(rng)) {
      const Rule& r = rules[std::uniform_int_distribution<std::size_t>(0, rules.size() - 1)(rng)];
      FieldVector k = random_vector(rng, schema);
      auto w = k.words();
      auto f = r.fields.words();
      auto m = r.mask.words();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = (w[j] & ~m[j]) | f[j];
      keys.push_back(std::move(k));
      continue;
    }
    if (rules.empty()) {
      keys.push_back(random_vector(rng, schema));
      continue;
    }
    if (!oracle) {
      oracle = TssClassifier::build(schema, rules);
      for (std::size_t j = 0; j < rules.size(); ++j) by_id.emplace(rules[j].id, j);
    }
    FieldVector k = random_vector(rng, schema);
    // Flip a key bit under the matched rule's mask until nothing matches.
    for (int attempt = 0; attempt < 256; ++attempt) {
      const auto res = oracle->lookup(k);
      if (!res.hit()) break;
      const Rule& r = rules[by_id.at(*res.rule)];
      const auto m = r.mask.words();
      std::size_t bits = 0;
      for (auto w : m) bits += std::popcount(w);
      if (bits == 0) break;
      std::size_t pick = std::uniform_int_distribution<std::size_t>(0, bits - 1)(rng);
      auto w = k.words();
      for (std::size_t j = 0; j < m.size(); ++j) {
        const std::size_t c = std::popcount(m[j]);
        if (pick >= c) {
          pick -= c;
          continue;
        }
        auto word = m[j];
        for (std::size_t t = 0; t < pick; ++t) word &= word - 1;
        w[j] ^= word & (~word + 1);
        break;
      }
    }
    keys.push_back(std::move(k));
  }
  return keys;
}

std::vector<TraceKey> parse_trace_text(std::string_view text, const FieldSchema& schema) {
  const auto lines = split_lines(text);
  std::vector<TraceKey> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    std::string_view comment;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      comment = trim(line.substr(hash + 1));
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto toks = split_ws(line);
    if (toks.size() != schema.field_count())
      throw ParseError(i + 1, "expected " + std::to_string(schema.field_count()) + " hex tokens");
    TraceKey tk;
    tk.key = schema.zeros();
    for (std::size_t f = 0; f < toks.size(); ++f) {
      FieldValue v;
      if (!parse_hex(toks[f], v)) throw ParseError(i + 1, "bad hex token '" + std::string(toks[f]) + "'");
      if (v & ~schema.field_limit(f))
        throw ParseError(i + 1, "field " + std::to_string(f) + ": value exceeds width " + std::to_string(schema.width(f)));
      schema.set(tk.key, f, v);
    }
    if (comment.starts_with("expected=")) {
      auto val = comment.substr(9);
      Priority p;
      if (val == "miss") tk.expected = kMissPriority;
      else if (parse_dec(val, p)) tk.expected = p;
      else throw ParseError(i + 1, "bad expected priority '" + std::string(val) + "'");
    }
    out.push_back(std::move(tk));
  }
  return out;
}

std::vector<TraceKey> parse_trace(const std::string& path, const FieldSchema& schema) {
  return parse_trace_text(read_text_file(path), schema);
}

std::string format_trace(const FieldSchema& schema, std::span<const TraceKey> keys) {
  std::string out;
  for (const auto& k : keys) {
    for (std::size_t f = 0; f < schema.field_count(); ++f) {
      if (f) out += ' ';
      out += to_hex(schema.get(k.key, f));
    }
    if (k.expected)
      out += *k.expected == kMissPriority ? " # expected=miss" : " # expected=" + std::to_string(*k.expected);
    out += '\n';
  }
  return out;
}

void write_trace(const FieldSchema& schema, std::span<const TraceKey> keys, const std::string& path) {
  write_text_file(path, format_trace(schema, keys));
}

UpdateStream gen_updates(std::span<const Rule> rules, const FieldSchema& schema, std::uint64_t seed, std::size_t count,
                         double insert_ratio) {
  if (insert_ratio < 0.0 || insert_ratio > 1.0) throw std::invalid_argument("insert_ratio must be in [0,1]");
  std::mt19937_64 rng(seed);
  UpdateStream out;
  out.schema = schema;
  out.ops.reserve(count);
  std::vector<Rule> live(rules.begin(), rules.end());
  std::vector<Mask> pool;
  {
    absl::flat_hash_set<Mask> seen;
    for (const auto& r : rules)
      if (seen.insert(r.mask).second) pool.push_back(r.mask);
  }
  RuleId next_id = 0;
  for (const auto& r : rules) next_id = std::max(next_id, r.id + 1);
  std::bernoulli_distribution insert(insert_ratio), fresh_mask(0.02);
  std::uniform_int_distribution<Priority> pri(0, static_cast<Priority>(4 * (rules.size() + count)));
  for (std::size_t i = 0; i < count; ++i) {
    if (live.empty() || insert(rng)) {
      Rule r;
      if (pool.empty() || fresh_mask(rng)) {
        r.mask = random_prefix_mask(rng, schema);
        pool.push_back(r.mask);
      } else {
        r.mask = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      }
      r.fields = random_under(rng, schema, r.mask);
      r.priority = pri(rng);
      r.id = next_id++;
      live.push_back(r);
      out.ops.push_back({UpdateOp::Kind::insert, std::move(r)});
    } else {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
      out.ops.push_back({UpdateOp::Kind::remove, live[j]});
      live[j] = std::move(live.back());
      live.pop_back();
    }
  }
  return out;
}

UpdateStream parse_updates_text(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t i = 0;
  UpdateStream out;
  out.schema = parse_header(lines, i);
  const std::size_t d = out.schema.field_count();
  for (; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto toks = split_ws(line);
    if (toks.size() != d + 3 || (toks[0] != "+" && toks[0] != "-"))
      throw ParseError(i + 1, "expected '+|- id' then " + std::to_string(d) + " value/mask tokens and a priority");
    UpdateOp op;
    op.kind = toks[0] == "+" ? UpdateOp::Kind::insert : UpdateOp::Kind::remove;
    if (!parse_dec(toks[1], op.rule.id)) throw ParseError(i + 1, "bad rule id '" + std::string(toks[1]) + "'");
    parse_value_masks(out.schema, std::span(toks).subspan(2, d), i + 1, op.rule.fields, op.rule.mask);
    if (!parse_dec(toks[d + 2], op.rule.priority) || op.rule.priority == kMissPriority)
      throw ParseError(i + 1, "bad priority '" + std::string(toks[d + 2]) + "'");
    out.ops.push_back(std::move(op));
  }
  return out;
}

UpdateStream parse_updates(const std::string& path) { return parse_updates_text(read_text_file(path)); }

std::string format_updates(const UpdateStream& stream) {
  std::string out = format_header(stream.schema);
  for (const auto& op : stream.ops) {
    out += op.kind == UpdateOp::Kind::insert ? "+ " : "- ";
    out += std::to_string(op.rule.id);
    out += ' ';
    append_value_masks(out, stream.schema, op.rule);
    out += std::to_string(op.rule.priority);
    out += '\n';
  }
  return out;
}

void write_updates(const UpdateStream& stream, const std::string& path) { write_text_file(path, format_updates(stream)); }

}  // namespace tuplechain
