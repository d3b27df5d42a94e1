#include "uplif/gapped_segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uplif/kernels.hpp"

namespace uplif {

std::unique_ptr<GappedSegment> GappedSegment::expand(std::span<const KeyValue> sorted,
                                                     const DensityModel& density,
                                                     std::uint64_t d_max, std::optional<Key> lead) {
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].key <= sorted[i - 1].key) throw Error("keys not strictly sorted");
  }
  auto array = std::make_shared<SlotArray>();
  if (sorted.empty()) {
    Key lo = lead.value_or(0);
    return std::make_unique<GappedSegment>(array, 0, 0, KeyRange{lo, lo});
  }
  const std::size_t n = sorted.size();
  const Key first = sorted.front().key;
  const Key last = sorted.back().key;
  if (lead && *lead > first) throw Error("lead bound above first key");

  std::vector<std::uint64_t> gamma(n, 0);
  double domain_lo;
  bool leading;
  if (lead && *lead < first) {
    domain_lo = static_cast<double>(*lead);
    leading = true;
  } else if (!lead && n >= 2) {
    domain_lo = static_cast<double>(first) -
                (static_cast<double>(last) - static_cast<double>(first)) / static_cast<double>(n - 1);
    leading = true;
  } else {
    domain_lo = static_cast<double>(first);
    leading = false;
  }
  const double domain_hi = static_cast<double>(last);
  if (domain_hi > domain_lo) {
    GapSizer sizer(density, d_max, domain_lo, domain_hi);
    if (leading) gamma[0] = sizer(domain_lo, static_cast<double>(first));
    for (std::size_t i = 1; i < n; ++i) {
      double a = static_cast<double>(sorted[i - 1].key);
      double b = static_cast<double>(sorted[i].key);
      // Adjacent u64 keys can collide in double precision; such an interval
      // has no room for another key anyway.
      gamma[i] = (b > a) ? sizer(a, b) : 0;
    }
  }

  std::size_t total = n;
  for (auto g : gamma) total += g;
  array->keys.resize(total);
  array->values.resize(total);
  array->used.assign(total, 0);

  const Key sentinel = lead.value_or(first);
  std::size_t slot = 0;
  Key fill = sentinel;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t g = 0; g < gamma[i]; ++g) array->keys[slot++] = fill;
    array->keys[slot] = sorted[i].key;
    array->values[slot] = sorted[i].value;
    array->used[slot] = 1;
    fill = sorted[i].key;
    ++slot;
  }
  auto seg = std::make_unique<GappedSegment>(array, 0, total, KeyRange{sentinel, last});
  seg->live_ = n;
  return seg;
}

GappedSegment::GappedSegment(std::shared_ptr<SlotArray> array, std::size_t begin, std::size_t end,
                             KeyRange range)
    : array_(std::move(array)), begin_(begin), end_(end), range_(range) {
  live_ = kernels::count_nonzero(used());
}

GappedSegment::GappedSegment(std::shared_ptr<SlotArray> array, std::size_t begin, std::size_t end,
                             KeyRange range, std::size_t live)
    : array_(std::move(array)), begin_(begin), end_(end), live_(live), range_(range) {}

double GappedSegment::alpha() const {
  if (live_ == 0) return 0.0;
  return static_cast<double>(gap_total()) / static_cast<double>(live_);
}

std::vector<std::uint64_t> GappedSegment::gaps() const {
  std::vector<std::uint64_t> out;
  out.reserve(live_);
  std::uint64_t run = 0;
  for (std::size_t i = 0; i < slot_count(); ++i) {
    if (occupied(i)) {
      out.push_back(run);
      run = 0;
    } else {
      ++run;
    }
  }
  if (!out.empty()) out.back() += run;
  return out;
}

void GappedSegment::attach_model(std::shared_ptr<const SegmentModel> mapping,
                                 std::int64_t bias_origin) {
  mapping_ = std::move(mapping);
  bias_origin_ = bias_origin;
  error_ = measure_error();
}

double GappedSegment::predict_rel(Key k) const {
  return mapping_->predict(k) - static_cast<double>(begin_);
}

double GappedSegment::measure_error() const {
  if (!mapping_) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < slot_count(); ++i) {
    if (!occupied(i)) continue;
    double dev = std::abs(predict_rel(key_at(i)) + static_cast<double>(bias_origin_) -
                          static_cast<double>(i));
    worst = std::max(worst, dev);
  }
  return worst;
}

void GappedSegment::update_error_for(std::size_t rel) {
  if (!mapping_) return;
  double dev = std::abs(predict_rel(key_at(rel)) + static_cast<double>(bias_origin_) -
                        static_cast<double>(rel));
  error_ = std::max(error_, dev);
}

double GappedSegment::center(Key k, std::int64_t range_bias) const {
  if (!mapping_) return static_cast<double>(slot_count()) / 2.0;
  return predict_rel(k) + static_cast<double>(range_bias);
}

double GappedSegment::half_width(std::int64_t range_bias, std::uint32_t xi) const {
  if (!mapping_) return static_cast<double>(slot_count());
  return error_ + static_cast<double>(std::abs(range_bias - bias_origin_)) +
         static_cast<double>(xi);
}

WindowProbe GappedSegment::find(Key k, std::int64_t range_bias, std::uint32_t xi) const {
  WindowProbe probe;
  const std::size_t n = slot_count();
  if (n == 0) return probe;
  const double c = center(k, range_bias);
  const double h = half_width(range_bias, xi);
  const double lo_d = std::floor(c - h);
  const double hi_d = std::floor(c + h) + 1.0;
  std::size_t w0 = lo_d <= 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(lo_d));
  std::size_t w1 = hi_d >= static_cast<double>(n) ? n : static_cast<std::size_t>(std::max(hi_d, 0.0));
  w1 = std::max(w1, w0 + 1);

  auto span = keys();
  std::size_t i = w0 + kernels::lower_bound(span.subspan(w0, w1 - w0), k);
  probe.inspected = w1 - w0;
  if (i >= w1) return probe;
  // A placeholder equal to k can only be the leading sentinel run.
  while (i < n && span[i] == k && !occupied(i)) {
    ++i;
    ++probe.inspected;
  }
  if (i < n && span[i] == k && occupied(i)) probe.slot = i;
  return probe;
}

std::optional<std::size_t> GappedSegment::find_exhaustive(Key k) const {
  for (std::size_t i = 0; i < slot_count(); ++i) {
    if (occupied(i) && key_at(i) == k) return i;
  }
  return std::nullopt;
}

std::size_t GappedSegment::lower_bound(Key k, std::int64_t range_bias) const {
  const std::size_t n = slot_count();
  if (n == 0) return 0;
  auto span = keys();
  const double c = center(k, range_bias);
  const double h = half_width(range_bias, 0);
  const double lo_d = std::floor(c - h);
  const double hi_d = std::floor(c + h) + 1.0;
  std::size_t w0 = lo_d <= 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(lo_d));
  std::size_t w1 = hi_d >= static_cast<double>(n) ? n : static_cast<std::size_t>(std::max(hi_d, 0.0));
  w1 = std::max(w1, w0 + 1);

  std::size_t i = w0 + kernels::lower_bound(span.subspan(w0, w1 - w0), k);
  if (i == w0 && w0 > 0 && span[w0 - 1] >= k) {
    return kernels::lower_bound(span.subspan(0, w0), k);
  }
  if (i == w1 && w1 < n) {
    return w1 + kernels::lower_bound(span.subspan(w1), k);
  }
  return i;
}

void GappedSegment::fill_from(std::size_t rel, Key fill) {
  SlotArray& a = *array_;
  for (std::size_t i = begin_ + rel; i < end_ && !a.used[i]; ++i) a.keys[i] = fill;
}

GapInsert GappedSegment::insert_in_gap(Key k, Value v, std::int64_t range_bias,
                                       std::uint32_t shift_window) {
  GapInsert out;
  const std::size_t n = slot_count();
  if (n == 0) return out;
  SlotArray& a = *array_;
  const std::size_t lb = lower_bound(k, range_bias);
  if (lb < n && occupied(lb) && key_at(lb) == k) throw Error("key exists");

  // Neighbours: pred = last occupied before lb, succ = first occupied at/after lb.
  std::ptrdiff_t pred = static_cast<std::ptrdiff_t>(lb) - 1;
  while (pred >= 0 && !occupied(static_cast<std::size_t>(pred))) --pred;
  std::size_t succ = lb;
  while (succ < n && !occupied(succ)) ++succ;
  if (succ < n && key_at(succ) == k) throw Error("key exists");

  auto place = [&](std::size_t rel) {
    a.keys[begin_ + rel] = k;
    a.values[begin_ + rel] = v;
    a.used[begin_ + rel] = 1;
    ++live_;
    update_error_for(rel);
  };

  const auto first_free = static_cast<std::size_t>(pred + 1);
  if (succ > first_free) {
    double c = std::round(center(k, range_bias));
    double lo = static_cast<double>(first_free);
    double hi = static_cast<double>(succ - 1);
    auto target = static_cast<std::size_t>(std::clamp(c, lo, hi));
    const Key before = pred >= 0 ? key_at(static_cast<std::size_t>(pred)) : std::min(range_.lo, k);
    for (std::size_t i = first_free; i < target; ++i) a.keys[begin_ + i] = before;
    place(target);
    fill_from(target + 1, k);
    out.placed = true;
    out.slot = target;
    return out;
  }

  // No placeholder between the neighbours: look for the closest one within
  // shift_window occupied slots on either side.
  std::optional<std::size_t> right_hole;
  for (std::size_t q = succ; q < n && q - succ <= shift_window; ++q) {
    if (!occupied(q)) {
      right_hole = q;
      break;
    }
  }
  std::optional<std::size_t> left_hole;
  if (pred >= 0) {
    const auto p = static_cast<std::size_t>(pred);
    for (std::size_t q = p + 1; q-- > 0 && p - q <= shift_window;) {
      if (!occupied(q)) {
        left_hole = q;
        break;
      }
    }
  }
  if (!right_hole && !left_hole) return out;

  const std::size_t right_cost = right_hole ? *right_hole - succ : std::numeric_limits<std::size_t>::max();
  const std::size_t left_cost =
      left_hole ? static_cast<std::size_t>(pred) - *left_hole : std::numeric_limits<std::size_t>::max();
  if (right_cost <= left_cost) {
    const std::size_t q = *right_hole;
    for (std::size_t i = q; i > succ; --i) {
      a.keys[begin_ + i] = a.keys[begin_ + i - 1];
      a.values[begin_ + i] = a.values[begin_ + i - 1];
      a.used[begin_ + i] = 1;
    }
    a.used[begin_ + succ] = 0;
    place(succ);
    for (std::size_t i = succ + 1; i <= q; ++i) update_error_for(i);
    out.slot = succ;
    out.shifted = right_cost;
  } else {
    const std::size_t q = *left_hole;
    const auto p = static_cast<std::size_t>(pred);
    for (std::size_t i = q; i < p; ++i) {
      a.keys[begin_ + i] = a.keys[begin_ + i + 1];
      a.values[begin_ + i] = a.values[begin_ + i + 1];
      a.used[begin_ + i] = 1;
    }
    a.used[begin_ + p] = 0;
    place(p);
    for (std::size_t i = q; i < p; ++i) update_error_for(i);
    out.slot = p;
    out.shifted = left_cost;
  }
  out.placed = true;
  return out;
}

bool GappedSegment::assign(Key k, Value v, std::int64_t range_bias) {
  auto p = find(k, range_bias, 0);
  if (!p.slot) return false;
  array_->values[begin_ + *p.slot] = v;
  return true;
}

bool GappedSegment::erase(Key k, std::int64_t range_bias) {
  auto p = find(k, range_bias, 0);
  if (!p.slot) return false;
  const std::size_t rel = *p.slot;
  array_->used[begin_ + rel] = 0;
  --live_;
  const Key fill = rel > 0 ? key_at(rel - 1) : range_.lo;
  fill_from(rel, fill);
  return true;
}

void GappedSegment::for_each_live(const std::function<void(Key, Value)>& fn) const {
  for (std::size_t i = 0; i < slot_count(); ++i) {
    if (occupied(i)) fn(key_at(i), value_at(i));
  }
}

void GappedSegment::collect(Key lo, Key hi, std::vector<KeyValue>& out) const {
  const std::size_t n = slot_count();
  for (std::size_t i = lower_bound(lo, bias_origin_); i < n; ++i) {
    const Key k = key_at(i);
    if (k > hi) break;
    if (occupied(i)) out.push_back({k, value_at(i)});
  }
}

SplitPieces GappedSegment::split(Key k, std::uint32_t K, const DensityModel& density,
                                 std::uint64_t d_max, std::int64_t middle_bias_origin) {
  if (K < 1) throw Error("K must be >= 1");
  SplitPieces pieces;
  SlotArray& a = *array_;
  const std::size_t n = slot_count();
  const std::size_t lb = lower_bound(k, bias_origin_);

  std::vector<std::size_t> moved_at;
  for (std::size_t i = lb; i < n && moved_at.size() < K; ++i) {
    if (occupied(i)) moved_at.push_back(i);
  }
  const KeyRange old = range_;
  KeyRange left_range = old;
  if (k <= old.lo) {
    left_range.empty = true;
  } else {
    left_range.hi = k - 1;
  }

  if (moved_at.empty()) {
    pieces.middle = std::make_unique<GappedSegment>(std::make_shared<SlotArray>(), 0, 0,
                                                    KeyRange{k, old.hi});
    pieces.middle->bias_origin_ = middle_bias_origin;
    pieces.aux = k;
    range_ = left_range;
    return pieces;
  }

  std::vector<KeyValue> moved;
  moved.reserve(moved_at.size());
  for (auto i : moved_at) moved.push_back({key_at(i), value_at(i)});
  const std::size_t last_moved = moved_at.back();
  pieces.aux = moved.back().key;
  pieces.moved = moved.size();

  bool has_rest = false;
  for (std::size_t i = last_moved + 1; i < n; ++i) {
    if (occupied(i)) {
      has_rest = true;
      break;
    }
  }

  // Middle: fresh expansion, parent model rescaled onto the new slots.
  pieces.middle = expand(moved, density, d_max, k);
  GappedSegment& mid = *pieces.middle;
  mid.range_ = KeyRange{k, has_rest ? pieces.aux : old.hi};
  mid.bias_origin_ = middle_bias_origin;
  if (mapping_) {
    std::vector<double> raw(moved.size());
    std::vector<double> slot(moved.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < mid.slot_count(); ++i) {
      if (mid.occupied(i)) {
        raw[j] = mapping_->predict(mid.key_at(i));
        slot[j] = static_cast<double>(i);
        ++j;
      }
    }
    double scale = 0.0;
    if (raw.size() >= 2 && raw.back() > raw.front()) {
      scale = (slot.back() - slot.front()) / (raw.back() - raw.front());
    }
    double lo_off = std::numeric_limits<double>::infinity();
    double hi_off = -lo_off;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      double off = slot[i] - scale * raw[i] - static_cast<double>(middle_bias_origin);
      lo_off = std::min(lo_off, off);
      hi_off = std::max(hi_off, off);
    }
    const double offset = (lo_off + hi_off) / 2.0;
    auto m = std::make_shared<SegmentModel>();
    m->model = mapping_->model;
    m->scale = mapping_->scale * scale;
    m->offset = mapping_->offset * scale + offset;
    mid.attach_model(std::move(m), middle_bias_origin);
  }

  // Count the smaller outer side; the other follows from live_.
  std::size_t left_live;
  std::size_t right_live;
  if (lb <= n - last_moved) {
    left_live = kernels::count_nonzero(used().subspan(0, lb));
    right_live = live_ - moved.size() - left_live;
  } else {
    right_live = kernels::count_nonzero(used().subspan(last_moved + 1));
    left_live = live_ - moved.size() - right_live;
  }

  for (auto i : moved_at) a.used[begin_ + i] = 0;
  const Key fill = lb > 0 ? key_at(lb - 1) : old.lo;

  if (has_rest) {
    pieces.right = std::make_unique<GappedSegment>(array_, begin_ + last_moved + 1, end_,
                                                   KeyRange{pieces.aux + 1, old.hi}, right_live);
    GappedSegment& right = *pieces.right;
    right.mapping_ = mapping_;
    right.error_ = error_;
    right.bias_origin_ = bias_origin_;
    right.fill_from(0, pieces.aux + 1);
    end_ = begin_ + last_moved + 1;
  }
  for (std::size_t i = lb; i < slot_count(); ++i) {
    if (!occupied(i)) a.keys[begin_ + i] = fill;
  }
  live_ = left_live;
  range_ = left_range;
  return pieces;
}

void GappedSegment::rebind(std::size_t begin, std::size_t end) {
  begin_ = begin;
  end_ = end;
  refill();
  live_ = kernels::count_nonzero(used());
}

void GappedSegment::refill() {
  SlotArray& a = *array_;
  Key fill = range_.lo;
  for (std::size_t i = begin_; i < end_; ++i) {
    if (a.used[i]) {
      fill = a.keys[i];
    } else {
      a.keys[i] = fill;
    }
  }
}

std::size_t GappedSegment::recount() const { return kernels::count_nonzero(used()); }

void GappedSegment::check_invariants() const {
  const std::size_t n = slot_count();
  std::optional<Key> prev_live;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && key_at(i) < key_at(i - 1)) throw Error("slot keys decrease");
    if (!occupied(i)) continue;
    const Key k = key_at(i);
    if (prev_live && k <= *prev_live) throw Error("live keys not strictly sorted");
    if (!range_.contains(k)) throw Error("live key outside segment range");
    prev_live = k;
  }
  if (recount() != live_) throw Error("live count mismatch");
  if (measure_error() > error_ + 1e-6) throw Error("certified error exceeded");
}

}  // namespace uplif
