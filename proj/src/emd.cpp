#include "respira/emd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "respira/error.hpp"

namespace respira {

void EmdConfig::validate() const {
  if (!(sd_threshold > 0.0)) throw InputError("EMD SD threshold must be positive");
  if (max_sift_iters < 1) throw InputError("EMD needs at least one sifting iteration");
  if (max_imfs < 1) throw InputError("EMD needs room for at least one IMF");
}

Extrema find_extrema(std::span<const double> x) {
  Extrema e;
  const std::size_t n = x.size();
  if (n < 3) return e;
  // runs of equal values: [start, end]
  std::size_t prev_start = 0, prev_end = 0;
  while (prev_end + 1 < n && x[prev_end + 1] == x[0]) ++prev_end;
  std::size_t start = prev_end + 1;
  while (start < n) {
    std::size_t end = start;
    while (end + 1 < n && x[end + 1] == x[start]) ++end;
    if (end + 1 >= n) break;  // last run touches the boundary
    const double left = x[prev_start], mid = x[start], right = x[end + 1];
    const std::size_t at = start + (end - start) / 2;
    if (mid > left && mid > right) {
      e.maxima.push_back(at);
    } else if (mid < left && mid < right) {
      e.minima.push_back(at);
    }
    prev_start = start;
    prev_end = end;
    start = end + 1;
  }
  return e;
}

std::size_t count_zero_crossings(std::span<const double> x) {
  std::size_t crossings = 0;
  int sign = 0;
  for (double v : x) {
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) ++crossings;
    sign = s;
  }
  return crossings;
}

std::vector<double> cubic_spline(std::span<const double> kx, std::span<const double> ky, std::size_t n) {
  const std::size_t m = kx.size();
  std::vector<double> out(n);
  if (m < 2 || ky.size() != m) throw std::invalid_argument("cubic_spline needs matching knots, at least two");
  // second derivatives, natural boundary (zero at both ends); Thomas algorithm
  std::vector<double> m2(m, 0.0);
  if (m > 2) {
    std::vector<double> c(m, 0.0), d(m, 0.0);
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const double h0 = kx[i] - kx[i - 1];
      const double h1 = kx[i + 1] - kx[i];
      const double a = h0 / 6.0;
      const double b = (h0 + h1) / 3.0;
      const double cc = h1 / 6.0;
      const double rhs = (ky[i + 1] - ky[i]) / h1 - (ky[i] - ky[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = m - 2; i >= 1; --i) {
      m2[i] = d[i] - c[i] * m2[i + 1];
    }
  }
  std::size_t seg = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double xt = static_cast<double>(t);
    while (seg + 2 < m && xt > kx[seg + 1]) ++seg;
    const double h = kx[seg + 1] - kx[seg];
    const double a = (kx[seg + 1] - xt) / h;
    const double b = (xt - kx[seg]) / h;
    out[t] = a * ky[seg] + b * ky[seg + 1] + ((a * a * a - a) * m2[seg] + (b * b * b - b) * m2[seg + 1]) * h * h / 6.0;
  }
  return out;
}

namespace {

constexpr std::size_t kMirrored = 2;

using Index = std::vector<std::size_t>;

// first `count` entries from position `from`
Index head(const Index& v, std::size_t from, std::size_t count) {
  Index out;
  for (std::size_t i = from; i < v.size() && out.size() < count; ++i) out.push_back(v[i]);
  return out;
}

// `count` entries ending `skip_last` entries before the end
Index tail(const Index& v, std::size_t skip_last, std::size_t count) {
  Index out;
  if (v.size() <= skip_last) return out;
  const std::size_t stop = v.size() - skip_last;
  const std::size_t begin = stop > count ? stop - count : 0;
  for (std::size_t i = begin; i < stop; ++i) out.push_back(v[i]);
  return out;
}

struct Knots {
  std::vector<double> x;
  std::vector<double> y;
};

void add_mirrored(Knots& k, const Index& idx, double sym, std::span<const double> s) {
  for (std::size_t i : idx) {
    k.x.push_back(2.0 * sym - static_cast<double>(i));
    k.y.push_back(s[i]);
  }
}

Knots finish(Knots k) {
  std::vector<std::size_t> order(k.x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return k.x[a] < k.x[b]; });
  Knots out;
  for (std::size_t i : order) {
    if (!out.x.empty() && k.x[i] <= out.x.back()) continue;
    out.x.push_back(k.x[i]);
    out.y.push_back(k.y[i]);
  }
  return out;
}

double min_of(const Index& idx, double sym) {
  double lo = INFINITY;
  for (std::size_t i : idx) lo = std::min(lo, 2.0 * sym - static_cast<double>(i));
  return lo;
}

double max_of(const Index& idx, double sym) {
  double hi = -INFINITY;
  for (std::size_t i : idx) hi = std::max(hi, 2.0 * sym - static_cast<double>(i));
  return hi;
}

}  // namespace

std::vector<double> envelope_mean(std::span<const double> s) {
  const Extrema e = find_extrema(s);
  const Index& imax = e.maxima;
  const Index& imin = e.minima;
  if (imax.empty() || imin.empty() || e.count() < 3) return {};
  const std::size_t n = s.size();
  const std::size_t last = n - 1;

  // Left end: mirror about the first extremum, or about the end sample when
  // it lies beyond that extremum.
  Index lmax, lmin;
  std::size_t lsym;
  if (imax.front() < imin.front()) {
    if (s[0] > s[imin.front()]) {
      lmax = head(imax, 1, kMirrored);
      lmin = head(imin, 0, kMirrored);
      lsym = imax.front();
    } else {
      lmax = head(imax, 0, kMirrored);
      lmin = head(imin, 0, kMirrored - 1);
      lmin.push_back(0);
      lsym = 0;
    }
  } else {
    if (s[0] < s[imax.front()]) {
      lmax = head(imax, 0, kMirrored);
      lmin = head(imin, 1, kMirrored);
      lsym = imin.front();
    } else {
      lmax = head(imax, 0, kMirrored - 1);
      lmax.push_back(0);
      lmin = head(imin, 0, kMirrored);
      lsym = 0;
    }
  }

  Index rmax, rmin;
  std::size_t rsym;
  if (imax.back() < imin.back()) {
    if (s[last] < s[imax.back()]) {
      rmax = tail(imax, 0, kMirrored);
      rmin = tail(imin, 1, kMirrored);
      rsym = imin.back();
    } else {
      rmax = tail(imax, 0, kMirrored - 1);
      rmax.push_back(last);
      rmin = tail(imin, 0, kMirrored);
      rsym = last;
    }
  } else {
    if (s[last] > s[imin.back()]) {
      rmax = tail(imax, 1, kMirrored);
      rmin = tail(imin, 0, kMirrored);
      rsym = imax.back();
    } else {
      rmax = tail(imax, 0, kMirrored);
      rmin = tail(imin, 0, kMirrored - 1);
      rmin.push_back(last);
      rsym = last;
    }
  }

  // Mirrored knots must reach past the ends; otherwise mirror about the end
  // sample instead.
  if (lsym != 0 && (lmin.empty() || lmax.empty() || min_of(lmin, lsym) > 0.0 || min_of(lmax, lsym) > 0.0)) {
    if (lsym == imax.front()) {
      lmax = head(imax, 0, kMirrored);
    } else {
      lmin = head(imin, 0, kMirrored);
    }
    lsym = 0;
  }
  if (rsym != last &&
      (rmin.empty() || rmax.empty() || max_of(rmin, rsym) < double(last) || max_of(rmax, rsym) < double(last))) {
    if (rsym == imax.back()) {
      rmax = tail(imax, 0, kMirrored);
    } else {
      rmin = tail(imin, 0, kMirrored);
    }
    rsym = last;
  }

  Knots upper, lower;
  add_mirrored(upper, lmax, static_cast<double>(lsym), s);
  add_mirrored(lower, lmin, static_cast<double>(lsym), s);
  for (std::size_t i : imax) {
    upper.x.push_back(static_cast<double>(i));
    upper.y.push_back(s[i]);
  }
  for (std::size_t i : imin) {
    lower.x.push_back(static_cast<double>(i));
    lower.y.push_back(s[i]);
  }
  add_mirrored(upper, rmax, static_cast<double>(rsym), s);
  add_mirrored(lower, rmin, static_cast<double>(rsym), s);
  upper = finish(std::move(upper));
  lower = finish(std::move(lower));
  if (upper.x.size() < 2 || lower.x.size() < 2) return {};

  std::vector<double> hi = cubic_spline(upper.x, upper.y, n);
  const std::vector<double> lo = cubic_spline(lower.x, lower.y, n);
  for (std::size_t t = 0; t < n; ++t) hi[t] = 0.5 * (hi[t] + lo[t]);
  return hi;
}

ImfSet decompose(std::span<const double> window, double fps, const EmdConfig& cfg) {
  cfg.validate();
  if (window.size() < 8) throw InputError("EMD window too short (need at least 8 samples)");
  if (!(fps > 0.0)) throw InputError("fps must be positive");
  for (double v : window) {
    if (!std::isfinite(v)) throw InputError("EMD input contains non-finite values");
  }

  ImfSet set;
  set.input_len = window.size();
  set.residual.assign(window.begin(), window.end());
  const std::size_t n = window.size();

  while (static_cast<int>(set.imfs.size()) < cfg.max_imfs) {
    if (envelope_mean(set.residual).empty()) break;  // monotonic or too few extrema

    std::vector<double> h = set.residual;
    // At the iteration cap the latest iterate meeting the count condition is
    // kept, so an emitted IMF only breaks that condition if none ever met it.
    std::vector<double> last_shaped;
    bool shaped = false;
    for (int iter = 0; iter < cfg.max_sift_iters; ++iter) {
      const std::vector<double> mean = envelope_mean(h);
      if (mean.empty()) break;
      // Cauchy criterion summed sample by sample; a change at a zero sample
      // never counts as converged.
      double sd = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double d2 = mean[t] * mean[t];
        const double h2 = h[t] * h[t];
        if (h2 > 0.0)
          sd += d2 / h2;
        else if (d2 > 0.0)
          sd = std::numeric_limits<double>::infinity();
        h[t] -= mean[t];
      }
      const Extrema e = find_extrema(h);
      const std::size_t zc = count_zero_crossings(h);
      const std::size_t ext = e.count();
      shaped = (ext > zc ? ext - zc : zc - ext) <= 1;
      if (shaped && sd < cfg.sd_threshold) break;
      if (shaped) last_shaped = h;
    }
    if (!shaped && !last_shaped.empty()) h = std::move(last_shaped);
    for (std::size_t t = 0; t < n; ++t) set.residual[t] -= h[t];
    set.imfs.push_back(std::move(h));
  }
  return set;
}

double orthogonality_index(const ImfSet& set, std::span<const double> input) {
  double cross = 0.0, energy = 0.0;
  for (std::size_t t = 0; t < input.size(); ++t) {
    double total = 0.0, squares = 0.0;
    for (const auto& imf : set.imfs) {
      total += imf[t];
      squares += imf[t] * imf[t];
    }
    cross += total * total - squares;  // sum over i != j of imf_i * imf_j
    energy += input[t] * input[t];
  }
  return energy > 0.0 ? std::abs(cross) / energy : 0.0;
}

}  // namespace respira
