#include "gami/filter.hpp"

#include <algorithm>
#include <numeric>

#include "gami/boost.hpp"
#include "gami/error.hpp"
#include "gami/parallel.hpp"
#include "gami/random.hpp"

namespace gami {

namespace {

std::vector<std::size_t> screened_features(const std::vector<std::size_t>& requested, std::size_t p) {
  std::vector<std::size_t> out = requested;
  if (out.empty()) {
    out.resize(p);
    std::iota(out.begin(), out.end(), std::size_t{0});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (std::size_t f : out) {
    if (f >= p) throw UsageError("filter feature index out of range");
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(const std::vector<std::size_t>& features) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < features.size(); ++a) {
    for (std::size_t b = a + 1; b < features.size(); ++b) pairs.emplace_back(features[a], features[b]);
  }
  return pairs;
}

void check_q(std::size_t q, std::size_t pairs) {
  if (q > pairs) {
    throw UsageError("q = " + std::to_string(q) + " exceeds the " + std::to_string(pairs) +
                     " candidate pairs");
  }
}

NewtonState state_on(std::span<const std::size_t> rows, const Dataset& data, const LossSpec& loss,
                     std::span<const double> scores) {
  if (scores.size() != data.rows()) throw UsageError("score vector does not cover the dataset");
  std::vector<double> y(rows.size()), g(rows.size());
  const auto resp = data.response();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    y[r] = resp[rows[r]];
    g[r] = scores[rows[r]];
  }
  return derivatives(loss, y, g);
}

std::size_t cell_of(std::span<const double> cuts, double x) {
  return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

// Cells are indexed [0, na] x [0, nb]; a cell index counts the cuts <= x.
QuadrantFit quadrant_fit_cells(std::span<const std::uint8_t> ca, std::span<const std::uint8_t> cb,
                               std::size_t na, std::size_t nb, std::span<const double> z,
                               std::span<const double> h) {
  const std::size_t wa = na + 1;
  const std::size_t wb = nb + 1;
  // Stats per cell: weight, weighted z, weighted z^2.
  std::vector<double> cum(wa * wb * 3, 0.0);
  for (std::size_t r = 0; r < z.size(); ++r) {
    double* c = cum.data() + (ca[r] * wb + cb[r]) * 3;
    const double hz = h[r] * z[r];
    c[0] += h[r];
    c[1] += hz;
    c[2] += hz * z[r];
  }
  // In-place inclusive prefix sums along both axes.
  for (std::size_t a = 0; a < wa; ++a) {
    for (std::size_t b = 1; b < wb; ++b) {
      for (int s = 0; s < 3; ++s) cum[(a * wb + b) * 3 + s] += cum[(a * wb + b - 1) * 3 + s];
    }
  }
  for (std::size_t a = 1; a < wa; ++a) {
    for (std::size_t b = 0; b < wb; ++b) {
      for (int s = 0; s < 3; ++s) cum[(a * wb + b) * 3 + s] += cum[((a - 1) * wb + b) * 3 + s];
    }
  }
  auto at = [&](std::size_t a, std::size_t b, int s) { return cum[(a * wb + b) * 3 + s]; };
  auto quad_sse = [](double w, double s1, double s2) { return w > 0.0 ? s2 - s1 * s1 / w : s2; };
  auto mean = [](double w, double s1) { return w > 0.0 ? s1 / w : 0.0; };

  QuadrantFit best;
  bool have = false;
  const std::size_t ua = std::max<std::size_t>(na, 1);
  const std::size_t ub = std::max<std::size_t>(nb, 1);
  for (std::size_t u = 0; u < ua; ++u) {
    for (std::size_t v = 0; v < ub; ++v) {
      double q[4][3];
      for (int s = 0; s < 3; ++s) {
        const double ll = at(u, v, s);
        const double lr = at(u, nb, s) - ll;
        const double rl = at(na, v, s) - ll;
        const double rr = at(na, nb, s) - ll - lr - rl;
        q[0][s] = ll;
        q[1][s] = lr;
        q[2][s] = rl;
        q[3][s] = rr;
      }
      double sse = 0.0;
      for (auto& quad : q) sse += quad_sse(quad[0], quad[1], quad[2]);
      if (!have || sse < best.sse) {
        have = true;
        best.sse = sse;
        best.cut_a = u;
        best.cut_b = v;
        for (int k = 0; k < 4; ++k) best.means[static_cast<std::size_t>(k)] = mean(q[k][0], q[k][1]);
      }
    }
  }
  return best;
}

}  // namespace

std::optional<std::size_t> FilterResult::rank_of(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].first == a && ranked[i].second == b) return i + 1;
  }
  return std::nullopt;
}

FilterResult rank_pairs(std::vector<PairScore> scores, std::size_t q) {
  check_q(q, scores.size());
  std::stable_sort(scores.begin(), scores.end(), [](const PairScore& l, const PairScore& r) {
    if (l.score != r.score) return l.score < r.score;
    return std::tie(l.first, l.second) < std::tie(r.first, r.second);
  });
  FilterResult out;
  out.ranked = std::move(scores);
  for (std::size_t i = 0; i < q; ++i) {
    out.selected.emplace_back(out.ranked[i].first, out.ranked[i].second);
    out.selected.emplace_back(out.ranked[i].second, out.ranked[i].first);
  }
  return out;
}

std::vector<std::size_t> subsample_rows(std::span<const std::size_t> rows, std::size_t cap,
                                        std::uint64_t seed) {
  std::vector<std::size_t> out(rows.begin(), rows.end());
  if (out.size() <= cap) return out;
  RandomStream rng(seed, 0xf117);
  // Partial Fisher-Yates: the first `cap` slots become a uniform sample.
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + rng.below(out.size() - i);
    std::swap(out[i], out[j]);
  }
  out.resize(cap);
  std::sort(out.begin(), out.end());
  return out;
}

FilterResult filter_int(const TrainingFrame& frame, const NewtonState& state,
                        const FilterOptions& options) {
  const auto features = screened_features(options.features, frame.features());
  const auto pairs = all_pairs(features);
  check_q(options.q, pairs.size());
  std::vector<PairScore> scores(pairs.size());
  parallel_for(pairs.size(), options.threads, [&](std::size_t i) {
    const auto [j, k] = pairs[i];
    PairScore s;
    s.first = j;
    s.second = k;
    s.sse_forward = fit_candidate(frame, {j, k}, options.tree, state).sse();
    s.sse_backward = fit_candidate(frame, {k, j}, options.tree, state).sse();
    s.score = std::min(s.sse_forward, s.sse_backward);
    scores[i] = s;
  });
  return rank_pairs(std::move(scores), options.q);
}

FilterResult filter_int(const Dataset& data, const BinMap& bins, std::span<const std::size_t> train_rows,
                        const LossSpec& loss, std::span<const double> scores,
                        const FilterOptions& options) {
  auto rows = subsample_rows(train_rows, options.subsample_cap, options.seed);
  const NewtonState state = state_on(rows, data, loss, scores);
  const TrainingFrame frame(data, bins, std::move(rows), options.knots);
  return filter_int(frame, state, options);
}

std::vector<double> fast_grid(std::span<const double> values, std::size_t grid_size) {
  if (grid_size == 0 || grid_size > 254) throw UsageError("FAST grid size must be in [1, 254]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (std::size_t k = 1; k <= grid_size; ++k) {
    const double q = sorted_quantile(sorted, static_cast<double>(k) / static_cast<double>(grid_size + 1));
    if (q <= sorted.front()) continue;
    if (cuts.empty() || q > cuts.back()) cuts.push_back(q);
  }
  return cuts;
}

QuadrantFit fast_pair_fit(std::span<const double> xa, std::span<const double> xb,
                          std::span<const double> cuts_a, std::span<const double> cuts_b,
                          std::span<const double> z, std::span<const double> h) {
  if (cuts_a.size() > 254 || cuts_b.size() > 254) throw UsageError("too many FAST cuts");
  std::vector<std::uint8_t> ca(xa.size()), cb(xb.size());
  for (std::size_t r = 0; r < xa.size(); ++r) {
    ca[r] = static_cast<std::uint8_t>(cell_of(cuts_a, xa[r]));
    cb[r] = static_cast<std::uint8_t>(cell_of(cuts_b, xb[r]));
  }
  return quadrant_fit_cells(ca, cb, cuts_a.size(), cuts_b.size(), z, h);
}

FilterResult fast_filter(const Dataset& data, std::span<const std::size_t> train_rows,
                         const LossSpec& loss, std::span<const double> scores,
                         const FilterOptions& options, std::size_t grid_size) {
  const auto rows = subsample_rows(train_rows, options.subsample_cap, options.seed);
  const NewtonState state = state_on(rows, data, loss, scores);
  const auto features = screened_features(options.features, data.features());
  const auto pairs = all_pairs(features);
  check_q(options.q, pairs.size());

  std::vector<std::vector<double>> cuts(data.features());
  std::vector<std::vector<std::uint8_t>> cells(data.features());
  std::vector<double> values(rows.size());
  for (std::size_t f : features) {
    const auto col = data.column(f);
    for (std::size_t r = 0; r < rows.size(); ++r) values[r] = col[rows[r]];
    cuts[f] = fast_grid(values, grid_size);
    cells[f].resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      cells[f][r] = static_cast<std::uint8_t>(cell_of(cuts[f], values[r]));
    }
  }

  std::vector<PairScore> out(pairs.size());
  parallel_for(pairs.size(), options.threads, [&](std::size_t i) {
    const auto [j, k] = pairs[i];
    const QuadrantFit fit = quadrant_fit_cells(cells[j], cells[k], cuts[j].size(), cuts[k].size(),
                                               state.pseudo_response, state.hessian);
    out[i] = PairScore{j, k, fit.sse, fit.sse, fit.sse};
  });
  return rank_pairs(std::move(out), options.q);
}

}  // namespace gami
