#include "uniemb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uniemb/error.hpp"

namespace uniemb {

std::vector<DetPoint> ComputeDetPoints(std::span<const double> scores,
                                       const std::vector<bool> &is_target) {
  if (scores.size() != is_target.size())
    throw Error(ErrorCode::kInvalidParams, "scores and labels differ in length");
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no scored trials");
  std::size_t n_tar = 0;
  for (bool t : is_target) n_tar += t ? 1 : 0;
  const std::size_t n_non = scores.size() - n_tar;
  if (n_tar == 0 || n_non == 0)
    throw Error(ErrorCode::kSingleClassOnly, "need both target and nontarget trials");
  for (double s : scores)
    if (std::isnan(s)) throw Error(ErrorCode::kNonFinite, "NaN score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<DetPoint> points;
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  std::size_t accepted_tar = 0, accepted_non = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i)
      (is_target[order[i]] ? accepted_tar : accepted_non) += 1;
    points.push_back({threshold,
                      static_cast<double>(n_tar - accepted_tar) / static_cast<double>(n_tar),
                      static_cast<double>(accepted_non) / static_cast<double>(n_non)});
  }
  return points;
}

double EerFromDet(std::span<const DetPoint> points) {
  for (std::size_t k = 1; k < points.size(); ++k) {
    const DetPoint &b = points[k];
    if (b.p_miss > b.p_fa) continue;
    if (b.p_miss == b.p_fa) return b.p_miss;
    const DetPoint &a = points[k - 1];
    const double da = a.p_miss - a.p_fa;  // > 0
    const double db = b.p_miss - b.p_fa;  // < 0
    const double t = da / (da - db);
    return a.p_miss + t * (b.p_miss - a.p_miss);
  }
  // The accept-all point always has p_miss 0 <= p_fa 1.
  return points.empty() ? 0.0 : points.back().p_miss;
}

double ComputeEer(std::span<const double> scores, const std::vector<bool> &is_target) {
  return EerFromDet(ComputeDetPoints(scores, is_target));
}

static void CheckParams(const DcfParams &p) {
  if (!(p.p_tar > 0.0 && p.p_tar < 1.0) || !(p.c_miss > 0.0) || !(p.c_fa > 0.0) ||
      !std::isfinite(p.c_miss) || !std::isfinite(p.c_fa))
    throw Error(ErrorCode::kInvalidParams,
                "need 0 < p_tar < 1 and positive finite costs");
}

double MinDcfFromDet(std::span<const DetPoint> points, const DcfParams &params) {
  CheckParams(params);
  const double w_miss = params.c_miss * params.p_tar;
  const double w_fa = params.c_fa * (1.0 - params.p_tar);
  double best = std::numeric_limits<double>::infinity();
  for (const DetPoint &pt : points) best = std::min(best, w_miss * pt.p_miss + w_fa * pt.p_fa);
  return best / std::min(w_miss, w_fa);
}

double ComputeMinDcf(std::span<const double> scores, const std::vector<bool> &is_target,
                     const DcfParams &params) {
  CheckParams(params);
  return MinDcfFromDet(ComputeDetPoints(scores, is_target), params);
}

DetMetrics Evaluate(std::span<const double> scores, const std::vector<bool> &is_target,
                    const DcfParams &params) {
  CheckParams(params);
  DetMetrics m;
  m.det_points = ComputeDetPoints(scores, is_target);
  m.eer = EerFromDet(m.det_points);
  m.min_dcf = MinDcfFromDet(m.det_points, params);
  m.dcf_params = params;
  return m;
}

}  // namespace uniemb
