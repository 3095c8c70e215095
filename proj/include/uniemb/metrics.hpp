#pragma once

#include <span>
#include <vector>

namespace uniemb {

// Detection operating point: trials with score >= threshold are accepted.
struct DetPoint {
  double threshold;
  double p_miss;
  double p_fa;
};

struct DcfParams {
  double p_tar = 0.05;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

struct DetMetrics {
  double eer = 0.0;
  double min_dcf = 0.0;
  DcfParams dcf_params;
  std::vector<DetPoint> det_points;
};

// Operating points in order of descending threshold. The first point rejects
// everything (threshold +inf, p_miss 1, p_fa 0); then one point per distinct
// score, the last of which accepts everything (p_miss 0, p_fa 1).
// `is_target[i]` labels scores[i]. Throws EmptyInput, SingleClassOnly.
std::vector<DetPoint> ComputeDetPoints(std::span<const double> scores,
                                       const std::vector<bool> &is_target);

// Where p_miss = p_fa, by linear interpolation between the two adjacent
// operating points that bracket the crossing.
double EerFromDet(std::span<const DetPoint> points);
double ComputeEer(std::span<const double> scores, const std::vector<bool> &is_target);

// Minimum normalized detection cost over all operating points. Throws
// InvalidParams.
double MinDcfFromDet(std::span<const DetPoint> points, const DcfParams &params);
double ComputeMinDcf(std::span<const double> scores, const std::vector<bool> &is_target,
                     const DcfParams &params = {});

DetMetrics Evaluate(std::span<const double> scores, const std::vector<bool> &is_target,
                    const DcfParams &params = {});

}  // namespace uniemb
