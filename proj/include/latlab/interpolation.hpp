#pragma once

#include <vector>

#include "latlab/tensor.hpp"
#include "latlab/trajectory.hpp"

namespace latlab {

struct BezierCurve {
    std::vector<Tensor> control_points;   // P_0..P_n, identical shapes
    int degree() const { return static_cast<int>(control_points.size()) - 1; }
};

struct CurveSamples {
    std::vector<double> u;        // strictly increasing, first 0, last 1
    std::vector<Tensor> latents;
};

/// binom(n,i) * (1-u)^(n-i) * u^i with multiplicative binomials.
double bernstein_weight(int n, int i, double u);

Tensor bezier_point(const BezierCurve& curve, double u);

/// Evaluates at u = k/(m-1), k = 0..m-1.
CurveSamples sample_curve(const BezierCurve& curve, int m);

/// Uniform index subsampling over [neutral, ascending-tau points] with both
/// endpoints pinned.
std::vector<int> control_indices(int total_points, int n_ctrl);

/// Fits a degree-(n_ctrl-1) curve through the subsampled control points and
/// samples m latents along it.
CurveSamples interpolate_trajectory(const Trajectory& traj, int n_ctrl, int m);

BezierCurve trajectory_curve(const Trajectory& traj, int n_ctrl);

/// Interpolated archives share the trajectory archive layout; the manifest
/// records kind "interpolated", the control indices and the u grid.
void save_curve_archive(const Trajectory& source, const CurveSamples& samples,
                        const std::vector<int>& ctrl_indices, const std::string& dir);
struct InterpolatedArchive {
    Trajectory source;        // provenance fields + z_orig (the u=0 sample)
    CurveSamples samples;
    std::vector<int> control_indices;
};
InterpolatedArchive load_curve_archive(const std::string& dir);

} // namespace latlab
