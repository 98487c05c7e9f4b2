#pragma once

#include "pseudomode/transport.hpp"

#include <vector>

namespace pseudomode {

struct Axis {
    double lo = 0.0;
    double h = 1.0;
    int n = 1;
    double at(int i) const { return lo + h * i; }
};

/// Complex samples on a tensor grid; axis 0 is t, then the x-axes, then the y-axes.
/// Row-major storage with the last axis fastest.
struct FieldGrid {
    std::vector<Axis> axes;
    int nx = 1;
    int ny = 1;
    double lambda = 1.0;
    std::vector<cd> values;

    size_t size() const;
    size_t stride(int axis) const;
    double cell_volume() const;
    FieldGrid zeros_like() const;
};

struct GridSpec {
    int n_t = 512;
    int n_gx = 0; // 0: chosen from the phase
    int n_gy = 0;
    double margin = 0.1;
    double t_pad = 0.2;
    double leak = 1e-12;
    size_t max_points = size_t(1) << 24;
};

/// Axes covering the cutoff support (capped by the Gaussian envelope) with the requested margins.
FieldGrid make_grid(const PhaseTrajectory& traj, const AmplitudeSet& amp, const GridSpec& spec);

/// u = e^{i lambda omega} * chi * psi * sum_l lambda^{-l kappa} phi_l on the grid of `like`.
FieldGrid synthesize(const PhaseTrajectory& traj, const AmplitudeSet& amp, const FieldGrid& like);

struct ExpansionOptions {
    // true: the cutoffs sit inside the differentiated amplitude (exact pointwise P* u);
    // false: cutoff * e^{i lambda omega} * (conjugated operator applied to the amplitude)
    bool differentiate_cutoff = true;
};

FieldGrid apply_via_expansion(const PhaseTrajectory& traj, const AmplitudeSet& amp, const FieldGrid& like,
                              const ExpansionOptions& opt = {});

/// diff_op applied to the sampled field: spectral in x and y, fourth-order differences in t.
FieldGrid apply_direct(const ModelProblem& model, const FieldGrid& field);

double l2_norm(const FieldGrid& f);
double sobolev_norm(const FieldGrid& f, double s);

/// Fourier multiplier: 0 on the cone of half-angle `aperture` around `direction` (in (tau, xi, eta)),
/// 1 outside twice the aperture, smooth in between.
FieldGrid cone_cutoff_apply(const FieldGrid& f, const Eigen::VectorXd& direction, double aperture);

/// In-place discrete Fourier transform along one axis.
void fft_axis(FieldGrid& f, int axis, bool inverse);
/// Physical angular frequency of index j on an axis.
double axis_frequency(const Axis& a, int j);

} // namespace pseudomode
