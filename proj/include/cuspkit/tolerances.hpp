#pragma once

namespace cuspkit {

/// Every numerical threshold used by the analysis pipeline, in one place.
struct Tolerances {
    // critical manifold
    double y_residual = 1e-12;   // |f| after solving for the slow variable
    int newton_max_iter = 50;
    double fy_min = 1e-14;       // |f_y| below this is a solvability failure

    // symmetric folds and cusps
    int fold_scan_intervals = 400;
    double fold_residual = 1e-10;  // |f1 - f2| after polishing
    double det_df = 1e-8;
    double nondegeneracy = 1e-10;  // |D*| and |A| must exceed this

    // derivative engine cross-checks
    double jet_analytic_rel = 1e-6;
    double jet_fd_rel = 1e-5;

    // reduction / conditions
    double condition_margin = 1e-10;
    double resonance = 1e-6;

    // equilibria and Hopf
    double equilibrium_residual = 1e-12;
    double hopf_trace = 1e-10;
    double nonhyperbolic = 1e-12;
};

inline const Tolerances& default_tolerances() {
    static const Tolerances tol{};
    return tol;
}

}  // namespace cuspkit
