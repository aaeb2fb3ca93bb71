#pragma once

namespace noisycons {

/// Numerical thresholds used by the chain analytics and the disagreement
/// routines. Defaults are the values every check in the library is pinned to;
/// callers may pass a modified copy.
struct Tolerances {
    double row_sum = 1e-12;          // |sum_j P_ij - 1|
    double reversibility = 1e-10;    // relative detailed-balance defect
    double symmetry = 1e-12;         // |P_ij - P_ji|
    double stationarity = 1e-10;     // ||pi^T P - pi^T||_inf
    double hitting_residual = 1e-9;  // per-system residual, scaled by n
    double random_target = 1e-9;     // Kemeny row-sum spread, scaled by (1+K)
    double imaginary_residue = 1e-9; // spectral Kemeny, scaled by (1+|K|)
    double oracle = 1e-12;           // Lyapunov fixed-point increment
    double psd_shift = 1e-12;        // shifted-Cholesky epsilon, times trace/n
    double formation = 1e-9;         // least-squares consistency residual
};

inline constexpr Tolerances default_tolerances{};

} // namespace noisycons
