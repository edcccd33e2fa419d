#pragma once

#include "desense/filter_discrete.hpp"
#include "desense/model.hpp"
#include "desense/rng.hpp"

namespace desense {

// Deterministic generators for randomized checks. Shared by the self-check
// suite and the test binaries so both exercise the same model family.

Matrix random_matrix(CaseRng& rng, int rows, int cols, double scale = 1.0);

/// Symmetric positive definite: A Aᵀ + ridge I.
Matrix random_spd(CaseRng& rng, int n, double scale = 1.0, double ridge = 1e-3);

/// Random square matrix rescaled to the given spectral radius.
Matrix random_stable_matrix(CaseRng& rng, int n, double spectral_radius = 0.9);

/// Affine-in-parameters discrete model with a stable nominal transition,
/// random derivative directions, and SPD noise covariances.
ParametricDiscreteModel make_random_discrete_model(CaseRng& rng, int state_dim, int meas_dim,
                                                   int param_dim);

/// Continuous counterpart: nominal dynamics with eigenvalues shifted into the
/// left half plane.
ParametricContinuousModel make_random_continuous_model(CaseRng& rng, int state_dim, int meas_dim,
                                                       int param_dim);

/// Random prior (x̂⁻, P⁻ SPD, S⁻ dense) at the given epoch.
FilterState make_random_prior(CaseRng& rng, int state_dim, int param_dim);

}  // namespace desense
