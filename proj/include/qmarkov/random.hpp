#pragma once

#include "qmarkov/channels.hpp"
#include "qmarkov/trajectories.hpp"

namespace qmarkov::random {

/// d x d matrix with i.i.d. standard complex Gaussian entries.
Mat ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal removed.
Mat haar_unitary(Eigen::Index d, Rng& rng);

/// Random unit vector (Haar).
Vec unit_vector(Eigen::Index d, Rng& rng);

/// G G^dagger / tr, G Ginibre of shape d x rank.
DensityOperator density_matrix(const HilbertSpace& space, Rng& rng, Eigen::Index rank = -1);

/// Diagonal state with Dirichlet(1,...,1) populations.
DensityOperator diagonal_state(const HilbertSpace& space, Rng& rng);

/// Hermitian matrix with Gaussian entries.
Mat hermitian(Eigen::Index d, Rng& rng);

/// Kraus family with m operators extracted from a Haar unitary on S (x) C^m.
KrausChannel channel(const HilbertSpace& space, int m, Rng& rng);

}  // namespace qmarkov::random
