#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace freeconv {

enum class MatrixField { unitary, orthogonal };

// Exactly Haar-distributed matrix: Ginibre from the (seed, field, n)-keyed
// philox stream, QR, then the Q columns rescaled by the phases of R's
// diagonal.  Deterministic in (n, seed, field).
Eigen::MatrixXcd sample_haar(int n, std::uint64_t seed,
                             MatrixField field = MatrixField::unitary);

}  // namespace freeconv
