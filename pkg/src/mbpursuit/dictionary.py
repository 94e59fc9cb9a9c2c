"""Measurement-matrix generation and incoherence metrics.

Covers the virtual-array steering dictionary (transmit/receive steering
vectors on a uniform direction grid), complex Gaussian dictionaries, column
normalization, and the classical incoherence quantities: mutual coherence,
cumulative coherence (Babel function) and spark lower bounds.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import numlin
from .errors import NonIntegerAperture, TooLarge

DEFAULT_SUBSET_BUDGET = 10**6


@dataclass(eq=False)
class ArrayGeometry:
    """Transmit/receive element positions, normalized to the array aperture.

    Positions live in [-0.5, 0.5]; the physical position of element i is
    aperture * position_i / 2 (in wavelength units).
    """

    tx_positions: np.ndarray
    rx_positions: np.ndarray
    aperture: float

    def __post_init__(self):
        self.tx_positions = np.asarray(self.tx_positions, dtype=float).ravel()
        self.rx_positions = np.asarray(self.rx_positions, dtype=float).ravel()
        self.aperture = float(self.aperture)
        if self.tx_positions.size < 1 or self.rx_positions.size < 1:
            raise ValueError("need at least one transmitter and one receiver")
        for pos in (self.tx_positions, self.rx_positions):
            if np.any(np.abs(pos) > 0.5):
                raise ValueError("element positions must lie in [-0.5, 0.5]")
        if self.aperture <= 0:
            raise ValueError("aperture must be positive")

    @property
    def num_tx(self):
        return self.tx_positions.size

    @property
    def num_rx(self):
        return self.rx_positions.size


@dataclass(eq=False)
class Dictionary:
    """A dense complex measurement matrix plus provenance metadata."""

    matrix: np.ndarray
    provenance: str = "user_supplied"
    normalized: bool = False
    geometry: ArrayGeometry | None = None
    grid: np.ndarray | None = None
    seed: object = None

    def __post_init__(self):
        self.matrix = numlin.as_complex_matrix(self.matrix)
        if self.normalized:
            norms = np.linalg.norm(self.matrix, axis=0)
            if np.max(np.abs(norms - 1.0)) > 1e-10:
                raise ValueError("dictionary flagged normalized has non-unit columns")

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]


def matrix_of(A):
    """Accept a Dictionary or a plain array; return the 2-d complex matrix."""
    if isinstance(A, Dictionary):
        return A.matrix
    return numlin.as_complex_matrix(A)


def normalize_columns(M):
    """Scale every column to unit l2 norm."""
    M = numlin.as_complex_matrix(M)
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms <= numlin.ABS_ZERO_FLOOR):
        raise ValueError("cannot normalize a zero column")
    return M / norms


def direction_grid(aperture):
    """Uniform grid of 2/Z-spaced direction points covering [-1, 1].

    Both endpoints are included, so an integer aperture Z yields exactly
    Z + 1 grid points.
    """
    Z = float(aperture)
    if Z <= 0 or Z != round(Z):
        raise NonIntegerAperture(f"aperture must be a positive integer, got {aperture!r}")
    Z = int(round(Z))
    return -1.0 + 2.0 * np.arange(Z + 1) / Z


def steering_column(geom, theta):
    """Virtual-array response for direction theta: kron(tx steering, rx steering)."""
    phase = 2j * np.pi * geom.aperture * theta
    b = np.exp(phase * geom.rx_positions)
    c = np.exp(phase * geom.tx_positions)
    return np.kron(c, b)


def mimo_radar_dictionary(geom):
    """Steering dictionary over the full direction grid, column-normalized.

    Rows index transmit/receive element pairs (MN of them); columns index the
    Z + 1 grid directions.  Before normalization every column has norm
    sqrt(MN) because all entries are unit modulus.
    """
    phi = direction_grid(geom.aperture)
    phase = 2j * np.pi * geom.aperture
    b = np.exp(phase * np.outer(geom.rx_positions, phi))  # N x n
    c = np.exp(phase * np.outer(geom.tx_positions, phi))  # M x n
    A = np.einsum("mg,ng->mng", c, b).reshape(geom.num_tx * geom.num_rx, phi.size)
    A /= math.sqrt(geom.num_tx * geom.num_rx)
    return Dictionary(A, provenance="mimo_radar", normalized=True, geometry=geom, grid=phi)


def random_geometry(M, N, Z, seed):
    """Draw element positions i.i.d. uniform over [-0.5, 0.5].

    Transmitters are drawn first, then receivers, so results are reproducible
    for a given seed.
    """
    if M < 1 or N < 1:
        raise ValueError("need M >= 1 transmitters and N >= 1 receivers")
    rng = np.random.default_rng(seed)
    tx = rng.uniform(-0.5, 0.5, size=int(M))
    rx = rng.uniform(-0.5, 0.5, size=int(N))
    return ArrayGeometry(tx, rx, Z)


def gaussian_dictionary(m, n, seed):
    """i.i.d. standard complex Gaussian entries, then unit-norm columns.

    Real and imaginary parts are independent N(0, 1/2) draws; the variance
    convention washes out after normalization.
    """
    if m < 1 or n < 1:
        raise ValueError("need m, n >= 1")
    rng = np.random.default_rng(seed)
    re = rng.standard_normal((int(m), int(n)))
    im = rng.standard_normal((int(m), int(n)))
    A = (re + 1j * im) / math.sqrt(2.0)
    return Dictionary(normalize_columns(A), provenance="gaussian", normalized=True, seed=seed)


def absolute_gram(A):
    """|A^H A| with an exactly zeroed diagonal (off-diagonal correlations)."""
    M = matrix_of(A)
    Q = np.abs(M.conj().T @ M)
    np.fill_diagonal(Q, 0.0)
    return Q


def coherence(A):
    """Mutual coherence: the largest off-diagonal |a_i^H a_j|."""
    Q = absolute_gram(A)
    if Q.shape[0] < 2:
        return 0.0
    return float(Q.max())


def babel(A, K):
    """Cumulative coherence: worst l1 mass of K correlations against one atom.

    For each atom g this sums the K largest |a_i^H a_j| over i != g and takes
    the maximum over g; equivalent to the max over all size-K supports.
    """
    Q = absolute_gram(A)
    n = Q.shape[0]
    K = int(K)
    if not 1 <= K < n:
        raise ValueError("need 1 <= K < number of columns")
    top = np.sort(Q, axis=0)[-K:, :]
    return float(top.sum(axis=0).max())


def spark_exceeds(A, s, budget=DEFAULT_SUBSET_BUDGET, rtol=numlin.DEFAULT_RTOL):
    """True iff every set of s columns is linearly independent (spark > s).

    Exhaustive over all C(n, s) subsets; refuses to run past the budget.
    """
    import itertools

    M = matrix_of(A)
    n = M.shape[1]
    s = int(s)
    if not 1 <= s <= n:
        raise ValueError("need 1 <= s <= number of columns")
    count = math.comb(n, s)
    if count > budget:
        raise TooLarge(f"{count} subsets exceed the budget of {budget}")
    for subset in itertools.combinations(range(n), s):
        sv = np.linalg.svd(M[:, subset], compute_uv=False)
        if sv[0] <= numlin.ABS_ZERO_FLOOR or sv[-1] <= rtol * sv[0]:
            return False
    return True
