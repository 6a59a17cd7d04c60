"""Dense complex matrix helpers shared by every other module.

Matrices are plain numpy ``complex128`` arrays.  Inversion goes through an LU
factorization with partial pivoting and an explicit pivot check, so that a
singular resolvent surfaces as :class:`SingularMatrixError` instead of a
garbage inverse.  Random matrices come from a fixed 64-bit generator
(splitmix64) so seeded data reproduces bit-for-bit across platforms.
"""

import warnings

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import BadShapeError, NonFiniteError, SingularMatrixError

__all__ = [
    "SplitMix64",
    "frobenius",
    "identity",
    "inverse",
    "matrix_powers",
    "random_matrix",
    "root_of_unity",
    "trace_powers",
]

_MASK64 = (1 << 64) - 1

_EXACT_ROOTS = {1: 1.0 + 0j, 2: -1.0 + 0j, 4: 1.0j}


def root_of_unity(k: int, power: int = 1) -> complex:
    """exp(2 pi i power / k), exact when the value is a Gaussian unit."""
    import cmath

    if k in _EXACT_ROOTS:
        return _EXACT_ROOTS[k] ** (power % k)
    return cmath.exp(2j * cmath.pi * power / k)


class SplitMix64:
    """Deterministic 64-bit stream (splitmix64).

    Update rule, all arithmetic mod 2**64::

        state += 0x9E3779B97F4A7C15
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        output = z ^ (z >> 31)

    Doubles are formed from the top 53 bits, uniform on [0, 1).
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_symmetric(self) -> float:
        """Uniform double in [-1, 1)."""
        return 2.0 * self.uniform() - 1.0

    def complex_matrix(self, n_rows: int, n_cols: int | None = None) -> np.ndarray:
        """Matrix with Re/Im entries uniform in [-1, 1), row-major draw order."""
        n_cols = n_rows if n_cols is None else n_cols
        out = np.empty((n_rows, n_cols), dtype=complex)
        for i in range(n_rows):
            for j in range(n_cols):
                re = self.uniform_symmetric()
                im = self.uniform_symmetric()
                out[i, j] = complex(re, im)
        return out


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def random_matrix(n: int, seed: int) -> np.ndarray:
    """Seeded n x n complex matrix, entries uniform in [-1, 1) + [-1, 1)i.

    Identical (n, seed) pairs produce identical matrices on every platform;
    see :class:`SplitMix64` for the generator definition.
    """
    if n < 1:
        raise BadShapeError(f"matrix size must be positive, got {n}")
    return SplitMix64(seed).complex_matrix(n)


def _as_square(m: np.ndarray, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise BadShapeError(f"{what} must be square, got shape {m.shape}")
    return m


def inverse(m: np.ndarray, pivot_rtol: float = 1e-12) -> np.ndarray:
    """Inverse via LU with partial pivoting.

    Raises :class:`SingularMatrixError` when the smallest pivot falls below
    ``pivot_rtol * ||m||_F``; for structure resolvents this means the chosen
    parameter sits on the singular locus and should be resampled.
    """
    m = _as_square(m, "inverse() argument")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("inverse() argument has non-finite entries")
    n = m.shape[0]
    scale = max(frobenius(m), np.finfo(float).tiny)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the pivot check below is the contract
        lu, piv = lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= pivot_rtol * scale:
        raise SingularMatrixError(
            f"pivot {pivots.min():.3e} below {pivot_rtol:.0e} * ||M|| = {pivot_rtol * scale:.3e}"
        )
    return lu_solve((lu, piv), identity(n), check_finite=False)


def matrix_powers(m: np.ndarray, count: int) -> list[np.ndarray]:
    """[I, m, m^2, ..., m^(count-1)] by repeated multiplication."""
    m = _as_square(m, "matrix_powers() argument")
    out = [identity(m.shape[0])]
    for _ in range(count - 1):
        out.append(out[-1] @ m)
    return out


def trace_powers(m: np.ndarray, jmax: int) -> list[complex]:
    """[tr(m), tr(m^2), ..., tr(m^jmax)] by repeated multiplication."""
    m = _as_square(m, "trace_powers() argument")
    if jmax < 1:
        raise BadShapeError(f"jmax must be >= 1, got {jmax}")
    traces = []
    power = m
    for _ in range(jmax):
        t = complex(np.trace(power))
        if not (np.isfinite(t.real) and np.isfinite(t.imag)):
            raise NonFiniteError("trace_powers() overflowed")
        traces.append(t)
        power = power @ m
    return traces
