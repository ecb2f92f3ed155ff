"""Density matrices, the real Bloore parameterization and PPT predicates.

The off-diagonal Bloore variables of a 4x4 real density matrix are stored
as the last axis of an array in the order ``Z_ORDER``
``(z12, z13, z14, z23, z24, z34)`` so that every factor below broadcasts
over leading sample axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

TOL_PSD = 1e-10

Z_ORDER = ("z12", "z13", "z14", "z23", "z24", "z34")
Z_PAIRS = tuple((int(name[1]) - 1, int(name[2]) - 1) for name in Z_ORDER)

SUPPORTED_DIMS = {4: (2, 2), 6: (2, 3)}


class DimensionError(ValueError):
    """Matrix size does not match the requested bipartition."""


def _unpack(z):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 6:
        raise ValueError(f"expected 6 Bloore variables on the last axis, got {z.shape}")
    return tuple(z[..., k] for k in range(6))


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian, unit-trace, positive-semidefinite matrix of size 4 or 6."""

    entries: np.ndarray
    dims: tuple[int, int] = field(default=None)

    def __post_init__(self):
        m = np.asarray(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if m.shape[0] not in SUPPORTED_DIMS:
            raise DimensionError(f"dimension {m.shape[0]} not in {sorted(SUPPORTED_DIMS)}")
        if self.dims is None:
            object.__setattr__(self, "dims", SUPPORTED_DIMS[m.shape[0]])
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_valid(self, tol: float = TOL_PSD) -> bool:
        m = self.entries
        scale = max(np.abs(m).sum(axis=0).max(), 1.0)
        if not np.allclose(m, m.conj().T, atol=tol * scale):
            return False
        if abs(np.trace(m).real - 1.0) > 1e-9:
            return False
        return bool(np.linalg.eigvalsh(m).min() >= -tol * scale)


@dataclass(frozen=True)
class BlooreCoords:
    """Diagonal simplex point plus strictly-upper-triangular z_ij in [-1, 1]."""

    diag: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        z = np.triu(np.asarray(self.z, dtype=float), k=1)
        n = diag.shape[0]
        if z.shape != (n, n):
            raise ValueError(f"z must be {n}x{n}, got {z.shape}")
        if np.any(diag < 0) or abs(diag.sum() - 1.0) > 1e-12:
            raise ValueError("diag must lie on the probability simplex")
        if np.any(np.abs(z) > 1.0):
            raise ValueError("Bloore variables must satisfy |z_ij| <= 1")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_vector(cls, diag, zvec) -> "BlooreCoords":
        """Build 4x4 coordinates from a length-6 vector in ``Z_ORDER``."""
        z = np.zeros((4, 4))
        for (i, j), value in zip(Z_PAIRS, zvec):
            z[i, j] = value
        return cls(diag, z)

    def zvec(self) -> np.ndarray:
        if self.diag.shape[0] != 4:
            raise DimensionError("z-vector form only exists for 4x4 coordinates")
        return np.array([self.z[i, j] for i, j in Z_PAIRS])


@dataclass(frozen=True)
class RestrictedDiag:
    """Diagonal (r, r, 1/2 - r, 1/2 - r) with 0 <= r <= 1/2."""

    rho11: float

    def __post_init__(self):
        if not 0.0 <= self.rho11 <= 0.5:
            raise ValueError(f"rho11 must lie in [0, 1/2], got {self.rho11}")

    @property
    def diag(self) -> np.ndarray:
        r = self.rho11
        return np.array([r, r, 0.5 - r, 0.5 - r])


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not (self.lo <= self.hi)

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def __contains__(self, x) -> bool:
        return not self.empty and self.lo <= x <= self.hi


def bloore_compose(coords: BlooreCoords) -> DensityMatrix:
    d = np.sqrt(coords.diag)
    z = coords.z + coords.z.T
    rho = np.outer(d, d) * z
    np.fill_diagonal(rho, coords.diag)
    return DensityMatrix(rho)


def bloore_compose_batch(diag, z) -> np.ndarray:
    """Vectorized composition for 4x4 real states.

    ``diag`` has shape (..., 4), ``z`` shape (..., 6) in ``Z_ORDER``.
    """
    diag = np.asarray(diag, dtype=float)
    z = np.asarray(z, dtype=float)
    shape = np.broadcast_shapes(diag.shape[:-1], z.shape[:-1])
    rho = np.zeros(shape + (4, 4))
    for k in range(4):
        rho[..., k, k] = diag[..., k]
    for k, (i, j) in enumerate(Z_PAIRS):
        v = np.sqrt(diag[..., i] * diag[..., j]) * z[..., k]
        rho[..., i, j] = v
        rho[..., j, i] = v
    return rho


def factor_B(z) -> np.ndarray:
    """z-only factor of det(rho) = prod(rho_ii) * B for 4x4 real states."""
    z12, z13, z14, z23, z24, z34 = _unpack(z)
    return (
        (z34**2 - 1) * z12**2
        + 2 * (z14 * (z24 - z23 * z34) + z13 * (z23 - z24 * z34)) * z12
        - z23**2
        - z24**2
        - z34**2
        + z14**2 * (z23**2 - 1)
        + z13**2 * (z24**2 - 1)
        + 2 * z23 * z24 * z34
        + 2 * z13 * z14 * (z34 - z23 * z24)
        + 1
    )


def factor_D(z) -> np.ndarray:
    """z-only factor of det(rho_PT) for the diagonal (r, r, 1/2-r, 1/2-r).

    det(rho_PT) = (1/4) (1 - 2 r)^2 r^2 D.
    """
    z12, z13, z14, z23, z24, z34 = _unpack(z)
    return (
        (z24**2 - 1) * z13**2
        + 2 * z23 * (z34 - z14 * z24) * z13
        - z24**2
        - z34**2
        + (z14 - 1) * (z14 + 1) * (z23 - 1) * (z23 + 1)
        + 2 * z14 * z24 * z34
        + (z34**2 - 1) * z12**2
        + 2 * (z13 * z14 + z23 * z24 - (z14 * z23 + z13 * z24) * z34) * z12
    )


def factor_difference(z) -> np.ndarray:
    """Closed form of B - D.

    The product is 2 (z14 - z23)(z13 - z24)(z34 - z12); with the factor
    (z12 - z34) the sign is reversed.
    """
    z12, z13, z14, z23, z24, z34 = _unpack(z)
    return 2 * (z14 - z23) * (z13 - z24) * (z34 - z12)


def minor3_factor(z) -> np.ndarray:
    """z-factor of the principal 3x3 minor on rows/columns (1, 2, 3)."""
    z12, z13, _, z23, _, _ = _unpack(z)
    return 1 - z12**2 - z13**2 - z23**2 + 2 * z12 * z13 * z23


def pt_minor3_factor(z) -> np.ndarray:
    """z-factor of the (1, 2, 3) principal minor of rho_PT, restricted diagonal.

    Under rho11 = rho22 and rho33 = rho44 the partial transpose of a real
    state only swaps z14 and z23.
    """
    z12, z13, z14, _, _, _ = _unpack(z)
    return 1 - z12**2 - z13**2 - z14**2 + 2 * z12 * z13 * z14


def pt_minor2(diag, z) -> np.ndarray:
    """The (1, 4) principal 2x2 minor of rho_PT for a general real diagonal.

    Equals rho11 rho44 - rho22 rho33 z23^2; the (2, 3) minor is its mirror.
    """
    diag = np.asarray(diag, dtype=float)
    z23 = np.asarray(z, dtype=float)[..., 3]
    return diag[..., 0] * diag[..., 3] - diag[..., 1] * diag[..., 2] * z23**2


def cad_limits(z12, z13, z14, z23=None, z24=None) -> tuple[Interval, Interval, Interval | None]:
    """Nested integration limits for (z23, z24, z34) of a feasible 4x4 real state.

    The z34 interval is only returned when z23 and z24 are supplied; an
    infeasible prefix yields an empty interval.
    """
    r12 = np.sqrt(max(1.0 - z12**2, 0.0))
    i23 = Interval(z12 * z13 - r12 * np.sqrt(max(1.0 - z13**2, 0.0)),
                   z12 * z13 + r12 * np.sqrt(max(1.0 - z13**2, 0.0)))
    i24 = Interval(z12 * z14 - r12 * np.sqrt(max(1.0 - z14**2, 0.0)),
                   z12 * z14 + r12 * np.sqrt(max(1.0 - z14**2, 0.0)))
    if z23 is None or z24 is None:
        return i23, i24, None
    lo, hi, ok = cad_z34_bounds(z12, z13, z14, z23, z24)
    i34 = Interval(float(lo), float(hi)) if ok else Interval(np.inf, -np.inf)
    return i23, i24, i34


def cad_z23_bounds(z12, z13):
    r = np.sqrt(np.clip(1 - z12**2, 0, None) * np.clip(1 - z13**2, 0, None))
    c = z12 * z13
    return c - r, c + r


def cad_z34_bounds(z12, z13, z14, z23, z24):
    """Vectorized z34 limits; returns (lo, hi, valid)."""
    m123 = 1 - z12**2 - z13**2 - z23**2 + 2 * z12 * z13 * z23
    m124 = 1 - z12**2 - z14**2 - z24**2 + 2 * z12 * z14 * z24
    # radicands are -m123 and -m124 individually; their product is m123*m124
    valid = (m123 >= 0) & (m124 >= 0) & (1 - z12**2 > 0)
    s = np.sqrt(np.clip(m123 * m124, 0, None))
    denom = np.where(valid, 1 - z12**2, 1.0)
    centre = z13 * z14 - z12 * z14 * z23 - z12 * z13 * z24 + z23 * z24
    return (centre - s) / denom, (centre + s) / denom, valid


def _psd(m: np.ndarray, tol: float) -> np.ndarray:
    w = np.linalg.eigvalsh(m)
    scale = np.maximum(np.abs(m).sum(axis=-2).max(axis=-1), 1e-300)
    return w[..., 0] >= -tol * scale


def is_feasible(coords: BlooreCoords, tol: float = TOL_PSD) -> bool:
    """Feasibility of 4x4 real Bloore coordinates.

    With every |z_ij| <= 1 the 2x2 minors are nonnegative, so B >= 0 and
    the (1, 2, 3) minor factor >= 0 suffice.  A zero diagonal entry makes
    the factor signs uninformative and the eigenvalues are checked instead.
    """
    if coords.diag.shape[0] != 4 or np.any(coords.diag <= 0):
        return bool(_psd(bloore_compose(coords).entries, tol))
    z = coords.zvec()
    return bool(factor_B(z) >= 0 and minor3_factor(z) >= 0)


def feasible_z(z) -> np.ndarray:
    """Vectorized feasibility of z-vectors (strictly positive diagonal)."""
    return (factor_B(z) >= 0) & (minor3_factor(z) >= 0)


def partial_transpose(rho, dims: tuple[int, int] | None = None) -> np.ndarray:
    """Transpose the second tensor factor; accepts stacks of matrices."""
    if isinstance(rho, DensityMatrix):
        dims = dims or rho.dims
        rho = rho.entries
    rho = np.asarray(rho)
    n = rho.shape[-1]
    if dims is None:
        if n not in SUPPORTED_DIMS:
            raise DimensionError(f"no default bipartition for dimension {n}")
        dims = SUPPORTED_DIMS[n]
    da, db = dims
    if da * db != n or rho.shape[-2] != n:
        raise DimensionError(f"dims {dims} do not match matrix of size {rho.shape[-2:]}")
    lead = rho.shape[:-2]
    t = rho.reshape(lead + (da, db, da, db))
    k = len(lead)
    axes = list(range(k)) + [k, k + 3, k + 2, k + 1]
    return t.transpose(axes).reshape(lead + (n, n))


def is_separable(rho, dims: tuple[int, int] | None = None, tol: float = TOL_PSD):
    """PPT test; exact separability criterion for 2x2 and 2x3 systems.

    Works on a single matrix or a stack; returns a bool or a bool array.
    """
    pt = partial_transpose(rho, dims)
    out = _psd(pt, tol)
    return bool(out) if np.ndim(out) == 0 else out


def is_separable_restricted(rho11: float, z, feasible_tol: float = 0.0):
    """Separability of a feasible restricted-diagonal state via the sign of D."""
    if not 0.0 < rho11 < 0.5:
        coords = BlooreCoords.from_vector(RestrictedDiag(rho11).diag, z)
        return is_separable(bloore_compose(coords))
    return factor_D(z) >= -feasible_tol


def principal_minors(m: np.ndarray, k: int) -> dict[tuple[int, ...], float]:
    """All k x k principal minors of a square matrix, keyed by index tuple."""
    n = m.shape[0]
    return {idx: float(np.linalg.det(m[np.ix_(idx, idx)])) for idx in combinations(range(n), k)}
