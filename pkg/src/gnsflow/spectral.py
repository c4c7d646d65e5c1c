"""Spectral representation of periodic fields: grids, transforms, reductions.

All fields live on an n^3 periodic lattice of side ``period``. Spectral
coefficients follow the convention ``coeffs = fftn(values) / n^3``, so a
constant field c has ``coeffs[0,0,0] = c`` and Parseval reads
``mean(|f|^2) = sum(|coeffs|^2)``. Wavenumbers are ``(2*pi/period) * m`` with
integer aliases m in [-n/2, n/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "Grid",
    "SpectralField",
    "ShellSpectrum",
    "CorruptedFieldError",
    "build_grid",
    "forward_transform",
    "inverse_transform",
    "dealias",
    "shell_reduce_max",
    "shell_reduce_weighted_l2",
    "hermitian_deviation",
    "hermitian_symmetrize",
    "set_fft_workers",
    "get_fft_workers",
]

# Hermitian symmetry: construction tolerance vs. reconstruction rejection.
HERMITIAN_BUILD_TOL = 1e-12
HERMITIAN_REJECT_TOL = 1e-9

# exp() overflow guard, natural-log units.
EXP_GUARD = 700.0

_fft_workers = 1


def set_fft_workers(n: int) -> None:
    """Set the worker count passed to scipy.fft (single-threaded by default)."""
    global _fft_workers
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"fft worker count must be a positive integer, got {n!r}")
    _fft_workers = n


def get_fft_workers() -> int:
    return _fft_workers


def fftn(values: np.ndarray) -> np.ndarray:
    """Forward 3-D FFT with the package normalization (divide by n^3)."""
    return scipy.fft.fftn(values, axes=(-3, -2, -1), norm="forward", workers=_fft_workers)


def ifftn(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fftn` (no extra scaling)."""
    return scipy.fft.ifftn(coeffs, axes=(-3, -2, -1), norm="forward", workers=_fft_workers)


class CorruptedFieldError(ValueError):
    """A spectral field violates Hermitian symmetry beyond tolerance."""

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


@dataclass(frozen=True)
class Grid:
    """Cubic periodic lattice: n_per_axis points per axis, side length period.

    dealias_fraction is the kept fraction of the one-sided mode range per axis
    (2/3 rule by default).
    """

    n_per_axis: int
    period: float = 2.0 * math.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if not isinstance(self.n_per_axis, int):
            raise ValueError(f"n_per_axis must be an int, got {type(self.n_per_axis).__name__}")
        if self.n_per_axis < 4 or self.n_per_axis % 2 != 0:
            raise ValueError(f"n_per_axis must be even and >= 4, got {self.n_per_axis}")
        if not (self.period > 0.0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive and finite, got {self.period}")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_per_axis
        return (n, n, n)

    @property
    def spacing(self) -> float:
        """Wavenumber spacing 2*pi/period (also the physical lattice spacing is period/n)."""
        return 2.0 * math.pi / self.period

    @property
    def mode_weight(self) -> float:
        """Lattice measure (2*pi/period)^3 for discretized L^2_xi sums."""
        return self.spacing**3

    @property
    def cell_volume(self) -> float:
        """Physical cell volume (period/n)^3 for discretized L^p_x sums."""
        return (self.period / self.n_per_axis) ** 3

    @cached_property
    def alias_integers(self) -> np.ndarray:
        """Signed integer mode aliases per axis, in FFT storage order."""
        n = self.n_per_axis
        arr = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Physical wavenumbers (2*pi/period)*alias per axis, FFT storage order."""
        arr = self.spacing * self.alias_integers.astype(np.float64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def k_components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (n,1,1), (1,n,1), (1,1,n) wavenumber component arrays."""
        kx, ky, kz = np.meshgrid(self.wavenumbers, self.wavenumbers, self.wavenumbers,
                                 indexing="ij", sparse=True)
        for a in (kx, ky, kz):
            a.setflags(write=False)
        return kx, ky, kz

    @cached_property
    def k_sq(self) -> np.ndarray:
        kx, ky, kz = self.k_components
        arr = kx**2 + ky**2 + kz**2
        arr.setflags(write=False)
        return arr

    @cached_property
    def k_norm(self) -> np.ndarray:
        arr = np.sqrt(self.k_sq)
        arr.setflags(write=False)
        return arr

    @cached_property
    def k_max(self) -> float:
        """Largest |k| on the lattice (corner mode)."""
        return float(np.sqrt(3.0) * self.spacing * (self.n_per_axis // 2))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean keep-mask: |alias| <= dealias_fraction * n/2 per axis."""
        cut = self.dealias_fraction * (self.n_per_axis / 2.0)
        keep1d = np.abs(self.alias_integers) <= cut
        mask = keep1d[:, None, None] & keep1d[None, :, None] & keep1d[None, None, :]
        mask.setflags(write=False)
        return mask

    @cached_property
    def inv_k_sq(self) -> np.ndarray:
        """1/|k|^2 with the k = 0 entry set to 0."""
        with np.errstate(divide="ignore"):
            arr = np.where(self.k_sq > 0.0, 1.0 / self.k_sq, 0.0)
        arr.setflags(write=False)
        return arr


def build_grid(n_per_axis: int, period: float = 2.0 * math.pi,
               dealias_fraction: float = 2.0 / 3.0) -> Grid:
    """Validate and construct a Grid (n_per_axis even and >= 4, period > 0)."""
    return Grid(n_per_axis=n_per_axis, period=float(period),
                dealias_fraction=float(dealias_fraction))


def _reverse_modes(coeffs: np.ndarray) -> np.ndarray:
    """Return c[-i mod n, -j mod n, -l mod n] for the trailing three axes."""
    rev = coeffs[..., ::-1, ::-1, ::-1]
    return np.roll(rev, shift=(1, 1, 1), axis=(-3, -2, -1))


def hermitian_deviation(coeffs: np.ndarray) -> float:
    """Max absolute deviation |c(k) - conj(c(-k))| over the lattice."""
    return float(np.max(np.abs(coeffs - np.conj(_reverse_modes(coeffs)))))


def hermitian_symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian-symmetric subspace (real physical fields)."""
    return 0.5 * (coeffs + np.conj(_reverse_modes(coeffs)))


@dataclass(frozen=True)
class SpectralField:
    """A scalar periodic field stored by its spectral coefficients.

    Coefficients are Hermitian-symmetric within HERMITIAN_BUILD_TOL at
    construction; callers may bypass the check for internally produced data
    via check=False paths in the module functions.
    """

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = self.coeffs
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        if c.dtype != np.complex128:
            object.__setattr__(self, "coeffs", c.astype(np.complex128))

    def check_symmetry(self, tol: float = HERMITIAN_BUILD_TOL) -> float:
        dev = hermitian_deviation(self.coeffs)
        if dev > tol:
            raise CorruptedFieldError(
                f"spectral field breaks Hermitian symmetry: deviation {dev:.3e} > {tol:.1e}", dev)
        return dev


def forward_transform(grid: Grid, physical: np.ndarray) -> SpectralField:
    """Transform a real physical-space array into a SpectralField."""
    arr = np.asarray(physical)
    if arr.shape != grid.shape:
        raise ValueError(f"physical array shape {arr.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(arr):
        if np.max(np.abs(arr.imag)) > 0.0:
            raise ValueError("physical values must be real")
        arr = arr.real
    return SpectralField(grid, fftn(arr.astype(np.float64)))


def inverse_transform(spectral: SpectralField, check: bool = True) -> np.ndarray:
    """Reconstruct real physical values; rejects non-Hermitian input.

    Symmetry deviation above HERMITIAN_REJECT_TOL raises CorruptedFieldError.
    """
    if check:
        dev = hermitian_deviation(spectral.coeffs)
        if dev > HERMITIAN_REJECT_TOL:
            raise CorruptedFieldError(
                f"cannot reconstruct a real field: Hermitian deviation {dev:.3e} "
                f"exceeds {HERMITIAN_REJECT_TOL:.1e}", dev)
    return ifftn(spectral.coeffs).real


def dealias(spectral: SpectralField) -> SpectralField:
    """Zero all modes with any |alias| above dealias_fraction * n/2 (keep-mask rule)."""
    return SpectralField(spectral.grid, spectral.coeffs * spectral.grid.dealias_mask)


@dataclass(frozen=True)
class ShellSpectrum:
    """Per-shell maxima of |coeffs| over equal-width |k| shells covering [0, k_max].

    values[s] is the max over modes with |k| in shell s (0 for empty shells,
    flagged in `empty`); peak_wavenumbers[s] is the |k| at which the max is
    attained (NaN for empty shells).
    """

    shell_edges: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    peak_wavenumbers: np.ndarray

    def __post_init__(self) -> None:
        if len(self.shell_edges) != len(self.values) + 1:
            raise ValueError("shell_edges must have one more entry than values")
        if np.any(np.diff(self.shell_edges) <= 0):
            raise ValueError("shell_edges must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("shell maxima must be nonnegative")

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0

    @property
    def n_shells(self) -> int:
        return len(self.values)


def shell_reduce_max(spectral: SpectralField, n_shells: int) -> ShellSpectrum:
    """Reduce |coeffs| to per-shell maxima over n_shells equal-width |k| shells."""
    if not isinstance(n_shells, int) or n_shells < 2:
        raise ValueError(f"n_shells must be an int >= 2, got {n_shells!r}")
    grid = spectral.grid
    kmax = grid.k_max
    edges = np.linspace(0.0, kmax, n_shells + 1)
    width = kmax / n_shells

    knorm = grid.k_norm.ravel()
    mag = np.abs(spectral.coeffs).ravel()
    idx = np.minimum((knorm / width).astype(np.int64), n_shells - 1)

    values = np.zeros(n_shells)
    np.maximum.at(values, idx, mag)
    counts = np.bincount(idx, minlength=n_shells)

    # |k| of each shell's peak: write in ascending-magnitude order so the
    # final write per shell corresponds to the shell maximum.
    order = np.argsort(mag, kind="stable")
    peaks = np.full(n_shells, np.nan)
    peaks[idx[order]] = knorm[order]
    peaks[counts == 0] = np.nan
    return ShellSpectrum(shell_edges=edges, values=values, counts=counts,
                         peak_wavenumbers=peaks)


def shell_reduce_weighted_l2(spectral: SpectralField, s: float,
                             homogeneous: bool, cutoff: float = 0.0) -> float:
    """Weighted coefficient sum ( sum_{|k| >= cutoff} w(k)^{2s} |coeffs|^2 )^{1/2}.

    w(k) = |k| when homogeneous, sqrt(1 + |k|^2) otherwise. No lattice measure
    is applied; this is the raw coefficient reduction. The k = 0 mode in the
    homogeneous case contributes 0 for s > 0, its plain magnitude for s = 0,
    and is undefined for s < 0 unless the coefficient vanishes (domain error).
    """
    if cutoff < 0.0:
        raise ValueError(f"cutoff must be nonnegative, got {cutoff}")
    grid = spectral.grid
    c = spectral.coeffs
    mask = grid.k_norm >= cutoff

    if homogeneous:
        c0 = abs(complex(c[0, 0, 0]))
        if s < 0.0 and cutoff == 0.0 and c0 > 1e-13 * (1.0 + float(np.max(np.abs(c)))):
            raise ValueError(
                "homogeneous norm with s < 0 is undefined for a field with nonzero mean")
        with np.errstate(divide="ignore", invalid="ignore"):
            w2s = np.where(grid.k_sq > 0.0, grid.k_sq**s, 0.0 if s != 0.0 else 1.0)
    else:
        w2s = (1.0 + grid.k_sq) ** s

    total = float(np.sum(w2s * np.abs(c) ** 2, where=mask))
    return math.sqrt(total)


def weighted_l2_stack(grid: Grid, stacks: np.ndarray, s: float, homogeneous: bool,
                      cutoff: float = 0.0) -> float:
    """Lattice-weighted Sobolev-type norm of a (..., n, n, n) coefficient stack.

    Returns sqrt( mode_weight * sum_components sum_{|k| >= cutoff} w^{2s} |c|^2 ),
    the discretized integral norm shared by the solver metric and diagnostics.
    """
    if cutoff < 0.0:
        raise ValueError(f"cutoff must be nonnegative, got {cutoff}")
    if homogeneous:
        with np.errstate(divide="ignore", invalid="ignore"):
            w2s = np.where(grid.k_sq > 0.0, grid.k_sq**s, 0.0 if s != 0.0 else 1.0)
    else:
        w2s = (1.0 + grid.k_sq) ** s
    mask = grid.k_norm >= cutoff
    flat = stacks.reshape((-1,) + grid.shape)
    total = 0.0
    for comp in flat:
        total += float(np.sum(w2s * np.abs(comp) ** 2, where=mask))
    return math.sqrt(grid.mode_weight * total)
