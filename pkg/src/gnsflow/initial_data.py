"""Divergence-free initial velocity fields on the periodic lattice.

Every generator returns a field that is simultaneously Hermitian-symmetric,
divergence-free, mean-free and zero on the Nyquist planes (the last is what
lets the first two coexist under odd-in-k multipliers; see
operators.leray_project_stack).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import VelocityField, leray_project_stack, velocity_from_stack
from .spectral import Grid, hermitian_symmetrize

DATA_KINDS = ("taylor_green", "single_mode", "random_sobolev_tail",
              "compact_spectrum")


@dataclass(frozen=True)
class DataParams:
    """Generator knobs; each kind reads the subset it needs."""

    amplitude: float = 1.0
    band_lo: float = 0.5
    band_hi: float = 2.5
    mode: tuple[int, int, int] = (1, 0, 0)
    k_cut: float = 2.0
    spectral_exponent: float = 3.0

    def __post_init__(self):
        if not (self.amplitude >= 0.0 and math.isfinite(self.amplitude)):
            raise ValueError(f"amplitude must be >= 0 and finite, got {self.amplitude}")


def _nyquist_free(grid: Grid) -> np.ndarray:
    half = grid.n_per_axis // 2
    ax = np.abs(np.asarray(grid.alias_integers))
    keep1d = ax != half
    return (keep1d[:, None, None] & keep1d[None, :, None] & keep1d[None, None, :])


def _finish(grid: Grid, stack: np.ndarray) -> VelocityField:
    """Shared tail: kill Nyquist, symmetrize, project, remove the mean."""
    stack = stack * _nyquist_free(grid)
    stack = np.stack([hermitian_symmetrize(stack[j]) for j in range(3)])
    stack = leray_project_stack(grid, stack)
    stack[:, 0, 0, 0] = 0.0
    return velocity_from_stack(grid, stack)


def taylor_green(grid: Grid, params: DataParams) -> VelocityField:
    """Planar vortex array A (sin X cos Y, -cos X sin Y, 0), X = 2 pi x / L.

    Placed directly in spectral space (four exact first-harmonic modes per
    nonzero component) so zero modes are exactly zero.
    """
    n = grid.n_per_axis
    a = 0.25j * params.amplitude
    stack = np.zeros((3,) + grid.shape, dtype=np.complex128)
    for sx, ix in ((1, 1), (-1, n - 1)):
        for sy, iy in ((1, 1), (-1, n - 1)):
            # sin X cos Y and -cos X sin Y expanded over e^{i(sx X + sy Y)}
            stack[0, ix, iy, 0] = -a * sx
            stack[1, ix, iy, 0] = a * sy
    return velocity_from_stack(grid, stack)


def single_mode(grid: Grid, params: DataParams) -> VelocityField:
    """A e cos(k . x) with a real polarization e orthogonal to the mode k."""
    m = params.mode
    n = grid.n_per_axis
    if all(c == 0 for c in m):
        raise ValueError("mode must not be the zero mode")
    limit = n // 2 - 1
    if any(abs(c) > limit for c in m):
        raise ValueError(f"mode components must satisfy |m| <= {limit} "
                         f"(below the Nyquist index), got {m}")
    k = np.array(m, dtype=float)
    e = np.cross([0.0, 0.0, 1.0], k)
    if np.linalg.norm(e) == 0.0:  # k along z: any horizontal direction works
        e = np.array([1.0, 0.0, 0.0])
    e /= np.linalg.norm(e)
    stack = np.zeros((3,) + grid.shape, dtype=np.complex128)
    plus = tuple(c % n for c in m)
    minus = tuple(-c % n for c in m)
    for j in range(3):
        stack[(j,) + plus] = 0.5 * params.amplitude * e[j]
        stack[(j,) + minus] = 0.5 * params.amplitude * e[j]
    return velocity_from_stack(grid, stack)


def random_sobolev_tail(grid: Grid, params: DataParams, seed: int) -> VelocityField:
    """Keyed gaussian modes shaped by A |k|^{-spectral_exponent} on a band.

    The Philox generator is counter-based, so the full-lattice draw depends
    only on the seed (bit-reproducible across runs and platforms).
    """
    _check_band(grid, params.band_lo, params.band_hi, "band_hi")
    rng = np.random.Generator(np.random.Philox(key=seed))
    shape = (3,) + grid.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    knorm = np.asarray(grid.k_norm)
    band = (knorm >= params.band_lo) & (knorm <= params.band_hi)
    with np.errstate(divide="ignore"):
        profile = np.where(band, params.amplitude
                           * np.where(knorm > 0.0, knorm, 1.0) ** -params.spectral_exponent,
                           0.0)
    return _finish(grid, noise * profile)


def compact_spectrum(grid: Grid, params: DataParams) -> VelocityField:
    """Flat coefficient amplitude A on band_lo <= |k| <= k_cut, deterministic."""
    _check_band(grid, params.band_lo, params.k_cut, "k_cut")
    knorm = np.asarray(grid.k_norm)
    band = (knorm >= params.band_lo) & (knorm <= params.k_cut)
    stack = np.where(band, params.amplitude + 0.0j, 0.0j)
    return _finish(grid, np.stack([stack, stack, stack]))


def _check_band(grid: Grid, lo: float, hi: float, hi_name: str) -> None:
    if not (lo > 0.0):
        raise ValueError(f"band_lo must be positive, got {lo}")
    if not (hi > lo):
        raise ValueError(f"{hi_name} must exceed band_lo, got [{lo}, {hi}]")
    if hi > grid.k_max:
        raise ValueError(f"{hi_name} = {hi} exceeds the grid's largest "
                         f"wavenumber {grid.k_max:.6g}")


def make_initial_data(kind: str, grid: Grid, params: DataParams,
                      seed: int = 0) -> VelocityField:
    """Dispatch on kind; every output is divergence-free and mean-free."""
    if kind == "taylor_green":
        return taylor_green(grid, params)
    if kind == "single_mode":
        return single_mode(grid, params)
    if kind == "random_sobolev_tail":
        return random_sobolev_tail(grid, params, seed)
    if kind == "compact_spectrum":
        return compact_spectrum(grid, params)
    raise ValueError(f"unknown initial data kind {kind!r}; "
                     f"expected one of {', '.join(DATA_KINDS)}")
