"""Quantitative state characterization: photon statistics, squeezing,
purity, and Wigner functions with negativity measures.

Wigner convention: W(x, p) with x = (a + a^dag)/sqrt(2) and
integral W dx dp = 1, so the vacuum peaks at 1/pi and |W| <= 1/pi for
any physical state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from kerrcrescent.fock import (
    DensityMatrix,
    FockVector,
    GridCoverageError,
    hermite_functions,
)
from kerrcrescent.protocol import ProtocolParams

__all__ = [
    "PhotonStatistics",
    "WignerGrid",
    "photon_statistics",
    "squeezing_factor",
    "purity",
    "wigner",
    "negativity_volume",
    "quadrature_variance",
    "wavefunction",
    "radial_section",
]

_RESCALE = 1e100
_LOG_RESCALE = float(np.log(_RESCALE))

# Pure states above this cutoff switch from the Laguerre-kernel sum to the
# position-autocorrelation fast path (identical convention, O(dim) instead
# of O(dim^2) per grid point).
_AUTOCORR_DIM = 320


@dataclass(frozen=True)
class PhotonStatistics:
    """Photon-number distribution with its first two moments.

    fano is variance/mean, NaN when the mean vanishes (vacuum).
    """

    probs: np.ndarray
    mean: float
    variance: float
    fano: float


@dataclass(frozen=True)
class WignerGrid:
    """W(x_i, p_j) samples on a rectangular phase-space grid."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x_axis = np.asarray(self.x_axis, dtype=float)
        p_axis = np.asarray(self.p_axis, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (x_axis.size, p_axis.size):
            raise ValueError("values must have shape (len(x_axis), len(p_axis))")
        for axis in (x_axis, p_axis):
            if axis.size >= 2 and not np.all(np.diff(axis) > 0):
                raise ValueError("axes must be strictly ascending")
        object.__setattr__(self, "x_axis", x_axis)
        object.__setattr__(self, "p_axis", p_axis)
        object.__setattr__(self, "values", values)

    @property
    def x_step(self) -> float:
        return float(self.x_axis[1] - self.x_axis[0]) if self.x_axis.size > 1 else 0.0

    @property
    def p_step(self) -> float:
        return float(self.p_axis[1] - self.p_axis[0]) if self.p_axis.size > 1 else 0.0

    def mass(self) -> float:
        """Riemann sum of W over the grid."""
        return float(self.values.sum() * self.x_step * self.p_step)


def _normalized_probs(state: FockVector | DensityMatrix) -> np.ndarray:
    if isinstance(state, FockVector):
        p = np.abs(state.amps) ** 2
    elif isinstance(state, DensityMatrix):
        p = np.clip(np.diagonal(state.entries).real, 0.0, None)
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    total = float(p.sum())
    if total <= 0:
        raise ValueError("zero state has no photon statistics")
    return p / total


def photon_statistics(state: FockVector | DensityMatrix) -> PhotonStatistics:
    """Normalized photon-number distribution p_n with mean, variance, Fano."""
    p = _normalized_probs(state)
    n = np.arange(p.size, dtype=float)
    mean = float(np.dot(n, p))
    var = float(np.dot(n * n, p)) - mean * mean
    fano = var / mean if mean > 0 else math.nan
    return PhotonStatistics(probs=p, mean=mean, variance=var, fano=fano)


def squeezing_factor(p: ProtocolParams) -> float:
    """Predicted photon-number squeezing ratio 2 |alpha| |beta| gamma.

    Ratio of the coherent state's photon-number standard deviation to the
    conditional state's; values above 1 mean sub-Poissonian output.
    """
    return 2.0 * abs(p.alpha) * p.beta_mag * p.gamma


def purity(rho: DensityMatrix) -> float:
    """Tr rho^2; 1 for pure states."""
    return float(np.sum(np.abs(rho.entries) ** 2))


def _mode_moments(state: FockVector | DensityMatrix) -> tuple[float, complex, complex]:
    """Normalized <n>, <a>, <a^2> of a vector or density matrix."""
    if isinstance(state, FockVector):
        c = state.amps
        total = float(np.vdot(c, c).real)
        if total <= 0:
            raise ValueError("zero state")
        n = np.arange(c.size, dtype=float)
        mean_n = float(np.dot(n, np.abs(c) ** 2)) / total
        ea = complex(np.sum(np.conj(c[:-1]) * c[1:] * np.sqrt(n[1:]))) / total if c.size > 1 else 0j
        if c.size > 2:
            ea2 = complex(np.sum(np.conj(c[:-2]) * c[2:] * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0)))) / total
        else:
            ea2 = 0j
        return mean_n, ea, ea2
    if isinstance(state, DensityMatrix):
        rho = state.entries
        tr = float(np.trace(rho).real)
        if tr <= 0:
            raise ValueError("zero state")
        dim = state.dim
        n = np.arange(dim, dtype=float)
        mean_n = float(np.dot(n, np.diagonal(rho).real)) / tr
        ea = complex(np.sum(np.diagonal(rho, -1) * np.sqrt(n[1:]))) / tr if dim > 1 else 0j
        if dim > 2:
            ea2 = complex(np.sum(np.diagonal(rho, -2) * np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0)))) / tr
        else:
            ea2 = 0j
        return mean_n, ea, ea2
    raise TypeError(f"unsupported state type {type(state).__name__}")


def quadrature_variance(state: FockVector | DensityMatrix, theta: float) -> float:
    """Variance of x_theta = (a e^{-i theta} + a^dag e^{i theta})/sqrt(2).

    Vacuum reference is 1/2; values below certify quadrature squeezing.
    """
    mean_n, ea, ea2 = _mode_moments(state)
    rot = complex(math.cos(theta), -math.sin(theta))
    mean_x = math.sqrt(2.0) * (ea * rot).real
    mean_x2 = (ea2 * rot * rot).real + mean_n + 0.5
    return float(mean_x2 - mean_x * mean_x)


def wavefunction(state: FockVector, xs) -> np.ndarray:
    """Position wavefunction <x|state> (no normalization applied)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    return state.amps @ hermite_functions(state.dim, xs)


def _auto_axes(state, step: float, halfwidth: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Grid centered at the mean amplitude, sized to the quadrature spread.

    Half-width defaults to 5 + 2 * (largest quadrature standard deviation);
    crescent states are elongated, so a fixed window would clip tails.
    """
    mean_n, ea, ea2 = _mode_moments(state)
    cx = math.sqrt(2.0) * ea.real
    cp = math.sqrt(2.0) * ea.imag
    if halfwidth is None:
        base = mean_n - abs(ea) ** 2 + 0.5
        spread = abs(ea2 - ea * ea)
        max_var = max(base + spread, 0.25)
        halfwidth = 5.0 + 2.0 * math.sqrt(max_var)
    m = int(math.ceil(halfwidth / step))
    offsets = step * np.arange(-m, m + 1)
    return cx + offsets, cp + offsets


def _diag_coefficients(state, k: int) -> np.ndarray:
    """Coefficient of |n+k><n| in the normalized state, n = 0..dim-1-k."""
    if isinstance(state, FockVector):
        c = state.amps
        if k == 0:
            return np.abs(c) ** 2 + 0j
        return c[k:] * np.conj(c[:-k])
    return np.diagonal(state.entries, -k).copy()


def _wigner_kernel(state, x_axis: np.ndarray, p_axis: np.ndarray) -> np.ndarray:
    """Laguerre-kernel Wigner evaluation, log-rescaled per diagonal.

    W = (1/pi) sum_{m,n} rho_mn W_mn with, for m = n + k >= n,
    W_mn = (-1)^n sqrt(n!/m!) (sqrt(2)(x - i p))^k e^{-r^2} L_n^(k)(2 r^2).
    The recurrence runs directly on the bounded kernel magnitudes with a
    log ledger, so it neither overflows nor loses the far tail; diagonals
    whose coefficients are negligible are skipped.
    """
    dim = state.dim
    X, P = np.meshgrid(x_axis, p_axis, indexing="ij")
    r2 = X * X + P * P
    y = 2.0 * r2
    r = np.sqrt(r2)
    with np.errstate(divide="ignore"):
        log_sqrt2_r = np.log(math.sqrt(2.0) * r)  # -inf at the origin is fine
    unit = (X - 1j * P) / np.maximum(r, 1e-300)
    phase = np.ones_like(unit)

    coefs = [_diag_coefficients(state, k) for k in range(dim)]
    global_max = max(float(np.max(np.abs(c))) for c in coefs)
    cutoff = 1e-18 * global_max

    total = np.zeros_like(r2)
    for k in range(dim):
        coef = coefs[k]
        if k:
            phase = phase * unit
        if float(np.max(np.abs(coef))) < cutoff:
            continue
        ledger = -r2 - 0.5 * gammaln(k + 1.0)
        if k:
            ledger = ledger + k * log_sqrt2_r
        scale = np.exp(ledger)
        u_prev = np.zeros_like(r2)
        u_curr = np.ones_like(r2)
        acc = np.zeros_like(unit)
        sign = 1.0
        for n in range(dim - k):
            c = coef[n] * sign
            if abs(c) >= cutoff:
                acc = acc + c * (u_curr * scale)
            sign = -sign
            if n + 1 == dim - k:
                break
            fn = float(n)
            denom = 1.0 / math.sqrt((fn + 1.0) * (fn + k + 1.0))
            u_next = ((2.0 * fn + 1.0 + k - y) * denom) * u_curr \
                - (math.sqrt(fn * (fn + k)) * denom) * u_prev
            big = np.abs(u_next) > _RESCALE
            if big.any():
                u_next[big] /= _RESCALE
                u_curr[big] /= _RESCALE
                ledger[big] += _LOG_RESCALE
                scale = np.exp(ledger)
            u_prev = u_curr
            u_curr = u_next
        weight = 1.0 if k == 0 else 2.0
        total += weight * (phase * acc).real
    return total / math.pi


def _wigner_autocorr(c: np.ndarray, x_axis: np.ndarray, p_axis: np.ndarray) -> np.ndarray:
    """Pure-state Wigner via the position autocorrelation integral.

    W(x, p) = (1/pi) integral dy psi*(x+y) psi(x-y) e^{2ipy}; the
    wavefunction is sampled on a lattice fine enough to resolve both the
    state's maximal local wavenumber and the requested p range.
    """
    dim = c.size
    dx = float(x_axis[1] - x_axis[0]) if x_axis.size > 1 else 0.1
    if x_axis.size > 2 and not np.allclose(np.diff(x_axis), dx, rtol=1e-12, atol=1e-12):
        raise ValueError("autocorrelation path requires a uniform x axis")

    state = FockVector(dim=dim, amps=c)
    mean_n, ea, _ = _mode_moments(state)
    std_x = math.sqrt(max(quadrature_variance(state, 0.0), 0.25))
    center_x = math.sqrt(2.0) * ea.real
    half_support = 5.0 + 5.0 * std_x

    k_max = math.sqrt(2.0 * dim + 1.0)
    p_max = float(np.max(np.abs(p_axis)))
    target = math.pi / (6.0 * (k_max + p_max))
    m = max(1, int(math.ceil(dx / target)))
    step = dx / m
    j_half = int(math.ceil(half_support / step))

    # psi sampled on a lattice aligned with x_axis so x +/- y are exact hits
    n_left = j_half
    n_right = (x_axis.size - 1) * m + j_half
    xi = x_axis[0] + step * np.arange(-n_left, n_right + 1)
    psi = c @ hermite_functions(dim, xi)

    centers = n_left + m * np.arange(x_axis.size)
    offsets = np.arange(-j_half, j_half + 1)
    u = np.conj(psi[centers[:, None] + offsets[None, :]]) * psi[centers[:, None] - offsets[None, :]]
    kernel = np.exp(2j * np.outer(offsets * step, p_axis))
    return (u @ kernel).real * (step / math.pi)


def wigner(
    state: FockVector | DensityMatrix,
    x_axis=None,
    p_axis=None,
    *,
    step: float = 0.1,
    halfwidth: float | None = None,
    method: str = "auto",
    check_mass: bool = True,
) -> WignerGrid:
    """Wigner function of a state on a rectangular grid.

    With no axes given the grid auto-sizes: centered at the mean
    amplitude mapped to (x, p), half-width 5 + 2 * max quadrature std.
    The input is normalized internally.  Raises GridCoverageError when
    the integrated mass over the grid falls below 0.999 (disable with
    check_mass=False for deliberate zoom-ins).
    """
    if isinstance(state, FockVector):
        nrm = math.sqrt(float(np.vdot(state.amps, state.amps).real))
        if nrm <= 0:
            raise ValueError("zero state")
        state = FockVector(dim=state.dim, amps=state.amps / nrm)
    elif isinstance(state, DensityMatrix):
        tr = float(np.trace(state.entries).real)
        if tr <= 0:
            raise ValueError("zero state")
        if abs(tr - 1.0) > 1e-12:
            state = DensityMatrix(dim=state.dim, entries=state.entries / tr,
                                  pre_normalization_trace=state.pre_normalization_trace)
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")

    if x_axis is None or p_axis is None:
        auto_x, auto_p = _auto_axes(state, step, halfwidth)
        x_axis = auto_x if x_axis is None else np.asarray(x_axis, dtype=float)
        p_axis = auto_p if p_axis is None else np.asarray(p_axis, dtype=float)
    else:
        x_axis = np.asarray(x_axis, dtype=float)
        p_axis = np.asarray(p_axis, dtype=float)

    if method == "auto":
        use_autocorr = isinstance(state, FockVector) and state.dim > _AUTOCORR_DIM
    elif method == "autocorr":
        if not isinstance(state, FockVector):
            raise ValueError("autocorrelation method only applies to pure states")
        use_autocorr = True
    elif method == "kernel":
        use_autocorr = False
    else:
        raise ValueError(f"unknown method {method!r}")

    if use_autocorr:
        values = _wigner_autocorr(state.amps, x_axis, p_axis)
    else:
        values = _wigner_kernel(state, x_axis, p_axis)

    grid = WignerGrid(x_axis=x_axis, p_axis=p_axis, values=values)
    if check_mass and x_axis.size > 1 and p_axis.size > 1:
        mass = grid.mass()
        if mass < 0.999:
            raise GridCoverageError(
                f"Wigner grid carries mass {mass:.6f} < 0.999; widen the window")
    return grid


def negativity_volume(w: WignerGrid) -> float:
    """Riemann sum of |min(W, 0)| over the grid.

    Resolution-dependent (negative fringes are narrow); compare values on
    identical-resolution grids only.
    """
    neg = np.minimum(w.values, 0.0)
    return float((-neg).sum() * w.x_step * w.p_step)


def radial_section(
    w: WignerGrid,
    center: tuple[float, float] = (0.0, 0.0),
    angle: float = 0.0,
    n_points: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """W sampled along a ray through ``center`` for fringe inspection.

    Returns (signed radial offsets, bilinear-interpolated W values); the
    ray is clipped to stay inside the grid.
    """
    from scipy.interpolate import RegularGridInterpolator

    cx, cp = center
    ux, up = math.cos(angle), math.sin(angle)
    bounds = []
    for direction in (+1.0, -1.0):
        t = math.inf
        if ux:
            edge = w.x_axis[-1] if direction * ux > 0 else w.x_axis[0]
            t = min(t, (edge - cx) / (direction * ux))
        if up:
            edge = w.p_axis[-1] if direction * up > 0 else w.p_axis[0]
            t = min(t, (edge - cp) / (direction * up))
        bounds.append(0.0 if not math.isfinite(t) else max(t, 0.0))
    r = np.linspace(-bounds[1], bounds[0], n_points)
    pts = np.column_stack([cx + r * ux, cp + r * up])
    interp = RegularGridInterpolator((w.x_axis, w.p_axis), w.values,
                                     bounds_error=False, fill_value=0.0)
    return r, interp(pts)
