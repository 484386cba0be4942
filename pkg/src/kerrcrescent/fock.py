"""Truncated Fock-space linear algebra for a single bosonic mode.

Everything here stays numerically stable at mean photon numbers of order
1000: factorials only ever appear through ``gammaln``, amplitudes are
assembled as ``exp(log-magnitude) * phase``, and the Laguerre/Hermite
recurrences carry a floating rescale ledger so intermediates never
overflow or silently underflow.

All values are immutable after construction and every operation is a pure
function, so concurrent read access from worker threads is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "FockVector",
    "FockOperator",
    "DensityMatrix",
    "TruncationError",
    "LeakageError",
    "GridCoverageError",
    "choose_dim",
    "coherent_fock",
    "basis_state",
    "displacement_operator",
    "apply",
    "inner",
    "norm_sq",
    "number_moments",
    "tail_mass",
    "hermite_functions",
]

_QUARTER_LOG_PI = 0.25 * float(np.log(np.pi))
_RESCALE = 1e100
_LOG_RESCALE = float(np.log(_RESCALE))


class TruncationError(Exception):
    """A state does not fit below the requested Fock cutoff.

    ``tail_mass`` carries the measured relative probability mass found in
    the last five basis states, so callers can see how bad the cutoff was.
    """

    def __init__(self, message: str, tail_mass: float):
        super().__init__(message)
        self.tail_mass = float(tail_mass)


class LeakageError(Exception):
    """An operator application lost more norm than the allowed tolerance."""

    def __init__(self, message: str, leakage: float):
        super().__init__(message)
        self.leakage = float(leakage)


class GridCoverageError(Exception):
    """A quadrature or phase-space grid misses required probability mass."""


@dataclass(frozen=True)
class FockVector:
    """Complex amplitudes over the photon-number basis {|0>, ..., |dim-1>}."""

    dim: int
    amps: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.dim,):
            raise ValueError(f"amps shape {amps.shape} does not match dim {self.dim}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitudes")
        object.__setattr__(self, "amps", amps)


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on the truncated basis.

    ``leakage`` is the measured truncation deficit ``1 - min_j ||O|j>||^2``;
    it is reported rather than silently ignored because truncation bias is
    the dominant failure mode at large amplitudes.
    """

    dim: int
    entries: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.dim, self.dim):
            raise ValueError("entries must be a dim x dim matrix")
        object.__setattr__(self, "entries", entries)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian trace-one matrix in the Fock basis.

    ``pre_normalization_trace`` records the trace the ensemble integral
    produced before renormalization, so clamping/truncation bias stays
    visible to callers.
    """

    dim: int
    entries: np.ndarray
    pre_normalization_trace: float | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.dim, self.dim):
            raise ValueError("entries must be a dim x dim matrix")
        object.__setattr__(self, "entries", entries)

    def validate(self, herm_tol: float = 1e-10, trace_tol: float = 1e-8,
                 eig_tol: float = 1e-8) -> None:
        """Check hermiticity, unit trace and positivity up to tolerances."""
        dev = np.max(np.abs(self.entries - self.entries.conj().T))
        if dev > herm_tol:
            raise ValueError(f"density matrix not Hermitian: deviation {dev:.3e}")
        tr = complex(np.trace(self.entries))
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {tr} not 1")
        min_eig = float(np.linalg.eigvalsh(self.entries)[0])
        if min_eig < -eig_tol:
            raise ValueError(f"density matrix not positive: min eigenvalue {min_eig:.3e}")


def choose_dim(alpha_mag: float, safety: float = 10.0) -> int:
    """Fock cutoff for a coherent amplitude: ceil(|a|^2 + safety*|a| + 20).

    Poissonian tails decay super-exponentially beyond mean + 10 sigma, so
    safety=10 keeps the neglected mass below 1e-12.
    """
    if alpha_mag < 0:
        raise ValueError("alpha_mag must be >= 0")
    if safety < 1:
        raise ValueError("safety must be >= 1")
    return int(np.ceil(alpha_mag * alpha_mag + safety * alpha_mag + 20.0))


def tail_mass(v: FockVector) -> float:
    """Relative probability mass in the last five basis states."""
    p = np.abs(v.amps) ** 2
    total = float(p.sum())
    if total <= 0.0:
        return 0.0
    return float(p[-min(5, v.dim):].sum() / total)


def coherent_fock(alpha: complex, dim: int, tail_tol: float = 1e-9) -> FockVector:
    """Coherent state |alpha> on a dim-dimensional cutoff.

    Amplitudes are exp(-|a|^2/2 + n ln a - ln(n!)/2) evaluated in log
    space, so the construction is exact to machine precision even at
    |alpha| = 30 where n! would overflow.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    alpha = complex(alpha)
    if alpha == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
    else:
        n = np.arange(dim, dtype=float)
        log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1.0)
        amps = np.exp(log_mag + 1j * (n * np.angle(alpha)))
    v = FockVector(dim=dim, amps=amps)
    t = tail_mass(v)
    if not t < tail_tol:
        raise TruncationError(
            f"coherent state |alpha|={abs(alpha):g} does not fit in dim={dim}: "
            f"tail mass {t:.3e} >= {tail_tol:g}", tail_mass=t)
    return v


def basis_state(n: int, dim: int) -> FockVector:
    """Number state |n> on a dim-dimensional cutoff."""
    if not 0 <= n < dim:
        raise ValueError("need 0 <= n < dim")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return FockVector(dim=dim, amps=amps)


def displacement_operator(d: complex, dim: int) -> FockOperator:
    """Matrix elements <m|exp(d a^dag - d* a)|n> on the truncated basis.

    Uses the associated-Laguerre closed form, evaluated through a scaled
    three-term recurrence per diagonal: the recurrence runs on
    s_n = sqrt(n!/(n+k)!) |d|^k exp(-|d|^2/2) L_n^(k)(|d|^2), which is the
    actual matrix-element magnitude (bounded by 1), with a log ledger
    absorbing the dynamic range.  O(dim^2), no eigen-solve.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    d = complex(d)
    if d == 0:
        return FockOperator(dim=dim, entries=np.eye(dim, dtype=complex), leakage=0.0)

    abs_d = abs(d)
    y = abs_d * abs_d
    k = np.arange(dim, dtype=float)
    # ledger[k] = log |<k|D|0>|; the recurrence keeps u = s * exp(-ledger)
    ledger = k * np.log(abs_d) - 0.5 * gammaln(k + 1.0) - 0.5 * y
    theta = float(np.angle(d))
    lower_phase = np.exp(1j * k * theta)          # d^k / |d|^k
    upper_phase = np.exp(-1j * k * theta)         # (-d*)^k / |d|^k
    upper_phase[1::2] *= -1.0

    entries = np.empty((dim, dim), dtype=complex)
    rows = np.arange(dim)
    u_prev = np.zeros(dim)
    u_curr = np.ones(dim)
    for n in range(dim):
        vals = u_curr * np.exp(ledger)
        m = dim - n
        entries[rows[n:], n] = vals[:m] * lower_phase[:m]
        entries[n, rows[n:]] = vals[:m] * upper_phase[:m]
        if n + 1 == dim:
            break
        fn = float(n)
        denom = 1.0 / np.sqrt((fn + 1.0) * (k + fn + 1.0))
        a_coef = (2.0 * fn + 1.0 + k - y) * denom
        b_coef = np.sqrt(fn * (k + fn)) * denom
        u_next = a_coef * u_curr - b_coef * u_prev
        big = np.abs(u_next) > _RESCALE
        if big.any():
            u_next[big] /= _RESCALE
            u_curr[big] /= _RESCALE
            ledger[big] += _LOG_RESCALE
        u_prev = u_curr
        u_curr = u_next

    col_norms = np.sum(np.abs(entries) ** 2, axis=0)
    leakage = float(max(0.0, 1.0 - col_norms.min()))
    return FockOperator(dim=dim, entries=entries, leakage=leakage)


def apply(op: FockOperator, v: FockVector) -> FockVector:
    """Matrix-vector product op @ v."""
    if op.dim != v.dim:
        raise ValueError(f"dimension mismatch: operator {op.dim}, vector {v.dim}")
    return FockVector(dim=v.dim, amps=op.entries @ v.amps)


def inner(u: FockVector, v: FockVector) -> complex:
    """Hermitian inner product <u|v> (conjugate-linear in u)."""
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    return complex(np.vdot(u.amps, v.amps))


def norm_sq(v: FockVector) -> float:
    """Squared norm <v|v>."""
    return float(np.vdot(v.amps, v.amps).real)


def number_moments(v: FockVector) -> tuple[float, float]:
    """Mean and variance of the photon number (normalizes internally)."""
    p = np.abs(v.amps) ** 2
    total = float(p.sum())
    if total <= 0.0:
        raise ValueError("zero vector has no photon statistics")
    p = p / total
    n = np.arange(v.dim, dtype=float)
    mean = float(np.dot(n, p))
    var = float(np.dot(n * n, p)) - mean * mean
    return mean, var


def hermite_functions(nmax: int, xs) -> np.ndarray:
    """Position wavefunctions <x|n> of the number states, n < nmax.

    Convention: x has vacuum variance 1/2, i.e. <x|0> = pi^(-1/4) e^(-x^2/2).
    Returns an (nmax, len(xs)) array.  The normalized recurrence runs on
    Gaussian-stripped values with a rescale ledger, so it is accurate for
    n ~ 1000 at |x| ~ 50 where the naive recurrence underflows to zero.
    """
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.empty((nmax, xs.size))
    ledger = -0.5 * xs * xs
    g_prev = np.zeros(xs.size)
    g_curr = np.full(xs.size, np.pi ** -0.25)
    for n in range(nmax):
        out[n] = g_curr * np.exp(ledger)
        if n + 1 == nmax:
            break
        g_next = np.sqrt(2.0 / (n + 1.0)) * xs * g_curr - np.sqrt(n / (n + 1.0)) * g_prev
        big = np.abs(g_next) > _RESCALE
        if big.any():
            g_next[big] /= _RESCALE
            g_curr[big] /= _RESCALE
            ledger[big] += _LOG_RESCALE
        g_prev = g_curr
        g_curr = g_next
    return out
