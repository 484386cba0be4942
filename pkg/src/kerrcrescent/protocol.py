"""The preparation pipeline: cross-Kerr entanglement of two coherent
modes, homodyne projection of mode b with outcome x, feed-forward
displacement of mode a, and integration over outcomes into the ensemble
density matrix.

Mode b never appears explicitly in the main path: the homodyne
projection of mode b's rotated coherent states is folded into the mode-a
amplitudes analytically.  A brute-force two-mode construction is kept as
an independent oracle (``oracle_conditional_state``).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from kerrcrescent.fock import (
    FockVector,
    DensityMatrix,
    GridCoverageError,
    LeakageError,
    TruncationError,
    choose_dim,
    displacement_operator,
    hermite_functions,
    norm_sq,
)

__all__ = [
    "ProtocolParams",
    "HomodyneOutcome",
    "XGrid",
    "Displacement",
    "homodyne_overlap",
    "conditional_state_exact",
    "conditional_state_approx",
    "outcome_density",
    "displacement_param",
    "output_state",
    "build_xgrid",
    "ensemble_state",
    "ensemble_state_converged",
    "fidelity_overlap",
    "fidelity_profile",
    "oracle_conditional_state",
]

_SQRT2 = math.sqrt(2.0)
_QUARTER_LOG_PI = 0.25 * math.log(math.pi)

# Environment knob for grid parallelism; default = available cores.
WORKERS_ENV = "KERRCRESCENT_WORKERS"

# Outcome of the x-quadrature homodyne measurement on mode b,
# in units where the vacuum has variance 1/2.
HomodyneOutcome = float


@dataclass(frozen=True)
class ProtocolParams:
    """Physical knobs of the preparation protocol.

    alpha: coherent amplitude of mode a (complex, dimensionless).
    beta_mag: magnitude |beta| of mode b's coherent amplitude.
    gamma: cross-phase shift per photon pair, radians.
    beta_phase_override: phase of beta in radians; when None the phase
        defaults to pi/2 - gamma |alpha|^2, which aligns the homodyne cut
        with the photon-number arc and maximizes number squeezing.
    dim: Fock cutoff for mode a (None -> choose_dim(|alpha|, 10)).
    dim_b: Fock cutoff for mode b, used only by the brute-force oracle.
    tail_tol: relative tail mass allowed in constructed states.
    leak_tol: relative norm loss allowed per displacement application.
    """

    alpha: complex
    beta_mag: float
    gamma: float
    beta_phase_override: float | None = None
    dim: int | None = None
    dim_b: int | None = None
    tail_tol: float = 1e-9
    leak_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.beta_mag < 0:
            raise ValueError("beta_mag must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.tail_tol <= 0 or self.leak_tol <= 0:
            raise ValueError("tolerances must be positive")
        min_dim = choose_dim(abs(self.alpha), 10.0)
        dim = min_dim if self.dim is None else int(self.dim)
        if dim < min_dim:
            raise ValueError(f"dim={dim} below safe cutoff {min_dim} for |alpha|={abs(self.alpha):g}")
        object.__setattr__(self, "dim", dim)
        min_dim_b = choose_dim(self.beta_mag, 10.0)
        dim_b = min_dim_b if self.dim_b is None else int(self.dim_b)
        if dim_b < min_dim_b:
            raise ValueError(f"dim_b={dim_b} below safe cutoff {min_dim_b} for |beta|={self.beta_mag:g}")
        object.__setattr__(self, "dim_b", dim_b)

    @property
    def beta_phase(self) -> float:
        if self.beta_phase_override is not None:
            return float(self.beta_phase_override)
        return 0.5 * math.pi - self.gamma * abs(self.alpha) ** 2

    @property
    def beta(self) -> complex:
        return self.beta_mag * complex(math.cos(self.beta_phase), math.sin(self.beta_phase))

    @property
    def gamma_beta(self) -> float:
        return self.gamma * self.beta_mag


@dataclass(frozen=True)
class XGrid:
    """Quadrature-outcome integration grid with quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if points.ndim != 1 or points.shape != weights.shape:
            raise ValueError("points and weights must be 1-d arrays of equal length")
        if points.size >= 2 and not np.all(np.diff(points) > 0):
            raise ValueError("points must be strictly ascending")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)


class Displacement(NamedTuple):
    """Feed-forward displacement parameter with its clamp flag."""

    value: complex
    clamped: bool


def homodyne_overlap(x: float, mu: complex) -> complex:
    """<x|mu> for a coherent state, vacuum variance 1/2 in x.

    Convention: pi^(-1/4) exp[-(x - sqrt(2) Re mu)^2 / 2
                              + i sqrt(2) Im mu x - i Re mu Im mu].
    """
    mu = complex(mu)
    mr, mi = mu.real, mu.imag
    log_mag = -0.5 * (x - _SQRT2 * mr) ** 2 - _QUARTER_LOG_PI
    phase = _SQRT2 * mi * x - mr * mi
    return complex(math.exp(log_mag)) * complex(math.cos(phase), math.sin(phase))


def _conditional_amps(p: ProtocolParams, xs: np.ndarray) -> np.ndarray:
    """Unnormalized conditional amplitudes for every outcome in xs.

    Column j holds |psi(xs[j])>: amps_n = e^{-|a|^2/2} (a^n/sqrt(n!)) <x|beta e^{i gamma n}>,
    assembled termwise in log space.  Shape (dim, len(xs)).
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    n = np.arange(p.dim, dtype=float)
    beta_n = p.beta * np.exp(1j * p.gamma * n)
    br = beta_n.real[:, None]
    bi = beta_n.imag[:, None]
    x = xs[None, :]
    gauss = -0.5 * (x - _SQRT2 * br) ** 2
    phase = _SQRT2 * bi * x - br * bi
    a = p.alpha
    if a == 0:
        amps = np.zeros((p.dim, xs.size), dtype=complex)
        amps[0] = np.exp(gauss[0] - _QUARTER_LOG_PI + 1j * phase[0])
        return amps
    base = (-0.5 * abs(a) ** 2 + n * math.log(abs(a)) - 0.5 * gammaln(n + 1.0))[:, None]
    arg = n[:, None] * np.angle(a) + phase
    return np.exp(base + gauss - _QUARTER_LOG_PI + 1j * arg)


def _check_tail(amps: np.ndarray, tail_tol: float, context: str) -> None:
    """Relative tail-mass check on a (dim,) or (dim, N) amplitude block."""
    p = np.abs(np.atleast_2d(amps.T).T) ** 2
    totals = p.sum(axis=0)
    mask = totals > 1e-250  # zero-mass columns carry no information
    if not mask.any():
        return
    tails = p[-min(5, p.shape[0]):, mask].sum(axis=0) / totals[mask]
    worst = float(tails.max())
    if not worst < tail_tol:
        raise TruncationError(
            f"{context}: tail mass {worst:.3e} >= {tail_tol:g}; increase dim",
            tail_mass=worst)


def conditional_state_exact(p: ProtocolParams, x: float) -> FockVector:
    """Unnormalized post-measurement state of mode a at outcome x.

    Its squared norm is the outcome density P(x).
    """
    amps = _conditional_amps(p, np.array([float(x)]))[:, 0]
    _check_tail(amps, p.tail_tol, f"conditional state at x={x:g}")
    return FockVector(dim=p.dim, amps=amps)


def conditional_state_approx(p: ProtocolParams, x: float) -> FockVector:
    """Small-phase (gamma |alpha| << 1) form of the conditional state.

    amps_n ~ (a^n/sqrt(n!)) exp[i gamma |b|^2 n
             - (gamma |b| (n - |a|^2))^2 - sqrt(2) gamma |b| x (n - |a|^2) - x^2/2]
    times the global factor e^{i phi - |a|^2/2} / pi^{1/4}, with
    phi = sqrt(2) x |b| - gamma |a|^2 |b|^2.  The global phase is retained
    so exact and approximate states are directly comparable; its second
    term is derived by expanding the exact amplitudes (the commonly quoted
    ``+`` sign does not reproduce the exact state's phase).

    Only valid under the default phase convention for beta; a conflicting
    override is rejected because the expansion assumes it.
    """
    if p.beta_phase_override is not None:
        want = 0.5 * math.pi - p.gamma * abs(p.alpha) ** 2
        diff = (p.beta_phase_override - want) % (2.0 * math.pi)
        if min(diff, 2.0 * math.pi - diff) > 1e-9:
            raise ValueError(
                "conditional_state_approx requires the default beta phase "
                f"pi/2 - gamma|alpha|^2 = {want:g}, got override {p.beta_phase_override:g}")
    x = float(x)
    a = p.alpha
    gb = p.gamma_beta
    abs_a2 = abs(a) ** 2
    n = np.arange(p.dim, dtype=float)
    dn = n - abs_a2
    real_exp = -((gb * dn) ** 2) - _SQRT2 * gb * x * dn - 0.5 * x * x
    phi = _SQRT2 * x * p.beta_mag - p.gamma * abs_a2 * p.beta_mag ** 2
    phase = p.gamma * p.beta_mag ** 2 * n + phi
    if a == 0:
        amps = np.zeros(p.dim, dtype=complex)
        amps[0] = math.exp(real_exp[0] - _QUARTER_LOG_PI) * np.exp(1j * phase[0])
    else:
        log_mag = (-0.5 * abs_a2 + n * math.log(abs(a)) - 0.5 * gammaln(n + 1.0)
                   - _QUARTER_LOG_PI + real_exp)
        amps = np.exp(log_mag + 1j * (n * np.angle(a) + phase))
    _check_tail(amps, p.tail_tol, f"approximate conditional state at x={x:g}")
    return FockVector(dim=p.dim, amps=amps)


def outcome_density(p: ProtocolParams, x: float) -> float:
    """Probability density P(x) = <psi(x)|psi(x)> of the homodyne outcome."""
    return norm_sq(conditional_state_exact(p, x))


def displacement_param(p: ProtocolParams, x: float) -> Displacement:
    """Feed-forward displacement d(x) restoring the mean amplitude.

    d(x) = (|a| - sqrt(|a|^2 - x / (sqrt(2) gamma |b|))) e^{i(gamma |b|^2 + arg a)}.
    Outcomes beyond the radicand zero x* = sqrt(2) gamma |b| |a|^2 clamp
    the magnitude to |a| and raise the flag instead of failing: such x
    are astronomically unlikely at the parameters of interest, and a hard
    error would crash otherwise valid ensemble runs.
    """
    gb = p.gamma_beta
    if gb <= 0:
        raise ValueError("displacement_param requires gamma*|beta| > 0")
    radicand = abs(p.alpha) ** 2 - float(x) / (_SQRT2 * gb)
    clamped = radicand < 0.0
    mag = abs(p.alpha) - math.sqrt(max(radicand, 0.0))
    theta = p.gamma * p.beta_mag ** 2 + float(np.angle(p.alpha))
    value = mag * complex(math.cos(theta), math.sin(theta))
    return Displacement(value=value, clamped=clamped)


def output_state(p: ProtocolParams, x: float) -> FockVector:
    """Displaced conditional state D[d(x)] |psi(x)> (unnormalized).

    The displacement is unitary up to truncation; the measured norm change
    must stay within leak_tol or a LeakageError is raised.  With no
    interaction (gamma |beta| = 0) no feed-forward is needed and the
    conditional state is returned unchanged.
    """
    psi = conditional_state_exact(p, x)
    if p.gamma_beta == 0:
        return psi
    d = displacement_param(p, x)
    if d.value == 0:
        return psi
    op = displacement_operator(d.value, p.dim)
    phi_amps = op.entries @ psi.amps
    n_in = norm_sq(psi)
    n_out = float(np.vdot(phi_amps, phi_amps).real)
    if n_in > 0:
        leak = abs(n_out - n_in) / n_in
        if leak > p.leak_tol:
            raise LeakageError(
                f"displacement at x={x:g} lost {leak:.3e} relative norm "
                f"(> {p.leak_tol:g}); increase dim", leakage=leak)
    return FockVector(dim=p.dim, amps=phi_amps)


def _simpson_grid(lo: float, hi: float, n_points: int) -> XGrid:
    """Composite Simpson rule on [lo, hi]; n_points is forced odd."""
    n = int(n_points)
    if n < 3:
        raise ValueError("need at least 3 quadrature points")
    if n % 2 == 0:
        n += 1
    xs = np.linspace(lo, hi, n)
    h = (hi - lo) / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return XGrid(points=xs, weights=w * (h / 3.0))


def _coarse_window(p: ProtocolParams) -> tuple[float, float]:
    """Window guaranteed to contain the outcome density's support.

    Hull of the homodyne Gaussian centers sqrt(2) Re(beta e^{i gamma n})
    over the photon numbers that carry coherent-state weight, padded by
    8 vacuum widths.  (Centering on the bare sqrt(2) Re beta would miss
    the support under the default beta phase, which places Re beta at the
    edge of the arc rather than its middle.)
    """
    if p.alpha == 0:
        keep = np.array([0.0])
    else:
        n = np.arange(p.dim, dtype=float)
        log_p = 2.0 * (n * math.log(abs(p.alpha)) - 0.5 * gammaln(n + 1.0)) - abs(p.alpha) ** 2
        keep = n[log_p > log_p.max() + math.log(1e-14)]
    centers = _SQRT2 * (p.beta * np.exp(1j * p.gamma * keep)).real
    return float(centers.min() - 8.0), float(centers.max() + 8.0)


def build_xgrid(p: ProtocolParams, n_points: int = 401) -> XGrid:
    """Adapted Simpson grid for the outcome integral.

    Scans P(x) coarsely over the support window, locates its mean and
    standard deviation, and lays a composite Simpson rule over
    [mean - 6 sigma, mean + 6 sigma], which captures the outcome mass to
    ~1e-9 for the broadened-Gaussian densities this protocol produces.
    """
    lo, hi = _coarse_window(p)
    xs = np.linspace(lo, hi, 801)
    dens = np.sum(np.abs(_conditional_amps(p, xs)) ** 2, axis=0)
    total = float(dens.sum())
    if total <= 0:
        raise GridCoverageError("outcome density vanished on the scan window")
    dens /= total
    mu = float(np.dot(xs, dens))
    sigma = math.sqrt(max(float(np.dot((xs - mu) ** 2, dens)), 1e-12))
    return _simpson_grid(mu - 6.0 * sigma, mu + 6.0 * sigma, n_points)


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def ensemble_state(p: ProtocolParams, grid: XGrid, workers: int | None = None) -> DensityMatrix:
    """Run-averaged output state rho = integral |Phi(x)><Phi(x)| dx.

    The grid must cover the outcome support (weight-sum check).  Columns
    are evaluated in fixed-size chunks regardless of worker count and
    reduced through a single Gram product, so the result is bit-stable
    under grid parallelism.  The pre-normalization trace is recorded on
    the returned matrix before renormalizing to trace one.
    """
    pts = grid.points
    w = grid.weights
    if np.any(w < 0):
        raise ValueError("quadrature weights must be nonnegative")
    psi = _conditional_amps(p, pts)
    _check_tail(psi, p.tail_tol, "conditional states on the outcome grid")
    dens = np.sum(np.abs(psi) ** 2, axis=0)
    cover = float(np.dot(w, dens))
    if abs(cover - 1.0) > 1e-4:
        raise GridCoverageError(
            f"outcome grid covers weight {cover:.6f}, expected 1 within 1e-4")

    phi = np.empty_like(psi)
    gb = p.gamma_beta
    leaked = np.zeros(pts.size)

    def fill(span):
        i0, i1 = span
        for i in range(i0, i1):
            col = psi[:, i]
            if gb > 0:
                d = displacement_param(p, pts[i])
                if d.value != 0:
                    out = displacement_operator(d.value, p.dim).entries @ col
                    n_in = float(np.vdot(col, col).real)
                    n_out = float(np.vdot(out, out).real)
                    # trace-weighted bookkeeping: a per-point bound would fail
                    # on zero-weight window-edge outcomes that cannot bias rho
                    leaked[i] = abs(n_out - n_in)
                    col = out
            phi[:, i] = col

    chunk = 32  # fixed chunking keeps results identical for any worker count
    spans = [(i, min(i + chunk, pts.size)) for i in range(0, pts.size, chunk)]
    n_workers = _resolve_workers(workers)
    if n_workers <= 1 or len(spans) == 1:
        for span in spans:
            fill(span)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for future in [pool.submit(fill, span) for span in spans]:
                future.result()

    total_leak = float(np.dot(w, leaked))
    if total_leak > p.leak_tol:
        raise LeakageError(
            f"displacement truncation biases the ensemble trace by {total_leak:.3e} "
            f"(> {p.leak_tol:g}); increase dim", leakage=total_leak)

    phi_w = phi * np.sqrt(w)[None, :]
    rho = phi_w @ phi_w.conj().T
    pre_trace = float(np.trace(rho).real)
    if abs(pre_trace - 1.0) > 1e-3:
        raise GridCoverageError(
            f"pre-normalization trace {pre_trace:.6f} deviates from 1 by more than 1e-3")
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    dm = DensityMatrix(dim=p.dim, entries=rho, pre_normalization_trace=pre_trace)
    dm.validate()
    return dm


def ensemble_state_converged(
    p: ProtocolParams,
    n_points: int = 401,
    tol: float = 1e-6,
    max_doublings: int = 3,
    workers: int | None = None,
) -> tuple[DensityMatrix, XGrid, float]:
    """Ensemble state with the outcome grid refined until stable.

    Doubles the Simpson grid density until every matrix entry changes by
    less than tol; returns the finer result, its grid, and the achieved
    change.
    """
    n = int(n_points)
    grid = build_xgrid(p, n)
    rho = ensemble_state(p, grid, workers=workers)
    delta = math.inf
    for _ in range(max_doublings):
        n = 2 * n - 1
        fine_grid = build_xgrid(p, n)
        fine = ensemble_state(p, fine_grid, workers=workers)
        delta = float(np.max(np.abs(fine.entries - rho.entries)))
        rho, grid = fine, fine_grid
        if delta < tol:
            return rho, grid, delta
    raise GridCoverageError(
        f"outcome grid did not converge to {tol:g} after {max_doublings} doublings "
        f"(last change {delta:.3e})")


def fidelity_overlap(p: ProtocolParams, x: float, reference: FockVector | None = None) -> complex:
    """Normalized scalar product <Phi(0)|Phi(x)> (complex value).

    ``reference`` may carry a precomputed output_state(p, 0) to avoid
    recomputing it across many outcomes.
    """
    if float(x) == 0.0:
        return 1.0 + 0.0j
    if reference is None:
        reference = output_state(p, 0.0)
    v = output_state(p, float(x))
    denom = math.sqrt(norm_sq(reference) * norm_sq(v))
    if denom == 0:
        raise ValueError("zero-norm state in fidelity overlap")
    return complex(np.vdot(reference.amps, v.amps)) / denom


def fidelity_profile(p: ProtocolParams, x: float, reference: FockVector | None = None) -> float:
    """|<Phi(0)|Phi(x)>| / sqrt(norms); exactly 1 at x = 0."""
    if float(x) == 0.0:
        return 1.0
    return abs(fidelity_overlap(p, x, reference=reference))


def oracle_conditional_state(p: ProtocolParams, x: float) -> FockVector:
    """Brute-force two-mode oracle for the conditional state.

    Builds |alpha> (x) |beta> on a dim x dim_b product cutoff, applies the
    diagonal cross-Kerr phase e^{i gamma n m}, and projects mode b onto
    <x| through number-basis position wavefunctions.  O(dim * dim_b);
    meant for small |beta| instances as an independent cross-check of
    conditional_state_exact.
    """
    from kerrcrescent.fock import coherent_fock  # local import keeps module load light

    x = float(x)
    a_vec = coherent_fock(p.alpha, p.dim, tail_tol=p.tail_tol)
    b_vec = coherent_fock(p.beta, p.dim_b, tail_tol=p.tail_tol)
    phi_b = hermite_functions(p.dim_b, np.array([x]))[:, 0]
    weighted = b_vec.amps * phi_b
    n = np.arange(p.dim, dtype=float)
    m = np.arange(p.dim_b, dtype=float)
    kerr = np.exp(1j * p.gamma * np.outer(n, m))
    amps = a_vec.amps * (kerr @ weighted)
    return FockVector(dim=p.dim, amps=amps)
