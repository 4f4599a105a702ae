"""Closed-form resonant-level dynamics in all five representations.

A single fermionic level (basis |0>, |1>, d = 2) tunnel-coupled to one
wide-band reservoir.  The provider evaluates the finite-time propagator, its
spectral and measurement-operator forms, the time-local generator with its
jump expansion, the time-nonlocal kernel with its Laplace transform, the
frequency-domain propagator, observables, divisibility diagnostics and the
pole catalog of the resolvent.
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.linalg import expm

from .liouville import (
    SpectralDecomposition,
    SpectralMode,
    JumpSet,
    JumpTerm,
    KrausSet,
    KrausTerm,
    commutator_superop,
    dissipator,
    identity_superop,
    vectorize,
    devectorize,
)
from .scalars import (
    DEFAULT_QUAD,
    ModelParams,
    PoleError,
    QuadratureConfig,
    g_of_t,
    g_stationary,
    k_hat,
    k_hat_pole_ladder,
    k_of_t,
    p_of_t,
    weighted_kernel_grid,
)

__all__ = [
    "DIM",
    "ANNIHILATOR",
    "CREATOR",
    "NUMBER_OP",
    "PARITY_OP",
    "IDENTITY_OP",
    "d_eta",
    "RlmProvider",
    "PoleCatalog",
    "pole_catalog",
    "ScanConfig",
    "DIVERGES",
    "divisibility_max",
]

DIM = 2

ANNIHILATOR = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
CREATOR = ANNIHILATOR.conj().T
NUMBER_OP = CREATOR @ ANNIHILATOR
PARITY_OP = np.diag([1.0, -1.0]).astype(complex)
IDENTITY_OP = np.eye(2, dtype=complex)

_DISS_PLUS = dissipator(CREATOR)    # eta = +, jump d_+ = d^dag
_DISS_MINUS = dissipator(ANNIHILATOR)
_DISS_SUM = _DISS_PLUS + _DISS_MINUS
_DISS_DIFF = _DISS_PLUS - _DISS_MINUS


def d_eta(eta: int) -> np.ndarray:
    """d_+ = creation, d_- = annihilation."""
    return CREATOR if eta > 0 else ANNIHILATOR


class RlmProvider:
    """All representations of the level dynamics at one parameter point.

    Scalar quadratures (g, g_dual, p at a given time) are memoized, so
    repeated superoperator requests at the same time are cheap.  The memo
    fills are idempotent, which keeps concurrent use safe.
    """

    def __init__(self, params: ModelParams, quad: QuadratureConfig = DEFAULT_QUAD):
        self.params = params
        self.quad = quad
        self.hamiltonian = params.epsilon * NUMBER_OP
        self._liouvillian = commutator_superop(self.hamiltonian)
        self._memo: dict = {}

    # -- memoized scalars ---------------------------------------------------

    def k(self, t: float) -> float:
        return k_of_t(t, self.params)

    def g(self, t: float) -> float:
        key = ("g", t)
        if key not in self._memo:
            self._memo[key] = g_of_t(t, self.params, self.quad)
        return self._memo[key]

    def g_dual(self, t: float) -> float:
        key = ("g_dual", t)
        if key not in self._memo:
            self._memo[key] = g_of_t(t, self.params.dual(), self.quad)
        return self._memo[key]

    def p(self, t: float) -> float:
        key = ("p", t)
        if key not in self._memo:
            self._memo[key] = p_of_t(t, self.params, self.quad)
        return self._memo[key]

    def g_infinity(self) -> float:
        key = ("g_inf",)
        if key not in self._memo:
            self._memo[key] = g_stationary(self.params, self.quad)
        return self._memo[key]

    # -- propagator ---------------------------------------------------------

    def propagator(self, t: float) -> np.ndarray:
        """exp(-i[H,.]t + (Gamma t/2) sum_eta [1 - eta p(t)] D_eta)."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        if t == 0.0:
            return identity_superop(DIM)
        gamma = self.params.gamma
        p = self.p(t)
        exponent = (-1j * t) * self._liouvillian \
            + 0.5 * gamma * t * (_DISS_SUM - p * _DISS_DIFF)
        return expm(exponent)

    def propagator_spectral(self, t: float) -> SpectralDecomposition:
        """Closed-form eigenmodes of the propagator."""
        gamma = self.params.gamma
        eps = self.params.epsilon
        p = self.p(t) if t > 0 else 0.0
        values = [
            1.0 + 0.0j,
            cmath.exp((1j * eps - 0.5 * gamma) * t),
            cmath.exp((-1j * eps - 0.5 * gamma) * t),
            cmath.exp(-gamma * t) + 0.0j,
        ]
        modes = (
            SpectralMode(values[0], 0.5 * (IDENTITY_OP + p * PARITY_OP), IDENTITY_OP),
            SpectralMode(values[1], ANNIHILATOR, ANNIHILATOR),
            SpectralMode(values[2], CREATOR, CREATOR),
            SpectralMode(values[3], PARITY_OP, 0.5 * (PARITY_OP - p * IDENTITY_OP)),
        )
        return SpectralDecomposition(modes, ((0,), (1,), (2,), (3,)))

    def kraus_set(self, t: float) -> KrausSet:
        """Closed-form canonical measurement operators and coefficients."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        gamma = self.params.gamma
        eps = self.params.epsilon
        p = self.p(t) if t > 0 else 0.0
        gt = gamma * t
        sh = math.sinh(0.5 * gt)
        ch = math.cosh(0.5 * gt)
        root = math.sqrt(1.0 + (p * sh) ** 2)
        phase = cmath.exp(0.5j * eps * t)
        terms = []
        for eta in (1, -1):
            m0 = math.exp(-0.5 * gt) * (ch + eta * root)
            ups_eta = 0.5 + 0.5 * eta * p * sh / root
            ups_meta = 0.5 - 0.5 * eta * p * sh / root
            op0 = (eta * math.sqrt(ups_eta) * phase) * (ANNIHILATOR @ CREATOR) \
                + (math.sqrt(ups_meta) / phase) * NUMBER_OP
            terms.append(KrausTerm(float(m0), op0, 1))
            m1 = 0.5 * (-math.expm1(-gt)) * (1.0 - eta * p)
            terms.append(KrausTerm(float(m1), d_eta(eta), -1))
        return KrausSet(tuple(terms))

    # -- time-local generator -----------------------------------------------

    def generator(self, t: float) -> np.ndarray:
        """Time-local generator G(t) of d rho/dt = -i G(t) rho."""
        g = self.g(t) if t > 0 else 0.0
        return self._generator_from_g(g)

    def generator_gflip(self, t: float) -> np.ndarray:
        """G(t) with the sign of g(t) flipped (model-specific duality hook)."""
        g = self.g(t) if t > 0 else 0.0
        return self._generator_from_g(-g)

    def generator_stationary(self) -> np.ndarray:
        return self._generator_from_g(self.g_infinity())

    def _generator_from_g(self, g: float) -> np.ndarray:
        gamma = self.params.gamma
        return self._liouvillian + 0.5j * gamma * (_DISS_SUM - g * _DISS_DIFF)

    def generator_spectral(self, t: float) -> SpectralDecomposition:
        gamma = self.params.gamma
        eps = self.params.epsilon
        g = self.g(t) if t > 0 else 0.0
        values = [
            0.0 + 0.0j,
            complex(-eps, -0.5 * gamma),
            complex(eps, -0.5 * gamma),
            complex(0.0, -gamma),
        ]
        modes = (
            SpectralMode(values[0], 0.5 * (IDENTITY_OP + g * PARITY_OP), IDENTITY_OP),
            SpectralMode(values[1], ANNIHILATOR, ANNIHILATOR),
            SpectralMode(values[2], CREATOR, CREATOR),
            SpectralMode(values[3], PARITY_OP, 0.5 * (PARITY_OP - g * IDENTITY_OP)),
        )
        return SpectralDecomposition(modes, ((0,), (1,), (2,), (3,)))

    # -- time-nonlocal kernel -----------------------------------------------

    def kernel_delta(self) -> np.ndarray:
        """Singular part K_delta of K(t) = K_delta delta(t) + K_s(t)."""
        return self._liouvillian + 0.5j * self.params.gamma * _DISS_SUM

    def kernel_smooth(self, t: float) -> np.ndarray:
        """Smooth part K_s(t) = -i (Gamma/2) exp(-Gamma t/2) k(t) (D_+ - D_-)."""
        gamma = self.params.gamma
        w = math.exp(-0.5 * gamma * t) * self.k(t)
        return -0.5j * gamma * w * _DISS_DIFF

    def memory_kernel_hat(self, e: complex) -> np.ndarray:
        """Laplace transform of the memory kernel, continued in e."""
        gamma = self.params.gamma
        kh = k_hat(e + 0.5j * gamma, self.params)
        return self._liouvillian + 0.5j * gamma * (_DISS_SUM - kh * _DISS_DIFF)

    # -- frequency-domain propagator ------------------------------------------

    def propagator_hat(self, e: complex) -> np.ndarray:
        """Closed-form resolvent of the dynamics at complex frequency e."""
        gamma = self.params.gamma
        eps = self.params.epsilon
        for pole in (0.0, -1j * gamma, eps - 0.5j * gamma, -eps - 0.5j * gamma):
            if abs(e - pole) < 1e-12 * max(1.0, abs(gamma)):
                raise PoleError(f"propagator_hat pole at E = {pole}")
        kh = k_hat(e + 0.5j * gamma, self.params)
        one = vectorize(IDENTITY_OP)
        par = vectorize(PARITY_OP)
        out = np.zeros((4, 4), dtype=complex)
        for eta in (1, -1):
            v = vectorize(d_eta(eta).conj().T)
            out += (1j / (e + eta * eps + 0.5j * gamma)) * np.outer(v, v.conj())
        out += (0.5j / e) * np.outer(one + kh * par, one.conj())
        out += (0.5j / (e + 1j * gamma)) * np.outer(par, par.conj() - kh * one.conj())
        return out

    def resolvent_hat(self, e: complex) -> np.ndarray:
        """i / (E - K_hat(E)); equals :meth:`propagator_hat` away from poles."""
        kh = self.memory_kernel_hat(e)
        return 1j * np.linalg.inv(e * identity_superop(DIM) - kh)

    # -- jump layer -----------------------------------------------------------

    def jump_set(self, t: float) -> JumpSet:
        gamma = self.params.gamma
        g = self.g(t) if t > 0 else 0.0
        terms = tuple(
            JumpTerm(0.5 * gamma * (1.0 - eta * g), d_eta(eta), -1)
            for eta in (1, -1)
        )
        return JumpSet(self.hamiltonian.copy(), terms)

    def heisenberg_jump_rates(self, t: float) -> tuple[float, float]:
        """(j_+^H, j_-^H) = (Gamma/2)(1 -+ g_dual(t))."""
        gamma = self.params.gamma
        gd = self.g_dual(t) if t > 0 else 0.0
        return 0.5 * gamma * (1.0 - gd), 0.5 * gamma * (1.0 + gd)

    # -- observables ----------------------------------------------------------

    def _check_state(self, rho0: np.ndarray) -> np.ndarray:
        rho0 = np.asarray(rho0, dtype=complex)
        if rho0.shape != (2, 2):
            raise ValueError("initial state must be a 2x2 matrix")
        if np.abs(rho0 - rho0.conj().T).max() > 1e-9:
            raise ValueError("initial state must be Hermitian")
        if abs(np.trace(rho0) - 1.0) > 1e-9:
            raise ValueError("initial state must have unit trace")
        return rho0

    def evolve(self, t: float, rho0: np.ndarray) -> np.ndarray:
        rho0 = self._check_state(rho0)
        return devectorize(self.propagator(t) @ vectorize(rho0))

    def occupation(self, t: float, rho0: np.ndarray) -> float:
        rho = self.evolve(t, rho0)
        return float(np.trace(NUMBER_OP @ rho).real)

    def current(self, t: float, rho0: np.ndarray) -> float:
        """d<N>/dt from the closed form Gamma e^{-Gamma t} [g_dual(t) + <parity>]/2."""
        rho0 = self._check_state(rho0)
        gamma = self.params.gamma
        par0 = float(np.trace(PARITY_OP @ rho0).real)
        return 0.5 * gamma * math.exp(-gamma * t) * (self.g_dual(t) + par0)

    def stationary_state(self) -> np.ndarray:
        """Fixed point at t -> infinity: (1 + g_inf * parity) / 2."""
        return 0.5 * (IDENTITY_OP + self.g_infinity() * PARITY_OP)


# ---------------------------------------------------------------------------
# pole catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoleCatalog:
    isolated: tuple[complex, ...]
    ladder: tuple[complex, ...]

    @property
    def all_poles(self) -> tuple[complex, ...]:
        return self.isolated + self.ladder


def pole_catalog(params: ModelParams, n_max: int = 2, verify: bool = False,
                 quad: QuadratureConfig = DEFAULT_QUAD) -> PoleCatalog:
    """Exact pole positions of the frequency-domain propagator.

    Isolated poles sit at 0, -i Gamma and +-eps - i Gamma/2; the thermal
    ladder at +-(eps - mu) - i Gamma/2 - i pi T (2n+1).  With ``verify`` each
    pole is confirmed by growth of |propagator_hat| on a shrinking circle.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    gamma = params.gamma
    eps = params.epsilon
    isolated = (0.0 + 0.0j, -1j * gamma, eps - 0.5j * gamma, -eps - 0.5j * gamma)
    ladder = tuple(w - 0.5j * gamma for w in k_hat_pole_ladder(params, n_max))
    catalog = PoleCatalog(isolated, ladder)
    if verify:
        provider = RlmProvider(params, quad)
        all_p = catalog.all_poles
        for pole in all_p:
            spacing = min((abs(pole - q) for q in all_p if q != pole), default=1.0)
            r = min(1e-2 * max(abs(gamma), 1.0), 0.3 * spacing)
            grow = _circle_max(provider, pole, 0.25 * r) / _circle_max(provider, pole, r)
            if grow < 2.0:
                raise ValueError(f"no pole growth detected at E = {pole}")
    return catalog


def _circle_max(provider: RlmProvider, center: complex, radius: float, n: int = 8) -> float:
    vals = []
    for k in range(n):
        e = center + radius * cmath.exp(2j * math.pi * (k + 0.37) / n)
        vals.append(np.abs(provider.propagator_hat(e)).max())
    return max(vals)


# ---------------------------------------------------------------------------
# divisibility scans
# ---------------------------------------------------------------------------

DIVERGES = math.inf


@dataclass(frozen=True)
class ScanConfig:
    points: int = 2000
    horizon_factor: float = 40.0
    refine: bool = True
    divergence_bound: float = 1e3
    max_extensions: int = 6


def _cumulative_g(params: ModelParams, ts: np.ndarray) -> np.ndarray:
    """g on a grid by cumulative Simpson integration of the weighted kernel."""
    w = weighted_kernel_grid(ts, params, -0.5 * params.gamma)
    return cumulative_simpson(w, x=ts, initial=0.0)


def _golden_max(f, lo, hi, tol):
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return max(fc, fd)


def divisibility_max(which: str, params: ModelParams,
                     scan: ScanConfig = ScanConfig()) -> float:
    """max_t |g(t)| or |g_dual(t)|; returns DIVERGES (inf) for unbounded growth.

    Dense cumulative scan over [0, horizon] with golden-section refinement of
    the top bracket.  For the dual function the horizon is doubled (up to a
    cap) while the envelope keeps growing; growth past the divergence bound
    with a still-rising envelope is classified as DIVERGES.
    """
    if which not in ("g", "g_dual"):
        raise ValueError("which must be 'g' or 'g_dual'")
    p = params if which == "g" else params.dual()
    if p.detuning == 0.0:
        return 0.0
    rate = min(abs(params.gamma), math.pi * params.temperature)
    horizon = scan.horizon_factor / rate
    # at least eight samples per oscillation period of the integrand
    n_min = int(math.ceil(8.0 * horizon * abs(p.detuning) / math.pi))
    n = min(max(scan.points, n_min), 400000)
    ts = np.linspace(0.0, horizon, n)
    signed = _cumulative_g(p, ts)
    vals = np.abs(signed)

    if p.gamma < 0.0:
        extensions = 0
        while extensions < scan.max_extensions:
            n4 = max(len(vals) // 4, 1)
            front = vals[:-n4].max()
            tail = vals[-n4:].max()
            if vals.max() > 1e9:
                return DIVERGES
            if tail <= front:
                break
            if vals.max() > scan.divergence_bound and tail > 1.05 * front:
                return DIVERGES
            dt = ts[1] - ts[0]
            more = ts[-1] + np.arange(1, n) * dt
            grid = np.concatenate(([ts[-1]], more))
            w = weighted_kernel_grid(grid, p, -0.5 * p.gamma)
            inc = cumulative_simpson(w, x=grid, initial=0.0)[1:]
            signed = np.concatenate((signed, signed[-1] + inc))
            ts = np.concatenate((ts, more))
            vals = np.abs(signed)
            extensions += 1
        else:
            n4 = max(len(vals) // 4, 1)
            if vals[-n4:].max() > vals[:-n4].max() \
                    and vals.max() > scan.divergence_bound:
                return DIVERGES

    peak = float(vals.max())
    if not scan.refine:
        return peak
    i = int(np.argmax(vals))
    j = max(i - 1, 0)
    lo, hi = ts[j], ts[min(i + 1, len(ts) - 1)]
    if hi <= lo:
        return peak
    anchor_t, anchor_g = ts[j], signed[j]

    def f(t):
        if t <= anchor_t:
            return abs(anchor_g)
        grid = np.linspace(anchor_t, t, 201)
        w = weighted_kernel_grid(grid, p, -0.5 * p.gamma)
        return abs(anchor_g + simpson(w, x=grid))

    refined = _golden_max(f, lo, hi, 1e-4 * (hi - lo))
    return max(peak, float(refined))
