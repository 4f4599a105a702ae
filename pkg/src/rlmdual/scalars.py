"""Scalar special functions of the wide-band resonant level.

All nontrivial parameter dependence of the level dynamics is carried by three
real functions of time: the reservoir kernel amplitude ``k``, its once-weighted
integral ``g`` (entering the time-local generator) and the doubly averaged
``p`` (entering the finite-time propagator).  This module evaluates them, their
values at sign-inverted parameters, the complex digamma function, and the
Laplace transform of ``k`` continued to the whole complex plane.

Conventions: hbar = k_B = 1, all energies in the same unit, times in inverse
energy.  The Laplace transform used throughout is ``f_hat(w) = int_0^inf dt
exp(i w t) f(t)`` (converges for Im w large enough, continued elsewhere).
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

__all__ = [
    "ModelParams",
    "QuadratureConfig",
    "DEFAULT_QUAD",
    "QuadratureError",
    "PoleError",
    "dual_params",
    "k_of_t",
    "g_of_t",
    "g_dual_of_t",
    "g_stationary",
    "p_of_t",
    "digamma_complex",
    "k_hat",
    "k_hat_pole_ladder",
    "oscillation_panel_width",
    "stationary_cutoff_time",
]

EULER_GAMMA = 0.5772156649015328606

_TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class PoleError(ValueError):
    """Evaluation requested exactly on (or too close to) a pole."""


@dataclass(frozen=True)
class ModelParams:
    """Physical parameter tuple (level energy, potential, temperature, coupling).

    ``gamma`` may be negative: that is how dual (sign-inverted) parameter sets
    are represented.  ``temperature`` is strictly positive and untouched by the
    dual map.
    """

    epsilon: float
    mu: float
    temperature: float
    gamma: float

    def __post_init__(self):
        vals = (self.epsilon, self.mu, self.temperature, self.gamma)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("model parameters must be finite")
        if not self.temperature > 0.0:
            raise ValueError("temperature must be positive")

    @property
    def detuning(self) -> float:
        return self.epsilon - self.mu

    def dual(self) -> "ModelParams":
        """Sign-inverted partner: (eps, mu, gamma) -> (-eps, -mu, -gamma)."""
        return replace(self, epsilon=-self.epsilon, mu=-self.mu, gamma=-self.gamma)


def dual_params(params: ModelParams) -> ModelParams:
    """Functional form of :meth:`ModelParams.dual`."""
    return params.dual()


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    t_max_factor: float = 60.0
    max_subdivisions: int = 400

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureConfig()


# ---------------------------------------------------------------------------
# the kernel amplitude k and its weighted variants
# ---------------------------------------------------------------------------

def k_of_t(t: float, params: ModelParams) -> float:
    """Kernel amplitude 2 T sin(delta t) / sinh(pi T t), delta = eps - mu.

    The removable singularity at t = 0 is handled by series expansion;
    k(0+) = 2 delta / pi.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    delta = params.detuning
    temp = params.temperature
    if t == 0.0:
        return 2.0 * delta / math.pi
    x = math.pi * temp * t
    s = math.sin(delta * t)
    if x < 1e-4:
        # sinh(x) = x (1 + x^2/6 + x^4/120 + ...), truncation below 1e-12
        return 2.0 * temp * s / (x * (1.0 + x * x / 6.0 + x ** 4 / 120.0))
    if x > 350.0:
        # avoid overflow of sinh; relative error exp(-2x) is negligible
        return 4.0 * temp * s * math.exp(-x) / (1.0 - math.exp(-2.0 * x))
    return 2.0 * temp * s / math.sinh(x)


def _weighted_k(t, delta, temp, decay):
    """exp(decay * t) * k(t) with the exponentials fused against overflow."""
    if t == 0.0:
        return 2.0 * delta / math.pi
    x = math.pi * temp * t
    s = math.sin(delta * t)
    if x < 1e-4:
        return 2.0 * temp * s * math.exp(decay * t) / (x * (1.0 + x * x / 6.0 + x ** 4 / 120.0))
    if x > 350.0:
        return 4.0 * temp * s * math.exp(decay * t - x) / (1.0 - math.exp(-2.0 * x))
    return 2.0 * temp * s * math.exp(decay * t) / math.sinh(x)


def weighted_kernel_grid(ts: np.ndarray, params: ModelParams, decay: float) -> np.ndarray:
    """Vectorized exp(decay*t) * k(t) on a time grid (used by scan routines)."""
    ts = np.asarray(ts, dtype=float)
    delta = params.detuning
    temp = params.temperature
    x = math.pi * temp * ts
    out = np.empty_like(ts)
    small = x < 1e-4
    big = x > 350.0
    mid = ~(small | big)
    if np.any(small):
        xs = x[small]
        tss = ts[small]
        sinc = np.where(
            tss == 0.0,
            delta / (math.pi * temp),
            np.divide(np.sin(delta * tss), xs * (1.0 + xs * xs / 6.0 + xs ** 4 / 120.0),
                      out=np.full_like(tss, delta / (math.pi * temp)), where=tss != 0.0),
        )
        out[small] = 2.0 * temp * sinc * np.exp(decay * tss)
    if np.any(mid):
        out[mid] = 2.0 * temp * np.sin(delta * ts[mid]) * np.exp(decay * ts[mid]) / np.sinh(x[mid])
    if np.any(big):
        e = decay * ts[big] - x[big]
        out[big] = 4.0 * temp * np.sin(delta * ts[big]) * np.exp(e) / (1.0 - np.exp(-2.0 * x[big]))
    return out


def oscillation_panel_width(params: ModelParams) -> float:
    """Panel width resolving both the sin(delta t) oscillation and thermal decay."""
    widths = [1.0 / (math.pi * params.temperature)]
    if params.detuning != 0.0:
        widths.append(math.pi / abs(params.detuning))
    return min(widths)


def _panel_quad(f, a, b, width, cfg):
    """Adaptive quadrature over [a, b] split into oscillation-aware panels."""
    if b <= a:
        return 0.0
    span = b - a
    n = max(1, int(math.ceil(span / width)))
    if n > cfg.max_subdivisions:
        n = cfg.max_subdivisions
    edges = np.linspace(a, b, n + 1)
    total = 0.0
    err = 0.0
    eps_panel = cfg.abs_tol / n
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = quad(f, lo, hi, epsabs=eps_panel, epsrel=cfg.rel_tol, limit=60)
        total += val
        err += e
    bound = 10.0 * max(cfg.abs_tol, cfg.rel_tol * abs(total))
    if err > bound:
        raise QuadratureError(
            f"quadrature error {err:.3e} exceeds bound {bound:.3e}", achieved=err)
    return total


def g_of_t(t: float, params: ModelParams, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Integral of exp(-gamma s / 2) k(s) over [0, t]."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0.0 or params.detuning == 0.0:
        return 0.0
    delta = params.detuning
    temp = params.temperature
    decay = -0.5 * params.gamma
    f = lambda s: _weighted_k(s, delta, temp, decay)
    return _panel_quad(f, 0.0, t, oscillation_panel_width(params), cfg)


def g_dual_of_t(t: float, params: ModelParams, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """g evaluated at the sign-inverted parameters (direct integral, not the identity)."""
    return g_of_t(t, params.dual(), cfg)


def stationary_cutoff_time(params: ModelParams, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Cutoff for improper time integrals of exp(-gamma t/2) k(t).

    The integrand is bounded by 4 T exp(-(pi T + gamma/2) t); the cutoff places
    that bound below abs_tol / 10, capped by t_max_factor decay units.
    """
    rate = math.pi * params.temperature + 0.5 * params.gamma
    if rate <= 0:
        raise QuadratureError("stationary integral diverges: pi*T + gamma/2 <= 0")
    t_bound = math.log(max(40.0 * params.temperature / cfg.abs_tol, 10.0)) / rate
    t_cap = cfg.t_max_factor / max(abs(params.gamma), math.pi * params.temperature)
    return min(t_bound, t_cap)


def g_stationary(params: ModelParams, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Long-time limit of g by quadrature to the decay-bound horizon."""
    if params.detuning == 0.0:
        return 0.0
    return g_of_t(stationary_cutoff_time(params, cfg), params, cfg)


def p_of_t(t: float, params: ModelParams, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Doubly averaged kernel function entering the propagator.

    Production path is the one-integral identity
    ``(1 - exp(-gamma t)) p(t) = g(t) + exp(-gamma t) g_dual(t)``;
    the defining double integral is kept as a test oracle only.  For
    ``|gamma t| < 1e-6`` the removable point is evaluated from the
    gamma -> 0 limit ``p = (1/t) int_0^t (t - s) k(s) ds`` (relative error
    of order gamma*t).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0.0:
        return 0.0
    gt = params.gamma * t
    if abs(gt) < 1e-6:
        delta = params.detuning
        if delta == 0.0:
            return 0.0
        f = lambda s: (t - s) * k_of_t(s, params)
        val = _panel_quad(f, 0.0, t, oscillation_panel_width(params), cfg)
        return val / t
    g = g_of_t(t, params, cfg)
    gd = g_dual_of_t(t, params, cfg)
    return (g + math.exp(-gt) * gd) / (-math.expm1(-gt))


# ---------------------------------------------------------------------------
# complex digamma and the continued Laplace transform of k
# ---------------------------------------------------------------------------

# Bernoulli coefficients B_{2n}/(2n) for the asymptotic tail of psi
_PSI_ASYMP = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma_complex(z: complex) -> complex:
    """Digamma function on the complex plane.

    Upward recurrence pushes the argument to Re z >= 10 where the asymptotic
    (de Moivre) series converges below 1e-13 relative; arguments with negative
    real part are mapped through the reflection formula.  Nonpositive integers
    raise :class:`PoleError`.
    """
    z = complex(z)
    if z.real <= 0.5 and abs(z.imag) < 1e-12:
        near = round(z.real)
        if near <= 0 and abs(z.real - near) < 1e-12:
            raise PoleError(f"digamma pole at z = {near}")
    if z.real < 0.0:
        # psi(z) = psi(1 - z) - pi * cot(pi z)
        w = math.pi * z
        if abs(w.imag) > 25.0:
            cot = -1j if w.imag > 0 else 1j
        else:
            cot = cmath.cos(w) / cmath.sin(w)
        return digamma_complex(1.0 - z) - math.pi * cot
    acc = 0.0 + 0.0j
    while z.real < 10.0:
        acc -= 1.0 / z
        z += 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    tail = 0.0 + 0.0j
    for c in reversed(_PSI_ASYMP):
        tail = inv2 * (c + tail)
    return acc + cmath.log(z) - 0.5 * inv - tail


def k_hat(omega: complex, params: ModelParams) -> complex:
    """Laplace transform of k, analytically continued via the digamma form.

    Valid on the whole complex plane away from the simple-pole ladder at
    ``omega = +-delta - i pi T (2n+1)``.
    """
    delta = params.detuning
    temp = params.temperature
    out = 0.0 + 0.0j
    for eta in (1.0, -1.0):
        arg = 0.5 - 1j * (omega + eta * delta) / (_TWO_PI * temp)
        try:
            out += eta * digamma_complex(arg)
        except PoleError as exc:
            raise PoleError(
                f"k_hat pole hit at omega = {omega} (digamma argument {arg})") from exc
    return 1j * out / math.pi


def k_hat_pole_ladder(params: ModelParams, n_max: int) -> list[complex]:
    """Pole positions omega = +-delta - i pi T (2n+1), n = 0..n_max."""
    delta = params.detuning
    temp = params.temperature
    poles = []
    for n in range(n_max + 1):
        im = -math.pi * temp * (2 * n + 1)
        poles.append(complex(delta, im))
        poles.append(complex(-delta, im))
    return poles


# ---------------------------------------------------------------------------
# fixed-order panel integration for matrix-valued integrands
# ---------------------------------------------------------------------------

def gauss_panels(f, a: float, b: float, width: float, order: int = 12,
                 max_panels: int = 2000):
    """Composite Gauss-Legendre integration of a (possibly matrix-valued) f.

    Deterministic fixed-order rule on panels no wider than ``width``; accuracy
    is set by the panel width against the integrand's oscillation scale.
    """
    if b <= a:
        return 0.0
    n = max(1, min(max_panels, int(math.ceil((b - a) / width))))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n + 1)
    total = None
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for x, w in zip(nodes, weights):
            val = f(mid + half * x)
            term = (w * half) * np.asarray(val)
            total = term if total is None else total + term
    return total
