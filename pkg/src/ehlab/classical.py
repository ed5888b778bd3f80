"""Classical kicked-rotator dynamics on the 2-torus.

Implements the standard (Chirikov) map, tangent-map Lyapunov exponents,
grid classification of the phase space into regular and chaotic regions,
and Monte-Carlo correlations between phase-space sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi

# Iterations discarded before Lyapunov accumulation starts, to remove
# the initial tangent-vector alignment bias.
LYAPUNOV_TRANSIENT = 100

# Default per-kick Lyapunov cutoff separating finite-time noise (~1/sqrt(n))
# from genuine positive exponents at n_steps >= 5000.
DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class PhasePoint:
    """A point (theta, p) on the torus, both coordinates in [0, 2*pi)."""

    theta: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(np.mod(self.theta, TWO_PI)))
        object.__setattr__(self, "p", float(np.mod(self.p, TWO_PI)))


@dataclass(frozen=True)
class MapParams:
    """Kick strength and kick period of the standard map."""

    lam: float
    tau: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigurationError(f"kick strength must be >= 0, got {self.lam}")
        if self.tau <= 0:
            raise ConfigurationError(f"kick period must be > 0, got {self.tau}")


@dataclass(frozen=True)
class OrbitClass:
    """Classification of a single orbit with the evidence used."""

    label: str  # "Regular" or "Chaotic"
    lyapunov: float
    n_steps: int
    threshold: float


@dataclass(frozen=True)
class RegionEstimate:
    """Grid estimate of the normalized chaotic measure at one kick strength."""

    lam: float
    mu_A: float
    mu_E: float
    n_samples: int
    threshold: float
    ci_halfwidth: float


def step_map(x: PhasePoint, params: MapParams) -> PhasePoint:
    """One application of p' = p + lam*sin(theta), theta' = theta + tau*p'.

    The momentum is reduced mod 2*pi before the angle update so the torus
    map stays invertible for non-integer tau.
    """
    p_new = np.mod(x.p + params.lam * np.sin(x.theta), TWO_PI)
    theta_new = x.theta + params.tau * p_new
    return PhasePoint(theta_new, p_new)


def inverse_step_map(x: PhasePoint, params: MapParams) -> PhasePoint:
    """Exact inverse of :func:`step_map` (the map is invertible)."""
    theta_old = x.theta - params.tau * x.p
    p_old = x.p - params.lam * np.sin(theta_old)
    return PhasePoint(theta_old, p_old)


def step_jacobian(x: PhasePoint, params: MapParams) -> np.ndarray:
    """Tangent map d(theta', p')/d(theta, p) at the point x; det = 1."""
    c = params.lam * np.cos(x.theta)
    return np.array([[1.0 + params.tau * c, params.tau], [c, 1.0]])


def _lyapunov_batch(theta, p, params: MapParams, n_steps: int,
                    transient: int = LYAPUNOV_TRANSIENT):
    """Largest Lyapunov exponent for arrays of initial conditions.

    Tangent vectors are renormalized every step to avoid overflow; the
    first `transient` iterations are discarded before accumulating.
    """
    theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    p = np.mod(np.asarray(p, dtype=float), TWO_PI)
    v_theta = np.ones_like(theta)
    v_p = np.zeros_like(theta)
    log_sum = np.zeros_like(theta)
    lam, tau = params.lam, params.tau
    for i in range(transient + n_steps):
        c = lam * np.cos(theta)
        # advance the orbit
        p = np.mod(p + lam * np.sin(theta), TWO_PI)
        theta = np.mod(theta + tau * p, TWO_PI)
        # advance the tangent vector with the Jacobian at the pre-step point
        w_theta = (1.0 + tau * c) * v_theta + tau * v_p
        w_p = c * v_theta + v_p
        norm = np.hypot(w_theta, w_p)
        v_theta = w_theta / norm
        v_p = w_p / norm
        if i >= transient:
            log_sum += np.log(norm)
    return log_sum / n_steps


def lyapunov_exponent(x0: PhasePoint, params: MapParams, n_steps: int) -> float:
    """Largest Lyapunov exponent (per kick) from the tangent-map method."""
    if n_steps < 1000:
        raise ConfigurationError(f"n_steps must be >= 1000, got {n_steps}")
    return float(_lyapunov_batch(np.array([x0.theta]), np.array([x0.p]),
                                 params, n_steps)[0])


def classify_orbit(x0: PhasePoint, params: MapParams, n_steps: int,
                   threshold: float = DEFAULT_THRESHOLD) -> OrbitClass:
    """Chaotic iff the Lyapunov exponent exceeds the threshold.

    Exact ties are classified Regular (conservative toward the
    integrable side).
    """
    if threshold <= 0:
        raise ConfigurationError(f"threshold must be > 0, got {threshold}")
    expo = lyapunov_exponent(x0, params, n_steps)
    label = "Chaotic" if expo > threshold else "Regular"
    return OrbitClass(label=label, lyapunov=expo, n_steps=n_steps,
                      threshold=threshold)


def estimate_chaotic_measure(params: MapParams, grid_side: int, n_steps: int,
                             threshold: float = DEFAULT_THRESHOLD) -> RegionEstimate:
    """Fraction of a uniform grid of initial conditions that is chaotic.

    Uses the uniform (Lebesgue) measure on the 2pi x 2pi torus normalized
    to 1; mu_A + mu_E = 1 by complementary counting. The 95% binomial
    confidence half-width is attached.
    """
    if grid_side < 16:
        raise ConfigurationError(f"grid_side must be >= 16, got {grid_side}")
    if threshold <= 0:
        raise ConfigurationError(f"threshold must be > 0, got {threshold}")
    # cell-centered grid, avoids the measure-zero fixed lines at 0
    edges = (np.arange(grid_side) + 0.5) * TWO_PI / grid_side
    theta, p = np.meshgrid(edges, edges, indexing="ij")
    exponents = _lyapunov_batch(theta.ravel(), p.ravel(), params, n_steps)
    n = grid_side * grid_side
    n_chaotic = int(np.count_nonzero(exponents > threshold))
    mu_a = n_chaotic / n
    ci = 1.96 * np.sqrt(mu_a * (1.0 - mu_a) / n)
    return RegionEstimate(lam=params.lam, mu_A=mu_a, mu_E=1.0 - mu_a,
                          n_samples=n, threshold=threshold,
                          ci_halfwidth=float(ci))


@dataclass(frozen=True)
class Cell:
    """A rectangle [theta_min, theta_max) x [p_min, p_max) on the torus."""

    theta_min: float
    theta_max: float
    p_min: float
    p_max: float

    def contains(self, theta, p):
        return ((theta >= self.theta_min) & (theta < self.theta_max)
                & (p >= self.p_min) & (p < self.p_max))


def cells_from_json(text: str) -> list[Cell]:
    """Parse a JSON array of {theta_min, theta_max, p_min, p_max} objects."""
    raw = json.loads(text)
    if not isinstance(raw, list):
        raise ConfigurationError("cell set must be a JSON array")
    return [Cell(float(c["theta_min"]), float(c["theta_max"]),
                 float(c["p_min"]), float(c["p_max"])) for c in raw]


def _membership(cells, theta, p):
    inside = np.zeros(theta.shape, dtype=bool)
    for cell in cells:
        inside |= cell.contains(theta, p)
    return inside


@dataclass(frozen=True)
class CorrelationEstimate:
    """Monte-Carlo estimate of mu(T^t A intersect B) - mu(A) mu(B)."""

    value: float
    std_error: float
    mu_A: float
    mu_B: float
    t: int
    n_samples: int
    empty_input: bool = False


def set_correlation(A: list[Cell], B: list[Cell], params: MapParams, t: int,
                    n_samples: int, seed: int) -> CorrelationEstimate:
    """Time-shifted correlation between two cell sets under the map.

    All three measures are estimated from the same seeded uniform sample,
    so A = B = whole torus gives exactly zero. Empty A or B yields
    -mu(A)*mu(B) with the `empty_input` flag raised.
    """
    if n_samples < 10_000:
        raise ConfigurationError(f"n_samples must be >= 10^4, got {n_samples}")
    if t < 0:
        raise ConfigurationError(f"t must be >= 0, got {t}")
    rng = np.random.default_rng(seed)
    theta0 = rng.uniform(0.0, TWO_PI, n_samples)
    p0 = rng.uniform(0.0, TWO_PI, n_samples)

    in_a = _membership(A, theta0, p0) if A else np.zeros(n_samples, bool)
    in_b0 = _membership(B, theta0, p0) if B else np.zeros(n_samples, bool)
    mu_a = float(np.mean(in_a))
    mu_b = float(np.mean(in_b0))
    empty = (not A) or (not B) or mu_a == 0.0 or mu_b == 0.0

    theta, p = theta0, p0
    for _ in range(t):
        p = np.mod(p + params.lam * np.sin(theta), TWO_PI)
        theta = np.mod(theta + params.tau * p, TWO_PI)
    in_b_t = _membership(B, theta, p) if B else np.zeros(n_samples, bool)

    inter = float(np.mean(in_a & in_b_t))
    value = inter - mu_a * mu_b
    # conservative error: binomial errors of the three estimated terms
    def se(q):
        return np.sqrt(q * (1.0 - q) / n_samples)
    std_error = float(se(inter) + mu_b * se(mu_a) + mu_a * se(mu_b))
    return CorrelationEstimate(value=value, std_error=std_error, mu_A=mu_a,
                               mu_B=mu_b, t=t, n_samples=n_samples,
                               empty_input=empty)
