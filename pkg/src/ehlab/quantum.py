"""Quantum kicked rotator: Floquet operator, relaxation, and localization.

The one-period propagator is F = exp(-i (lam/hbar) cos theta) *
exp(-i tau hbar k^2 / 2) on an odd-dimensional symmetric momentum ladder.
The kick factor is built on the angle grid theta_j = 2 pi j / N and
moved to the momentum basis with the unitary DFT between the two grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import inf
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (ConfigurationError, DegenerateSpectrumError,
                     HermiticityError, NumericError)

DEFAULT_GAP_TOL = 1e-9
_HERM_TOL = 1e-10
_TRACE_TOL = 1e-10


@dataclass(frozen=True)
class QuantumParams:
    """Hilbert-space dimension and kicked-rotator parameters.

    The dimension must be odd so the momentum ladder
    k in {-(N-1)/2, ..., (N-1)/2} is symmetric.
    """

    dim: int
    lam: float
    hbar: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or self.dim % 2 == 0:
            raise ConfigurationError(f"dim must be odd and positive, got {self.dim}")
        if self.hbar <= 0 or self.tau <= 0:
            raise ConfigurationError("hbar and tau must be > 0")
        if self.lam < 0:
            raise ConfigurationError(f"lam must be >= 0, got {self.lam}")
        x = self.tau * self.hbar / (4.0 * np.pi)
        for q in range(1, 9):
            if abs(x - round(x * q) / q) < 1e-6:
                raise ConfigurationError(
                    f"quantum resonance: tau*hbar/(4*pi)={x} is within 1e-6 "
                    f"of {round(x * q)}/{q}")


def momentum_ladder(dim: int) -> np.ndarray:
    """Integer momentum indices -(N-1)/2 ... (N-1)/2."""
    half = (dim - 1) // 2
    return np.arange(-half, half + 1)


class DensityState:
    """An N x N density matrix: Hermitian, unit trace, positive."""

    def __init__(self, matrix, check_psd: bool = False):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigurationError(f"density matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > _HERM_TOL:
            raise ConfigurationError("density matrix is not Hermitian to 1e-10")
        tr = np.trace(m).real
        if abs(tr - 1.0) > _TRACE_TOL:
            raise ConfigurationError(f"trace must be 1, got {tr}")
        if check_psd:
            w = np.linalg.eigvalsh(m)
            if w[0] < -1e-8:
                raise ConfigurationError(f"negative eigenvalue {w[0]}")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ObservableMatrix:
    """A labeled Hermitian observable."""

    matrix: np.ndarray
    label: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if np.max(np.abs(m - m.conj().T)) > _HERM_TOL:
            raise ConfigurationError(f"observable '{self.label}' is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def pure_state(vector) -> DensityState:
    """|psi><psi| from a (not necessarily normalized) vector."""
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityState(np.outer(v, v.conj()))


def momentum_eigenstate(dim: int, k: int) -> DensityState:
    """|k><k| on the symmetric ladder."""
    ladder = momentum_ladder(dim)
    idx = np.flatnonzero(ladder == k)
    if idx.size == 0:
        raise ConfigurationError(f"k={k} not on the ladder of dim {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[idx[0], idx[0]] = 1.0
    return DensityState(m)


def maximally_mixed(dim: int) -> DensityState:
    return DensityState(np.eye(dim) / dim)


def haar_random_pure(dim: int, rng: np.random.Generator) -> DensityState:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return pure_state(v)


def momentum_window_projector(dim: int, k_lo: float, k_hi: float,
                              hbar: float = 1.0) -> ObservableMatrix:
    """Projector onto ladder sites with hbar*k in [k_lo, k_hi)."""
    ladder = momentum_ladder(dim)
    sel = (hbar * ladder >= k_lo) & (hbar * ladder < k_hi)
    if not sel.any():
        raise ConfigurationError(f"window [{k_lo}, {k_hi}) selects no ladder site")
    return ObservableMatrix(np.diag(sel.astype(complex)),
                            label=f"P[{k_lo},{k_hi})")


def cos_theta_observable(dim: int) -> ObservableMatrix:
    """cos(theta) on the angle grid, expressed in the momentum basis."""
    u = _dft_momentum_to_angle(dim)
    diag = np.cos(2.0 * np.pi * np.arange(dim) / dim)
    m = u.conj().T @ (diag[:, None] * u)
    m = 0.5 * (m + m.conj().T)
    return ObservableMatrix(m, label="cos_theta")


def l_squared_observable(dim: int, hbar: float = 1.0) -> ObservableMatrix:
    """(hbar k)^2, diagonal in the momentum basis."""
    ladder = momentum_ladder(dim)
    return ObservableMatrix(np.diag((hbar * ladder).astype(complex) ** 2),
                            label="L_squared")


def _dft_momentum_to_angle(dim: int) -> np.ndarray:
    """Unitary with U[j, k] = exp(i k theta_j)/sqrt(N), theta_j = 2 pi j / N."""
    j = np.arange(dim)
    k = momentum_ladder(dim)
    return np.exp(1j * np.outer(2.0 * np.pi * j / dim, k)) / np.sqrt(dim)


@dataclass
class FloquetSystem:
    """Floquet unitary with its quasi-energy spectrum and eigenbasis.

    Quasi-energies phi_k in [0, 2*pi) satisfy F|k> = exp(-i phi_k)|k>
    and are stored in increasing order; `degeneracy_flags` lists index
    pairs closer than `gap_tol` (including the 2*pi wraparound pair).
    """

    params: QuantumParams
    unitary: np.ndarray
    quasi_energies: np.ndarray
    eigenbasis: np.ndarray  # columns are eigenvectors
    degeneracy_flags: list = field(default_factory=list)
    gap_tol: float = DEFAULT_GAP_TOL

    @property
    def dim(self) -> int:
        return self.params.dim

    def to_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        z = self.eigenbasis
        return z.conj().T @ matrix @ z

    def from_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        z = self.eigenbasis
        return z @ matrix @ z.conj().T


def kick_operator(params: QuantumParams) -> np.ndarray:
    """exp(-i (lam/hbar) cos theta) in the momentum basis, via the DFT."""
    n = params.dim
    u = _dft_momentum_to_angle(n)
    theta = 2.0 * np.pi * np.arange(n) / n
    diag = np.exp(-1j * (params.lam / params.hbar) * np.cos(theta))
    return u.conj().T @ (diag[:, None] * u)


def free_propagator_diagonal(params: QuantumParams) -> np.ndarray:
    """Diagonal of exp(-i tau (hbar k)^2 / (2 hbar)) = exp(-i tau hbar k^2/2)."""
    k = momentum_ladder(params.dim)
    return np.exp(-0.5j * params.tau * params.hbar * k.astype(float) ** 2)


def build_floquet(params: QuantumParams,
                  gap_tol: float = DEFAULT_GAP_TOL) -> FloquetSystem:
    """Construct F = kick * free and its spectral decomposition.

    The complex Schur form is used so the eigenbasis of the normal
    matrix F is orthonormal to machine precision.
    """
    f = kick_operator(params) * free_propagator_diagonal(params)[None, :]
    n = params.dim
    err = np.max(np.abs(f @ f.conj().T - np.eye(n)))
    if err > 1e-10:
        raise NumericError(f"Floquet operator not unitary: max |FF^† - I| = {err}")
    t, z = scipy.linalg.schur(f, output="complex")
    eigvals = np.diag(t)
    offdiag = np.max(np.abs(t - np.diag(eigvals))) if n > 1 else 0.0
    if offdiag > 1e-8:
        raise NumericError(f"eigensolve failed: Schur off-diagonal {offdiag}")
    phi = np.mod(-np.angle(eigvals), 2.0 * np.pi)
    order = np.argsort(phi, kind="stable")
    phi = phi[order]
    z = z[:, order]
    gaps = np.diff(phi)
    flags = [(int(i), int(i + 1)) for i in np.flatnonzero(gaps < gap_tol)]
    if n > 1 and (phi[0] + 2.0 * np.pi - phi[-1]) < gap_tol:
        flags.append((n - 1, 0))
    return FloquetSystem(params=params, unitary=f, quasi_energies=phi,
                         eigenbasis=z, degeneracy_flags=flags, gap_tol=gap_tol)


def evolve(rho: DensityState, system: FloquetSystem, n: int) -> DensityState:
    """F^n rho (F^n)^dagger, applied as phases in the eigenbasis."""
    if rho.dim != system.dim:
        raise ConfigurationError("dimension mismatch")
    if n == 0:
        return rho
    rho_e = system.to_eigenbasis(rho.matrix)
    v = np.exp(-1j * n * system.quasi_energies)
    out = system.from_eigenbasis(v[:, None] * rho_e * v.conj()[None, :])
    out = 0.5 * (out + out.conj().T)
    return DensityState(out)


def evolve_vector(psi: np.ndarray, system: FloquetSystem, n: int) -> np.ndarray:
    """F^n |psi> for pure-state work at large dimension."""
    c = system.eigenbasis.conj().T @ psi
    return system.eigenbasis @ (np.exp(-1j * n * system.quasi_energies) * c)


def cesaro_limit_state(rho0: DensityState, system: FloquetSystem,
                       allow_degenerate: bool = False) -> DensityState:
    """Diagonal part of rho0 in the Floquet eigenbasis.

    With a degenerate quasi-energy spectrum the phase-averaging argument
    behind the diagonal form breaks down, so the operation refuses unless
    `allow_degenerate` is set.
    """
    if system.degeneracy_flags and not allow_degenerate:
        raise DegenerateSpectrumError(system.degeneracy_flags)
    if rho0.dim != system.dim:
        raise ConfigurationError("dimension mismatch")
    diag = np.diag(system.to_eigenbasis(rho0.matrix)).real
    out = system.from_eigenbasis(np.diag(diag.astype(complex)))
    out = 0.5 * (out + out.conj().T)
    return DensityState(out)


def expectation(rho: DensityState, obs: ObservableMatrix) -> float:
    """tr(rho O); the imaginary residue must stay below 1e-10."""
    if rho.dim != obs.dim:
        raise ConfigurationError("dimension mismatch")
    val = np.sum(rho.matrix * obs.matrix.T)
    if abs(val.imag) >= 1e-10:
        raise HermiticityError(f"imaginary residue {val.imag} in expectation")
    return float(val.real)


def quantum_correlation(rho_t: DensityState, obs: ObservableMatrix,
                        rho_star: DensityState) -> float:
    """C_Q = (rho(t)|O) - (rho*|O)."""
    return expectation(rho_t, obs) - expectation(rho_star, obs)


@dataclass
class CorrelationSeries:
    """Time series of C_Q and its running Cesaro averages."""

    times: np.ndarray
    c_q: np.ndarray
    cesaro: np.ndarray
    observable_label: str
    state_label: str

    def decay_constant(self) -> float:
        """Smallest C with |cesaro[n]| <= C/n over the recorded series."""
        n = self.times[1:] + 1  # cesaro[i] averages i+1 terms
        return float(np.max(np.abs(self.cesaro[1:]) * n)) if len(n) else 0.0


def _offdiag_series(m_offdiag: np.ndarray, phi: np.ndarray,
                    times: np.ndarray, block: int = 512) -> np.ndarray:
    """sum_{k != k'} M_kk' exp(-i t (phi_k - phi_k')) for each t.

    M must already have a zero diagonal.
    """
    out = np.empty(len(times))
    for start in range(0, len(times), block):
        t = times[start:start + block]
        e = np.exp(-1j * np.outer(t, phi))
        out[start:start + block] = np.einsum(
            "tk,tk->t", e @ m_offdiag, e.conj()).real
    return out


def correlation_series(rho0: DensityState, system: FloquetSystem,
                       obs: ObservableMatrix, horizon: int,
                       allow_degenerate: bool = False) -> CorrelationSeries:
    """C_Q(rho(t), O) for t = 0..horizon-1 with running Cesaro averages.

    rho* is the Cesaro-limit state (diagonal part in the eigenbasis), so
    C_Q reduces to the off-diagonal phase sum, evaluated in blocks.
    """
    if horizon < 2:
        raise ConfigurationError(f"horizon must be >= 2, got {horizon}")
    if system.degeneracy_flags and not allow_degenerate:
        raise DegenerateSpectrumError(system.degeneracy_flags)
    rho_e = system.to_eigenbasis(rho0.matrix)
    obs_e = system.to_eigenbasis(obs.matrix)
    m = rho_e * obs_e.T
    np.fill_diagonal(m, 0.0)
    times = np.arange(horizon)
    c_q = _offdiag_series(m, system.quasi_energies, times)
    cesaro = np.cumsum(c_q) / (times + 1)
    return CorrelationSeries(times=times, c_q=c_q, cesaro=cesaro,
                             observable_label=obs.label, state_label="rho0")


def mixing_volume_fraction(system: FloquetSystem,
                           o_set: Sequence[ObservableMatrix], n_states: int,
                           horizon: int, tol: float, seed: int) -> float:
    """Fraction of Haar-random pure states that look relaxed at late times.

    A state counts as having a weak limit when, for every observable in
    the set, |C_Q(rho(t), O)| < tol at every t in the last decile of the
    horizon. Per-state RNG streams derive from (seed, state index), so
    the result is independent of evaluation order.
    """
    if not o_set:
        raise ConfigurationError("observable set must not be empty")
    if n_states < 100:
        raise ConfigurationError(f"n_states must be >= 100, got {n_states}")
    times = np.arange(int(np.ceil(0.9 * horizon)), horizon)
    obs_e = [system.to_eigenbasis(o.matrix) for o in o_set]
    phi = system.quasi_energies
    z = system.eigenbasis
    n_ok = 0
    for i in range(n_states):
        rng = np.random.default_rng([seed, i])
        v = rng.normal(size=system.dim) + 1j * rng.normal(size=system.dim)
        c = z.conj().T @ (v / np.linalg.norm(v))
        rho_e = np.outer(c, c.conj())
        ok = True
        for oe in obs_e:
            m = rho_e * oe.T
            np.fill_diagonal(m, 0.0)
            if np.max(np.abs(_offdiag_series(m, phi, times))) >= tol:
                ok = False
                break
        n_ok += ok
    return n_ok / n_states


def momentum_distribution(rho: DensityState) -> list[tuple[int, float]]:
    """Diagonal of rho in the momentum basis as (k, probability) pairs."""
    probs = np.diag(rho.matrix).real
    total = probs.sum()
    if abs(total - 1.0) > 1e-10:
        raise NumericError(f"probabilities sum to {total}, not 1")
    return list(zip(momentum_ladder(rho.dim).tolist(), probs.tolist()))


@dataclass(frozen=True)
class LocalizationFit:
    """Exponential-localization fit ln p(k) ~ intercept + slope*|k|."""

    length: float  # l_s = -2/slope, inf when the slope is not negative
    slope: float
    intercept: float
    r_squared: float


def localization_fit(distribution: Sequence[tuple[int, float]],
                     bulk_fraction: float = 0.9) -> LocalizationFit:
    """Fit ln p vs |k| over the bulk of the ladder.

    The outer (1 - bulk_fraction) of the ladder is excluded; sites with
    vanishing probability are dropped from the fit.
    """
    ks = np.array([d[0] for d in distribution], dtype=float)
    ps = np.array([d[1] for d in distribution], dtype=float)
    k_max = np.max(np.abs(ks))
    mask = (np.abs(ks) <= bulk_fraction * k_max) & (ps > 0.0)
    if mask.sum() < 3:
        raise ConfigurationError("fewer than 3 usable sites in the bulk")
    x = np.abs(ks[mask])
    y = np.log(ps[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    # slopes indistinguishable from zero (flat profiles) mean no decay
    length = inf if slope >= -1e-12 else -2.0 / slope
    return LocalizationFit(length=float(length), slope=float(slope),
                           intercept=float(intercept), r_squared=r2)


def localization_length(distribution: Sequence[tuple[int, float]],
                        bulk_fraction: float = 0.9) -> float:
    """Localization length l_s, or inf when no exponential decay is seen."""
    return localization_fit(distribution, bulk_fraction).length
