"""Lattice <-> continuum dictionary and empirical approximation metrics.

The continuum fields live on the rescaled torus y in [-1,1]^d (period 2 per
axis) with orthonormal basis 2^(-d/2) exp(i pi K.y); continuum coefficients
relate to unitary-DFT lattice modes by the pure scaling

    Qhat_k = mu^(alpha - d/2) * sum_L qhat_{k+L},   mu L in (2Z)^d,

the sum folding continuum modes onto the lattice cell (aliasing).  The NLS
field phi relates to (q, p) through psi = (q - i p)/sqrt(2), the removal of
the fast phase psi = e^{it} phi, and the slow time tau = (1/2) mu^(2 l
alpha) t.  On this torus the dispersive symbol of the bridged NLS is
pi^2 * eps * |K|^2 with eps = mu^(2(1 - l alpha)), which matches the lattice
dispersion omega_k - 1 at leading order; the effective nonlinear coefficient
is beta * binom(2l+2, l+1) / 2^(l+1).

All scaling tests are trend tests: the theorems provide one-sided bounds
with unknown constants, so experiments compare errors across (mu, ~mu/2)
pairs by log-ratio slopes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import HorizonWarning, ParameterError, StructuralError
from .lattice import KGIntegrator, KGParams, LatticeGrid, LatticeState
from .nls import NLSParams, NLSState, SplitStepIntegrator
from .spectral import ModeSpectrum, cascade_metric, dft_modes, inverse_dft, omega_shifted, specific_spectrum


@dataclass(frozen=True)
class RegimeParams:
    """All exponents of the small-dispersion bridge regime."""

    alpha: float
    ell: int
    mu: float
    delta: float
    m: float
    s: float
    lam: float
    d: int = 1

    def __post_init__(self):
        if self.ell < 1:
            raise ParameterError(f"ell must be >= 1, got {self.ell}")
        if not 0.0 < self.alpha <= 1.0 / self.ell:
            raise ParameterError(
                f"alpha must lie in (0, 1/ell], got {self.alpha}"
            )
        if not 0.0 < self.mu < 1.0:
            raise ParameterError(f"mu must lie in (0, 1), got {self.mu}")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if self.m <= 0 or self.s < 0 or self.lam <= 0:
            raise ParameterError("m > 0, s >= 0 and lambda > 0 are required")

    @property
    def eps_derived(self) -> float:
        """Dispersion of the bridged NLS: mu^(2(1 - l*alpha)), exact power."""
        return self.mu ** (2.0 * (1.0 - self.ell * self.alpha))

    @property
    def nu_exp(self) -> float:
        """Expansion exponent nu = l*alpha - 1 of the averaging step."""
        return self.ell * self.alpha - 1.0

    @property
    def nu_growth(self) -> float:
        """Growth exponent nu = 2l + 1/m of the norm-growth machinery."""
        return 2.0 * self.ell + 1.0 / self.m

    @property
    def mode_cutoff(self) -> float:
        """mu^-(1-delta), the |K| range where lattice and NLS modes are compared."""
        return self.mu ** (-(1.0 - self.delta))

    def tau_of_t(self, t: float) -> float:
        return 0.5 * self.mu ** (2 * self.ell * self.alpha) * t

    def t_of_tau(self, tau: float) -> float:
        return 2.0 * tau / self.mu ** (2 * self.ell * self.alpha)


def grid_for_regime(regime: RegimeParams) -> LatticeGrid:
    n = round(2.0 / regime.mu)
    if n % 2 == 0 or abs(2.0 / n - regime.mu) > 1e-12:
        raise ParameterError(f"mu = {regime.mu} is not 2/(2N+1) for integer N")
    return LatticeGrid(N=(n - 1) // 2, d=regime.d)


def regime_for_grid(
    grid: LatticeGrid, alpha: float, ell: int, delta: float, m: float, s: float, lam: float
) -> RegimeParams:
    return RegimeParams(
        alpha=alpha, ell=ell, mu=grid.mu, delta=delta, m=m, s=s, lam=lam, d=grid.d
    )


# ---------------------------------------------------------------------------
# Regime inequalities
# ---------------------------------------------------------------------------


def alpha0_bound(m: float, d: int, ell: int, lam: float) -> float:
    """Explicit lower admissibility threshold for alpha (max of four branches)."""
    nu = 2.0 * ell + 1.0 / m
    nl = nu * lam
    branches = (
        1.0 - (1.0 - d / 4.0) / (1.0 + nl),
        (1.0 - nl + math.sqrt((1.0 - nl) ** 2 + 8.0 * nl)) / 4.0,
        d / 4.0 + 1.0 / 16.0,
        (math.sqrt(5.0) - 1.0) / 2.0,
    )
    return max(branches) / ell


def delta0_bound(m: float, d: int, ell: int, alpha1: float, lam: float) -> float:
    """Threshold delta_0 = max(delta_01, delta_02) below which the cascade
    bookkeeping loses to the remainders."""
    g = (1.0 - ell * alpha1) * 2.0 * lam / (1.0 - 2.0 * ell * lam)
    d01 = 1.0 - (1.0 / 8.0) / (2.0 * m + d + 1.0 / 8.0) * (1.0 + g)
    d02 = 1.0 - g / (2.0 * m + d)
    return max(d01, d02)


@dataclass(frozen=True)
class RegimeCondition:
    name: str
    passed: bool
    value: float
    lower: float
    upper: float


@dataclass(frozen=True)
class RegimeReport:
    conditions: tuple[RegimeCondition, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __iter__(self):
        return iter(self.conditions)


def regime_check(regime: RegimeParams) -> RegimeReport:
    """Evaluate every inequality the theorems impose; report-only."""
    ell, m, d, lam = regime.ell, regime.m, regime.d, regime.lam
    golden = (math.sqrt(5.0) - 1.0) / (2.0 * ell)
    a0 = alpha0_bound(m, d, ell, lam)
    d0 = delta0_bound(m, d, ell, regime.alpha, lam)
    lam_hi = 1.0 / regime.nu_growth
    conds = (
        RegimeCondition(
            "alpha_small_dispersion_window",
            golden < regime.alpha < 1.0 / ell,
            regime.alpha,
            golden,
            1.0 / ell,
        ),
        RegimeCondition(
            "alpha_above_alpha0",
            regime.alpha > a0,
            regime.alpha,
            a0,
            1.0 / ell,
        ),
        RegimeCondition(
            "delta_window", d0 < regime.delta < 1.0, regime.delta, d0, 1.0
        ),
        RegimeCondition(
            "lambda_below_inverse_nu", 0.0 < lam < lam_hi, lam, 0.0, lam_hi
        ),
        RegimeCondition(
            "nu_expansion_window",
            (math.sqrt(5.0) - 3.0) / 2.0 < regime.nu_exp <= 0.0,
            regime.nu_exp,
            (math.sqrt(5.0) - 3.0) / 2.0,
            0.0,
        ),
    )
    return RegimeReport(conds)


def validity_horizon(regime: RegimeParams, T0: float = 1.0) -> float:
    """Original-time horizon T0 / mu^(2(nu*lam + l*alpha*(1 - nu*lam)))."""
    nl = regime.nu_growth * regime.lam
    expo = 2.0 * (nl + regime.ell * regime.alpha * (1.0 - nl))
    return T0 / regime.mu**expo


def bridge_nls_params(regime: RegimeParams, beta: float) -> NLSParams:
    """NLS parameters matching the lattice on the period-2 torus."""
    c_nl = beta * math.comb(2 * regime.ell + 2, regime.ell + 1) / 2 ** (regime.ell + 1)
    return NLSParams(
        eps=regime.eps_derived,
        ell=regime.ell,
        beta_eff=c_nl,
        wavenumber_scale=math.pi,
        volume=2.0**regime.d,
    )


# ---------------------------------------------------------------------------
# Mode dictionaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuumModes:
    """Fourier data (qhat_K, phat_K) of the rescaled continuum fields, shifted
    order on a box |K_i| <= H."""

    qhat: np.ndarray
    phat: np.ndarray
    t: float = 0.0

    @property
    def d(self) -> int:
        return self.qhat.ndim

    @property
    def H(self) -> int:
        return (self.qhat.shape[0] - 1) // 2

    def at(self, K: tuple[int, ...] | int) -> tuple[complex, complex]:
        K = (K,) if isinstance(K, int) else tuple(K)
        idx = tuple(c + self.H for c in K)
        return complex(self.qhat[idx]), complex(self.phat[idx])


def lattice_to_continuum_modes(
    spec: ModeSpectrum, regime: RegimeParams
) -> ContinuumModes:
    """qhat_K = mu^(d/2 - alpha) Qhat_k on the fundamental cell K = k."""
    scale = regime.mu ** (regime.d / 2.0 - regime.alpha)
    return ContinuumModes(scale * spec.Qhat, scale * spec.Phat, spec.t)


def continuum_to_lattice_modes(
    cont: ContinuumModes, regime: RegimeParams, grid: LatticeGrid
) -> ModeSpectrum:
    """Inverse dictionary with alias folding onto the lattice cell."""
    if cont.d != grid.d:
        raise StructuralError(f"continuum d={cont.d} does not match grid d={grid.d}")
    scale = regime.mu ** (regime.alpha - regime.d / 2.0)
    qh = _fold_to_cell(cont.qhat, grid)
    ph = _fold_to_cell(cont.phat, grid)
    omega = omega_shifted(grid)
    qh = scale * qh
    ph = scale * ph
    E = 0.5 * (np.abs(ph) ** 2 + omega**2 * np.abs(qh) ** 2)
    return ModeSpectrum(qh, ph, omega, E, cont.t)


def _fold_to_cell(arr: np.ndarray, grid: LatticeGrid) -> np.ndarray:
    """Sum continuum box modes onto lattice cell indices (K mod (2N+1), centered)."""
    H = (arr.shape[0] - 1) // 2
    n = grid.n
    out = np.zeros(grid.shape, dtype=complex)
    idx = (np.arange(-H, H + 1) + grid.N) % n  # cell slot of each box mode
    if grid.d == 1:
        np.add.at(out, idx, arr)
    else:
        grids = np.meshgrid(*([idx] * grid.d), indexing="ij")
        np.add.at(out, tuple(g.ravel() for g in grids), arr.ravel())
    return out


def aliased_specific_energy(
    cont: ContinuumModes,
    K: tuple[int, ...] | int,
    regime: RegimeParams,
    grid: LatticeGrid,
) -> float:
    """E_kappa / mu^(2 alpha) for kappa(k) = mu K:
    (1/2) sum over mu L in (2Z)^d of |phat_{K+L}|^2 + omega_k^2 |qhat_{K+L}|^2.

    K must lie in the fundamental cell; aliases beyond the coefficient box
    contribute nothing (truncated data).
    """
    K = (K,) if isinstance(K, int) else tuple(K)
    if len(K) != grid.d or any(abs(c) > grid.N for c in K):
        raise ParameterError(f"K {K} outside the fundamental cell |K_i| <= {grid.N}")
    from .spectral import mode_frequency

    w2 = mode_frequency(K, grid) ** 2
    H, n = cont.H, grid.n
    ranges = []
    for c in K:
        lo = math.ceil((-H - c) / n)
        hi = math.floor((H - c) / n)
        ranges.append([c + n * j for j in range(lo, hi + 1)])
    total = 0.0
    idx_sets = np.meshgrid(*ranges, indexing="ij") if grid.d > 1 else [np.array(ranges[0])]
    flat = [ix.ravel() for ix in idx_sets]
    for pt in zip(*flat):
        idx = tuple(int(c) + H for c in pt)
        total += abs(cont.phat[idx]) ** 2 + w2 * abs(cont.qhat[idx]) ** 2
    return 0.5 * total


def lattice_specific_energy_per_k(
    spec: ModeSpectrum, K: tuple[int, ...] | int, regime: RegimeParams, grid: LatticeGrid
) -> float:
    """Measured E_kappa / mu^(2 alpha) of a single lattice mode (no orbit sum)."""
    K = (K,) if isinstance(K, int) else tuple(K)
    idx = tuple(c + grid.N for c in K)
    return float(spec.E[idx]) / ((grid.N + 0.5) ** grid.d * regime.mu ** (2 * regime.alpha))


# ---------------------------------------------------------------------------
# NLS state <-> continuum fields
# ---------------------------------------------------------------------------


def continuum_to_nls(cont: ContinuumModes) -> NLSState:
    """xi_K of psi = (q - i p)/sqrt(2) at t = 0 (fast phase not yet removed)."""
    return NLSState((cont.qhat - 1j * cont.phat) / math.sqrt(2.0), 0.0)


def nls_to_continuum(state: NLSState, regime: RegimeParams, t: float) -> ContinuumModes:
    """Restore the fast phase: qhat_K = (e^{it} xi_K + e^{-it} conj(xi_{-K}))/sqrt(2)."""
    ph = complex(math.cos(t), math.sin(t))
    xi = state.xi
    rev = np.conj(xi[(slice(None, None, -1),) * state.d])
    qhat = (ph * xi + rev / ph) / math.sqrt(2.0)
    phat = 1j * (ph * xi - rev / ph) / math.sqrt(2.0)
    return ContinuumModes(qhat, phat, t)


def crop_nls_box(state: NLSState, H: int) -> NLSState:
    """Restrict (or zero-pad) the coefficient box to |h_i| <= H."""
    src = state.xi
    H_old = state.H
    out = np.zeros((2 * H + 1,) * state.d, dtype=complex)
    m = min(H, H_old)
    src_sl = tuple([slice(H_old - m, H_old + m + 1)] * state.d)
    dst_sl = tuple([slice(H - m, H + m + 1)] * state.d)
    out[dst_sl] = src[src_sl]
    return NLSState(out, state.tau)


def nls_state_from_lattice(
    state: LatticeState, regime: RegimeParams, grid: LatticeGrid, H: int
) -> NLSState:
    """Initial NLS datum matching a lattice state at t = 0."""
    cont = lattice_to_continuum_modes(dft_modes(state, grid), regime)
    return crop_nls_box(continuum_to_nls(cont), H)


def nls_mode_energy_reference(state: NLSState, K: tuple[int, ...] | int) -> float:
    """mu -> 0 limit of the per-mode specific energy:
    (xi_K eta_K + xi_{-K} eta_{-K})/2; equals xi_K eta_K on the odd set."""
    K = (K,) if isinstance(K, int) else tuple(K)
    H = state.H
    plus = tuple(c + H for c in K)
    minus = tuple(-c + H for c in K)
    return 0.5 * (abs(state.xi[plus]) ** 2 + abs(state.xi[minus]) ** 2)


def build_approximate_lattice_solution(
    state: NLSState,
    regime: RegimeParams,
    grid: LatticeGrid,
    t: float,
    T0: float = 1.0,
) -> LatticeState:
    """Q_a(t, j) = mu^alpha q_a(t, mu j) with the fast e^{+-it} phases restored.

    Warns when t lies beyond the validity horizon of the approximation.
    """
    horizon = validity_horizon(regime, T0)
    if abs(t) > horizon:
        warnings.warn(
            f"t = {t:.3g} beyond the validity horizon {horizon:.3g}",
            HorizonWarning,
            stacklevel=2,
        )
    cont = nls_to_continuum(state, regime, t)
    spec = continuum_to_lattice_modes(cont, regime, grid)
    lat = inverse_dft(spec, grid)
    return LatticeState(lat.Q, lat.P, t)


def approximation_error(true_state: LatticeState, approx: LatticeState) -> float:
    """sup over sites of |Delta Q| + |Delta P|."""
    if true_state.Q.shape != approx.Q.shape:
        raise StructuralError(
            f"grid mismatch: {true_state.Q.shape} vs {approx.Q.shape}"
        )
    return float(np.max(np.abs(true_state.Q - approx.Q) + np.abs(true_state.P - approx.P)))


# ---------------------------------------------------------------------------
# Co-evolution protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyncRecord:
    t: float
    tau: float
    sup_error: float
    low_mode_error_max: float
    high_mode_mass: float
    cascade_metric: float
    kg_energy: float
    nls_l2: float
    nls_hm: float


def co_evolve(
    kg_state0: LatticeState,
    grid: LatticeGrid,
    kg_params: KGParams,
    regime: RegimeParams,
    tau_syncs: list[float],
    H_nls: int,
    dt_target: float | None = None,
    dtau_target: float | None = None,
    T0: float = 1.0,
) -> list[SyncRecord]:
    """Step the KG lattice in t and the bridged NLS in tau = mu^(2 l alpha) t / 2,
    comparing at sync points chosen on the coarse tau grid (mapped back
    exactly, never interpolating the fast phase).
    """
    from .lattice import default_dt, hamiltonian_energy
    from .nls import default_dtau, l2_norm, sobolev_norm

    if sorted(tau_syncs) != list(tau_syncs) or any(x <= 0 for x in tau_syncs):
        raise ParameterError("tau_syncs must be positive and increasing")

    nls_params = bridge_nls_params(regime, kg_params.beta)
    nls0 = nls_state_from_lattice(kg_state0, regime, grid, H_nls)
    dt_target = default_dt(grid) if dt_target is None else dt_target
    dtau_target = (
        default_dtau(nls0, nls_params) if dtau_target is None else dtau_target
    )

    records = []
    kg = kg_state0
    nls_state = nls0
    cutoff = regime.mode_cutoff
    t_prev = 0.0
    for tau_i in tau_syncs:
        t_i = regime.t_of_tau(tau_i)
        n_kg = max(1, math.ceil((t_i - t_prev) / dt_target))
        kg_int = KGIntegrator(grid, kg_params, (t_i - t_prev) / n_kg)
        kg = kg_int.run(kg, n_kg)

        dtau_i = tau_i - regime.tau_of_t(t_prev)
        n_nls = max(1, math.ceil(dtau_i / dtau_target))
        nls_int = SplitStepIntegrator(nls_params, H_nls, grid.d, dtau_i / n_nls)
        nls_state = nls_int.run(nls_state, n_nls)
        t_prev = t_i

        approx = build_approximate_lattice_solution(nls_state, regime, grid, t_i, T0)
        spec = dft_modes(kg, grid)
        sspec = specific_spectrum(spec, grid)
        low_err = 0.0
        for K in _cell_modes_within(grid, cutoff):
            meas = lattice_specific_energy_per_k(spec, K, regime, grid)
            ref = nls_mode_energy_reference(nls_state, K)
            low_err = max(low_err, abs(meas - ref))
        absK = np.sqrt(np.sum(sspec.k_indices.astype(float) ** 2, axis=1))
        high_mass = float(np.sum(sspec.E[absK > cutoff]))
        records.append(
            SyncRecord(
                t=t_i,
                tau=tau_i,
                sup_error=approximation_error(kg, approx),
                low_mode_error_max=low_err,
                high_mode_mass=high_mass,
                cascade_metric=cascade_metric(sspec, regime.m, cutoff),
                kg_energy=hamiltonian_energy(kg, kg_params, grid),
                nls_l2=l2_norm(nls_state),
                nls_hm=sobolev_norm(nls_state, regime.m),
            )
        )
    return records


def _cell_modes_within(grid: LatticeGrid, cutoff: float) -> list[tuple[int, ...]]:
    rng = range(-grid.N, grid.N + 1)
    out = []
    if grid.d == 1:
        for k in rng:
            if abs(k) <= cutoff:
                out.append((k,))
        return out
    import itertools

    for k in itertools.product(rng, repeat=grid.d):
        if math.sqrt(sum(c * c for c in k)) <= cutoff:
            out.append(k)
    return out
