"""Pseudo-spectral solver for the defocusing small-dispersion NLS

    -i phi_tau = -eps * Lap phi + beta_eff * |phi|^(2l) phi

on a periodic box, with Sobolev-norm tracking and the growth-detection
machinery (norm doubling, entry into the supercritical set A).

States hold the complex coefficients xi_h of phi in an orthonormal Fourier
basis, indexed by h + H on a truncated box |h_i| <= H, so sum |xi_h|^2 is
the squared L2 norm.  On the default torus (period 2*pi per axis) the
Laplacian symbol is -|h|^2; `wavenumber_scale` stretches it to -(w|h|)^2 so
the lattice bridge can use the period-2 torus (w = pi) without rescaling
fields.

Both split-step substeps are exact phase rotations, so the L2 norm is
conserved to rounding; the dispersive part is diagonal in Fourier space and
the nonlinear part is pointwise in physical space (|phi| is invariant under
it).  The nonlinear substep is evaluated on a zero-padded grid: 2/3-rule
padding for l = 1, box fraction (l+1)/(2l+1) of the extended grid in
general.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BlowupError,
    DealiasingError,
    DomainError,
    InvalidExponentError,
    ParameterError,
    StructuralError,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NLSParams:
    """Equation data: dispersion eps, nonlinearity half-degree ell, coefficient
    beta_eff (> 0: defocusing only).

    wavenumber_scale w and cell volume V fix the geometry: basis functions are
    V^(-1/2) exp(i w h.y) and the dispersive symbol is eps*(w|h|)^2.  Defaults
    are the 2*pi-torus (w = 1, V = (2*pi)^d).
    """

    eps: float
    ell: int
    beta_eff: float = 1.0
    wavenumber_scale: float = 1.0
    volume: float | None = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")
        if self.ell < 1:
            raise ParameterError(f"ell must be >= 1, got {self.ell}")
        if self.beta_eff <= 0:
            raise ParameterError(
                f"beta_eff must be > 0 (defocusing), got {self.beta_eff}"
            )

    def cell_volume(self, d: int) -> float:
        return TWO_PI**d if self.volume is None else self.volume


@dataclass(frozen=True)
class NLSState:
    """Truncated Fourier coefficients xi_h (shifted order, h = -H..H) at rescaled time tau.

    On the real-field invariant set the conjugate coefficients are
    eta_h = conj(xi_h); the solver works on that set throughout.
    """

    xi: np.ndarray
    tau: float = 0.0

    @property
    def d(self) -> int:
        return self.xi.ndim

    @property
    def H(self) -> int:
        return (self.xi.shape[0] - 1) // 2

    @property
    def eta(self) -> np.ndarray:
        return np.conj(self.xi)


def zero_nls_state(H: int, d: int) -> NLSState:
    return NLSState(np.zeros((2 * H + 1,) * d, dtype=complex), 0.0)


def make_single_mode_odd_state(
    h0: tuple[int, ...] | int, H: int, d: int, l2: float = 1.0
) -> NLSState:
    """Odd datum xi_{h0} = -xi_{-h0}, supported on one low mode, with given L2 norm."""
    h0 = (h0,) if isinstance(h0, int) else tuple(h0)
    if len(h0) != d:
        raise ParameterError(f"h0 {h0} has wrong dimension for d={d}")
    if all(c == 0 for c in h0) or any(abs(c) > H for c in h0):
        raise ParameterError(f"h0 {h0} not a nonzero mode inside |h_i| <= {H}")
    xi = np.zeros((2 * H + 1,) * d, dtype=complex)
    amp = -1j * l2 / math.sqrt(2.0)
    xi[tuple(c + H for c in h0)] = amp
    xi[tuple(-c + H for c in h0)] = -amp
    return NLSState(xi, 0.0)


def _mode_norms_sq(shape: tuple[int, ...]) -> np.ndarray:
    H = (shape[0] - 1) // 2
    axis = (np.arange(shape[0]) - H).astype(float) ** 2
    total = np.zeros(shape)
    for ax in range(len(shape)):
        s = [1] * len(shape)
        s[ax] = shape[0]
        total = total + axis.reshape(s)
    return total


_WEIGHT_CACHE: dict[tuple[tuple[int, ...], float], np.ndarray] = {}


def _sobolev_weights(shape: tuple[int, ...], m: float) -> np.ndarray:
    key = (shape, float(m))
    w = _WEIGHT_CACHE.get(key)
    if w is None:
        w = np.maximum(1.0, _mode_norms_sq(shape)) ** m
        _WEIGHT_CACHE[key] = w
    return w


def l2_norm(state: NLSState) -> float:
    return math.sqrt(math.fsum((np.abs(state.xi.ravel()) ** 2).tolist()))


def sobolev_norm(state: NLSState, m: float) -> float:
    """H^m norm ( sum_h max(1,|h|)^(2m) |xi_h|^2 )^(1/2)."""
    if m < 0:
        raise ParameterError(f"m must be >= 0, got {m}")
    w = _sobolev_weights(state.xi.shape, m)
    return math.sqrt(math.fsum((w * np.abs(state.xi) ** 2).ravel().tolist()))


def top_third_mass_fraction(state: NLSState, m: float = 0.0) -> float:
    """Fraction of the l^2_m mass carried by modes with |h|_inf in the top third."""
    H = state.H
    if H == 0:
        return 0.0
    w = _sobolev_weights(state.xi.shape, m)
    mass = w * np.abs(state.xi) ** 2
    hinf = np.zeros(state.xi.shape)
    axis = np.abs(np.arange(state.xi.shape[0]) - H).astype(float)
    for ax in range(state.d):
        s = [1] * state.d
        s[ax] = state.xi.shape[0]
        hinf = np.maximum(hinf, axis.reshape(s))
    total = float(np.sum(mass))
    if total == 0.0:
        return 0.0
    top = float(np.sum(mass[hinf > (2.0 / 3.0) * H]))
    return top / total


def padded_grid_size(H: int, ell: int) -> int:
    """Smallest odd grid with box fraction (ell+1)/(2*ell+1); 2/3 rule at ell=1."""
    n_box = 2 * H + 1
    n = math.ceil(n_box * (2 * ell + 1) / (ell + 1))
    return n if n % 2 == 1 else n + 1


class SplitStepIntegrator:
    """Strang splitting D(dtau/2) N(dtau) D(dtau/2); owns phase tables and pads.

    Instances hold no state besides caches, so independent parameter sweeps
    can run integrators in parallel.
    """

    def __init__(
        self,
        params: NLSParams,
        H: int,
        d: int,
        dtau: float,
        guard_tol: float | None = None,
        guard_m: float = 0.0,
        guard_stride: int = 64,
    ):
        if H < 1:
            raise ParameterError(f"H must be >= 1, got {H}")
        if dtau == 0.0:
            raise ParameterError("dtau must be nonzero")
        self.params = params
        self.H = H
        self.d = d
        self.dtau = float(dtau)
        self.guard_tol = guard_tol
        self.guard_m = guard_m
        self.guard_stride = max(1, guard_stride)
        self.n_ext = padded_grid_size(H, params.ell)
        self.steps_taken = 0

        w2 = params.wavenumber_scale**2 * _mode_norms_sq((2 * H + 1,) * d)
        self._half_disp = np.exp(0.5j * params.eps * w2 * self.dtau)
        self._vol = params.cell_volume(d)
        # index map: shifted box mode h -> fft-order slot on the extended grid
        idx = np.arange(-H, H + 1) % self.n_ext
        self._slots = np.ix_(*([idx] * d))

    def _nonlinear_rotation(self, xi_box: np.ndarray) -> np.ndarray:
        n, d = self.n_ext, self.d
        big = np.zeros((n,) * d, dtype=complex)
        big[self._slots] = xi_box
        field = np.fft.ifftn(big) * (n**d / math.sqrt(self._vol))
        amp = np.abs(field) ** (2 * self.params.ell)
        field *= np.exp(1j * self.params.beta_eff * self.dtau * amp)
        big = np.fft.fftn(field) * (math.sqrt(self._vol) / n**d)
        return big[self._slots]

    def step(self, state: NLSState) -> NLSState:
        if state.xi.shape != (2 * self.H + 1,) * self.d:
            raise StructuralError(
                f"state box {state.xi.shape} does not match integrator "
                f"box {(2 * self.H + 1,) * self.d}"
            )
        xi = self._half_disp * state.xi
        xi = self._nonlinear_rotation(xi)
        xi = self._half_disp * xi
        self.steps_taken += 1
        if not np.isfinite(xi.ravel()[0]):
            if not np.all(np.isfinite(xi)):
                raise BlowupError(
                    f"non-finite NLS state after step {self.steps_taken}",
                    step=self.steps_taken,
                )
        out = NLSState(xi, state.tau + self.dtau)
        if self.guard_tol is not None and self.steps_taken % self.guard_stride == 0:
            frac = top_third_mass_fraction(out, self.guard_m)
            if frac > self.guard_tol:
                raise DealiasingError(
                    f"top third of the spectrum holds {frac:.3e} of the "
                    f"l2_{self.guard_m} mass (> {self.guard_tol:.1e}) at step "
                    f"{self.steps_taken}; enlarge the box"
                )
        return out

    def run(self, state: NLSState, n_steps: int) -> NLSState:
        for _ in range(n_steps):
            state = self.step(state)
        return state


def split_step(state: NLSState, dtau: float, params: NLSParams) -> NLSState:
    """One-off Strang step.  For long runs reuse a SplitStepIntegrator."""
    return SplitStepIntegrator(params, state.H, state.d, dtau).step(state)


def default_dtau(state: NLSState, params: NLSParams) -> float:
    """0.05 / (fastest phase rate) over dispersive and nonlinear substeps."""
    w2max = params.wavenumber_scale**2 * state.d * state.H**2
    n = padded_grid_size(state.H, params.ell)
    big = np.zeros((n,) * state.d, dtype=complex)
    idx = np.arange(-state.H, state.H + 1) % n
    big[np.ix_(*([idx] * state.d))] = state.xi
    field = np.fft.ifftn(big) * (n**state.d / math.sqrt(params.cell_volume(state.d)))
    nl = params.beta_eff * float(np.max(np.abs(field))) ** (2 * params.ell)
    rate = max(params.eps * w2max, nl, 1e-12)
    return 0.05 / rate


def nls_hamiltonian(state: NLSState, params: NLSParams) -> float:
    """Conserved energy int (eps/2)|grad phi|^2 + beta_eff |phi|^(2l+2)/(2l+2).

    The potential term is quadrature on a grid fine enough that the rule is
    exact for the band-limited integrand.
    """
    w2 = params.wavenumber_scale**2 * _mode_norms_sq(state.xi.shape)
    grad = 0.5 * params.eps * math.fsum((w2 * np.abs(state.xi) ** 2).ravel().tolist())

    deg = 2 * params.ell + 2
    n = deg * state.H + 1
    if n % 2 == 0:
        n += 1
    vol = params.cell_volume(state.d)
    big = np.zeros((n,) * state.d, dtype=complex)
    idx = np.arange(-state.H, state.H + 1) % n
    big[np.ix_(*([idx] * state.d))] = state.xi
    field = np.fft.ifftn(big) * (n**state.d / math.sqrt(vol))
    pot = (
        params.beta_eff
        / deg
        * (vol / n**state.d)
        * math.fsum((np.abs(field) ** deg).ravel().tolist())
    )
    return grad + pot


# ---------------------------------------------------------------------------
# Growth detection (supercritical set A, norm doubling)
# ---------------------------------------------------------------------------


def _growth_exponents(m: float, ell: int, lam: float) -> float:
    if m <= 0:
        raise ParameterError(f"m must be > 0, got {m}")
    nu = 2 * ell + 1.0 / m
    denom = 1.0 - 2 * ell * lam
    if lam <= 0 or denom <= 0:
        raise InvalidExponentError(
            f"need 0 < lambda and 1 - 2*ell*lambda > 0; got lambda={lam}, ell={ell}"
        )
    if lam >= 1.0 / nu:
        raise InvalidExponentError(
            f"lambda={lam} must be < 1/nu = {1.0 / nu} (nu = 2*ell + 1/m)"
        )
    return nu


def kuksin_threshold(
    l2: float, ell: int, lam: float, K: float, eps: float
) -> float:
    """H^m threshold of the set A: K^(-1/(1-2l*lam)) eps^(-lam/(1-2l*lam)) l2^(1/(1-2l*lam))."""
    denom = 1.0 - 2 * ell * lam
    if lam <= 0 or denom <= 0:
        raise InvalidExponentError(
            f"need 0 < lambda and 1 - 2*ell*lambda > 0; got lambda={lam}, ell={ell}"
        )
    if K <= 0:
        raise ParameterError(f"K must be > 0, got {K}")
    return K ** (-1.0 / denom) * eps ** (-lam / denom) * l2 ** (1.0 / denom)


def kuksin_membership(
    state: NLSState, m: float, ell: int, lam: float, K: float, eps: float
) -> bool:
    """True iff the state lies in A(m, ell, lambda), i.e. ||phi||_{H^m} exceeds
    the eps-dependent threshold."""
    _growth_exponents(m, ell, lam)
    thr = kuksin_threshold(l2_norm(state), ell, lam, K, eps)
    return sobolev_norm(state, m) > thr


def growth_time_bound(
    r0: float, m: float, ell: int, lam: float, K: float, eps: float
) -> float:
    """Un-simplified bound on the first entry time into A:
    (1 - 2^(-2l(1-nu*lam)))^(-1) K^(-nu) eps^(-nu*lam) r0^(-2l(1-nu*lam))."""
    nu = _growth_exponents(m, ell, lam)
    a = 2 * ell * (1.0 - nu * lam)
    return (1.0 / (1.0 - 2.0 ** (-a))) * K ** (-nu) * eps ** (-nu * lam) * r0 ** (-a)


def small_dispersion_ceiling(
    state: NLSState, m: float, ell: int, lam: float, K: float
) -> float:
    """eps_0 such that the state lies outside A iff eps <= eps_0."""
    _growth_exponents(m, ell, lam)
    r = sobolev_norm(state, m)
    if r == 0.0:
        return math.inf
    return (l2_norm(state) / (K * r ** (1.0 - 2 * ell * lam))) ** (1.0 / lam)


@dataclass(frozen=True)
class GrowthCertificate:
    """Record of the first entry into A, re-verifiable from the snapshot."""

    m: float
    lam: float
    K: float
    r0: float
    l2: float
    t_hit: float
    bound_T: float
    state_at_hit: NLSState
    t_double: float | None

    @property
    def within_bound(self) -> bool:
        return self.t_hit <= self.bound_T


@dataclass(frozen=True)
class GrowthTimeout:
    """Horizon reached before entering A; carries the maximum norm attained."""

    m: float
    horizon: float
    max_norm: float
    t_double: float | None
    final_state: NLSState


def detect_growth(
    state0: NLSState,
    params: NLSParams,
    m: float,
    lam: float,
    K: float,
    horizon: float,
    dtau: float | None = None,
) -> GrowthCertificate | GrowthTimeout:
    """Integrate until the trajectory enters A (or the horizon runs out).

    The norm-doubling time t_double (first tau with ||phi||_{H^m} = 2 r0,
    located by linear interpolation between steps) is reported alongside.
    """
    if not math.isfinite(horizon) or horizon <= 0:
        raise ParameterError(f"horizon must be finite and > 0, got {horizon}")
    _growth_exponents(m, params.ell, lam)
    if kuksin_membership(state0, m, params.ell, lam, K, params.eps):
        raise ParameterError(
            "initial state already lies in A: eps exceeds the small-dispersion "
            f"ceiling {small_dispersion_ceiling(state0, m, params.ell, lam, K):.3e}"
        )
    r0 = sobolev_norm(state0, m)
    l20 = l2_norm(state0)
    bound_T = growth_time_bound(r0, m, params.ell, lam, K, params.eps)
    dtau = default_dtau(state0, params) if dtau is None else dtau
    integ = SplitStepIntegrator(params, state0.H, state0.d, dtau)

    state = state0
    prev_norm = r0
    max_norm = r0
    t_double: float | None = None
    n_steps = int(math.ceil(horizon / dtau))
    for _ in range(n_steps):
        state = integ.step(state)
        norm = sobolev_norm(state, m)
        max_norm = max(max_norm, norm)
        if t_double is None and norm >= 2.0 * r0:
            frac = (2.0 * r0 - prev_norm) / (norm - prev_norm)
            t_double = state.tau - dtau * (1.0 - frac)
        thr = kuksin_threshold(l2_norm(state), params.ell, lam, K, params.eps)
        if norm > thr:
            return GrowthCertificate(
                m=m,
                lam=lam,
                K=K,
                r0=r0,
                l2=l20,
                t_hit=state.tau,
                bound_T=bound_T,
                state_at_hit=state,
                t_double=t_double,
            )
        prev_norm = norm
    return GrowthTimeout(
        m=m, horizon=horizon, max_norm=max_norm, t_double=t_double, final_state=state
    )


def doubling_time(
    state0: NLSState,
    params: NLSParams,
    m: float,
    horizon: float,
    dtau: float,
) -> float | None:
    """First tau with ||phi(tau)||_{H^m} >= 2 ||phi(0)||_{H^m} (interpolated)."""
    r0 = sobolev_norm(state0, m)
    integ = SplitStepIntegrator(params, state0.H, state0.d, dtau)
    state = state0
    prev = r0
    n_steps = int(math.ceil(horizon / dtau))
    for _ in range(n_steps):
        state = integ.step(state)
        norm = sobolev_norm(state, m)
        if norm >= 2.0 * r0:
            frac = (2.0 * r0 - prev) / (norm - prev)
            return state.tau - dtau * (1.0 - frac)
        prev = norm
    return None


def lambda_star(m: float, d: int, ell: int, a: float) -> float:
    """Leading-order asymptotic growth exponent
    (1/2l)(1 - B0/(2l m)), B0 = d*l + 4 + a.  A guide, not a guarantee."""
    if m < 3:
        raise DomainError(f"lambda_star requires m >= 3, got {m}")
    B0 = d * ell + 4.0 + a
    return (1.0 / (2 * ell)) * (1.0 - B0 / (2 * ell * m))


def lambda_cap_normalized(m: float, ell: int) -> float:
    """Upper bound (1/2) m/(1+2*l*m) valid for L2-normalized data."""
    if m <= 0:
        raise DomainError(f"m must be > 0, got {m}")
    return 0.5 * m / (1.0 + 2 * ell * m)
