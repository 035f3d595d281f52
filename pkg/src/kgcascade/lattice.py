"""Periodic d-dimensional Klein-Gordon lattice and its symplectic integrator.

The lattice lives on Z_N^d = {j : |j_i| <= N}, with (2N+1)^d sites and
Hamiltonian

    H(Q, P) = sum_j P_j^2/2 + (1/2) sum_j Q_j (-Delta_1 Q)_j + sum_j U(Q_j),
    U(x)    = x^2/2 + beta * x^(2l+2) / (2l+2),

where Delta_1 is the nearest-neighbour Laplacian with periodic wrap-around.
Fields are stored as real ndarrays of shape (2N+1,)*d indexed by the shifted
coordinate a = j + N (row-major).

Time stepping is a Strang splitting: the linear part (-Q + Delta_1 Q) is
solved exactly per mode in Fourier space, and the nonlinear force
-beta*Q^(2l+1) is applied as a half-kick on each side.  For beta = 0 the
integrator is exact up to rounding.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BlowupError,
    CFLWarning,
    InvalidModeError,
    ParameterError,
    StructuralError,
)


@dataclass(frozen=True)
class LatticeGrid:
    """Periodic grid Z_N^d with side 2N+1 per axis."""

    N: int
    d: int

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError(f"N must be >= 1, got {self.N}")
        if self.d not in (1, 2, 3):
            raise ParameterError(f"d must be in {{1,2,3}}, got {self.d}")

    @property
    def n(self) -> int:
        """Sites per axis, 2N+1 (always odd)."""
        return 2 * self.N + 1

    @property
    def n_sites(self) -> int:
        return self.n**self.d

    @property
    def mu(self) -> float:
        """Small parameter mu = 2/(2N+1)."""
        return 2.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d


@dataclass(frozen=True)
class KGParams:
    """Nonlinearity strength beta and half-degree ell (potential degree 2*ell+2)."""

    beta: float
    ell: int

    def __post_init__(self):
        if self.beta < 0:
            raise ParameterError(f"beta must be >= 0, got {self.beta}")
        if self.ell < 1:
            raise ParameterError(f"ell must be >= 1, got {self.ell}")


@dataclass(frozen=True)
class LatticeState:
    """Site displacements Q, momenta P and current time t.  Immutable."""

    Q: np.ndarray
    P: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.Q.shape != self.P.shape:
            raise StructuralError(
                f"Q shape {self.Q.shape} != P shape {self.P.shape}"
            )

    def check_grid(self, grid: LatticeGrid) -> None:
        if self.Q.shape != grid.shape:
            raise StructuralError(
                f"state shape {self.Q.shape} does not match grid {grid.shape}"
            )


def zero_state(grid: LatticeGrid) -> LatticeState:
    return LatticeState(np.zeros(grid.shape), np.zeros(grid.shape), 0.0)


def discrete_laplacian(field: np.ndarray, grid: LatticeGrid) -> np.ndarray:
    """Nearest-neighbour Laplacian (Delta_1 f)_j = sum_k f_{j+e_k} - 2 f_j + f_{j-e_k}."""
    if field.shape != grid.shape:
        raise StructuralError(
            f"field shape {field.shape} does not match grid {grid.shape}"
        )
    out = -2.0 * grid.d * field
    for axis in range(grid.d):
        out += np.roll(field, 1, axis=axis)
        out += np.roll(field, -1, axis=axis)
    return out


def potential_energy_density(x: np.ndarray, params: KGParams) -> np.ndarray:
    """On-site potential U(x) = x^2/2 + beta x^(2l+2)/(2l+2)."""
    deg = 2 * params.ell + 2
    return 0.5 * x**2 + params.beta * x**deg / deg


def hamiltonian_energy(
    state: LatticeState, params: KGParams, grid: LatticeGrid
) -> float:
    """Total lattice energy; sums are compensated so 1e-12-level checks stay honest."""
    state.check_grid(grid)
    kin = math.fsum((0.5 * state.P**2).ravel())
    coupling = math.fsum(
        (0.5 * state.Q * (-discrete_laplacian(state.Q, grid))).ravel()
    )
    onsite = math.fsum(potential_energy_density(state.Q, params).ravel())
    return kin + coupling + onsite


def omega_fft_order(grid: LatticeGrid) -> np.ndarray:
    """Frequencies omega_k = sqrt(1 + 4 sum_i sin^2(k_i pi/(2N+1))), fft index order.

    sin^2 is (2N+1)-periodic and even in k, so the array is valid both for
    k in 0..2N (fft order) and after fftshift for k in -N..N.
    """
    n = grid.n
    axis = 4.0 * np.sin(np.pi * np.arange(n) / n) ** 2
    sq = np.ones(grid.shape)
    for ax in range(grid.d):
        shape = [1] * grid.d
        shape[ax] = n
        sq = sq + axis.reshape(shape)
    return np.sqrt(sq)


def omega_max(grid: LatticeGrid) -> float:
    return float(np.sqrt(1.0 + 4.0 * grid.d * np.sin(np.pi * grid.N / grid.n) ** 2))


def default_dt(grid: LatticeGrid) -> float:
    """Default step 0.1 / max_k omega_k."""
    return 0.1 / omega_max(grid)


class KGIntegrator:
    """Strang splitting with the linear flow solved exactly in Fourier space.

    Owns its phase tables and FFT work; distinct instances share no mutable
    state, so independent runs can execute in parallel.
    """

    def __init__(
        self, grid: LatticeGrid, params: KGParams, dt: float | None = None
    ):
        self.grid = grid
        self.params = params
        self.dt = default_dt(grid) if dt is None else float(dt)
        if self.dt == 0.0:
            raise ParameterError("dt must be nonzero")
        wmax = omega_max(grid)
        if abs(self.dt) * wmax > 0.5:
            warnings.warn(
                f"dt*omega_max = {abs(self.dt) * wmax:.3f} > 0.5; "
                "linear phases rotate fast relative to the step",
                CFLWarning,
                stacklevel=2,
            )
        omega = omega_fft_order(grid)
        self._cos = np.cos(omega * self.dt)
        self._sin_over_w = np.sin(omega * self.dt) / omega
        self._neg_w_sin = -omega * np.sin(omega * self.dt)
        self.steps_taken = 0

    def _kick(self, Q: np.ndarray, P: np.ndarray, half_dt: float) -> np.ndarray:
        if self.params.beta == 0.0:
            return P
        return P - half_dt * self.params.beta * Q ** (2 * self.params.ell + 1)

    def step(self, state: LatticeState) -> LatticeState:
        """Advance one step of Qdd = Delta_1 Q - Q - beta Q^(2l+1); input not mutated."""
        state.check_grid(self.grid)
        half = 0.5 * self.dt
        P = self._kick(state.Q, state.P, half)

        axes = tuple(range(self.grid.d))
        qh = np.fft.rfftn(state.Q, axes=axes)
        ph = np.fft.rfftn(P, axes=axes)
        # rfftn keeps the non-negative half of the last axis; phase tables are
        # even in k so slicing the precomputed full tables is safe.
        sl = tuple([slice(None)] * (self.grid.d - 1) + [slice(0, qh.shape[-1])])
        cos, sow, nws = self._cos[sl], self._sin_over_w[sl], self._neg_w_sin[sl]
        qh, ph = cos * qh + sow * ph, nws * qh + cos * ph
        Q = np.fft.irfftn(qh, s=self.grid.shape, axes=axes)
        P = np.fft.irfftn(ph, s=self.grid.shape, axes=axes)

        P = self._kick(Q, P, half)
        self.steps_taken += 1
        if not (np.isfinite(Q[(0,) * self.grid.d]) and np.isfinite(P[(0,) * self.grid.d])):
            if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(P))):
                raise BlowupError(
                    f"non-finite lattice state after step {self.steps_taken}",
                    step=self.steps_taken,
                )
        return LatticeState(Q, P, state.t + self.dt)

    def run(self, state: LatticeState, n_steps: int) -> LatticeState:
        for _ in range(n_steps):
            state = self.step(state)
        return state


def step(
    state: LatticeState, dt: float, params: KGParams, grid: LatticeGrid
) -> LatticeState:
    """One-off Strang step.  For long runs reuse a KGIntegrator."""
    return KGIntegrator(grid, params, dt).step(state)


def make_single_mode_datum(
    k0: tuple[int, ...] | int,
    C0: float,
    alpha: float,
    grid: LatticeGrid,
    params: KGParams,
) -> LatticeState:
    """Real odd-symmetric state with all specific energy on the orbit of k0.

    Q_j = A * prod_i sin(2 pi k0_i j_i / (2N+1)), P = 0, with A chosen so the
    specific energy aggregated over the 2^d sine-symmetric partner modes is
    E_kappa(k0) = C0 * mu^(2*alpha), and zero on every other orbit.
    """
    k0 = (k0,) if isinstance(k0, int) else tuple(k0)
    if len(k0) != grid.d:
        raise InvalidModeError(f"k0 {k0} has wrong dimension for d={grid.d}")
    if all(c == 0 for c in k0):
        raise InvalidModeError("k0 = 0 cannot carry an oscillating mode")
    if any(c == 0 for c in k0):
        raise InvalidModeError(
            f"k0 {k0}: odd symmetry forces modes with a zero component to vanish"
        )
    if any(abs(c) > grid.N for c in k0):
        raise InvalidModeError(f"k0 {k0} outside |k_i| <= N = {grid.N}")
    if C0 < 0:
        raise ParameterError(f"C0 must be >= 0, got {C0}")
    if not 0.0 < alpha <= 1.0 / params.ell:
        raise ParameterError(
            f"alpha must satisfy 0 < alpha <= 1/ell = {1.0 / params.ell}, got {alpha}"
        )

    w2 = 1.0 + 4.0 * sum(math.sin(math.pi * c / grid.n) ** 2 for c in k0)
    amplitude = math.sqrt(2.0 * C0) * grid.mu**alpha / math.sqrt(w2)
    if not math.isfinite(amplitude):
        raise ParameterError("single-mode amplitude is not finite")

    j = np.arange(grid.n) - grid.N
    Q = np.full(grid.shape, amplitude)
    for ax, c in enumerate(k0):
        shape = [1] * grid.d
        shape[ax] = grid.n
        Q = Q * np.sin(2.0 * np.pi * c * j / grid.n).reshape(shape)
    return LatticeState(Q, np.zeros(grid.shape), 0.0)


def odd_symmetry_defect(state: LatticeState) -> float:
    """Max deviation from Q_{..,-j_i,..} = -Q_{..,j_i,..} over both fields and all axes."""
    worst = 0.0
    for arr in (state.Q, state.P):
        for ax in range(arr.ndim):
            worst = max(worst, float(np.max(np.abs(arr + np.flip(arr, axis=ax)))))
    return worst
