"""Normal-mode data and spectral diagnostics for lattice states.

Conventions:

* The discrete Fourier transform is the unitary tensor-product DFT with
  1/sqrt(2N+1) normalization per axis and phase exp(2*pi*i*j*k/(2N+1)) on
  each axis.  Mode arrays are indexed by the shifted wave vector k + N,
  k in -N..N per axis.
* Specific spectra live on the non-negative orthant Z^d_{N,+}; the energy of
  an entry aggregates its +/- sign orbit, and kappa(k) = k/(N+1/2).
* Critical reductions use exact compensated summation (math.fsum) so that
  1e-12-level identities remain honest at ~1e5 sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import InvalidModeError, ParameterError, StructuralError, UnsupportedNormError
from .lattice import LatticeGrid, LatticeState, omega_fft_order


@dataclass(frozen=True)
class ModeSpectrum:
    """Complex mode coefficients with frequencies and per-mode energies."""

    Qhat: np.ndarray
    Phat: np.ndarray
    omega: np.ndarray
    E: np.ndarray
    t: float


@dataclass(frozen=True)
class SpecificSpectrum:
    """Specific energies E_kappa on Z^d_{N,+}, orbit-aggregated.

    k_indices has shape (M, d); kappa = k/(N+1/2) row-wise; E has shape (M,).
    """

    k_indices: np.ndarray
    kappa: np.ndarray
    E: np.ndarray
    N: int
    d: int

    @property
    def mu(self) -> float:
        return 2.0 / (2 * self.N + 1)

    def energy_at(self, k: tuple[int, ...] | int) -> float:
        k = (k,) if isinstance(k, int) else tuple(k)
        hit = np.all(self.k_indices == np.asarray(k), axis=1)
        idx = np.nonzero(hit)[0]
        if idx.size == 0:
            raise InvalidModeError(f"{k} is not an index in Z^{self.d}_{{{self.N},+}}")
        return float(self.E[idx[0]])


def omega_shifted(grid: LatticeGrid) -> np.ndarray:
    """omega_k on the shifted index grid (k = -N..N per axis)."""
    return np.fft.fftshift(omega_fft_order(grid))


def mode_frequency(k: tuple[int, ...] | int, grid: LatticeGrid) -> float:
    """Dispersion relation omega_k = sqrt(1 + 4 sum_i sin^2(k_i pi/(2N+1)))."""
    k = (k,) if isinstance(k, int) else tuple(k)
    if len(k) != grid.d:
        raise InvalidModeError(f"k {k} has wrong dimension for d={grid.d}")
    if any(abs(c) > grid.N for c in k):
        raise InvalidModeError(f"k {k} outside |k_i| <= N = {grid.N}")
    return math.sqrt(
        1.0 + 4.0 * sum(math.sin(math.pi * c / grid.n) ** 2 for c in k)
    )


def _to_fft_order(arr: np.ndarray) -> np.ndarray:
    return np.fft.ifftshift(arr)


def _to_shifted_order(arr: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(arr)


def dft_modes(state: LatticeState, grid: LatticeGrid) -> ModeSpectrum:
    """Unitary DFT of (Q, P) plus frequencies and mode energies E_k."""
    state.check_grid(grid)
    axes = tuple(range(grid.d))
    qh = _to_shifted_order(
        np.fft.fftn(_to_fft_order(state.Q), axes=axes, norm="ortho")
    )
    ph = _to_shifted_order(
        np.fft.fftn(_to_fft_order(state.P), axes=axes, norm="ortho")
    )
    omega = omega_shifted(grid)
    E = 0.5 * (np.abs(ph) ** 2 + omega**2 * np.abs(qh) ** 2)
    return ModeSpectrum(qh, ph, omega, E, state.t)


def inverse_dft(spec: ModeSpectrum, grid: LatticeGrid) -> LatticeState:
    """Invert dft_modes.  Imaginary residue beyond rounding raises."""
    if spec.Qhat.shape != grid.shape:
        raise StructuralError(
            f"spectrum shape {spec.Qhat.shape} does not match grid {grid.shape}"
        )
    axes = tuple(range(grid.d))
    Q = _to_shifted_order(
        np.fft.ifftn(_to_fft_order(spec.Qhat), axes=axes, norm="ortho")
    )
    P = _to_shifted_order(
        np.fft.ifftn(_to_fft_order(spec.Phat), axes=axes, norm="ortho")
    )
    scale = max(np.max(np.abs(Q)), np.max(np.abs(P)), 1e-300)
    resid = max(np.max(np.abs(Q.imag)), np.max(np.abs(P.imag)))
    if resid > 1e-10 * scale:
        raise StructuralError(
            f"spectrum is not conjugate-symmetric: imaginary residue {resid:.3e}"
        )
    return LatticeState(np.ascontiguousarray(Q.real), np.ascontiguousarray(P.real), spec.t)


def quadratic_energy(spec: ModeSpectrum) -> float:
    """sum_k E_k; equals the beta-independent part of the lattice Hamiltonian."""
    return math.fsum(spec.E.ravel())


def specific_spectrum(spec: ModeSpectrum, grid: LatticeGrid) -> SpecificSpectrum:
    """Fold E_k onto Z^d_{N,+}: kappa(k) = k/(N+1/2), E_kappa = sum over the
    +/- orbit of E_k / (N+1/2)^d."""
    if spec.E.shape != grid.shape:
        raise StructuralError(
            f"spectrum shape {spec.E.shape} does not match grid {grid.shape}"
        )
    half = grid.N + 0.5
    norm = half**grid.d
    ks = []
    energies = []
    for k_plus in product(range(grid.N + 1), repeat=grid.d):
        total = 0.0
        signsets = [(-c, c) if c != 0 else (0,) for c in k_plus]
        for signed in product(*signsets):
            idx = tuple(c + grid.N for c in signed)
            total += float(spec.E[idx])
        ks.append(k_plus)
        energies.append(total / norm)
    k_arr = np.array(ks, dtype=int)
    return SpecificSpectrum(
        k_indices=k_arr,
        kappa=k_arr / half,
        E=np.array(energies),
        N=grid.N,
        d=grid.d,
    )


def cascade_metric(
    spec: SpecificSpectrum, m: float, cutoff: float, grid: LatticeGrid | None = None
) -> float:
    """Weighted spectral sum over kappa(k) = mu*K with |K| <= cutoff of |K|^(2m) E_kappa.

    Aggregated entries carry their whole sign orbit, and |K| is constant on an
    orbit, so this equals the sum over all of Z^d_N.  With cutoff =
    mu^-(1-delta) this is the cascade observable of the energy-transfer
    statement.
    """
    if m < 0:
        raise ParameterError(f"m must be >= 0, got {m}")
    if cutoff <= 0:
        raise ParameterError(f"cutoff must be > 0, got {cutoff}")
    if grid is not None and (grid.N != spec.N or grid.d != spec.d):
        raise StructuralError("specific spectrum does not match grid")
    absK = np.sqrt(np.sum(spec.k_indices.astype(float) ** 2, axis=1))
    mask = absK <= cutoff
    # 0^0 = 1 so m = 0 degrades to the plain energy sum.
    weights = absK ** (2.0 * m)
    return math.fsum((weights[mask] * spec.E[mask]).tolist())


# ---------------------------------------------------------------------------
# Weighted sequence spaces l^p_s and the Galerkin projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedSeq:
    """Sparse complex sequence over Z^d with weight exponent s and flavor p."""

    s: float
    p: int
    values: dict[tuple[int, ...], complex]


def seq_weight(n: tuple[int, ...]) -> float:
    """|n| := max(1, Euclidean norm)."""
    return max(1.0, math.sqrt(sum(float(c) ** 2 for c in n)))


def weighted_norm(seq: WeightedSeq) -> float:
    """( sum |n|^(p*s) |v_n|^p )^(1/p) for p in {1, 2}."""
    if seq.p not in (1, 2):
        raise UnsupportedNormError(f"p must be 1 or 2, got {seq.p}")
    terms = [
        seq_weight(n) ** (seq.p * seq.s) * abs(v) ** seq.p
        for n, v in seq.values.items()
    ]
    total = math.fsum(terms)
    return total if seq.p == 1 else math.sqrt(total)


def project_low(seq: WeightedSeq, M: float) -> WeightedSeq:
    """Galerkin projection Pi_M: zero entries with |n| > M (closed condition)."""
    if M < 0:
        raise ParameterError(f"M must be >= 0, got {M}")
    kept = {n: v for n, v in seq.values.items() if seq_weight(n) <= M}
    return WeightedSeq(seq.s, seq.p, kept)


def project_high(seq: WeightedSeq, M: float) -> WeightedSeq:
    """Complement (id - Pi_M)."""
    if M < 0:
        raise ParameterError(f"M must be >= 0, got {M}")
    kept = {n: v for n, v in seq.values.items() if seq_weight(n) > M}
    return WeightedSeq(seq.s, seq.p, kept)


def reweight(seq: WeightedSeq, s: float, p: int | None = None) -> WeightedSeq:
    return WeightedSeq(s, seq.p if p is None else p, dict(seq.values))
