"""Exact sparse algebra of zero-momentum polynomial Hamiltonians.

Variables are indexed by j = (a, sigma) with a in Z^d and sigma = +/-1;
zeta_(a,+1) = xi_a and zeta_(a,-1) = eta_a.  A monomial is a canonically
sorted tuple of such variables (sigma descending, then a lexicographic), so
polynomial equality is exact dictionary equality.  Every stored monomial has
zero momentum sum_i a_i sigma_i = 0; the class is closed under Poisson
brackets.

Under the periodic flow of h0 = sum_a xi_a eta_a (xi -> e^{it} xi,
eta -> e^{-it} eta, period T = 2*pi) a monomial picks up the phase e^{i r t}
with integer winding r = #xi - #eta.  Flow averaging keeps r = 0; the
homological equation {chi, h0} + G = Z is solved per monomial by the closed
form factor i/r, never by floating quadrature.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

from .errors import ParameterError, RegimeError

Mode = tuple[int, ...]
Variable = tuple[Mode, int]  # (a, sigma)
Monomial = tuple[Variable, ...]

T_PERIOD = 2.0 * math.pi


def _as_mode(a) -> Mode:
    return (a,) if isinstance(a, int) else tuple(a)


def variable(a, sigma: int) -> Variable:
    if sigma not in (1, -1):
        raise ParameterError(f"sigma must be +1 or -1, got {sigma}")
    return (_as_mode(a), sigma)


def xi(a) -> Variable:
    return (_as_mode(a), 1)


def eta(a) -> Variable:
    return (_as_mode(a), -1)


def canonical(vars_iterable) -> Monomial:
    """Unique monomial key: xi factors first (a lexicographic), then eta."""
    return tuple(sorted(vars_iterable, key=lambda v: (-v[1], v[0])))


def momentum(idx: Monomial) -> Mode:
    """M(j) = sum_i a_i sigma_i, componentwise."""
    if not idx:
        return ()
    d = len(idx[0][0])
    out = [0] * d
    for a, s in idx:
        for i in range(d):
            out[i] += s * a[i]
    return tuple(out)


def winding(idx: Monomial) -> int:
    """Phase winding r = (#sigma=+1) - (#sigma=-1) under the h0 flow."""
    return sum(s for _, s in idx)


def conjugate_index(idx: Monomial) -> Monomial:
    return canonical((a, -s) for a, s in idx)


class ZeroMomentumPolynomial:
    """Sparse map from canonical monomials to complex coefficients.

    Monomials must have degree >= 2 and zero momentum.  Instances are treated
    as immutable values; all operations return new polynomials.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[Monomial, complex] | None = None):
        merged: dict[Monomial, complex] = {}
        for mono, c in (coeffs or {}).items():
            if c == 0:
                continue
            key = canonical(mono)
            if len(key) < 2:
                raise ParameterError(
                    f"monomial {key} has degree {len(key)} < 2"
                )
            if any(x != 0 for x in momentum(key)):
                raise ParameterError(
                    f"monomial {key} has momentum {momentum(key)} != 0"
                )
            merged[key] = merged.get(key, 0j) + complex(c)
        self.coeffs = {k: v for k, v in merged.items() if v != 0}

    # -- value semantics ---------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ZeroMomentumPolynomial)
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        raise TypeError("unhashable (mutable coefficient dict)")

    def __repr__(self):
        return f"ZeroMomentumPolynomial({len(self.coeffs)} monomials, degree {self.degree})"

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.coeffs), default=0)

    @property
    def min_degree(self) -> int:
        return min((len(m) for m in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_real_hamiltonian(self, tol: float = 0.0) -> bool:
        """Reality constraint a_conj(j) = conj(a_j)."""
        for mono, c in self.coeffs.items():
            cc = self.coeffs.get(conjugate_index(mono), 0j)
            if abs(cc - c.conjugate()) > tol:
                return False
        return True

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "ZeroMomentumPolynomial") -> "ZeroMomentumPolynomial":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0j) + c
        return ZeroMomentumPolynomial(out)

    def __sub__(self, other: "ZeroMomentumPolynomial") -> "ZeroMomentumPolynomial":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0j) - c
        return ZeroMomentumPolynomial(out)

    def __neg__(self) -> "ZeroMomentumPolynomial":
        return ZeroMomentumPolynomial({m: -c for m, c in self.coeffs.items()})

    def scale(self, factor: complex) -> "ZeroMomentumPolynomial":
        return ZeroMomentumPolynomial(
            {m: factor * c for m, c in self.coeffs.items()}
        )

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, xi_vals: dict[Mode, complex], eta_vals: dict[Mode, complex]) -> complex:
        total = 0j
        for mono, c in self.coeffs.items():
            term = c
            for a, s in mono:
                v = xi_vals.get(a, 0j) if s == 1 else eta_vals.get(a, 0j)
                if v == 0:
                    term = 0j
                    break
                term *= v
            total += term
        return total

    def gradient(
        self, xi_vals: dict[Mode, complex], eta_vals: dict[Mode, complex]
    ) -> tuple[dict[Mode, complex], dict[Mode, complex]]:
        """(dP/dxi_a, dP/deta_a) evaluated at the given point."""
        dxi: dict[Mode, complex] = {}
        deta: dict[Mode, complex] = {}
        for mono, c in self.coeffs.items():
            counts = Counter(mono)
            for (a, s), n in counts.items():
                rest = c * n
                for (b, sb), nb in counts.items():
                    v = xi_vals.get(b, 0j) if sb == 1 else eta_vals.get(b, 0j)
                    power = nb - 1 if (b, sb) == (a, s) else nb
                    if power:
                        rest *= v**power
                target = dxi if s == 1 else deta
                target[a] = target.get(a, 0j) + rest
        return dxi, deta


def zero_poly() -> ZeroMomentumPolynomial:
    return ZeroMomentumPolynomial({})


def monomial(coeff: complex, *vars_) -> ZeroMomentumPolynomial:
    return ZeroMomentumPolynomial({canonical(vars_): coeff})


def h0_polynomial(box: int, d: int = 1) -> ZeroMomentumPolynomial:
    """h0 = sum_{|a_i|<=box} xi_a eta_a restricted to the truncation box."""
    out: dict[Monomial, complex] = {}
    for a in _box_modes(box, d):
        out[canonical((xi(a), eta(a)))] = 1.0 + 0j
    return ZeroMomentumPolynomial(out)


def poly_norm(P: ZeroMomentumPolynomial) -> float:
    """sum over degrees of sup |coefficient| at that degree."""
    sup: dict[int, float] = {}
    for mono, c in P.coeffs.items():
        deg = len(mono)
        sup[deg] = max(sup.get(deg, 0.0), abs(c))
    return math.fsum(sup.values())


def poisson_bracket(
    P: ZeroMomentumPolynomial, Q: ZeroMomentumPolynomial
) -> ZeroMomentumPolynomial:
    """{P,Q} = i sum_a (dP/dxi_a dQ/deta_a - dP/deta_a dQ/dxi_a), exact symbolic."""
    out: dict[Monomial, complex] = {}
    for m1, c1 in P.coeffs.items():
        counts1 = Counter(m1)
        for m2, c2 in Q.coeffs.items():
            counts2 = Counter(m2)
            for (a, s), n1 in counts1.items():
                n2 = counts2.get((a, -s), 0)
                if n2 == 0:
                    continue
                rest1 = list(m1)
                rest1.remove((a, s))
                rest2 = list(m2)
                rest2.remove((a, -s))
                key = canonical(rest1 + rest2)
                # sign +1 when the xi-derivative falls on P
                weight = n1 * n2 if s == 1 else -n1 * n2
                out[key] = out.get(key, 0j) + 1j * weight * (c1 * c2)
    return ZeroMomentumPolynomial(out)


def bracket_with_h0(P: ZeroMomentumPolynomial) -> ZeroMomentumPolynomial:
    """{P, h0} for the full h0 = sum_a xi_a eta_a: each monomial times i*r.

    Uses the exact integer winding rather than a box-truncated h0 polynomial,
    so modes outside any finite box are handled correctly.
    """
    out: dict[Monomial, complex] = {}
    for mono, c in P.coeffs.items():
        r = winding(mono)
        if r != 0:
            out[mono] = complex(-r * c.imag, r * c.real)  # i * r * c
    return ZeroMomentumPolynomial(out)


def flow_average(P: ZeroMomentumPolynomial) -> ZeroMomentumPolynomial:
    """Resonant projection: keep exactly the winding-zero monomials.

    Equals (1/T) int_0^T P o Phi^t_{h0} dt with T = 2*pi, is idempotent, and
    its output Poisson-commutes with h0.
    """
    return ZeroMomentumPolynomial(
        {m: c for m, c in P.coeffs.items() if winding(m) == 0}
    )


def rotate_point(
    xi_vals: dict[Mode, complex], eta_vals: dict[Mode, complex], t: float
) -> tuple[dict[Mode, complex], dict[Mode, complex]]:
    """The h0 flow: xi -> e^{it} xi, eta -> e^{-it} eta."""
    ph = complex(math.cos(t), math.sin(t))
    return (
        {a: ph * v for a, v in xi_vals.items()},
        {a: v / ph for a, v in eta_vals.items()},
    )


def homological_solution(
    G: ZeroMomentumPolynomial,
) -> tuple[ZeroMomentumPolynomial, ZeroMomentumPolynomial]:
    """Solve {chi, h0} + G = Z with Z in normal form.

    Z is the flow average of G; each non-resonant monomial of G contributes
    (i/r) * coefficient to chi.  The i/r factors are the closed-form value of
    the weighted time average (1/T) int_0^T t (Z - G) o Phi^t dt.
    Norm bounds: ||Z|| <= ||G||, ||chi|| <= 2T ||G||.
    """
    Z = flow_average(G)
    chi: dict[Monomial, complex] = {}
    for mono, c in G.coeffs.items():
        r = winding(mono)
        if r == 0:
            continue
        chi[mono] = complex(-c.imag / r, c.real / r)  # (i/r) * c
    return Z, ZeroMomentumPolynomial(chi)


@dataclass(frozen=True)
class LieTransformResult:
    poly: ZeroMomentumPolynomial
    truncated: bool


def lie_transform_truncated(
    chi: ZeroMomentumPolynomial,
    G: ZeroMomentumPolynomial,
    order: int,
    degree_cap: int | None = None,
) -> LieTransformResult:
    """sum_{l=0..order} G_l with G_0 = G, G_l = (1/l){chi, G_{l-1}}.

    Terms whose degree exceeds degree_cap are dropped and the result is
    flagged truncated.
    """
    if order < 0:
        raise ParameterError(f"order must be >= 0, got {order}")
    total = G
    term = G
    truncated = False
    for l in range(1, order + 1):
        term = poisson_bracket(chi, term).scale(1.0 / l)
        if degree_cap is not None and term.degree > degree_cap:
            kept = {
                m: c for m, c in term.coeffs.items() if len(m) <= degree_cap
            }
            if len(kept) != len(term.coeffs):
                truncated = True
            term = ZeroMomentumPolynomial(kept)
        total = total + term
        if term.is_zero():
            break
    return LieTransformResult(total, truncated)


# ---------------------------------------------------------------------------
# The KG -> NLS normal-form derivation
# ---------------------------------------------------------------------------


def _box_modes(box: int, d: int) -> list[Mode]:
    if d == 1:
        return [(a,) for a in range(-box, box + 1)]
    modes: list[Mode] = [()]
    for _ in range(d):
        modes = [m + (a,) for m in modes for a in range(-box, box + 1)]
    return modes


def _mode_norm_sq(a: Mode) -> int:
    return sum(c * c for c in a)


def kg_interaction_unit(ell: int, box: int, d: int = 1) -> ZeroMomentumPolynomial:
    """The degree-(2l+2) interaction sum_{sum h_j = 0} prod_j (xi_{h_j} + eta_{-h_j})
    on the mode box, with unit overall coefficient.

    A slot choosing xi_{h} contributes the variable (h, +1) and one choosing
    eta_{-h} contributes (-h, -1); either way the slot adds +h to the momentum,
    so the ordered sum runs exactly over zero-momentum variable tuples.  The
    enumeration goes over canonical multisets with the multinomial count.
    """
    variables = [xi(a) for a in _box_modes(box, d)] + [
        eta(a) for a in _box_modes(box, d)
    ]
    deg = 2 * ell + 2
    fact_deg = math.factorial(deg)
    out: dict[Monomial, complex] = {}
    for combo in combinations_with_replacement(variables, deg):
        if any(x != 0 for x in momentum(combo)):
            continue
        mult = 1
        for n in Counter(combo).values():
            mult *= math.factorial(n)
        key = canonical(combo)
        out[key] = out.get(key, 0j) + fact_deg // mult
    return ZeroMomentumPolynomial(out)


def kg_quadratic_part(box: int, d: int = 1) -> ZeroMomentumPolynomial:
    """sum_h (1/4)|h|^2 (xi_h + eta_{-h})(xi_{-h} + eta_h) on the mode box."""
    out: dict[Monomial, complex] = {}
    for h in _box_modes(box, d):
        w = 0.25 * _mode_norm_sq(h)
        if w == 0.0:
            continue
        neg = tuple(-c for c in h)
        for v1 in (xi(h), eta(neg)):
            for v2 in (xi(neg), eta(h)):
                key = canonical((v1, v2))
                out[key] = out.get(key, 0j) + w
    return ZeroMomentumPolynomial(out)


@dataclass(frozen=True)
class KGNLSDerivation:
    """Result of flow-averaging the truncated KG interaction.

    dispersive_weights maps h to the coefficient of xi_h eta_h in the averaged
    quadratic part (should be |h|^2/2 exactly); nonlinear_coefficient is the
    equation-level coefficient extracted from the averaged interaction and
    must equal beta * binom(2l+2, l+1) / 2^(l+2).
    """

    ell: int
    alpha: float
    mu: float
    beta: float
    box: int
    d: int
    dispersive_weights: dict[Mode, float]
    nonlinear_coefficient: float
    expected_nonlinear_coefficient: float
    interaction: ZeroMomentumPolynomial = field(repr=False)
    average: ZeroMomentumPolynomial = field(repr=False)

    @property
    def mu_power_dispersive(self) -> float:
        return self.mu**2

    @property
    def mu_power_nonlinear(self) -> float:
        return self.mu ** (2 * self.ell * self.alpha)


def kg_nls_coefficients(
    ell: int,
    alpha: float,
    mu: float,
    beta: float = 1.0,
    d: int = 1,
    box: int = 2,
) -> KGNLSDerivation:
    """Derive the NLS normal form from the truncated KG expansion.

    Builds the interaction (quadratic dispersive part plus the
    degree-(2l+2) term with physical coefficient
    beta * mu^(2(l*alpha-1)) / (2^(l+1) (2l+2))), applies the resonant
    projection, and extracts (i) the dispersive weight of each xi_h eta_h,
    which is |h|^2/2, and (ii) the nonlinear equation coefficient.  The
    extraction path is integer-exact; mu enters only through the recorded
    scaling powers.
    """
    if ell < 1:
        raise ParameterError(f"ell must be >= 1, got {ell}")
    if mu <= 0:
        raise ParameterError(f"mu must be > 0, got {mu}")
    if not 0.0 < alpha <= 1.0 / ell:
        raise RegimeError(
            f"alpha must satisfy 0 < alpha <= 1/ell = {1.0 / ell} "
            f"(small-amplitude ansatz), got {alpha}"
        )
    # the extraction monomial needs ell+1 distinct modes in the box
    lo = -((ell + 1) // 2)
    extraction = list(range(lo, lo + ell + 1))
    need = max(abs(extraction[0]), abs(extraction[-1]))
    if box < need:
        raise ParameterError(
            f"box {box} too small for the degree-{2 * ell + 2} extraction; need >= {need}"
        )

    quad = kg_quadratic_part(box, d)
    nl_unit = kg_interaction_unit(ell, box, d)
    avg_quad = flow_average(quad)
    avg_nl_unit = flow_average(nl_unit)

    dispersive: dict[Mode, float] = {}
    for h in _box_modes(box, d):
        key = canonical((xi(h), eta(h)))
        dispersive[h] = float(avg_quad.coeffs.get(key, 0j).real)

    zero_tail = (0,) * (d - 1)
    mono = canonical(
        [xi((u,) + zero_tail) for u in extraction]
        + [eta((v,) + zero_tail) for v in extraction]
    )
    count = avg_nl_unit.coeffs.get(mono, 0j).real
    denom = 2 ** (ell + 1) * (2 * ell + 2) * math.factorial(ell + 1) * math.factorial(ell)
    extracted = beta * (count / denom)
    expected = beta * math.comb(2 * ell + 2, ell + 1) / 2 ** (ell + 2)

    c0_phys = beta * mu ** (2 * (ell * alpha - 1)) / (2 ** (ell + 1) * (2 * ell + 2))
    interaction = quad + nl_unit.scale(c0_phys)
    average = avg_quad + avg_nl_unit.scale(c0_phys)

    return KGNLSDerivation(
        ell=ell,
        alpha=alpha,
        mu=mu,
        beta=beta,
        box=box,
        d=d,
        dispersive_weights=dispersive,
        nonlinear_coefficient=extracted,
        expected_nonlinear_coefficient=expected,
        interaction=interaction,
        average=average,
    )


# ---------------------------------------------------------------------------
# Line-oriented serialization (one monomial per line, deterministic order)
# ---------------------------------------------------------------------------


def poly_to_text(P: ZeroMomentumPolynomial) -> str:
    lines = []
    for mono in sorted(P.coeffs, key=lambda m: (len(m), m)):
        c = P.coeffs[mono]
        vars_txt = "".join(
            "({};{})".format(" ".join(str(x) for x in a), s) for a, s in mono
        )
        lines.append(f"{c.real:.17g} {c.imag:.17g} {vars_txt}")
    return "\n".join(lines) + ("\n" if lines else "")


def poly_from_text(text: str) -> ZeroMomentumPolynomial:
    out: dict[Monomial, complex] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        re_s, im_s, rest = line.split(None, 2)
        vars_: list[Variable] = []
        for chunk in rest.split(")"):
            chunk = chunk.strip().lstrip("(")
            if not chunk:
                continue
            a_txt, s_txt = chunk.split(";")
            a = tuple(int(x) for x in a_txt.split())
            vars_.append((a, int(s_txt)))
        out[canonical(vars_)] = complex(float(re_s), float(im_s))
    return ZeroMomentumPolynomial(out)
