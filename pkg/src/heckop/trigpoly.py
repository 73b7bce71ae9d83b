"""Exact algebra of exponential polynomials and symbolic Cherednik operators.

A :class:`TrigPolynomial` is a finite sum ``sum_mu c_mu e^mu`` whose exponents
mu live in the rational span of the simple roots and are stored as tuples of
``Fraction``.  All pairings go through the exact Gram matrix, so applying a
Cherednik operator to a polynomial with rational data is exact: commutators
that vanish, vanish identically, not merely to roundoff.

The appendix-level identity checks (the explicit Laplacian formula, the
per-rotation cotangent sums, the Weyl denominator) live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .rootsys import (
    MultiplicityFunction,
    RootSystemSpec,
    WeylGroup,
    build_root_system,
    multiplicity,
    pair_exact,
    weyl_group,
)


class NonIntegralWeightError(ValueError):
    """An exponent fell outside the lattice admissible for a reflection."""


@dataclass(frozen=True, eq=False)
class CherednikContext:
    """Root system, multiplicity and Weyl data shared by all operator code."""

    R: RootSystemSpec
    k: MultiplicityFunction
    weyl: WeylGroup
    basis: np.ndarray          # orthonormal basis of a (rows), floats
    exact: bool                # rational multiplicities: symbolic ops are exact

    def key(self):
        return (self.R.name, self.k.values)

    @property
    def rank(self) -> int:
        return self.R.rank

    def pair(self, u, v) -> Fraction:
        return pair_exact(self.R.gram, u, v)


def make_context(system: str, kvals) -> CherednikContext:
    R = build_root_system(system)
    k = multiplicity(R, kvals)
    W = weyl_group(R)
    return CherednikContext(R=R, k=k, weyl=W, basis=np.eye(R.rank), exact=True)


class TrigPolynomial:
    """Finite map exponent -> coefficient; exponents are Fraction tuples."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for mu, c in (terms or {}).items():
            if c != 0:
                clean[tuple(Fraction(v) for v in mu)] = c
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls({})

    @classmethod
    def exp(cls, mu, coeff=1):
        return cls({tuple(Fraction(v) for v in mu): coeff})

    @classmethod
    def one(cls, rank):
        return cls({(Fraction(0),) * rank: 1})

    # -- ring structure ------------------------------------------------------

    def __add__(self, other):
        out = dict(self.terms)
        for mu, c in other.terms.items():
            s = out.get(mu, 0) + c
            if s == 0:
                out.pop(mu, None)
            else:
                out[mu] = s
        return TrigPolynomial(out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return TrigPolynomial({mu: -c for mu, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TrigPolynomial):
            out = {}
            for mu, c in self.terms.items():
                for nu, d in other.terms.items():
                    key = tuple(a + b for a, b in zip(mu, nu))
                    s = out.get(key, 0) + c * d
                    if s == 0:
                        out.pop(key, None)
                    else:
                        out[key] = s
            return TrigPolynomial(out)
        return TrigPolynomial({mu: c * other for mu, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, TrigPolynomial) and self.terms == other.terms

    def __hash__(self):  # pragma: no cover
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        if not self.terms:
            return "TrigPolynomial(0)"
        bits = [f"{c!r}*e^{tuple(str(v) for v in mu)}"
                for mu, c in sorted(self.terms.items())]
        return " + ".join(bits)

    # -- analytic views ------------------------------------------------------

    def eval_at(self, ctx: CherednikContext, x) -> complex:
        """Numeric value at a Euclidean point x."""
        x = np.asarray(x, dtype=float)
        s = np.array([float(a @ x) for a in ctx.R.simple_euclid])
        total = 0.0 + 0.0j
        for mu, c in self.terms.items():
            expo = sum(float(v) * s[j] for j, v in enumerate(mu))
            total += complex(c) * math.exp(expo)
        return total

    def dump(self) -> str:
        """One term per line: 'coeff_re coeff_im : exponent coordinates'."""
        lines = []
        for mu, c in sorted(self.terms.items()):
            z = complex(c)
            coords = " ".join(str(v) for v in mu)
            lines.append(f"{z.real!r} {z.imag!r} : {coords}")
        return "\n".join(lines)


def reflect_poly(ctx: CherednikContext, f: TrigPolynomial, root_index: int) -> TrigPolynomial:
    """Exact image of f under the reflection in a positive root."""
    out = {}
    for mu, c in f.terms.items():
        m = ctx.R.coroot_pairing_coords(root_index, mu)
        new = tuple(
            mu[j] - m * Fraction(ctx.R.pos_coords[root_index][j])
            for j in range(ctx.rank)
        )
        out[new] = out.get(new, 0) + c
    return TrigPolynomial(out)


def weyl_apply_poly(ctx: CherednikContext, w, f: TrigPolynomial) -> TrigPolynomial:
    out = {}
    for mu, c in f.terms.items():
        new = w.apply_coords(mu)
        out[new] = out.get(new, 0) + c
    return TrigPolynomial(out)


def divided_difference(ctx: CherednikContext, f: TrigPolynomial, root_index: int) -> TrigPolynomial:
    """Exact quotient (f - r_alpha f) / (1 - e^{-alpha}).

    Monomial rule, with m = (alpha^vee, mu):
    m > 0 -> sum_{j=0}^{m-1} e^{mu - j alpha};  m = 0 -> 0;
    m < 0 -> -sum_{j=1}^{|m|} e^{mu + j alpha}.
    """
    acoords = ctx.R.pos_coords[root_index]
    out = {}
    for mu, c in f.terms.items():
        m = ctx.R.coroot_pairing_coords(root_index, mu)
        if m.denominator != 1:
            raise NonIntegralWeightError(
                f"(alpha^vee, mu) = {m} is not an integer for root "
                f"{acoords} and exponent {mu}"
            )
        m = int(m)
        if m == 0:
            continue
        if m > 0:
            span = ((mu, -j) for j in range(m))
            sign = 1
        else:
            span = ((mu, j) for j in range(1, -m + 1))
            sign = -1
        for base, j in span:
            key = tuple(base[i] + j * Fraction(acoords[i]) for i in range(ctx.rank))
            s = out.get(key, 0) + sign * c
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s
    return TrigPolynomial(out)


def _k_of(ctx: CherednikContext, i: int):
    kv = ctx.k.k_pos_exact[i]
    return kv if ctx.exact else ctx.k.k_pos[i]


def cherednik_apply(ctx: CherednikContext, xi_coords, f: TrigPolynomial) -> TrigPolynomial:
    """T_xi f for xi given in (rational) simple-root coordinates.

    T_xi f = d_xi f + sum_{alpha>0} k_alpha (alpha, xi) (f - r_alpha f)/(1 - e^{-alpha})
             - (rho, xi) f, all summands exact.
    """
    xi = tuple(Fraction(v) for v in xi_coords)
    out = TrigPolynomial.zero()
    # directional derivative: e^mu -> (mu, xi) e^mu
    dterms = {}
    for mu, c in f.terms.items():
        p = ctx.pair(mu, xi)
        if p != 0:
            dterms[mu] = c * p
    out = out + TrigPolynomial(dterms)
    for i in range(ctx.R.n_pos):
        axi = ctx.pair(ctx.R.pos_coords[i], xi)
        if axi == 0:
            continue
        out = out + (_k_of(ctx, i) * axi) * divided_difference(ctx, f, i)
    rho_xi = ctx.pair(ctx.k.rho_coords, xi)
    if rho_xi != 0:
        out = out + (-rho_xi) * f
    return out


def laplacian_symbolic(ctx: CherednikContext, f: TrigPolynomial,
                       basis_coords=None) -> TrigPolynomial:
    """sum_i T_{xi_i}^2 f for any orthonormal basis {xi_i}, exactly.

    For a rational spanning basis {v_j} with Gram matrix B, completeness gives
    sum_i xi_i xi_i^T = id = sum_{j,l} (B^-1)_{jl} v_j v_l^T, hence
    sum_i T_{xi_i}^2 = sum_{j,l} (B^-1)_{jl} T_{v_j} T_{v_l}; the contraction
    is basis independent and keeps every coefficient rational.
    """
    n = ctx.rank
    if basis_coords is None:
        basis_coords = [tuple(Fraction(1 if j == i else 0) for j in range(n))
                        for i in range(n)]
    basis_coords = [tuple(Fraction(v) for v in b) for b in basis_coords]
    B = [[ctx.pair(bi, bj) for bj in basis_coords] for bi in basis_coords]
    Binv = _frac_inv(B)
    Tf = [cherednik_apply(ctx, b, f) for b in basis_coords]
    out = TrigPolynomial.zero()
    for j, bj in enumerate(basis_coords):
        for l in range(n):
            w = Binv[j][l]
            if w != 0:
                out = out + w * cherednik_apply(ctx, bj, Tf[l])
    return out


def _frac_inv(B):
    n = len(B)
    if n == 1:
        return [[1 / Fraction(B[0][0])]]
    a, b, c, d = B[0][0], B[0][1], B[1][0], B[1][1]
    det = a * d - b * c
    return [[d / det, -b / det], [-c / det, a / det]]


# -- numeric checks against the explicit Laplacian --------------------------


def eq1_rhs(ctx: CherednikContext, f: TrigPolynomial, x) -> complex:
    """Right-hand side of the explicit Laplacian formula at a regular point:

    Delta f + sum_a k_a coth((a,x)/2) d_a f + |rho|^2 f
            - sum_a k_a |a|^2 / (4 sinh^2((a,x)/2)) * (f - f o r_a).
    """
    x = np.asarray(x, dtype=float).reshape(ctx.rank)
    val = 0.0 + 0.0j
    for mu, c in f.terms.items():
        nrm = float(ctx.pair(mu, mu))
        e = complex(c) * _term_exp(ctx, mu, x)
        val += nrm * e
    rho2 = float(ctx.pair(ctx.k.rho_coords, ctx.k.rho_coords))
    val += rho2 * f.eval_at(ctx, x)
    fx = f.eval_at(ctx, x)
    for i in range(ctx.R.n_pos):
        k = ctx.k.k_pos[i]
        if k == 0:
            continue
        a = ctx.R.positive_roots[i]
        ax = float(a @ x)
        if ax == 0:
            raise ValueError("sample point lies on a wall")
        # directional derivative along alpha
        da = 0.0 + 0.0j
        for mu, c in f.terms.items():
            da += complex(c) * float(ctx.pair(mu, ctx.R.pos_coords[i])) * _term_exp(ctx, mu, x)
        val += k * (1.0 / math.tanh(ax / 2.0)) * da
        frx = f.eval_at(ctx, ctx.R.reflection_matrix(i) @ x)
        val -= k * float(ctx.R.norms_sq[i]) / (4.0 * math.sinh(ax / 2.0) ** 2) * (fx - frx)
    return val


def _term_exp(ctx, mu, x):
    s = sum(float(v) * float(a @ x) for v, a in zip(mu, ctx.R.simple_euclid))
    return math.exp(s)


def verify_eq1(ctx: CherednikContext, f: TrigPolynomial, sample_points,
               tol: float = 1e-10) -> dict:
    """Compare the symbolic Laplacian with the explicit formula pointwise."""
    Lf = laplacian_symbolic(ctx, f)
    worst = 0.0
    worst_pt = None
    for x in sample_points:
        lhs = Lf.eval_at(ctx, x)
        rhs = eq1_rhs(ctx, f, x)
        scale = max(abs(lhs), abs(rhs), 1.0)
        r = abs(lhs - rhs) / scale
        if r > worst:
            worst, worst_pt = r, np.asarray(x, dtype=float)
    return {
        "max_residual": worst,
        "worst_point": None if worst_pt is None else worst_pt.tolist(),
        "pass": worst < tol,
        "tol": tol,
    }


def alt_cherednik_value(ctx: CherednikContext, xi_coords, f: TrigPolynomial, x) -> complex:
    """Numeric value at x of the cotangent form of T_xi:

    d_xi f + sum_a (k_a/2)(a,xi) coth((a,x)/2) (f - f o r_a)
           - sum_a (k_a/2)(a,xi) f(r_a x).
    """
    x = np.asarray(x, dtype=float).reshape(ctx.rank)
    xi = tuple(Fraction(v) for v in xi_coords)
    val = 0.0 + 0.0j
    for mu, c in f.terms.items():
        val += complex(c) * float(ctx.pair(mu, xi)) * _term_exp(ctx, mu, x)
    fx = f.eval_at(ctx, x)
    for i in range(ctx.R.n_pos):
        k = ctx.k.k_pos[i]
        if k == 0:
            continue
        axi = float(ctx.pair(ctx.R.pos_coords[i], xi))
        ax = float(ctx.R.positive_roots[i] @ x)
        frx = f.eval_at(ctx, ctx.R.reflection_matrix(i) @ x)
        val += 0.5 * k * axi / math.tanh(ax / 2.0) * (fx - frx)
        val -= 0.5 * k * axi * frx
    return val


# -- appendix identities -----------------------------------------------------


def lemma61_residual(R: RootSystemSpec, k: MultiplicityFunction, x,
                     W: WeylGroup | None = None) -> float:
    """Max over nontrivial rotations tau of the normalized cotangent sum

    | sum_{r_b r_a = tau} k_a k_b (a,b) {coth((a,x)/2) coth((b,x)/2) - 1} |
    relative to the total magnitude of the contributing terms.
    """
    if R.rank != 2:
        raise ValueError("per-rotation cotangent sums are a rank-2 statement")
    if W is None:
        W = weyl_group(R)
    x = np.asarray(x, dtype=float).reshape(2)
    for a in R.positive_roots:
        if abs(float(a @ x)) < 1e-14:
            raise ValueError("sample point lies on a wall")

    refl_elem = []
    for i in range(R.n_pos):
        cm = R.reflection_coord_matrix(i)
        refl_elem.append(W.index_of_coord_matrix(cm))

    sums = {}
    mags = {}
    for ia in range(R.n_pos):
        for ib in range(R.n_pos):
            wi = W._mult[refl_elem[ib]][refl_elem[ia]]  # r_b o r_a
            # products of two reflections are rotations; skip the trivial one
            if wi == W.identity.index:
                continue
            ca = 1.0 / math.tanh(float(R.positive_roots[ia] @ x) / 2.0)
            cb = 1.0 / math.tanh(float(R.positive_roots[ib] @ x) / 2.0)
            term = k.k_pos[ia] * k.k_pos[ib] * float(R.positive_roots[ia] @ R.positive_roots[ib]) * (ca * cb - 1.0)
            sums[wi] = sums.get(wi, 0.0) + term
            mags[wi] = mags.get(wi, 0.0) + abs(term)
    worst = 0.0
    for wi, s in sums.items():
        scale = max(mags[wi], 1.0)
        worst = max(worst, abs(s) / scale)
    return worst


def weyl_denominator_residual(R: RootSystemSpec, x, W: WeylGroup | None = None) -> float:
    """Relative mismatch of the signed Weyl denominator formula at x.

    prod_{a>0} (e^{(a,x)/2} - e^{-(a,x)/2})  vs  sum_w det(w) e^{(w rho~, x)}
    with rho~ the plain half sum of positive roots.  Reduced systems only.
    """
    if not all(R.indivisible):
        raise ValueError(f"{R.name} is not reduced; the denominator formula does not apply")
    if W is None:
        W = weyl_group(R)
    x = np.asarray(x, dtype=float).reshape(R.rank)
    prod = 1.0
    for a in R.positive_roots:
        h = float(a @ x) / 2.0
        prod *= math.exp(h) - math.exp(-h)
    rho_t = 0.5 * R.positive_roots.sum(axis=0)
    ssum = 0.0
    scale = 0.0
    for w in W.elements:
        t = w.det * math.exp(float((w.matrix @ rho_t) @ x))
        ssum += t
        scale = max(scale, abs(t))
    return abs(prod - ssum) / max(scale, abs(prod), 1.0)
