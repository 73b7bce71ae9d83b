"""Rank-1 and rank-2 crystallographic root systems, Weyl groups and chambers.

Supported systems: A1, A1xA1, A2, B2, BC2, G2.  Euclidean coordinates follow
fixed scale conventions (|short root|^2 = 2 for the A family and G2, unit
e_i coordinates for B2/BC2) so every number appearing in tests is
reproducible.  Exact integer/rational data -- simple-root coordinates of all
positive roots, the Gram matrix of the simple roots, Cartan pairings and the
Weyl action on simple-root coordinates -- is carried alongside the floating
point embedding, so the symbolic layer never touches floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

SYSTEM_NAMES = ("A1", "A1xA1", "A2", "B2", "BC2", "G2")

_SQ2 = math.sqrt(2.0)
_SQ6 = math.sqrt(6.0)

# Simple roots in Euclidean coordinates, per system.
_SIMPLE_EUCLID = {
    "A1": [[_SQ2]],
    "A1xA1": [[_SQ2, 0.0], [0.0, _SQ2]],
    "A2": [[_SQ2, 0.0], [-_SQ2 / 2.0, _SQ6 / 2.0]],
    "B2": [[1.0, -1.0], [0.0, 1.0]],
    "BC2": [[1.0, -1.0], [0.0, 1.0]],
    "G2": [[_SQ2, 0.0], [-3.0 / _SQ2, _SQ6 / 2.0]],
}

# Exact Gram matrices (alpha_i, alpha_j) of the simple roots.
_GRAM = {
    "A1": [[2]],
    "A1xA1": [[2, 0], [0, 2]],
    "A2": [[2, -1], [-1, 2]],
    "B2": [[2, -1], [-1, 1]],
    "BC2": [[2, -1], [-1, 1]],
    "G2": [[2, -3], [-3, 6]],
}

# Positive roots as integer vectors in the simple-root basis.
_POS_COORDS = {
    "A1": [(1,)],
    "A1xA1": [(1, 0), (0, 1)],
    "A2": [(1, 0), (0, 1), (1, 1)],
    "B2": [(1, 0), (0, 1), (1, 1), (1, 2)],
    # e1-e2, e2, e1, e1+e2, 2e2, 2e1
    "BC2": [(1, 0), (0, 1), (1, 1), (1, 2), (0, 2), (2, 2)],
    "G2": [(1, 0), (0, 1), (1, 1), (2, 1), (3, 1), (3, 2)],
}

_WEYL_ORDER = {"A1": 2, "A1xA1": 4, "A2": 6, "B2": 8, "BC2": 8, "G2": 12}

_WALL_TOL = 1e-12


class ClosureError(RuntimeError):
    """Weyl-group closure was not reached within the iteration cap."""


def _frac_mat(rows) -> tuple:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def pair_exact(gram, u, v) -> Fraction:
    """Exact inner product of two vectors given in simple-root coordinates."""
    acc = Fraction(0)
    for i, ui in enumerate(u):
        if ui:
            row = gram[i]
            for j, vj in enumerate(v):
                if vj:
                    acc += Fraction(ui) * row[j] * Fraction(vj)
    return acc


@dataclass(frozen=True, eq=False)
class WeylElement:
    """One element of the Weyl group.

    ``matrix`` acts on Euclidean coordinates, ``coord_matrix`` (an integer
    matrix, rows indexed by simple roots) acts on simple-root coordinates;
    the two representations agree by construction.
    """

    index: int
    matrix: np.ndarray
    coord_matrix: tuple
    word: tuple
    length: int
    det: int

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=float)

    def apply_coords(self, coords):
        n = len(coords)
        return tuple(
            sum(self.coord_matrix[i][j] * coords[j] for j in range(n)) for i in range(n)
        )

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"WeylElement(#{self.index}, l={self.length}, word={self.word})"


@dataclass(frozen=True, eq=False)
class WeylGroup:
    elements: tuple
    identity: WeylElement
    longest: WeylElement
    _lookup: dict = field(repr=False)
    _mult: tuple = field(repr=False)
    _inv: tuple = field(repr=False)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index_of_coord_matrix(self, coord_matrix) -> int:
        return self._lookup[coord_matrix]

    def compose(self, w1: WeylElement, w2: WeylElement) -> WeylElement:
        """Return the element acting as w1 o w2."""
        return self.elements[self._mult[w1.index][w2.index]]

    def inverse(self, w: WeylElement) -> WeylElement:
        return self.elements[self._inv[w.index]]

    @property
    def lengths(self):
        return {w: w.length for w in self.elements}


@dataclass(frozen=True, eq=False)
class RootSystemSpec:
    """A named root system of rank <= 2 with exact and floating data."""

    name: str
    rank: int
    simple_euclid: np.ndarray          # rows = simple roots, Euclidean coords
    gram: tuple                        # exact Gram matrix of the simple roots
    pos_coords: tuple                  # positive roots, integer simple-root coords
    positive_roots: np.ndarray         # same roots, Euclidean rows
    norms_sq: tuple                    # exact |alpha|^2 per positive root
    indivisible: tuple                 # bool per positive root (alpha/2 not a root)
    half_index: tuple                  # index of alpha/2 in pos_coords, or None
    double_index: tuple                # index of 2*alpha in pos_coords, or None
    simple_indices: tuple              # positions of the simple roots in pos_coords

    @property
    def n_pos(self) -> int:
        return len(self.pos_coords)

    @property
    def indivisible_positive(self) -> np.ndarray:
        return self.positive_roots[[i for i, b in enumerate(self.indivisible) if b]]

    @property
    def indivisible_indices(self) -> tuple:
        return tuple(i for i, b in enumerate(self.indivisible) if b)

    @property
    def simple_roots(self) -> np.ndarray:
        return self.simple_euclid

    def coroot(self, i: int) -> np.ndarray:
        a = self.positive_roots[i]
        return 2.0 * a / float(self.norms_sq[i])

    def coroot_pairing_coords(self, i: int, coords) -> Fraction:
        """Exact (alpha_i^vee, mu) for mu in simple-root coordinates."""
        return 2 * pair_exact(self.gram, self.pos_coords[i], coords) / self.norms_sq[i]

    def euclid_of_coords(self, coords) -> np.ndarray:
        c = np.array([float(v) for v in coords])
        return c @ self.simple_euclid

    def reflection_coord_matrix(self, i: int) -> tuple:
        """Integer matrix of r_alpha_i on simple-root coordinates."""
        m = self.pos_coords[i]
        n = self.rank
        rows = []
        for r in range(n):
            row = []
            for c in range(n):
                e = Fraction(1 if r == c else 0)
                basis = tuple(1 if j == c else 0 for j in range(n))
                e -= Fraction(m[r]) * self.coroot_pairing_coords(i, basis)
                assert e.denominator == 1
                row.append(int(e))
            rows.append(tuple(row))
        return tuple(rows)

    def reflection_matrix(self, i: int) -> np.ndarray:
        a = self.positive_roots[i]
        return np.eye(self.rank) - 2.0 * np.outer(a, a) / float(self.norms_sq[i])

    def length_classes(self) -> tuple:
        """Distinct exact squared root lengths, ascending."""
        return tuple(sorted(set(self.norms_sq)))


def build_root_system(name: str) -> RootSystemSpec:
    """Construct one of the six supported systems with fixed conventions."""
    if name not in SYSTEM_NAMES:
        raise ValueError(f"unknown root system {name!r}; expected one of {SYSTEM_NAMES}")
    simple = np.array(_SIMPLE_EUCLID[name], dtype=float)
    gram = _frac_mat(_GRAM[name])
    pos_coords = tuple(tuple(c) for c in _POS_COORDS[name])
    rank = simple.shape[0]
    positive = np.array([np.array(c, dtype=float) @ simple for c in pos_coords])
    norms = tuple(pair_exact(gram, c, c) for c in pos_coords)

    coord_set = set(pos_coords)
    half_index, double_index, indivisible = [], [], []
    for c in pos_coords:
        half = tuple(Fraction(v, 2) for v in c)
        if all(h.denominator == 1 for h in half) and tuple(int(h) for h in half) in coord_set:
            hidx = pos_coords.index(tuple(int(h) for h in half))
        else:
            hidx = None
        dbl = tuple(2 * v for v in c)
        double_index.append(pos_coords.index(dbl) if dbl in coord_set else None)
        half_index.append(hidx)
        indivisible.append(hidx is None)

    simple_indices = tuple(
        pos_coords.index(tuple(1 if j == i else 0 for j in range(rank)))
        for i in range(rank)
    )

    spec = RootSystemSpec(
        name=name,
        rank=rank,
        simple_euclid=simple,
        gram=gram,
        pos_coords=pos_coords,
        positive_roots=positive,
        norms_sq=norms,
        indivisible=tuple(indivisible),
        half_index=tuple(half_index),
        double_index=tuple(double_index),
        simple_indices=simple_indices,
    )
    _check_integrality(spec)
    return spec


def _check_integrality(R: RootSystemSpec):
    # (alpha^vee, beta) must be an integer for every pair of roots.
    for i in range(R.n_pos):
        for c in R.pos_coords:
            p = R.coroot_pairing_coords(i, c)
            if p.denominator != 1:
                raise ValueError(f"integrality violated in {R.name}: pairing {p}")


def weyl_group(R: RootSystemSpec, max_size: int = 48) -> WeylGroup:
    """Generate the Weyl group by closure over the simple reflections."""
    n = R.rank
    gen_float = [R.reflection_matrix(i) for i in R.simple_indices]
    gen_coord = [R.reflection_coord_matrix(i) for i in R.simple_indices]

    idc = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
    seen = {idc: (np.eye(n), ())}
    frontier = [idc]
    while frontier:
        nxt = []
        for cm in frontier:
            mat, word = seen[cm]
            for g, (gf, gc) in enumerate(zip(gen_float, gen_coord)):
                # left-multiply: r_g o w
                new_c = tuple(
                    tuple(sum(gc[i][k] * cm[k][j] for k in range(n)) for j in range(n))
                    for i in range(n)
                )
                if new_c not in seen:
                    seen[new_c] = (gf @ mat, (g,) + word)
                    nxt.append(new_c)
        frontier = nxt
        if len(seen) > max_size:
            raise ClosureError(f"Weyl closure for {R.name} exceeded {max_size} elements")

    # stable order: by word length, then by word
    items = sorted(seen.items(), key=lambda kv: (len(kv[1][1]), kv[1][1]))
    neg_set = {tuple(-v for v in R.pos_coords[i]) for i in R.indivisible_indices}
    elements = []
    for idx, (cm, (mat, word)) in enumerate(items):
        length = _length_from_def(R, cm, neg_set)
        if length != len(word):
            raise ClosureError(
                f"length mismatch in {R.name}: word {word} vs l(w)={length}"
            )
        det = round(float(np.linalg.det(mat)))
        elements.append(
            WeylElement(index=idx, matrix=mat, coord_matrix=cm, word=word,
                        length=length, det=det)
        )
    elements = tuple(elements)
    if len(elements) != _WEYL_ORDER[R.name]:
        raise ClosureError(
            f"|W| = {len(elements)} for {R.name}, expected {_WEYL_ORDER[R.name]}"
        )

    lookup = {w.coord_matrix: w.index for w in elements}
    mult = tuple(
        tuple(
            lookup[_mat_mul_int(w1.coord_matrix, w2.coord_matrix)]
            for w2 in elements
        )
        for w1 in elements
    )
    inv = []
    for w in elements:
        for v in elements:
            if mult[w.index][v.index] == 0:
                inv.append(v.index)
                break
    longest = max(elements, key=lambda w: w.length)
    return WeylGroup(
        elements=elements,
        identity=elements[0],
        longest=longest,
        _lookup=lookup,
        _mult=mult,
        _inv=tuple(inv),
    )


def _mat_mul_int(a, b):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def _length_from_def(R: RootSystemSpec, coord_matrix, neg_set) -> int:
    # l(w) = |R0+ intersect w R0-|: count indivisible positive roots beta with
    # w^-1 beta negative, equivalently w(gamma) negative for gamma in R0+.
    n = R.rank
    count = 0
    for i in R.indivisible_indices:
        c = R.pos_coords[i]
        img = tuple(
            sum(coord_matrix[r][j] * c[j] for j in range(n)) for r in range(n)
        )
        if img in neg_set:
            count += 1
    return count


@dataclass(frozen=True, eq=False)
class MultiplicityFunction:
    """W-invariant multiplicity: one value per root-length class.

    Either every retained root carries k > 0, or k vanishes identically
    (the Euclidean degenerate mode used by oracle tests).  rho and gamma are
    derived once; rho is also kept exactly in simple-root coordinates.
    """

    values: tuple                  # per length class, ascending |alpha|^2
    classes: tuple                 # exact squared lengths, ascending
    k_pos: tuple                   # float k per positive root
    k_pos_exact: tuple             # Fraction per positive root, or None
    rho: np.ndarray
    rho_coords: tuple              # Fractions, simple-root basis
    gamma: float

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def value_for_root(self, i: int) -> float:
        return self.k_pos[i]


def multiplicity(R: RootSystemSpec, values: Sequence) -> MultiplicityFunction:
    """Build a multiplicity function from per-length-class values.

    ``values`` are matched to ``R.length_classes()`` in ascending order of
    |alpha|^2.  All values must be strictly positive, or all zero.
    """
    classes = R.length_classes()
    vals = list(values)
    if len(vals) != len(classes):
        raise ValueError(
            f"{R.name} has {len(classes)} root-length classes {classes}, "
            f"got {len(vals)} multiplicity values"
        )
    if any(float(v) < 0 for v in vals):
        raise ValueError("multiplicities must be nonnegative")
    pos = [float(v) > 0 for v in vals]
    if any(pos) and not all(pos):
        raise ValueError(
            "mixed zero/positive multiplicities: drop the k=0 roots and use "
            "the corresponding subsystem instead"
        )

    # every float is an exact binary rational, so an exact track is always valid
    exact_vals = [Fraction(v) for v in vals]

    class_of = {c: j for j, c in enumerate(classes)}
    k_pos = tuple(float(vals[class_of[R.norms_sq[i]]]) for i in range(R.n_pos))
    k_exact = tuple(exact_vals[class_of[R.norms_sq[i]]] for i in range(R.n_pos))

    rho = 0.5 * sum(k_pos[i] * R.positive_roots[i] for i in range(R.n_pos))
    rho = np.asarray(rho, dtype=float).reshape(R.rank)
    rho_coords = tuple(
        sum((k_exact[i] * Fraction(R.pos_coords[i][j]) for i in range(R.n_pos)),
            start=Fraction(0)) / 2
        for j in range(R.rank)
    )
    gamma = float(sum(k_pos))
    return MultiplicityFunction(
        values=tuple(float(v) for v in vals),
        classes=classes,
        k_pos=k_pos,
        k_pos_exact=k_exact,
        rho=rho,
        rho_coords=rho_coords,
        gamma=gamma,
    )


def chamber_decompose(R: RootSystemSpec, W: WeylGroup, x):
    """Return (x_plus, w, singular_set) with x_plus = w . x dominant.

    ``singular_set`` collects the indices of positive roots orthogonal to the
    input x (within the relative wall tolerance).
    """
    x = np.asarray(x, dtype=float).reshape(R.rank)
    nx = float(np.linalg.norm(x))
    y = x.copy()
    w = W.identity
    for _ in range(4 * len(W.elements) + 4):
        viol = None
        for i in R.simple_indices:
            na = float(np.linalg.norm(R.positive_roots[i]))
            if float(R.positive_roots[i] @ y) < -_WALL_TOL * na * max(nx, 1e-300):
                viol = i
                break
        if viol is None:
            break
        y = R.reflection_matrix(viol) @ y
        refl = W.elements[W.index_of_coord_matrix(R.reflection_coord_matrix(viol))]
        w = W.compose(refl, w)
    else:  # pragma: no cover - cannot happen for a valid group
        raise ClosureError("chamber descent did not terminate")
    if w.index != W.identity.index:
        # one multiply by the stored group matrix, so equal inputs related by
        # different reflection paths land on bit-identical representatives
        y = w.matrix @ x

    singular = []
    for i in range(R.n_pos):
        a = R.positive_roots[i]
        if abs(float(a @ x)) <= _WALL_TOL * float(np.linalg.norm(a)) * nx:
            singular.append(i)
    return y, w, tuple(singular)


@dataclass(frozen=True)
class LatticePoint:
    coeffs: tuple        # nonnegative integers, simple-root basis
    height: int

    def euclid(self, R: RootSystemSpec) -> np.ndarray:
        return R.euclid_of_coords(self.coeffs)


def enumerate_Qplus(R: RootSystemSpec, max_height: int) -> list:
    """All q = sum n_i alpha_i with n_i >= 0 and sum n_i <= max_height.

    Sorted by height, then lexicographically by coefficient tuple.
    """
    if max_height < 0:
        raise ValueError("max_height must be >= 0")
    pts = []
    if R.rank == 1:
        for n in range(max_height + 1):
            pts.append(LatticePoint((n,), n))
    else:
        for h in range(max_height + 1):
            for n1 in range(h + 1):
                pts.append(LatticePoint((n1, h - n1), h))
    pts.sort(key=lambda p: (p.height, p.coeffs))
    return pts
