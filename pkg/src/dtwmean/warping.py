"""Diagonal grid graphs, global warping constraints and constrained DTW.

Indices in the public API are 1-based, matching the usual notation for
warping paths: a vertex ``(i, j)`` aligns element ``i`` of the first series
with element ``j`` of the second one. Internally arrays are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from . import kernels


class WarpingError(ValueError):
    """Invalid arguments to a warping routine."""


class InfeasibleError(WarpingError):
    """No admissible warping path exists under the active constraint."""


class EnumerationCapError(WarpingError):
    """Refusal to enumerate paths of a too large grid."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    # str() keeps decimal literals such as 1.1 exact (11/10)
    return Fraction(str(value))


@dataclass(frozen=True)
class GlobalConstraint:
    """A Sakoe-Chiba band, an Itakura parallelogram, or no constraint."""

    kind: str = "none"
    r: Optional[int] = None
    sigma: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind == "none":
            if self.r is not None or self.sigma is not None:
                raise WarpingError("unconstrained relation takes no parameters")
        elif self.kind == "sakoe-chiba":
            if self.r is None or int(self.r) != self.r or self.r < 0:
                raise WarpingError(f"band width must be a nonnegative integer, got {self.r!r}")
            object.__setattr__(self, "r", int(self.r))
        elif self.kind == "itakura":
            if self.sigma is None:
                raise WarpingError("itakura constraint needs a slope")
            sigma = _as_fraction(self.sigma)
            if sigma < 1:
                raise WarpingError(f"itakura slope must be >= 1, got {self.sigma!r}")
            object.__setattr__(self, "sigma", sigma)
        else:
            raise WarpingError(f"unknown constraint kind {self.kind!r}")

    @classmethod
    def none(cls) -> "GlobalConstraint":
        return cls("none")

    @classmethod
    def sakoe_chiba(cls, r: int) -> "GlobalConstraint":
        return cls("sakoe-chiba", r=r)

    @classmethod
    def itakura(cls, sigma) -> "GlobalConstraint":
        return cls("itakura", sigma=sigma)

    @classmethod
    def parse(cls, text: str) -> "GlobalConstraint":
        """Parse ``none``, ``sakoe-chiba:<r>`` or ``itakura:<sigma>``."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.lower()
        if kind in ("none", "free", ""):
            return cls.none()
        if kind in ("sakoe-chiba", "sakoechiba", "band"):
            if not arg:
                raise WarpingError("sakoe-chiba needs a width, e.g. sakoe-chiba:2")
            return cls.sakoe_chiba(int(arg))
        if kind == "itakura":
            if not arg:
                raise WarpingError("itakura needs a slope, e.g. itakura:1.1")
            return cls.itakura(arg)
        raise WarpingError(f"unknown constraint {text!r}")

    def label(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "sakoe-chiba":
            return f"sakoe-chiba:{self.r}"
        return f"itakura:{float(self.sigma):g}"

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.r is not None:
            out["r"] = self.r
        if self.sigma is not None:
            out["sigma"] = float(self.sigma)
        return out

    @classmethod
    def from_json(cls, data: Optional[dict]) -> "GlobalConstraint":
        if not data:
            return cls.none()
        kind = data.get("kind", "none")
        if kind == "sakoe-chiba":
            return cls.sakoe_chiba(data["r"])
        if kind == "itakura":
            return cls.itakura(data["sigma"])
        return cls(kind)


NO_CONSTRAINT = GlobalConstraint.none()


def _ceil_div(p: int, q: int) -> int:
    return -((-p) // q)


def constraint_window(c: GlobalConstraint, m: int, n: int, j: int) -> Optional[tuple[int, int]]:
    """Rows ``i`` with ``(i, j)`` in the relation, as an interval ``(a, b)``.

    Returns ``None`` for an empty window.
    """
    if not 1 <= j <= n:
        raise WarpingError(f"column {j} outside [1, {n}]")
    if c.kind == "none":
        a, b = 1, m
    elif c.kind == "sakoe-chiba":
        a, b = max(1, j - c.r), min(m, j + c.r)
    else:
        p, q = c.sigma.numerator, c.sigma.denominator
        # j/i <= sigma and j/i >= 1/sigma
        a = _ceil_div(j * q, p)
        b = (j * p) // q
        # (n-j+1)/(m-i+1) between 1/sigma and sigma
        rest = n - j + 1
        a = max(a, m + 1 - (rest * p) // q)
        b = min(b, m + 1 - _ceil_div(rest * q, p))
        a, b = max(a, 1), min(b, m)
    if a > b:
        return None
    return a, b


def is_compatible(c: GlobalConstraint, m: int, n: int) -> bool:
    """Length compatibility of an ``m x n`` alignment with the constraint."""
    if c.kind == "none":
        return True
    if c.kind == "sakoe-chiba":
        return abs(m - n) <= c.r
    return 1 / c.sigma <= Fraction(m, n) <= c.sigma


def column_bounds(c: GlobalConstraint, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based inclusive row bounds per column (``lo > hi`` marks empty)."""
    lo = np.zeros(n, dtype=np.intp)
    hi = np.full(n, -1, dtype=np.intp)
    for j in range(1, n + 1):
        w = constraint_window(c, m, n, j)
        if w is not None:
            lo[j - 1], hi[j - 1] = w[0] - 1, w[1] - 1
    return lo, hi


@dataclass(frozen=True)
class WarpingPath:
    """A monotone lattice path starting at ``(1, 1)``."""

    vertices: tuple[tuple[int, int], ...]

    def __post_init__(self):
        verts = tuple((int(i), int(j)) for i, j in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if not verts or verts[0] != (1, 1):
            raise WarpingError("warping path must start at (1, 1)")
        for (i0, j0), (i1, j1) in zip(verts, verts[1:]):
            if (i1 - i0, j1 - j0) not in ((1, 0), (0, 1), (1, 1)):
                raise WarpingError(f"illegal step {(i0, j0)} -> {(i1, j1)}")

    def __len__(self):
        return len(self.vertices)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.vertices)

    @property
    def end(self) -> tuple[int, int]:
        return self.vertices[-1]

    def column_rows(self, j: int) -> tuple[int, int]:
        """The contiguous row interval aligned with column ``j``."""
        rows = [i for i, jj in self.vertices if jj == j]
        if not rows:
            raise WarpingError(f"column {j} not visited")
        if rows[-1] - rows[0] + 1 != len(rows):
            raise WarpingError(f"column {j} rows not contiguous")
        return rows[0], rows[-1]

    def transpose(self) -> "WarpingPath":
        return WarpingPath(tuple((j, i) for i, j in self.vertices))

    def is_admissible(self, c: GlobalConstraint, m: int, n: int) -> bool:
        for i, j in self.vertices:
            if not (1 <= i <= m and 1 <= j <= n):
                return False
            w = constraint_window(c, m, n, j)
            if w is None or not w[0] <= i <= w[1]:
                return False
        return True


def path_cost(s: Sequence[float], t: Sequence[float], path: WarpingPath) -> float:
    """Sum of squared differences along ``path``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    idx = np.array(path.vertices) - 1
    return float(np.sum((s[idx[:, 0]] - t[idx[:, 1]]) ** 2))


@dataclass(frozen=True)
class DTWResult:
    distance: float
    path: WarpingPath

    @property
    def cost(self) -> float:
        return self.distance ** 2


def _backtrack(acc: np.ndarray, i: int, j: int) -> WarpingPath:
    verts = [(i + 1, j + 1)]
    while (i, j) != (0, 0):
        # ties prefer the diagonal step, then the vertical, then the horizontal
        options = []
        if i > 0 and j > 0:
            options.append((acc[i - 1, j - 1], i - 1, j - 1))
        if i > 0:
            options.append((acc[i - 1, j], i - 1, j))
        if j > 0:
            options.append((acc[i, j - 1], i, j - 1))
        best = min(v for v, _, _ in options)
        for v, ii, jj in options:
            if v == best:
                i, j = ii, jj
                break
        verts.append((i + 1, j + 1))
    return WarpingPath(tuple(reversed(verts)))


def dtw(s: Sequence[float], t: Sequence[float], c: GlobalConstraint = NO_CONSTRAINT,
        backend: Optional[str] = None) -> DTWResult:
    """Constrained dtw-distance and an optimal warping path.

    Parameters
    ----------
    s, t : sequences of float
        Series of lengths ``m`` and ``n``; path vertices are ``(i, j)`` with
        ``i`` indexing ``s``.
    c : GlobalConstraint
        Global constraint on admissible cells.

    Raises
    ------
    InfeasibleError
        If the lengths are incompatible with ``c`` or no admissible path exists.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    m, n = len(s), len(t)
    if m == 0 or n == 0:
        raise WarpingError("series must be nonempty")
    if not is_compatible(c, m, n):
        raise InfeasibleError(f"lengths {m} and {n} incompatible with {c.label()}")
    lo, hi = column_bounds(c, m, n)
    acc = kernels.dtw_matrix(s, t, lo, hi, backend=backend)
    if not np.isfinite(acc[m - 1, n - 1]):
        raise InfeasibleError(f"no admissible {m}x{n} warping path under {c.label()}")
    path = _backtrack(acc, m - 1, n - 1)
    return DTWResult(math.sqrt(acc[m - 1, n - 1]), path)


def _reach(allowed: np.ndarray) -> np.ndarray:
    """Cells reachable from (0, 0) by monotone steps inside ``allowed``."""
    m, n = allowed.shape
    out = np.zeros_like(allowed)
    for i in range(m):
        for j in range(n):
            if not allowed[i, j]:
                continue
            if i == 0 and j == 0:
                out[i, j] = True
            else:
                out[i, j] = ((i > 0 and out[i - 1, j]) or (j > 0 and out[i, j - 1])
                             or (i > 0 and j > 0 and out[i - 1, j - 1]))
    return out


def relation_mask(c: GlobalConstraint, m: int, n: int) -> np.ndarray:
    """Boolean ``m x n`` membership mask of the constraint relation."""
    mask = np.zeros((m, n), dtype=bool)
    lo, hi = column_bounds(c, m, n)
    for j in range(n):
        if lo[j] <= hi[j]:
            mask[lo[j]:hi[j] + 1, j] = True
    return mask


def path_mask(c: GlobalConstraint, m: int, n: int) -> np.ndarray:
    """Cells of ``D(m, n)`` lying on at least one admissible path to ``(m, n)``."""
    allowed = relation_mask(c, m, n)
    fwd = _reach(allowed)
    bwd = _reach(allowed[::-1, ::-1])[::-1, ::-1]
    return fwd & bwd


@dataclass(frozen=True)
class DiagonalGrid:
    """The grid digraph ``D(m, n)`` restricted to admissible cells.

    ``terminals`` lists the destination columns ``L`` considered; a path to
    ``(m, L)`` must satisfy the constraint relation of order ``m x L``. By
    default only the classic destination ``(m, n)`` is used. ``mask`` marks
    cells on at least one admissible path to one of the terminals and
    ``lengths_mask[i, j, t]`` whether cell ``(i, j)`` serves terminal ``t``.
    """

    m: int
    n: int
    constraint: GlobalConstraint = NO_CONSTRAINT
    terminals: Optional[tuple[int, ...]] = None
    mask: np.ndarray = field(init=False, repr=False, compare=False)
    lengths_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise WarpingError("grid dimensions must be positive")
        terms = (self.n,) if self.terminals is None else tuple(sorted(set(self.terminals)))
        if any(not 1 <= t <= self.n for t in terms):
            raise WarpingError(f"terminal columns {terms} outside [1, {self.n}]")
        object.__setattr__(self, "terminals", terms)
        per = np.zeros((self.m, self.n, len(terms)), dtype=bool)
        for k, L in enumerate(terms):
            per[:, :L, k] = path_mask(self.constraint, self.m, L)
        object.__setattr__(self, "lengths_mask", per)
        object.__setattr__(self, "mask", per.any(axis=2))

    @property
    def origin(self) -> tuple[int, int]:
        return (1, 1)

    def destinations(self) -> list[tuple[int, int]]:
        """Destinations ``(m, L)`` that admit at least one path."""
        return [(self.m, L) for k, L in enumerate(self.terminals)
                if self.lengths_mask[self.m - 1, L - 1, k]]

    def vertices(self) -> list[tuple[int, int]]:
        """Admissible vertices in column-major lexicographic order (1-based)."""
        cols = np.argwhere(self.mask.T)
        return [(int(i) + 1, int(j) + 1) for j, i in cols]

    def arcs(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """Arcs between admissible vertices, usable by some admissible path."""
        out = []
        lm = self.lengths_mask
        for i, j in self.vertices():
            for di, dj in ((1, 1), (1, 0), (0, 1)):
                u, v = i + di, j + dj
                if u > self.m or v > self.n or not self.mask[u - 1, v - 1]:
                    continue
                # both ends must serve a common terminal
                if np.any(lm[i - 1, j - 1] & lm[u - 1, v - 1]):
                    out.append(((i, j), (u, v)))
        return out

    def window(self, j: int) -> Optional[tuple[int, int]]:
        """Hull of admissible rows in column ``j``."""
        rows = np.flatnonzero(self.mask[:, j - 1])
        if rows.size == 0:
            return None
        return int(rows[0]) + 1, int(rows[-1]) + 1

    def vertex_terminals(self, i: int, j: int) -> tuple[int, ...]:
        return tuple(L for k, L in enumerate(self.terminals) if self.lengths_mask[i - 1, j - 1, k])


def feasible_terminals(c: GlobalConstraint, m: int, n_max: int) -> list[int]:
    """Lengths ``L <= n_max`` such that an admissible ``m x L`` path exists."""
    out = []
    for L in range(1, n_max + 1):
        if not is_compatible(c, m, L):
            continue
        if path_mask(c, m, L)[m - 1, L - 1]:
            out.append(L)
    return out


def enumerate_paths_to_column(m: int, n: int, j: int, c: GlobalConstraint = NO_CONSTRAINT,
                              cap: int = 16) -> list[WarpingPath]:
    """All admissible paths of ``D(m, n)`` from ``(1, 1)`` to ``(m, j)``.

    Paths come in lexicographic order of their vertex sequences. Refuses when
    ``m + n > cap``.
    """
    if m + n > cap:
        raise EnumerationCapError(f"grid {m}x{n} exceeds enumeration cap m+n <= {cap}")
    if not 1 <= j <= n:
        raise WarpingError(f"terminal column {j} outside [1, {n}]")
    allowed = relation_mask(c, m, n)[:, :j]
    good = _reach(allowed) & _reach(allowed[::-1, ::-1])[::-1, ::-1]
    if not good[m - 1, j - 1]:
        return []
    out: list[WarpingPath] = []
    stack: list[tuple[int, int]] = [(0, 0)]

    def walk(i: int, jj: int):
        if (i, jj) == (m - 1, j - 1):
            out.append(WarpingPath(tuple((a + 1, b + 1) for a, b in stack)))
            return
        # lexicographic order of successors: (i, j+1) < (i+1, j) < (i+1, j+1)
        for di, dj in ((0, 1), (1, 0), (1, 1)):
            u, v = i + di, jj + dj
            if u < m and v < j and good[u, v]:
                stack.append((u, v))
                walk(u, v)
                stack.pop()

    walk(0, 0)
    return out


def enumerate_paths(m: int, n: int, c: GlobalConstraint = NO_CONSTRAINT,
                    cap: int = 16) -> list[WarpingPath]:
    """All admissible warping paths of order ``m x n``."""
    return enumerate_paths_to_column(m, n, n, c, cap=cap)
