"""Walks, self-avoiding walks and loop configurations on the complete graph.

Enumerators know nothing about weights: a walk through a zero entry of J
is still listed and simply weighs zero. Weighted sums live in the
``*_two_point`` functions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import linalg
from .model import CouplingModel


@dataclass(frozen=True, order=True)
class Walk:
    vertices: tuple

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("a walk has at least one vertex")
        object.__setattr__(self, "vertices", tuple(self.vertices))

    def __len__(self):
        return len(self.vertices) - 1

    @property
    def edges(self):
        v = self.vertices
        return tuple(zip(v[:-1], v[1:]))

    def visits(self, x) -> int:
        return self.vertices.count(x)

    def weight(self, matrix) -> object:
        """Product of matrix[e] over the edges, with 1-based site labels."""
        w = 1
        for x, y in self.edges:
            w = w * matrix[x - 1][y - 1]
        return w


class SelfAvoidingWalk(Walk):
    def __post_init__(self):
        super().__post_init__()
        v = self.vertices
        if len(v) < 2:
            raise ValueError("a self-avoiding walk has at least one step")
        inner = v[1:-1]
        if len(set(inner)) != len(inner) or set(inner) & {v[0], v[-1]}:
            raise ValueError(f"{v} is not self-avoiding")


@dataclass(frozen=True, order=True)
class Loop:
    """Directed cycle stored as the rotation starting at its minimal vertex."""

    vertices: tuple

    def __post_init__(self):
        v = tuple(self.vertices)
        if not v or len(set(v)) != len(v):
            raise ValueError(f"loop vertices must be distinct and nonempty: {v}")
        i = v.index(min(v))
        object.__setattr__(self, "vertices", v[i:] + v[:i])

    def __len__(self):
        return len(self.vertices)

    @property
    def edges(self):
        v = self.vertices
        return tuple(zip(v, v[1:] + v[:1]))

    @property
    def is_self_loop(self):
        return len(self.vertices) == 1

    def weight(self, matrix):
        w = 1
        for x, y in self.edges:
            w = w * matrix[x - 1][y - 1]
        return w


@dataclass(frozen=True)
class LoopConfig:
    loops: frozenset

    def __post_init__(self):
        loops = frozenset(self.loops)
        seen = set()
        for lp in loops:
            if seen & set(lp.vertices):
                raise ValueError("loops in a configuration must be vertex-disjoint")
            seen |= set(lp.vertices)
        object.__setattr__(self, "loops", loops)

    @property
    def vertices(self):
        return frozenset(v for lp in self.loops for v in lp.vertices)

    def __len__(self):
        return sum(len(lp) for lp in self.loops)

    def weight(self, matrix):
        w = 1
        for lp in self.loops:
            w = w * lp.weight(matrix)
        return w

    def sort_key(self):
        return sorted(lp.vertices for lp in self.loops)


def enumerate_walks_upto(size: int, a: int, b: int, maxlen: int) -> list:
    """All walks a -> b with at most ``maxlen`` steps, length then lexicographic."""
    out = []
    sites = range(1, size + 1)
    for n in range(maxlen + 1):
        if n == 0:
            if a == b:
                out.append(Walk((a,)))
            continue
        for mid in itertools.product(sites, repeat=n - 1):
            out.append(Walk((a,) + mid + (b,)))
    return out


def srw_two_point_series(model: CouplingModel, a: int, b: int, maxlen: int):
    """Partial walk sum sum_{n<=maxlen} (D^-1 (J D^-1)^n)_{ab} and its tail bound.

    The diagonal used is d_x + v_x. Requires rho < 1.
    """
    m = model.size
    dd = [model.diag[x] + model.potential[x] for x in range(m)]
    rho = max(sum(abs(complex(model.offdiag[x][y])) for y in range(m)) / abs(complex(dd[x])) for x in range(m))
    if rho >= 1:
        raise ValueError(f"walk series requires diagonal dominance, rho = {rho:.6g}")
    dinv = [1 / d for d in dd]
    # row vector e_a D^-1 (J D^-1)^n, advanced one step at a time
    row = [dinv[a - 1] if y == a - 1 else 0 * dinv[0] for y in range(m)]
    total = row[b - 1]
    for _ in range(maxlen):
        row = [sum((row[x] * model.offdiag[x][y] for x in range(m)), 0) * dinv[y] for y in range(m)]
        total = total + row[b - 1]
    dmax = max(abs(complex(x)) for x in dinv)
    tail = dmax * rho ** (maxlen + 1) / (1 - rho)
    return total, tail


def enumerate_saws(a: int, b: int, interior) -> list:
    """Self-avoiding walks a -> b whose interior vertices are drawn from ``interior``."""
    pool = sorted(set(interior) - {a, b})
    out = []
    for k in range(len(pool) + 1):
        chunk = [SelfAvoidingWalk((a,) + mid + (b,)) for mid in itertools.permutations(pool, k)]
        out.extend(sorted(chunk))
    return out


def enumerate_loops(vertex_set) -> list:
    """Every directed cycle (self-loops included) on a subset of ``vertex_set``."""
    verts = sorted(set(vertex_set))
    out = []
    for k in range(1, len(verts) + 1):
        for subset in itertools.combinations(verts, k):
            first, rest = subset[0], subset[1:]
            for tail in itertools.permutations(rest):
                out.append(Loop((first,) + tail))
    return out


def enumerate_loop_configs(vertex_set, self_loops: bool = True) -> list:
    """All sets of vertex-disjoint loops supported in ``vertex_set``, including the empty one."""
    verts = tuple(sorted(set(vertex_set)))

    def rec(remaining):
        if not remaining:
            yield ()
            return
        first, rest = remaining[0], remaining[1:]
        # first vertex uncovered
        for cfg in rec(rest):
            yield cfg
        # first vertex on a loop through some of the others
        for k in range(len(rest) + 1):
            if k == 0 and not self_loops:
                continue
            for others in itertools.combinations(rest, k):
                left = tuple(v for v in rest if v not in others)
                for order in itertools.permutations(others):
                    lp = Loop((first,) + order)
                    for cfg in rec(left):
                        yield (lp,) + cfg

    configs = [LoopConfig(frozenset(c)) for c in rec(verts)]
    configs.sort(key=lambda c: (len(c.loops), c.sort_key()))
    return configs


def saw_two_point(model: CouplingModel, a: int, b: int):
    """Strictly self-avoiding two-point function: sum of C^omega over SAWs a -> b."""
    c = model.cov.entries
    interior = [x for x in model.sites if x not in (a, b)]
    return sum((w.weight(c) for w in enumerate_saws(a, b, interior)), 0 * c[0][0])


def loop_two_point(model: CouplingModel, a: int, b: int, wick_ordered: bool = False):
    """SAW in a background of mutually avoiding loops; self-loops dropped if ``wick_ordered``."""
    c = model.cov.entries
    interior = [x for x in model.sites if x not in (a, b)]
    cache = {}
    total = 0 * c[0][0]
    for w in enumerate_saws(a, b, interior):
        rest = frozenset(interior) - set(w.vertices)
        if rest not in cache:
            cache[rest] = sum(
                (g.weight(c) for g in enumerate_loop_configs(rest, self_loops=not wick_ordered)), 0 * c[0][0]
            )
        total = total + w.weight(c) * cache[rest]
    return total


def loop_cancellation_ledger(model: CouplingModel, vertex_set):
    """Cycle-by-cycle bookkeeping of the boson/fermion loop cancellation.

    For each nonempty Y in ``vertex_set`` and each permutation sigma of Y,
    every cycle c contributes W_c from the bosonic side and -W_c from the
    fermionic side. Returns a list of per-cycle entries and the grand total
    of the disjoint (X1, X2) expansion, which must vanish.
    """
    c = model.cov.entries
    verts = sorted(set(vertex_set))
    entries = []
    expansion_total = 0
    for k in range(1, len(verts) + 1):
        for ys in itertools.combinations(verts, k):
            for image in itertools.permutations(ys):
                sigma = dict(zip(ys, image))
                for cyc in linalg.cycles(sigma):
                    w = Loop(cyc).weight(c)
                    entries.append({"Y": ys, "cycle": cyc, "boson": w, "fermion": -w, "net": w + (-w)})
            # sum over splittings of Y into boson part X1 and fermion part X2
            for r in range(k + 1):
                for x1 in itertools.combinations(ys, r):
                    x2 = tuple(y for y in ys if y not in x1)
                    expansion_total = expansion_total + _cycle_sum(c, x1, 1) * _cycle_sum(c, x2, -1)
    return entries, expansion_total


def _cycle_sum(c, xs, loop_sign):
    """sum_{sigma in S(xs)} prod_cycles (loop_sign * W_c)."""
    total = 0
    for image in itertools.permutations(xs):
        sigma = dict(zip(xs, image))
        term = 1
        for cyc in linalg.cycles(sigma):
            term = term * (loop_sign * Loop(cyc).weight(c))
        total = total + term
    return total

