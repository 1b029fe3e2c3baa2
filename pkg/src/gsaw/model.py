"""Coupling models: the site set, the matrices D, J, V and their covariance.

Sites are labelled 1..M in every public function; matrices are stored as
0-indexed lists of rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from . import linalg
from .scalars import (
    EXACT,
    FLOAT,
    MODES,
    coerce,
    conj,
    imag_part,
    is_exact,
    real_part,
    to_json_scalar,
)

# pivot threshold for the floating positivity certificate
PIVOT_THRESHOLD = 1e-12


class ModelError(ValueError):
    """Malformed model input."""


@dataclass(frozen=True)
class CouplingModel:
    size: int
    diag: tuple
    offdiag: tuple  # tuple of row tuples, zero diagonal
    potential: tuple = None
    scalar_field: str = EXACT

    def __post_init__(self):
        if self.scalar_field not in MODES:
            raise ModelError(f"unknown arithmetic mode {self.scalar_field!r}")
        m = self.size
        if not isinstance(m, int) or m < 1:
            raise ModelError("size must be an integer >= 1")
        mode = self.scalar_field
        diag = tuple(coerce(x, mode) for x in self.diag)
        if len(diag) != m:
            raise ModelError(f"diag has {len(diag)} entries, expected {m}")
        if len(self.offdiag) != m or any(len(r) != m for r in self.offdiag):
            raise ModelError(f"offdiag must be {m}x{m}")
        offdiag = tuple(tuple(coerce(x, mode) for x in row) for row in self.offdiag)
        pot = self.potential if self.potential is not None else [0] * m
        potential = tuple(coerce(x, mode) for x in pot)
        if len(potential) != m:
            raise ModelError(f"potential has {len(potential)} entries, expected {m}")
        for x in range(m):
            if offdiag[x][x] != 0:
                raise ModelError(f"J[{x + 1},{x + 1}] must be zero")
            if diag[x] == 0:
                raise ModelError(f"d_{x + 1} must be nonzero")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)
        object.__setattr__(self, "potential", potential)

    @property
    def mode(self):
        return self.scalar_field

    @property
    def sites(self):
        return range(1, self.size + 1)

    def J(self, x, y):
        return self.offdiag[x - 1][y - 1]

    def d(self, x):
        return self.diag[x - 1]

    def v(self, x):
        return self.potential[x - 1]

    def with_mode(self, mode):
        if mode == self.scalar_field:
            return self
        return CouplingModel(
            self.size,
            [_portable(x) for x in self.diag],
            [[_portable(x) for x in row] for row in self.offdiag],
            [_portable(x) for x in self.potential],
            mode,
        )

    def shifted(self, shift):
        """Same model with every d_x replaced by d_x + shift."""
        return CouplingModel(
            self.size, [d + shift for d in self.diag], self.offdiag, self.potential, self.scalar_field
        )

    def with_potential(self, potential):
        return CouplingModel(self.size, self.diag, self.offdiag, potential, self.scalar_field)

    def matrix(self, include_potential=True):
        """A = D + V - J (or D - J)."""
        m = self.size
        return [
            [
                (self.diag[x] + (self.potential[x] if include_potential else 0)) if x == y else -self.offdiag[x][y]
                for y in range(m)
            ]
            for x in range(m)
        ]

    @cached_property
    def form(self) -> "QuadraticForm":
        return QuadraticForm(self.matrix())

    @cached_property
    def cov(self) -> "Covariance":
        return covariance(self.form)

    def C(self, x, y):
        return self.cov.entries[x - 1][y - 1]

    @cached_property
    def rho(self) -> float:
        return contraction_ratio(self.diag, self.offdiag)

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "diag": [to_json_scalar(x) for x in self.diag],
            "offdiag": [[to_json_scalar(x) for x in row] for row in self.offdiag],
            "potential": [to_json_scalar(x) for x in self.potential],
            "arithmetic": self.scalar_field,
        }


def _portable(x):
    # exact -> float keeps value; float -> exact goes through limit_denominator
    if is_exact(x):
        return [str(real_part(x)), str(imag_part(x))]
    return complex(x)


@dataclass(frozen=True)
class QuadraticForm:
    entries: list = field(hash=False)

    @property
    def size(self):
        return len(self.entries)

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for row in self.entries for x in row)

    @cached_property
    def hermitian_positive(self):
        return hermitian_part_positive(self)

    @cached_property
    def det(self):
        return linalg.det(self.entries)


@dataclass(frozen=True)
class Covariance:
    entries: list = field(hash=False)
    source: QuadraticForm = field(hash=False, repr=False)

    def __getitem__(self, xy):
        x, y = xy
        return self.entries[x - 1][y - 1]


def covariance(form: QuadraticForm) -> Covariance:
    """C = A^{-1}; exact in rational mode, residual-checked in float mode."""
    inv = linalg.inverse(form.entries)
    if not form.exact:
        a = np.array(form.entries, dtype=complex)
        resid = np.max(np.abs(a @ np.array(inv) - np.eye(len(inv))))
        if resid >= 1e-12:
            raise linalg.SingularMatrixError(f"inverse residual {resid:.3g} too large")
    return Covariance(inv, form)


def hermitian_part_positive(form: QuadraticForm):
    """True / False, or None when the floating certificate is indeterminate."""
    a = form.entries
    n = len(a)
    h = [[(a[i][j] + conj(a[j][i])) / 2 for j in range(n)] for i in range(n)]
    if form.exact:
        for k in range(1, n + 1):
            minor = linalg.det([row[:k] for row in h[:k]])
            if real_part(minor) <= 0:
                return False
        return True
    # LDL^H without pivoting; pivots of a positive definite matrix stay positive
    m = np.array(h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(m))))
    for k in range(n):
        p = m[k, k].real
        if abs(p) <= PIVOT_THRESHOLD * scale:
            return None
        if p < 0:
            return False
        m[k + 1:, k + 1:] -= np.outer(m[k + 1:, k], m[k, k + 1:]) / p
    return True


def contraction_ratio(diag, offdiag) -> float:
    """rho = max_x sum_y |J_xy / d_x|."""
    return max(
        math.fsum(abs(complex(offdiag[x][y])) for y in range(len(diag))) / abs(complex(diag[x]))
        for x in range(len(diag))
    )


@dataclass(frozen=True)
class ValidationReport:
    zero_diagonal: bool
    diagonally_dominant: bool
    rho: float
    hermitian_positive: object  # True / False / None (indeterminate)
    markov_valid: bool
    markov_reasons: tuple = ()

    @property
    def ok(self) -> bool:
        return self.zero_diagonal and self.diagonally_dominant

    def as_dict(self):
        return {
            "zero_diagonal": self.zero_diagonal,
            "diagonally_dominant": self.diagonally_dominant,
            "rho": self.rho,
            "hermitian_positive": (
                "indeterminate" if self.hermitian_positive is None else self.hermitian_positive
            ),
            "markov_valid": self.markov_valid,
            "markov_reasons": list(self.markov_reasons),
        }


def validate_model(model: CouplingModel) -> ValidationReport:
    """Check every hypothesis; failures are reported, never raised."""
    m = model.size
    zero_diag = all(model.offdiag[x][x] == 0 for x in range(m))
    rho = model.rho
    if all(is_exact(x) for x in model.diag) and all(is_exact(x) for r in model.offdiag for x in r):
        dominant = _exact_dominance(model)
    else:
        dominant = rho < 1
    herm = QuadraticForm(model.matrix(include_potential=False)).hermitian_positive
    reasons = []
    for x in range(m):
        d = model.diag[x]
        if imag_part(d) != 0 or real_part(d) <= 0:
            reasons.append(f"d_{x + 1} is not a positive real")
        for y in range(m):
            j = model.offdiag[x][y]
            if imag_part(j) != 0 or real_part(j) < 0:
                reasons.append(f"J_{x + 1},{y + 1} is not a nonnegative real")
    return ValidationReport(zero_diag, dominant, rho, herm, not reasons, tuple(reasons))


def _exact_dominance(model) -> bool:
    # |J| is irrational for complex entries; compare sums of moduli in floats
    # only when an entry is genuinely complex
    for x in range(model.size):
        d = model.diag[x]
        row = model.offdiag[x]
        if imag_part(d) == 0 and all(imag_part(j) == 0 for j in row):
            if sum(abs(real_part(j)) for j in row) >= abs(real_part(d)):
                return False
        elif math.fsum(abs(complex(j)) for j in row) >= abs(complex(d)):
            return False
    return True


# --- model files -----------------------------------------------------------

def model_from_json(data: dict, mode=None) -> CouplingModel:
    missing = [k for k in ("size", "diag", "offdiag") if k not in data]
    if missing:
        raise ModelError(f"missing keys: {', '.join(missing)}")
    arithmetic = mode or data.get("arithmetic", EXACT)
    if arithmetic == "exact-rational-complex":
        arithmetic = EXACT
    elif arithmetic == "floating-complex":
        arithmetic = FLOAT
    try:
        return CouplingModel(
            data["size"], data["diag"], data["offdiag"], data.get("potential"), arithmetic
        )
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(str(exc)) from exc


def load_model(path, mode=None) -> CouplingModel:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise ModelError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from exc
    if not isinstance(data, dict):
        raise ModelError(f"{path}: top level must be an object")
    return model_from_json(data, mode)


def save_model(model: CouplingModel, path):
    Path(path).write_text(json.dumps(model.to_json(), indent=2) + "\n")


# --- shipped fixtures ------------------------------------------------------

FIXTURE_DIR = Path(__file__).parent / "fixtures"
FIXTURES = ("i1", "i2", "i3")


def fixture(name: str, mode=EXACT) -> CouplingModel:
    return load_model(FIXTURE_DIR / f"{name.lower()}.json", mode)


def homogeneous(size, d, j, mode=EXACT) -> CouplingModel:
    """Complete graph with d_x = d and J_xy = j for x != y."""
    off = [[0 if x == y else j for y in range(size)] for x in range(size)]
    return CouplingModel(size, [d] * size, off, None, mode)


def random_model(rng, size, complex_entries=False, mode=EXACT) -> CouplingModel:
    """Random diagonally dominant model with small-denominator rationals.

    ``rng`` is a ``random.Random``. Entries of J are nonnegative unless
    ``complex_entries``, in which case they get random imaginary parts and
    |re| + |im| is kept below the row budget.
    """
    diag = []
    off = [[0] * size for _ in range(size)]
    for x in range(size):
        d = Fraction(rng.randint(2, 9), rng.randint(1, 3))
        diag.append(d)
        budget = d * Fraction(rng.randint(1, 9), 10)
        others = [y for y in range(size) if y != x]
        weights = [rng.randint(0, 4) for _ in others]
        tot = sum(weights) or 1
        for y, w in zip(others, weights):
            share = budget * Fraction(w, tot)
            if complex_entries and w:
                t = Fraction(rng.randint(0, 4), 4)
                off[x][y] = [str(share * (1 - t)), str(share * t * rng.choice((-1, 1)))]
            else:
                off[x][y] = share
    model = CouplingModel(size, diag, off, None, EXACT)
    return model if mode == EXACT else model.with_mode(mode)
