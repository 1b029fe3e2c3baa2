"""Exact bosonic, fermionic and mixed Gaussian expectations.

The pairing of a form K with exp(-S_A) factorizes over words: a zero form
f times a fermion word F integrates to E_C[f] times a determinant of C
minors. ``mixed_expectation`` uses that route. ``mixed_expectation_oracle``
instead wedges K against the fermionic expansion of exp(-S_A), reads off
the top-degree coefficient and integrates it against the Gaussian measure,
with Laplace-expansion determinants and explicit permutation sums.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from . import linalg
from .algebra import (
    Form,
    Polynomial,
    exp_action_expansion,
    form_of_tau_function,
    merge_sign,
    psi_index,
    psibar_index,
    tau,
    top_mask,
    word_bits,
)
from .model import CouplingModel
from .scalars import is_exact

# guard on sum(k_x) for local-time moments; the number of orderings grows factorially
MOMENT_CAP = 6

# oracle cost grows like 4^M times the Wick sums
ORACLE_MAX_SITES = 6


def _cov(model):
    return model.cov.entries


def _zero(model):
    return 0 * _cov(model)[0][0]


# --- bosonic -----------------------------------------------------------------

def boson_moment(model: CouplingModel, phibar_sites, phi_sites):
    """E[prod phibar_{x_l} prod phi_{y_m}] = permanent of C[x; y] (repeats allowed)."""
    if len(phibar_sites) != len(phi_sites):
        return _zero(model)
    c = _cov(model)
    sub = [[c[x - 1][y - 1] for y in phi_sites] for x in phibar_sites]
    return linalg.permanent(sub)


def _monomial_sites(exps):
    phibar, phi = [], []
    for i, k in enumerate(exps):
        x = i // 2 + 1
        (phi if i % 2 == 0 else phibar).extend([x] * k)
    return phibar, phi


def boson_expectation(model: CouplingModel, poly: Polynomial, _cache=None):
    """Gaussian expectation of a polynomial in phi, phibar, monomial by monomial."""
    cache = {} if _cache is None else _cache
    total = _zero(model)
    for exps, coef in poly.terms.items():
        phibar, phi = _monomial_sites(exps)
        if len(phibar) != len(phi):
            continue
        key = (tuple(sorted(phibar)), tuple(sorted(phi)))
        if key not in cache:
            cache[key] = boson_moment(model, key[0], key[1])
        total = total + coef * cache[key]
    return total


# --- fermionic ---------------------------------------------------------------

def fermion_moment(model: CouplingModel, mask: int):
    """Integral of exp(-S_A) against the fermion word ``mask`` (global order).

    Reordering the word to psibar_{i1} psi_{j1} psibar_{i2} psi_{j2} ...
    (each list ascending) costs a permutation sign; the reordered word
    integrates to det C[i; j].
    """
    bits = list(word_bits(mask))
    psibars = [i // 2 + 1 for i in bits if i % 2 == 1]
    psis = [i // 2 + 1 for i in bits if i % 2 == 0]
    if len(psibars) != len(psis):
        return _zero(model)
    if not bits:
        return Fraction(1) if is_exact(_cov(model)[0][0]) else 1.0 + 0j
    target = []
    for i, j in zip(psibars, psis):
        target += [psibar_index(i), psi_index(j)]
    sign = linalg.permutation_sign(target)
    c = _cov(model)
    minor = [[c[i - 1][j - 1] for j in psis] for i in psibars]
    d = linalg.det(minor)
    return d if sign > 0 else -d


def mixed_expectation(model: CouplingModel, f: Form):
    """Integral of exp(-S_A) K, linear over words via factorization."""
    if f.m != model.size:
        raise ValueError("form and model have different site counts")
    cache = {}
    total = _zero(model)
    for mask, poly in f.terms.items():
        fm = fermion_moment(model, mask)
        if fm == 0:
            continue
        total = total + boson_expectation(model, poly, cache) * fm
    return total


def mixed_expectation_oracle(model: CouplingModel, f: Form):
    """Independent brute-force evaluation of the mixed expectation.

    The top-degree word psi_1 psibar_1 ... psi_M psibar_M equals
    (-1/pi)^M du_1 dv_1 ... du_M dv_M, and the Lebesgue integral of
    exp(-phi A phibar) is pi^M / det A, so the pairing is
    (-1)^M / det A times the Gaussian expectation of the top coefficient.
    """
    m = model.size
    if m > ORACLE_MAX_SITES:
        raise ValueError(f"oracle limited to M <= {ORACLE_MAX_SITES}")
    a = model.form.entries
    expansion = exp_action_expansion(a)
    full = top_mask(m)
    top = Polynomial(2 * m)
    for w1, p1 in expansion.terms.items():
        w2 = full ^ w1
        p2 = f.terms.get(w2)
        if p2 is None:
            continue
        prod = p1 * p2
        top = top + (prod if merge_sign(w1, w2) > 0 else -prod)
    c = _cov(model)
    total = _zero(model)
    for exps, coef in top.terms.items():
        phibar, phi = _monomial_sites(exps)
        if len(phibar) != len(phi):
            continue
        total = total + coef * _wick_naive(c, phibar, phi)
    norm = linalg.det_laplace(a)
    return total / norm if m % 2 == 0 else -total / norm


def _wick_naive(c, phibar, phi):
    total = 0
    for perm in itertools.permutations(phi):
        prod = 1
        for x, y in zip(phibar, perm):
            prod = prod * c[x - 1][y - 1]
        total = total + prod
    return total


def top_word_constant(matrix):
    """Coefficient of the full word in the fermionic expansion of exp(-S_A)."""
    m = len(matrix)
    return exp_action_expansion(matrix).coefficient(top_mask(m)).constant_term()


# --- functions of tau ----------------------------------------------------------

def tau_expectation(model: CouplingModel, F: Polynomial):
    """Integral of exp(-S_A) F(tau); equals F(0)."""
    return mixed_expectation(model, form_of_tau_function(F))


def phibar_phi(m, a, b) -> Form:
    return Form.phibar(m, a) * Form.phi(m, b)


def tau_weighted_two_point(model: CouplingModel, F: Polynomial, a: int, b: int):
    """Integral of exp(-S_A) F(tau) phibar_a phi_b."""
    m = model.size
    return mixed_expectation(model, phibar_phi(m, a, b) * form_of_tau_function(F))


def _normalize_powers(model, powers):
    if isinstance(powers, dict):
        k = [0] * model.size
        for x, p in powers.items():
            k[x - 1] = p
        return k
    k = list(powers)
    if len(k) != model.size:
        raise ValueError("need one power per site")
    return k


def _distinct_orderings(counts):
    """Distinct sequences using site x exactly counts[x] times (1-based sites)."""
    total = sum(counts.values())
    if total == 0:
        yield ()
        return
    for x in sorted(counts):
        if counts[x]:
            counts[x] -= 1
            for rest in _distinct_orderings(counts):
                yield (x,) + rest
            counts[x] += 1


def local_time_moment_oracle(model: CouplingModel, a: int, b: int, powers, cap: int = MOMENT_CAP):
    """E_a[prod_x L_x^{k_x} 1{X(zeta-)=b}] / (d_b pi_{b,cemetery}), exactly.

    The k-th derivative of the resolvent (D + V - J)^{-1} in the potential
    inserts a covariance step at each differentiated site, in every order.
    Copies of the same site are distinguishable insertions, so each distinct
    ordering of the multiset is counted prod_x k_x! times.
    """
    k = _normalize_powers(model, powers)
    if any(p < 0 for p in k):
        raise ValueError("powers must be nonnegative")
    if sum(k) > cap:
        raise ValueError(f"moment order {sum(k)} exceeds cap {cap}")
    c = _cov(model)
    counts = {x: k[x - 1] for x in model.sites if k[x - 1]}
    total = _zero(model)
    for order in _distinct_orderings(counts):
        path = (a,) + order + (b,)
        prod = 1
        for x, y in zip(path[:-1], path[1:]):
            prod = prod * c[x - 1][y - 1]
        total = total + prod
    return total * math.prod(math.factorial(p) for p in k)


# --- linear algebra identity ---------------------------------------------------

def generalized_cramer_check(matrix, rows, cols):
    """(det C[rows; cols], det Ahat / det A * eps_rows * eps_cols), 1-based indices.

    Ahat deletes the ``cols`` rows and the ``rows`` columns of A; eps_s is
    the sign of the permutation that moves s to the front, keeping the
    remaining indices in order.
    """
    n = len(matrix)
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols) or len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ValueError("index sequences must be duplicate-free and of equal length")
    if not all(1 <= i <= n for i in rows + cols):
        raise ValueError("index out of range")
    c = linalg.inverse(matrix)
    lhs = linalg.det([[c[i - 1][j - 1] for j in cols] for i in rows])
    keep_r = [r for r in range(1, n + 1) if r not in cols]
    keep_c = [s for s in range(1, n + 1) if s not in rows]
    ahat = [[matrix[r - 1][s - 1] for s in keep_c] for r in keep_r]
    det_a = linalg.det_laplace(matrix)
    if det_a == 0:
        raise linalg.SingularMatrixError("singular matrix")
    eps = linalg.permutation_sign(rows + keep_c) * linalg.permutation_sign(cols + keep_r)
    rhs = linalg.det_laplace(ahat) / det_a * eps
    return lhs, rhs


# --- representation integrands --------------------------------------------------

def saw_integrand(m, a, b) -> Form:
    """phibar_a phi_b prod_{x != a, b} (1 + tau_x), built by wedge products."""
    f = phibar_phi(m, a, b)
    for x in range(1, m + 1):
        if x not in (a, b):
            f = f * (tau(m, x) + Fraction(1))
    return f


def saw_grassmann(model: CouplingModel, a: int, b: int):
    return mixed_expectation(model, saw_integrand(model.size, a, b))


def loop_bosonic(model: CouplingModel, a: int, b: int, wick_ordered: bool = False):
    """E_C[phibar_a phi_b prod_{x != a, b} (1 + phi_x phibar_x [- C_xx])]."""
    m = model.size
    nv = 2 * m
    poly = Polynomial.variable(nv, psibar_index(a)) * Polynomial.variable(nv, psi_index(b))
    for x in model.sites:
        if x in (a, b):
            continue
        factor = Polynomial.variable(nv, psi_index(x)) * Polynomial.variable(nv, psibar_index(x)) + Fraction(1)
        if wick_ordered:
            factor = factor - model.C(x, x)
        poly = poly * factor
    return boson_expectation(model, poly)


def loop_expansion_total(model: CouplingModel, vertex_set):
    """sum over disjoint X1, X2 of E[prod_{X1} phi phibar] * integral of prod_{X2} psi psibar.

    Term-by-term expansion of the integral of exp(-S_A) prod_X (1 + tau_x); equals 1.
    """
    verts = sorted(set(vertex_set))
    total = _zero(model)
    for assignment in itertools.product((0, 1, 2), repeat=len(verts)):
        x1 = [v for v, s in zip(verts, assignment) if s == 1]
        x2 = [v for v, s in zip(verts, assignment) if s == 2]
        mask = 0
        for v in x2:
            mask |= 0b11 << (2 * (v - 1))
        total = total + boson_moment(model, x1, x1) * fermion_moment(model, mask)
    return total


def ibp_sides(model: CouplingModel, a: int, F: Form):
    """(integral of phibar_a F, sum_v C_av * integral of dF/dphi_v)."""
    m = model.size
    lhs = mixed_expectation(model, Form.phibar(m, a) * F)
    rhs = _zero(model)
    for v in model.sites:
        rhs = rhs + model.C(a, v) * mixed_expectation(model, F.diff_phi(v))
    return lhs, rhs


def sum_tau_squared(m) -> Polynomial:
    """sum_x t_x^2 as a polynomial in M variables."""
    p = Polynomial(m)
    for x in range(m):
        p = p + Polynomial.variable(m, x, 2)
    return p


def wsaw_taylor_grassmann(model: CouplingModel, a: int, b: int, lam, order: int):
    """g-Taylor coefficients of the integral of exp(-S_A - g sum tau^2 - lam sum tau) phibar_a phi_b.

    exp(-lam sum tau) is absorbed into the action (A -> A + lam I), so each
    coefficient (-1)^k / k! times the integral of phibar_a phi_b (sum tau^2)^k
    is a polynomial-class mixed expectation.
    """
    shifted = model.shifted(lam) if lam != 0 else model
    s2 = sum_tau_squared(model.size)
    out = []
    for k in range(order + 1):
        val = tau_weighted_two_point(shifted, s2 ** k, a, b)
        out.append(val * Fraction((-1) ** k, math.factorial(k)))
    return out
