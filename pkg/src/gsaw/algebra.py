"""Differential forms with polynomial coefficients.

A form on M sites lives in the exterior algebra over the 2M generators
psi_1 < psibar_1 < psi_2 < psibar_2 < ... with coefficients polynomial in
the commuting variables phi_1, phibar_1, phi_2, ... . Generator ``2(x-1)``
is psi_x and ``2(x-1)+1`` is psibar_x; the same index numbers the
commuting variables, so variable ``i`` is the one whose differential is
generator ``i``.

Normalization: the differential of phi_x is psi_x itself, and the
interior product contracts psi_x -> -phi_x, psibar_x -> +phibar_x. With
these unit constants Q v_xx = tau_x for v_xy = phi_x psibar_y, and
Q^2 is the rotation Lie derivative with eigenvalue -1 on phi_x. The
(2 pi i)^{1/2} scale of the textbook convention multiplies d, iota and
Q by the same constant and cancels in every identity checked here; see
``UNNORMALIZED_SCALE``.
"""

from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction
from operator import add

from .scalars import format_scalar, is_exact, is_zero

# d, iota and Q in the textbook convention equal this constant times ours
UNNORMALIZED_SCALE = cmath.sqrt(2j * math.pi)


def _prune(x) -> bool:
    return x == 0 if is_exact(x) else x == 0j


# --- polynomials -----------------------------------------------------------

class Polynomial:
    """Sparse polynomial: exponent tuple -> coefficient."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for exps, c in terms.items():
                if len(exps) != nvars:
                    raise ValueError("exponent vector has the wrong length")
                if any(e < 0 for e in exps):
                    raise ValueError("negative exponent")
                if not _prune(c):
                    self.terms[tuple(exps)] = c

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, i, power=1):
        exps = [0] * nvars
        exps[i] = power
        return cls(nvars, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, exps, c=Fraction(1)):
        return cls(len(exps), {tuple(exps): c})

    def copy(self):
        p = Polynomial(self.nvars)
        p.terms = dict(self.terms)
        return p

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def _lift(self, other):
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials over different variable sets")
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if _prune(s):
                out.pop(e, None)
            else:
                out[e] = s
        p = Polynomial(self.nvars)
        p.terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Polynomial(self.nvars)
        p.terms = {e: -c for e, c in self.terms.items()}
        return p

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c):
        if _prune(c):
            return Polynomial(self.nvars)
        p = Polynomial(self.nvars)
        p.terms = {e: c * v for e, v in self.terms.items()}
        return p

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._lift(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(map(add, e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        p = Polynomial(self.nvars)
        p.terms = {e: c for e, c in out.items() if not _prune(c)}
        return p

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n):
        result = Polynomial.constant(self.nvars, Fraction(1))
        for _ in range(n):
            result = result * self
        return result

    def diff(self, i):
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = e[:i] + (k - 1,) + e[i + 1:]
                out[e2] = c * k
        p = Polynomial(self.nvars)
        p.terms = out
        return p

    def diff_multi(self, alpha):
        p = self
        for i, k in enumerate(alpha):
            for _ in range(k):
                p = p.diff(i)
        return p

    def evaluate(self, point):
        total = 0
        for e, c in self.terms.items():
            term = c
            for x, k in zip(point, e):
                if k:
                    term = term * x ** k
            total = total + term
        return total

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self.terms == other.terms
        return self == self._lift(other)

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def almost_equal(self, other, tol=1e-10):
        diff = self - other
        return all(is_zero(c, tol) for c in diff.terms.values())

    def __repr__(self):
        return f"Polynomial({self.nvars}, {self.terms!r})"

    def __str__(self):
        return format_polynomial(self, [f"t{i + 1}" for i in range(self.nvars)])


def format_polynomial(p: Polynomial, names) -> str:
    if not p.terms:
        return "0"
    parts = []
    for e in sorted(p.terms, key=lambda e: (sum(e), tuple(-k for k in e))):
        mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
        coef = format_scalar(p.terms[e])
        parts.append(f"({coef})" + (f"*{mono}" if mono else ""))
    return " + ".join(parts)


# --- fermion words ---------------------------------------------------------

def psi_index(x: int) -> int:
    return 2 * (x - 1)


def psibar_index(x: int) -> int:
    return 2 * (x - 1) + 1


def generator_name(i: int) -> str:
    x = i // 2 + 1
    return f"psi{x}" if i % 2 == 0 else f"psibar{x}"


def variable_name(i: int) -> str:
    x = i // 2 + 1
    return f"phi{x}" if i % 2 == 0 else f"phibar{x}"


def word_bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def merge_sign(w1: int, w2: int) -> int:
    """Sign of w1 ^ w2 relative to sorted order; w1, w2 disjoint."""
    parity = 0
    for j in word_bits(w2):
        parity ^= bin(w1 >> (j + 1)).count("1") & 1
    return -1 if parity else 1


def word_from_sequence(gens):
    """(sign, mask) for the ordered product of generator indices; sign 0 if repeated."""
    mask, sign = 0, 1
    for g in gens:
        bit = 1 << g
        if mask & bit:
            return 0, 0
        sign *= merge_sign(mask, bit)
        mask |= bit
    return sign, mask


# --- forms -----------------------------------------------------------------

class Form:
    """Sparse map word mask -> Polynomial over 2M commuting variables."""

    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms=None):
        self.m = m
        self.terms = {}
        if terms:
            for w, p in terms.items():
                if p:
                    self.terms[w] = p

    @property
    def nvars(self):
        return 2 * self.m

    # constructors
    @classmethod
    def scalar(cls, m, c):
        return cls(m, {0: Polynomial.constant(2 * m, c)})

    @classmethod
    def zero(cls, m):
        return cls(m)

    @classmethod
    def from_poly(cls, m, poly: Polynomial, mask=0):
        return cls(m, {mask: poly})

    @classmethod
    def phi(cls, m, x):
        return cls.from_poly(m, Polynomial.variable(2 * m, psi_index(x)))

    @classmethod
    def phibar(cls, m, x):
        return cls.from_poly(m, Polynomial.variable(2 * m, psibar_index(x)))

    @classmethod
    def psi(cls, m, x):
        return cls.from_poly(m, Polynomial.constant(2 * m, Fraction(1)), 1 << psi_index(x))

    @classmethod
    def psibar(cls, m, x):
        return cls.from_poly(m, Polynomial.constant(2 * m, Fraction(1)), 1 << psibar_index(x))

    @classmethod
    def word(cls, m, gens, c=Fraction(1)):
        """Ordered product of generator indices, times scalar c."""
        sign, mask = word_from_sequence(gens)
        if sign == 0:
            return cls(m)
        return cls.from_poly(m, Polynomial.constant(2 * m, c * sign), mask)

    def copy(self):
        return Form(self.m, dict(self.terms))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def _lift(self, other):
        if isinstance(other, Form):
            if other.m != self.m:
                raise ValueError("forms on different site sets")
            return other
        if isinstance(other, Polynomial):
            return Form.from_poly(self.m, other)
        return Form.scalar(self.m, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for w, p in other.terms.items():
            s = out[w] + p if w in out else p
            if s:
                out[w] = s
            else:
                out.pop(w, None)
        return Form(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return Form(self.m, {w: -p for w, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        """Wedge product (scalars and polynomials act by multiplication)."""
        if not isinstance(other, (Form, Polynomial)):
            return Form(self.m, {w: p.scale(other) for w, p in self.terms.items()})
        other = self._lift(other)
        out = {}
        for w1, p1 in self.terms.items():
            for w2, p2 in other.terms.items():
                if w1 & w2:
                    continue
                prod = p1 * p2
                if merge_sign(w1, w2) < 0:
                    prod = -prod
                w = w1 | w2
                out[w] = out[w] + prod if w in out else prod
        return Form(self.m, {w: p for w, p in out.items() if p})

    def __rmul__(self, other):
        return self._lift(other) * self

    def __pow__(self, n):
        result = Form.scalar(self.m, Fraction(1))
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, Form):
            other = self._lift(other)
        return self.m == other.m and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def almost_equal(self, other, tol=1e-10):
        diff = self - other
        return all(p.almost_equal(Polynomial(p.nvars), tol) for p in diff.terms.values())

    def degrees(self):
        return sorted({bin(w).count("1") for w in self.terms})

    def is_even(self):
        return all(bin(w).count("1") % 2 == 0 for w in self.terms)

    def part(self, degree):
        return Form(self.m, {w: p for w, p in self.terms.items() if bin(w).count("1") == degree})

    def zero_form(self) -> Polynomial:
        return self.terms.get(0, Polynomial(self.nvars))

    def coefficient(self, mask) -> Polynomial:
        return self.terms.get(mask, Polynomial(self.nvars))

    def diff_phi(self, x):
        return Form(self.m, {w: p.diff(psi_index(x)) for w, p in self.terms.items()})

    def diff_phibar(self, x):
        return Form(self.m, {w: p.diff(psibar_index(x)) for w, p in self.terms.items()})

    def __repr__(self):
        return f"Form({self.m}, {str(self)!r})"

    def __str__(self):
        return format_form(self)


def format_form(f: Form) -> str:
    """Canonical text: words by degree then generator order, monomials sorted."""
    if not f.terms:
        return "0"
    names = [variable_name(i) for i in range(f.nvars)]
    parts = []
    for w in sorted(f.terms, key=lambda w: (bin(w).count("1"), list(word_bits(w)))):
        word = "*".join(generator_name(i) for i in word_bits(w))
        for e in sorted(f.terms[w].terms, key=lambda e: (sum(e), tuple(-k for k in e))):
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            factors = [s for s in (mono, word) if s]
            parts.append(f"({format_scalar(f.terms[w].terms[e])})" + "".join("*" + s for s in factors))
    return " + ".join(parts)


def wedge_product(f: Form, g: Form) -> Form:
    return f * g


# --- standard forms --------------------------------------------------------

def tau(m, x) -> Form:
    return Form.phi(m, x) * Form.phibar(m, x) + Form.psi(m, x) * Form.psibar(m, x)


def invariant_v(m, x, y) -> Form:
    """v_xy = phi_x psibar_y (normalized units); Q v_xx = tau_x."""
    return Form.phi(m, x) * Form.psibar(m, y)


def fermion_action(matrix) -> Form:
    """psi A psibar = sum_xy A_xy psi_x psibar_y."""
    m = len(matrix)
    out = Form(m)
    for x in range(1, m + 1):
        for y in range(1, m + 1):
            a = matrix[x - 1][y - 1]
            if not is_zero(a, 0):
                out = out + Form.word(m, [psi_index(x), psibar_index(y)], a)
    return out


def boson_action(matrix) -> Form:
    """phi A phibar as a zero form."""
    m = len(matrix)
    out = Form(m)
    for x in range(1, m + 1):
        for y in range(1, m + 1):
            a = matrix[x - 1][y - 1]
            if not is_zero(a, 0):
                out = out + (Form.phi(m, x) * Form.phibar(m, y)) * a
    return out


def action(matrix) -> Form:
    """S_A = phi A phibar + psi A psibar."""
    return boson_action(matrix) + fermion_action(matrix)


def exp_action_expansion(matrix) -> Form:
    """sum_{n=0}^{M} (-1)^n / n! (psi A psibar)^n.

    The fermionic part of exp(-S_A); the zero-form factor exp(-phi A phibar)
    is left implicit.
    """
    m = len(matrix)
    s = fermion_action(matrix)
    out = Form.scalar(m, Fraction(1))
    power = Form.scalar(m, Fraction(1))
    for n in range(1, m + 1):
        power = power * s
        out = out + power * Fraction((-1) ** n, math.factorial(n))
    return out


def top_mask(m) -> int:
    return (1 << (2 * m)) - 1


# --- functional calculus ---------------------------------------------------

def compose(F: Polynomial, forms) -> Form:
    """F(K_1, ..., K_t) for even forms K_i by direct substitution."""
    if len(forms) != F.nvars:
        raise ValueError("need one form per variable of F")
    m = forms[0].m
    out = Form(m)
    powers = [[Form.scalar(m, Fraction(1))] for _ in forms]
    for exps, c in F.terms.items():
        term = Form.scalar(m, c)
        for i, k in enumerate(exps):
            while len(powers[i]) <= k:
                powers[i].append(powers[i][-1] * forms[i])
            term = term * powers[i][k]
        out = out + term
    return out


def form_of_tau_function(F: Polynomial) -> Form:
    """F(tau) as a Taylor series about the degree-zero part phi phibar.

    Only multi-indices alpha in {0,1}^M survive (psi_x psibar_x squares to 0):
    F(tau) = sum_S (d^S F)(phi phibar) prod_{x in S} psi_x psibar_x.
    """
    m = F.nvars
    nv = 2 * m
    out = {}
    for exps, c in F.terms.items():
        support = [x for x in range(m) if exps[x]]
        for r in range(len(support) + 1):
            for S in itertools.combinations(support, r):
                coef = c
                mono = [0] * nv
                for x in range(m):
                    k = exps[x] - (1 if x in S else 0)
                    if x in S:
                        coef = coef * exps[x]
                    mono[2 * x] = mono[2 * x + 1] = k
                # psi_x psibar_x pairs are adjacent in the global order: no sign
                mask = 0
                for x in S:
                    mask |= 0b11 << (2 * x)
                poly = out.setdefault(mask, {})
                key = tuple(mono)
                poly[key] = poly.get(key, 0) + coef
    return Form(m, {w: Polynomial(nv, p) for w, p in out.items()})


def form_of_function(F: Polynomial, forms) -> Form:
    """F(K) via the nilpotent Taylor expansion about the degree-zero parts.

    F(K) = sum_alpha F^(alpha)(K^(0)) (K - K^(0))^alpha / alpha!, the sum
    stopping once |alpha| exceeds M. For polynomial F this equals
    ``compose``; the two are kept apart so each can check the other.
    """
    m = forms[0].m
    t = len(forms)
    zero_parts = [Form.from_poly(m, k.zero_form()) for k in forms]
    nil = [k - z for k, z in zip(forms, zero_parts)]
    out = Form(m)
    for total in range(0, m + 1):
        for alpha in _compositions(total, t):
            deriv = F.diff_multi(alpha)
            if not deriv:
                continue
            coef_form = compose(deriv, zero_parts)
            prod = Form.scalar(m, Fraction(1, math.prod(math.factorial(a) for a in alpha)))
            for i, a in enumerate(alpha):
                for _ in range(a):
                    prod = prod * nil[i]
            out = out + coef_form * prod
    return out


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


# --- d, iota, Q ------------------------------------------------------------

def exterior_derivative(f: Form) -> Form:
    """d(p w) = sum_i (dp/dz_i) gen_i ^ w; d kills generators."""
    out = Form(f.m)
    acc = {}
    for w, p in f.terms.items():
        for i in range(f.nvars):
            bit = 1 << i
            if w & bit:
                continue
            dp = p.diff(i)
            if not dp:
                continue
            if bin(w & (bit - 1)).count("1") % 2:
                dp = -dp
            nw = w | bit
            acc[nw] = acc[nw] + dp if nw in acc else dp
    out.terms = {w: p for w, p in acc.items() if p}
    return out


def interior_product(f: Form) -> Form:
    """Antiderivation of degree -1 with psi_x -> -phi_x, psibar_x -> +phibar_x."""
    acc = {}
    nv = f.nvars
    for w, p in f.terms.items():
        for pos, i in enumerate(word_bits(w)):
            contraction = Polynomial.variable(nv, i)
            if i % 2 == 0:
                contraction = -contraction
            if pos % 2:
                contraction = -contraction
            nw = w & ~(1 << i)
            term = p * contraction
            acc[nw] = acc[nw] + term if nw in acc else term
    return Form(f.m, {w: p for w, p in acc.items() if p})


def supersymmetry_Q(f: Form) -> Form:
    return exterior_derivative(f) + interior_product(f)


def lie_derivative(f: Form) -> Form:
    """Generator of the rotation phi -> e^{-i theta} phi, by charge counting.

    Each phi_x or psi_x factor contributes -1, each phibar_x or psibar_x +1.
    """
    acc = {}
    for w, p in f.terms.items():
        wcharge = sum(1 if i % 2 else -1 for i in word_bits(w))
        terms = {}
        for e, c in p.terms.items():
            charge = wcharge + sum(k if i % 2 else -k for i, k in enumerate(e))
            if charge:
                terms[e] = c * charge
        if terms:
            acc[w] = Polynomial(f.nvars, terms)
    return Form(f.m, acc)
