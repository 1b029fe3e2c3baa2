"""Acceptance criteria, one test each, with one PASS/FAIL line per criterion.

Lines are printed as they complete and repeated in the terminal summary.
All randomness is seeded, so any failure is reproducible.
"""

import itertools
import math
import random
import time
from fractions import Fraction

from conftest import ACCEPTANCE_LINES
from scipy.special import erfc

from gsaw import algebra, gaussian, linalg, markov, suite, walks
from gsaw.algebra import Form, Polynomial
from gsaw.markov import CtmcParams
from gsaw.model import fixture, random_model

FIXTURES = ("i1", "i2", "i3")
N_MC = 10**6


def _report(number, title, ok, elapsed, limit, detail=""):
    within = elapsed < limit
    verdict = "PASS" if ok and within else "FAIL"
    line = f"criterion {number:>2}: {verdict}  {title}  [{elapsed:.2f}s / limit {limit}s]"
    if detail:
        line += f"  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert within, line


def _models(seed, count, sizes, complex_share=0.3):
    rng = random.Random(seed)
    out = [fixture(n) for n in FIXTURES]
    for _ in range(count):
        out.append(random_model(rng, rng.choice(sizes), complex_entries=rng.random() < complex_share))
    return out


def test_criterion_01_self_normalization():
    t0 = time.perf_counter()
    failures = 0
    models = _models(101, 100, [1, 2, 3, 4, 5])
    for m in models:
        a = m.form.entries
        ok = (-1) ** m.size * gaussian.top_word_constant(a) == linalg.det(a)
        ok = ok and gaussian.mixed_expectation(m, Form.scalar(m.size, 1)) == 1
        failures += not ok
    _report(1, "unit form integrates to 1; top word constant = det A", failures == 0,
            time.perf_counter() - t0, 10, f"{len(models)} models, {failures} failures")


def test_criterion_02_factorization_vs_oracle():
    t0 = time.perf_counter()
    rng = random.Random(202)
    failures = 0
    count = 0
    while count < 500:
        model = random_model(rng, rng.randint(1, 4), complex_entries=rng.random() < 0.3)
        for _ in range(5):
            f = suite.random_form(rng, model.size, max_words=3, max_degree=rng.randint(1, 4))
            failures += gaussian.mixed_expectation(model, f) != gaussian.mixed_expectation_oracle(model, f)
            count += 1
    _report(2, "factorized mixed expectation = brute-force oracle", failures == 0,
            time.perf_counter() - t0, 60, f"{count} forms, {failures} failures")


def _two_site_geometric_limit(model):
    # (J D^-1)^2 = q I at M = 2, so sum_n D^-1 (J D^-1)^n = D^-1 (I + J D^-1) / (1 - q)
    d1, d2 = model.diag
    j12, j21 = model.J(1, 2), model.J(2, 1)
    q = j12 * j21 / (d1 * d2)
    return [[1 / d1 / (1 - q), j12 / (d1 * d2) / (1 - q)],
            [j21 / (d1 * d2) / (1 - q), 1 / d2 / (1 - q)]]


def test_criterion_03_walk_series():
    t0 = time.perf_counter()
    ok = True
    for name in FIXTURES:
        m = fixture(name)
        for a in m.sites:
            for b in m.sites:
                for n in range(21):
                    partial, tail = walks.srw_two_point_series(m, a, b, n)
                    ok = ok and abs(complex(partial - m.C(a, b))) <= tail
    rng = random.Random(303)
    two_site = [fixture("i2")] + [random_model(rng, 2) for _ in range(20)]
    for m in two_site:
        ok = ok and _two_site_geometric_limit(m) == m.cov.entries
    _report(3, "walk series within tail bound, maxlen <= 20; exact 2-site limit", ok,
            time.perf_counter() - t0, 1)


def _pairs(rng, m, k=3):
    pairs = {(1, 1), (1, m)}
    while len(pairs) < min(k, m * m):
        pairs.add((rng.randint(1, m), rng.randint(1, m)))
    return sorted(pairs)


def test_criterion_04_loop_model():
    t0 = time.perf_counter()
    rng = random.Random(404)
    failures = 0
    for m in _models(405, 50, [1, 2, 3, 4, 5]):
        for a, b in _pairs(rng, m.size):
            for wick in (False, True):
                failures += walks.loop_two_point(m, a, b, wick) != gaussian.loop_bosonic(m, a, b, wick)
    i3 = fixture("i3")
    values = (walks.loop_two_point(i3, 1, 2), gaussian.loop_bosonic(i3, 1, 2))
    ok = failures == 0 and values == (Fraction(7, 16), Fraction(7, 16))
    _report(4, "loop enumeration = boson integral (plain and Wick-ordered)", ok,
            time.perf_counter() - t0, 30, f"I3 value {values[0]}, {failures} failures")


def test_criterion_05_saw_identity_and_cancellation():
    t0 = time.perf_counter()
    rng = random.Random(505)
    failures = 0
    for m in _models(506, 50, [1, 2, 3, 4, 5]):
        for a, b in _pairs(rng, m.size):
            failures += walks.saw_two_point(m, a, b) != gaussian.saw_grassmann(m, a, b)
    i2, i3 = fixture("i2"), fixture("i3")
    examples = [
        (walks.saw_two_point(i3, 1, 2), gaussian.saw_grassmann(i3, 1, 2), Fraction(5, 16)),
        (walks.saw_two_point(i2, 1, 1), gaussian.saw_grassmann(i2, 1, 1), Fraction(25, 64)),
    ]
    ok = failures == 0 and all(x == y == z for x, y, z in examples)
    subsets = 0
    for r in range(1, 4):
        for xs in itertools.combinations([1, 2, 3], r):
            entries, total = walks.loop_cancellation_ledger(i3, xs)
            ok = ok and total == 0 and all(e["boson"] + e["fermion"] == 0 for e in entries)
            ok = ok and gaussian.loop_expansion_total(i3, xs) == 1
            subsets += 1
    _report(5, "SAW enumeration = mixed integral; loop cancellation on all I3 subsets", ok,
            time.perf_counter() - t0, 60, f"{failures} failures, {subsets} subsets")


def test_criterion_06_polynomial_class():
    t0 = time.perf_counter()
    rng = random.Random(606)
    failures = 0
    for _ in range(200):
        m = random_model(rng, rng.randint(1, 3))
        p = suite.random_polynomial(rng, m.size)
        failures += gaussian.tau_expectation(m, p) != p.constant_term()
    checked = 0
    for name in FIXTURES:
        m = fixture(name)
        for ks in itertools.product(range(4), repeat=m.size):
            if sum(ks) > 3:
                continue
            for a in m.sites:
                for b in m.sites:
                    lhs = gaussian.tau_weighted_two_point(m, Polynomial.monomial(ks), a, b)
                    failures += lhs != gaussian.local_time_moment_oracle(m, a, b, list(ks))
                    checked += 1
    _report(6, "F(tau) integrates to F(0); tau moments = local-time moments", failures == 0,
            time.perf_counter() - t0, 60, f"200 polynomials, {checked} moments, {failures} failures")


def _z(est, target):
    return abs(est.mean - target) / est.stderr if est.stderr else (0.0 if est.mean == target else math.inf)


def test_criterion_07_markov_representations():
    t0 = time.perf_counter()
    i1, i2 = fixture("i1"), fixture("i2")
    k1, k2 = CtmcParams.killed(i1), CtmcParams.killed(i2)
    u1, u2 = CtmcParams.unkilled(i1), CtmcParams.unkilled(i2)
    cases = [
        ("killed I1 -> 1/2", markov.estimate_dynkin(k1, 1, 1, None, N_MC, 701), 1 / 2),
        ("killed I2 v=(1,1) -> 1/15", markov.estimate_dynkin(k2, 1, 2, [1, 1], N_MC, 702), 1 / 15),
        ("killed I2 -> 1/8", markov.estimate_dynkin(k2, 1, 2, None, N_MC, 703), 1 / 8),
        ("horizon I1 -> 1/2", markov.estimate_fk(u1, 1, 1, None, N_MC, 704), 1 / 2),
        ("horizon I2 -> 1/8", markov.estimate_fk(u2, 1, 2, None, N_MC, 705), 1 / 8),
        ("wsaw g=0 I2 -> 1/8", markov.estimate_wsaw(k2, 1, 2, 0, 0, N_MC, 706), 1 / 8),
        ("wsaw g=0 lam=1 I2 -> 1/15", markov.estimate_wsaw(k2, 1, 2, 0, 1, N_MC, 707), 1 / 15),
    ]
    summary = markov.simulate_summary(k2, 1, N_MC, 708)
    freq, se = summary["end_site_freq"][1], summary["end_site_stderr"][1]
    zs = {name: _z(est, target) for name, est, target in cases}
    zs["P(X(zeta-)=2) I2 -> 1/4"] = abs(freq - 0.25) / se

    def indicator(L):
        return (L[:, 0] <= 1.0).astype(float)

    e1 = markov.estimate_dynkin(k2, 1, 2, None, N_MC, 709, F=indicator)
    e2 = markov.estimate_fk(u2, 1, 2, None, N_MC, 710, F=indicator)
    zs["indicator F: killed vs horizon"] = abs(e1.mean - e2.mean) / math.hypot(e1.stderr, e2.stderr)
    worst = max(zs, key=zs.get)
    ok = all(z <= 3 for z in zs.values())
    _report(7, "MC representations hit exact targets within 3 sigma (n = 1e6)", ok,
            time.perf_counter() - t0, 120, f"max |z| = {zs[worst]:.2f} ({worst})")


def test_criterion_08_weakly_self_avoiding():
    t0 = time.perf_counter()
    exact_ok = True
    for name in FIXTURES:
        m = fixture(name)
        for a in m.sites:
            for b in m.sites:
                exact_ok = exact_ok and (
                    markov.wsaw_g_taylor(m, a, b, 0, 2) == gaussian.wsaw_taylor_grassmann(m, a, b, 0, 2)
                )
    i1 = fixture("i1")
    quadrature = {
        0.5: math.e**2 * math.sqrt(math.pi / 2) * erfc(math.sqrt(2)),
        1.0: math.e * math.sqrt(math.pi) / 2 * erfc(1.0),
    }
    zs = {}
    seed = 800
    for g in (0.5, 1.0):
        seed += 1
        est = markov.estimate_wsaw(CtmcParams.killed(i1), 1, 1, g, 0, N_MC, seed)
        zs[f"I1 g={g} vs quadrature"] = _z(est, quadrature[g])
        ws, _ = markov.wsaw_walk_sum(i1, 1, 1, g, 0, 5)
        exact_ok = exact_ok and abs(ws - quadrature[g]) < 1e-10
        for name, a, b, maxlen in (("i2", 1, 2, 40), ("i3", 1, 2, 80), ("i3", 1, 1, 80)):
            m = fixture(name)
            seed += 1
            est = markov.estimate_wsaw(CtmcParams.killed(m), a, b, g, 0, N_MC, seed)
            ws, note = markov.wsaw_walk_sum(m, a, b, g, 0, maxlen)
            # truncation tail is far below the MC error at these lengths
            zs[f"{name} ({a},{b}) g={g} vs walk sum"] = max(0.0, abs(est.mean - ws) - note["tail_bound"]) / est.stderr
    worst = max(zs, key=zs.get)
    ok = exact_ok and all(z <= 3 for z in zs.values())
    _report(8, "wsaw Taylor coefficients exact; MC = walk sum = quadrature within 3 sigma", ok,
            time.perf_counter() - t0, 180, f"taylor exact: {exact_ok}, max |z| = {zs[worst]:.2f} ({worst})")


def test_criterion_09_supersymmetry():
    t0 = time.perf_counter()
    rng = random.Random(909)
    ok = True
    for m in _models(910, 10, [1, 2, 3], complex_share=0.0):
        n = m.size
        for x in m.sites:
            ok = ok and algebra.supersymmetry_Q(algebra.invariant_v(n, x, x)) == algebra.tau(n, x)
        ok = ok and algebra.supersymmetry_Q(algebra.action(m.form.entries)).is_zero()
    q = algebra.supersymmetry_Q
    for _ in range(100):
        n = rng.randint(1, 3)
        f = suite.random_form(rng, n)
        ok = ok and q(q(f)) == algebra.lie_derivative(f)
        d, i = algebra.exterior_derivative, algebra.interior_product
        ok = ok and q(q(f)) == d(i(f)) + i(d(f))
    for _ in range(50):
        ok = ok and suite.chain_rule_holds(rng, rng.randint(1, 3))
    nonzero = 0
    for _ in range(100):
        m = random_model(rng, rng.randint(1, 3))
        eta = suite.random_invariant(rng, m.size)
        qeta = q(eta)
        nonzero += not qeta.is_zero()
        ok = ok and gaussian.mixed_expectation(m, qeta) == 0
    _report(9, "Q v = tau, Q S = 0, Q^2 = d i + i d, chain rule, Q-exact integrals vanish", ok,
            time.perf_counter() - t0, 30, f"100 invariant forms ({nonzero} with Q eta != 0)")


def test_criterion_10_generalized_cramer():
    t0 = time.perf_counter()
    rng = random.Random(1010)
    failures = 0
    count = 0
    a2 = fixture("i2").form.entries
    for i in (1, 2):
        for j in (1, 2):
            lhs, rhs = gaussian.generalized_cramer_check(a2, [i], [j])
            failures += lhs != rhs
            count += 1
    for _ in range(100):
        n = rng.randint(1, 5)
        a = suite.random_matrix(rng, n)
        for p in range(1, min(3, n) + 1):
            rows = rng.sample(range(1, n + 1), p)
            cols = rng.sample(range(1, n + 1), p)
            lhs, rhs = gaussian.generalized_cramer_check(a, rows, cols)
            failures += lhs != rhs
            count += 1
    _report(10, "minor of inverse = signed complementary minor / det", failures == 0,
            time.perf_counter() - t0, 10, f"{count} cases, {failures} failures")

