"""The identity suite run by ``gsaw verify``, plus random test objects.

Each check produces a record with both computed sides and a status of
"pass", "fail" or "skipped". Checks whose hypotheses fail are skipped,
never silently passed.
"""

from __future__ import annotations

import random
from fractions import Fraction

from . import algebra, gaussian, linalg, markov, walks
from .algebra import Form, Polynomial
from .model import CouplingModel, validate_model
from .scalars import close, to_json_scalar

PASS, FAIL, SKIP = "pass", "fail", "skipped"

# enumeration-based checks grow factorially in M
ENUM_MAX_SITES = 6
SUITE_TOL = 1e-9


# --- random objects ------------------------------------------------------------

def random_rational(rng: random.Random, lo=-4, hi=4, maxden=4) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, maxden))


def random_polynomial(rng: random.Random, nvars: int, max_terms=4, max_degree=3) -> Polynomial:
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        deg = rng.randint(0, max_degree)
        exps = [0] * nvars
        for _ in range(deg):
            exps[rng.randrange(nvars)] += 1
        terms[tuple(exps)] = terms.get(tuple(exps), 0) + random_rational(rng)
    return Polynomial(nvars, terms)


def random_word(rng: random.Random, m: int):
    """Random fermion word as a generator list; biased toward balanced words."""
    if rng.random() < 0.7:
        k = rng.randint(0, m)
        psis = rng.sample(range(1, m + 1), k)
        psibars = rng.sample(range(1, m + 1), k)
        gens = [algebra.psi_index(x) for x in psis] + [algebra.psibar_index(x) for x in psibars]
    else:
        gens = rng.sample(range(2 * m), rng.randint(0, 2 * m))
    rng.shuffle(gens)
    return gens


def random_form(rng: random.Random, m: int, max_words=3, max_degree=3) -> Form:
    out = Form(m)
    for _ in range(rng.randint(1, max_words)):
        poly = random_polynomial(rng, 2 * m, max_terms=3, max_degree=max_degree)
        out = out + Form.word(m, random_word(rng, m)) * poly
    return out


def random_invariant(rng: random.Random, m: int) -> Form:
    """P(tau) v_xx for a random polynomial P and site x."""
    p = random_polynomial(rng, m, max_terms=3, max_degree=2)
    x = rng.randint(1, m)
    return algebra.form_of_tau_function(p) * algebra.invariant_v(m, x, x)


def random_matrix(rng: random.Random, n: int):
    """Random invertible rational matrix."""
    while True:
        a = [[random_rational(rng) for _ in range(n)] for _ in range(n)]
        if linalg.det(a) != 0:
            return a


# --- records -------------------------------------------------------------------

def record(name, group, lhs, rhs, ok=None, reason=None, **extra):
    if ok is None:
        ok = close(lhs, rhs, SUITE_TOL)
    rec = {
        "name": name,
        "group": group,
        "lhs": to_json_scalar(lhs) if lhs is not None else None,
        "rhs": to_json_scalar(rhs) if rhs is not None else None,
        "status": PASS if ok else FAIL,
    }
    if reason:
        rec["reason"] = reason
    rec.update(extra)
    return rec


def skipped(name, group, reason):
    return {"name": name, "group": group, "lhs": None, "rhs": None, "status": SKIP, "reason": reason}


# --- checks ----------------------------------------------------------------------

def hypotheses(model: CouplingModel) -> dict:
    return validate_model(model).as_dict()


def normalization_checks(model):
    m = model.size
    a = model.form.entries
    out = [
        record("top_word_constant_equals_det", "normalization",
               (-1) ** m * gaussian.top_word_constant(a), linalg.det(a)),
        record("unit_form_integrates_to_one", "normalization",
               gaussian.mixed_expectation(model, Form.scalar(m, Fraction(1))), Fraction(1)),
    ]
    c = model.cov.entries
    prod = linalg.matmul(a, c)
    ident = linalg.identity(m)
    ok = all(close(prod[i][j], ident[i][j], SUITE_TOL) for i in range(m) for j in range(m))
    out.append(record("covariance_inverts_form", "normalization", None, None, ok))
    return out


def srw_checks(model, pairs, maxlen=20):
    out = []
    for a, b in pairs:
        ok = True
        for n in range(maxlen + 1):
            partial, tail = walks.srw_two_point_series(model, a, b, n)
            gap = abs(complex(partial) - complex(model.C(a, b)))
            ok = ok and gap <= float(tail) + SUITE_TOL
        out.append(record(f"walk_series_within_tail_bound[{a},{b}]", "walk_series",
                          partial, model.C(a, b), ok, maxlen=maxlen))
    return out


def loop_saw_checks(model, pairs):
    out = []
    for a, b in pairs:
        for wick in (False, True):
            tag = "wick_ordered" if wick else "plain"
            out.append(record(f"loop_enumeration_equals_boson_integral[{tag},{a},{b}]", "loop_model",
                              walks.loop_two_point(model, a, b, wick), gaussian.loop_bosonic(model, a, b, wick)))
        out.append(record(f"saw_enumeration_equals_mixed_integral[{a},{b}]", "saw",
                          walks.saw_two_point(model, a, b), gaussian.saw_grassmann(model, a, b)))
    verts = list(model.sites)
    entries, total = walks.loop_cancellation_ledger(model, verts)
    nets_zero = all(e["net"] == 0 for e in entries)
    out.append(record("boson_fermion_cycles_cancel", "saw", total, 0, nets_zero and close(total, 0, SUITE_TOL),
                      cycles=len(entries)))
    out.append(record("product_of_one_plus_tau_integrates_to_one", "saw",
                      gaussian.loop_expansion_total(model, verts), Fraction(1)))
    return out


def factorization_checks(model, rng, count=5):
    out = []
    if model.size > gaussian.ORACLE_MAX_SITES:
        return [skipped("factorized_expectation_equals_oracle", "factorization", "too many sites for the oracle")]
    for i in range(count):
        f = random_form(rng, model.size, max_degree=2)
        out.append(record(f"factorized_expectation_equals_oracle[{i}]", "factorization",
                          gaussian.mixed_expectation(model, f), gaussian.mixed_expectation_oracle(model, f)))
    return out


def tau_checks(model, rng, pairs, count=5, max_order=2):
    out = []
    m = model.size
    for i in range(count):
        p = random_polynomial(rng, m)
        out.append(record(f"tau_function_integrates_to_value_at_zero[{i}]", "tau_isomorphism",
                          gaussian.tau_expectation(model, p), p.constant_term()))
    for a, b in pairs:
        for total in range(max_order + 1):
            for ks in _compositions(total, m):
                mono = Polynomial.monomial(ks)
                out.append(record(f"tau_moment_equals_local_time_moment[{a},{b},{list(ks)}]", "tau_isomorphism",
                                  gaussian.tau_weighted_two_point(model, mono, a, b),
                                  gaussian.local_time_moment_oracle(model, a, b, list(ks))))
    return out


def wsaw_taylor_checks(model, pairs, order=2):
    out = []
    for a, b in pairs:
        lhs = gaussian.wsaw_taylor_grassmann(model, a, b, 0, order)
        rhs = markov.wsaw_g_taylor(model, a, b, 0, order)
        for k in range(order + 1):
            out.append(record(f"wsaw_taylor_coefficient[{a},{b},k={k}]", "wsaw_taylor", lhs[k], rhs[k]))
    return out


def cramer_checks(matrix, rng, count=3):
    out = []
    n = len(matrix)
    for p in range(1, min(3, n) + 1):
        for i in range(count):
            rows = rng.sample(range(1, n + 1), p)
            cols = rng.sample(range(1, n + 1), p)
            lhs, rhs = gaussian.generalized_cramer_check(matrix, rows, cols)
            out.append(record(f"minor_of_inverse_equals_complementary_minor[p={p},{i}]", "cramer", lhs, rhs,
                              rows=rows, cols=cols))
    return out


def susy_checks(model, rng, count=5, integrate=True):
    """Algebraic supersymmetry identities; the Q-exact integral only when the Gaussian exists."""
    m = model.size
    out = []
    for x in model.sites:
        q = algebra.supersymmetry_Q(algebra.invariant_v(m, x, x))
        out.append(record(f"Q_of_v_equals_tau[{x}]", "supersymmetry", None, None, q == algebra.tau(m, x)))
    s = algebra.action(model.form.entries)
    out.append(record("Q_annihilates_action", "supersymmetry", None, None,
                      algebra.supersymmetry_Q(s).is_zero()))
    for i in range(count):
        f = random_form(rng, m, max_words=2, max_degree=2)
        qq = algebra.supersymmetry_Q(algebra.supersymmetry_Q(f))
        out.append(record(f"Q_squared_equals_lie_derivative[{i}]", "supersymmetry", None, None,
                          qq == algebra.lie_derivative(f)))
    for i in range(count):
        ok = chain_rule_holds(rng, m)
        out.append(record(f"Q_chain_rule[{i}]", "supersymmetry", None, None, ok))
    if integrate:
        for i in range(count):
            eta = random_invariant(rng, m)
            val = gaussian.mixed_expectation(model, algebra.supersymmetry_Q(eta))
            out.append(record(f"Q_exact_form_integrates_to_zero[{i}]", "supersymmetry", val, 0))
    return out


def chain_rule_holds(rng, m, nforms=2) -> bool:
    """Q F(K) = sum_i (d_i F)(K) Q K_i for even forms K_i."""
    forms = [random_even_form(rng, m) for _ in range(nforms)]
    F = random_polynomial(rng, nforms, max_terms=3, max_degree=3)
    lhs = algebra.supersymmetry_Q(algebra.compose(F, forms))
    rhs = Form(m)
    for i in range(nforms):
        rhs = rhs + algebra.compose(F.diff(i), forms) * algebra.supersymmetry_Q(forms[i])
    return lhs == rhs


def random_even_form(rng, m) -> Form:
    out = Form(m)
    for _ in range(rng.randint(1, 2)):
        gens = rng.sample(range(2 * m), 2 * rng.randint(0, m))
        out = out + Form.word(m, gens) * random_polynomial(rng, 2 * m, max_terms=2, max_degree=2)
    return out


def statistical_checks(model, pairs, samples, seed):
    out = []
    killed = markov.CtmcParams.killed(model)
    unkilled = markov.CtmcParams.unkilled(model)
    for i, (a, b) in enumerate(pairs):
        target = model.C(a, b)
        est = markov.estimate_dynkin(killed, a, b, None, samples, seed + 2 * i)
        out.append(_stat_record(f"killed_chain_estimate[{a},{b}]", est, target))
        est = markov.estimate_fk(unkilled, a, b, None, samples, seed + 2 * i + 1)
        out.append(_stat_record(f"horizon_integral_estimate[{a},{b}]", est, target))
    return out


def _stat_record(name, est, target):
    return record(name, "statistical", est.mean, target, est.within(target, 3.0),
                  stderr=est.stderr, zscore=est.zscore(target), n_samples=est.n_samples, seed=est.seed)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def default_pairs(model):
    m = model.size
    return sorted({(1, 1), (1, m), (m, 1)})


def run_model_suite(model: CouplingModel, name: str, seed: int = 0, samples: int = 0) -> dict:
    """Every applicable identity for one model; failing hypotheses mark dependents skipped."""
    rng = random.Random(seed)
    hyp = validate_model(model)
    pairs = default_pairs(model)
    checks = []
    gaussian_ok = hyp.hermitian_positive is True
    small = model.size <= ENUM_MAX_SITES
    try:
        model.cov
        invertible = True
    except linalg.SingularMatrixError:
        invertible = False
        gaussian_ok = False

    if gaussian_ok:
        checks += normalization_checks(model)
    else:
        checks.append(skipped("normalization", "normalization", "Hermitian part of A not positive definite"))

    if hyp.diagonally_dominant and invertible:
        checks += srw_checks(model, pairs)
    else:
        checks.append(skipped("walk_series_within_tail_bound", "walk_series", f"rho = {hyp.rho:.6g} >= 1"))

    if gaussian_ok and small:
        checks += loop_saw_checks(model, pairs)
        checks += factorization_checks(model, rng)
        checks += tau_checks(model, rng, pairs)
        checks += wsaw_taylor_checks(model, pairs)
    else:
        reason = "Gaussian integral undefined" if not gaussian_ok else f"M > {ENUM_MAX_SITES}"
        for grp in ("loop_model", "saw", "factorization", "tau_isomorphism", "wsaw_taylor"):
            checks.append(skipped(grp, grp, reason))

    a = model.form.entries
    if invertible and small:
        checks += cramer_checks(a, rng)
    checks += susy_checks(model, rng, integrate=gaussian_ok and small)

    if samples > 0:
        if hyp.markov_valid and hyp.diagonally_dominant and gaussian_ok:
            checks += statistical_checks(model, pairs, samples, seed)
        else:
            reasons = list(hyp.markov_reasons) or [f"rho = {hyp.rho:.6g} >= 1"]
            checks.append(skipped("statistical", "statistical", "; ".join(reasons)))

    return {"name": name, "model": model.to_json(), "hypotheses": hyp.as_dict(), "checks": checks}


def summarize(reports) -> dict:
    counts = {PASS: 0, FAIL: 0, SKIP: 0}
    for rep in reports:
        for c in rep["checks"]:
            counts[c["status"]] += 1
    return {"passed": counts[PASS], "failed": counts[FAIL], "skipped": counts[SKIP]}
