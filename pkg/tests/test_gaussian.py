import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gsaw import algebra, gaussian, linalg, suite
from gsaw.algebra import Form, Polynomial
from gsaw.model import random_model

seeds = st.integers(0, 100_000)


def test_boson_covariance_entry(i2):
    assert gaussian.boson_moment(i2, [1], [2]) == Fraction(1, 8)
    # E[|phi_1|^4] = 2 C_11^2
    assert gaussian.boson_moment(i2, [1, 1], [1, 1]) == 2 * Fraction(3, 8) ** 2


def test_fermion_pair_and_determinant(i2):
    m = 2
    assert gaussian.mixed_expectation(i2, Form.psibar(m, 1) * Form.psi(m, 1)) == Fraction(3, 8)
    four = Form.psi(m, 1) * Form.psibar(m, 1) * Form.psi(m, 2) * Form.psibar(m, 2)
    assert gaussian.mixed_expectation(i2, four) == Fraction(1, 8)
    assert gaussian.mixed_expectation_oracle(i2, four) == Fraction(1, 8)


def test_unbalanced_words_vanish(i2):
    assert gaussian.mixed_expectation(i2, Form.psi(2, 1)) == 0
    assert gaussian.mixed_expectation(i2, Form.phi(2, 1)) == 0


def test_tau_product_integrates_to_zero(i2):
    f = algebra.tau(2, 1) * algebra.tau(2, 2)
    assert gaussian.mixed_expectation(i2, f) == 0
    assert gaussian.mixed_expectation_oracle(i2, f) == 0


def test_unit_form_and_top_word(i1, i2, i3):
    for m in (i1, i2, i3):
        assert gaussian.mixed_expectation(m, Form.scalar(m.size, 1)) == 1
        assert gaussian.mixed_expectation_oracle(m, Form.scalar(m.size, 1)) == 1
        assert (-1) ** m.size * gaussian.top_word_constant(m.form.entries) == linalg.det(m.form.entries)


@given(seeds)
def test_oracle_equivalence(seed):
    rng = random.Random(seed)
    m = rng.randint(1, 4)
    model = random_model(rng, m, complex_entries=rng.random() < 0.3)
    f = suite.random_form(rng, m, max_degree=rng.randint(1, 4))
    assert gaussian.mixed_expectation(model, f) == gaussian.mixed_expectation_oracle(model, f)


@given(seeds)
def test_self_normalization(seed):
    rng = random.Random(seed)
    model = random_model(rng, rng.randint(1, 5), complex_entries=rng.random() < 0.3)
    assert gaussian.mixed_expectation(model, Form.scalar(model.size, 1)) == 1


@given(seeds)
def test_integration_by_parts(seed):
    rng = random.Random(seed)
    m = rng.randint(1, 3)
    model = random_model(rng, m)
    f = suite.random_form(rng, m, max_degree=3)
    lhs, rhs = gaussian.ibp_sides(model, rng.randint(1, m), f)
    assert lhs == rhs


@given(seeds)
def test_tau_function_recovers_value_at_zero(seed):
    rng = random.Random(seed)
    m = rng.randint(1, 3)
    model = random_model(rng, m)
    p = suite.random_polynomial(rng, m)
    assert gaussian.tau_expectation(model, p) == p.constant_term()


def test_local_time_moment_examples(i1, i2):
    assert gaussian.local_time_moment_oracle(i2, 1, 2, {1: 1, 2: 1}) == Fraction(10, 512)
    # L ~ Exp(2) at one site: E[L^2] / (d pi) = (1/2) / 2
    assert gaussian.local_time_moment_oracle(i1, 1, 1, {1: 2}) == Fraction(1, 4)
    assert gaussian.local_time_moment_oracle(i1, 1, 1, {1: 3}) == Fraction(3, 8)
    assert gaussian.local_time_moment_oracle(i2, 1, 2, [0, 0]) == Fraction(1, 8)
    with pytest.raises(ValueError):
        gaussian.local_time_moment_oracle(i2, 1, 2, [4, 3])


def _multisets(m, max_total):
    for total in range(max_total + 1):
        for ks in itertools.product(range(total + 1), repeat=m):
            if sum(ks) == total:
                yield ks


@pytest.mark.parametrize("name", ["i1", "i2", "i3"])
def test_tau_isomorphism_on_monomials(name, request):
    model = request.getfixturevalue(name)
    for ks in _multisets(model.size, 3):
        for a in model.sites:
            for b in model.sites:
                lhs = gaussian.tau_weighted_two_point(model, Polynomial.monomial(ks), a, b)
                assert lhs == gaussian.local_time_moment_oracle(model, a, b, list(ks))


def test_moments_are_resolvent_derivatives(i2):
    # d/dv_x (A + V)^{-1}_{ab} at 0 = -C_ax C_xb; second derivative in v_1 gives 2 C_11 C_11 C_12
    h = Fraction(1, 10**9)
    c_plus = i2.with_potential([h, 0]).C(1, 2)
    first = (c_plus - i2.C(1, 2)) / h
    assert abs(first + gaussian.local_time_moment_oracle(i2, 1, 2, [1, 0])) < Fraction(1, 10**8)


def test_cramer_classical_case(i2):
    lhs, rhs = gaussian.generalized_cramer_check(i2.form.entries, [1], [2])
    assert lhs == rhs == Fraction(1, 8)


@given(seeds)
def test_generalized_cramer(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 5)
    a = suite.random_matrix(rng, n)
    p = rng.randint(1, min(3, n))
    lhs, rhs = gaussian.generalized_cramer_check(a, rng.sample(range(1, n + 1), p), rng.sample(range(1, n + 1), p))
    assert lhs == rhs


def test_saw_and_loop_integrals(i2, i3):
    assert gaussian.saw_grassmann(i3, 1, 2) == Fraction(5, 16)
    assert gaussian.saw_grassmann(i2, 1, 1) == Fraction(25, 64)
    assert gaussian.loop_bosonic(i3, 1, 2) == Fraction(7, 16)
    assert gaussian.loop_bosonic(i3, 1, 2, wick_ordered=True) == Fraction(5, 16)


def test_loop_expansion_collapses_to_one(i3):
    verts = [1, 2, 3]
    for r in range(1, 4):
        for xs in itertools.combinations(verts, r):
            assert gaussian.loop_expansion_total(i3, xs) == 1


def test_wsaw_taylor_single_site(i1):
    assert gaussian.wsaw_taylor_grassmann(i1, 1, 1, 0, 2) == [Fraction(1, 2), Fraction(-1, 4), Fraction(3, 8)]


def test_wsaw_taylor_first_order_is_sum_of_second_moments(i2):
    c1 = gaussian.wsaw_taylor_grassmann(i2, 1, 2, 0, 1)[1]
    assert c1 == -sum(gaussian.local_time_moment_oracle(i2, 1, 2, {x: 2}) for x in i2.sites)


def test_float_mode_agrees(i3):
    f3 = i3.with_mode("float")
    assert gaussian.mixed_expectation(f3, gaussian.saw_integrand(3, 1, 2)) == pytest.approx(5 / 16)
