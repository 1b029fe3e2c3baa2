import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gsaw import linalg
from gsaw.scalars import ComplexRational, close, format_scalar, to_exact, to_json_scalar

small = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def square(n_min=1, n_max=5):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)
    )


@given(square())
def test_bareiss_matches_laplace(a):
    assert linalg.det(a) == linalg.det_laplace(a)


@given(square(1, 6))
def test_ryser_matches_permutation_sum(a):
    assert linalg.permanent(a) == linalg.permanent_naive(a)


@given(square())
def test_inverse_is_inverse(a):
    if linalg.det(a) == 0:
        with pytest.raises(linalg.SingularMatrixError):
            linalg.inverse(a)
        return
    inv = linalg.inverse(a)
    assert linalg.matmul(a, inv) == linalg.identity(len(a))


def test_det_float_mode():
    a = [[3.0, -1.0], [-1.0, 3.0]]
    assert close(linalg.det(a), 8.0)


def test_permanent_of_ones():
    # per(J_n) = n!
    for n in range(1, 6):
        assert linalg.permanent([[1] * n for _ in range(n)]) == [1, 2, 6, 24, 120][n - 1]


def test_permutation_sign_and_cycles():
    assert linalg.permutation_sign([0, 1, 2]) == 1
    assert linalg.permutation_sign([1, 0, 2]) == -1
    assert linalg.permutation_sign([1, 2, 0]) == 1
    for perm in itertools.permutations(range(4)):
        n_cycles = len(linalg.cycles(perm))
        assert linalg.permutation_sign(perm) == (-1) ** (4 - n_cycles)


def test_complex_rational_arithmetic():
    z = to_exact(["1/2", "3"])
    w = to_exact([1, -1])
    assert z * w == ComplexRational(Fraction(7, 2), Fraction(5, 2))
    assert (z / w) * w == z
    assert z - z == 0 and isinstance(z - z, Fraction)
    assert z ** 2 == z * z
    assert Fraction(1, 2) + z == ComplexRational(1, 3)
    assert format_scalar(Fraction(3, 8)) == "3/8"
    assert to_json_scalar(z) == ["1/2", "3"]
