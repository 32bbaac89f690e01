import math

import pytest
from hypothesis import given, strategies as st

from hieranderson.exceptions import DomainError, RangeError, ValidationError
from hieranderson.structure import (
    K_of_E,
    decay_constants,
    explicit_weights,
    geometric_weights,
    k_of_E,
    spectral_dimension,
)


def test_geometric_examples(rho2):
    assert rho2.p(0) == 0.0
    assert rho2.p(1) == pytest.approx(0.5, abs=1e-16)
    assert rho2.p(2) == pytest.approx(0.25, abs=1e-16)
    assert rho2.lam(2) == pytest.approx(0.75, abs=1e-16)
    assert rho2.tail(2) == pytest.approx(0.25, abs=1e-16)

    rho3 = geometric_weights(3.0)
    assert rho3.p(1) == pytest.approx(2 / 3, abs=1e-16)
    assert rho3.tail(1) == pytest.approx(1 / 3, abs=1e-16)


def test_geometric_needs_rho_above_one():
    with pytest.raises(ValidationError):
        geometric_weights(1.0)


def test_tail_survives_where_one_minus_lam_underflows(rho2):
    assert 1 - rho2.lam(60) == 0.0
    assert rho2.tail(60) > 0
    assert rho2.log_tail(2000) == pytest.approx(-2000 * math.log(2))


@given(rho=st.floats(1.1, 10.0), r=st.integers(0, 60))
def test_closed_form_matches_partial_sums(rho, r):
    w = geometric_weights(rho)
    partial = math.fsum(w.p(s) for s in range(r + 1))
    assert abs(w.lam(r) - partial) <= 1e-14
    assert abs(w.lam(r) + w.tail(r) - 1) <= 1e-14


def test_lam_strictly_increasing(rho2):
    values = [rho2.lam(r) for r in range(30)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_explicit_with_geometric_continuation():
    w = explicit_weights([0.5, 0.25], "geometric", rho=2.0)
    assert w.remainder == pytest.approx(0.25)
    assert w.p(3) == pytest.approx(0.125)
    assert w.lam(2) == pytest.approx(0.75)
    assert w.lam(40) == pytest.approx(1.0)


def test_explicit_reject_rule():
    w = explicit_weights([0.5, 0.5], "reject")
    assert w.p(3) == 0.0
    assert w.tail(2) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValidationError):
        explicit_weights([0.5, 0.25], "reject")


def test_explicit_validation():
    with pytest.raises(ValidationError):
        explicit_weights([0.7, 0.6], "geometric", rho=2.0)
    with pytest.raises(ValidationError):
        explicit_weights([], "geometric", rho=2.0)
    with pytest.raises(ValidationError):
        explicit_weights([0.5], "geometric")
    with pytest.raises(RangeError):
        geometric_weights(2.0).p(-1)


def test_spectral_dimension():
    assert spectral_dimension(2, 2.0).d_s == pytest.approx(2.0)
    assert spectral_dimension(4, 2.0).d_s == pytest.approx(4.0)
    assert spectral_dimension(2, 4.0).d_s == pytest.approx(1.0)


def test_k_of_E_examples():
    dim = spectral_dimension(2, 2.0)
    assert k_of_E(dim, 1 / 8, 1.0) == 3
    assert k_of_E(dim, 0.3, 1.0) == 1
    assert k_of_E(dim, 0.5, 1.0) == 1
    with pytest.raises(DomainError):
        k_of_E(dim, 0.9, 1.0)


def test_K_of_E_examples(rho2):
    assert K_of_E(rho2, 1 / 8) == 5
    assert K_of_E(rho2, 1.0) == 2
    assert K_of_E(rho2, 1.99) == 1


@given(E=st.floats(1e-6, 1.99))
def test_K_of_E_is_the_smallest_qualifying_rank(E):
    w = explicit_weights([0.5, 0.25], "geometric", rho=2.0)
    K = K_of_E(w, E)
    assert w.tail(K) < E / 2 * (1 + 1e-9)
    if K > 1:
        assert w.tail(K - 1) >= E / 2 * (1 - 1e-9)


@given(a=st.floats(1e-9, 0.5), b=st.floats(1e-9, 0.5))
def test_k_of_E_is_nonincreasing(a, b):
    low, high = sorted((a, b))
    dim = spectral_dimension(2, 2.0)
    assert k_of_E(dim, low, 1.0) >= k_of_E(dim, high, 1.0) >= 1


@given(a=st.floats(1e-9, 1.99), b=st.floats(1e-9, 1.99))
def test_K_of_E_is_nonincreasing(a, b):
    low, high = sorted((a, b))
    for w in (geometric_weights(3.0), explicit_weights([0.5, 0.25], "geometric", rho=2.0)):
        assert K_of_E(w, low) >= K_of_E(w, high)


def test_decay_constants_of_geometric_weights(rho2):
    constants = decay_constants(rho2, 2.0, range(1, 10))
    assert constants.c1 == pytest.approx(1.0)
    assert constants.c2 == pytest.approx(1.0)
