import numpy as np
import pytest

from expindex.algebra import EPS_NUM, TraceVector
from expindex.errors import ToleranceError
from expindex.expectation import (
    ConditionalExpectation,
    from_density,
    multiplicative_domain,
    random_expectation,
    solve_density,
    symmetric_density_map,
    trace_expectation,
    verify_expectation,
)


def test_trace_expectation_f1(f1, rng):
    e = trace_expectation(f1)
    x = f1.M.random_element(rng)
    expected = (np.trace(x.blocks[0]) / 2.0) * f1.M.identity()
    assert (e(x) - expected).norm() < 1e-10


def test_trace_expectation_f2(f2, rng):
    e = trace_expectation(f2)
    x = f2.M.random_element(rng)
    out = e(x)
    assert np.allclose(out.blocks[0], np.diag(np.diag(x.blocks[0])))


def test_trace_expectation_f4(f4, rng):
    e = trace_expectation(f4)
    x = f4.M.random_element(rng)
    tr = sum(np.trace(b) for b in x.blocks)
    assert (e(x) - (tr / 5.0) * f4.M.identity()).norm() < 1e-10


def test_trace_preservation(f4, rng):
    s = TraceVector(f4.M, (0.5, 2.0))
    e = trace_expectation(f4, s)
    for _ in range(10):
        x = f4.M.random_element(rng)
        assert abs(s.eval(e(x)) - s.eval(x)) < 1e-9 * max(1.0, x.norm())


def test_from_density_f1(f1, rng):
    p = 0.3
    rho = np.diag([p, 1 - p])
    h = f1.M.element([2 * rho])
    e = from_density(f1, TraceVector(f1.M), h)
    x = f1.M.random_element(rng)
    expected = np.trace(rho @ x.blocks[0]) * f1.M.identity()
    assert (e(x) - expected).norm() < 1e-10


def test_from_density_f3(f3, rng):
    p = 0.3
    h = f3.M.element([[[2 * p]], [[2 * (1 - p)]]])
    e = from_density(f3, TraceVector(f3.M), h)
    x = f3.M.random_element(rng)
    val = p * x.blocks[0][0, 0] + (1 - p) * x.blocks[1][0, 0]
    assert (e(x) - val * f3.M.identity()).norm() < 1e-10


def test_from_density_agrees_with_symmetric_form(f1, f4, rng):
    for inc in (f1, f4):
        s = TraceVector(inc.M)
        e = random_expectation(inc, s, rng)
        sym = symmetric_density_map(inc, s, e.h)
        assert np.linalg.norm(sym - e.matrix, 2) < 1e-9


def test_f2_only_trivial_density(f2):
    # relative commutant equals iota(N): normalization forces h = 1
    s = TraceVector(f2.M)
    e = random_expectation(f2, s, np.random.default_rng(5))
    assert (e.h - f2.M.identity()).norm() < 1e-9
    assert np.linalg.norm(e.matrix - trace_expectation(f2, s).matrix, 2) < 1e-9


def test_verify_rejects_identity_map(f1):
    s = TraceVector(f1.M)
    with pytest.raises(ToleranceError):
        ConditionalExpectation(f1, np.eye(f1.M.dim), s, verify=True)
    rep = verify_expectation(
        ConditionalExpectation(f1, np.eye(f1.M.dim), s, verify=False)
    )
    assert not rep.ok() and not rep.range_rank_ok


def test_verify_flags_unnormalized_density(f1):
    s = TraceVector(f1.M)
    h = f1.M.element([np.diag([1.1, 1.1])])  # E_tau(h) = 1.1
    with pytest.raises(ValueError, match="not normalized"):
        from_density(f1, s, h)
    etau = trace_expectation(f1, s)
    from expindex.algebra import left_mult_matrix

    bad = ConditionalExpectation(f1, etau.matrix @ left_mult_matrix(h), s, verify=False)
    rep = verify_expectation(bad)
    assert abs(rep.unital - 0.1) < 1e-9


def test_multiplicative_domain(f1, f2, f3):
    s1 = TraceVector(f1.M)
    dom = multiplicative_domain(trace_expectation(f1, s1))
    assert len(dom) == 1

    dom2 = multiplicative_domain(trace_expectation(f2))
    assert len(dom2) == 2
    for x in dom2:
        assert np.linalg.norm(x.blocks[0] - np.diag(np.diag(x.blocks[0]))) < 1e-9

    p = 0.3
    h = f3.M.element([[[2 * p]], [[2 * (1 - p)]]])
    dom3 = multiplicative_domain(from_density(f3, TraceVector(f3.M), h))
    assert len(dom3) == 1


def test_solve_density_examples(f1, f3, f4):
    s = TraceVector(f1.M)
    rho = np.diag([0.25, 0.75])
    e = from_density(f1, s, f1.M.element([2 * rho]))
    h = solve_density(e)
    assert (h - f1.M.element([2 * rho])).norm() < 1e-9

    e4 = trace_expectation(f4)
    assert (solve_density(e4) - f4.M.identity()).norm() < 1e-9

    p = 0.3
    h3 = f3.M.element([[[0.6]], [[1.4]]])
    e3 = from_density(f3, TraceVector(f3.M), h3)
    assert (solve_density(e3) - h3).norm() < 1e-9


def test_expectation_fixes_range(f4, rng):
    e = random_expectation(f4, TraceVector(f4.M), rng)
    n = f4.N.random_element(rng)
    inn = f4.apply(n)
    assert (e(inn) - inn).norm() < 1e-9 * max(1.0, inn.norm())


def test_random_expectations_verify(f1, f2, f3, f4, f5, rng):
    for inc in (f1, f2, f3, f4, f5):
        e = random_expectation(inc, TraceVector(inc.M), rng)
        assert verify_expectation(e).ok()
