import numpy as np
import pytest

from expindex.algebra import make_algebra
from expindex.inclusion import (
    apply_embedding,
    build_inclusion,
    is_connected,
    relative_commutant,
)


def test_canonical_embeddings(f1, f2, f4):
    lam = f1.N.identity() * 3.0
    assert (f1.apply(lam) - 3.0 * f1.M.identity()).norm() < 1e-12

    n = f2.N.element([[[1.0]], [[0.0]]])
    img = f2.apply(n)
    assert np.allclose(img.blocks[0], np.diag([1.0, 0.0]))

    two = f4.N.identity() * 2.0
    img = f4.apply(two)
    assert (img - 2.0 * f4.M.identity()).norm() < 1e-12


def test_unitality_violation_rejected():
    N = make_algebra([1], "C")
    M = make_algebra([3], "M3")
    with pytest.raises(ValueError, match="unitality"):
        build_inclusion(N, M, [[2]])


def test_zero_column_rejected():
    N = make_algebra([2], "M2")
    M = make_algebra([2, 2], "M2+M2")
    with pytest.raises(ValueError):
        build_inclusion(N, M, [[1, 0]])


def test_relative_commutant_dimensions(f1, f2, f5):
    assert len(relative_commutant(f1)) == 4
    assert len(relative_commutant(f2)) == 2
    assert len(relative_commutant(f5)) == 1


def test_relative_commutant_path_count(f4):
    # dim iota(N)' cap M = sum_j sum_i lambda_ij^2
    comm = relative_commutant(f4)
    expected = int(np.sum(f4.lam**2 * np.outer(np.ones(f4.N.nblocks), np.ones(f4.M.nblocks))))
    expected = int(np.sum(f4.lam**2))
    assert len(comm) == expected == 13


def test_relative_commutant_elements_commute(f2, rng):
    for c in relative_commutant(f2):
        for g in f2.N.basis():
            ig = f2.apply(g)
            assert ((c * ig) - (ig * c)).norm() < 1e-9


def test_connectedness(f2, f4):
    assert is_connected(f4)
    assert is_connected(f2)
    # disjoint union on C^2 < C^2
    N = make_algebra([1, 1], "C2")
    M = make_algebra([1, 1], "C2'")
    disjoint = build_inclusion(N, M, [[1, 0], [0, 1]])
    assert not is_connected(disjoint)
    assert disjoint.central_intersection_dim() == 2


def test_unembed_roundtrip(f4, rng):
    n = f4.N.random_element(rng)
    assert (f4.unembed(f4.apply(n)) - n).norm() < 1e-10
    with pytest.raises(ValueError):
        f4.unembed(f4.M.basis()[1])


def test_twisted_embedding_accepted(rng):
    N = make_algebra([1, 1], "C2")
    M = make_algebra([2], "M2")
    # a random unitary twist still gives a valid inclusion
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, _ = np.linalg.qr(h)
    inc = build_inclusion(N, M, [[1], [1]], unitaries=[q])
    x = N.random_element(rng)
    y = N.random_element(rng)
    assert (inc.apply(x * y) - inc.apply(x) * inc.apply(y)).norm() < 1e-9


def test_embedding_application(f2):
    e11 = apply_embedding(f2, f2.N.element([[[1.0]], [[0.0]]]))
    assert np.allclose(e11.blocks[0], [[1, 0], [0, 0]])
