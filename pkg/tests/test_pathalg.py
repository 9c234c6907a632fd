import numpy as np
import pytest
import scipy.sparse as sp

from so3cat.pathalg import (Generators, PathOperator, TraceFunctional, bmw_relations, bratteli,
                            e_op, jw, jw_basis, jw_coefficients, jw_kernel_direct, jw_vertex_ranks,
                            jw_vertex_traces, markov_check, path_space, phi_q_norm, t_op,
                            tensor_identity, tl_relations, u_op)
from so3cat.nimrep import unfold_bipartite
from so3cat.qnum import make_context, qint

from conftest import system


def test_path_space_counts():
    _, g, _, _ = system("E8", 4)
    D = g.adjacency
    for n in range(5):
        S = path_space(g, n)
        assert len(S) == np.linalg.matrix_power(D, n).sum()
        for x in range(g.n):
            for y in range(g.n):
                assert len(S.block(x, y)) == np.linalg.matrix_power(D, n)[x, y]


@pytest.mark.parametrize("family,m", [("A", 2), ("Sigma", 2), ("E8", 4)])
def test_generators_preserve_blocks(family, m):
    _, g, E, W = system(family, m)
    G = Generators(g, E, W, 4)
    for i in (1, 2, 3):
        assert G.e(i).respects_blocks()
        assert G.u(i).respects_blocks()


def test_tl_relations_A4():
    _, g, E, W = system("A", 2)
    res = tl_relations(g, E, W, 5)
    for name in ("e^2=[3]e", "u^2=u", "ue=0", "eu=0", "eee=e", "eue=e", "uue",
                 "far commute", "ueu exchange", "uuu exchange", "self-adjoint"):
        assert res[name] < 1e-9, name


@pytest.mark.parametrize("family,m", [("Sigma", 3), ("E8c", 4), ("E14c", 7)])
def test_tl_relations_other(family, m):
    _, g, E, W = system(family, m)
    assert max(tl_relations(g, E, W, 4).values()) < 1e-9


def test_u_op_checks_idempotence():
    _, g, E, W = system("A", 2)
    bad = W.copy()
    bad.W[next(iter(bad.W))] *= 1.5
    with pytest.raises(ValueError):
        u_op(g, bad, 1, 3)


@pytest.mark.parametrize("family,m", [("A", 2), ("Sigma", 2), ("E8", 4)])
def test_bmw(family, m):
    _, g, E, W = system(family, m)
    assert max(bmw_relations(g, W, 5, E).values()) < 1e-9


@pytest.mark.parametrize("family,m", [("A", 2), ("E8", 4), ("Sigma", 3)])
def test_markov(family, m):
    _, g, E, _ = system(family, m)
    assert markov_check(g, E, 5)["markov"] < 1e-9


def test_trace_values():
    ctx, g, E, W = system("A", 2)
    t = TraceFunctional(g)
    one0 = PathOperator(path_space(g, 0), sp.identity(g.n, format="csr", dtype=complex))
    for v in range(g.n):
        assert t(one0, v) == pytest.approx(1)
    S = path_space(g, 2)
    for i in (0, 3, len(S) - 1):
        M = sp.csr_matrix(([1.0], ([i], [i])), shape=(len(S), len(S)), dtype=complex)
        expect = qint(ctx, 3) ** -2 * g.phi[S.ends[i]] / g.phi[S.starts[i]]
        assert t(PathOperator(S, M)) == pytest.approx(expect)


def test_jw_small():
    ctx, g, E, W = system("A", 2)
    assert (jw(g, W, 1, E) - PathOperator(path_space(g, 1), sp.identity(len(path_space(g, 1)),
                                          format="csr", dtype=complex))).max_abs() < 1e-12
    G = Generators(g, E, W, 2)
    f2 = G.one() - (1 / qint(ctx, 3)) * G.e(1) - G.u(1)
    assert (jw(g, W, 2, E) - f2).max_abs() < 1e-9


@pytest.mark.parametrize("family,m", [("A", 2), ("Sigma", 2), ("E8c", 4)])
def test_jw_recursion_matches_kernel(family, m):
    _, g, E, W = system(family, m)
    for j in range(1, min(2 * m, 5) + 1):
        P = jw(g, W, j, E)
        assert (P @ P - P).max_abs() < 1e-8
        D = jw_kernel_direct(g, W, j, E)
        assert np.allclose(P.dense(), D.dense(), atol=1e-8)
        G = Generators(g, E, W, j)
        for i in range(1, j):
            assert (G.e(i) @ P).max_abs() < 1e-8
            assert (G.u(i) @ P).max_abs() < 1e-8


def test_jw_coefficient_blowup():
    ctx = make_context(2)
    with pytest.raises(ZeroDivisionError):
        jw_coefficients(ctx, 2 * 2)


@pytest.mark.parametrize("family,m", [("A", 1), ("A", 2), ("A", 3), ("Sigma", 2), ("E8", 4)])
def test_jw_traces(family, m):
    ctx, g, E, W = system(family, m)
    for j in range(2 * m + 1):
        assert np.allclose(jw_vertex_traces(g, W, j, E), qint(ctx, 2 * j + 1), atol=1e-9)
    assert (jw_vertex_ranks(g, W, 2 * m, E) == 1).all()


@pytest.mark.parametrize("m", [1, 2, 3])
def test_t_operator_A(m):
    _, g, E, W = system("A", m)
    T, info = t_op(g, W, E)
    assert info["T^2-f_m"] < 1e-8
    assert info["word"] < 1e-8
    assert info["symmetric"] < 1e-8
    T2, _ = t_op(g, W, E, eps_star=-1)
    assert (T2 + T).max_abs() < 1e-10
    # the two projections (f_m +- T)/2 swap under the sign flip
    S, K = jw_basis(g, W, m, E)
    fm = PathOperator(S, sp.csr_matrix(K @ K.conj().T))
    plus = 0.5 * (fm + T)
    assert (plus @ plus - plus).max_abs() < 1e-8
    assert ((0.5 * (fm + T2)) - (0.5 * (fm - T))).max_abs() < 1e-10


def test_t_operator_E8():
    _, g, E, W = system("E8", 4)
    _, info = t_op(g, W, E)
    assert info["ok"]


@pytest.mark.parametrize("family,m", [("Sigma", 2), ("E8c", 4)])
def test_t_operator_reported_off_A(family, m):
    # at the degree-2m embedding the word relation holds but T^2 = f_m does not
    _, g, E, W = system(family, m)
    _, info = t_op(g, W, E, strict=False)
    assert info["word"] < 1e-8
    assert not info["ok"]
    with pytest.raises(ValueError):
        t_op(g, W, E, strict=True)


@pytest.mark.xfail(strict=True, reason="displayed kernel element does not vanish in these representations")
@pytest.mark.parametrize("family,m", [("A", 2), ("Sigma", 2), ("E8", 4)])
def test_phi_q_vanishes(family, m):
    _, g, E, W = system(family, m)
    assert phi_q_norm(g, W, E) < 1e-8


def test_tensor_identity():
    _, g, E, _ = system("A", 2)
    e1 = e_op(g, E, 1, 2)
    assert (tensor_identity(e1, 2) - e_op(g, E, 1, 4)).max_abs() < 1e-12


def test_bratteli():
    _, g, _, _ = system("A", 1)
    b = bratteli(g, 4, start_vertex=0)
    assert b["algebra_dims"][0] == 1
    assert b["dims"][1].sum() == 2
    h = unfold_bipartite(g)
    n = g.n
    for A in b["inclusions"]:
        assert np.array_equal(A, h.adjacency[:n, n:])
