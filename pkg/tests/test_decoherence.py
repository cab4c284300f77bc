import itertools

import numpy as np
import pytest

from histq import decoherence as dec
from histq.errors import ShapeError, SizeCapError, ValidationError
from histq.historyspace import (homogeneous_history, history_projection,
                                identity_history_projection,
                                zero_history_projection)

from conftest import (P0, P1, PMINUS, PPLUS, kron_chain, pure_e1,
                      random_density, random_proj)


def embed(mats):
    return history_projection(kron_chain(mats), len(mats), mats[0].shape[0])


def all_methods_value(rho, mats_h, mats_k, d, n):
    h = homogeneous_history(mats_h)
    k = homogeneous_history(mats_k)
    hp, kp = embed(mats_h), embed(mats_k)
    M = dec.build_M(rho, d, n)
    return {
        "direct": dec.d_direct(rho, h, k),
        "series": dec.d_series(rho, hp, kp),
        "ils": dec.d_via_M(M, hp, kp),
        "stream": dec.d_via_M_streaming(rho, hp, kp),
    }


def test_hand_oracle_quarter():
    rho = pure_e1(2)
    values = all_methods_value(rho, [PPLUS, P0], [PMINUS, P0], 2, 2)
    for method, v in values.items():
        assert abs(v - 0.25) <= 1e-12, method


def test_hand_oracle_single_time():
    # tr(P0 P+ rho) with rho = |e1><e1| picks out the (0,0) entry of P+
    rho = pure_e1(2)
    values = all_methods_value(rho, [PPLUS], [P0], 2, 1)
    for method, v in values.items():
        assert abs(v - 0.5) <= 1e-12, method


def test_normalization_all_methods(rng):
    for d, n in ((2, 2), (3, 2)):
        rho = random_density(d, rng)
        eye = [np.eye(d, dtype=complex)] * n
        for method, v in all_methods_value(rho, eye, eye, d, n).items():
            assert abs(v - 1.0) <= 1e-10, method


def test_zero_history_gives_zero(rng):
    rho = random_density(2, rng)
    zero = zero_history_projection(2, 2)
    eye = identity_history_projection(2, 2)
    assert dec.d_series(rho, zero, eye) == 0j
    assert dec.d_via_M_streaming(rho, zero, eye) == 0j
    M = dec.build_M(rho, 2, 2)
    assert abs(dec.d_via_M(M, zero, eye)) <= 1e-12


def test_padding_equivalence(rng):
    rho = random_density(2, rng)
    h_short = homogeneous_history([PPLUS])
    k_long = homogeneous_history([P0, P1])
    v = dec.d_direct(rho, h_short, k_long)
    h_padded = homogeneous_history([PPLUS, np.eye(2)])
    assert abs(v - dec.d_direct(rho, h_padded, k_long)) <= 1e-12


def test_hermitian_symmetry(rng):
    rho = random_density(2, rng)
    for _ in range(5):
        p = history_projection(random_proj(4, rng), 2, 2)
        q = history_projection(random_proj(4, rng), 2, 2)
        assert abs(dec.d_series(rho, p, q) - np.conj(dec.d_series(rho, q, p))) <= 1e-10


def test_positivity_on_diagonal(rng):
    rho = random_density(3, rng)
    for _ in range(5):
        p = history_projection(random_proj(9, rng), 2, 3)
        v = dec.d_series(rho, p, p)
        assert v.real >= -1e-10
        assert abs(v.imag) <= 1e-10


def test_series_matches_direct_random(rng):
    for d, n in ((2, 2), (3, 2), (2, 3)):
        rho = random_density(d, rng)
        for _ in range(5):
            mats_h = [random_proj(d, rng) for _ in range(n)]
            mats_k = [random_proj(d, rng) for _ in range(n)]
            v1 = dec.d_direct(rho, homogeneous_history(mats_h), homogeneous_history(mats_k))
            v2 = dec.d_series(rho, embed(mats_h), embed(mats_k))
            assert abs(v1 - v2) <= 1e-10


def test_resolution_of_identity_sums_to_one(rng):
    rho = random_density(2, rng)
    total = 0j
    for a, b, c, e in itertools.product((P0, P1), repeat=4):
        total += dec.d_series(rho, embed([a, b]), embed([c, e]))
    assert abs(total - 1.0) <= 1e-10


def test_basis_tuples_structure():
    rho = pure_e1(2)
    tuples = list(dec.build_basis_tuples(2, 2, rho))
    assert len(tuples) == 16
    assert tuples[0].index == (1, 1, 1, 1)
    eps = np.column_stack([bt.eps for bt in tuples])
    til = np.column_stack([bt.eps_tilde for bt in tuples])
    assert np.allclose(eps.conj().T @ eps, np.eye(16), atol=1e-12)
    assert np.allclose(til.conj().T @ til, np.eye(16), atol=1e-12)
    e0000 = np.zeros(16)
    e0000[0] = 1.0
    assert np.allclose(tuples[0].eps, e0000, atol=1e-12)


def test_basis_tuples_dimension_check():
    with pytest.raises(ShapeError):
        list(dec.build_basis_tuples(3, 2, pure_e1(2)))


def test_build_m_contracts(rng):
    for d, n in ((2, 2), (3, 2), (2, 1)):
        rho = random_density(d, rng)
        M = dec.build_M(rho, d, n)
        assert abs(np.trace(M.matrix) - 1.0) <= 1e-9
        top = float(np.linalg.svd(M.matrix, compute_uv=False)[0])
        assert top <= 1.0 + 1e-8


def test_build_m_singular_values_are_weights(rng):
    rho = random_density(2, rng)
    M = dec.build_M(rho, 2, 1)
    svals = np.sort(np.linalg.svd(M.matrix, compute_uv=False))[::-1]
    expected = np.sort(np.concatenate([rho.weights] * 2))[::-1]
    assert np.allclose(svals, expected, atol=1e-10)


def test_build_m_order_one_hand_case():
    M = dec.build_M(pure_e1(2), 2, 1)
    p = history_projection(P0, 1, 2)
    assert abs(dec.d_via_M(M, p, p) - 1.0) <= 1e-12


def test_build_m_cap_points_to_streaming():
    with pytest.raises(SizeCapError, match="streaming"):
        dec.build_M(pure_e1(4), 4, 3)


def test_via_m_additive_in_each_slot(rng):
    rho = random_density(2, rng)
    M = dec.build_M(rho, 2, 2)
    basis = np.linalg.qr(rng.standard_normal((4, 4))
                         + 1j * rng.standard_normal((4, 4)))[0]
    p1 = history_projection(basis[:, :1] @ basis[:, :1].conj().T, 2, 2)
    p2 = history_projection(basis[:, 1:3] @ basis[:, 1:3].conj().T, 2, 2)
    whole = history_projection(basis[:, :3] @ basis[:, :3].conj().T, 2, 2)
    q = history_projection(random_proj(4, rng), 2, 2)
    gap = dec.d_via_M(M, whole, q) - dec.d_via_M(M, p1, q) - dec.d_via_M(M, p2, q)
    assert abs(gap) <= 1e-10


def test_streaming_matches_materialized(rng):
    for d, n in ((2, 2), (3, 2)):
        rho = random_density(d, rng)
        M = dec.build_M(rho, d, n)
        for _ in range(5):
            p = history_projection(random_proj(d ** n, rng), n, d)
            q = history_projection(random_proj(d ** n, rng), n, d)
            assert abs(dec.d_via_M(M, p, q) - dec.d_via_M_streaming(rho, p, q)) <= 1e-10


def test_state_fingerprint_distinguishes_states(rng):
    a = dec.state_fingerprint(pure_e1(2))
    b = dec.state_fingerprint(random_density(2, rng))
    assert a != b
    assert a == dec.state_fingerprint(pure_e1(2))
    assert len(a) == 64


def test_make_evaluator_unknown_method(rng):
    with pytest.raises(ValidationError):
        dec.make_evaluator("nope", random_density(2, rng), 2, 2)


def test_evaluator_kinds(rng):
    rho = random_density(2, rng)
    direct = dec.make_evaluator("direct", rho, 2, 2)
    series = dec.make_evaluator("series", rho, 2, 2)
    h = homogeneous_history([P0, PPLUS])
    with pytest.raises(ShapeError):
        direct.value(embed([P0, PPLUS]), embed([P0, P0]))
    v1 = direct.value_history(h, h)
    v2 = series.value_history(h, h)
    assert abs(v1 - v2) <= 1e-10


def test_verify_axioms_all_methods(rng):
    rho = random_density(2, rng)
    for method in ("direct", "series", "ils", "stream"):
        ev = dec.make_evaluator(method, rho, 2, 2)
        report = dec.verify_axioms(ev, samples=40, seed=11)
        assert report.all_within_tol, (method, report.as_dict())
        assert report.method == method
        assert report.samples == 40


def test_verify_axioms_deterministic(rng):
    rho = random_density(2, rng)
    ev = dec.make_evaluator("series", rho, 2, 2)
    r1 = dec.verify_axioms(ev, samples=15, seed=4)
    r2 = dec.verify_axioms(ev, samples=15, seed=4)
    assert r1 == r2


def test_build_m_deterministic(rng):
    rho = random_density(3, rng)
    m1 = dec.build_M(rho, 3, 2).matrix
    m2 = dec.build_M(rho, 3, 2).matrix
    assert m1.tobytes() == m2.tobytes()


def test_d_direct_rejects_dim_mismatch(rng):
    rho = random_density(2, rng)
    h3 = homogeneous_history([np.eye(3)])
    with pytest.raises(ShapeError):
        dec.d_direct(rho, h3, h3)
