import dataclasses

import numpy as np
import pytest
from scipy.linalg import fractional_matrix_power, sqrtm

from conftest import random_density, random_psd
from diagchannels.channels import (
    DiagonalChannel,
    identity_channel,
    random_channel,
    random_diagonal,
    tensor,
)
from diagchannels.exceptions import DimensionError, NotPSDError
from diagchannels.factorization import (
    apply_second,
    build_factorization,
    decompose_state,
    evaluate_certificate,
    lieb_thirring_check,
    spectrum_sharing_error,
    verify_certificate,
)
from diagchannels.linalg import BlockIndex, block, hadamard, kron, ones, trace_power
from diagchannels.purity import OptimizerConfig, estimate_nu_p

FAST = OptimizerConfig(restarts=4, seed=3)


def rel(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


def zero_block_state(rng, n, k, dead):
    """A state whose ``dead`` blocks rows/columns vanish."""
    live = [i for i in range(n) if i not in dead]
    sub = random_density(rng, len(live) * k)
    rho = np.zeros((n * k, n * k), dtype=complex)
    idx = np.concatenate([np.arange(i * k, (i + 1) * k) for i in live])
    rho[np.ix_(idx, idx)] = sub
    return rho


def test_decompose_product_state(rng):
    s1, s2 = random_density(rng, 3), random_density(rng, 2)
    dec = decompose_state(kron(s1, s2), BlockIndex(3, 2))
    a = np.real(np.diag(s1))
    assert np.allclose(dec.alpha, a, atol=1e-14)
    normalized = s1 / np.sqrt(np.outer(a, a))
    assert rel(dec.tau, kron(normalized, s2)) <= 1e-12
    assert rel(dec.reconstruct(), kron(s1, s2)) <= 1e-12


def test_decompose_single_block(rng):
    sigma = random_density(rng, 2)
    e = np.zeros((3, 3))
    e[0, 0] = 1
    dec = decompose_state(kron(e, sigma), BlockIndex(3, 2))
    assert np.allclose(dec.alpha, [1, 0, 0])
    assert rel(block(dec.tau, BlockIndex(3, 2), 0, 0), sigma) <= 1e-14
    assert np.allclose(block(dec.tau, BlockIndex(3, 2), 1, 1), np.eye(2) / 2)
    assert rel(dec.reconstruct(), kron(e, sigma)) <= 1e-14


def test_decompose_maximally_mixed():
    n, k = 3, 2
    dec = decompose_state(np.eye(n * k) / (n * k), BlockIndex(n, k))
    assert np.allclose(dec.alpha, 1 / n)
    assert np.allclose(dec.a_matrix, ones(n) / n)
    assert np.allclose(dec.tau, np.eye(n * k) / k)


@pytest.mark.parametrize("n,k,dead", [(2, 2, ()), (3, 2, (1,)), (4, 3, (0, 2)), (3, 3, ())])
def test_decompose_invariants(rng, n, k, dead):
    rho = zero_block_state(rng, n, k, dead)
    idx = BlockIndex(n, k)
    dec = decompose_state(rho, idx)
    assert abs(dec.alpha.sum() - 1) <= 1e-12
    assert np.all(dec.alpha >= 0)
    for i in range(n):
        if dec.alpha[i] > 0 or i in dead:
            assert abs(np.trace(block(dec.tau, idx, i, i)) - 1) <= 1e-10
    assert rel(hadamard(kron(dec.a_matrix, ones(k)), dec.tau), rho) <= 1e-12
    assert np.linalg.eigvalsh(dec.tau).min() >= -1e-10


def test_decompose_rejects_bad_dimension(rng):
    with pytest.raises(DimensionError):
        decompose_state(random_density(rng, 5), BlockIndex(2, 2))


def test_apply_second_matches_tensor(rng):
    psi = random_channel(2, 3, 2, 0)
    x = random_density(rng, 6)
    assert rel(apply_second(psi, x, 3), tensor(identity_channel(3), psi).apply(x)) <= 1e-13


def test_factorization_identity_example():
    n, k = 2, 3
    dec = decompose_state(np.eye(n * k) / (n * k), BlockIndex(n, k))
    dec = dataclasses.replace(dec, tau=np.eye(n * k) / (n * k))
    fac = build_factorization(dec, identity_channel(k), DiagonalChannel(ones(n)))
    stacked = np.vstack(fac.v_blocks)
    assert np.allclose(stacked, np.eye(n * k) / np.sqrt(n * k))
    assert np.allclose(stacked @ stacked.conj().T, np.eye(n * k) / (n * k))


@pytest.mark.parametrize("seed", range(6))
def test_factorization_invariants(rng, seed):
    n, k, m = 3, 2, 3
    phi = random_diagonal(n, 2, seed)
    psi = random_channel(k, m, 2, seed)
    rho = random_density(rng, n * k)
    dec = decompose_state(rho, BlockIndex(n, k))
    fac = build_factorization(dec, psi, phi)
    # Block-diagonal layout of V.
    for i in range(n):
        for j in range(n):
            sub = fac.v[i * m:(i + 1) * m, j * n * m:(j + 1) * n * m]
            expected = fac.v_blocks[i] if i == j else 0
            assert np.allclose(sub, expected, atol=0)
    root = np.vstack(fac.v_blocks)
    assert rel(root, sqrtm(fac.psi_tau)) <= 1e-8
    assert rel(root @ root, fac.psi_tau) <= 1e-10
    idx = BlockIndex(n, k)
    for i, vb in enumerate(fac.v_blocks):
        assert rel(vb @ vb.conj().T, psi.apply(block(dec.tau, idx, i, i))) <= 1e-10
    assert rel(fac.product(), tensor(phi, psi).apply(rho)) <= 1e-10
    assert np.allclose(fac.k_matrix, kron(fac.phi_a, np.eye(n * m)))


def test_factorization_rejects_dimension_mismatch(rng):
    dec = decompose_state(random_density(rng, 6), BlockIndex(3, 2))
    with pytest.raises(DimensionError):
        build_factorization(dec, identity_channel(3), random_diagonal(3, 1, 0))
    with pytest.raises(DimensionError):
        build_factorization(dec, identity_channel(2), random_diagonal(2, 1, 0))


def test_factorization_rejects_corrupted_tau(rng):
    dec = decompose_state(random_density(rng, 4), BlockIndex(2, 2))
    bad = dataclasses.replace(dec, tau=-np.eye(4))
    with pytest.raises(NotPSDError):
        build_factorization(bad, identity_channel(2), random_diagonal(2, 2, 0))


def lt_oracle(v, k, p):
    vkv = v @ k @ v.conj().T
    lhs = np.trace(fractional_matrix_power(vkv, p)).real
    rhs = np.trace(fractional_matrix_power(v.conj().T @ v, p) @ fractional_matrix_power(k, p)).real
    return lhs, rhs


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 5.0])
def test_lieb_thirring_against_scipy(rng, p):
    for _ in range(10):
        v = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        k = random_psd(rng, 4)
        res = lieb_thirring_check(v, k, p)
        lhs, rhs = lt_oracle(v, k, p)
        assert res.lhs == pytest.approx(lhs, rel=1e-8)
        assert res.rhs == pytest.approx(rhs, rel=1e-8)
        assert res.slack >= -1e-9 * res.scale


def test_lieb_thirring_p1_equality(rng):
    for _ in range(20):
        v = rng.standard_normal((2, 5)) + 1j * rng.standard_normal((2, 5))
        res = lieb_thirring_check(v, random_psd(rng, 5, 3), 1)
        assert abs(res.slack) <= 1e-12 * res.scale


def test_lieb_thirring_unitary(rng):
    for p in (1.5, 3, 5):
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        res = lieb_thirring_check(q, random_psd(rng, 4), p)
        assert abs(res.slack) <= 1e-10 * res.scale


def test_lieb_thirring_rejects_non_psd(rng):
    with pytest.raises(NotPSDError) as info:
        lieb_thirring_check(np.eye(2), np.diag([1.0, -0.1]), 2)
    assert info.value.eigenvalue < 0
    with pytest.raises(DimensionError):
        lieb_thirring_check(np.eye(2), np.eye(3), 2)


def test_spectrum_sharing(rng):
    v = rng.standard_normal((2, 6)) + 1j * rng.standard_normal((2, 6))
    assert spectrum_sharing_error(v) <= 1e-12
    assert spectrum_sharing_error(v.conj().T) <= 1e-12


def test_certificate_trivial_instance(rng):
    n, k = 3, 2
    rho = kron(random_density(rng, n), random_density(rng, k))
    rep = verify_certificate(DiagonalChannel(ones(n)), identity_channel(k), rho, 2, FAST)
    assert rep.passed, rep.failing_steps
    assert all(v <= 1e-12 for v in rep.residuals.values())
    assert all(rep.slacks[s] >= -1e-12 for s in ("s1", "s2", "s3", "s4"))
    assert rep.slacks["s4"] == pytest.approx(1 - trace_power(rho, 2), abs=1e-12)


def test_certificate_random_instance(rng):
    phi = random_diagonal(3, 2, 5)
    psi = random_channel(2, 2, 2, 5)
    rep = verify_certificate(phi, psi, random_density(rng, 6), 2, FAST)
    assert rep.passed, rep.failing_steps
    d = rep.to_dict()
    assert set(d["residuals"]) == {"r1", "r2", "r3", "r4", "r5", "r6"}
    assert {"s1", "s2", "s3", "s4"} <= set(d["slacks"])
    assert d["spectrum_sharing"]["pass"]


def test_certificate_zero_block_instance(rng):
    rho = zero_block_state(rng, 3, 2, (1,))
    rep = verify_certificate(random_diagonal(3, 3, 1), random_channel(2, 3, 2, 1), rho, 3, FAST)
    assert rep.passed, rep.failing_steps


def test_certificate_reports_non_psd_k(rng):
    phi, psi = random_diagonal(2, 2, 0), random_channel(2, 2, 2, 0)
    rho = random_density(rng, 4)
    dec = decompose_state(rho, BlockIndex(2, 2))
    fac = build_factorization(dec, psi, phi)
    bad = dataclasses.replace(fac, k_matrix=fac.k_matrix - 2 * np.eye(fac.k_matrix.shape[0]))
    nu = estimate_nu_p(phi, 2, FAST), estimate_nu_p(psi, 2, FAST)
    rep = evaluate_certificate(phi, psi, rho, 2, dec, bad, *nu)
    assert not rep.passed
    assert "s1" in rep.failing_steps
    assert "NotPSDError" in rep.errors["s1"]


def test_certificate_flags_bad_estimate(rng):
    phi, psi = random_diagonal(2, 2, 0), random_channel(2, 2, 2, 0)
    rho = random_density(rng, 4)
    low = dataclasses.replace(estimate_nu_p(psi, 2, FAST), value=0.1)
    rep = verify_certificate(phi, psi, rho, 2, FAST, nu_psi=low)
    assert "s2" in rep.failing_steps and "s4" in rep.failing_steps
    unconverged = dataclasses.replace(low, converged=False)
    rep = verify_certificate(phi, psi, rho, 2, FAST, nu_psi=unconverged)
    assert rep.passed and rep.warnings


@pytest.mark.parametrize("p", [1, 1.3, 2, 2.7, 4, 5])
def test_trace_identity_on_grid(rng, p):
    phi, psi = random_diagonal(3, 2, 7), random_channel(2, 2, 3, 7)
    rep = verify_certificate(phi, psi, random_density(rng, 6), p, FAST)
    assert rep.residuals["r5"] <= 1e-10
    assert rep.passed, rep.failing_steps
