import numpy as np
import pytest

from cfnet import streams
from cfnet.channel import ChannelRealization, assemble_channel, realization
from cfnet.config import NetworkConfig
from cfnet.linkops import (DimensionMismatch, PrecoderSet, Singular, ZeroPrecoder,
                           build_precoders, compute_sinr, empirical_resolvent_diag,
                           mc_ergodic_rate, power_normalization, realization_rates,
                           rzf_matrix, subnetwork_alphas, subnetwork_sinr,
                           subnetwork_sinr_normalized)
from cfnet.sere import solve_subnetwork, det_equivalents
from cfnet.topology import generate_network

from conftest import block_profile, gaussian_channel, random_blocks


def _cn(shape, rng):
    return gaussian_channel(np.ones(shape), rng)


def test_single_user_precoder_is_scaled_conjugate():
    g = np.array([[1 + 1j, 2 - 0.5j, -0.3j]])
    a = 0.2
    F = rzf_matrix(g, a)
    expect = g.conj().T / (np.vdot(g, g).real + 3 * a)
    assert np.allclose(F, expect, rtol=1e-13, atol=0)


def test_zf_inverts_channel():
    G = _cn((64, 256), np.random.default_rng(0))
    F = rzf_matrix(G, 0.0)
    assert np.max(np.abs(G @ F - np.eye(64))) <= 1e-8


@pytest.mark.parametrize("alpha", [1e-3, 0.1, 2.0])
def test_rzf_product_identity(alpha):
    G = _cn((20, 60), np.random.default_rng(1))
    F = rzf_matrix(G, alpha)
    rhs = np.eye(20) - alpha * np.linalg.inv(G @ G.conj().T / 60 + alpha * np.eye(20))
    assert np.max(np.abs(G @ F - rhs)) <= 1e-10
    GF = G @ F
    assert np.max(np.abs(GF - GF.conj().T)) <= 1e-10


def test_rzf_badly_scaled_channel():
    # path-loss sized entries: equilibration keeps the solve accurate
    rng = np.random.default_rng(2)
    G = _cn((10, 40), rng) * np.sqrt(rng.uniform(1e-12, 1e-5, size=(10, 40)))
    F = rzf_matrix(G, 1e-13)
    ref = G.conj().T @ np.linalg.inv(G @ G.conj().T + 40e-13 * np.eye(10))
    assert np.allclose(F, ref, rtol=1e-7, atol=0)


def test_singular_channels():
    G = _cn((3, 6), np.random.default_rng(3))
    G[1] = G[0]
    with pytest.raises(Singular):
        rzf_matrix(G, 0.0)
    with pytest.raises(Singular):
        rzf_matrix(_cn((4, 4), np.random.default_rng(4)), 0.0)
    # regularization removes the singularity
    assert np.all(np.isfinite(rzf_matrix(G, 0.1)))


def test_power_normalization_examples():
    assert power_normalization(np.eye(4, dtype=complex), 1.0) == pytest.approx(0.5)
    assert power_normalization(np.full((1, 1), 2.0 + 0j), 4.0) == pytest.approx(1.0)
    with pytest.raises(ZeroPrecoder):
        power_normalization(np.zeros((3, 2), complex), 1.0)
    F = rzf_matrix(_cn((5, 12), np.random.default_rng(5)), 0.3)
    xi = power_normalization(F, 2.5)
    assert np.linalg.norm(xi * F) ** 2 == pytest.approx(2.5, rel=1e-12)


def _two_net_channel(seed=0, K=(6, 5), N=(15, 12)):
    rng = np.random.default_rng(seed)
    prof = block_profile(random_blocks(K, N, rng))
    return prof, assemble_channel(prof, rng)


def test_single_user_single_network_sinr():
    g = np.array([[0.5 + 1j, -1.0, 0.25j, 2.0]])
    chan = ChannelRealization([[g]])
    prec = build_precoders(chan, [0.7], 3.0)
    s = compute_sinr(0, 0, chan, prec, 0.01)
    assert s.intra == 0 and s.inter == 0
    assert s.sinr == pytest.approx(3.0 * np.vdot(g, g).real / 0.01, rel=1e-12)


def test_sinr_forms_agree_and_reconstruct():
    prof, chan = _two_net_channel()
    prec = build_precoders(chan, [0.05, 0.3], 1.0)
    for m in range(2):
        s = subnetwork_sinr(m, chan, prec, 1e-2)
        w = subnetwork_sinr_normalized(m, chan, prec, 1e-2)
        assert np.max(np.abs(w / s.sinr - 1)) <= 1e-10
        assert np.allclose(s.reconstruct(), s.sinr, rtol=1e-14, atol=0)
        for k in range(len(s.sinr)):
            one = compute_sinr(m, k, chan, prec, 1e-2)
            assert one.sinr == pytest.approx(s.sinr[k], rel=1e-12)
            assert one.inter == pytest.approx(s.inter[k], rel=1e-12)
        assert np.all(s.desired > 0) and np.all(s.intra >= 0) and np.all(s.inter > 0)


def test_quadratic_form_identity():
    prof, chan = _two_net_channel(1)
    prec = build_precoders(chan, [0.1, 0.1], 1.0)
    s = subnetwork_sinr(0, chan, prec, 1.0)
    G, F = chan.own(0), prec.F[0]
    quad = np.array([(F[:, k].conj() @ np.outer(G[k].conj(), G[k]) @ F[:, k]).real
                     for k in range(len(G))])
    assert np.allclose(s.desired, quad, rtol=1e-12, atol=0)


def test_one_subnetwork_has_no_inter_term():
    rng = np.random.default_rng(2)
    prof = block_profile([[rng.uniform(0.5, 1, (4, 9))]])
    chan = assemble_channel(prof, rng)
    prec = build_precoders(chan, [0.1], 1.0)
    assert np.all(subnetwork_sinr(0, chan, prec, 1.0).inter == 0)


def test_dimension_mismatch():
    _, chan = _two_net_channel()
    prec = build_precoders(chan, [0.1, 0.1], 1.0)
    bad = PrecoderSet(prec.F[:1], prec.xi[:1], prec.alpha[:1])
    with pytest.raises(DimensionMismatch):
        subnetwork_sinr(0, chan, bad, 1.0)
    with pytest.raises(DimensionMismatch):
        compute_sinr(0, 99, chan, prec, 1.0)


def _mc_config(**kw):
    base = dict(total_users_K=16, antenna_ratio_beta=2, num_subnetworks_M=2, seed=3,
                mc_realizations=5)
    base.update(kw)
    return NetworkConfig(**base)


def test_single_realization_is_one_pass():
    cfg = _mc_config()
    topo, prof = generate_network(cfg, 1)
    res = mc_ergodic_rate(topo, prof, cfg, 1, network_index=1)
    chan = assemble_channel(prof, lambda m, n: streams.stream(
        cfg.seed, streams.CHANNEL, 1, 0, 0, m, n))
    rates = realization_rates(chan, subnetwork_alphas(topo, cfg), 1.0, cfg.noise_power_N0)
    for a, b in zip(res.rates, rates):
        assert np.array_equal(a, b)
    assert res.realizations == 1 and res.time_s > 0


def test_rates_vanish_with_noise():
    topo, prof = generate_network(_mc_config(), 0)
    prev = np.inf
    for n0 in (1e-12, 1e-9, 1e-6, 1e-3, 1.0):
        cfg = _mc_config(noise_power_N0=n0, reg_policy="fixed(0.01)")
        r = mc_ergodic_rate(topo, prof, cfg, 3).central_rate
        assert r < prev
        prev = r
    assert prev < 1e-6


def test_mc_thread_count_invariant():
    cfg = _mc_config(mc_realizations=6)
    topo, prof = generate_network(cfg, 0)
    a = mc_ergodic_rate(topo, prof, cfg)
    b = mc_ergodic_rate(topo, prof, cfg, threads=3)
    for x, y in zip(a.rates, b.rates):
        assert np.array_equal(x, y)


def test_zf_mc_has_identity_channel_product():
    cfg = _mc_config(reg_policy="zf", antenna_ratio_beta=4)
    topo, prof = generate_network(cfg, 0)
    chan = realization(prof, 0, 0)
    prec = build_precoders(chan, subnetwork_alphas(topo, cfg), 1.0)
    for m in range(2):
        K = chan.own(m).shape[0]
        assert np.max(np.abs(chan.own(m) @ prec.F[m] - np.eye(K))) <= 1e-8
        s = subnetwork_sinr(m, chan, prec, cfg.noise_power_N0)
        assert np.allclose(s.desired, 1.0, rtol=1e-8) and np.all(s.intra <= 1e-14)


@pytest.mark.slow
def test_signal_level_receiver_oracle():
    """Synthesize transmissions and measure received energies."""
    cfg = NetworkConfig(total_users_K=8, antenna_ratio_beta=2, num_subnetworks_M=2,
                        seed=17, mc_realizations=200)
    topo, prof = generate_network(cfg, 0)
    res = mc_ergodic_rate(topo, prof, cfg)
    alphas = subnetwork_alphas(topo, cfg)
    P, N0, T = cfg.tx_power_P, cfg.noise_power_N0, 4000
    sym_rng = np.random.default_rng(123)
    M = 2
    acc = [np.zeros(len(u)) for u in topo.users_of]
    for r in range(cfg.mc_realizations):
        chan = assemble_channel(prof, lambda m, n: streams.stream(
            cfg.seed, streams.CHANNEL, 0, r, 0, m, n))
        W = []
        for n in range(M):
            G = chan.own(n)
            F = G.conj().T @ np.linalg.inv(G @ G.conj().T + G.shape[1] * alphas[n] * np.eye(len(G)))
            W.append(F * np.sqrt(P / np.sum(np.abs(F) ** 2)))
        s = [gaussian_channel(np.ones((w.shape[1], T)), sym_rng) for w in W]
        x = [w @ sn for w, sn in zip(W, s)]
        for m in range(M):
            noise = gaussian_channel(np.full((len(chan.own(m)), T), N0), sym_rng)
            y = sum(chan.G[m][n] @ x[n] for n in range(M)) + noise
            wanted = (chan.own(m) @ W[m]).diagonal()[:, None] * s[m]
            sinr = np.mean(np.abs(wanted) ** 2, axis=1) / np.mean(np.abs(y - wanted) ** 2, axis=1)
            acc[m] += np.log2(1 + sinr)
    measured = np.concatenate(acc).mean() / cfg.mc_realizations
    expected = np.concatenate(res.rates).mean()
    assert measured == pytest.approx(expected, rel=0.01)


def test_resolvent_of_zero_channel():
    q, s, qt, st = empirical_resolvent_diag(np.zeros((3, 5), complex), -2.0)
    assert np.allclose(q, 0.5) and np.allclose(s, 0.25)
    assert np.allclose(qt, 0.5) and np.allclose(st, 0.25)


def test_resolvent_scalar():
    q, s, qt, st = empirical_resolvent_diag(np.array([[3 + 4j]]), -0.5)
    assert q[0] == pytest.approx(1 / 25.5) and s[0] == pytest.approx(1 / 25.5 ** 2)
    assert qt[0] == pytest.approx(1 / 25.5)


def test_resolvent_block_inversion_identity():
    rng = np.random.default_rng(6)
    G = _cn((7, 15), rng)
    z = -0.3
    q, s, qt, st = empirical_resolvent_diag(G, z)
    A = G @ G.conj().T / 15 - z * np.eye(7)
    for i in range(7):
        rest = [j for j in range(7) if j != i]
        a = A[rest, i]
        schur = A[i, i] - a.conj() @ np.linalg.solve(A[np.ix_(rest, rest)], a)
        assert q[i] == pytest.approx((1 / schur).real, rel=1e-8)
    Q = np.linalg.inv(A)
    assert np.allclose(s, (Q @ Q).diagonal().real, rtol=1e-10)
    Qt = np.linalg.inv(G.conj().T @ G / 15 - z * np.eye(15))
    assert np.allclose(qt, Qt.diagonal().real, rtol=1e-10)
    assert np.allclose(st, (Qt @ Qt).diagonal().real, rtol=1e-10)


def test_resolvent_rejects_nonnegative_z():
    with pytest.raises(ValueError):
        empirical_resolvent_diag(np.ones((2, 2), complex), 0.0)


@pytest.mark.slow
def test_inter_term_matches_deterministic_limit():
    rng = np.random.default_rng(8)
    K, N = (40, 50), (120, 150)
    prof = block_profile(random_blocks(K, N, rng))
    alphas = [0.1, 0.2]
    sols = [solve_subnetwork(prof.own(m), alphas[m], 200) for m in range(2)]
    det = det_equivalents(sols, prof, 1.0, 1.0)
    acc = [np.zeros(k) for k in K]
    R = 300
    for r in range(R):
        chan = realization(prof, 1, r)
        prec = build_precoders(chan, alphas, 1.0)
        for m in range(2):
            acc[m] += subnetwork_sinr(m, chan, prec, 1.0).inter
    for m in range(2):
        assert (acc[m] / R).mean() == pytest.approx(det.inter[m].mean(), rel=0.10)
