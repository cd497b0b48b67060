"""Property checks on one scenario, used by ``cfnet validate``."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .channel import realization
from .config import NetworkConfig
from .linkops import (build_precoders, subnetwork_alphas, subnetwork_sinr,
                      subnetwork_sinr_normalized)
from .sere import solve_original, solve_phi_psihat, solve_subnetwork
from .topology import generate_network


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def run_checks(config: NetworkConfig, network: int = 0, draws: int = 3) -> list[Check]:
    checks: list[Check] = []

    def add(name, ok, detail=""):
        checks.append(Check(name, bool(ok), detail))

    topo, prof = generate_network(config, network)
    M = topo.num_subnetworks
    per = topo.per_subnetwork
    add("partition counts",
        sum(k for k, _, _ in per) == topo.num_users
        and sum(n for _, n, _ in per) == topo.num_antennas
        and min(min(k, n) for k, n, _ in per) >= 1,
        f"per subnetwork {[(k, n) for k, n, _ in per]}")
    add("theta = l*l",
        all(np.array_equal(prof.theta[m][n], prof.l[m][n] ** 2)
            for m in range(M) for n in range(M)))

    alphas = subnetwork_alphas(topo, config)
    worst_p = worst_h = worst_rec = worst_form = worst_zf = 0.0
    for r in range(draws):
        chan = realization(prof, config.seed, 99, network, r)
        prec = build_precoders(chan, alphas, config.tx_power_P)
        for m in range(M):
            W = prec.xi[m] * prec.F[m]
            p = float(np.vdot(W, W).real)
            worst_p = max(worst_p, abs(p - config.tx_power_P) / config.tx_power_P)
            GF = chan.own(m) @ prec.F[m]
            worst_h = max(worst_h, float(np.abs(GF - GF.conj().T).max()))
            if alphas[m] == 0:
                worst_zf = max(worst_zf, float(np.abs(GF - np.eye(len(GF))).max()))
            s = subnetwork_sinr(m, chan, prec, config.noise_power_N0)
            worst_rec = max(worst_rec, _rel(s.reconstruct(), s.sinr))
            worst_form = max(worst_form, _rel(
                subnetwork_sinr_normalized(m, chan, prec, config.noise_power_N0), s.sinr))
            for part in (s.desired, s.intra, s.inter, s.noise):
                if np.any(part < 0):
                    add(f"nonnegative SINR terms (subnetwork {m})", False)
    add("power constraint", worst_p <= 1e-8, f"max rel dev {worst_p:.2e}")
    add("G F Hermitian", worst_h <= 1e-10, f"max abs asym {worst_h:.2e}")
    add("SINR reconstruction", worst_rec <= 1e-12, f"{worst_rec:.2e}")
    add("F-form vs W-form SINR", worst_form <= 1e-10, f"{worst_form:.2e}")
    if np.any(alphas == 0):
        add("ZF: G F = I", worst_zf <= 1e-8, f"{worst_zf:.2e}")

    in_range = True
    for m in range(M):
        sol = solve_subnetwork(prof.own(m), alphas[m], config.fp_iterations_Tmax)
        in_range &= bool(np.all(sol.phi > 0) and np.all(sol.psi_hat >= -1)
                         and np.all(sol.psi_hat < 0) and np.all(sol.lam >= sol.phi ** 2)
                         and np.all(sol.mu_hat >= 0))
    add("fixed-point ranges", in_range)

    # identities on the scenario's own profile, rescaled to unit mean
    theta = prof.own(topo.central_index)
    theta = theta / theta.mean()
    a = 0.1
    svt = solve_subnetwork(theta, a, 200)
    orig = solve_original(theta, a, 200)
    dev = max(_rel(-a * orig.psi, svt.psi_hat), _rel(orig.psi - a * orig.mu, svt.mu_hat))
    add("SVT vs original (alpha=0.1)", dev <= 1e-8, f"{dev:.2e}")
    h = 1e-6
    up = solve_phi_psihat(theta, a - h, 200).first
    dn = solve_phi_psihat(theta, a + h, 200).first
    fd = (up - dn) / (2 * h)
    dev = _rel(svt.lam, fd)
    add("lambda = d phi / dz", dev <= 1e-4, f"{dev:.2e}")
    zero = solve_subnetwork(np.zeros_like(theta), a, 5)
    add("theta = 0 fixed point",
        np.allclose(zero.phi, 1 / a, rtol=1e-15, atol=0) and np.all(zero.psi_hat == -1)
        and np.allclose(zero.lam, 1 / a ** 2, rtol=1e-15, atol=0) and np.all(zero.mu_hat == 0))
    return checks
