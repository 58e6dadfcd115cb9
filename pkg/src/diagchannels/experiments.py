"""Batch experiments behind the command-line interface.

Every function returns a JSON-ready report dict with the layout
``{"command", "config", "instances", "summary"}``. Instance ``i`` draws all
of its randomness from ``default_rng([seed, i, ...])`` so a report depends
only on its configuration, never on scheduling. Wall-clock time is kept out
of the reports to keep them byte-reproducible.
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from . import channels as chn
from .factorization import lieb_thirring_check, verify_certificate
from .linalg import herm_eig, kron, relative_residual, trace_power
from .purity import (
    OptimizerConfig,
    estimate_nu_p,
    estimate_nu_p_product,
    estimate_s_min,
)
from .serialization import vector_to_json
from .validation import projector

MULT_GAP_TOL = 1e-5
ENTROPY_GAP_TOL = 1e-4
LT_FUZZ_TOL = 1e-9
LT_P1_TOL = 1e-12
LT_UNITARY_TOL = 1e-10
DEFAULT_P_GRID = (1.0, 1.5, 2.0, 3.0, 5.0)
MAX_BLOCKS = 4

STATE_KINDS = ("mixed", "pure", "product", "zero_block")


def named_channel(name: str):
    """Channels addressable by name: ``identity:n``, ``dephase:n``, ``depolarize:d``, ``wh:d`` / ``whd``."""
    key, _, arg = name.partition(":")
    if key.startswith("wh") and key[2:].isdigit():
        return chn.werner_holevo(int(key[2:]))
    try:
        dim = int(arg)
    except ValueError:
        raise ValueError(f"unknown named channel {name!r}") from None
    factories = {
        "identity": chn.identity_channel,
        "dephase": chn.dephasing_channel,
        "depolarize": chn.depolarizing_channel,
        "wh": chn.werner_holevo,
    }
    if key not in factories:
        raise ValueError(f"unknown named channel {name!r}")
    return factories[key](dim)


def _config_dict(cfg: OptimizerConfig) -> dict:
    return asdict(cfg)


def _report(command: str, config: dict, instances: list, summary: dict) -> dict:
    return {"command": command, "config": config, "instances": instances, "summary": summary}


def nu_report(ch, p_list, cfg: OptimizerConfig, source: str = "") -> dict:
    instances = []
    for p in p_list:
        est = estimate_nu_p(ch, p, cfg)
        instances.append(
            {
                "p": float(p),
                "value": est.value,
                "maximizer": vector_to_json(est.maximizer),
                "per_restart_values": est.per_restart_values,
                "iterations_used": est.iterations_used,
                "converged": est.converged,
            }
        )
    config = {
        "channel": source,
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "p": [float(p) for p in p_list],
        "optimizer": _config_dict(cfg),
    }
    summary = {
        "values": {repr(float(r["p"])): r["value"] for r in instances},
        "all_converged": all(r["converged"] for r in instances),
        "failures": 0,
    }
    return _report("nu", config, instances, summary)


def _random_ranks(rng: np.random.Generator, n: int, k: int) -> tuple[int, int]:
    return int(rng.integers(1, n + 1)), int(rng.integers(2, k + 2))


def mult_test(n: int, k: int, p_list, instances: int, seed: int, cfg: OptimizerConfig,
              diagonal_tp: bool = True) -> dict:
    """Compare ``nu_p(Phi (x) Psi)`` with ``nu_p(Phi) nu_p(Psi)`` for diagonal ``Phi``."""
    _check_caps(n, k)
    records = []
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        diag_rank, kraus_rank = _random_ranks(rng, n, k)
        phi = chn.random_diagonal(n, diag_rank, [seed, i, 0], trace_preserving=diagonal_tp)
        psi = chn.random_channel(k, k, kraus_rank, [seed, i, 1])
        for p in p_list:
            joint, bound = estimate_nu_p_product(phi, psi, p, cfg)
            product = bound.value
            records.append(
                {
                    "instance": i,
                    "p": float(p),
                    "diag_rank": diag_rank,
                    "kraus_rank": kraus_rank,
                    "nu_phi": bound.phi_estimate.value,
                    "nu_psi": bound.psi_estimate.value,
                    "nu_product_channel": joint.value,
                    "signed_gap": (joint.value - product) / product,
                    "gap": abs(joint.value - product) / product,
                    "converged": joint.converged and bound.phi_estimate.converged
                    and bound.psi_estimate.converged,
                }
            )
    flagged = [r for r in records if r["gap"] > MULT_GAP_TOL]
    config = {
        "n": n,
        "k": k,
        "p": [float(p) for p in p_list],
        "instances": instances,
        "seed": seed,
        "diagonal_trace_preserving": diagonal_tp,
        "optimizer": _config_dict(cfg),
        "gap_threshold": MULT_GAP_TOL,
        "gap_threshold_note": "reflects optimizer precision; the exact gap is zero",
    }
    summary = {
        "records": len(records),
        "max_gap": max((r["gap"] for r in records), default=0.0),
        "flagged": [[r["instance"], r["p"]] for r in flagged],
        "failures": len(flagged),
    }
    return _report("mult-test", config, records, summary)


def _check_caps(n: int, k: int, cap: int = MAX_BLOCKS) -> None:
    if not (1 <= n <= cap and 1 <= k <= cap):
        raise ValueError(f"n and k must lie in [1, {cap}], got n={n}, k={k}")


def random_instance_state(kind: str, n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """A test state on ``C^n (x) C^k`` of the given kind."""
    seed = rng.integers(2**32)
    if kind == "mixed":
        return chn.random_state(n * k, seed, rank=int(rng.integers(1, n * k + 1)))
    if kind == "pure":
        return chn.random_state(n * k, seed, rank=1)
    if kind == "product":
        return kron(chn.random_state(n, seed), chn.random_state(k, seed + 1))
    if kind == "zero_block":
        keep = rng.permutation(n)[: int(rng.integers(1, n)) if n > 1 else 1]
        mask = np.zeros(n)
        mask[keep] = 1
        proj = np.diag(np.kron(mask, np.ones(k)))
        rho = proj @ chn.random_state(n * k, seed) @ proj
        return rho / np.trace(rho).real
    raise ValueError(f"unknown state kind {kind!r}")


def replay(n_list, k_list, p_list, instances: int, seed: int, cfg: OptimizerConfig,
           phi=None, psi=None, rho=None) -> dict:
    """Certificate replay on seeded random instances (or on supplied channels/state).

    Instance ``i`` uses ``p = p_list[i % len(p_list)]`` and cycles through
    mixed, pure, product and zero-block states. Even instances use a
    trace-preserving diagonal map, odd ones an unnormalized ``C``.
    """
    for n in n_list:
        for k in k_list:
            _check_caps(n, k)
    reports = []
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        p = float(p_list[i % len(p_list)])
        kind = STATE_KINDS[(i // len(p_list)) % len(STATE_KINDS)]
        meta = {"instance": i, "state_kind": kind}
        inst_phi, inst_psi = phi, psi
        if inst_phi is None:
            n = int(rng.choice(list(n_list)))
            diag_rank = int(rng.integers(1, n + 1))
            inst_phi = chn.random_diagonal(n, diag_rank, [seed, i, 0], trace_preserving=i % 2 == 0)
            meta["diag_rank"] = diag_rank
        if inst_psi is None:
            k = int(rng.choice(list(k_list)))
            kraus_rank = int(rng.integers(1, k + 2))
            inst_psi = chn.random_channel(k, k, kraus_rank, [seed, i, 1])
            meta["kraus_rank"] = kraus_rank
        n, k = inst_phi.dim_in, inst_psi.dim_in
        if rho is None:
            state = random_instance_state(kind, n, k, rng)
        else:
            state = rho
            meta["state_kind"] = "file"
        report = verify_certificate(inst_phi, inst_psi, state, p, cfg, instance=meta)
        reports.append(report.to_dict())

    worst_residual: dict = {}
    worst_slack: dict = {}
    for r in reports:
        for name, val in r["residuals"].items():
            worst_residual[name] = max(worst_residual.get(name, 0.0), val)
        for name, val in r["slacks"].items():
            if name == "s2_blocks":
                continue
            if name == "s1":
                val = val / r["scales"]["s1"]
            worst_slack[name] = min(worst_slack.get(name, np.inf), val)
    worst_sharing = max((r["spectrum_sharing"]["max_rel_error"] for r in reports), default=0.0)
    failed = [r["instance"]["instance"] for r in reports if r["verdict"] != "pass"]
    config = {
        "n": [int(n) for n in n_list],
        "k": [int(k) for k in k_list],
        "p": [float(p) for p in p_list],
        "instances": instances,
        "seed": seed,
        "optimizer": _config_dict(cfg),
    }
    summary = {
        "passed": len(reports) - len(failed),
        "failed_instances": failed,
        "worst_residual": worst_residual,
        "worst_slack": {k: float(v) for k, v in worst_slack.items()},
        "worst_slack_note": "s1 is divided by its scale; s2-s4 are absolute",
        "worst_spectrum_sharing": worst_sharing,
        "failures": len(failed),
    }
    return _report("replay", config, reports, summary)


def wh_values(d: int, p: float) -> dict:
    """Product-state and maximally-entangled output values for the Werner-Holevo pair."""
    single = (d - 1) ** (1 - p)  # spectrum {0} U {1/(d-1)} x (d-1)
    product_pth = single**2
    wh = chn.werner_holevo(d)
    omega = chn.max_entangled_state(d)
    out = chn.tensor(wh, wh).apply(projector(omega))
    spectrum = herm_eig(out).eigenvalues
    entangled_pth = trace_power(out, p)
    closed = ((1 - 2 / d) * np.eye(d * d) + projector(omega)) / (d - 1) ** 2
    return {
        "product_pth_power": product_pth,
        "entangled_pth_power": entangled_pth,
        "entangled_spectrum": [float(x) for x in spectrum],
        "closed_form_residual": relative_residual(out, closed),
        "closed_form_pth_power": trace_power(closed, p),
        "ratio_pth_power": entangled_pth / product_pth,
        "ratio_norm": (entangled_pth / product_pth) ** (1 / p),
    }


def wh_experiment(p_list, d: int, cfg: OptimizerConfig) -> dict:
    """Werner-Holevo multiplicativity check (violated for large ``p``)."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    wh = chn.werner_holevo(d)
    pair = chn.tensor(wh, wh)
    e0 = np.eye(d, dtype=complex)[0]
    witnesses = [np.kron(e0, e0), chn.max_entangled_state(d)]
    records = []
    for p in p_list:
        vals = wh_values(d, float(p))
        est = estimate_nu_p(pair, p, cfg, initial_states=witnesses)
        vals.update(
            {
                "p": float(p),
                "optimizer_nu_product_channel": est.value,
                "optimizer_pth_power": est.value**p,
                "optimizer_maximizer": vector_to_json(est.maximizer),
                "violation": vals["ratio_pth_power"] > 1 + 1e-12,
            }
        )
        records.append(vals)
    config = {"d": d, "p": [float(p) for p in p_list], "optimizer": _config_dict(cfg)}
    summary = {
        "violations": [r["p"] for r in records if r["violation"]],
        "max_ratio_pth_power": max(r["ratio_pth_power"] for r in records),
        "failures": 0,
    }
    return _report("wh", config, records, summary)


def entropy_additivity(phi, psi, cfg: OptimizerConfig) -> dict:
    """``S_min`` of ``phi``, ``psi`` and ``phi (x) psi`` (product minimizer injected)."""
    s_phi = estimate_s_min(phi, cfg)
    s_psi = estimate_s_min(psi, cfg)
    witness = np.kron(s_phi.minimizer, s_psi.minimizer)
    s_joint = estimate_s_min(chn.tensor(phi, psi), cfg, initial_states=[witness])
    return {
        "s_min_phi": s_phi.value,
        "s_min_psi": s_psi.value,
        "s_min_product_channel": s_joint.value,
        "gap": abs(s_joint.value - s_phi.value - s_psi.value),
        "converged": s_phi.converged and s_psi.converged and s_joint.converged,
    }


def entropy_add(n: int, k: int, instances: int, seed: int, cfg: OptimizerConfig) -> dict:
    _check_caps(n, k)
    records = []
    warnings = []
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        diag_rank, kraus_rank = _random_ranks(rng, n, k)
        phi = chn.random_diagonal(n, diag_rank, [seed, i, 0], trace_preserving=True)
        psi = chn.random_channel(k, k, kraus_rank, [seed, i, 1])
        if not (phi.trace_preserving and psi.trace_preserving):
            warnings.append(f"instance {i} skipped: channel not trace preserving")
            continue
        rec = {"instance": i, "diag_rank": diag_rank, "kraus_rank": kraus_rank}
        rec.update(entropy_additivity(phi, psi, cfg))
        records.append(rec)
    flagged = [r["instance"] for r in records if r["gap"] > ENTROPY_GAP_TOL]
    config = {
        "n": n,
        "k": k,
        "instances": instances,
        "seed": seed,
        "optimizer": _config_dict(cfg),
        "gap_threshold": ENTROPY_GAP_TOL,
        "gap_threshold_note": "reflects optimizer precision; the exact gap is zero",
    }
    summary = {
        "records": len(records),
        "max_gap": max((r["gap"] for r in records), default=0.0),
        "flagged": flagged,
        "warnings": warnings,
        "failures": len(flagged),
    }
    return _report("entropy-add", config, records, summary)


def _lt_record(batch: str, i: int, v, k, p: float) -> dict:
    lt = lieb_thirring_check(v, k, p)
    return {
        "batch": batch,
        "instance": i,
        "rows": int(v.shape[0]),
        "cols": int(v.shape[1]),
        "p": float(p),
        "lhs": lt.lhs,
        "rhs": lt.rhs,
        "slack": lt.slack,
        "scale": lt.scale,
    }


def lt_fuzz(dims, p_list, instances: int, seed: int) -> dict:
    """Random ``(V, K)`` pairs through the trace inequality.

    Every general instance is evaluated at each ``p`` in ``p_list`` and at
    ``p = 1``; an extra sub-batch of ``max(1, instances // 10)`` unitary ``V``
    checks the equality case.
    """
    records = []
    dims = [int(d) for d in dims]
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        rows, cols = int(rng.choice(dims)), int(rng.choice(dims))
        v = chn.complex_gaussian(rng, (rows, cols))
        g = chn.complex_gaussian(rng, (cols, int(rng.integers(1, cols + 1))))
        k = g @ g.conj().T
        records.append(_lt_record("p1", i, v, k, 1.0))
        for p in p_list:
            if p != 1:
                records.append(_lt_record("general", i, v, k, p))
    n_unitary = max(1, instances // 10)
    for i in range(n_unitary):
        rng = np.random.default_rng([seed, instances + i])
        d = int(rng.choice(dims))
        u = chn.haar_isometry(rng, d, d)
        g = chn.complex_gaussian(rng, (d, d))
        k = g @ g.conj().T
        for p in p_list:
            records.append(_lt_record("unitary", i, u, k, p))

    general = [r["slack"] / r["scale"] for r in records if r["batch"] == "general"]
    p1 = [abs(r["slack"]) / r["scale"] for r in records if r["batch"] == "p1"]
    unitary = [abs(r["slack"]) / r["scale"] for r in records if r["batch"] == "unitary"]
    flagged = (
        sum(v < -LT_FUZZ_TOL for v in general)
        + sum(v > LT_P1_TOL for v in p1)
        + sum(v > LT_UNITARY_TOL for v in unitary)
    )
    config = {
        "dims": dims,
        "p": [float(p) for p in p_list],
        "instances": instances,
        "unitary_instances": n_unitary,
        "seed": seed,
        "thresholds": {"general": LT_FUZZ_TOL, "p1": LT_P1_TOL, "unitary": LT_UNITARY_TOL},
    }
    summary = {
        "general_min_rel_slack": min(general, default=0.0),
        "p1_max_rel_abs_slack": max(p1, default=0.0),
        "unitary_max_rel_abs_slack": max(unitary, default=0.0),
        "failures": int(flagged),
    }
    return _report("lt-fuzz", config, records, summary)
