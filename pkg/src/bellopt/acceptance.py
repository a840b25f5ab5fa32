"""End-to-end verification suite: every optimizer result is checked against an
independently derived value (closed-form curve, eigenvalue criterion, or
constructive strategy score), at fixed seeds and fixed tolerances.

Run via `bellopt verify` or through tests/test_acceptance.py.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import channels, oracle
from .ansatz import hardware_ansatz, make_ansatz
from .behavior import Evaluator, correlators
from .bell import ChainInequality, ChshInequality, StarInequality, parse_inequality
from .channels import NOISELESS, NoiseModel, QuantumNoise, build_noise_model
from .network import build_chain, build_star
from .optimize import OptimizerConfig, grad_central_difference, grad_parameter_shift, gradient_descent, scan
from .qmath import I2, SIGMA_X, SIGMA_Y, SIGMA_Z

ROOT2 = float(np.sqrt(2.0))


@dataclass
class CriterionResult:
    id: int
    passed: bool
    details: str
    elapsed: float = 0.0


def _max_err(pairs) -> float:
    return max(abs(a - b) for a, b in pairs)


def _scan_max_err(result, targets) -> float:
    # an optimizer result above the analytic maximum is a defect even when
    # the absolute difference stays inside the scan tolerance
    excess = max(s - t for s, t in zip(result.best_scores, targets))
    if excess > 1e-6:
        raise AssertionError(f"optimizer exceeded the analytic maximum by {excess:.2e}")
    return _max_err(zip(result.best_scores, targets))


def _network(spec: str):
    family, n = spec.split(":")
    build = build_star if family == "star" else build_chain
    return build(int(n))


# -- 1: noiseless maxima ----------------------------------------------------

def criterion_1() -> tuple[bool, str]:
    runs = [
        ("star:1", ChshInequality(), 2 * ROOT2, 0.12, 120),
        ("star:2", StarInequality(2), ROOT2, 1.4, 40),
        ("chain:3", ChainInequality(3), ROOT2, 1.6, 40),
        ("star:3", StarInequality(3), ROOT2, 1.6, 40),
    ]
    gaps = []
    for spec, ineq, target, eta, steps in runs:
        topo, wiring = _network(spec)
        ans = hardware_ansatz(topo, wiring)
        cfg = OptimizerConfig(step_size=eta, num_steps=steps, restarts=10, seed=101)
        trace = gradient_descent(ans, NOISELESS, ineq, cfg)
        gaps.append(target - trace.best_score)
    ok = all(g <= 1e-3 for g in gaps)
    return ok, "noiseless optimum gaps: " + ", ".join(f"{g:.2e}" for g in gaps)


# -- 2: fixed-state measurement optimization matches the eigenvalue bound ----

def _random_violating_state(rng) -> np.ndarray:
    while True:
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        eps = rng.uniform(0.0, 0.25)
        rho = (1 - eps) * np.outer(psi, psi.conj()) + eps * np.eye(4) / 4
        if oracle.horodecki_max_chsh(rho) > 2.001:
            return rho


def criterion_2() -> tuple[bool, str]:
    rng = np.random.default_rng(202)
    topo, wiring = build_star(1)
    worst_below, worst_above = 0.0, 0.0
    for trial in range(50):
        rho = _random_violating_state(rng)
        target = oracle.horodecki_max_chsh(rho)
        ans = make_ansatz(topo, wiring, prep="none", meas="local_rot", source_states=[rho])
        cfg = OptimizerConfig(step_size=0.35, num_steps=90, restarts=5, seed=2000 + trial)
        trace = gradient_descent(ans, NOISELESS, ChshInequality(), cfg)
        worst_below = max(worst_below, target - trace.best_score)
        worst_above = max(worst_above, trace.best_score - target)
    ok = worst_below <= 1e-2 and worst_above <= 1e-6
    return ok, f"50 states: max shortfall {worst_below:.2e} (<=1e-2), max excess {worst_above:.2e} (<=1e-6)"


# -- 3: source depolarizing curves -------------------------------------------

GAMMA_GRID_COARSE = [round(0.05 * k, 2) for k in range(11)]  # 0 .. 0.5


def _scan_network(spec, prep, meas, model, placement, gammas, ineq_id=None, *,
                  eta=None, steps=35, restarts=3, seed=0, oracle_args=None, prep_states=None):
    topo, wiring = _network(spec)
    ans = make_ansatz(topo, wiring, prep=prep, meas=meas, source_states=prep_states)
    ineq = parse_inequality(ineq_id or spec.replace("star:1", "chsh_normalized"))
    if eta is None:
        eta = {"star:1": 0.6, "star:2": 1.4, "star:3": 1.6, "chain:3": 1.6, "chain:4": 1.6}[spec]
    cfg = OptimizerConfig(step_size=eta, num_steps=steps, restarts=restarts, seed=seed)
    make_noise = lambda g: build_noise_model(topo, model, placement, g)
    return scan(make_noise, ans, ineq, gammas, cfg, warm_start=True, oracle_args=oracle_args)


def criterion_3() -> tuple[bool, str]:
    errs = {}
    for spec in ("star:1", "star:2", "chain:3", "star:3"):
        result = _scan_network(spec, "phi_plus", "local_ry", "depolarizing_source", "uniform",
                               GAMMA_GRID_COARSE, seed=303)
        targets = [oracle.curve("depolarizing_source", spec, "uniform", g) for g in GAMMA_GRID_COARSE]
        errs[spec] = _scan_max_err(result, targets)
    ok = all(e <= 5e-3 for e in errs.values())
    return ok, "max |vqo - curve|: " + ", ".join(f"{k}={v:.2e}" for k, v in errs.items())


# -- 4: detector white noise --------------------------------------------------

def criterion_4() -> tuple[bool, str]:
    errs = {}
    for spec in ("star:1", "star:2", "star:3", "chain:3", "chain:4"):
        result = _scan_network(spec, "phi_plus", "local_ry", "white_noise_detector", "uniform",
                               GAMMA_GRID_COARSE, seed=404)
        targets = [oracle.curve("white_noise_detector", spec, "uniform", g) for g in GAMMA_GRID_COARSE]
        errs[spec] = _scan_max_err(result, targets)
    scan_ok = all(e <= 5e-3 for e in errs.values())

    # POVM equivalence: white-noise post-processing == depolarizing on the state
    rng = np.random.default_rng(44)
    eq_err = 0.0
    for m in (1, 2):
        dim = 2**m
        parity = np.array([(-1) ** bin(a).count("1") for a in range(dim)])
        for gamma in (0.0, 0.25, 0.5, 1.0):
            w = channels.white_noise_detector(gamma)
            for _ in range(5):
                a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
                rho = a @ a.conj().T
                rho /= np.trace(rho).real
                q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
                proj_plus = q @ np.diag((parity > 0).astype(float)) @ q.conj().T
                p_plus = float(np.real(np.trace(proj_plus @ rho)))
                dist_w = w @ np.array([p_plus, 1 - p_plus])
                rho_dep = (1 - gamma) * rho + gamma * np.eye(dim) / dim
                p_dep = float(np.real(np.trace(proj_plus @ rho_dep)))
                eq_err = max(eq_err, np.abs(dist_w - np.array([p_dep, 1 - p_dep])).max())
    ok = scan_ok and eq_err <= 1e-10
    detail = "max |vqo - curve|: " + ", ".join(f"{k}={v:.2e}" for k, v in errs.items())
    return ok, detail + f"; POVM equivalence err {eq_err:.1e} (<=1e-10)"


# -- 5: dephasing -------------------------------------------------------------

def criterion_5() -> tuple[bool, str]:
    grid = [round(0.1 * k, 1) for k in range(11)]  # 0 .. 1
    errs = {}
    for spec in ("star:1", "star:2", "star:3"):
        result = _scan_network(spec, "phi_plus", "local_ry", "dephasing", "uniform", grid, seed=505)
        targets = [oracle.curve("dephasing", spec, "uniform", g) for g in grid]
        errs[spec + ":uni"] = _scan_max_err(result, targets)
    chain_result = _scan_network("chain:3", "nonmax_entangled", "local_ry", "dephasing", "uniform",
                                 grid, seed=515, restarts=6, steps=45)
    chain_targets = [oracle.curve("dephasing", "chain:3", "uniform", g) for g in grid]
    errs["chain:3:uni"] = _scan_max_err(chain_result, chain_targets)
    for spec in ("star:1", "star:2", "star:3"):
        result = _scan_network(spec, "phi_plus", "local_ry", "dephasing", "single", grid, seed=525)
        targets = [oracle.curve("dephasing", spec, "single", g) for g in grid]
        errs[spec + ":single"] = _scan_max_err(result, targets)
    scan_ok = all(e <= 5e-3 for e in errs.values())

    # the eigenvalue-pairing prediction must sit below the achieved chain
    # score once dephasing is strong, strictly at gamma=0.8
    below_ok = True
    for g, achieved in zip(grid, chain_result.best_scores):
        if g >= 0.5:
            naive = oracle.max_chain_score([oracle._dephased_bell(g, g)] * 3, 3)
            below_ok = below_ok and achieved > naive - 1e-9
    g_sep = 0.8
    naive = oracle.max_chain_score([oracle._dephased_bell(g_sep, g_sep)] * 3, 3)
    separation = chain_result.best_scores[grid.index(g_sep)] - naive
    ok = scan_ok and below_ok and separation > 1e-2
    detail = "max |vqo - curve|: " + ", ".join(f"{k}={v:.2e}" for k, v in errs.items())
    return ok, detail + f"; gamma=0.8 margin over pairing formula {separation:.3f} (>1e-2)"


# -- 6: amplitude damping separation ------------------------------------------

def criterion_6() -> tuple[bool, str]:
    gamma = 0.30
    ad = channels.amplitude_damping(gamma)
    maxent_bound = oracle.maxent_gridsearch_oracle((ad, ad))
    topo, wiring = build_star(1)
    ans = make_ansatz(topo, wiring, prep="nonmax_entangled", meas="local_rot")
    noise = build_noise_model(topo, "amplitude_damping", "uniform", gamma)
    cfg = OptimizerConfig(step_size=0.25, num_steps=120, restarts=8, seed=606)
    trace = gradient_descent(ans, noise, ChshInequality(), cfg)
    nonmax_norm = trace.best_score / 2
    g0 = 1 - 1 / ROOT2
    boundary_ok = (not oracle.amplitude_damping_breaking(g0 - 1e-9, g0 - 1e-9)) and \
        oracle.amplitude_damping_breaking(g0 + 1e-9, g0 + 1e-9)
    ok = maxent_bound <= 2 + 1e-6 and nonmax_norm > 1 + 5e-4 and boundary_ok
    return ok, (f"maxent grid bound {maxent_bound:.6f} (<=2), nonmax normalized score "
                f"{nonmax_norm:.6f} (>1.0005), breaking boundary flips at 1-1/sqrt2: {boundary_ok}")


# -- 7: partially classical sources -------------------------------------------

def criterion_7() -> tuple[bool, str]:
    details = []
    ok = True
    for n in (2, 3):
        topo, wiring = build_star(n)
        prep = ["none"] + ["phi_plus"] * (n - 1)
        ans = make_ansatz(topo, wiring, prep=prep, meas="local_ry")
        cfg = OptimizerConfig(step_size=1.5, num_steps=60, restarts=10, seed=707 + n)
        trace = gradient_descent(ans, NOISELESS, StarInequality(n), cfg)
        target = oracle.classical_source_star_score(n, 1)
        pairing = oracle.max_star_score(
            [oracle.zero_zero_state()] + [oracle.phi_plus_state()] * (n - 1), n)
        err = abs(trace.best_score - target)
        ok = ok and err <= 5e-3 and trace.best_score > pairing + 0.1
        details.append(f"star:{n} |score-target|={err:.2e}, above pairing value {pairing:g}")
    topo, wiring = build_chain(3)
    ans = make_ansatz(topo, wiring, prep=["phi_plus", "none", "phi_plus"], meas="local_ry")
    cfg = OptimizerConfig(step_size=1.6, num_steps=60, restarts=10, seed=717)
    trace = gradient_descent(ans, NOISELESS, ChainInequality(3), cfg)
    err = abs(trace.best_score - ROOT2)
    ok = ok and err <= 5e-3
    details.append(f"chain:3 classical interior |score-sqrt2|={err:.2e}")
    return ok, "; ".join(details)


# -- 8: colored noise ----------------------------------------------------------

def criterion_8() -> tuple[bool, str]:
    grid = [round(0.1 * k, 1) for k in range(6)]  # 0 .. 0.5
    errs = {}
    psi_at_half = {}
    for n in (1, 2, 3):
        spec = f"star:{n}"
        result = _scan_network(spec, "psi_plus", "local_ry", "colored", "single", grid,
                               seed=808 + n, restarts=4, steps=45)
        targets = [oracle.curve("colored", spec, "single", g, prep="psi_plus") for g in grid]
        errs[spec] = _scan_max_err(result, targets)
        psi_at_half[n] = result.best_scores[grid.index(0.5)]
    # full local rotations: the phi+ optimum under colored noise needs the x-y plane
    phi_result = _scan_network("star:2", "phi_plus", "local_rot", "colored", "single", [0.5],
                               seed=828, restarts=6, steps=45)
    separation = psi_at_half[2] - phi_result.best_scores[0]
    ok = all(e <= 5e-3 for e in errs.values()) and separation > 1e-2
    detail = "max |vqo - curve|: " + ", ".join(f"{k}={v:.2e}" for k, v in errs.items())
    return ok, detail + f"; psi+ over phi+ at gamma=0.5: {separation:.4f} (>1e-2)"


# -- 9: gradient cross-check -----------------------------------------------------

def criterion_9() -> tuple[bool, str]:
    specs = [("star:1", ChshInequality()), ("star:2", StarInequality(2)),
             ("chain:3", ChainInequality(3)), ("star:3", StarInequality(3))]
    rng = np.random.default_rng(909)
    worst = {"noiseless": 0.0, "depolarizing": 0.0}
    for spec, ineq in specs:
        topo, wiring = _network(spec)
        ans = hardware_ansatz(topo, wiring)
        for label, noise in (("noiseless", NOISELESS),
                             ("depolarizing", build_noise_model(topo, "depolarizing_qubit", "single", 0.3))):
            ev = Evaluator(ans, noise)
            cost_fn = _cost_of(ans, noise, ineq)
            done = 0
            while done < 20:
                theta = rng.uniform(0, 2 * np.pi, ans.num_settings)
                if isinstance(ineq, (StarInequality, ChainInequality)):
                    # skip draws too close to the |I|^(1/n) kink, where the
                    # finite-difference reference itself is ill-conditioned
                    from .behavior import CorrelatorTable
                    table = CorrelatorTable(ev.inputs, ev.correlators(theta))
                    if np.min(np.abs(ineq._iy(table))) < 0.05:
                        continue
                done += 1
                ps = grad_parameter_shift(ans, theta, noise, ineq)
                cd = grad_central_difference(cost_fn, theta, 1e-5)
                worst[label] = max(worst[label], float(np.abs(ps - cd).max()))
    ok = worst["noiseless"] <= 1e-6 and worst["depolarizing"] <= 1e-5
    return ok, (f"max |PS - CD|: noiseless {worst['noiseless']:.2e} (<=1e-6), "
                f"depolarizing(0.3) {worst['depolarizing']:.2e} (<=1e-5)")


def _cost_of(ans, noise, ineq):
    from .behavior import CorrelatorTable

    ev = Evaluator(ans, noise)

    def cost_fn(theta):
        corr = ev.correlators(np.asarray(theta, dtype=float))
        return -ineq.score(CorrelatorTable(ev.inputs, corr))

    return cost_fn


# -- 10: unital channels never beat the Bell state --------------------------------

def criterion_10() -> tuple[bool, str]:
    rng = np.random.default_rng(1010)
    topo, wiring = build_star(1)
    paulis = [I2, SIGMA_X, SIGMA_Y, SIGMA_Z]
    worst_excess = -np.inf
    for trial in range(30):
        kraus_sides = []
        for _ in range(2):
            p = rng.dirichlet(np.ones(4))
            kraus_sides.append(tuple(np.sqrt(pk) * sig for pk, sig in zip(p, paulis)))
        # best score over maximally entangled preparations; the channels'
        # Pauli bases are generally misaligned, so this is attained by a
        # rotated Bell pair rather than by |phi+> itself
        maxent_value = oracle.maxent_gridsearch_oracle(tuple(kraus_sides))
        noise = NoiseModel(quantum=(
            QuantumNoise("pauli_mixture", 0.0, (0,), kraus_ops=kraus_sides[0]),
            QuantumNoise("pauli_mixture", 0.0, (1,), kraus_ops=kraus_sides[1]),
        ))
        ans = make_ansatz(topo, wiring, prep="arbitrary", meas="local_rot")
        cfg = OptimizerConfig(step_size=0.3, num_steps=60, restarts=4, seed=3000 + trial)
        trace = gradient_descent(ans, noise, ChshInequality(), cfg)
        worst_excess = max(worst_excess, trace.best_score - maxent_value)
    ok = worst_excess <= 1e-3
    return ok, (f"30 two-sided Pauli mixtures: max (arbitrary-prep VQO - maxent value) = "
                f"{worst_excess:.2e} (<=1e-3)")


# -- 11: shot sampling --------------------------------------------------------------

def criterion_11() -> tuple[bool, str]:
    topo, wiring = build_star(1)
    ans = hardware_ansatz(topo, wiring)
    theta = np.array([0.0, np.pi / 2, np.pi / 4, -np.pi / 4])
    ev = Evaluator(ans, NOISELESS)
    ineq = ChshInequality()
    hits = 0
    for trial in range(100):
        beh = ev.behavior(theta, shots=6000, seed=1100 + 7 * trial)
        score = ineq.score(correlators(beh))
        if abs(score - 2 * ROOT2) <= 0.1:
            hits += 1
    ok = hits >= 95
    return ok, f"{hits}/100 six-thousand-shot trials within 0.1 of 2*sqrt(2) (need >=95)"


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_one(cid: int) -> CriterionResult:
    start = time.perf_counter()
    try:
        passed, details = CRITERIA[cid]()
    except Exception as exc:  # a crash is a failure, not an abort of the suite
        passed, details = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(cid, passed, details, time.perf_counter() - start)


def run_all(criteria=None) -> list[CriterionResult]:
    ids = sorted(CRITERIA) if criteria is None else list(criteria)
    return [run_one(cid) for cid in ids]
