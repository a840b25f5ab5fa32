"""Plain gradient-descent driver for Bell-score maximization: parameter-shift
or central-difference gradients, multi-restart optimization, and noise-scan
orchestration with optional warm starts.

Gradients compose exact +/- pi/2 correlator shifts (every trainable angle
generates a Pauli-type rotation) with the analytic derivative of the score
with respect to the correlators. Only circuits whose input actually uses a
parameter are re-simulated for its shift.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ansatz import NetworkAnsatz
from .behavior import Evaluator
from .bell import Inequality
from .channels import NoiseModel
from .oracle import UnsupportedCurve, curve

# Step sizes that work well for the hardware-style ansatz on each network.
DEFAULT_STEP_SIZES = {
    "chsh": 0.12,
    "bilocal": 1.4,
    "star:1": 1.4,
    "star:2": 1.4,
    "star:3": 1.6,
    "chain:3": 1.6,
}


@dataclass(frozen=True)
class OptimizerConfig:
    step_size: float = 0.2
    num_steps: int = 30
    restarts: int = 10
    gradient_method: str = "parameter_shift"  # or "central_difference"
    seed: int = 0
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step size must be positive")
        if self.num_steps < 1:
            raise ValueError("need at least one optimization step")
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.gradient_method not in ("parameter_shift", "central_difference"):
            raise ValueError(f"unknown gradient method {self.gradient_method!r}")


@dataclass
class OptimizationTrace:
    settings: list[np.ndarray]
    scores: list[float]
    grad_norms: list[float]
    best_settings: np.ndarray = field(init=False)
    best_score: float = field(init=False)

    def __post_init__(self):
        k = int(np.argmax(self.scores))
        self.best_settings = self.settings[k]
        self.best_score = float(self.scores[k])


@dataclass
class ScanResult:
    gammas: list[float]
    best_scores: list[float]
    best_settings: list[np.ndarray]
    oracle_scores: list[float | None]
    restarts_used: list[int]
    warm_start: bool

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.gammas[1:], self.gammas)):
            raise ValueError("scan grid must be strictly increasing")


def grad_central_difference(cost_fn, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """(f(t+h) - f(t-h)) / 2h per coordinate."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[k] += h
        down[k] -= h
        grad[k] = (cost_fn(up) - cost_fn(down)) / (2 * h)
    return grad


def _cost_gradient(ev: Evaluator, ineq: Inequality, theta: np.ndarray,
                   method: str, fd_step: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Cost, its gradient, and the base correlators at theta."""
    base = ev.correlators(theta)
    grad = np.zeros_like(theta)
    if method == "parameter_shift":
        if not ev.ansatz.all_shiftable():
            raise ValueError(
                "ansatz contains a gate without a two-term parameter-shift rule; "
                "use the central_difference gradient method"
            )
        weights = _weights(ineq, base, ev.inputs)
        for k in range(theta.size):
            affected = ev.affected_inputs(k)
            up, down = theta.copy(), theta.copy()
            up[k] += np.pi / 2
            down[k] -= np.pi / 2
            cp = ev.correlators_partial(up, affected, base)
            cm = ev.correlators_partial(down, affected, base)
            dcorr = (cp - cm) / 2.0
            grad[k] = -float(weights[affected] @ dcorr[affected])
    else:
        score_of = lambda c: ineq.score(_table(ev, c))
        for k in range(theta.size):
            affected = ev.affected_inputs(k)
            up, down = theta.copy(), theta.copy()
            up[k] += fd_step
            down[k] -= fd_step
            s_up = score_of(ev.correlators_partial(up, affected, base))
            s_down = score_of(ev.correlators_partial(down, affected, base))
            grad[k] = -(s_up - s_down) / (2 * fd_step)
    return -ineq.score(_table(ev, base)), grad, base


def _table(ev: Evaluator, values: np.ndarray):
    from .behavior import CorrelatorTable

    return CorrelatorTable(ev.inputs, values)


def _weights(ineq: Inequality, base: np.ndarray, inputs) -> np.ndarray:
    from .behavior import CorrelatorTable

    return np.asarray(ineq.grad_wrt_correlators(CorrelatorTable(inputs, base)))


def grad_parameter_shift(ansatz: NetworkAnsatz, theta: np.ndarray,
                         noise: NoiseModel, inequality: Inequality) -> np.ndarray:
    """Exact gradient of the cost (negated score) via +/- pi/2 shifts."""
    ev = Evaluator(ansatz, noise)
    _, grad, _ = _cost_gradient(ev, inequality, np.asarray(theta, dtype=float),
                                "parameter_shift", 0.0)
    return grad


def _descend(ev: Evaluator, ineq: Inequality, theta0: np.ndarray,
             config: OptimizerConfig) -> OptimizationTrace:
    theta = theta0.copy()
    settings, scores, norms = [], [], []
    for _ in range(config.num_steps):
        cost, grad, _ = _cost_gradient(ev, ineq, theta, config.gradient_method, config.fd_step)
        settings.append(theta.copy())
        scores.append(-cost)
        norms.append(float(np.linalg.norm(grad)))
        theta = theta - config.step_size * grad
    # score the final iterate too so the last update is not wasted
    settings.append(theta.copy())
    scores.append(ineq.score(_table(ev, ev.correlators(theta))))
    norms.append(norms[-1] if norms else 0.0)
    return OptimizationTrace(settings, scores, norms)


def gradient_descent(ansatz: NetworkAnsatz, noise: NoiseModel, inequality: Inequality,
                     config: OptimizerConfig, extra_starts=(),
                     shots: int | None = None, shots_seed: int = 0) -> OptimizationTrace:
    """Best multi-restart trace; restarts draw settings uniformly from [0, 2pi).

    Tie between equal-scoring restarts goes to the lowest restart index, and
    any `extra_starts` (e.g. warm starts) are run after the random restarts.
    With `shots`, every circuit evaluation is shot-sampled (seeded).
    """
    ev = Evaluator(ansatz, noise, shots=shots, shots_seed=shots_seed)
    rng = np.random.default_rng(config.seed)
    starts = [rng.uniform(0.0, 2 * np.pi, ansatz.num_settings) for _ in range(config.restarts)]
    starts += [np.asarray(s, dtype=float) for s in extra_starts]
    best = None
    for theta0 in starts:
        trace = _descend(ev, inequality, theta0, config)
        if best is None or trace.best_score > best.best_score + 1e-15:
            best = trace
    return best


def _scan_point(args):
    ansatz, noise, inequality, config, starts = args
    trace = gradient_descent(ansatz, noise, inequality, config, extra_starts=starts)
    return trace


def scan(make_noise, ansatz: NetworkAnsatz, inequality: Inequality, gammas,
         config: OptimizerConfig, warm_start: bool = False,
         oracle_args: tuple | None = None, workers: int | None = None) -> ScanResult:
    """Optimize independently at every noise level.

    `make_noise(gamma)` builds the noise model for one grid point. With
    `warm_start`, each point additionally seeds from the previous best
    settings (a labeled deviation from fully independent optimization).
    `oracle_args = (model, network, placement[, prep])` attaches analytic
    curve values where they exist.
    """
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("empty noise-parameter grid")
    if workers is None:
        workers = int(os.environ.get("BELLOPT_WORKERS", "1"))

    best_scores, best_settings, restarts_used = [], [], []
    oracle_scores: list[float | None] = []
    prev = None
    jobs = []
    for i, g in enumerate(gammas):
        starts = []
        if warm_start and prev is not None:
            starts.append(prev)
        point_config = replace(config, seed=config.seed + i)
        if warm_start or workers <= 1:
            trace = gradient_descent(ansatz, make_noise(g), inequality, point_config,
                                     extra_starts=starts)
            best_scores.append(trace.best_score)
            best_settings.append(trace.best_settings)
            restarts_used.append(config.restarts + len(starts))
            prev = trace.best_settings
        else:
            jobs.append((ansatz, make_noise(g), inequality, point_config, tuple(starts)))
    if jobs:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for trace in pool.map(_scan_point, jobs):
                best_scores.append(trace.best_score)
                best_settings.append(trace.best_settings)
                restarts_used.append(config.restarts)
    for g in gammas:
        if oracle_args is None:
            oracle_scores.append(None)
        else:
            try:
                oracle_scores.append(curve(*oracle_args[:3], g, *oracle_args[3:]))
            except UnsupportedCurve:
                oracle_scores.append(None)
    return ScanResult(gammas, best_scores, best_settings, oracle_scores, restarts_used, warm_start)
