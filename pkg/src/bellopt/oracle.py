"""Closed-form theory used as independent ground truth for the optimizer:
the two-qubit correlation-matrix criterion for maximal CHSH violation, star
and chain maxima built from source states, partially classical strategy
scores, analytic noise-robustness curves, and a grid-search bound over
maximally entangled preparations.

The star/chain maxima come in two flavors: the eigenvalue-pairing formulas
`max_star_score`/`max_chain_score` (tight for identical sources, known to be
beaten by partially classical strategies in edge cases) and the
product-of-CHSH-scores composition used by the single-placement curves.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import channels
from .qmath import SIGMA_X, SIGMA_Y, SIGMA_Z, DensityMatrix, eig3_sym_desc, kron

ROOT2 = float(np.sqrt(2.0))

_PAULI3 = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def phi_plus_state() -> np.ndarray:
    v = np.array([1, 0, 0, 1], dtype=complex) / ROOT2
    return np.outer(v, v.conj())


def psi_plus_state() -> np.ndarray:
    v = np.array([0, 1, 1, 0], dtype=complex) / ROOT2
    return np.outer(v, v.conj())


def zero_zero_state() -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    return rho


NAMED_STATES = {
    "phi_plus": phi_plus_state,
    "psi_plus": psi_plus_state,
    "zero_zero": zero_zero_state,
}


def _as_two_qubit(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        rho = rho.matrix
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a two-qubit density matrix, got shape {rho.shape}")
    return rho


def correlation_matrix_T(rho) -> np.ndarray:
    """3x3 table of Pauli expectations t_ij = Tr[rho sigma_i x sigma_j]."""
    rho = _as_two_qubit(rho)
    t = np.empty((3, 3))
    for i, si in enumerate(_PAULI3):
        for j, sj in enumerate(_PAULI3):
            t[i, j] = np.real(np.trace(rho @ kron(si, sj)))
    return t


def _top_two_mu(rho) -> tuple[float, float]:
    t = correlation_matrix_T(rho)
    mu1, mu2, _ = eig3_sym_desc(t.T @ t)
    return mu1, mu2


def horodecki_max_chsh(rho) -> float:
    """Maximal CHSH score 2 sqrt(mu1 + mu2) over local qubit projective
    measurements; exceeds 2 exactly when the state can violate CHSH."""
    mu1, mu2 = _top_two_mu(rho)
    return 2.0 * np.sqrt(mu1 + mu2)


def max_star_score(rhos, n: int) -> float:
    """Eigenvalue-pairing star maximum sqrt(sum_j (prod_i mu_j_i)^(1/n))."""
    if len(rhos) != n:
        raise ValueError(f"expected {n} source states, got {len(rhos)}")
    mus = np.array([_top_two_mu(r) for r in rhos])
    return float(np.sqrt(np.prod(mus[:, 0]) ** (1 / n) + np.prod(mus[:, 1]) ** (1 / n)))


def max_chain_score(rhos, n: int) -> float:
    """Eigenvalue-pairing chain maximum sqrt(sqrt(prod mu1) + sqrt(prod mu2))."""
    if len(rhos) != n:
        raise ValueError(f"expected {n} source states, got {len(rhos)}")
    mus = np.array([_top_two_mu(r) for r in rhos])
    return float(np.sqrt(np.sqrt(np.prod(mus[:, 0])) + np.sqrt(np.prod(mus[:, 1]))))


def classical_source_star_score(n: int, k: int) -> float:
    """Star score (sqrt 2)^((n-k)/n) achievable with k classical |00> sources
    measured deterministically and n-k ideal entangled sources."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    return ROOT2 ** ((n - k) / n)


def amplitude_damping_breaking(gamma1: float, gamma2: float) -> bool:
    """True when two-sided amplitude damping leaves every maximally entangled
    state unable to violate CHSH: 1/2 >= (1-gamma1)(1-gamma2)."""
    for g in (gamma1, gamma2):
        if not 0.0 <= g <= 1.0:
            raise ValueError(f"noise parameter {g} outside [0, 1]")
    return 0.5 >= (1.0 - gamma1) * (1.0 - gamma2)


# ---------------------------------------------------------------------------
# Product-of-CHSH-scores composition for star and chain networks.
# ---------------------------------------------------------------------------

def product_star_score(rhos) -> float:
    """(prod_i S_i/2)^(1/n): the star maximum over local qubit measurements,
    valid also when the sources differ."""
    n = len(rhos)
    half = [horodecki_max_chsh(r) / 2 for r in rhos]
    return float(np.prod(half) ** (1.0 / n))


def product_chain_score(rhos) -> float:
    """Chain maximum from the two exterior sources' CHSH scores, with each
    interior source contributing its largest correlation sqrt(mu1).

    The printed form of this composition leaves the index range of the
    interior product ambiguous; here the product runs over sources 2..n-1,
    which reproduces the unambiguous two-source case exactly.
    """
    if len(rhos) < 2:
        raise ValueError("chain needs at least two sources")
    half_first = horodecki_max_chsh(rhos[0]) / 2
    half_last = horodecki_max_chsh(rhos[-1]) / 2
    interior = 1.0
    for r in rhos[1:-1]:
        mu1, _ = _top_two_mu(r)
        interior *= np.sqrt(mu1)
    return float(np.sqrt(half_first * half_last * interior))


# ---------------------------------------------------------------------------
# Analytic noise-robustness curves. Partial by design: combinations without
# a proven formula are rejected, never approximated.
# ---------------------------------------------------------------------------

class UnsupportedCurve(ValueError):
    pass


def _parse_network(network: str) -> tuple[str, int]:
    network = network.strip().lower()
    if network == "chsh":
        return "star", 1
    if network == "bilocal":
        return "star", 2
    for family in ("star", "chain"):
        if network == family:
            raise UnsupportedCurve(f"network {network!r} needs a size, e.g. {family}:3")
        if network.startswith(family + ":"):
            return family, int(network.split(":", 1)[1])
    raise UnsupportedCurve(f"unknown network {network!r}; use chsh, bilocal, star:n, or chain:n")


def _placement_gammas(placement: str, count: int, gamma: float) -> list[float]:
    if placement == "single":
        return [gamma] + [0.0] * (count - 1)
    if placement == "uniform":
        return [gamma] * count
    raise UnsupportedCurve(f"curves support 'single' or 'uniform' placement, not {placement!r}")


def _dephased_bell(gamma_left: float, gamma_right: float) -> np.ndarray:
    rho = phi_plus_state()
    for gamma, side in ((gamma_left, 0), (gamma_right, 1)):
        out = np.zeros_like(rho)
        for k in channels.dephasing(gamma):
            op = kron(k, np.eye(2)) if side == 0 else kron(np.eye(2), k)
            out += op @ rho @ op.conj().T
        rho = out
    return rho


def curve(model: str, network: str, placement: str, gamma: float, prep: str = "psi_plus") -> float:
    """Analytic maximal Bell score for a supported (model, network, placement).

    Scores are on the normalized scale where every classical bound is 1 and
    the noiseless quantum maximum is sqrt(2). `prep` selects the preparation
    family for the colored-noise curves (it is ignored elsewhere).
    """
    family, n = _parse_network(network)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"noise parameter {gamma} outside [0, 1]")
    if family == "chain" and n < 2:
        raise UnsupportedCurve("chain curves need n >= 2")

    if model == "depolarizing_source":
        vs = [abs(1.0 - 16.0 * g / 15.0) for g in _placement_gammas(placement, n, gamma)]
        if family == "star":
            return float(ROOT2 * np.prod(vs) ** (1.0 / n))
        return float(ROOT2 * np.sqrt(np.prod(vs)))

    if model == "white_noise_detector":
        gs = _placement_gammas(placement, n + 1, gamma)
        prod = float(np.prod([1.0 - g for g in gs]))
        if family == "star":
            return float(ROOT2 * prod ** (1.0 / n))
        return float(ROOT2 * np.sqrt(prod))

    if model == "dephasing":
        if placement == "uniform":
            # chains fall back to the bilocal value via classical interior sources
            return float(np.sqrt(1.0 + (1.0 - gamma) ** 2))
        if placement == "single":
            eff_n = n if family == "star" else 2
            return float((np.sqrt(2.0 - gamma) * 2 ** ((eff_n - 1) / 2.0)) ** (1.0 / eff_n))
        raise UnsupportedCurve(f"dephasing curve has no placement {placement!r}")

    if model == "colored":
        if prep not in ("phi_plus", "psi_plus"):
            raise UnsupportedCurve(f"colored curves take prep 'phi_plus' or 'psi_plus', not {prep!r}")
        base = NAMED_STATES[prep]()
        rhos = [channels.colored_affine(base, g) for g in _placement_gammas(placement, n, gamma)]
        if family == "star":
            return product_star_score(rhos)
        return product_chain_score(rhos)

    raise UnsupportedCurve(
        f"no analytic curve for model {model!r}; supported models: "
        "depolarizing_source, white_noise_detector, dephasing, colored"
    )


# ---------------------------------------------------------------------------
# Grid-search bound over maximally entangled preparations.
# ---------------------------------------------------------------------------

def _pair_superoperator(kraus_left, kraus_right) -> np.ndarray:
    ops = [kron(a, b) for a, b in itertools.product(kraus_left, kraus_right)]
    s = np.zeros((16, 16), dtype=complex)
    for op in ops:
        s += np.kron(op, op.conj())
    return s


_TRACE_MAP = np.stack(
    [kron(si, sj).T.reshape(-1) for si in _PAULI3 for sj in _PAULI3]
)


def _batch_scores(angles: np.ndarray, superop: np.ndarray) -> np.ndarray:
    """CHSH maxima for (U(a,b,c) x I)|phi+> under the channel, batched."""
    a, b, c = angles[:, 0], angles[:, 1], angles[:, 2]
    cos, sin = np.cos(b / 2), np.sin(b / 2)
    u = np.empty((len(angles), 2, 2), dtype=complex)
    u[:, 0, 0] = np.exp(-0.5j * (a + c)) * cos
    u[:, 0, 1] = -np.exp(-0.5j * (a - c)) * sin
    u[:, 1, 0] = np.exp(0.5j * (a - c)) * sin
    u[:, 1, 1] = np.exp(0.5j * (a + c)) * cos
    psi = u.reshape(len(angles), 4) / ROOT2  # (U x I)|phi+> amplitudes
    rho = np.einsum("bi,bj->bij", psi, psi.conj()).reshape(len(angles), 16)
    rho = rho @ superop.T
    t = np.real(rho @ _TRACE_MAP.T).reshape(len(angles), 3, 3)
    r = np.einsum("bij,bik->bjk", t, t)
    eig = np.linalg.eigvalsh(r)
    return 2.0 * np.sqrt(eig[:, 2] + eig[:, 1])


def maxent_gridsearch_oracle(channel_pair, grid: int = 24, passes: int = 2) -> float:
    """Best CHSH score over maximally entangled preparations (U x I)|phi+>
    under a pair of qubit channels, by grid search with local refinement.

    The returned value is a certified lower bound on the true maximum over
    that family (every probe is an achievable score).
    """
    kraus_left, kraus_right = channel_pair
    superop = _pair_superoperator(kraus_left, kraus_right)
    centers = np.array([np.pi, np.pi / 2, np.pi])
    widths = np.array([2 * np.pi, np.pi, 2 * np.pi])
    best_val, best_angles = -np.inf, centers
    for _ in range(passes + 1):
        axes = [np.linspace(c - w / 2, c + w / 2, grid) for c, w in zip(centers, widths)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        vals = _batch_scores(pts, superop)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_angles = float(vals[k]), pts[k]
        centers, widths = best_angles, widths / 4.0
    return best_val
