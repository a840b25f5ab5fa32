"""Bell-score functionals over correlator tables: CHSH, the n-source star
family (bilocal is star n=2, and star n=1 is the rearranged, normalized CHSH),
and the n-source chain family, plus the cost-function wrapper.

Each inequality also exposes the analytic derivative of its score with
respect to the correlator entries, which the optimizer composes with
parameter-shift correlator derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .behavior import CorrelatorTable

ROOT2 = float(np.sqrt(2.0))

# |I|^(1/n) has an unbounded derivative at I=0; below this the derivative is
# defined as zero so random starting points do not blow up the gradient.
_I_CLAMP = 1e-9


@dataclass(frozen=True)
class BellScore:
    value: float
    inequality: str
    classical_bound: float
    quantum_bound: float

    @property
    def violated(self) -> bool:
        return self.value > self.classical_bound


def _corr_array(corr) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    if isinstance(corr, CorrelatorTable):
        return corr.inputs, np.asarray(corr.values, dtype=float)
    if isinstance(corr, dict):
        inputs = tuple(sorted(corr))
        return inputs, np.array([corr[x] for x in inputs], dtype=float)
    raise TypeError("expected a CorrelatorTable or a dict keyed by input tuples")


def I_ny(corr, n: int, y: int) -> float:
    """Signed average (1/2^n) sum_x (-1)^(y sum x_j) <O_x1 ... O_y> over the
    2^n exterior inputs at central input y."""
    inputs, values = _corr_array(corr)
    total = 0.0
    seen = 0
    for x, v in zip(inputs, values):
        if x[-1] != y:
            continue
        total += (-1) ** (y * sum(x[:-1])) * v
        seen += 1
    if seen != 2 ** n:
        raise ValueError(f"expected {2**n} correlators at central input {y}, found {seen}")
    return total / 2**n


class Inequality:
    """Base: a scored functional with classical/quantum bounds and a gradient."""

    id: str
    classical_bound: float
    quantum_bound: float

    def score(self, corr) -> float:
        raise NotImplementedError

    def grad_wrt_correlators(self, corr) -> np.ndarray:
        raise NotImplementedError

    def bell_score(self, corr) -> BellScore:
        return BellScore(self.score(corr), self.id, self.classical_bound, self.quantum_bound)


class ChshInequality(Inequality):
    """S = |sum_xy (-1)^(xy) <O_x O_y>|, classically bounded by 2."""

    def __init__(self, normalized: bool = False):
        self.normalized = normalized
        self.id = "chsh"
        self.classical_bound = 1.0 if normalized else 2.0
        self.quantum_bound = ROOT2 if normalized else 2 * ROOT2

    def _signed_sum(self, corr) -> tuple[float, np.ndarray, tuple]:
        inputs, values = _corr_array(corr)
        if len(inputs) != 4:
            raise ValueError(f"CHSH needs 4 correlators, got {len(inputs)}")
        signs = np.array([(-1) ** (x * y) for x, y in inputs], dtype=float)
        return float(signs @ values), signs, inputs

    def score(self, corr) -> float:
        total, _, _ = self._signed_sum(corr)
        s = abs(total)
        return s / 2 if self.normalized else s

    def grad_wrt_correlators(self, corr) -> np.ndarray:
        total, signs, _ = self._signed_sum(corr)
        g = np.sign(total) * signs
        return g / 2 if self.normalized else g


class StarInequality(Inequality):
    """S = |I_(n,0)|^(1/n) + |I_(n,1)|^(1/n), classically bounded by 1."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("star inequality needs n >= 1")
        self.n = n
        self.id = "bilocal" if n == 2 else f"star:{n}"
        self.classical_bound = 1.0
        self.quantum_bound = ROOT2

    def _iy(self, corr) -> np.ndarray:
        return np.array([I_ny(corr, self.n, 0), I_ny(corr, self.n, 1)])

    def score(self, corr) -> float:
        iy = self._iy(corr)
        return float(np.sum(np.abs(iy) ** (1.0 / self.n)))

    def grad_wrt_correlators(self, corr) -> np.ndarray:
        inputs, _ = _corr_array(corr)
        iy = self._iy(corr)
        out = np.zeros(len(inputs))
        for k, x in enumerate(inputs):
            y = x[-1]
            i_val = iy[y]
            if abs(i_val) < _I_CLAMP:
                continue
            outer = np.sign(i_val) * (1.0 / self.n) * abs(i_val) ** (1.0 / self.n - 1.0)
            inner = (-1) ** (y * sum(x[:-1])) / 2**self.n
            out[k] = outer * inner
        return out


class ChainInequality(Inequality):
    """S = sqrt|I_0| + sqrt|I_1| with I_y averaged over the two exterior
    inputs; the central observable is the product over interior nodes."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("chain inequality needs n >= 2")
        self.n = n
        self.id = f"chain:{n}"
        self.classical_bound = 1.0
        self.quantum_bound = ROOT2

    def _iy(self, corr) -> np.ndarray:
        # inputs are (x1, x2, y); the sum structure matches the 2-exterior star
        return np.array([I_ny(corr, 2, 0), I_ny(corr, 2, 1)])

    def score(self, corr) -> float:
        iy = self._iy(corr)
        return float(np.sum(np.sqrt(np.abs(iy))))

    def grad_wrt_correlators(self, corr) -> np.ndarray:
        inputs, _ = _corr_array(corr)
        iy = self._iy(corr)
        out = np.zeros(len(inputs))
        for k, x in enumerate(inputs):
            y = x[-1]
            i_val = iy[y]
            if abs(i_val) < _I_CLAMP:
                continue
            outer = np.sign(i_val) * 0.5 * abs(i_val) ** (-0.5)
            inner = (-1) ** (y * (x[0] + x[1])) / 4.0
            out[k] = outer * inner
        return out


def chsh_score(corr, normalized: bool = False) -> BellScore:
    return ChshInequality(normalized).bell_score(corr)


def star_score(corr, n: int) -> BellScore:
    return StarInequality(n).bell_score(corr)


def chain_score(corr, n: int) -> BellScore:
    return ChainInequality(n).bell_score(corr)


def cost(score: float | BellScore) -> float:
    """Negated Bell score: minimizing the cost maximizes the violation."""
    value = score.value if isinstance(score, BellScore) else float(score)
    return -value


def parse_inequality(spec: str) -> Inequality:
    """Inequality from its id: 'chsh', 'bilocal', 'star:n', or 'chain:n'."""
    spec = spec.strip().lower()
    if spec == "chsh":
        return ChshInequality()
    if spec == "chsh_normalized":
        return ChshInequality(normalized=True)
    if spec == "bilocal":
        return StarInequality(2)
    for prefix, cls in (("star:", StarInequality), ("chain:", ChainInequality)):
        if spec.startswith(prefix):
            try:
                n = int(spec[len(prefix):])
            except ValueError:
                raise ValueError(f"bad inequality id {spec!r}")
            return cls(n)
    raise ValueError(
        f"unknown inequality {spec!r}; use chsh, chsh_normalized, bilocal, star:n, or chain:n"
    )
