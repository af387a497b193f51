"""Index-level noise mechanisms over a list of ``V`` positions.

Two mechanisms are provided:

* the truncated two-sided geometric mechanism: add discrete Laplace noise
  with ``P[x] = (e^eps - 1)/(e^eps + 1) * e^(-eps|x|)`` and clamp into
  ``[0, V-1]``;
* a one-dimensional truncated exponential mechanism (TEM): positions within
  a threshold ``gamma`` compete on ``-|j - index|``, everything farther away
  is collapsed into one tail bucket, and the winner is picked with the
  Gumbel-max trick.

Each mechanism has a closed-form PMF used as a test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

GEOMETRIC = "geometric"
TEM = "tem"
_KIND_ALIASES = {
    "geometric": GEOMETRIC, "geo": GEOMETRIC, "1-d_g": GEOMETRIC,
    "tem": TEM, "tem1d": TEM, "1-d_t": TEM,
}

DEFAULT_BETA = 0.001


def normalize_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind.lower()]
    except KeyError:
        raise ContractError(f"unknown mechanism {kind!r}; expected geometric or tem") from None


@dataclass(frozen=True)
class MechanismConfig:
    kind: str = GEOMETRIC
    epsilon: float = 1.0
    beta: float = DEFAULT_BETA
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ContractError(f"epsilon must be a positive finite number, got {self.epsilon}")
        if self.kind == TEM and not 0 < self.beta < 0.5:
            raise ContractError(f"beta must lie in (0, 0.5) for tem, got {self.beta}")

    @property
    def tag(self) -> str:
        return "1-D_G" if self.kind == GEOMETRIC else "1-D_T"


def _check_index(index, V):
    if V < 1:
        raise ContractError(f"vocabulary size must be >= 1, got {V}")
    if not 0 <= index < V:
        raise ContractError(f"index {index} outside [0, {V - 1}]")


def _success_prob(epsilon):
    # 1 - e^-eps without cancellation for small eps
    return -math.expm1(-epsilon)


# -- two-sided geometric ------------------------------------------------------

def two_sided_geometric_pmf(x, epsilon: float):
    """``P[X = x]`` for the untruncated two-sided geometric distribution."""
    q = math.exp(-epsilon)
    c = math.tanh(epsilon / 2)  # == (e^eps - 1) / (e^eps + 1)
    return c * np.power(q, np.abs(x))


def sample_two_sided_geometric(epsilon: float, rng, size=None):
    """Draw from the two-sided geometric distribution at scale ``1/epsilon``.

    The difference of two i.i.d. geometric variables with success
    probability ``1 - e^-epsilon`` has exactly that distribution.
    """
    if not epsilon > 0:
        raise ContractError(f"epsilon must be positive, got {epsilon}")
    p = _success_prob(epsilon)
    if size is None:
        a, b = rng.geometric(p, size=2)
        return int(a - b)
    draws = rng.geometric(p, size=(2, *np.atleast_1d(size)))
    return draws[0] - draws[1]


def perturb_index_geometric(index: int, epsilon: float, V: int, rng) -> int:
    """Noisy index clamped into ``[0, V-1]``."""
    _check_index(index, V)
    noisy = index + sample_two_sided_geometric(epsilon, rng)
    return min(max(noisy, 0), V - 1)


def geometric_exact_pmf(index: int, epsilon: float, V: int) -> np.ndarray:
    """Exact output distribution of :func:`perturb_index_geometric`.

    Interior positions carry the two-sided geometric mass; position 0 and
    ``V-1`` absorb the clamped tails ``q^k / (1 + q)`` with ``q = e^-eps``.
    """
    _check_index(index, V)
    if V == 1:
        return np.ones(1)
    q = math.exp(-epsilon)
    pmf = two_sided_geometric_pmf(np.arange(V) - index, epsilon)
    pmf[0] = q ** index / (1 + q)
    pmf[-1] = q ** (V - 1 - index) / (1 + q)
    return pmf


# -- one-dimensional TEM ------------------------------------------------------

def tem_gamma(epsilon: float, beta: float, V: int) -> float:
    """Truncation threshold ``(2/eps) ln((1-beta)(V-1)/beta)``, floored at 0."""
    if not epsilon > 0:
        raise ContractError(f"epsilon must be positive, got {epsilon}")
    if not 0 < beta < 0.5:
        raise ContractError(f"beta must lie in (0, 0.5), got {beta}")
    if V < 1:
        raise ContractError(f"vocabulary size must be >= 1, got {V}")
    if V == 1:
        return 0.0
    return max(0.0, 2.0 / epsilon * math.log((1 - beta) * (V - 1) / beta))


def _tem_window(index, epsilon, beta, V):
    gamma = tem_gamma(epsilon, beta, V)
    reach = int(math.floor(gamma))
    lo, hi = max(0, index - reach), min(V - 1, index + reach)
    return gamma, lo, hi


def _tem_log_weights(index, epsilon, gamma, lo, hi, V):
    """Log softmax weights of the window positions and of the tail bucket
    (``None`` when the window already covers every position)."""
    js = np.arange(lo, hi + 1)
    logw = -epsilon / 2 * np.abs(js - index)
    n_tail = V - js.size
    tail = None
    if n_tail > 0:
        # bucket score -gamma + (2/eps) ln(n_tail), scaled by eps/2
        tail = -epsilon / 2 * gamma + math.log(n_tail)
    return js, logw, tail


def _tail_index(u, lo, hi):
    # map u in [0, n_tail) onto positions outside [lo, hi]
    return u if u < lo else u + (hi - lo + 1)


def perturb_index_tem(index: int, epsilon: float, beta: float, V: int, rng) -> int:
    """Select a position by Gumbel-max over window scores plus a tail bucket.

    A winning tail bucket is resolved to a uniformly random position outside
    the window.
    """
    _check_index(index, V)
    gamma, lo, hi = _tem_window(index, epsilon, beta, V)
    js, logw, tail = _tem_log_weights(index, epsilon, gamma, lo, hi, V)
    # Gumbel noise of scale 2/eps on scores == standard Gumbel on eps/2 * score
    if tail is None:
        g = rng.gumbel(size=js.size)
        return int(js[np.argmax(logw + g)])
    g = rng.gumbel(size=js.size + 1)
    scores = np.append(logw, tail) + g
    k = int(np.argmax(scores))
    if k < js.size:
        return int(js[k])
    return _tail_index(int(rng.integers(V - js.size)), lo, hi)


def tem_exact_pmf(index: int, epsilon: float, beta: float, V: int) -> np.ndarray:
    """Exact output distribution of :func:`perturb_index_tem` (softmax form)."""
    _check_index(index, V)
    gamma, lo, hi = _tem_window(index, epsilon, beta, V)
    js, logw, tail = _tem_log_weights(index, epsilon, gamma, lo, hi, V)
    if tail is None:
        w = np.exp(logw - logw.max())
        return w / w.sum()
    allw = np.append(logw, tail)
    m = allw.max()
    w = np.exp(allw - m)
    w /= w.sum()
    n_tail = V - js.size
    pmf = np.full(V, w[-1] / n_tail)
    pmf[lo:hi + 1] = w[:-1]
    return pmf


# -- buffered draws -------------------------------------------------------------

class NoiseStream:
    """Buffered random draws for per-word perturbation loops.

    Numpy generators allocate a few hundred bytes per scalar call. This
    wrapper draws blocks of two-sided geometric noise (per epsilon) and of
    uniforms through the same samplers and hands them out as Python
    numbers, so the per-word allocation cost is amortized. Draws are i.i.d.
    exactly as with direct calls; only the consumption order differs.
    """

    def __init__(self, rng=None, block: int = 1024):
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.block = max(1, int(block))
        self._geo: dict[float, list] = {}
        self._unif: list = []

    def two_sided_geometric(self, epsilon: float) -> int:
        buf = self._geo.get(epsilon)
        if not buf:
            buf = sample_two_sided_geometric(epsilon, self.rng, size=self.block).tolist()
            self._geo[epsilon] = buf
        return buf.pop()

    def uniform(self) -> float:
        if not self._unif:
            self._unif = self.rng.random(self.block).tolist()
        return self._unif.pop()

    def index(self, k: int) -> int:
        """Uniform integer in ``[0, k)``."""
        return min(int(self.uniform() * k), k - 1)


def as_stream(rng, block: int = 1) -> NoiseStream:
    if isinstance(rng, NoiseStream):
        return rng
    return NoiseStream(rng, block)


# -- dispatch -----------------------------------------------------------------

def perturb_index(index: int, cfg: MechanismConfig, V: int, rng) -> int:
    if cfg.kind == GEOMETRIC:
        return perturb_index_geometric(index, cfg.epsilon, V, rng)
    return perturb_index_tem(index, cfg.epsilon, cfg.beta, V, rng)


def exact_pmf(index: int, cfg: MechanismConfig, V: int) -> np.ndarray:
    if cfg.kind == GEOMETRIC:
        return geometric_exact_pmf(index, cfg.epsilon, V)
    return tem_exact_pmf(index, cfg.epsilon, cfg.beta, V)


def perturb_index_many(index: int, cfg: MechanismConfig, V: int, rng, n: int) -> np.ndarray:
    """``n`` independent draws of :func:`perturb_index`, vectorized."""
    _check_index(index, V)
    if cfg.kind == GEOMETRIC:
        noisy = index + sample_two_sided_geometric(cfg.epsilon, rng, size=n)
        return np.clip(noisy, 0, V - 1)
    gamma, lo, hi = _tem_window(index, cfg.epsilon, cfg.beta, V)
    js, logw, tail = _tem_log_weights(index, cfg.epsilon, gamma, lo, hi, V)
    if tail is None:
        g = rng.gumbel(size=(n, js.size))
        return js[np.argmax(logw + g, axis=1)]
    g = rng.gumbel(size=(n, js.size + 1))
    k = np.argmax(np.append(logw, tail) + g, axis=1)
    out = np.empty(n, dtype=np.int64)
    inside = k < js.size
    out[inside] = js[k[inside]]
    n_out = int((~inside).sum())
    if n_out:
        u = rng.integers(V - js.size, size=n_out)
        out[~inside] = np.where(u < lo, u, u + (hi - lo + 1))
    return out
