"""Domain types for teacher and student networks.

A network with weight matrix W (one row per neuron) computes

    f(W; x) = sum_j a_j * act(<W_j, x>),    act(z) = alpha z^2 + beta z + gamma.

With the default activation z^2 and unit output weights this is ||W x||^2,
so the function depends on W only through the Gram matrix W^T W. The module
also holds coordinate-distribution moments (mu2, mu4) and their truncated
versions, which are the only distributional inputs the closed-form risk
formulas need.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf

from . import _rng
from .errors import DegenerateDistribution, InvalidArgument

RANK_RTOL = 1e-10

_DEFAULT_ACTIVATION = (1.0, 0.0, 0.0)


def rank_tolerance(sigma_max: float) -> float:
    """Singular values above this count toward numerical rank."""
    return RANK_RTOL * max(1.0, sigma_max)


def numerical_rank(matrix: np.ndarray) -> int:
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.count_nonzero(s > rank_tolerance(float(s[0]))))


def is_full_rank(matrix: np.ndarray) -> bool:
    matrix = np.asarray(matrix, dtype=float)
    return numerical_rank(matrix) == min(matrix.shape)


def _frozen_array(obj, values, name):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)
    return arr


def _format_param(x: float) -> str:
    return str(int(x)) if float(x) == int(x) else repr(float(x))


# --------------------------------------------------------------------------
# coordinate distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    """Centered normal coordinates with standard deviation sigma."""

    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidArgument("gaussian sigma must be positive and finite")

    @property
    def tag(self) -> str:
        return f"gaussian({_format_param(self.sigma)})"

    def moments(self) -> "Moments":
        s2 = self.sigma ** 2
        return Moments(mu2=s2, mu4=3.0 * s2 * s2)

    def truncated(self, threshold: float) -> "Moments":
        # Condition on |X| <= K. By parts, with Z = 2 Phi(k) - 1 and
        # k = K / sigma: mu2 = sigma^2 (1 - 2 k phi(k)/Z) and
        # mu4 = sigma^4 (3 - 2 k (k^2 + 3) phi(k)/Z).
        k = threshold / self.sigma
        z = erf(k / math.sqrt(2.0))
        if z == 0.0:
            raise InvalidArgument("truncation threshold underflows the gaussian mass")
        phi = math.exp(-k * k / 2.0) / math.sqrt(2.0 * math.pi)
        mu2 = self.sigma ** 2 * (1.0 - 2.0 * k * phi / z)
        mu4 = self.sigma ** 4 * (3.0 - 2.0 * k * (k * k + 3.0) * phi / z)
        return Moments(mu2=mu2, mu4=mu4)

    def sample(self, gen: np.random.Generator, shape) -> np.ndarray:
        return self.sigma * _rng.standard_normal(gen, shape)


@dataclass(frozen=True)
class Uniform:
    """Uniform coordinates on [-halfwidth, halfwidth]."""

    halfwidth: float

    def __post_init__(self):
        if not (self.halfwidth > 0 and math.isfinite(self.halfwidth)):
            raise InvalidArgument("uniform halfwidth must be positive and finite")

    @property
    def tag(self) -> str:
        return f"uniform({_format_param(self.halfwidth)})"

    def moments(self) -> "Moments":
        a2 = self.halfwidth ** 2
        return Moments(mu2=a2 / 3.0, mu4=a2 * a2 / 5.0)

    def truncated(self, threshold: float) -> "Moments":
        a = min(self.halfwidth, threshold)
        return Moments(mu2=a * a / 3.0, mu4=a ** 4 / 5.0)

    def sample(self, gen: np.random.Generator, shape) -> np.ndarray:
        return self.halfwidth * (2.0 * _rng.open_uniform(gen, shape) - 1.0)


@dataclass(frozen=True)
class Rademacher:
    """Coordinates uniform on {-1, +1}; X^2 = 1 so Var(X^2) = 0."""

    @property
    def tag(self) -> str:
        return "rademacher"

    def moments(self) -> "Moments":
        return Moments(mu2=1.0, mu4=1.0)

    def truncated(self, threshold: float) -> "Moments":
        if threshold < 1.0:
            raise InvalidArgument(
                "rademacher puts no mass on |x| <= threshold < 1"
            )
        return self.moments()

    def sample(self, gen: np.random.Generator, shape) -> np.ndarray:
        return gen.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


@dataclass(frozen=True)
class Custom:
    """User-supplied law given by exact (mu2, mu4) plus a sampler.

    The sampler must draw from a centered symmetric law; that assumption
    is documented, not verified. Truncated moments fall back to rejection
    sampling and report standard errors, since no closed form is known.
    """

    mu2: float
    mu4: float
    sampler: Callable[[np.random.Generator, tuple], np.ndarray] = field(compare=False)
    name: str = "custom"

    @property
    def tag(self) -> str:
        return f"custom({self.name})"

    def moments(self) -> "Moments":
        return Moments(mu2=self.mu2, mu4=self.mu4)

    def truncated(self, threshold: float, n_samples: int = 10 ** 6, seed: int = 0) -> "Moments":
        gen = _rng.stream(seed, 0xC0)
        draws = np.asarray(self.sampler(gen, (n_samples,)), dtype=float)
        kept = draws[np.abs(draws) <= threshold]
        if kept.size < 2:
            raise InvalidArgument(
                f"no sampled mass on |x| <= {threshold}; cannot truncate {self.tag}"
            )
        sq = kept ** 2
        quart = sq ** 2
        n = kept.size
        return Moments(
            mu2=float(sq.mean()),
            mu4=float(quart.mean()),
            mu2_se=float(sq.std(ddof=1) / math.sqrt(n)),
            mu4_se=float(quart.std(ddof=1) / math.sqrt(n)),
        )

    def sample(self, gen: np.random.Generator, shape) -> np.ndarray:
        out = np.asarray(self.sampler(gen, shape), dtype=float)
        if out.shape != tuple(shape):
            raise InvalidArgument("custom sampler returned wrong shape")
        return out


Distribution = Gaussian | Uniform | Rademacher | Custom

_TAG_RE = re.compile(r"^(?P<name>[a-z_]+)(?:\((?P<arg>[^)]*)\))?$")


def parse_distribution(tag: str) -> Distribution:
    """Parse tags like 'gaussian(1)', 'uniform(1.5)', 'rademacher'."""
    m = _TAG_RE.match(tag.strip())
    if not m:
        raise InvalidArgument(f"unparseable distribution tag: {tag!r}")
    name, arg = m.group("name"), m.group("arg")
    if name == "gaussian":
        return Gaussian(float(arg) if arg else 1.0)
    if name == "uniform":
        if arg is None:
            raise InvalidArgument("uniform tag needs a halfwidth, e.g. uniform(1.5)")
        return Uniform(float(arg))
    if name == "rademacher":
        return Rademacher()
    raise InvalidArgument(f"unknown distribution: {tag!r}")


# --------------------------------------------------------------------------
# moments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Moments:
    """Second and fourth coordinate moments with derived barrier constants.

    var_sq = mu4 - mu2^2 is Var(X^2); the barrier constants are
    c_lower = min{var_sq, 2 mu2^2} and c_upper = max{var_sq, 2 mu2^2}.
    A law is degenerate when var_sq = 0 (then c_lower = 0 and every
    barrier statement is vacuous).
    """

    mu2: float
    mu4: float
    mu2_se: float = 0.0
    mu4_se: float = 0.0

    def __post_init__(self):
        if not (self.mu2 > 0 and math.isfinite(self.mu2) and math.isfinite(self.mu4)):
            raise InvalidArgument("need finite moments with mu2 > 0")
        if self.mu4 < self.mu2 ** 2 - 1e-12 * max(1.0, abs(self.mu4)):
            raise InvalidArgument("mu4 < mu2^2 violates Jensen's inequality")

    @property
    def var_sq(self) -> float:
        return self.mu4 - self.mu2 ** 2

    @property
    def c_lower(self) -> float:
        return min(self.var_sq, 2.0 * self.mu2 ** 2)

    @property
    def c_upper(self) -> float:
        return max(self.var_sq, 2.0 * self.mu2 ** 2)

    @property
    def degenerate(self) -> bool:
        return self.var_sq <= 1e-15 * max(1.0, self.mu4)


def moments_of(distribution: Distribution) -> Moments:
    """Exact analytic moments of a named coordinate law."""
    return distribution.moments()


def truncated_moments(distribution: Distribution, threshold: float, **kwargs) -> Moments:
    """Conditional moments of X given |X| <= threshold."""
    if not (threshold > 0):
        raise InvalidArgument("truncation threshold must be positive")
    return distribution.truncated(threshold, **kwargs)


# --------------------------------------------------------------------------
# network types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TeacherModel:
    """Planted network: weights (m x d), activation triple, output weights."""

    weights: np.ndarray
    activation: tuple[float, float, float] = _DEFAULT_ACTIVATION
    output_weights: np.ndarray | None = None

    def __post_init__(self):
        w = _frozen_array(self, np.atleast_2d(self.weights), "weights")
        if w.ndim != 2:
            raise InvalidArgument("weights must be a matrix")
        m, d = w.shape
        if not np.all(np.isfinite(w)):
            raise InvalidArgument("weights must be finite")
        act = tuple(float(c) for c in self.activation)
        if len(act) != 3:
            raise InvalidArgument("activation must be (alpha, beta, gamma)")
        if act[0] == 0.0:
            raise InvalidArgument("activation needs alpha != 0")
        object.__setattr__(self, "activation", act)
        if self.output_weights is not None:
            a = _frozen_array(self, self.output_weights, "output_weights")
            if a.shape != (m,):
                raise InvalidArgument("output_weights must have one entry per neuron")
            if not (np.all(np.isfinite(a)) and np.all(a > 0)):
                raise InvalidArgument("output_weights must be strictly positive")

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class StudentWeights:
    """Trainable network weights, m_hat x d; m_hat may differ from the teacher."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self, np.atleast_2d(self.weights), "weights")
        if w.ndim != 2:
            raise InvalidArgument("weights must be a matrix")
        if not np.all(np.isfinite(w)):
            raise InvalidArgument("weights must be finite")

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]


Network = TeacherModel | StudentWeights


@dataclass(frozen=True)
class Discrepancy:
    """Teacher Gram minus student Gram, A = (W*)^T W* - W^T W."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgument("discrepancy must be square")
        scale = max(1.0, float(np.abs(a).max(initial=0.0)))
        if float(np.abs(a - a.T).max(initial=0.0)) > 1e-12 * scale:
            raise InvalidArgument("discrepancy must be symmetric to 1e-12 relative")
        _frozen_array(self, 0.5 * (a + a.T), "matrix")

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


def _activation_of(model: Network) -> tuple[float, float, float]:
    return model.activation if isinstance(model, TeacherModel) else _DEFAULT_ACTIVATION


def _output_weights_of(model: Network) -> np.ndarray | None:
    return model.output_weights if isinstance(model, TeacherModel) else None


def forward(model: Network, x: np.ndarray) -> float:
    """Network output sum_j a_j (alpha <W_j,x>^2 + beta <W_j,x> + gamma)."""
    w = model.weights
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != w.shape[1]:
        raise InvalidArgument(f"input has dimension {x.shape[0]}, weights expect {w.shape[1]}")
    alpha, beta, gamma = _activation_of(model)
    z = w @ x
    vals = alpha * z * z + beta * z + gamma
    a = _output_weights_of(model)
    return float(vals.sum() if a is None else a @ vals)


def forward_batch(model: Network, X: np.ndarray) -> np.ndarray:
    """Vectorized forward over the rows of X (N x d)."""
    w = model.weights
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != w.shape[1]:
        raise InvalidArgument(f"inputs have dimension {X.shape[1]}, weights expect {w.shape[1]}")
    alpha, beta, gamma = _activation_of(model)
    Z = X @ w.T
    vals = alpha * Z * Z + beta * Z + gamma
    a = _output_weights_of(model)
    return vals.sum(axis=1) if a is None else vals @ a


def gram(model_or_weights) -> np.ndarray:
    """Output-weighted Gram matrix sum_j a_j W_j W_j^T (d x d, symmetric)."""
    if isinstance(model_or_weights, (TeacherModel, StudentWeights)):
        w = model_or_weights.weights
        a = _output_weights_of(model_or_weights)
    else:
        w = np.atleast_2d(np.asarray(model_or_weights, dtype=float))
        a = None
    scaled = w if a is None else w * np.sqrt(a)[:, None]
    g = scaled.T @ scaled
    return 0.5 * (g + g.T)


def discrepancy(teacher: TeacherModel, student: StudentWeights) -> Discrepancy:
    """A = Gram(teacher) - Gram(student); output weights enter the teacher Gram."""
    if teacher.d != student.d:
        raise InvalidArgument(f"dimension mismatch: teacher d={teacher.d}, student d={student.d}")
    return Discrepancy(gram(teacher) - gram(student))


def absorb_output_weights(model: TeacherModel) -> TeacherModel:
    """Fold output weights into the rows: row j becomes sqrt(a_j) W_j.

    Valid because a z^2 = (sqrt(a) z)^2. The affine activation terms do not
    commute with row scaling, so absorption requires beta = gamma = 0.
    """
    if model.output_weights is None or np.all(model.output_weights == 1.0):
        return TeacherModel(model.weights, model.activation, None)
    alpha, beta, gamma = model.activation
    if beta != 0.0 or gamma != 0.0:
        raise InvalidArgument(
            "cannot absorb output weights under affine activation terms"
        )
    scaled = model.weights * np.sqrt(model.output_weights)[:, None]
    return TeacherModel(scaled, model.activation, None)
