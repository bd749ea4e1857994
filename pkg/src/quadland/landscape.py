"""Energy barriers, rank-deficient constructions, and global-optimality
certificates.

No rank-deficient student can push its population risk below
c_lower * sigma_min(W*)^4 with c_lower = min{mu4 - mu2^2, 2 mu2^2}; the
empirical analogue replaces the constant by half its truncated-moment
version. The bound is tight up to the constant: zeroing the smallest
Gram eigenvalue of the teacher produces a rank d-1 student whose risk is
at most max{mu4, 3 mu2^2} sigma_min^4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import ContractViolation, DegenerateDistribution, InvalidArgument
from .model import (
    Moments,
    StudentWeights,
    TeacherModel,
    absorb_output_weights,
    gram,
    rank_tolerance,
)
from .risk import population_gradient, population_risk_of

SWEEP_SUBSTREAM_BASE = 1000

# Eigenvalues of a nominally PSD Gram may round slightly negative; anything
# above this magnitude is treated as genuinely indefinite.
PSD_CLAMP = 1e-10


@dataclass(frozen=True)
class BarrierReport:
    """Risk of a specific point compared against the energy barrier."""

    barrier_value: float
    risk_value: float
    below: bool
    constant_used: float
    mode: str
    sigma_min_teacher: float

    def to_json(self) -> dict:
        return {
            "barrier_value": self.barrier_value,
            "risk_value": self.risk_value,
            "below": self.below,
            "constant_used": self.constant_used,
            "mode": self.mode,
            "sigma_min_teacher": self.sigma_min_teacher,
        }


def teacher_sigma_min(teacher: TeacherModel) -> float:
    """Smallest singular value of the absorbed teacher weights."""
    w = absorb_output_weights(teacher).weights
    s = np.linalg.svd(w, compute_uv=False)
    return float(s[-1])


def _require_full_rank_teacher(teacher: TeacherModel) -> float:
    w = absorb_output_weights(teacher).weights
    if w.shape[0] < w.shape[1]:
        raise InvalidArgument("teacher weights are rank-deficient (m < d)")
    s = np.linalg.svd(w, compute_uv=False)
    if s[-1] <= rank_tolerance(float(s[0])):
        raise InvalidArgument("teacher weights are rank-deficient")
    return float(s[-1])


def energy_barrier(
    teacher: TeacherModel,
    moments: Moments,
    mode: str = "population",
    alpha: float | None = None,
) -> float:
    """Barrier value constant * sigma_min(W*)^4.

    Population mode uses c_lower = min{mu4 - mu2^2, 2 mu2^2}; empirical
    mode uses half that constant computed from the truncated moments the
    caller passes in. The activation scale alpha (teacher's by default)
    enters squared.
    """
    if mode not in ("population", "empirical"):
        raise InvalidArgument(f"unknown barrier mode: {mode!r}")
    if moments.degenerate:
        raise DegenerateDistribution(
            "Var(X^2) = 0, the barrier constant vanishes for this law"
        )
    sigma_min = _require_full_rank_teacher(teacher)
    if alpha is None:
        alpha = teacher.activation[0]
    constant = moments.c_lower if mode == "population" else 0.5 * moments.c_lower
    return alpha * alpha * constant * sigma_min ** 4


def barrier_report(
    teacher: TeacherModel,
    moments: Moments,
    risk_value: float,
    mode: str = "population",
    alpha: float | None = None,
) -> BarrierReport:
    barrier = energy_barrier(teacher, moments, mode, alpha)
    constant = moments.c_lower if mode == "population" else 0.5 * moments.c_lower
    return BarrierReport(
        barrier_value=barrier,
        risk_value=float(risk_value),
        below=bool(risk_value < barrier),
        constant_used=constant,
        mode=mode,
        sigma_min_teacher=teacher_sigma_min(teacher),
    )


def worst_rank_deficient(teacher: TeacherModel) -> StudentWeights:
    """Rank d-1 student whose Gram is the teacher's with its smallest
    eigenvalue zeroed; this nearly attains the barrier.

    Build the symmetric square root W_bar of the truncated Gram, then embed
    it into the teacher's m rows by splitting one row: the split row keeps
    weight 1/2 and each of the m-d spare rows carries sqrt(3)/(2 sqrt(m-d)),
    so 1/4 + (m-d) * 3/(4(m-d)) = 1 preserves the Gram exactly.
    """
    _require_full_rank_teacher(teacher)
    absorbed = absorb_output_weights(teacher)
    m, d = absorbed.m, absorbed.d
    lam, Q = np.linalg.eigh(gram(absorbed))
    root = np.sqrt(np.clip(lam, 0.0, None))
    root[0] = 0.0  # eigh sorts ascending; drop the smallest direction
    w_bar = (Q * root[None, :]) @ Q.T
    if m == d:
        return StudentWeights(w_bar)
    out = np.zeros((m, d))
    out[: d - 1] = w_bar[: d - 1]
    out[d - 1] = 0.5 * w_bar[d - 1]
    out[d:] = (np.sqrt(3.0) / (2.0 * np.sqrt(m - d))) * w_bar[d - 1]
    return StudentWeights(out)


def embed_gram(gram_matrix: np.ndarray, target_rows: int) -> StudentWeights:
    """Any W with W^T W equal to the given PSD Gram, padded to target_rows.

    Uses the symmetric square root in the top d x d block and zero rows
    below; eigenvalues in [-PSD_CLAMP, 0) are clamped to zero.
    """
    g = np.atleast_2d(np.asarray(gram_matrix, dtype=float))
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidArgument("gram must be square")
    scale = max(1.0, float(np.abs(g).max(initial=0.0)))
    if float(np.abs(g - g.T).max(initial=0.0)) > 1e-12 * scale:
        raise InvalidArgument("gram must be symmetric")
    d = g.shape[0]
    if target_rows < d:
        raise InvalidArgument(f"need at least {d} rows to factor a {d}x{d} gram")
    lam, Q = np.linalg.eigh(0.5 * (g + g.T))
    if lam[0] < -PSD_CLAMP:
        raise InvalidArgument(f"gram is indefinite: smallest eigenvalue {lam[0]:.3e}")
    root = np.sqrt(np.clip(lam, 0.0, None))
    out = np.zeros((target_rows, d))
    out[:d] = (Q * root[None, :]) @ Q.T
    return StudentWeights(out)


@dataclass(frozen=True)
class StationaryCertificate:
    """Outcome of the stationary-point classification."""

    is_full_rank: bool
    grad_norm: float
    gram_gap: float
    verdict: str  # "global-optimum" | "barrier-protected" | "inconclusive"

    def to_json(self) -> dict:
        return {
            "is_full_rank": self.is_full_rank,
            "grad_norm": self.grad_norm,
            "gram_gap": self.gram_gap,
            "verdict": self.verdict,
        }


def certify_stationary_global(
    student: StudentWeights,
    teacher: TeacherModel,
    moments: Moments,
    grad_tol: float = 1e-8,
    gram_tol: float = 1e-6,
) -> StationaryCertificate:
    """Classify a candidate stationary point.

    A full-rank point with vanishing population gradient must match the
    teacher Gram (then it is a global optimum); a rank-deficient point
    with risk at or above the barrier is protected by it; anything else
    is inconclusive.
    """
    s = np.linalg.svd(student.weights, compute_uv=False)
    full_rank = student.m >= student.d and s[-1] > rank_tolerance(float(s[0]))
    grad_norm = float(np.linalg.norm(population_gradient(student, teacher, moments)))
    gram_gap = float(np.linalg.norm(gram(student) - gram(teacher)))
    if full_rank and grad_norm <= grad_tol:
        if gram_gap > gram_tol:
            raise ContractViolation(
                f"full-rank stationary point with gram gap {gram_gap:.3e} > {gram_tol:.3e}"
            )
        verdict = "global-optimum"
    elif not full_rank and not moments.degenerate:
        risk = population_risk_of(student, teacher, moments).value
        barrier = energy_barrier(teacher, moments, "population")
        verdict = "barrier-protected" if risk >= barrier - 1e-9 else "inconclusive"
    else:
        verdict = "inconclusive"
    return StationaryCertificate(
        is_full_rank=bool(full_rank),
        grad_norm=grad_norm,
        gram_gap=gram_gap,
        verdict=verdict,
    )


@dataclass(frozen=True)
class SweepResult:
    """Minimum risk over random rank-deficient students vs the barrier."""

    min_risk_found: float
    barrier: float
    risks: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "min_risk_found": self.min_risk_found,
            "barrier": self.barrier,
            "trials": len(self.risks),
        }


def sample_rank_deficient(teacher: TeacherModel, gen: np.random.Generator) -> StudentWeights:
    """Random student of rank at most d-1: an m x (d-1) factor composed
    with a (d-1) x d projection, both with standard normal entries."""
    m, d = teacher.m, teacher.d
    if d < 2:
        raise InvalidArgument("rank-deficient students need d >= 2")
    factor = _rng.standard_normal(gen, (m, d - 1))
    projection = _rng.standard_normal(gen, (d - 1, d))
    return StudentWeights(factor @ projection)


def rank_deficient_sweep(
    teacher: TeacherModel, moments: Moments, trials: int, seed: int
) -> SweepResult:
    """Falsification harness: no random rank-deficient student may dip
    below the barrier. Raises if one does."""
    if trials < 1:
        raise InvalidArgument("need at least one trial")
    barrier = energy_barrier(teacher, moments, "population")
    risks = []
    for trial in range(trials):
        gen = _rng.stream(seed, SWEEP_SUBSTREAM_BASE + trial)
        student = sample_rank_deficient(teacher, gen)
        risks.append(population_risk_of(student, teacher, moments).value)
    min_risk = float(min(risks))
    if min_risk < barrier - 1e-9:
        raise ContractViolation(
            f"rank-deficient student with risk {min_risk:.6e} below barrier {barrier:.6e}"
        )
    return SweepResult(min_risk_found=min_risk, barrier=barrier, risks=tuple(risks))


def sublevel_norm_bound(initial_risk: float, teacher: TeacherModel, moments: Moments) -> float:
    """Norm ceiling sqrt(sqrt(R_0)/mu2 + 3 ||W*||_F^2) for every iterate in
    the initial sublevel set (the factor 3 is (1+eps)/(1-eps) at eps=1/2)."""
    g = gram(absorb_output_weights(teacher))
    return float(np.sqrt(np.sqrt(max(initial_risk, 0.0)) / moments.mu2 + 3.0 * np.trace(g)))
