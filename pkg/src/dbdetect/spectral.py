"""Spectrum of the likelihood kernel and second-moment machinery.

The likelihood kernel (joint law divided by the product of marginals) is a
self-adjoint operator whose eigenvalues control how distinguishable the two
hypotheses are.  This module computes those eigenvalues (exactly for discrete
models, by geometric truncation for the Gaussian family), the impossibility
statistics built from them, and the exact second moment of the
permutation-mixture likelihood ratio under the null via cycle-type
enumeration, together with its Poisson-surrogate closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

import numpy as np

from .errors import (
    CapacityError,
    DegenerateModelError,
    DomainError,
    InvariantViolationError,
    ValidationError,
)
from .models import DiscreteJointModel, _frozen_array

# Integer partitions of n index the cycle types of S_n; p(60) ~ 1e6 keeps the
# enumeration comfortably in memory and under a few seconds.
PARTITION_CAP = 60

TOP_EIGENVALUE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """Eigenvalues of the likelihood kernel, sorted by decreasing value.

    The top eigenvalue is always 1 (the constant function is invariant); it
    is validated within 1e-10 and snapped exactly.  Signed values are kept,
    and every statistic downstream consumes even powers only, so the sign
    convention cannot leak into any output.
    """

    eigenvalues: np.ndarray
    source: str  # "discrete-exact" or "gaussian-truncated"
    truncation_tol: Optional[float] = None
    rho: Optional[float] = None  # populated for gaussian-truncated profiles

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64).copy()
        if lam.ndim != 1 or lam.size < 1:
            raise ValidationError("eigenvalues must be a nonempty 1-D sequence")
        lam = np.sort(lam)[::-1]
        if abs(lam[0] - 1.0) > TOP_EIGENVALUE_TOL:
            raise InvariantViolationError(
                f"top eigenvalue must be 1 within {TOP_EIGENVALUE_TOL:g}, "
                f"got {lam[0]!r}"
            )
        if np.abs(lam).max() > 1.0 + TOP_EIGENVALUE_TOL:
            raise InvariantViolationError(
                "eigenvalues must lie in [-1, 1] (within 1e-10)"
            )
        lam[0] = 1.0
        object.__setattr__(self, "eigenvalues", _frozen_array(lam))

    @property
    def subdominant(self) -> np.ndarray:
        """All eigenvalues except the single top entry equal to 1."""
        return self.eigenvalues[1:]


def kernel_matrix(model: DiscreteJointModel) -> np.ndarray:
    """Row-stochastic transition matrix M[x, y] = joint[x, y] / q(x)."""
    model.require_positive_marginal("kernel_matrix")
    return model.joint / model.marginal[:, None]


def eigenvalues(model: DiscreteJointModel) -> SpectralProfile:
    """Exact kernel spectrum of a discrete model.

    Computed on the symmetric conjugate D^{-1/2} J D^{-1/2} (D = diag(q)),
    which shares the spectrum of the row-stochastic kernel but is symmetric,
    so the eigenvalues are provably real and the solver is stable.
    """
    model.require_positive_marginal("eigenvalues")
    inv_sqrt_q = 1.0 / np.sqrt(model.marginal)
    sym = model.joint * np.outer(inv_sqrt_q, inv_sqrt_q)
    lam = np.linalg.eigvalsh(sym)
    return SpectralProfile(eigenvalues=lam, source="discrete-exact")


def gaussian_profile(rho: float, tol: float = 1e-12) -> SpectralProfile:
    """Geometric spectrum {rho^l} of the Gaussian likelihood kernel,
    truncated once |rho^l| drops below ``tol``."""
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise DomainError(f"gaussian spectrum requires |rho| < 1, got {rho!r}")
    if not tol > 0.0:
        raise ValidationError(f"tol must be positive, got {tol!r}")
    if rho == 0.0:
        lam = np.array([1.0])
    else:
        k = max(1, math.ceil(math.log(tol) / math.log(abs(rho))))
        lam = rho ** np.arange(k + 1, dtype=np.float64)
    return SpectralProfile(
        eigenvalues=lam, source="gaussian-truncated", truncation_tol=tol, rho=rho
    )


def gaussian_tail_bound(profile: SpectralProfile) -> float:
    """Bound on the part of sum lam_i^2 / (1 - lam_i^2) lost to truncation.

    With L stored powers rho^0..rho^{L-1}, the dropped terms are bounded by
    rho^{2L} / ((1 - rho^2)(1 - rho^{2L})).  Zero for exact profiles.
    """
    if profile.source != "gaussian-truncated" or profile.rho in (None, 0.0):
        return 0.0
    r2 = profile.rho * profile.rho
    r2l = r2 ** profile.eigenvalues.size
    return r2l / ((1.0 - r2) * (1.0 - r2l))


def weak_lb_statistic(profile: SpectralProfile) -> float:
    """The series sum_{i>=1} lam_i^2 / (1 - lam_i^2).

    Weak detection is impossible whenever this is vanishing relative to 1/d;
    the caller compares d times this value against 1.  For truncated Gaussian
    profiles the analytic geometric tail bound is added.
    """
    sub = profile.subdominant
    if sub.size and np.abs(sub).max() >= 1.0:
        raise DomainError(
            "profile has a subdominant eigenvalue of modulus 1; the series diverges"
        )
    s2 = sub * sub
    total = float(np.sum(s2 / (1.0 - s2)))
    tail = gaussian_tail_bound(profile)
    if profile.truncation_tol is not None and tail >= profile.truncation_tol:
        raise InvariantViolationError(
            f"truncation tail bound {tail:g} exceeds the truncation tolerance "
            f"{profile.truncation_tol:g}; retruncate with a smaller tol"
        )
    return total + tail


def strong_lb_fixed_d_threshold(profile: SpectralProfile) -> float:
    """Feature-count threshold below which strong detection fails for fixed d.

    Returns -log(lam_1^2) / log(sum_i lam_i^2) where lam_1^2 is the largest
    squared subdominant eigenvalue (squares make the value independent of
    sign conventions).  Any integer d strictly below the returned value is in
    the impossible regime.
    """
    sub = profile.subdominant
    lam1_sq = float(np.max(sub * sub)) if sub.size else 0.0
    if lam1_sq == 0.0:
        raise DegenerateModelError(
            "all subdominant eigenvalues vanish (independent model); "
            "the fixed-d threshold is undefined"
        )
    total_sq = 1.0 + float(np.sum(sub * sub))
    return -math.log(lam1_sq) / math.log(total_sq)


# ---------------------------------------------------------------------------
# Cycle types and the exact second moment
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CycleType:
    """One conjugacy class of S_n: counts[k] permutation cycles of length k,
    and the probability that a uniform permutation has this cycle type,
    1 / prod_k (k^{N_k} N_k!)."""

    counts: Mapping[int, int]
    probability: float

    @property
    def n(self) -> int:
        return sum(k * v for k, v in self.counts.items())


def _iter_partitions(n: int) -> Iterator[dict]:
    """Yield the integer partitions of n as {part: multiplicity} dicts."""

    def rec(remaining: int, max_part: int):
        if remaining == 0:
            yield []
            return
        for part in range(min(remaining, max_part), 0, -1):
            for rest in rec(remaining - part, part):
                yield [part] + rest

    for parts in rec(n, n):
        counts: dict = {}
        for part in parts:
            counts[part] = counts.get(part, 0) + 1
        yield counts


def _cycle_type_probability(counts: Mapping[int, int]) -> float:
    log_p = 0.0
    for k, nk in counts.items():
        log_p -= nk * math.log(k) + math.lgamma(nk + 1)
    return math.exp(log_p)


def _check_partition_cap(n: int) -> None:
    if not 1 <= n <= PARTITION_CAP:
        raise CapacityError(
            f"cycle-type enumeration supports 1 <= n <= {PARTITION_CAP}, got {n}"
        )


def cycle_types(n: int) -> list[CycleType]:
    """All cycle types of S_n with their probabilities (summing to 1)."""
    _check_partition_cap(n)
    return [
        CycleType(counts=c, probability=_cycle_type_probability(c))
        for c in _iter_partitions(n)
    ]


def _power_sums(profile: SpectralProfile, n: int) -> np.ndarray:
    """g_k = sum_i lam_i^{2k} for k = 1..n, including the top eigenvalue."""
    sub_sq = profile.subdominant ** 2
    g = np.empty(n)
    acc = sub_sq.copy()
    for k in range(n):
        g[k] = 1.0 + float(acc.sum())
        acc *= sub_sq
    return g


def second_moment_exact(profile: SpectralProfile, n: int, d: int) -> float:
    """Exact null second moment of the permutation-mixture likelihood ratio.

    Equals the expectation over a uniform cycle type of
    prod_k g_k^{d N_k}, with g_k the sum of 2k-th eigenvalue powers.
    Accumulated in log space; returns ``inf`` when the value exceeds the
    double range.  Always >= 1, with equality exactly under independence.
    """
    _check_partition_cap(n)
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    log_g = np.log(_power_sums(profile, n))
    if log_g.max() == 0.0:
        # independence: every cycle-type factor is exactly 1
        return 1.0
    # streaming log-sum-exp over all cycle types
    running_max = -math.inf
    running_sum = 0.0
    for counts in _iter_partitions(n):
        term = 0.0
        for k, nk in counts.items():
            term -= nk * math.log(k) + math.lgamma(nk + 1)
            term += d * nk * log_g[k - 1]
        if term <= running_max:
            running_sum += math.exp(term - running_max)
        else:
            running_sum = running_sum * math.exp(running_max - term) + 1.0
            running_max = term
    log_total = running_max + math.log(running_sum)
    if log_total >= math.log(np.finfo(np.float64).max):
        return math.inf
    return max(1.0, math.exp(log_total))


def poisson_surrogate_moment(profile: SpectralProfile, m: int, d: int) -> float:
    """Second-moment surrogate with independent Poisson(1/k) cycle counts.

    Exact value of E exp(d * sum_{k<=m} P_k log g_k):
    prod_{k=1..m} exp((g_k^d - 1) / k).  Nondecreasing in m; for d = 1 it
    increases to exp(-sum_{i>=1} log(1 - lam_i^2)).
    """
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    log_g = np.log(_power_sums(profile, m))
    exponent = 0.0
    for k in range(1, m + 1):
        dlg = d * log_g[k - 1]
        if dlg > 700.0:
            return math.inf
        exponent += math.expm1(dlg) / k
    if exponent > 700.0:
        return math.inf
    return math.exp(exponent)


def poisson_moment_bound(profile: SpectralProfile, d: int) -> float:
    """Closed-form upper bound on the null second moment.

    exp[d S + (sum_i lam_i^2)^{d-2} (d S)^2] with
    S = sum_{i>=1} lam_i^2 / (1 - lam_i^2); the total in the middle factor
    includes the top eigenvalue.
    """
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    s = weak_lb_statistic(profile)
    sub = profile.subdominant
    total_sq = 1.0 + float(np.sum(sub * sub))
    exponent = d * s + total_sq ** (d - 2) * (d * s) ** 2
    if exponent > 700.0:
        return math.inf
    return math.exp(exponent)


def risk_lower_bound_from_moment(second_moment: float) -> float:
    """Risk floor implied by a null second moment: 1 - sqrt(moment - 1) / 2,
    clamped to [0, 1].  A moment below 1 signals a broken computation."""
    if second_moment < 1.0 - 1e-12:
        raise InvariantViolationError(
            f"second moment must be >= 1, got {second_moment!r}"
        )
    if math.isinf(second_moment):
        return 0.0
    gap = max(0.0, second_moment - 1.0)
    return min(1.0, max(0.0, 1.0 - 0.5 * math.sqrt(gap)))
