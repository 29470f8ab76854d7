"""Distribution families: sampling, means, KL divergence, and the
mean-inflation / KL-projection computations each family contributes.

Three families are supported:

* Normal with known variances (parameter: the mean),
* Normal with unknown mean and variance (parameter: (mean, variance)),
* discrete with finite support (parameter: the probability vector).

Per-bandit parameters are plain floats / tuples; a parameter vector is a
tuple with one entry per bandit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class DomainError(Exception):
    """Parameter outside the family's admissible set (e.g. a discrete
    alternative with zero mass where the reference has positive mass)."""


class InsufficientSamples(Exception):
    """Not enough samples for the requested computation (unknown-variance
    inflation needs at least 3)."""


# ---------------------------------------------------------------------------
# Discrete-support KL optimization helpers
# ---------------------------------------------------------------------------

_BISECT_TOL = 1e-9
_BISECT_MAX_ITER = 200


def discrete_kl(p: Sequence[float], q: Sequence[float]) -> float:
    """KL(p, q) = sum p_x log(p_x / q_x); zero-mass p terms drop out."""
    total = 0.0
    for px, qx in zip(p, q):
        if px > 0.0:
            if qx <= 0.0:
                raise DomainError("alternative has zero mass where reference is positive")
            total += px * math.log(px / qx)
    return total


def _tilt_stats(support: Sequence[float], p: Sequence[float], beta: float):
    """For q_x proportional to p_x / (beta - r_x): return (KL(p,q), mean of q)."""
    z = 0.0
    for r, px in zip(support, p):
        if px > 0.0:
            z += px / (beta - r)
    kl = 0.0
    mean = 0.0
    for r, px in zip(support, p):
        if px > 0.0:
            qx = px / ((beta - r) * z)
            kl += px * math.log(px / qx)
            mean += r * qx
    return kl, mean


def klucb_discrete(support: Sequence[float], p: Sequence[float], radius: float) -> float:
    """Largest achievable mean within a KL ball of the given radius:
    max { r.q : KL(p, q) <= radius, sum q = 1 } over the support.

    Solved through the one-parameter exponential-tilt curve
    q_x ~ p_x / (beta - r_x), beta > r_max, along which KL is decreasing and
    the mean increasing as beta decreases; an atom at the top support point
    covers the regime where the reference has no mass there.
    """
    if radius <= 0.0:
        return sum(r * px for r, px in zip(support, p))
    r_max = max(support)
    mean_p = sum(r * px for r, px in zip(support, p))
    if all(px == 0.0 for r, px in zip(support, p) if r < r_max):
        return r_max
    if any(px > 0.0 for r, px in zip(support, p) if r == r_max):
        # KL blows up as beta -> r_max: every radius is reached on the curve.
        kappa = math.inf
    else:
        kappa, _ = _tilt_stats(support, p, r_max)
    if radius >= kappa:
        # Optimal q mixes the beta = r_max tilt with an atom at r_max.
        m = 1.0 - math.exp(kappa - radius)
        _, tilt_mean = _tilt_stats(support, p, r_max)
        return (1.0 - m) * tilt_mean + m * r_max
    # Bracket beta: KL decreases to 0 as beta -> inf.
    span = r_max - min(support)
    lo = r_max
    hi = r_max + max(span, 1.0)
    while _tilt_stats(support, p, hi)[0] > radius:
        hi = r_max + (hi - r_max) * 2.0
        if hi - r_max > 1e18:
            break
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        kl, _ = _tilt_stats(support, p, mid)
        if kl > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo < _BISECT_TOL * max(1.0, hi - r_max):
            break
    _, mean = _tilt_stats(support, p, hi)
    return max(mean, mean_p)


def kinf_discrete(support: Sequence[float], p: Sequence[float], target: float) -> float:
    """Minimal KL(p, q) over q on the support with mean(q) >= target.

    Dual form: max over lambda in [0, 1/(r_max - target)] of
    E_p[log(1 - lambda (X - target))]; the boundary value carries the case
    where the minimizer puts an atom on the top support point.
    """
    mean_p = sum(r * px for r, px in zip(support, p))
    if target <= mean_p:
        return 0.0
    r_max = max(support)
    if target > r_max:
        return math.inf
    if target == r_max:
        p_top = sum(px for r, px in zip(support, p) if r == r_max)
        return math.inf if p_top < 1.0 and any(
            px > 0.0 for r, px in zip(support, p) if r < r_max
        ) else 0.0

    def gprime(lam: float) -> float:
        total = 0.0
        for r, px in zip(support, p):
            if px > 0.0:
                total += px * (target - r) / (1.0 - lam * (r - target))
        return total

    def gval(lam: float) -> float:
        total = 0.0
        for r, px in zip(support, p):
            if px > 0.0:
                arg = 1.0 - lam * (r - target)
                if arg <= 0.0:
                    return -math.inf
                total += px * math.log(arg)
        return total

    lam_max = 1.0 / (r_max - target)
    eps = lam_max * 1e-12
    if gprime(lam_max - eps) > 0.0:
        # Maximum at the boundary (atom at r_max in the primal minimizer).
        return gval(lam_max) if gval(lam_max) > -math.inf else gval(lam_max - eps)
    lo, hi = 0.0, lam_max - eps
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if gprime(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < _BISECT_TOL * lam_max:
            break
    return gval(0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalKnownVar:
    """Normal rewards with unknown means and known per-bandit variances."""

    sigmas: tuple[float, ...]

    name = "normal_known_var"
    min_samples_for_inflation = 1

    def __post_init__(self):
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("known standard deviations must be positive")

    def mean(self, alpha: int, theta) -> float:
        return float(theta)

    def kl(self, alpha: int, theta, theta2) -> float:
        s2 = self.sigmas[alpha - 1] ** 2
        return (theta2 - theta) ** 2 / (2.0 * s2)

    def sup_mean_radius(self, alpha: int, theta, radius: float) -> float:
        return theta + self.sigmas[alpha - 1] * math.sqrt(2.0 * max(radius, 0.0))

    def inflation(self, alpha: int, theta, s: int, t: int) -> float:
        return self.sup_mean_radius(alpha, theta, math.log(s) / t)

    def inflated_param(self, alpha: int, theta, s: int, t: int):
        return self.inflation(alpha, theta, s, t)

    def k_alpha(self, alpha: int, theta, phi: float) -> float:
        return phi ** 2 / (2.0 * self.sigmas[alpha - 1] ** 2)

    def mean_reachable(self, alpha: int, target: float) -> bool:
        return True

    def draw(self, alpha: int, theta, rng) -> float:
        return theta + self.sigmas[alpha - 1] * rng.standard_normal()

    def estimate(self, alpha: int, count: int, total: float, total_sq: float, freq):
        return total / count


@dataclass(frozen=True)
class NormalUnknownVar:
    """Normal rewards with unknown means and unknown variances.

    Parameters are (mean, variance) pairs; estimates use the biased variance
    with divisor T.
    """

    name = "normal_unknown_var"
    min_samples_for_inflation = 3

    def mean(self, alpha: int, theta) -> float:
        return float(theta[0])

    def kl(self, alpha: int, theta, theta2) -> float:
        mu, var = theta
        mu2, _ = theta2
        if var <= 0:
            raise DomainError("variance must be positive for the KL form")
        return 0.5 * math.log1p((mu2 - mu) ** 2 / var)

    def sup_mean_radius(self, alpha: int, theta, radius: float) -> float:
        mu, var = theta
        return mu + math.sqrt(var * max(math.exp(2.0 * radius) - 1.0, 0.0))

    def inflation(self, alpha: int, theta, s: int, t: int) -> float:
        if t <= 2:
            raise InsufficientSamples(
                f"unknown-variance inflation needs at least 3 samples, got {t}"
            )
        mu, var = theta
        return mu + math.sqrt(var) * math.sqrt(s ** (2.0 / (t - 2)) - 1.0)

    def inflated_param(self, alpha: int, theta, s: int, t: int):
        return (self.inflation(alpha, theta, s, t), theta[1])

    def k_alpha(self, alpha: int, theta, phi: float) -> float:
        _, var = theta
        return 0.5 * math.log1p(phi ** 2 / var)

    def mean_reachable(self, alpha: int, target: float) -> bool:
        return True

    def draw(self, alpha: int, theta, rng) -> float:
        mu, var = theta
        return mu + math.sqrt(var) * rng.standard_normal()

    def estimate(self, alpha: int, count: int, total: float, total_sq: float, freq):
        mu = total / count
        var = max(total_sq / count - mu * mu, 0.0)
        return (mu, var)


@dataclass(frozen=True)
class DiscreteFinite:
    """Discrete rewards on finite per-bandit supports; the parameter of a
    bandit is its probability vector over its support."""

    supports: tuple[tuple[float, ...], ...]

    name = "discrete_finite"
    min_samples_for_inflation = 1

    def __post_init__(self):
        for idx, sup in enumerate(self.supports):
            if len(sup) < 2:
                raise ValueError(f"support of bandit {idx + 1} needs at least 2 points")
            if len(set(sup)) != len(sup):
                raise ValueError(f"support of bandit {idx + 1} has repeated values")

    def mean(self, alpha: int, theta) -> float:
        return sum(r * px for r, px in zip(self.supports[alpha - 1], theta))

    def kl(self, alpha: int, theta, theta2) -> float:
        return discrete_kl(theta, theta2)

    def sup_mean_radius(self, alpha: int, theta, radius: float) -> float:
        return klucb_discrete(self.supports[alpha - 1], theta, radius)

    def inflation(self, alpha: int, theta, s: int, t: int) -> float:
        return self.sup_mean_radius(alpha, theta, math.log(s) / t)

    def inflated_param(self, alpha: int, theta, s: int, t: int):
        # Only the mean of the boundary maximizer enters the index LP.
        return self.inflation(alpha, theta, s, t)

    def k_alpha(self, alpha: int, theta, phi: float) -> float:
        target = self.mean(alpha, theta) + phi
        return kinf_discrete(self.supports[alpha - 1], theta, target)

    def mean_reachable(self, alpha: int, target: float) -> bool:
        return target < max(self.supports[alpha - 1])

    def draw(self, alpha: int, theta, rng) -> float:
        u = rng.random()
        acc = 0.0
        support = self.supports[alpha - 1]
        for r, px in zip(support, theta):
            acc += px
            if u < acc:
                return r
        return support[-1]

    def estimate(self, alpha: int, count: int, total: float, total_sq: float, freq):
        return tuple(f / count for f in freq)


FamilySpec = NormalKnownVar | NormalUnknownVar | DiscreteFinite


def mean_of(family: FamilySpec, alpha: int, theta) -> float:
    """Expected reward of bandit alpha under parameter theta."""
    return family.mean(alpha, theta)


def kl_divergence(family: FamilySpec, alpha: int, theta, theta2) -> float:
    """KL distance between the bandit's distribution at theta and theta2."""
    return family.kl(alpha, theta, theta2)


def means_vector(family: FamilySpec, params: Sequence) -> tuple[float, ...]:
    return tuple(family.mean(a + 1, params[a]) for a in range(len(params)))


def validate_truth(family: FamilySpec, params: Sequence) -> None:
    """Check that a truth parameter vector is admissible: positive means,
    and for the discrete family strictly positive probabilities summing to 1."""
    for a, theta in enumerate(params, start=1):
        if family.mean(a, theta) <= 0:
            raise ValueError(f"bandit {a} has nonpositive mean")
        if isinstance(family, DiscreteFinite):
            if len(theta) != len(family.supports[a - 1]):
                raise ValueError(f"bandit {a} probability vector has wrong length")
            if any(px <= 0 for px in theta):
                raise ValueError(f"bandit {a} has a nonpositive probability")
            if abs(sum(theta) - 1.0) > 1e-12:
                raise ValueError(f"bandit {a} probabilities do not sum to 1")
        elif isinstance(family, NormalUnknownVar):
            if theta[1] <= 0:
                raise ValueError(f"bandit {a} needs positive variance")
