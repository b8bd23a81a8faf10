"""Linear-network recurrences and performance-ratio lower bounds.

On a long line, greedy matching certainly commits some edge within the
first few edges. Conditioning on which one gives a renewal recurrence

    a_n = C + sum_s gamma_s * a_{n-s}

for the expected greedy weight ``a_n`` on ``n`` users. The lag coefficients
sum to one, so ``a_n / n`` tends to ``C / sum_s s * gamma_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..bounds import decomposition_bound_expected, multiunit_bound_line_expected
from ..errors import InvalidParameterError, UnsupportedCaseError
from ..graph import WeightModel


@dataclass
class RecurrenceSpec:
    constant_term: float
    lag_coefficients: list[tuple[int, float]]
    beta: list[float] | None = field(default=None)
    gamma: list[float] | None = field(default=None)

    def __post_init__(self):
        total = math.fsum(c for _, c in self.lag_coefficients)
        if any(lag < 1 or c < 0 for lag, c in self.lag_coefficients):
            raise InvalidParameterError("lags must be >= 1 and coefficients non-negative")
        if abs(total - 1.0) > 1e-9:
            raise InvalidParameterError(f"lag coefficients must sum to 1, got {total}")

    @property
    def mean_lag(self) -> float:
        return math.fsum(lag * c for lag, c in self.lag_coefficients)

    @property
    def slope(self) -> float:
        return self.constant_term / self.mean_lag

    def iterate(self, terms: int, initial: dict[int, float] | None = None) -> list[float]:
        """``[a_0, a_1, ..., a_terms]``; ``a_j = 0`` for ``j`` below the first given index.

        ``initial`` pins early terms (e.g. ``{2: E[w]}`` for a single edge).
        """
        initial = initial or {}
        a = [0.0] * (terms + 1)
        for t in range(terms + 1):
            if t in initial:
                a[t] = initial[t]
                continue
            if t <= 1:
                continue
            acc = self.constant_term
            for lag, c in self.lag_coefficients:
                if t - lag >= 0:
                    acc += c * a[t - lag]
            a[t] = acc
        return a

    def to_dict(self) -> dict:
        return {"constant_term": self.constant_term,
                "lag_coefficients": [[lag, c] for lag, c in self.lag_coefficients],
                "slope": self.slope}


def uniform_beta_gamma(K: int) -> tuple[list[float], list[float]]:
    """Closed-form coefficients for ``K`` equiprobable weights.

    ``beta_k`` weighs ``v_k`` in the constant term; ``gamma_k`` is the chance
    that the first certain edge is the ``k``-th one (lag ``k + 1``).
    """
    beta = [(K - 1) ** (K - k) * (K + 1) ** (k - 1) / K ** K for k in range(1, K + 1)]
    gamma = [sum(i * math.comb(i - 1, k - 1) for i in range(k, K + 1)) / K ** (k + 1)
             for k in range(1, K + 1)]
    return beta, gamma


def two_level_recurrence(v1: float, v2: float, p1: float) -> RecurrenceSpec:
    """``K = 2`` recurrence; also accepts ``v1 == v2`` as the coincident-weight limit."""
    p2 = 1.0 - p1
    const = p1 * p1 * v1 + (p2 + p1 * p2) * v2
    return RecurrenceSpec(const, [(2, p2 + p1 * p1), (3, p1 * p2)])


def linear_recurrence(weight_model: WeightModel) -> RecurrenceSpec:
    """Greedy recurrence on a line for ``K = 2`` (any probabilities) or uniform ``K``."""
    v = weight_model.values
    if weight_model.K == 2 and not weight_model.is_uniform:
        return two_level_recurrence(v[0], v[1], weight_model.probs[0])
    if not weight_model.is_uniform:
        raise UnsupportedCaseError(
            "closed-form line recurrence needs K = 2 or equiprobable weights; "
            "use simulation for this weight model")
    K = weight_model.K
    beta, gamma = uniform_beta_gamma(K)
    const = math.fsum(b * x for b, x in zip(beta, v))
    return RecurrenceSpec(const, [(k + 1, g) for k, g in enumerate(gamma, start=1)],
                          beta=beta, gamma=gamma)


def line_sequence(weight_model: WeightModel, terms: int) -> list[float]:
    """Expected greedy weight ``a_t`` on ``t`` users for ``t = 0..terms``."""
    spec = linear_recurrence(weight_model)
    return spec.iterate(terms, {2: weight_model.mean})


def pr_lower_bound_linear(weight_model: WeightModel) -> float:
    """Asymptotic PR lower bound on lines: greedy slope over the decomposition bound."""
    v = weight_model.values
    K = weight_model.K
    if K == 2 and not weight_model.is_uniform:
        p1, p2 = weight_model.probs
        num = p1 * p1 * v[0] + (p2 + p1 * p2) * v[1]
        den = ((2 * p2 + 2 * p1 * p1 + 3 * p1 * p2)
               * (v[0] / 2 + (v[1] - v[0]) * (1 - p1) / (2 - p1)))
        return num / den
    if not weight_model.is_uniform:
        raise UnsupportedCaseError(
            "closed-form line bound needs K = 2 or equiprobable weights; use simulation")
    num = math.fsum(v[k - 1] * (K - 1) ** (K - k) / (K + 1) ** (K - k + 1)
                    for k in range(1, K + 1))
    den = math.fsum(v[k - 1] * K / ((2 * K + 1 - k) * (2 * K - k)) for k in range(1, K + 1))
    return num / den


def pr_lower_bound_linear_ratio(weight_model: WeightModel) -> float:
    """Same bound assembled from the recurrence slope and the per-user decomposition bound."""
    return linear_recurrence(weight_model).slope / decomposition_bound_expected(1, weight_model)


def uniform_limit(K: int) -> float:
    """Infimum of the uniform-``K`` bound as all weights coincide."""
    return 1.0 - ((K - 1) / (K + 1)) ** K


# multi-unit lines: weights uniform on {1, 1+delta}, quantities uniform on {1, 2}

def multiunit_segment_term(delta: float, t_max: int = 100) -> float:
    """Per-user weight from quantity-2 segments left after the first pass.

    A segment of ``t`` quantity-2 users appears ``n / 2^(t+2)`` times on
    average, and greedy earns ``a_t`` on it.
    """
    a = two_level_recurrence(1.0, 1.0 + delta, 0.5).iterate(t_max, {2: 1.0 + delta / 2})
    return math.fsum(a[t] / 2.0 ** (t + 2) for t in range(2, t_max + 1))


def multiunit_greedy_per_user(delta: float, t_max: int = 100) -> float:
    slope = two_level_recurrence(1.0, 1.0 + delta, 0.5).slope
    return slope + multiunit_segment_term(delta, t_max)


def pr_lower_bound_multiunit(delta: float, *, exact: bool = False, t_max: int = 100) -> float:
    """Multi-unit PR lower bound on lines.

    By default uses the rounded constants ``(0.604 + 0.433 delta) / (0.75 + 0.5 delta)``;
    ``exact=True`` recomputes numerator and denominator from the recurrence
    and the bound's enumeration.
    """
    if delta < 0:
        raise InvalidParameterError("delta must be non-negative")
    if not exact:
        return (0.604 + 0.433 * delta) / (0.75 + 0.5 * delta)
    num = multiunit_greedy_per_user(delta, t_max)
    den = multiunit_bound_line_expected(((1.0, 0.5), (1.0 + delta, 0.5)), [1, 2])
    return num / den
