"""Analytic cost model of the rainbow-DP tradeoff.

Notation: ``ratio`` is m0_tilde * t / N, H = 2 / (2 + ratio), and
D_pc = ratio * l * (1 - e^-c) is the precomputation coefficient.

Two versions of the expected online time are kept apart on purpose.
``expected_online_time`` is the continuous form of the sum over
iterations, with the false-alarm rate driven by m0_tilde.  The tradeoff
coefficient ``tradeoff_coefficient`` follows the closed expression in D_pc,
whose false-alarm term carries m0 instead of m0_tilde;
``coefficient_online_time`` is the online time that expression implies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SpaceParams, round_half_up
from .quadrature import adaptive_simpson

INNER_ABS_TOL = 1e-12
OUTER_REL_TOL = 1e-9


@dataclass(frozen=True)
class TheoryInputs:
    m0_tilde_ratio: float
    c: float
    l: int
    t: int | None = None
    N: int | None = None

    def __post_init__(self):
        if self.m0_tilde_ratio < 0 or self.c <= 0 or self.l < 1:
            raise ValueError(f"invalid theory inputs {self}")

    @classmethod
    def from_params(cls, params: SpaceParams) -> "TheoryInputs":
        return cls(params.m0_tilde * params.t / params.N, params.c, params.l, params.t, params.N)

    @classmethod
    def from_coefficients(cls, l: int, c: float, d_pc: float, t=None, N=None) -> "TheoryInputs":
        return cls(d_pc / (l * -math.expm1(-c)), c, l, t, N)

    @property
    def H(self) -> float:
        return h_value(self)

    @property
    def d_pc(self) -> float:
        return self.m0_tilde_ratio * self.l * -math.expm1(-self.c)

    @property
    def m0_tilde(self) -> float:
        self._need_absolute()
        return self.m0_tilde_ratio * self.N / self.t

    @property
    def t_hat(self) -> int:
        self._need_absolute()
        return round_half_up(self.c * self.t)

    def _need_absolute(self):
        if self.t is None or self.N is None:
            raise ValueError("absolute t and N are required for this quantity")


@dataclass(frozen=True)
class TheoryReport:
    H: float
    m0: float
    D_pc: float
    success_p: float
    expected_T: float
    expected_total_false_alarms: float
    M: float
    D_tcr: float
    # online time implied by D_tcr: D_tcr * N^2 / M^2
    coefficient_T: float


def h_value(inputs: TheoryInputs) -> float:
    return 2.0 / (2.0 + inputs.m0_tilde_ratio)


def m_tilde(i: float, inputs: TheoryInputs) -> float:
    """Distinct points in column i before discarding over-long chains."""
    H = h_value(inputs)
    return inputs.m0_tilde * H / (math.exp(i / inputs.t) - (1.0 - H))


def m_col(i: float, inputs: TheoryInputs) -> float:
    """Distinct points in column i after the discard rule."""
    return m_tilde(i, inputs) * -math.expm1(i / inputs.t - inputs.c)


def _check_inner(a, b, H, c):
    if not 0.0 <= a <= b or not 0.0 < H <= 1.0:
        raise ValueError(f"inner integral needs 0 <= a <= b and 0 < H <= 1, got a={a}, b={b}, H={H}")


def _inner_integrand(u, H, c):
    return -math.expm1(u - c) / (math.exp(u) - (1.0 - H))


def inner_integral_quad(a: float, b: float, H: float, c: float) -> float:
    """∫_a^b (1 - e^(u-c)) / (e^u - (1-H)) du by adaptive Simpson."""
    _check_inner(a, b, H, c)
    return adaptive_simpson(lambda u: _inner_integrand(u, H, c), a, b, abs_tol=INNER_ABS_TOL)


def inner_antiderivative(u: float, H: float, c: float) -> float:
    """F(u) = ln(1 - (1-H) e^-u) / (1-H) - e^-c ln(e^u - (1-H)); H = 1 limit -e^-u - e^-c u."""
    g = 1.0 - H
    if g == 0.0:
        return -math.exp(-u) - math.exp(-c) * u
    # ln(e^u - g) = u + ln(1 - g e^-u)
    log_term = math.log1p(-g * math.exp(-u))
    return log_term / g - math.exp(-c) * (u + log_term)


def inner_integral_closed(a: float, b: float, H: float, c: float) -> float:
    _check_inner(a, b, H, c)
    if a == b:
        return 0.0
    return inner_antiderivative(b, H, c) - inner_antiderivative(a, H, c)


def inner_integral(a: float, b: float, H: float, c: float) -> float:
    return inner_integral_quad(a, b, H, c)


def _decay(inputs: TheoryInputs) -> float:
    # m0_tilde * t * l * H / N
    return inputs.m0_tilde_ratio * inputs.l * h_value(inputs)


def failure_prob(k: int, inputs: TheoryInputs) -> float:
    """Probability that iteration k+1 runs, i.e. the first k iterations all failed.

    t_hat = round(c t) may exceed c t by under one column; the lower limit
    is clamped at column 0.
    """
    if not 0 <= k <= inputs.t_hat:
        raise ValueError(f"k={k} outside [0, {inputs.t_hat}]")
    lo = max(0.0, inputs.c - k / inputs.t)
    return math.exp(-_decay(inputs) * inner_integral_closed(lo, inputs.c, h_value(inputs), inputs.c))


def success_prob(inputs: TheoryInputs) -> float:
    H = h_value(inputs)
    return -math.expm1(-_decay(inputs) * inner_integral_closed(0.0, inputs.c, H, inputs.c))


def _m_col_array(cols: np.ndarray, inputs: TheoryInputs) -> np.ndarray:
    H = h_value(inputs)
    x = cols / inputs.t
    return inputs.m0_tilde * H / (np.exp(x) - (1.0 - H)) * -np.expm1(x - inputs.c)


def failure_probs_sum(inputs: TheoryInputs) -> np.ndarray:
    """p_k for k = 0..t_hat as a product over the columns the first k iterations examine.

    Iteration s hypothesizes the pre-image at column t_hat - s, so
    p_k = exp(-l/N * sum_{i=1}^{k} m_{t_hat - i}).
    """
    th = inputs.t_hat
    cols = th - np.arange(1, th + 1)
    m = _m_col_array(cols.astype(float), inputs)
    acc = np.concatenate([[0.0], np.cumsum(m)])
    return np.exp(-inputs.l * acc / inputs.N)


def failure_probs_integral(inputs: TheoryInputs) -> np.ndarray:
    return np.array([failure_prob(k, inputs) for k in range(inputs.t_hat + 1)])


def expected_false_alarms(i, inputs: TheoryInputs):
    """Expected false alarms per table in iteration i (simplified form)."""
    x = np.asarray(i, dtype=float) / inputs.t
    out = inputs.m0_tilde_ratio * math.exp(-inputs.c) * (np.expm1(x) - x)
    return float(out) if np.ndim(out) == 0 else out


def expected_false_alarms_exact(i: int, inputs: TheoryInputs) -> float:
    """Sum over chain lengths j of (chains of length j) * (merge probability)."""
    th, t = inputs.t_hat, inputs.t
    if not 1 <= i <= th:
        raise ValueError(f"iteration {i} outside [1, {th}]")
    j = np.arange(th - i + 1, th + 1, dtype=float)
    q = 1.0 - 1.0 / t
    counts = inputs.m0_tilde * np.power(q, j - 1) / t
    return float(np.sum(counts * (j - (th - i)) / inputs.N))


def _outer(inputs: TheoryInputs, fa_coef: float) -> float:
    """∫_0^c [l v + fa_coef e^-c (c-v)(e^v - 1 - v)] exp(-decay * I(c-v, c)) dv."""
    c, l = inputs.c, inputs.l
    H = h_value(inputs)
    decay = _decay(inputs)
    ec = math.exp(-c)

    def g(v):
        surv = math.exp(-decay * inner_integral_closed(c - v, c, H, c)) if v > 0 else 1.0
        return (l * v + fa_coef * ec * (c - v) * (math.expm1(v) - v)) * surv

    return adaptive_simpson(g, 0.0, c, abs_tol=0.0, rel_tol=OUTER_REL_TOL)


def expected_online_time(inputs: TheoryInputs) -> float:
    """Expected f-invocations of one online search (continuous form)."""
    inputs._need_absolute()
    return inputs.t**2 * _outer(inputs, inputs.m0_tilde_ratio * inputs.l)


def online_time_sum(inputs: TheoryInputs, probs: np.ndarray | None = None) -> float:
    """T = sum_i l[(i-1) + (t_hat-i+1) E_fa(i)] p_{i-1} evaluated term by term."""
    th = inputs.t_hat
    if probs is None:
        probs = failure_probs_sum(inputs)
    i = np.arange(1, th + 1, dtype=float)
    terms = inputs.l * ((i - 1) + (th - i + 1) * expected_false_alarms(i, inputs)) * probs[:th]
    return float(terms.sum())


def expected_total_false_alarms(inputs: TheoryInputs) -> float:
    """Expected false alarms over a whole search (continuous form)."""
    inputs._need_absolute()
    c = inputs.c
    H = h_value(inputs)
    decay = _decay(inputs)
    k = inputs.m0_tilde_ratio * inputs.l * math.exp(-c)

    def g(v):
        surv = math.exp(-decay * inner_integral_closed(c - v, c, H, c)) if v > 0 else 1.0
        return k * (math.expm1(v) - v) * surv

    return inputs.t * adaptive_simpson(g, 0.0, c, abs_tol=0.0, rel_tol=OUTER_REL_TOL)


def total_false_alarms_sum(inputs: TheoryInputs, probs: np.ndarray | None = None) -> float:
    th = inputs.t_hat
    if probs is None:
        probs = failure_probs_sum(inputs)
    i = np.arange(1, th + 1, dtype=float)
    return float((inputs.l * expected_false_alarms(i, inputs) * probs[:th]).sum())


def tradeoff_coefficient(inputs: TheoryInputs) -> float:
    """D_tcr = D_pc^2 ∫_0^c [l v + D_pc e^-c (c-v)(e^v-1-v)] exp(-D_pc H/(1-e^-c) I(c-v,c)) dv."""
    d = inputs.d_pc
    return d * d * _outer(inputs, d)


def coefficient_online_time(inputs: TheoryInputs) -> float:
    inputs._need_absolute()
    return inputs.t**2 * _outer(inputs, inputs.d_pc)


def memory(inputs: TheoryInputs) -> float:
    """Stored records M = l * m0."""
    return inputs.l * inputs.m0_tilde * -math.expm1(-inputs.c)


def report(inputs: TheoryInputs) -> TheoryReport:
    m0 = inputs.m0_tilde * -math.expm1(-inputs.c)
    return TheoryReport(
        H=h_value(inputs),
        m0=m0,
        D_pc=inputs.d_pc,
        success_p=success_prob(inputs),
        expected_T=expected_online_time(inputs),
        expected_total_false_alarms=expected_total_false_alarms(inputs),
        M=memory(inputs),
        D_tcr=tradeoff_coefficient(inputs),
        coefficient_T=coefficient_online_time(inputs),
    )
