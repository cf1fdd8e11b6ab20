"""Domain types, the one-way functions, reductions and the DP predicate."""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels

FUNCTIONS = {
    "md5-trunc": kernels.FN_MD5_TRUNC,
    "prf-test": kernels.FN_PRF_TEST,
}

MAX_N_BITS = 62


class ConfigError(ValueError):
    """Invalid parameters or an unknown function id."""


def round_half_up(v: float) -> int:
    return int(v + 0.5)


@dataclass(frozen=True)
class SpaceParams:
    """Structural parameters of one rainbow-DP configuration.

    ``N = 2**n_bits`` and ``t = 2**k_bits``; ``t_hat`` must equal
    ``round(c * t)`` with ties rounded up.
    """

    n_bits: int
    k_bits: int
    c: float
    t_hat: int
    l: int
    m0_tilde: int
    seed: int = 0
    function_id: str = "md5-trunc"

    def __post_init__(self):
        if not 0 < self.k_bits < self.n_bits <= MAX_N_BITS:
            raise ConfigError(
                f"need 0 < k_bits < n_bits <= {MAX_N_BITS}, got k_bits={self.k_bits}, n_bits={self.n_bits}"
            )
        if self.t_hat < 1 or self.t_hat != round_half_up(self.c * self.t):
            raise ConfigError(f"t_hat={self.t_hat} does not equal round(c*t)={round_half_up(self.c * self.t)}")
        if self.l < 1:
            raise ConfigError(f"l must be >= 1, got {self.l}")
        if not 1 <= self.m0_tilde <= self.N:
            raise ConfigError(f"m0_tilde must be in [1, N], got {self.m0_tilde}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.function_id not in FUNCTIONS:
            raise ConfigError(f"unknown function id {self.function_id!r}")

    @classmethod
    def create(cls, n_bits, k_bits, c, l=1, m0_tilde=1, seed=0, function_id="md5-trunc"):
        """Build params, deriving ``t_hat`` from ``c``."""
        return cls(
            n_bits=n_bits,
            k_bits=k_bits,
            c=float(c),
            t_hat=round_half_up(float(c) * 2**k_bits),
            l=l,
            m0_tilde=m0_tilde,
            seed=seed,
            function_id=function_id,
        )

    @property
    def N(self) -> int:
        return 1 << self.n_bits

    @property
    def t(self) -> int:
        return 1 << self.k_bits

    @property
    def mask(self) -> int:
        return self.N - 1

    @property
    def dp_limit(self) -> int:
        # x is a DP iff its top k_bits are zero, i.e. x < N / t
        return 1 << (self.n_bits - self.k_bits)

    @property
    def fid(self) -> int:
        return FUNCTIONS[self.function_id]


@dataclass
class CounterSet:
    f_invocations: int = 0
    alarms: int = 0
    false_alarms: int = 0
    iterations_executed: int = 0

    def __iadd__(self, other: "CounterSet") -> "CounterSet":
        self.f_invocations += other.f_invocations
        self.alarms += other.alarms
        self.false_alarms += other.false_alarms
        self.iterations_executed += other.iterations_executed
        return self


def _check_point(x: int, params: SpaceParams) -> None:
    if not 0 <= x < params.N:
        raise ValueError(f"point {x} outside [0, {params.N})")


def evaluate(x: int, params: SpaceParams, counters: CounterSet | None = None) -> int:
    """Apply the one-way function ``f`` to ``x``."""
    _check_point(x, params)
    if counters is not None:
        counters.f_invocations += 1
    return int(kernels.f_eval(params.fid, x, params.n_bits))


def reduce(i: int, s: int, y: int, params: SpaceParams) -> int:
    """Column reduction ``(y + i*t_hat + s) mod N``; column index 1 <= s <= t_hat."""
    if not 0 <= i < params.l:
        raise ValueError(f"table index {i} outside [0, {params.l})")
    if not 1 <= s <= params.t_hat:
        raise ValueError(f"column index {s} outside [1, {params.t_hat}]")
    return (y + i * params.t_hat + s) % params.N


def is_dp(x: int, params: SpaceParams) -> bool:
    _check_point(x, params)
    return x < params.dp_limit


def step(i: int, s: int, x: int, params: SpaceParams, counters: CounterSet | None = None) -> int:
    return reduce(i, s, evaluate(x, params, counters), params)
