"""Heavy-tailed reference models and block-top samplers.

Each model exposes the tail quantile function U(t) = F^{-1}(1 - 1/t), its
log evaluated at exponential arguments (the numerically delicate path), the
extreme value index gamma, and the second-order quantities (rho, A) that
control the bias of tail estimators.

Sampling uses the representation of the top of a block: if E_{m,1} >= ... >=
E_{m,m} are the order statistics of m standard exponentials, then the block's
order statistics are X_{m,j} = U(exp(E_{m,j})). The top of the exponential
sample is generated directly: E_{m,r+1} = -log(B) with B ~ Beta(r+1, m-r),
and E_{m,j} = E_{m,j+1} + I_j / j with I_j iid standard exponential. This
costs O(r) per block instead of O(m log m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ValidationError

_NAIVE_LIMIT = 100_000


@dataclass(frozen=True)
class TopOrderSample:
    """One sampled block: the r+1 largest log-observations plus the
    underlying exponential order statistics kept for diagnostics."""

    m: int
    r: int
    top_log: tuple[float, ...]
    e_values: tuple[float, ...]


@dataclass(frozen=True)
class Frechet:
    """Frechet model F(x) = exp(-x^(-a)) for x > 0, shape a > 0.

    U(t) = (-log(1 - 1/t))^(1/a) and gamma = 1/a. Expanding the survival
    function, 1 - F(x) = x^(-a) (1 - x^(-a)/2 + O(x^(-2a))), so the
    second-order scale is 2a: rho = -1 and A(t) = t^(-1) / (2a) for every a.
    """

    a: float

    def __post_init__(self):
        if not (self.a > 0):
            raise DomainError(f"Frechet shape must be > 0, got {self.a}")

    @property
    def gamma(self) -> float:
        return 1.0 / self.a

    @property
    def rho(self) -> float:
        return -1.0

    def log_u_exp(self, e):
        """log U(exp(e)) for e > 0, elementwise, safe across the full range."""
        e = np.asarray(e, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            small = np.minimum(e, 38.0)
            w = -np.log(-np.log1p(-np.exp(-small)))
        # above e ~ 38, -log(1 - exp(-e)) == exp(-e) to double precision
        return np.where(e > 38.0, e, w) / self.a

    def true_log_quantile(self, p: float) -> float:
        _check_p(p)
        return float(-np.log(-np.log1p(-p)) / self.a)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -np.expm1(-np.power(x, -self.a))
        return np.where(x > 0, s, 1.0)

    def second_order_a(self, t: float) -> float:
        _check_t(t)
        return 1.0 / (2.0 * self.a * t)

    def spec_string(self) -> str:
        return f"frechet:a={_fmt(self.a)}"


@dataclass(frozen=True)
class Burr:
    """Burr model F(x) = 1 - (1 + x^a)^(-b) for x > 0, shapes a, b > 0.

    U(t) = (t^(1/b) - 1)^(1/a) and gamma = 1/(a b). Since 1 - F(x) =
    x^(-ab) (1 - b x^(-a) + O(x^(-2a))), the second-order parameters are
    rho = -1/b and A(t) = t^(-1/b) / (a b) = gamma * t^rho.
    """

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"Burr shapes must be > 0, got a={self.a}, b={self.b}")

    @property
    def gamma(self) -> float:
        return 1.0 / (self.a * self.b)

    @property
    def rho(self) -> float:
        return -1.0 / self.b

    def log_u_exp(self, e):
        """log U(exp(e)) = (e/b + log(1 - exp(-e/b))) / a, elementwise."""
        e = np.asarray(e, dtype=float)
        x = e / self.b
        with np.errstate(divide="ignore", invalid="ignore"):
            return (x + np.log1p(-np.exp(-x))) / self.a

    def true_log_quantile(self, p: float) -> float:
        _check_p(p)
        return float((-np.log(p) / self.b + np.log1p(-p ** (1.0 / self.b))) / self.a)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        s = np.power(1.0 + np.power(np.maximum(x, 0.0), self.a), -self.b)
        return np.where(x > 0, s, 1.0)

    def second_order_a(self, t: float) -> float:
        _check_t(t)
        return t ** (-1.0 / self.b) / (self.a * self.b)

    def spec_string(self) -> str:
        return f"burr:a={_fmt(self.a)},b={_fmt(self.b)}"


HeavyTailModel = Frechet | Burr


def _fmt(x: float) -> str:
    return f"{x:g}"


def _check_p(p: float):
    if not (0.0 < p < 1.0):
        raise DomainError(f"tail probability must lie in (0, 1), got {p}")


def _check_t(t: float):
    if not (t > 1.0):
        raise DomainError(f"quantile argument must be > 1, got {t}")


def parse_model(text: str) -> HeavyTailModel:
    """Parse a model string like 'frechet:a=1' or 'burr:a=0.5,b=1'."""
    try:
        family, _, params = text.strip().partition(":")
        family = family.strip().lower()
        kv = {}
        if params.strip():
            for part in params.split(","):
                key, _, value = part.partition("=")
                kv[key.strip().lower()] = float(value)
    except ValueError:
        raise ValidationError(f"malformed model string: {text!r}") from None
    if family == "frechet":
        if set(kv) != {"a"}:
            raise ValidationError(f"frechet takes exactly parameter a, got {sorted(kv)}")
        return Frechet(a=kv["a"])
    if family == "burr":
        if set(kv) != {"a", "b"}:
            raise ValidationError(f"burr takes exactly parameters a and b, got {sorted(kv)}")
        return Burr(a=kv["a"], b=kv["b"])
    raise ValidationError(f"unknown model family {family!r} (expected frechet or burr)")


# -- module-level operations --------------------------------------------------

def quantile_u(model: HeavyTailModel, t: float) -> float:
    """U(t) = F^{-1}(1 - 1/t) for t > 1."""
    _check_t(t)
    return float(np.exp(model.log_u_exp(np.log(t))))


def true_log_quantile(model: HeavyTailModel, p: float) -> float:
    """log of the upper p-quantile, log U(1/p). Not clamped."""
    return model.true_log_quantile(p)


def second_order_a(model: HeavyTailModel, t: float) -> float:
    """Second-order auxiliary function A(t) controlling estimator bias."""
    return model.second_order_a(t)


def _check_m_r(m: int, r: int):
    if r < 1:
        raise DomainError(f"need r >= 1, got {r}")
    if r + 1 > m:
        raise DomainError(f"need r < m, got r={r}, m={m}")


def exponential_top_orders(m: int, r: int, k: int, rng: np.random.Generator,
                           use_harmonic_sum: bool = False) -> np.ndarray:
    """Top r+1 order statistics of m standard exponentials, for k blocks.

    Returns a (k, r+1) array, decreasing along axis 1. Consumes the stream in
    a fixed order: one vector for E_{m,r+1} (a Beta(r+1, m-r) draw, or m-r
    exponentials when use_harmonic_sum is set), then a (k, r) block of gap
    exponentials.

    use_harmonic_sum replaces the beta draw by the equal-in-distribution sum
    sum_{j=r+1}^m I_j / j; it is O(m) and kept as an independent cross-check
    of the beta route.
    """
    _check_m_r(m, r)
    if use_harmonic_sum:
        denom = np.arange(r + 1, m + 1, dtype=float)
        draws = rng.standard_exponential((k, m - r)) / denom
        tail = draws[:, ::-1].sum(axis=1)  # small terms first
    else:
        tail = -np.log(rng.beta(r + 1, m - r, size=k))
    gaps = rng.standard_exponential((k, r))
    e = np.empty((k, r + 1), dtype=float)
    e[:, r] = tail
    for c in range(r - 1, -1, -1):
        e[:, c] = e[:, c + 1] + gaps[:, c] / (c + 1)
    return e


def sample_top_block(model: HeavyTailModel, m: int, r: int, rng: np.random.Generator,
                     use_harmonic_sum: bool = False) -> TopOrderSample:
    """Draw the top r+1 log-observations of one block of size m.

    O(r) time via the exponential-representation shortcut. Log values are
    clamped at 0 (observations below 1 carry no tail information here).
    """
    e = exponential_top_orders(m, r, 1, rng, use_harmonic_sum=use_harmonic_sum)[0]
    top_log = np.maximum(model.log_u_exp(e), 0.0)
    return TopOrderSample(m=m, r=r, top_log=tuple(top_log), e_values=tuple(e))


def sample_top_block_naive(model: HeavyTailModel, m: int, r: int,
                           rng: np.random.Generator) -> TopOrderSample:
    """Reference sampler: m full inverse-CDF draws, sorted, top r+1 kept.

    O(m log m); intended as an independent oracle for sample_top_block in
    tests, hence the hard size cap.
    """
    _check_m_r(m, r)
    if m > _NAIVE_LIMIT:
        raise DomainError(f"naive sampler is for cross-checks only (m <= {_NAIVE_LIMIT})")
    e_full = rng.standard_exponential(m)
    e_top = np.sort(e_full)[::-1][: r + 1]
    top_log = np.maximum(model.log_u_exp(e_top), 0.0)
    return TopOrderSample(m=m, r=r, top_log=tuple(top_log), e_values=tuple(e_top))
