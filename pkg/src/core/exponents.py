# src/core/exponents.py

"""
Parameter validation and closed-form exponent algebra for the weighted interpolation
(Caffarelli-Kohn-Nirenberg type) inequality

    |u|_{r,s} <= C ||u||^a |u|_{q,sigma}^{1-a},
    ||u||^p = int |grad u|^p / |x|^mu,  |u|_{t,w}^t = int |u|^t / |x|^w.

Everything here is a pure function of its arguments: no grids, no iteration, no shared
state, so every function is safe to call from any thread.

Features:
- Signed-margin validation reports for the attainment hypotheses, the classical
  three-exponent family, the inequality without interpolation term and the power-weight
  eigenproblem.
- The classical <-> weighted parameter map and its dimensional-balance residual.
- Interpolation exponent, Hardy-Sobolev exponents, split exponents of the Holder chain,
  scaling exponents, the coupling constant lambda* and the sharp-constant exponent.
- The two-power infimum and the scaling-optimised coefficient C*(lambda).

Formulas are evaluated in log space wherever large powers of small ratios appear.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.utils.exceptions import (
    DegenerateParametersException,
    DomainArgumentException,
    ParameterValidationException,
)

logger = logging.getLogger("ckn_toolkit.exponents")

# Absolute floor for non-strict and equality verdicts, scaled by the compared magnitudes.
WEAK_TOLERANCE = 1e-12


class CknParams(BaseModel):
    """
    One inequality instance (N, p, q, r, mu, sigma, s).
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    N: int = Field(ge=2, description="space dimension")
    p: float = Field(gt=1.0, description="gradient Lebesgue exponent")
    q: float = Field(ge=1.0, description="interpolation Lebesgue exponent")
    r: float = Field(ge=1.0, description="target Lebesgue exponent")
    mu: float = Field(0.0, description="gradient weight power")
    sigma: float = Field(0.0, description="interpolation weight power")
    s: float = Field(0.0, description="target weight power")

    def as_dict(self) -> Dict[str, float]:
        return {"N": self.N, "p": self.p, "q": self.q, "r": self.r,
                "mu": self.mu, "sigma": self.sigma, "s": self.s}


class GeneralParams(BaseModel):
    """
    The classical parametrisation: weights |x|^alpha, |x|^beta, |x|^gamma and the
    interpolation weight a, with gamma = a*sigma_a + (1 - a)*beta.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    p: float
    q: float
    r: float
    alpha: float
    beta: float
    gamma: float
    a: float
    sigma_a: float

    @model_validator(mode="after")
    def _check_gamma_relation(self) -> "GeneralParams":
        combined = self.a * self.sigma_a + (1.0 - self.a) * self.beta
        scale = max(1.0, abs(self.gamma), abs(self.a * self.sigma_a), abs(self.beta))
        if abs(self.gamma - combined) > WEAK_TOLERANCE * scale:
            raise ValueError(
                f"gamma={self.gamma!r} differs from a*sigma_a+(1-a)*beta={combined!r}"
            )
        return self


@dataclass(frozen=True)
class Check:
    """
    One named hypothesis with its signed margin.

    ``residual`` is LHS - RHS of the hypothesis rewritten as ``residual < 0`` (strict),
    ``residual <= 0`` (non-strict) or ``residual == 0`` (equality).
    """
    name: str
    satisfied: bool
    satisfied_weak: bool
    residual: float
    kind: str = "strict"

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "satisfied": self.satisfied,
            "satisfied_weak": self.satisfied_weak,
            "residual": self.residual,
            "kind": self.kind,
        }


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    checks: List[Check]
    balance_residual: float
    theorem: str = ""

    @classmethod
    def from_checks(cls, checks: List[Check], balance_residual: float, theorem: str) -> "ValidationReport":
        return cls(
            valid=all(c.satisfied for c in checks),
            checks=list(checks),
            balance_residual=balance_residual,
            theorem=theorem,
        )

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.satisfied]

    @property
    def valid_weak(self) -> bool:
        """
        True when every check except ``s>0`` holds in its non-strict form: the regime
        where the inequality holds with a finite constant but attainment is not claimed.
        """
        return all(c.satisfied_weak for c in self.checks if c.name != "s>0")

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> Dict[str, object]:
        return {
            "theorem": self.theorem,
            "valid": self.valid,
            "valid_weak": self.valid_weak,
            "balance_residual": self.balance_residual,
            "failed": self.failed,
            "checks": [c.to_dict() for c in self.checks],
        }


@dataclass(frozen=True)
class DerivedExponents:
    a: float
    p_star: float
    p_star_s_mu: float
    p_star_sigma_mu: float
    lambda_star: float
    r1: float
    r2: float
    s1: float
    s2: float
    sigma_bar: float
    p_star_sigma_bar_mu: float
    a_prime: float
    b_prime: float
    sharp_exponent: float

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


class _Brackets(NamedTuple):
    """
    The four linear combinations every closed form is built from.

    a_num = (N-s)p - (N-mu-p)r       (r * a')
    b_num = (N-sigma)r - (N-s)q      (r * b')
    total = a_num + b_num = (mu+p-sigma)r + (p-q)(N-s)
    k     = (N-sigma)p - (N-mu-p)q
    """
    a_num: float
    b_num: float
    total: float
    k: float


def _brackets(params: CknParams) -> _Brackets:
    N, p, q, r = params.N, params.p, params.q, params.r
    mu, sigma, s = params.mu, params.sigma, params.s
    a_num = (N - s) * p - (N - mu - p) * r
    b_num = (N - sigma) * r - (N - s) * q
    total = (mu + p - sigma) * r + (p - q) * (N - s)
    k = (N - sigma) * p - (N - mu - p) * q
    return _Brackets(a_num, b_num, total, k)


def _strict(name: str, residual: float) -> Check:
    return Check(name, residual < 0.0, residual <= 0.0, residual, "strict")


def _weak(name: str, residual: float, scale: float = 1.0) -> Check:
    ok = residual <= WEAK_TOLERANCE * max(1.0, abs(scale))
    return Check(name, ok, ok, residual, "non-strict")


def _equality(name: str, residual: float, scale: float = 1.0) -> Check:
    ok = abs(residual) <= WEAK_TOLERANCE * max(1.0, abs(scale))
    return Check(name, ok, ok, residual, "equality")


def _sobolev_exponent(N: int, p: float) -> float:
    return p * N / (N - p) if N > p else math.inf


def _weighted_exponent_or_inf(N: int, p: float, mu: float, t: float) -> float:
    return p * (N - t) / (N - p - mu) if N - p - mu > 0 else math.inf


def p_star_weighted(N: int, p: float, mu: float, t: float) -> float:
    """
    Weighted Hardy-Sobolev exponent p*(t, mu) = p(N - t)/(N - p - mu).

    Raises:
        DegenerateParametersException: if N - p - mu <= 0 (supercritical weight).
    """
    denominator = N - p - mu
    if denominator <= 0:
        raise DegenerateParametersException(
            f"N - p - mu = {denominator!r} <= 0: supercritical gradient weight", "N-p-mu"
        )
    return p * (N - t) / denominator


def validate_ckn(params: CknParams) -> ValidationReport:
    """
    Check every attainment hypothesis for the given tuple.

    Invalid tuples produce ``valid=False``; this function never raises for a
    well-formed CknParams.

    Returns:
        ValidationReport: one named check per hypothesis, with signed margins.
    """
    N, p, q, r = params.N, params.p, params.q, params.r
    mu, sigma, s = params.mu, params.sigma, params.s

    p_star = _sobolev_exponent(N, p)
    p_star_sigma = _weighted_exponent_or_inf(N, p, mu, sigma)
    p_star_s = _weighted_exponent_or_inf(N, p, mu, s)

    if N - mu - p > 0:
        lower_gradient = p * (sigma - s) / (N - mu - p) + q
    else:
        lower_gradient = math.inf
    lower_weight = (sigma - s) * q / (N - sigma) + q if N != sigma else math.inf
    lower = max(lower_gradient, lower_weight)

    checks = [
        _strict("p>1", 1.0 - p),
        _strict("s>0", -s),
        _strict("max(sigma,s)<mu+p", max(sigma, s) - (mu + p)),
        _strict("mu+p<N", mu + p - N),
        _weak("r>=1", 1.0 - r),
        _weak("q>=1", 1.0 - q),
        _strict("q<min(p*,p*(sigma,mu))", q - min(p_star, p_star_sigma)),
        _strict("r>max(lower_bounds)", lower - r),
        _strict("r<min(p*,p*(s,mu))", r - min(p_star, p_star_s)),
        _strict("gradient_balance", p * (s - sigma) + q * (mu + p - s) - r * (mu + p - sigma)),
        _strict("weight_balance",
                (N * mu - N * s + p * s) * (r - q) - (N * p - N * r + p * r) * (s - sigma)),
    ]

    try:
        balance = dimensional_balance_residual(map_to_general_form(params), N)
    except DegenerateParametersException:
        balance = math.nan

    report = ValidationReport.from_checks(checks, balance, "attainment")
    if not report.valid:
        logger.debug("Tuple fails attainment hypotheses", extra={"context": {
            "params": params.as_dict(), "failed": report.failed}})
    return report


def dimensional_balance_residual(gp: GeneralParams, N: int) -> float:
    """
    LHS - RHS of 1/r + gamma/N = a(1/p + (alpha-1)/N) + (1-a)(1/q + beta/N).
    """
    lhs = 1.0 / gp.r + gp.gamma / N
    rhs = gp.a * (1.0 / gp.p + (gp.alpha - 1.0) / N) + (1.0 - gp.a) * (1.0 / gp.q + gp.beta / N)
    return lhs - rhs


def validate_theorem_a(gp: GeneralParams, N: int) -> ValidationReport:
    """
    Check the classical necessary-and-sufficient conditions for the three-exponent
    weighted interpolation inequality.

    Conditional conditions that do not apply are reported satisfied with residual 0.
    """
    balance = dimensional_balance_residual(gp, N)
    lhs = 1.0 / gp.r + gp.gamma / N
    gradient_side = 1.0 / gp.p + (gp.alpha - 1.0) / N

    checks = [
        _weak("p>=1", 1.0 - gp.p),
        _weak("q>=1", 1.0 - gp.q),
        _strict("r>0", -gp.r),
        _weak("a>=0", -gp.a),
        _weak("a<=1", gp.a - 1.0),
        _strict("1/p+alpha/N>0", -(1.0 / gp.p + gp.alpha / N)),
        _strict("1/q+beta/N>0", -(1.0 / gp.q + gp.beta / N)),
        _strict("1/r+gamma/N>0", -lhs),
        _equality("dimensional_balance", balance, max(abs(lhs), 1.0)),
    ]

    if gp.a > 0:
        checks.append(_weak("alpha-sigma_a>=0", gp.sigma_a - gp.alpha, gp.alpha))
    else:
        checks.append(Check("alpha-sigma_a>=0", True, True, 0.0, "non-strict"))

    endpoint = abs(gradient_side - lhs) <= WEAK_TOLERANCE * max(1.0, abs(lhs))
    if gp.a > 0 and endpoint:
        checks.append(_weak("alpha-sigma_a<=1", gp.alpha - gp.sigma_a - 1.0, gp.alpha))
    else:
        checks.append(Check("alpha-sigma_a<=1", True, True, 0.0, "non-strict"))

    return ValidationReport.from_checks(checks, balance, "classical")


def map_to_general_form(params: CknParams) -> GeneralParams:
    """
    alpha = -mu/p, beta = -sigma/q, gamma = -s/r and the interpolation weight a;
    sigma_a is solved from gamma = a*sigma_a + (1-a)*beta.

    Raises:
        DegenerateParametersException: if (N-sigma)p - (N-mu-p)q = 0.
    """
    b = _brackets(params)
    if b.k == 0:
        raise DegenerateParametersException(
            "(N-sigma)p - (N-mu-p)q vanishes; the interpolation weight is undefined", "k"
        )
    alpha = -params.mu / params.p
    beta = -params.sigma / params.q
    gamma = -params.s / params.r
    a = params.p * b.b_num / (b.k * params.r)
    if a == 0:
        sigma_a = alpha
    else:
        sigma_a = (gamma - (1.0 - a) * beta) / a
    return GeneralParams(p=params.p, q=params.q, r=params.r, alpha=alpha, beta=beta,
                         gamma=gamma, a=a, sigma_a=sigma_a)


def _require_valid(params: CknParams) -> ValidationReport:
    report = validate_ckn(params)
    if not report.valid:
        raise ParameterValidationException(
            f"Parameters fail attainment hypotheses: {', '.join(report.failed)}", report.failed
        )
    return report


def _lambda_star(b: _Brackets) -> float:
    log_value = (b.total / b.a_num) * math.log(b.a_num / b.total) \
        + (b.b_num / b.a_num) * math.log(b.b_num / b.a_num)
    return math.exp(log_value)


def derive_exponents(params: CknParams) -> DerivedExponents:
    """
    Every closed-form exponent of a validated tuple.

    Raises:
        ParameterValidationException: if validate_ckn(params) is not valid.
    """
    _require_valid(params)
    N, p, q, r = params.N, params.p, params.q, params.r
    mu, sigma, s = params.mu, params.sigma, params.s
    b = _brackets(params)

    split_num = N * p * (s - sigma) + (r * sigma - q * s) * (N - mu - p)
    split_den = p * (s - sigma) + (r - q) * (N - mu - p)
    sigma_bar = split_num / split_den

    return DerivedExponents(
        a=p * b.b_num / (b.k * r),
        p_star=_sobolev_exponent(N, p),
        p_star_s_mu=p_star_weighted(N, p, mu, s),
        p_star_sigma_mu=p_star_weighted(N, p, mu, sigma),
        lambda_star=_lambda_star(b),
        r1=b.a_num * q / b.k,
        r2=b.b_num * p / b.k,
        s1=b.a_num * sigma / b.k,
        s2=split_num / b.k,
        sigma_bar=sigma_bar,
        p_star_sigma_bar_mu=p_star_weighted(N, p, mu, sigma_bar),
        a_prime=b.a_num / r,
        b_prime=b.b_num / r,
        sharp_exponent=b.total / (r * b.k),
    )


def _relative_gap(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


def identity_residuals(params: CknParams) -> Dict[str, float]:
    """
    Relative residuals of the split-exponent identities behind the Holder chain.
    """
    ex = derive_exponents(params)
    q, r = params.q, params.r
    return {
        "r1+r2=r": _relative_gap(ex.r1 + ex.r2, r),
        "s1+s2=s": _relative_gap(ex.s1 + ex.s2, params.s),
        "q*s1/r1=sigma": _relative_gap(q * ex.s1 / ex.r1, params.sigma),
        "q*s2/(q-r1)=sigma_bar": _relative_gap(q * ex.s2 / (q - ex.r1), ex.sigma_bar),
        "q*r2/(q-r1)=p*(sigma_bar,mu)": _relative_gap(q * ex.r2 / (q - ex.r1), ex.p_star_sigma_bar_mu),
        "1-a=r1/r": _relative_gap(1.0 - ex.a, ex.r1 / r),
        "p*(sigma_bar,mu)(q-r1)/(qr)=a": _relative_gap(ex.p_star_sigma_bar_mu * (q - ex.r1) / (q * r), ex.a),
    }


def two_power_infimum(a: float, b: float, A: float, B: float) -> Tuple[float, float]:
    """
    Minimiser and minimum of g(t) = t^a A + t^-b B over t > 0.

    Returns:
        Tuple[float, float]: (t0, g(t0)).

    Raises:
        DomainArgumentException: if any argument is not strictly positive.
    """
    for name, value in (("a", a), ("b", b), ("A", A), ("B", B)):
        if not value > 0:
            raise DomainArgumentException(f"two_power_infimum requires {name} > 0, got {value!r}", name)
    total = a + b
    t0 = math.exp(math.log(b * B / (a * A)) / total)
    log_value = math.log(total / a) - (b / total) * math.log(b / a) \
        + (b / total) * math.log(A) + (a / total) * math.log(B)
    return t0, math.exp(log_value)


def c_star(params: CknParams, lam: float) -> float:
    """
    Coefficient C*(lambda) of ||u||^{p b'/(a'+b')} |u|_{q,sigma}^{q a'/(a'+b')} in the
    scaling-optimised functional inf_t [||u_t||^p + lambda |u_t|_{q,sigma}^q].
    Equals 1 at lambda = lambda*.
    """
    if not lam > 0:
        raise DomainArgumentException(f"lambda must be > 0, got {lam!r}", "lambda")
    _require_valid(params)
    b = _brackets(params)
    log_value = math.log(b.total / b.a_num) \
        - (b.b_num / b.total) * math.log(b.b_num / b.a_num) \
        + (b.a_num / b.total) * math.log(lam)
    return math.exp(log_value)


def scaling_infimum_coefficient(params: CknParams, A: float, B: float, lam: float) -> float:
    """
    inf over t > 0 of t^{a'} A + t^{-b'} lam B, for A = ||u||^p and B = |u|_{q,sigma}^q.
    """
    ex = derive_exponents(params)
    _, value = two_power_infimum(ex.a_prime, ex.b_prime, A, lam * B)
    return value


def sharp_constant_from_rho(params: CknParams, rho: float) -> float:
    """
    C = (1/rho)^{sharp_exponent}.
    """
    if not rho > 0:
        raise DomainArgumentException(f"rho must be > 0, got {rho!r}", "rho")
    ex = derive_exponents(params)
    return math.exp(-ex.sharp_exponent * math.log(rho))


def corollary_sharp_exponent(params: CknParams) -> float:
    """
    The q<->r transposed exponent; kept only to compare against ``sharp_exponent``.
    """
    N, p, q, r = params.N, params.p, params.q, params.r
    mu, sigma, s = params.mu, params.sigma, params.s
    denominator = q * ((N - sigma) * p - (N - mu - p) * r)
    if denominator == 0:
        raise DegenerateParametersException("transposed exponent denominator vanishes", "q[(N-sigma)p-(N-mu-p)r]")
    return ((mu + p - sigma) * q + (p - r) * (N - s)) / denominator


def lagrange_multiplier(params: CknParams, rho: float) -> float:
    """
    Multiplier of the Euler-Lagrange equation at level rho:
    r[p(N-sigma) - (N-mu-p)q] rho / [(mu+p-sigma)r + (p-q)(N-s)].
    """
    if not rho > 0:
        raise DomainArgumentException(f"rho must be > 0, got {rho!r}", "rho")
    b = _brackets(params)
    if b.total == 0:
        raise DegenerateParametersException("(mu+p-sigma)r + (p-q)(N-s) vanishes", "total")
    return params.r * b.k * rho / b.total


def validate_hardy_sobolev(N: int, p: float, r: float, alpha: float, gamma: float) -> ValidationReport:
    """
    Hypotheses of the inequality without interpolation term,
    | |x|^gamma u |_r <= C | |x|^alpha Du |_p.
    """
    lhs = 1.0 / r + gamma / N
    balance = lhs - (1.0 / p + (alpha - 1.0) / N)
    checks = [
        _weak("p>=1", 1.0 - p),
        _strict("1/r+gamma/N>0", -lhs),
    ]
    if N > p:
        p_star = _sobolev_exponent(N, p)
        checks.append(_weak("r<=p*", r - p_star, p_star))
    else:
        checks.append(_strict("r<infinity", -math.inf if math.isfinite(r) else 0.0))
    checks.append(_equality("dimensional_balance", balance, max(abs(lhs), 1.0)))
    return ValidationReport.from_checks(checks, balance, "hardy_sobolev")


def weighted_hardy_params(N: int, p: float, t: float) -> Dict[str, float]:
    """
    The weighted Hardy instance alpha = -t, gamma = -t-1, r = p.
    """
    return {"N": N, "p": p, "r": p, "alpha": -t, "gamma": -t - 1.0}


def validate_eigen(N: int, p: float, q: float, mu: float, sigma: float) -> ValidationReport:
    """
    Hypotheses of the power-weight eigenproblem on a bounded ball.
    """
    p_star = _sobolev_exponent(N, p)
    p_star_sigma = _weighted_exponent_or_inf(N, p, mu, sigma)
    checks = [
        _strict("p>1", 1.0 - p),
        _strict("p<N", p - N),
        _strict("mu+p<N", mu + p - N),
        _strict("q>1", 1.0 - q),
        _strict("q<p*", q - p_star),
        _strict("q<p*(sigma,mu)", q - p_star_sigma),
    ]
    return ValidationReport.from_checks(checks, 0.0, "eigen")


def classify_regime(params: CknParams, endpoint: bool = False) -> Optional[str]:
    """
    Which sigma = 0, p = q family the tuple belongs to: "mu=0", "mu>0", "mu<0" or None.

    With ``endpoint=True`` the lower end r = p is admitted.
    """
    N, p, q, r = params.N, params.p, params.q, params.r
    mu, s = params.mu, params.s
    if params.sigma != 0 or abs(p - q) > WEAK_TOLERANCE * p or not 1 < p < N:
        return None
    above_p = r >= p if endpoint else r > p

    if mu == 0:
        if 0 < s < p and above_p and r < p * (N - s) / (N - p):
            return "mu=0"
    elif mu > 0:
        if N * mu * (r - p) / p ** 2 < s < mu + p < N and above_p \
                and r < min(p * N / (N - p), p * (N - s) / (N - mu - p)):
            return "mu>0"
    else:
        if 0 < s < mu + p < N and above_p and r < p * (N - s) / (N - mu - p):
            return "mu<0"
    return None
