"""
Two-point function of an LKMS state of the free Klein-Gordon field.

The regular part W(q, z) (two-point function minus vacuum) is

    W = (2 pi)^-3 int d^3p / omega  cos(z.P) / (exp(beta(q).P) - 1).

Boosting z into the rest frame of beta(q) leaves only b = |beta(q)|,
t' = z'^0 and r' = |z'| and the angular integral becomes a sinc:

    W = 1/(2 pi^2) int_0^inf dp p^2/omega cos(t' omega) sinc(p r') n(b omega),

with n the Bose factor. For m = 0 this has a closed form in coth.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import bernoulli, factorial

from .exceptions import BetaFieldError, DomainError, InvalidInputError, QuadratureError
from .minkowski import (
    METRIC,
    BoxRegion,
    ConeRegion,
    FourVector,
    LorentzBoost,
    boost_to_rest,
    in_forward_cone,
    mink_dot,
    shell_lift,
)
from .shell_tensor import Tensor2

logger = logging.getLogger(__name__)

TWO_PI_SQ = 2.0 * math.pi ** 2
FOUR_PI_SQ = 4.0 * math.pi ** 2

# exp(x) overflows past ~709.78; beyond that 1/(e^x - 1) == e^-x in double precision
_EXP_CUTOVER = 700.0

# |u| < 0.05 b: coth pair by series
PAIR_SERIES_THRESHOLD = 0.05
PAIR_SERIES_TERMS = 8
# r < 1e-3 b: r -> 0 expansion of the closed form
SMALL_R_THRESHOLD = 1e-3
# csch^2(x) is below the double range past this
_CSCH_NEGLIGIBLE = 350.0


def _coth_series_coefficients(terms: int) -> np.ndarray:
    # coth x = sum_n 2^{2n} B_{2n} / (2n)! x^{2n-1}
    n = np.arange(1, terms + 1)
    B = bernoulli(2 * terms)[2 * n]
    return 4.0 ** n * B / factorial(2 * n)


_COTH = _coth_series_coefficients(20)
_N = np.arange(1, len(_COTH) + 1)
_COTH_D1 = _COTH * (2 * _N - 1)
_COTH_D3 = (_COTH * (2 * _N - 1) * (2 * _N - 2) * (2 * _N - 3))[1:]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limits for the radial quadrature"""
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_refinements: int = 30
    cutoff_safety: float = 1.5
    use_closed_form: bool = True

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidInputError("rel_tol and abs_tol must be positive")
        if int(self.max_refinements) < 1:
            raise InvalidInputError(f"max_refinements must be >= 1, got {self.max_refinements}")
        if not self.cutoff_safety >= 1.0:
            raise InvalidInputError(f"cutoff_safety must be >= 1, got {self.cutoff_safety}")


@dataclass(frozen=True)
class AffineBetaField:
    """beta_nu(q) = c q_nu + C_{mu nu} q^mu + beta_tilde_nu, C antisymmetric

    Evaluation returns contravariant components; beta_tilde is a contravariant offset.
    """
    c: float = 0.0
    C: Tensor2 = field(default_factory=Tensor2.zeros)
    beta_tilde: FourVector = field(default_factory=FourVector.origin)

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        if not math.isfinite(self.c):
            raise InvalidInputError(f"c must be finite, got {self.c}")
        if not self.C.is_antisymmetric(1e-14):
            raise InvalidInputError(f"C must be antisymmetric, got {self.C}")

    def __call__(self, q: FourVector) -> FourVector:
        q_arr = q.as_array()
        rotation = METRIC @ (self.C.a.T @ q_arr)
        return FourVector.from_array(self.c * q_arr + rotation + self.beta_tilde.as_array())

    def jacobian(self) -> Tensor2:
        """The constant d_mu beta_nu = c eta_{mu nu} + C_{mu nu}"""
        return Tensor2(self.c * METRIC + self.C.a)

    def boosted(self, boost: LorentzBoost) -> "AffineBetaField":
        """The field q -> L beta(L^-1 q)"""
        inv = boost.inverse().matrix
        return AffineBetaField(
            c=self.c,
            C=Tensor2(inv.T @ self.C.a @ inv),
            beta_tilde=boost.apply(self.beta_tilde),
        )


class BetaFieldFn:
    """An arbitrary beta field q -> beta(q), assumed C^2 by the caller"""

    def __init__(self, fn: Callable[[FourVector], Union[FourVector, Sequence[float]]], name: str = "beta"):
        self.fn = fn
        self.name = name

    def __call__(self, q: FourVector) -> FourVector:
        value = self.fn(q)
        if isinstance(value, FourVector):
            return value
        return FourVector.from_array(value)

    def __repr__(self) -> str:
        return f"BetaFieldFn({self.name})"


BetaField = Union[AffineBetaField, BetaFieldFn]
Domain = Union[ConeRegion, BoxRegion]


def checked_beta(field_: BetaField, q: FourVector) -> FourVector:
    """beta(q), faulting unless it lies in the open forward cone"""
    beta = field_(q)
    if not in_forward_cone(beta):
        raise BetaFieldError(f"beta({q}) = {beta} is not future-pointing timelike", q=q, beta=beta)
    return beta


@dataclass(frozen=True)
class StateSpec:
    """Mass, inverse-temperature field and domain of an LKMS state"""
    m: float
    beta: BetaField
    domain: Domain = field(default_factory=ConeRegion.everywhere)

    def __post_init__(self):
        object.__setattr__(self, "m", float(self.m))
        if not (math.isfinite(self.m) and self.m >= 0):
            raise InvalidInputError(f"mass must be finite and non-negative, got {self.m}")

    def beta_at(self, q: FourVector) -> FourVector:
        if not self.domain.contains(q):
            raise DomainError(f"point {q} lies outside the state's domain")
        return checked_beta(self.beta, q)


@dataclass(frozen=True)
class RegularPartResult:
    value: float
    error_estimate: float
    method: str
    b: float
    t: float
    r: float


def bose(x: float) -> float:
    """Bose-Einstein occupation 1/(e^x - 1) for x > 0"""
    if not x > 0:
        raise InvalidInputError(f"Bose factor needs x > 0, got {x}")
    if x > _EXP_CUTOVER:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def fourier_weights(q: FourVector, p3: Sequence[float], s: StateSpec) -> Tuple[float, float]:
    """Forward- and backward-shell weights 1 + n(x) and n(x), x = beta(q).P"""
    if s.m == 0.0 and not any(float(c) for c in p3):
        raise InvalidInputError("the massless zero mode p = 0 has no Fourier weight")
    beta = s.beta_at(q)
    x = mink_dot(beta, shell_lift(p3, s.m))
    n = bose(x)
    return 1.0 + n, n


def rest_frame_invariants(beta: FourVector, z: FourVector) -> Tuple[float, float, float]:
    """(b, t', r') of z seen from the rest frame of beta"""
    boost, b = boost_to_rest(beta)
    zr = boost.apply(z)
    return b, zr.t, math.hypot(zr.x, zr.y, zr.z)


def _coth_pair(u: float, b: float) -> float:
    """(pi/2b) coth(pi u/b) - 1/(2u); analytic through u = 0"""
    a = math.pi / b
    if abs(u) < PAIR_SERIES_THRESHOLD * b:
        x = a * u
        return 0.5 * a * x * P.polyval(x * x, _COTH[:PAIR_SERIES_TERMS])
    return 0.5 * a / math.tanh(a * u) - 0.5 / u


def _coth_pair_d1(u: float, b: float) -> float:
    a = math.pi / b
    x = a * u
    if abs(x) < 1.0:
        return 0.5 * a * a * P.polyval(x * x, _COTH_D1)
    csch_sq = 0.0 if abs(x) > _CSCH_NEGLIGIBLE else 1.0 / math.sinh(x) ** 2
    return 0.5 / (u * u) - 0.5 * a * a * csch_sq


def _coth_pair_d3(u: float, b: float) -> float:
    a = math.pi / b
    x = a * u
    if abs(x) < 1.0:
        return 0.5 * a ** 4 * P.polyval(x * x, _COTH_D3)
    if abs(x) > _CSCH_NEGLIGIBLE:
        return 3.0 / u ** 4
    csch_sq = 1.0 / math.sinh(x) ** 2
    coth_sq = 1.0 / math.tanh(x) ** 2
    return 3.0 / u ** 4 - a ** 4 * csch_sq * (2.0 * coth_sq + csch_sq)


def regular_part_closed_massless(t: float, r: float, b: float) -> float:
    """Massless W in the rest frame of beta:

        W = [f(r + t) + f(r - t)] / (4 pi^2 r),  f(u) = (pi/2b) coth(pi u/b) - 1/(2u)

    Near r = 0 the r -> 0 expansion (f'(t) + f'''(t) r^2/6)/(2 pi^2) is used.
    """
    if not b > 0:
        raise InvalidInputError(f"b must be positive, got {b}")
    if r < 0:
        raise InvalidInputError(f"r must be non-negative, got {r}")
    t = abs(t)
    if r < SMALL_R_THRESHOLD * b:
        return float(_coth_pair_d1(t, b) + _coth_pair_d3(t, b) * r * r / 6.0) / TWO_PI_SQ
    return float(_coth_pair(r + t, b) + _coth_pair(r - t, b)) / (FOUR_PI_SQ * r)


def _radial_integrand(p: float, b: float, t: float, r: float, m: float) -> float:
    if p == 0.0:
        # p^2/omega n(b omega) -> 1/b at m = 0
        return 1.0 / b if m == 0.0 else 0.0
    omega = math.hypot(p, m)
    return p * p / omega * math.cos(t * omega) * float(np.sinc(p * r / math.pi)) * bose(b * omega)


def _tail_bound(p: float, b: float) -> float:
    return (p + 1.0 / b) ** 2 * math.exp(-b * p) / b


def momentum_cutoff(b: float, cfg: QuadratureConfig) -> float:
    """Upper limit p_max with tail bound (1/b)(p + 1/b)^2 e^{-b p} below abs_tol/10"""
    target = math.log(cfg.abs_tol / 10.0)

    def log_excess(p: float) -> float:
        return 2.0 * math.log(p + 1.0 / b) - math.log(b) - b * p - target

    start = 1.0 / b  # maximum of log_excess
    if log_excess(start) <= 0.0:
        return cfg.cutoff_safety * start
    hi = 2.0 * start
    while log_excess(hi) > 0.0:
        hi *= 2.0
    return cfg.cutoff_safety * brentq(log_excess, start, hi)


def _panel_edges(p_max: float, t: float, r: float) -> np.ndarray:
    # panels no wider than half the shortest oscillation period 2 pi / max(|t|, r)
    freq = max(abs(t), r)
    if freq == 0.0:
        return np.array([0.0, p_max])
    n = max(1, math.ceil(p_max * freq / math.pi))
    return np.linspace(0.0, p_max, n + 1)


def _quadrature_rest_frame(b: float, t: float, r: float, m: float, cfg: QuadratureConfig) -> Tuple[float, float]:
    p_max = momentum_cutoff(b, cfg)
    edges = _panel_edges(p_max, t, r)
    n_panels = len(edges) - 1
    total = 0.0
    error = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        out = quad(_radial_integrand, lo, hi, args=(b, t, r, m),
                   epsabs=cfg.abs_tol / n_panels, epsrel=cfg.rel_tol,
                   limit=int(cfg.max_refinements), full_output=1)
        if len(out) > 3:
            raise QuadratureError(
                f"radial quadrature on [{lo:.6g}, {hi:.6g}] failed for b={b}, t={t}, r={r}, m={m}: {out[3]}",
                error_estimate=out[1] / TWO_PI_SQ,
            )
        total += out[0]
        error += out[1]
    error += _tail_bound(p_max, b)
    return total / TWO_PI_SQ, error / TWO_PI_SQ


def regular_part_rest_frame(b: float, t: float, r: float, m: float,
                            cfg: Optional[QuadratureConfig] = None) -> RegularPartResult:
    """W from the rest-frame invariants (b, t', r')"""
    cfg = cfg or QuadratureConfig()
    t_abs = abs(t)
    if m == 0.0 and cfg.use_closed_form:
        value = regular_part_closed_massless(t_abs, r, b)
        if logger.isEnabledFor(logging.DEBUG):
            check, err = _quadrature_rest_frame(b, t_abs, r, m, cfg)
            logger.debug("closed form %.17g vs quadrature %.17g (+- %.2e) at b=%g t=%g r=%g",
                         value, check, err, b, t, r)
            if abs(value - check) > 10.0 * err + 100.0 * cfg.rel_tol * abs(value):
                logger.warning("closed form %.17g disagrees with quadrature %.17g (+- %.2e) at b=%g t=%g r=%g",
                               value, check, err, b, t, r)
        return RegularPartResult(value, 16.0 * np.finfo(float).eps * abs(value), "closed_form", b, t, r)
    value, err = _quadrature_rest_frame(b, t_abs, r, m, cfg)
    return RegularPartResult(value, err, "quadrature", b, t, r)


def evaluate_regular_part(q: FourVector, z: FourVector, s: StateSpec,
                          cfg: Optional[QuadratureConfig] = None) -> RegularPartResult:
    beta = s.beta_at(q)
    b, t, r = rest_frame_invariants(beta, z)
    return regular_part_rest_frame(b, t, r, s.m, cfg)


def regular_part(q: FourVector, z: FourVector, s: StateSpec, cfg: Optional[QuadratureConfig] = None) -> float:
    """W(q, z), the smooth part of the point-split two-point function"""
    return evaluate_regular_part(q, z, s, cfg).value


def coincidence_limit(q: FourVector, s: StateSpec, cfg: Optional[QuadratureConfig] = None) -> float:
    """W(q, 0); 1/(12 b^2) for the massless field"""
    cfg = cfg or QuadratureConfig()
    beta = s.beta_at(q)
    b = math.sqrt(mink_dot(beta, beta))
    if s.m == 0.0 and cfg.use_closed_form:
        return 1.0 / (12.0 * b * b)
    return _quadrature_rest_frame(b, 0.0, 0.0, s.m, cfg)[0]


def vacuum_massless_spacelike(z: FourVector) -> float:
    """Massless vacuum two-point function 1/(4 pi^2 (r^2 - t^2)) at spacelike z"""
    interval = -mink_dot(z, z)
    if not interval > 0:
        raise InvalidInputError(f"separation {z} is not spacelike")
    return 1.0 / (FOUR_PI_SQ * interval)


def full_two_point_spacelike_massless(q: FourVector, z: FourVector, s: StateSpec,
                                      cfg: Optional[QuadratureConfig] = None) -> float:
    """Regular part plus massless vacuum term, for spacelike z only"""
    if s.m != 0.0:
        raise InvalidInputError(f"closed vacuum term is massless only, got m={s.m}")
    vacuum = vacuum_massless_spacelike(z)
    return regular_part(q, z, s, cfg) + vacuum


def clustering_decay(q: FourVector, s: StateSpec, ts: Sequence[float],
                     cfg: Optional[QuadratureConfig] = None) -> List[float]:
    """W(q, t beta(q)) for each t; the regular part should fall off as t grows"""
    beta = s.beta_at(q)
    return [regular_part(q, beta * float(t), s, cfg) for t in ts]
