"""
Residual checks for detailed balance, the beta constraints and the
equations of motion of the regular part W.

Every check returns a ResidualReport whose residual is normalised by an
explicit scale, so a "zero" claim can be falsified from the report alone.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidInputError
from .minkowski import METRIC, FourVector, mink_dot, shell_lift
from .shell_tensor import Tensor2, shell_quadratic
from .thermal_wightman import (
    AffineBetaField,
    BetaField,
    QuadratureConfig,
    StateSpec,
    checked_beta,
    fourier_weights,
    regular_part,
)

logger = logging.getLogger(__name__)

DEFAULT_JACOBIAN_STEP = 1e-4
DEFAULT_BOX_STEP = 1e-3
DEFAULT_STENCIL_STEP = 1e-2

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator; identical streams on every platform for a given seed"""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits"""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def unit_vector(self) -> np.ndarray:
        """Uniform direction on the 2-sphere"""
        cos_theta = 2.0 * self.uniform() - 1.0
        phi = 2.0 * math.pi * self.uniform()
        sin_theta = math.sqrt(max(0.0, 1.0 - cos_theta * cos_theta))
        return np.array([sin_theta * math.cos(phi), sin_theta * math.sin(phi), cos_theta])


def default_shell_samples(m: float, seed: int = 0, directions: int = 20,
                          magnitudes: Sequence[float] = (0.5, 1.0, 2.0)) -> List[np.ndarray]:
    """Probe momenta: 0 (massive only), +-e_i, then random directions at a few magnitudes"""
    samples = []
    if m > 0:
        samples.append(np.zeros(3))
    for i in range(3):
        for sign in (1.0, -1.0):
            e = np.zeros(3)
            e[i] = sign
            samples.append(e)
    rng = SplitMix64(seed)
    for _ in range(directions):
        n = rng.unit_vector()
        samples.extend(k * n for k in magnitudes)
    return samples


@dataclass(frozen=True)
class ResidualReport:
    """Largest normalised residual of a check and where it occurred"""
    name: str
    max_abs_residual: float
    scale: float
    sample_count: int
    worst_witness: tuple
    tolerance: Optional[float] = None

    def __post_init__(self):
        # numpy scalars would leak into the JSON report
        object.__setattr__(self, "max_abs_residual", float(self.max_abs_residual))
        object.__setattr__(self, "scale", float(self.scale))
        if self.tolerance is not None:
            object.__setattr__(self, "tolerance", float(self.tolerance))

    @property
    def passed(self) -> bool:
        return bool(self.tolerance is None or self.max_abs_residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_residual": self.max_abs_residual,
            "scale": self.scale,
            "sample_count": self.sample_count,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


class _WorstTracker:
    def __init__(self):
        self.residual = 0.0
        self.scale = 1.0
        self.witness: tuple = ()
        self.count = 0

    def offer(self, residual: float, scale: float, witness: tuple):
        self.count += 1
        if self.count == 1 or residual > self.residual:
            self.residual, self.scale, self.witness = residual, scale, witness

    def report(self, name: str, tol: Optional[float]) -> ResidualReport:
        return ResidualReport(name, self.residual, self.scale, self.count, self.witness, tol)


WeightFn = Callable[[FourVector, Sequence[float], StateSpec], Tuple[float, float]]


def _exp_times(x: float, w: float) -> float:
    if x <= 700.0:
        return math.exp(x) * w
    # e^x overflows; w is ~e^-x there
    return math.exp(x + math.log(w)) if w > 0 else 1.0


def kms_detailed_balance(q: FourVector, s: StateSpec, p_samples: Sequence[Sequence[float]],
                         tol: float = 1e-13, weights: WeightFn = fourier_weights) -> ResidualReport:
    """On-shell detailed balance |w+ - e^x w-| / w+ with x = beta(q).P"""
    beta = s.beta_at(q)
    tracker = _WorstTracker()
    for p3 in p_samples:
        w_plus, w_minus = weights(q, p3, s)
        x = mink_dot(beta, shell_lift(p3, s.m))
        residual = abs(w_plus - _exp_times(x, w_minus)) / w_plus
        tracker.offer(residual, w_plus, (q.as_list(), [float(c) for c in p3]))
    report = tracker.report("detailed_balance", tol)
    if not report.passed:
        logger.info("detailed balance violated at %s: residual %.3e", report.worst_witness, report.max_abs_residual)
    return report


def _lowered(field_: BetaField, q: FourVector) -> np.ndarray:
    return checked_beta(field_, q).lower()


def beta_jacobian(field_: BetaField, q: FourVector, h: float = DEFAULT_JACOBIAN_STEP) -> Tensor2:
    """J_{mu nu} = d_mu beta_nu at q; exact for affine fields, central differences otherwise"""
    if isinstance(field_, AffineBetaField):
        checked_beta(field_, q)
        return field_.jacobian()
    if not h > 0:
        raise InvalidInputError(f"step h must be positive, got {h}")
    J = np.zeros((4, 4))
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        plus = _lowered(field_, FourVector.from_array(q.as_array() + e))
        minus = _lowered(field_, FourVector.from_array(q.as_array() - e))
        J[mu] = (plus - minus) / (2.0 * h)
    return Tensor2(J)


def beta_box(field_: BetaField, q: FourVector, h: float = DEFAULT_BOX_STEP) -> np.ndarray:
    """Box beta_nu (lower index) at q; zero for affine fields"""
    if isinstance(field_, AffineBetaField):
        checked_beta(field_, q)
        return np.zeros(4)
    if not h > 0:
        raise InvalidInputError(f"step h must be positive, got {h}")
    centre = _lowered(field_, q)
    box = np.zeros(4)
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        plus = _lowered(field_, FourVector.from_array(q.as_array() + e))
        minus = _lowered(field_, FourVector.from_array(q.as_array() - e))
        box += METRIC[mu, mu] * (plus - 2.0 * centre + minus) / (h * h)
    return box


def constraint1_residual(J: Tensor2, m: float, samples: Sequence[Sequence[float]],
                         tol: Optional[float] = None) -> ResidualReport:
    """max |P^mu P^nu J_{mu nu}| / (|J| omega^2) over the shell samples"""
    norm = J.max_norm()
    tracker = _WorstTracker()
    for p3 in samples:
        omega_sq = float(np.dot(p3, p3)) + m * m
        if omega_sq == 0.0:
            continue
        scale = (norm if norm > 0 else 1.0) * omega_sq
        residual = abs(shell_quadratic(J, p3, m)) / scale
        tracker.offer(residual, scale, ([float(c) for c in p3],))
    return tracker.report("constraint1", tol)


def constraint2_residual(field_: BetaField, q: FourVector, m: float, samples: Sequence[Sequence[float]],
                         h: float = DEFAULT_BOX_STEP, tol: Optional[float] = None) -> ResidualReport:
    """max |L - R| / (1 + |J|^2 omega^2) with

        L = (d_mu beta_k P^k)(d^mu beta_l P^l),  R = tanh(x/2) (Box beta_nu) P^nu,  x = beta(q).P
    """
    beta = checked_beta(field_, q)
    J = beta_jacobian(field_, q, min(h, DEFAULT_JACOBIAN_STEP))
    box = beta_box(field_, q, h)
    norm_sq = J.max_norm() ** 2
    tracker = _WorstTracker()
    for p3 in samples:
        P = shell_lift(p3, m)
        if P.t == 0.0:
            continue
        v = J.a @ P.as_array()
        lhs = float(v @ METRIC @ v)
        x = mink_dot(beta, P)
        rhs = math.tanh(0.5 * x) * float(box @ P.as_array())
        scale = 1.0 + norm_sq * P.t * P.t
        tracker.offer(abs(lhs - rhs) / scale, scale, (q.as_list(), [float(c) for c in p3]))
    return tracker.report("constraint2", tol)


def _stencil_config(cfg: Optional[QuadratureConfig], h: float) -> QuadratureConfig:
    # second differences amplify quadrature noise by 1/h^2
    cfg = cfg or QuadratureConfig()
    return replace(cfg, abs_tol=min(cfg.abs_tol, 1e-2 * h ** 4), rel_tol=min(cfg.rel_tol, 1e-10))


def w_pde_residuals(s: StateSpec, q: FourVector, z: FourVector, h: float = DEFAULT_STENCIL_STEP,
                    cfg: Optional[QuadratureConfig] = None) -> Tuple[float, float]:
    """Central-difference residuals of

        d_q^mu d^z_mu W = 0   and   Box_q W + 4 (Box_z + m^2) W = 0
    """
    if not h > 0:
        raise InvalidInputError(f"step h must be positive, got {h}")
    cfg = _stencil_config(cfg, h)
    q_arr, z_arr = q.as_array(), z.as_array()

    def W(dq: np.ndarray, dz: np.ndarray) -> float:
        return regular_part(FourVector.from_array(q_arr + dq), FourVector.from_array(z_arr + dz), s, cfg)

    zero = np.zeros(4)
    centre = W(zero, zero)
    mixed = box_q = box_z = 0.0
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        eta = METRIC[mu, mu]
        cross = W(e, e) - W(e, -e) - W(-e, e) + W(-e, -e)
        mixed += eta * cross / (4.0 * h * h)
        box_q += eta * (W(e, zero) - 2.0 * centre + W(-e, zero)) / (h * h)
        box_z += eta * (W(zero, e) - 2.0 * centre + W(zero, -e)) / (h * h)
    r_box = box_q + 4.0 * (box_z + s.m * s.m * centre)
    logger.debug("W PDE residuals at q=%s z=%s h=%g: mixed %.3e, box %.3e", q, z, h, mixed, r_box)
    return float(mixed), float(r_box)


def observed_order(s: StateSpec, q: FourVector, z: FourVector, h: float = DEFAULT_STENCIL_STEP,
                   cfg: Optional[QuadratureConfig] = None) -> Tuple[float, float]:
    """log2 of the residual ratio between steps h and h/2, for both residuals"""
    coarse = w_pde_residuals(s, q, z, h, cfg)
    fine = w_pde_residuals(s, q, z, 0.5 * h, cfg)
    orders = []
    for a, b in zip(coarse, fine):
        orders.append(math.log2(abs(a) / abs(b)) if a != 0.0 and b != 0.0 else float("nan"))
    return orders[0], orders[1]
