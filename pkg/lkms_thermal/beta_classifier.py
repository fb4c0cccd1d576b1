"""
Classification of inverse-temperature fields.

A massless LKMS field must be affine, beta(q) = c (q + beta_tilde), and a massive
one constant. The sign of c then selects the state family and the largest
lightcone region it extends to:

    c > 0   hot bang    V+ - beta_tilde
    c < 0   cold bang   V- - beta_tilde
    c = 0   global KMS  all of Minkowski space, beta_tilde in V+

Anything else is rejected with a NotLKMS verdict carrying the reason.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .constraint_checks import beta_jacobian
from .exceptions import InvalidInputError
from .minkowski import ConeKind, ConeRegion, FourVector, in_forward_cone, mink_dot
from .shell_tensor import NullFormRejection, Tensor2, massless_null_decompose
from .thermal_wightman import (
    AffineBetaField,
    BetaField,
    QuadratureConfig,
    StateSpec,
    checked_beta,
    coincidence_limit,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_FIELD_STEP = 1e-3

REASON_ROTATION = "antisymmetric part C != 0 is incompatible with the shell constraints"
REASON_MASSIVE_NOT_CONSTANT = "massive field requires constant beta (c != 0)"
REASON_NOT_TIMELIKE = "β not future timelike"
REASON_OUTSIDE_REGION = "domain outside maximal region"
REASON_NON_AFFINE = "non-affine field"
REASON_JACOBIAN_FORM = "Jacobian not of the form c*eta + C"
REASON_APEX_OVERFLOW = "region apex -beta_tilde/c overflows"


class VerdictKind(Enum):
    GLOBAL_KMS = "GlobalKMS"
    HOT_BANG = "HotBang"
    COLD_BANG = "ColdBang"
    NOT_LKMS = "NotLKMS"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a classification; region is None for NotLKMS"""
    kind: VerdictKind
    c: float = 0.0
    beta_tilde: FourVector = field(default_factory=FourVector.origin)
    region: Optional[ConeRegion] = None
    reason: str = ""
    fit_residual: float = 0.0

    @property
    def is_lkms(self) -> bool:
        return self.kind is not VerdictKind.NOT_LKMS

    def to_dict(self) -> dict:
        result = {
            "kind": self.kind.value,
            "c": float(self.c) + 0.0,
            "beta_tilde": [float(v) + 0.0 for v in self.beta_tilde.as_list()],
            "region": self.region.to_dict() if self.region is not None else None,
            "fit_residual": float(self.fit_residual),
        }
        if self.kind is VerdictKind.NOT_LKMS:
            result["reason"] = self.reason
        return result


def _reject(reason: str, c: float = 0.0, beta_tilde: Optional[FourVector] = None,
            fit_residual: float = 0.0) -> Verdict:
    logger.info("field rejected: %s", reason)
    return Verdict(VerdictKind.NOT_LKMS, c=c, beta_tilde=beta_tilde or FourVector.origin(),
                   reason=reason, fit_residual=fit_residual)


def _classify(f: AffineBetaField, m: float, domain_samples: Sequence[FourVector],
              tol: float, fit_residual: float) -> Verdict:
    if not tol > 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    if len(domain_samples) == 0:
        raise InvalidInputError("classification needs at least one domain sample")

    # thresholds are absolute: the constraint residuals do not shrink with |beta_tilde|
    offset = f.beta_tilde
    if f.C.max_norm() > tol:
        return _reject(REASON_ROTATION, f.c, offset, fit_residual)
    # any c != 0 leaves a unit constraint1 residual on a massive shell
    if m > 0 and f.c != 0.0:
        return _reject(REASON_MASSIVE_NOT_CONSTANT, f.c, offset, fit_residual)

    if f.c == 0.0:
        if not in_forward_cone(offset):
            return _reject(REASON_NOT_TIMELIKE, 0.0, offset, fit_residual)
        kind, c, beta_tilde, region = VerdictKind.GLOBAL_KMS, 0.0, offset, ConeRegion.everywhere()
    else:
        # beta(q) = c (q + beta_tilde) vanishes at the apex -beta_tilde
        c = f.c
        with np.errstate(over="ignore"):
            scaled = offset.as_array() / c
        if not np.all(np.isfinite(scaled)):
            return _reject(REASON_APEX_OVERFLOW, c, offset, fit_residual)
        beta_tilde = FourVector.from_array(scaled)
        cone = ConeKind.FORWARD if c > 0 else ConeKind.BACKWARD
        kind = VerdictKind.HOT_BANG if c > 0 else VerdictKind.COLD_BANG
        region = ConeRegion(cone, -beta_tilde)

    for q in domain_samples:
        if not region.contains(q):
            return _reject(REASON_OUTSIDE_REGION, c, beta_tilde, fit_residual)
        if not in_forward_cone(f(q)):
            return _reject(REASON_NOT_TIMELIKE, c, beta_tilde, fit_residual)

    logger.debug("classified as %s with c=%g, beta_tilde=%s", kind.value, c, beta_tilde)
    return Verdict(kind, c=c, beta_tilde=beta_tilde, region=region, fit_residual=fit_residual)


def classify_affine(f: AffineBetaField, m: float, domain_samples: Sequence[FourVector],
                    tol: float = DEFAULT_TOL) -> Verdict:
    """Classify an affine field on the given domain samples. Never raises for well-formed input."""
    return _classify(f, m, domain_samples, tol, 0.0)


def _affine_rank(samples: Sequence[FourVector]) -> int:
    pts = np.array([q.as_array() for q in samples])
    return int(np.linalg.matrix_rank(pts[1:] - pts[0]))


def classify_field(f: BetaField, m: float, domain_samples: Sequence[FourVector],
                   h: float = DEFAULT_FIELD_STEP, tol: float = DEFAULT_TOL) -> Verdict:
    """Classify a sampled field by checking it is affine, fitting (c, C, beta_tilde) and
    delegating to classify_affine.

    Args:
        f: field to classify; evaluated at the samples and at the +-h probes around them
        m: field mass
        domain_samples: at least 5 affinely independent points
        h: finite-difference step for the Jacobians
        tol: relative tolerance for Jacobian constancy, absolute threshold for the fitted c and C

    Raises:
        InvalidInputError: too few or degenerate samples, h <= 0
        BetaFieldError: beta leaves V+ at a sample or probe point
    """
    if isinstance(f, AffineBetaField):
        return classify_affine(f, m, domain_samples, tol)
    if len(domain_samples) < 5 or _affine_rank(domain_samples) < 4:
        raise InvalidInputError("classify_field needs at least 5 affinely independent samples")
    if not h > 0:
        raise InvalidInputError(f"step h must be positive, got {h}")

    jacobians = [beta_jacobian(f, q, h).a for q in domain_samples]
    reference = jacobians[0]
    spread = max(float(np.max(np.abs(J - reference))) for J in jacobians)
    if spread > tol * (1.0 + float(np.max(np.abs(reference)))):
        logger.debug("Jacobian spread %.3e across samples", spread)
        return _reject(REASON_NON_AFFINE, fit_residual=spread)

    mean_J = Tensor2(np.mean(jacobians, axis=0))
    decomposition = massless_null_decompose(mean_J, tol)
    if isinstance(decomposition, NullFormRejection):
        return _reject(REASON_JACOBIAN_FORM, fit_residual=decomposition.residual)

    # finite-difference noise below tol is not a slope or a rotation
    c = 0.0 if abs(decomposition.c) <= tol else decomposition.c
    omega = Tensor2.zeros() if decomposition.omega.max_norm() <= tol else decomposition.omega
    linear = AffineBetaField(c=c, C=omega)
    values = [checked_beta(f, q).as_array() for q in domain_samples]
    offsets = np.array([v - linear(q).as_array() for v, q in zip(values, domain_samples)])
    offset = offsets.mean(axis=0)
    fitted = AffineBetaField(c=c, C=omega, beta_tilde=FourVector.from_array(offset))
    fit_residual = float(np.max(np.abs(offsets - offset)))
    logger.debug("affine fit c=%.17g residual %.3e", fitted.c, fit_residual)
    return _classify(fitted, m, domain_samples, tol, fit_residual)


def maximal_region(v: Verdict) -> ConeRegion:
    """The largest region the state extends to"""
    if not v.is_lkms or v.region is None:
        raise InvalidInputError(f"a NotLKMS verdict has no region ({v.reason})")
    return v.region


def temperature(f: BetaField, q: FourVector) -> float:
    """Local rest-frame temperature 1/sqrt(<beta(q), beta(q)>)"""
    beta = checked_beta(f, q)
    return 1.0 / math.sqrt(mink_dot(beta, beta))


def representative_point(f: AffineBetaField) -> FourVector:
    # one unit inside the cone along the time axis
    if f.c == 0.0:
        return FourVector.origin()
    apex = -(f.beta_tilde / f.c)
    return apex + FourVector(math.copysign(1.0, f.c), 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Worldline:
    """Straight worldline tau -> origin + tau * direction"""
    origin: FourVector
    direction: FourVector = field(default_factory=lambda: FourVector(1.0, 0.0, 0.0, 0.0))

    def __post_init__(self):
        if not in_forward_cone(self.direction):
            raise InvalidInputError(f"worldline direction {self.direction} is not future timelike")

    def at(self, tau: float) -> FourVector:
        return self.origin + self.direction * float(tau)


@dataclass(frozen=True)
class ProfileRow:
    tau: float
    temperature: float
    coincidence: float


def profile_along_worldline(s: StateSpec, worldline: Worldline, taus: Sequence[float],
                            cfg: Optional[QuadratureConfig] = None, threads: int = 1) -> List[ProfileRow]:
    """Temperature and W(q(tau), 0) at each tau, in input order

    Raises:
        DomainError: a worldline point lies outside s.domain
    """
    def row(tau: float) -> ProfileRow:
        q = worldline.at(tau)
        w = coincidence_limit(q, s, cfg)
        return ProfileRow(float(tau), temperature(s.beta, q), w)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        return list(executor.map(row, taus))
