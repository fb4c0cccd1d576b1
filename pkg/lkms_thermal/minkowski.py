"""
Minkowski geometry: four-vectors, lightcones, point-split coordinates,
mass-shell lifts and pure boosts.

Natural units (hbar = c = k_B = 1), signature (+,-,-,-), component 0 is time.
All values are immutable; every function here is safe to call from any thread.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np

from .exceptions import InvalidInputError

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
METRIC.setflags(write=False)

# mink_dot(beta, beta) must exceed this fraction of (beta^0)^2 before a rest frame is built
TIMELIKE_TOLERANCE = 1e-12
BOOST_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FourVector:
    """A point or vector of Minkowski space (contravariant components)"""
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("t", "x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidInputError(f"FourVector component {name}={value} is not finite")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values: Union[Sequence[float], np.ndarray]) -> "FourVector":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (4,):
            raise InvalidInputError(f"expected 4 components, got shape {arr.shape}")
        return cls(*arr.tolist())

    @classmethod
    def origin(cls) -> "FourVector":
        return cls(0.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.x, self.y, self.z])

    def as_list(self):
        return [self.t, self.x, self.y, self.z]

    @property
    def spatial(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def lower(self) -> np.ndarray:
        """Covariant components v_mu = eta_{mu nu} v^nu"""
        return np.array([self.t, -self.x, -self.y, -self.z])

    def __add__(self, other: "FourVector") -> "FourVector":
        return FourVector(self.t + other.t, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "FourVector") -> "FourVector":
        return FourVector(self.t - other.t, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "FourVector":
        return FourVector(-self.t, -self.x, -self.y, -self.z)

    def __mul__(self, scalar: float) -> "FourVector":
        return FourVector(self.t * scalar, self.x * scalar, self.y * scalar, self.z * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "FourVector":
        return FourVector(self.t / scalar, self.x / scalar, self.y / scalar, self.z / scalar)

    def __str__(self) -> str:
        return f"({self.t:.17g}, {self.x:.17g}, {self.y:.17g}, {self.z:.17g})"


def mink_dot(a: FourVector, b: FourVector) -> float:
    """Minkowski inner product a^0 b^0 - a.b"""
    return a.t * b.t - a.x * b.x - a.y * b.y - a.z * b.z


def in_forward_cone(v: FourVector) -> bool:
    """Membership in the open cone V+"""
    return mink_dot(v, v) > 0.0 and v.t > 0.0


def in_backward_cone(v: FourVector) -> bool:
    """Membership in the open cone V-"""
    return mink_dot(v, v) > 0.0 and v.t < 0.0


def point_split(q: FourVector, z: FourVector) -> Tuple[FourVector, FourVector]:
    """Map midpoint q and separation z to the pair (q - z/2, q + z/2)"""
    half = z * 0.5
    return q - half, q + half


def split_point(x: FourVector, y: FourVector) -> Tuple[FourVector, FourVector]:
    """Inverse of point_split: ((x + y)/2, y - x)"""
    return (x + y) * 0.5, y - x


class ConeKind(Enum):
    FORWARD = "ForwardCone"
    BACKWARD = "BackwardCone"
    ALL = "AllMinkowski"


@dataclass(frozen=True)
class ConeRegion:
    """V+ + apex, V- + apex, or all of Minkowski space; cones are open"""
    kind: ConeKind
    apex: FourVector = field(default_factory=FourVector.origin)

    def contains(self, q: FourVector) -> bool:
        if self.kind is ConeKind.ALL:
            return True
        d = q - self.apex
        if self.kind is ConeKind.FORWARD:
            return in_forward_cone(d)
        return in_backward_cone(d)

    def to_dict(self) -> dict:
        if self.kind is ConeKind.ALL:
            return {"kind": self.kind.value}
        return {"kind": self.kind.value, "apex": [c + 0.0 for c in self.apex.as_list()]}

    @classmethod
    def everywhere(cls) -> "ConeRegion":
        return cls(ConeKind.ALL)


@dataclass(frozen=True)
class BoxRegion:
    """Closed axis-aligned box lower <= q <= upper, componentwise"""
    lower: FourVector
    upper: FourVector

    def __post_init__(self):
        if np.any(self.lower.as_array() > self.upper.as_array()):
            raise InvalidInputError(f"box lower corner {self.lower} exceeds upper corner {self.upper}")

    def contains(self, q: FourVector) -> bool:
        arr = q.as_array()
        return bool(np.all(arr >= self.lower.as_array()) and np.all(arr <= self.upper.as_array()))


def cone_contains(r: ConeRegion, q: FourVector) -> bool:
    return r.contains(q)


def shell_lift(p3: Sequence[float], m: float) -> FourVector:
    """Lift a spatial momentum to the forward mass shell (omega_p, p)"""
    if m < 0:
        raise InvalidInputError(f"mass must be non-negative, got {m}")
    px, py, pz = (float(c) for c in p3)
    omega = math.sqrt(px * px + py * py + pz * pz + m * m)
    return FourVector(omega, px, py, pz)


@dataclass(frozen=True, eq=False)
class LorentzBoost:
    """A 4x4 matrix acting on contravariant components, checked against L^T eta L = eta"""
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.shape != (4, 4):
            raise InvalidInputError(f"boost matrix must be 4x4, got {mat.shape}")
        defect = np.max(np.abs(mat.T @ METRIC @ mat - METRIC))
        # entries grow like gamma^2, so the rounding floor does too
        allowed = BOOST_TOLERANCE * max(1.0, float(np.max(np.abs(mat))) ** 2)
        if defect > allowed:
            raise InvalidInputError(f"matrix is not a Lorentz transformation (defect {defect:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls) -> "LorentzBoost":
        return cls(np.eye(4))

    def apply(self, v: FourVector) -> FourVector:
        return FourVector.from_array(self.matrix @ v.as_array())

    def inverse(self) -> "LorentzBoost":
        # L^{-1} = eta L^T eta for any Lorentz transformation
        return LorentzBoost(METRIC @ self.matrix.T @ METRIC)

    def compose(self, other: "LorentzBoost") -> "LorentzBoost":
        """self after other"""
        return LorentzBoost(self.matrix @ other.matrix)


def _pure_boost(v: np.ndarray, gamma: float) -> np.ndarray:
    mat = np.eye(4)
    mat[0, 0] = gamma
    mat[0, 1:] = -gamma * v
    mat[1:, 0] = -gamma * v
    # (gamma - 1)/v^2 rewritten as gamma^2/(1 + gamma), finite at v = 0
    mat[1:, 1:] += (gamma * gamma / (1.0 + gamma)) * np.outer(v, v)
    return mat


def boost_from_velocity(v3: Sequence[float]) -> LorentzBoost:
    """Pure boost into the frame moving with 3-velocity v3 (|v3| < 1)"""
    v = np.asarray(v3, dtype=float)
    speed_sq = float(v @ v)
    if not speed_sq < 1.0:
        raise InvalidInputError(f"boost velocity {v.tolist()} is not subluminal")
    gamma = 1.0 / math.sqrt(1.0 - speed_sq)
    return LorentzBoost(_pure_boost(v, gamma))


def boost_to_rest(beta: FourVector) -> Tuple[LorentzBoost, float]:
    """Pure boost L with L beta = (b, 0, 0, 0), and b = sqrt(<beta, beta>)

    Raises:
        InvalidInputError: beta is not future-pointing timelike
    """
    norm_sq = mink_dot(beta, beta)
    if beta.t <= 0.0 or norm_sq <= TIMELIKE_TOLERANCE * beta.t * beta.t:
        raise InvalidInputError(f"vector {beta} is not future-pointing timelike")
    b = math.sqrt(norm_sq)
    if beta.x == 0.0 and beta.y == 0.0 and beta.z == 0.0:
        return LorentzBoost.identity(), b
    v = beta.spatial / beta.t
    gamma = beta.t / b
    return LorentzBoost(_pure_boost(v, gamma)), b
