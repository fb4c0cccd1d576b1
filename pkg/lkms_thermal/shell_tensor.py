"""
Rank-(0,2) tensors whose quadratic form vanishes on a mass shell.

A tensor A_{mu nu} has p^mu p^nu A_{mu nu} = 0 on the whole massless shell iff
A = c*eta + Omega with Omega antisymmetric; on a massive shell (m > 0) iff A is
antisymmetric. Both tests reduce to exact linear conditions on the symmetric
part, so floating tolerances only have to separate O(1) from O(ulp).

Index convention: A is stored with both indices down and contracted against the
raw (upper-index) components of P. No metric is inserted in the contraction.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .exceptions import InvalidInputError
from .minkowski import METRIC, shell_lift

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Tensor2:
    """A real 4x4 tensor with entry a[mu][nu] = A_{mu nu}"""
    a: np.ndarray

    def __post_init__(self):
        arr = np.array(self.a, dtype=float)
        if arr.shape != (4, 4):
            raise InvalidInputError(f"Tensor2 needs a 4x4 array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("Tensor2 entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @classmethod
    def zeros(cls) -> "Tensor2":
        return cls(np.zeros((4, 4)))

    @classmethod
    def metric(cls) -> "Tensor2":
        return cls(METRIC)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.a)))

    def is_antisymmetric(self, tol: float = 0.0) -> bool:
        return float(np.max(np.abs(self.a + self.a.T))) <= tol

    def __add__(self, other: "Tensor2") -> "Tensor2":
        return Tensor2(self.a + other.a)

    def __sub__(self, other: "Tensor2") -> "Tensor2":
        return Tensor2(self.a - other.a)

    def __mul__(self, scalar: float) -> "Tensor2":
        return Tensor2(self.a * scalar)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Tensor2) and bool(np.array_equal(self.a, other.a))

    def __repr__(self) -> str:
        return f"Tensor2({self.a.tolist()})"


def antisymmetric_from_components(c01: float = 0.0, c02: float = 0.0, c03: float = 0.0,
                                  c12: float = 0.0, c13: float = 0.0, c23: float = 0.0) -> Tensor2:
    """Assemble an antisymmetric tensor from its six independent entries C_{mu nu}, mu < nu"""
    a = np.zeros((4, 4))
    for (mu, nu), value in zip(((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
                               (c01, c02, c03, c12, c13, c23)):
        a[mu, nu] = value
        a[nu, mu] = -value
    return Tensor2(a)


def sym_antisym_split(A: Tensor2) -> Tuple[Tensor2, Tensor2]:
    """Return (S, Omega) with S = (A + A^T)/2 and Omega = (A - A^T)/2"""
    return Tensor2(0.5 * (A.a + A.a.T)), Tensor2(0.5 * (A.a - A.a.T))


def shell_quadratic(A: Tensor2, p3: Sequence[float], m: float) -> float:
    """P^mu P^nu A_{mu nu} on the forward shell point above p3"""
    P = shell_lift(p3, m).as_array()
    return float(P @ A.a @ P)


def probe_directions() -> np.ndarray:
    """The 26 unit directions through the faces, edges and corners of the cube"""
    dirs = [d for d in itertools.product((-1.0, 0.0, 1.0), repeat=3) if any(d)]
    arr = np.array(dirs)
    return arr / np.linalg.norm(arr, axis=1)[:, None]


@dataclass(frozen=True)
class NullFormDecomposition:
    """A = c*eta + omega, with residual = max|S - c*eta|"""
    c: float
    omega: Tensor2
    residual: float

    accepted = True


@dataclass(frozen=True, eq=False)
class NullFormRejection:
    """Failed decomposition plus the lightlike probe where the form is largest"""
    residual: float
    witness: np.ndarray
    quadratic: float

    accepted = False


def massless_null_decompose(A: Tensor2, tol: float = DEFAULT_TOL) -> Union[NullFormDecomposition, NullFormRejection]:
    """Decide whether A vanishes on the massless shell and, if so, split it as c*eta + Omega.

    With S the symmetric part and c = S_00 the conditions are S_0i = 0,
    S_ij = 0 for i != j and S_ii = -S_00, i.e. S - c*eta = 0.

    Args:
        A: tensor with both indices down
        tol: relative tolerance, scaled by 1 + max|A|

    Returns:
        NullFormDecomposition on acceptance, NullFormRejection otherwise
    """
    if tol <= 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    S, omega = sym_antisym_split(A)
    c = float(S.a[0, 0])
    residual = float(np.max(np.abs(S.a - c * METRIC)))
    if residual <= tol * (1.0 + A.max_norm()):
        return NullFormDecomposition(c=c, omega=omega, residual=residual)

    directions = probe_directions()
    values = np.array([shell_quadratic(A, d, 0.0) for d in directions])
    worst = int(np.argmax(np.abs(values)))
    logger.debug("null-form rejection: residual %.3e, witness %s", residual, directions[worst])
    return NullFormRejection(residual=residual, witness=directions[worst], quadratic=float(values[worst]))


def _massive_probe_momenta() -> np.ndarray:
    # p = 0, +-e_i and e_i + e_j: enough to pin every entry of S
    eye = np.eye(3)
    probes = [np.zeros(3)]
    probes.extend(eye)
    probes.extend(-eye)
    probes.extend(eye[i] + eye[j] for i, j in ((0, 1), (0, 2), (1, 2)))
    return np.array(probes)


def massive_null_test(A: Tensor2, m: float, tol: float = DEFAULT_TOL, cross_check: bool = False) -> bool:
    """True iff A vanishes on the shell of mass m > 0, i.e. iff A is antisymmetric"""
    if m <= 0:
        raise InvalidInputError(f"massive_null_test needs m > 0, got {m}")
    if tol <= 0:
        raise InvalidInputError(f"tol must be positive, got {tol}")
    S, _ = sym_antisym_split(A)
    scale = 1.0 + A.max_norm()
    verdict = S.max_norm() <= tol * scale

    if cross_check or logger.isEnabledFor(logging.DEBUG):
        worst = 0.0
        for p3 in _massive_probe_momenta():
            omega_sq = float(p3 @ p3) + m * m
            worst = max(worst, abs(shell_quadratic(A, p3, m)) / omega_sq)
        # the probes see S through omega^2 S_00 + ..., so compare on the same scale
        probed = worst <= 10.0 * tol * scale
        if probed != verdict:
            logger.warning("massive null test disagrees with shell probes (algebraic=%s, probed=%s, max=%.3e)",
                           verdict, probed, worst)
    return verdict
