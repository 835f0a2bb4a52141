"""Constraint algebra for the Bennett 4R overconstrained spatial linkage.

A Bennett linkage closes a loop of four revolute joints whose axes are
neither parallel nor concurrent.  Mobility requires the classical
conditions: opposite links share length and twist, and link lengths are
proportional to the sines of their twists.  With the overall scale fixed
to ``a12 + a23 = 1``, the whole family is parameterised by the single
link length ``a12`` in (0, 1) and the twist ``alpha12`` in (0, 2*pi).

All angles are radians.  Joint frames follow the Denavit-Hartenberg
convention with zero joint offsets, so each link transform is a rotation
about z by the joint angle followed by the link's length/twist screw
along x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

_EYE4 = np.eye(4)


def canonical_angle(theta: float) -> float:
    """Map an angle to its canonical representative in [0, 2*pi)."""
    return theta % TWO_PI


def dh_matrix(theta: float, a: float, alpha: float) -> np.ndarray:
    """Raw 4x4 homogeneous Denavit-Hartenberg link transform (zero offset).

    Args:
        theta: joint rotation about the local z axis, radians.
        a: link length along the common normal.
        alpha: link twist about the moved x axis, radians.

    Returns:
        A fresh (4, 4) float array.
    """
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])


def dh_matrix_dtheta(theta: float, a: float, alpha: float) -> np.ndarray:
    """Elementwise derivative of :func:`dh_matrix` with respect to theta."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array([
        [-st, -ct * ca, ct * sa, -a * st],
        [ct, -st * ca, st * sa, a * ct],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])


@dataclass(frozen=True)
class HomTransform:
    """Rigid-body transform split into rotation block and translation."""

    r: np.ndarray
    t: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Assemble the full 4x4 homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.r
        m[:3, 3] = self.t
        return m


def dh_transform(theta: float, a: float, alpha: float) -> HomTransform:
    """Denavit-Hartenberg link transform as a :class:`HomTransform`.

    The rotation block is orthonormal with determinant +1 for any real
    inputs; the translation is ``(a*cos(theta), a*sin(theta), 0)``.

    Raises:
        ValueError: if any input is non-finite.
    """
    if not (math.isfinite(theta) and math.isfinite(a) and math.isfinite(alpha)):
        raise ValueError(f"transform inputs must be finite, got {(theta, a, alpha)}")
    m = dh_matrix(theta, a, alpha)
    return HomTransform(r=m[:3, :3], t=m[:3, 3])


@dataclass(frozen=True)
class BennettParams:
    """Full parameter set of one Bennett linkage.

    Opposite links are implied equal (a34 = a12, alpha34 = alpha12,
    a41 = a23, alpha41 = alpha23), so only the two independent pairs are
    stored.  ``scale`` is the positive multiplier applied by Stage-1
    normalization; raw mechanisms have scale 1.0 and a12 + a23 == scale.
    """

    a12: float
    alpha12: float
    a23: float
    alpha23: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        for name in ("a12", "alpha12", "a23", "alpha23", "scale"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.a12 <= 0.0 or self.a23 <= 0.0 or self.scale <= 0.0:
            raise ValueError("link lengths and scale must be positive")
        if abs(self.a12 + self.a23 - self.scale) > 1e-12 * self.scale:
            raise ValueError(
                f"lengths {self.a12} + {self.a23} do not add up to scale {self.scale}"
            )
        ratio_gap = math.sin(self.alpha12) / self.a12 - math.sin(self.alpha23) / self.a23
        if abs(ratio_gap) > 1e-12:
            raise ValueError(
                "twists violate the sine proportionality condition "
                f"(gap {ratio_gap:.3e})"
            )


@dataclass(frozen=True)
class Gate1Rejection:
    """Outcome for parameter pairs with no real twist solution.

    ``sin_alpha23`` records the out-of-range sine that triggered the
    rejection (its magnitude exceeds 1).
    """

    a12: float
    alpha12: float
    sin_alpha23: float


def derive_dependents(
    a12: float, alpha12: float, branch: str = "principal"
) -> BennettParams | Gate1Rejection:
    """Complete (a12, alpha12) to a full Bennett parameter set.

    With the scale fixed by a12 + a23 = 1, the sine proportionality
    condition pins sin(alpha23) = (a23 / a12) * sin(alpha12).  When that
    value leaves [-1, 1] no real mechanism exists and a
    :class:`Gate1Rejection` is returned instead (the feasibility gate).

    Args:
        a12: independent link length, strictly inside (0, 1).
        alpha12: independent twist in radians, strictly inside (0, 2*pi).
        branch: "principal" resolves alpha23 through asin; "supplementary"
            takes the mirrored solution pi - asin.  Both are folded into
            (0, pi) when the sine is positive and (pi, 2*pi) when negative,
            so the twist stays in the same half-turn as its sine sign.

    Returns:
        BennettParams on success, Gate1Rejection when |sin(alpha23)| > 1.

    Raises:
        ValueError: if a12 or alpha12 falls outside its open domain, or
            branch is not one of the two names.
    """
    if not 0.0 < a12 < 1.0:
        raise ValueError(f"a12 must lie in (0, 1), got {a12}")
    if not 0.0 < alpha12 < TWO_PI:
        raise ValueError(f"alpha12 must lie in (0, 2*pi), got {alpha12}")
    if branch not in ("principal", "supplementary"):
        raise ValueError(f"unknown branch {branch!r}")

    a23 = 1.0 - a12
    s = (a23 / a12) * math.sin(alpha12)
    if abs(s) > 1.0:
        return Gate1Rejection(a12=a12, alpha12=alpha12, sin_alpha23=s)

    base = math.asin(s)
    alpha23 = base if branch == "principal" else math.pi - base
    if alpha23 < 0.0:
        alpha23 += TWO_PI
    if alpha23 == 0.0:
        # Only reachable at sin(alpha12) == 0; keep the twist inside
        # (0, 2*pi) by taking the supplementary image.
        alpha23 = math.pi
    return BennettParams(a12=a12, alpha12=alpha12, a23=a23, alpha23=alpha23)


@dataclass(frozen=True)
class JointAngles:
    """The four joint angles of one closure, canonicalised to [0, 2*pi)."""

    theta1: float
    theta2: float
    theta3: float
    theta4: float

    def __post_init__(self) -> None:
        for name in ("theta1", "theta2", "theta3", "theta4"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, canonical_angle(value))


def link_matrices(params: BennettParams, angles: JointAngles) -> list[np.ndarray]:
    """The four link transforms of the loop, in chain order."""
    return [
        dh_matrix(angles.theta1, params.a12, params.alpha12),
        dh_matrix(angles.theta2, params.a23, params.alpha23),
        dh_matrix(angles.theta3, params.a12, params.alpha12),
        dh_matrix(angles.theta4, params.a23, params.alpha23),
    ]


def closure_residual(params: BennettParams, angles: JointAngles) -> np.ndarray:
    """Loop closure defect as a flat 12-vector.

    Multiplies the four link transforms in order and subtracts identity;
    the top 3x4 block (rotation then translation column) is flattened
    row-major.  A perfectly assembled loop gives the zero vector.
    """
    t1, t2, t3, t4 = link_matrices(params, angles)
    product = t1 @ t2 @ t3 @ t4
    return (product - _EYE4)[:3, :].ravel()


def joint3_positions(
    params: BennettParams, theta1: np.ndarray, theta2: np.ndarray
) -> np.ndarray:
    """Workspace positions of the third joint for arrays of angles.

    The third joint sits at the translation of the first two link
    transforms composed, which reduces to a short closed form.  Inputs
    broadcast; the result has shape (..., 3).
    """
    theta1 = np.asarray(theta1, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    c1, s1 = np.cos(theta1), np.sin(theta1)
    c2, s2 = np.cos(theta2), np.sin(theta2)
    ca = math.cos(params.alpha12)
    sa = math.sin(params.alpha12)
    a12, a23 = params.a12, params.a23
    px = a12 * c1 + a23 * (c2 * c1 - s2 * s1 * ca)
    py = a12 * s1 + a23 * (c2 * s1 + s2 * c1 * ca)
    pz = a23 * s2 * sa
    return np.stack(np.broadcast_arrays(px, py, pz), axis=-1)


def joint3_position(params: BennettParams, theta1: float, theta2: float) -> np.ndarray:
    """Workspace position of the third joint for one configuration.

    At theta1 = theta2 = 0 this is (a12 + a23, 0, 0), the fully unfolded
    pose along the base x axis.
    """
    return joint3_positions(params, float(theta1), float(theta2))
