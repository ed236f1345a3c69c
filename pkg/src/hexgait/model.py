"""Planar hexapod model: geometry, shape space, foot kinematics, contact catalog.

The robot is a chain of three equal segments joined by two yaw joints.  The
body frame is fixed to the middle-segment center with x along that segment;
``alpha1`` bends the front segment relative to the middle one and ``alpha2``
bends the middle segment relative to the hind one (both counterclockwise
positive, so negating the shape mirrors the robot across the body x axis).
Each segment carries one left and one right foot at its midpoint, offset
``half_width`` laterally.  Legs are indexed [FL, FR, ML, MR, HL, HR].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

LEG_NAMES = ("FL", "FR", "ML", "MR", "HL", "HR")
N_LEGS = 6

# Left-right reflection swaps each left leg with its right partner.
MIRROR_PERM = (1, 0, 3, 2, 5, 4)

TRIPOD_A_LEGS = ("FR", "ML", "HR")
TRIPOD_B_LEGS = ("FL", "MR", "HL")


class JointLimitError(ValueError):
    """A shape angle lies outside the configured joint limit."""


class DegeneratePatternError(ValueError):
    """A contact pattern has no stance feet where stance is required."""


class ShapePoint(NamedTuple):
    alpha1: float
    alpha2: float


class ShapeVelocity(NamedTuple):
    dalpha1: float
    dalpha2: float


class BodyVelocity(NamedTuple):
    xi_x: float
    xi_y: float
    xi_theta: float


@dataclass(frozen=True)
class HexapodParams:
    """Geometric and frictional parameters of the three-segment hexapod.

    Lengths in meters, mass in kg, angles in radians.  ``eps_reg`` is the
    velocity scale that smooths the Coulomb friction law near zero sliding
    speed; ``joint_limit`` bounds |alpha1| and |alpha2|.
    """

    segment_length: float = 0.265 / 3.0
    half_width: float = 0.05
    mass: float = 1.0
    gravity: float = 9.81
    mu: float = 0.3
    eps_reg: float = 1e-4
    joint_limit: float = 5.0 * math.pi / 16.0

    def __post_init__(self) -> None:
        if self.segment_length <= 0.0:
            raise ValueError("segment_length must be positive")
        if self.half_width <= 0.0:
            raise ValueError("half_width must be positive")
        if self.mass <= 0.0 or self.gravity <= 0.0:
            raise ValueError("mass and gravity must be positive")
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.eps_reg <= 0.0:
            raise ValueError("eps_reg must be positive")
        if not 0.0 < self.joint_limit < math.pi:
            raise ValueError("joint_limit must lie in (0, pi)")

    @property
    def body_length(self) -> float:
        """Total chain length, the unit for BL/cyc metrics."""
        return 3.0 * self.segment_length


@dataclass(frozen=True)
class ContactPattern:
    """Stance mask over the six legs, ordered [FL, FR, ML, MR, HL, HR]."""

    stance: tuple[bool, bool, bool, bool, bool, bool]

    def __post_init__(self) -> None:
        if len(self.stance) != N_LEGS:
            raise ValueError("stance mask must have 6 entries")
        object.__setattr__(self, "stance", tuple(bool(b) for b in self.stance))

    @classmethod
    def from_legs(cls, legs: Iterable[str]) -> "ContactPattern":
        wanted = set(legs)
        unknown = wanted - set(LEG_NAMES)
        if unknown:
            raise ValueError(f"unknown leg names: {sorted(unknown)}")
        return cls(tuple(name in wanted for name in LEG_NAMES))

    @classmethod
    def from_mask(cls, value: int) -> "ContactPattern":
        if not 0 <= value < 2**N_LEGS:
            raise ValueError("mask value out of range")
        return cls(tuple(bool(value >> i & 1) for i in range(N_LEGS)))

    @property
    def mask_value(self) -> int:
        return sum(1 << i for i, b in enumerate(self.stance) if b)

    @property
    def stance_count(self) -> int:
        return sum(self.stance)

    def stance_array(self) -> np.ndarray:
        return np.array(self.stance, dtype=bool)

    def mirrored(self) -> "ContactPattern":
        """Left-right swapped pattern."""
        return ContactPattern(tuple(self.stance[i] for i in MIRROR_PERM))

    def legs(self) -> tuple[str, ...]:
        return tuple(name for name, b in zip(LEG_NAMES, self.stance) if b)

    def __str__(self) -> str:
        return "+".join(self.legs()) if any(self.stance) else "none"


ALL_STANCE = ContactPattern.from_mask(2**N_LEGS - 1)
TRIPOD_A = ContactPattern.from_legs(TRIPOD_A_LEGS)
TRIPOD_B = ContactPattern.from_legs(TRIPOD_B_LEGS)


@dataclass(frozen=True)
class ContactCatalog:
    """Ordered collection of admissible contact patterns."""

    patterns: tuple[ContactPattern, ...]

    def __post_init__(self) -> None:
        if any(p.stance_count == 0 for p in self.patterns):
            raise DegeneratePatternError("catalog may not contain the empty pattern")
        masks = [p.mask_value for p in self.patterns]
        if len(set(masks)) != len(masks):
            raise ValueError("catalog contains duplicate patterns")

    def __len__(self) -> int:
        return len(self.patterns)

    def __getitem__(self, i: int) -> ContactPattern:
        return self.patterns[i]

    def __iter__(self):
        return iter(self.patterns)

    def index(self, pattern: ContactPattern) -> int:
        return self.patterns.index(pattern)

    def stance_matrix(self) -> np.ndarray:
        """(n_patterns, 6) boolean stance masks."""
        return np.array([p.stance for p in self.patterns], dtype=bool)


def build_catalog(min_stance: int = 4, include_tripods: bool = True) -> ContactCatalog:
    """All patterns with at least ``min_stance`` feet down, optionally plus
    the two alternating tripods.

    Ordering is deterministic: ascending mask value, tripods appended (and
    not duplicated if ``min_stance`` already admits them).
    """
    if not 1 <= min_stance <= N_LEGS:
        raise ValueError("min_stance must lie in 1..6")
    patterns = [
        ContactPattern.from_mask(m)
        for m in range(2**N_LEGS)
        if bin(m).count("1") >= min_stance
    ]
    if include_tripods:
        for tri in (TRIPOD_A, TRIPOD_B):
            if tri not in patterns:
                patterns.append(tri)
    return ContactCatalog(tuple(patterns))


def _as_shape_array(shape) -> np.ndarray:
    arr = np.asarray(shape, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("shape must have two angles")
    return arr


def validate_shape(params: HexapodParams, shape) -> np.ndarray:
    arr = _as_shape_array(shape)
    if np.any(np.abs(arr) > params.joint_limit + 1e-12):
        raise JointLimitError(
            f"shape {np.asarray(shape).tolist()} exceeds joint limit "
            f"{params.joint_limit:.6g}"
        )
    return arr


def foot_positions_array(params: HexapodParams, alpha: np.ndarray) -> np.ndarray:
    """Body-frame foot positions for shapes ``alpha`` of shape (..., 2).

    Returns (..., 6, 2).  Broadcasts over leading axes; no limit check.
    """
    alpha = _as_shape_array(alpha)
    a1 = alpha[..., 0]
    a2 = alpha[..., 1]
    c1, s1 = np.cos(a1), np.sin(a1)
    c2, s2 = np.cos(a2), np.sin(a2)
    half = 0.5 * params.segment_length
    w = params.half_width

    pos = np.zeros(alpha.shape[:-1] + (N_LEGS, 2))
    # front segment midpoint and unit normal (CCW from tangent)
    fmx = half + half * c1
    fmy = half * s1
    pos[..., 0, 0] = fmx - w * s1
    pos[..., 0, 1] = fmy + w * c1
    pos[..., 1, 0] = fmx + w * s1
    pos[..., 1, 1] = fmy - w * c1
    # middle segment feet
    pos[..., 2, 1] = w
    pos[..., 3, 1] = -w
    # hind segment: tangent (cos a2, -sin a2), midpoint behind the hind joint
    hmx = -half - half * c2
    hmy = half * s2
    pos[..., 4, 0] = hmx + w * s2
    pos[..., 4, 1] = hmy + w * c2
    pos[..., 5, 0] = hmx - w * s2
    pos[..., 5, 1] = hmy - w * c2
    return pos


def foot_jacobians_array(params: HexapodParams, alpha: np.ndarray) -> np.ndarray:
    """d(foot position)/d(alpha1, alpha2), shape (..., 6, 2, 2)."""
    alpha = _as_shape_array(alpha)
    a1 = alpha[..., 0]
    a2 = alpha[..., 1]
    c1, s1 = np.cos(a1), np.sin(a1)
    c2, s2 = np.cos(a2), np.sin(a2)
    half = 0.5 * params.segment_length
    w = params.half_width

    jac = np.zeros(alpha.shape[:-1] + (N_LEGS, 2, 2))
    jac[..., 0, 0, 0] = -half * s1 - w * c1
    jac[..., 0, 1, 0] = half * c1 - w * s1
    jac[..., 1, 0, 0] = -half * s1 + w * c1
    jac[..., 1, 1, 0] = half * c1 + w * s1
    jac[..., 4, 0, 1] = half * s2 + w * c2
    jac[..., 4, 1, 1] = half * c2 - w * s2
    jac[..., 5, 0, 1] = half * s2 - w * c2
    jac[..., 5, 1, 1] = half * c2 + w * s2
    return jac


def foot_velocities_array(
    params: HexapodParams,
    alpha: np.ndarray,
    dalpha: np.ndarray,
    xi: np.ndarray,
) -> np.ndarray:
    """Foot velocities in the body-aligned frame, shape (..., 6, 2).

    Linear in (xi, dalpha): rigid translation, rotation about the body
    origin, plus the shape-change contribution through the foot Jacobian.
    """
    pos = foot_positions_array(params, alpha)
    jac = foot_jacobians_array(params, alpha)
    dalpha = np.asarray(dalpha, dtype=float)
    xi = np.asarray(xi, dtype=float)
    perp = np.stack([-pos[..., 1], pos[..., 0]], axis=-1)
    shape_part = np.einsum("...fij,...j->...fi", jac, dalpha)
    return xi[..., None, :2] + xi[..., 2, None, None] * perp + shape_part


def foot_positions(params: HexapodParams, shape) -> np.ndarray:
    """Body-frame positions of the six feet for a single shape, (6, 2).

    Raises JointLimitError when the shape exceeds the joint limit.
    """
    arr = validate_shape(params, shape)
    return foot_positions_array(params, arr)


def foot_velocities(params: HexapodParams, shape, dshape, xi) -> np.ndarray:
    """Velocities of the six feet for a single shape/rate/body velocity, (6, 2)."""
    arr = validate_shape(params, shape)
    return foot_velocities_array(
        params, arr, np.asarray(dshape, dtype=float), np.asarray(xi, dtype=float)
    )
