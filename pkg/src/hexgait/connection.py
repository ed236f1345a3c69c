"""Ground reaction forces and the quasi-static force balance.

Each stance foot contributes a regularized Coulomb friction force opposing
its sliding velocity, with the body weight shared equally among stance
feet.  For a given shape and shape velocity, the body velocity is the root
of the three-component net force/torque residual; probing that root with
unit shape velocities yields the 3x2 local connection matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    BodyVelocity,
    ContactPattern,
    DegeneratePatternError,
    HexapodParams,
    N_LEGS,
    ShapePoint,
    foot_jacobians_array,
    foot_positions_array,
    foot_velocities_array,
    validate_shape,
)

_FD_STEP = 1e-6  # central-difference step for the residual Jacobian in xi


class SolverError(RuntimeError):
    """Force-balance solve failed to reach the residual tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverSettings:
    """Newton solve controls.

    ``eps_reg`` of None inherits the friction regularizer from the model
    parameters.  ``residual_tol`` is an absolute bound on the mixed
    force/torque 2-norm.
    """

    residual_tol: float = 1e-9
    max_iters: int = 100
    eps_reg: float | None = None

    def __post_init__(self) -> None:
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def effective_eps(self, params: HexapodParams) -> float:
        return params.eps_reg if self.eps_reg is None else self.eps_reg


@dataclass(frozen=True)
class ConnectionSample:
    """Local connection at one shape under one contact pattern.

    ``A`` is 3x2: rows are forward/lateral/rotational body-velocity
    responses, columns correspond to unit velocity of alpha1 and alpha2.
    """

    shape: ShapePoint
    pattern: ContactPattern
    A: np.ndarray
    residual: float
    pattern_index: int | None = None


@dataclass(frozen=True)
class FootState:
    leg_id: int
    position: np.ndarray
    velocity: np.ndarray
    force: np.ndarray


def friction_forces(
    params: HexapodParams,
    velocities: np.ndarray,
    stance: np.ndarray,
    eps: float,
) -> np.ndarray:
    """Regularized Coulomb force per foot, (..., 6, 2).

    F_i = -mu * N_i * v_i / sqrt(|v_i|^2 + eps^2) on stance feet with
    N_i = m g / (stance count); zero on aerial feet.
    """
    stance = np.asarray(stance, dtype=bool)
    counts = stance.sum(axis=-1)
    if np.any(counts == 0):
        raise DegeneratePatternError("contact pattern has no stance feet")
    coef = params.mu * params.mass * params.gravity / counts
    speed = np.sqrt((velocities**2).sum(axis=-1) + eps * eps)
    scale = -(coef[..., None] / speed) * stance
    return scale[..., None] * velocities


def _solve_batch(
    params: HexapodParams,
    alphas: np.ndarray,
    dalphas: np.ndarray,
    stance: np.ndarray,
    settings: SolverSettings,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Damped Newton on the force/torque residual for a batch of problems.

    alphas, dalphas: (B, 2); stance: (B, 6) boolean.  Returns
    (xi (B, 3), residual norms (B,), iterations).  Does not raise on
    non-convergence; callers check the returned norms.
    """
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    dalphas = np.atleast_2d(np.asarray(dalphas, dtype=float))
    stance = np.atleast_2d(np.asarray(stance, dtype=bool))
    n = alphas.shape[0]

    pos = foot_positions_array(params, alphas)
    jac = foot_jacobians_array(params, alphas)
    shape_part = np.einsum("bfij,bj->bfi", jac, dalphas)
    perp = np.stack([-pos[..., 1], pos[..., 0]], axis=-1)

    counts = stance.sum(axis=1)
    if np.any(counts == 0):
        raise DegeneratePatternError("contact pattern has no stance feet")
    coef = params.mu * params.mass * params.gravity / counts
    eps2 = settings.effective_eps(params) ** 2

    def residual(xi: np.ndarray) -> np.ndarray:
        v = xi[:, None, :2] + xi[:, 2, None, None] * perp + shape_part
        speed = np.sqrt((v * v).sum(axis=-1) + eps2)
        scale = -(coef[:, None] / speed) * stance
        f = scale[..., None] * v
        net = f.sum(axis=1)
        torque = (pos[..., 0] * f[..., 1] - pos[..., 1] * f[..., 0]).sum(axis=1)
        return np.concatenate([net, torque[:, None]], axis=1)

    tol = settings.residual_tol
    xi = np.zeros((n, 3))
    res = residual(xi)
    norm = np.linalg.norm(res, axis=1)
    iters = 0
    while iters < settings.max_iters and norm.max() > tol:
        iters += 1
        jmat = np.empty((n, 3, 3))
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = _FD_STEP
            jmat[:, :, k] = (residual(xi + dx) - residual(xi - dx)) / (2.0 * _FD_STEP)
        try:
            step = np.linalg.solve(jmat, -res[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -np.einsum("bij,bj->bi", np.linalg.pinv(jmat), res)

        active = norm > tol
        scale = np.where(active, 1.0, 0.0)
        trial = xi
        trial_res = res
        trial_norm = norm
        for _ in range(60):
            trial = xi + scale[:, None] * step
            trial_res = residual(trial)
            trial_norm = np.linalg.norm(trial_res, axis=1)
            bad = active & (trial_norm > norm)
            if not bad.any():
                break
            scale[bad] *= 0.5
        xi, res, norm = trial, trial_res, trial_norm
    return xi, norm, iters


def solve_body_velocity(
    params: HexapodParams,
    shape,
    dshape,
    pattern: ContactPattern,
    settings: SolverSettings | None = None,
) -> BodyVelocity:
    """Body velocity that zeroes net force and torque about the body origin.

    Raises SolverError when the Newton iteration does not reach the
    residual tolerance, DegeneratePatternError for an empty stance set.
    """
    settings = settings or SolverSettings()
    arr = validate_shape(params, shape)
    xi, norm, iters = _solve_batch(
        params,
        arr[None, :],
        np.asarray(dshape, dtype=float)[None, :],
        pattern.stance_array()[None, :],
        settings,
    )
    if norm[0] > settings.residual_tol:
        raise SolverError(
            f"force balance did not converge (residual {norm[0]:.3e} after "
            f"{iters} iterations) at shape {arr.tolist()}, pattern {pattern}",
            residual=float(norm[0]),
            iterations=iters,
        )
    return BodyVelocity(*xi[0])


def grf(
    params: HexapodParams,
    shape,
    dshape,
    xi,
    pattern: ContactPattern,
) -> list[FootState]:
    """Per-foot state (position, velocity, force) at given body velocity.

    Aerial feet carry zero force; their kinematic velocity is still
    reported.
    """
    arr = validate_shape(params, shape)
    stance = pattern.stance_array()
    if pattern.stance_count == 0:
        raise DegeneratePatternError("contact pattern has no stance feet")
    pos = foot_positions_array(params, arr)
    vel = foot_velocities_array(
        params, arr, np.asarray(dshape, dtype=float), np.asarray(xi, dtype=float)
    )
    forces = friction_forces(params, vel, stance, params.eps_reg)
    return [
        FootState(leg_id=i, position=pos[i], velocity=vel[i], force=forces[i])
        for i in range(N_LEGS)
    ]


def local_connection(
    params: HexapodParams,
    shape,
    pattern: ContactPattern,
    settings: SolverSettings | None = None,
    pattern_index: int | None = None,
) -> ConnectionSample:
    """Local connection matrix at one shape: column k is the body velocity
    produced by unit velocity of shape coordinate k."""
    settings = settings or SolverSettings()
    arr = validate_shape(params, shape)
    alphas = np.tile(arr, (2, 1))
    dalphas = np.eye(2)
    stance = np.tile(pattern.stance_array(), (2, 1))
    xi, norm, iters = _solve_batch(params, alphas, dalphas, stance, settings)
    worst = float(norm.max())
    if worst > settings.residual_tol:
        raise SolverError(
            f"connection solve did not converge (residual {worst:.3e}) at "
            f"shape {arr.tolist()}, pattern {pattern}",
            residual=worst,
            iterations=iters,
        )
    return ConnectionSample(
        shape=ShapePoint(*arr),
        pattern=pattern,
        A=xi.T.copy(),
        residual=worst,
        pattern_index=pattern_index,
    )
