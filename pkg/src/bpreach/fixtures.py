"""Reference systems and hand-built policies used by the examples and tests."""

from __future__ import annotations

import numpy as np

from .geometry import HyperRectangle
from .network import Layer, MlpNetwork, linear_network, make_clip_network
from .systems import LtiSystem

# Discrete LQR gain for the double integrator with Q = I, R = 1, rounded.
DOUBLE_INTEGRATOR_GAIN = np.array([[-0.43, -1.03]])


def double_integrator() -> LtiSystem:
    """Exact zero-order-hold discretisation of ``p'' = u`` with ``t_s = 1`` and ``|u| <= 1``."""
    return LtiSystem(
        A=[[1.0, 1.0], [0.0, 1.0]],
        B=[[0.5], [1.0]],
        c=[0.0, 0.0],
        u_lb=[-1.0],
        u_ub=[1.0],
        t_s=1.0,
    )


def double_integrator_policy() -> MlpNetwork:
    return make_clip_network(DOUBLE_INTEGRATOR_GAIN, [-1.0], [1.0])


def double_integrator_target() -> HyperRectangle:
    return HyperRectangle([4.5, -0.25], [5.0, 0.25])


def ground_robot() -> LtiSystem:
    """Feedback-linearised unicycle as two single integrators, ``|v| <= 1`` per axis."""
    return LtiSystem(
        A=np.eye(2),
        B=np.eye(2),
        c=[0.0, 0.0],
        u_lb=[-1.0, -1.0],
        u_ub=[1.0, 1.0],
        t_s=1.0,
    )


def avoidance_policy(gain_x: float = 0.5, lift: float = 0.5, hold_x: float = -2.5,
                     repel: float = 1.0, v_max: float = 1.0) -> MlpNetwork:
    """Obstacle-avoiding velocity policy for :func:`ground_robot`.

    ``v_y = clip(repel * y)`` pushes the robot away from the x-axis, and
    ``v_x = clip(lift * |y| + gain_x * (hold_x - x))`` lets it advance only as
    far as its distance from the axis allows. Robots on the axis settle at
    ``x = hold_x``. Both clips use ``lo + relu(p - lo) - relu(p - hi)``.
    """
    # hidden 1: relu(x), relu(-x), relu(y), relu(-y)
    l1 = Layer([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], np.zeros(4), "relu")
    pre_w = np.array([[-gain_x, gain_x, lift, lift], [0.0, 0.0, repel, -repel]])
    pre_b = np.array([gain_x * hold_x, 0.0])
    lo = np.full(2, -v_max)
    hi = np.full(2, v_max)
    l2 = Layer(np.vstack([pre_w, pre_w]), np.concatenate([pre_b - lo, pre_b - hi]), "relu")
    l3 = Layer(np.hstack([np.eye(2), -np.eye(2)]), lo, "linear")
    return MlpNetwork([l1, l2, l3])


def avoidance_controller(xs, gain_x: float = 0.5, lift: float = 0.5, hold_x: float = -2.5,
                         repel: float = 1.0, v_max: float = 1.0) -> np.ndarray:
    """Closed-form twin of :func:`avoidance_policy` for cross-checking."""
    xs = np.atleast_2d(xs)
    vx = lift * np.abs(xs[:, 1]) + gain_x * (hold_x - xs[:, 0])
    vy = repel * xs[:, 1]
    return np.clip(np.stack([vx, vy], axis=1), -v_max, v_max)


def obstacle() -> HyperRectangle:
    return HyperRectangle([-1.0, -1.0], [1.0, 1.0])


def initial_set(variant: str = "bifurcating") -> HyperRectangle:
    """``B_inf([-5, y0], 0.5)``; ``y0 = 0`` on the decision boundary, ``y0 = 1`` nominal."""
    centers = {"bifurcating": [-5.0, 0.0], "nominal": [-5.0, 1.0]}
    if variant not in centers:
        raise ValueError(f"unknown variant {variant!r}")
    return HyperRectangle.from_center(centers[variant], [0.5, 0.5])


def zero_policy(n_x: int = 2, n_u: int = 2) -> MlpNetwork:
    return linear_network(np.zeros((n_u, n_x)), np.zeros(n_u))


def constant_policy(value, n_x: int = 2) -> MlpNetwork:
    value = np.asarray(value, dtype=float)
    return linear_network(np.zeros((value.size, n_x)), value)
