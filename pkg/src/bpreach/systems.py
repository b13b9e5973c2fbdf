"""Discrete-time linear dynamics ``x+ = A x + B u + c`` with a box control set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HyperRectangle


@dataclass(frozen=True)
class LtiSystem:
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    u_lb: np.ndarray
    u_ub: np.ndarray
    t_s: float = 1.0  # seconds, informational only

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        n_x = A.shape[0]
        c = np.zeros(n_x) if self.c is None else np.array(self.c, dtype=float).reshape(-1)
        u_lb = np.array(self.u_lb, dtype=float).reshape(-1)
        u_ub = np.array(self.u_ub, dtype=float).reshape(-1)
        if A.shape != (n_x, n_x):
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != n_x:
            raise ValueError(f"B has {B.shape[0]} rows, expected {n_x}")
        n_u = B.shape[1]
        if c.size != n_x:
            raise ValueError(f"c has {c.size} entries, expected {n_x}")
        if u_lb.size != n_u or u_ub.size != n_u:
            raise ValueError(f"control bounds must have {n_u} entries")
        if np.any(u_lb > u_ub):
            raise ValueError("u_lb must not exceed u_ub")
        for name, arr in (("A", A), ("B", B), ("c", c), ("u_lb", u_lb), ("u_ub", u_ub)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "u_lb", u_lb)
        object.__setattr__(self, "u_ub", u_ub)
        object.__setattr__(self, "t_s", float(self.t_s))

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def control_set(self) -> HyperRectangle:
        return HyperRectangle(self.u_lb, self.u_ub)

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Batched one-step map; rows of ``x`` and ``u`` are states and controls."""
        return x @ self.A.T + u @ self.B.T + self.c
