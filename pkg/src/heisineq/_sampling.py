"""Seeded samplers shared by the transport and set-level modules."""

from __future__ import annotations

import numpy as np

from heisineq.ccgeo import cc_norm
from heisineq.hgroup import HPoint, mul

CC_BALL_T_EXTENT = 2.0 / np.pi


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator: the same (seed, key) always gives the same stream."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def box_real(rng, half_widths, m: int) -> np.ndarray:
    h = np.asarray(half_widths, dtype=float)
    return rng.uniform(-1.0, 1.0, (m, h.size)) * h


def cc_ball_real(rng, r: float, n: int, m: int, chunk: int = 4096) -> np.ndarray:
    """Uniform sample of B_CC(0, r) by rejection from |Re, Im zeta_j| <= r, |t| <= 2 r^2/pi.

    The vertical extent comes from max_theta 2 r^2 (theta - sin theta)/theta^2,
    attained at theta = pi.
    """
    h = np.r_[np.full(2 * n, r), CC_BALL_T_EXTENT * r * r]
    out, got = [], 0
    while got < m:
        w = box_real(rng, h, max(chunk, 2 * (m - got)))
        keep = w[cc_norm(HPoint.from_real(w)) <= r]
        out.append(keep)
        got += len(keep)
    return np.concatenate(out)[:m]


def translate(center: HPoint, w: np.ndarray) -> HPoint:
    return mul(center, HPoint.from_real(w))
