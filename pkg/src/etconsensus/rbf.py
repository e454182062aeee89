"""Gaussian RBF networks with norm-ball projected weight adaptation."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NonPositiveGainError

# max over r of |d/dr exp(-r^2/w^2)| is sqrt(2/e)/w, attained at r = w/sqrt(2)
GAUSSIAN_SLOPE = math.sqrt(2.0 / math.e)


@dataclass(frozen=True)
class RbfLayout:
    centers: np.ndarray  # (p, input_dim)
    width: float

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.shape[0] < 1:
            raise ValueError("an RBF layout needs at least one node")
        if not np.all(np.isfinite(c)):
            raise ValueError("centers must be finite")
        if not self.width > 0.0:
            raise ValueError(f"width must be positive, got {self.width}")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def node_count(self):
        return self.centers.shape[0]

    @property
    def input_dim(self):
        return self.centers.shape[1]


def grid_layout(input_dim, node_count, width, box=(-2.0, 2.0)):
    """Uniform grid of centers over ``box``.

    One-dimensional inputs get ``node_count`` evenly spaced centers. For
    higher dimensions the grid spans the first two coordinates
    (``node_count`` must be a perfect square) and the remaining coordinates
    sit at the middle of the box.
    """
    lo, hi = box
    if input_dim == 1:
        return RbfLayout(np.linspace(lo, hi, node_count)[:, None], width)
    side = math.isqrt(node_count)
    if side * side != node_count:
        raise ValueError(f"node_count={node_count} is not a perfect square; cannot build a 2-D grid")
    axis = np.linspace(lo, hi, side)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    centers = np.full((node_count, input_dim), 0.5 * (lo + hi))
    centers[:, 0] = g1.ravel()
    centers[:, 1] = g2.ravel()
    return RbfLayout(centers, width)


def _check_beta(layout, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape[-1:] != (layout.input_dim,):
        raise DimensionMismatchError(f"NN input has shape {beta.shape}, layout expects last dim {layout.input_dim}")
    return beta


def eval_basis(layout, beta):
    """S_b(beta) = exp(-|beta - mu_b|^2 / width^2); batched over leading axes."""
    beta = _check_beta(layout, beta)
    diff = beta[..., None, :] - layout.centers
    return np.exp(-np.sum(diff * diff, axis=-1) / layout.width**2)


def basis_jacobian(layout, beta):
    """d S_b / d beta, shape (..., p, input_dim)."""
    beta = _check_beta(layout, beta)
    diff = beta[..., None, :] - layout.centers
    s = np.exp(-np.sum(diff * diff, axis=-1) / layout.width**2)
    return -2.0 / layout.width**2 * diff * s[..., None]


@dataclass(frozen=True)
class RbfNetwork:
    layout: RbfLayout
    weights: np.ndarray
    weight_bound: float = 10.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape[-1] != self.layout.node_count:
            raise DimensionMismatchError(f"weights shape {w.shape} does not match {self.layout.node_count} nodes")
        if not self.weight_bound > 0.0:
            raise ValueError("weight_bound must be positive")
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, layout, weight_bound=10.0, batch=()):
        return cls(layout, np.zeros(tuple(batch) + (layout.node_count,)), weight_bound)


def eval_network(net, beta):
    return np.sum(net.weights * eval_basis(net.layout, beta), axis=-1)


# retraction lands this many ulps inside the ball, so that norms summed in
# any order (BLAS dot, pairwise reduce) still read <= bound
_INSIDE = 1.0 - 16.0 * np.finfo(float).eps


def project_weights(weights, bound):
    """Radial retraction onto the ball of radius ``bound`` (row-wise for 2-D input)."""
    w = np.asarray(weights, dtype=float)
    norm = np.linalg.norm(w, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > bound, bound * _INSIDE / norm, 1.0)
    return w * scale


def check_gain(gain, p):
    g = np.asarray(gain, dtype=float)
    if g.ndim == 0:
        if not g > 0.0:
            raise NonPositiveGainError(f"adaptation gain must be positive, got {float(g)}")
        return g
    if g.shape != (p, p):
        raise DimensionMismatchError(f"gain matrix shape {g.shape}, expected {(p, p)}")
    if not np.allclose(g, g.T, atol=1e-12, rtol=0.0):
        raise NonPositiveGainError("gain matrix must be symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NonPositiveGainError("gain matrix must be positive definite") from None
    return g


def adapt_weights(weights, S, z, gain, dt, bound):
    """Euler step of W' = gain S z, then projection. Array-level core of adapt_step."""
    z = np.asarray(z, dtype=float)
    drive = S * z[..., None]
    if np.ndim(gain) == 2:
        drive = drive @ gain.T
    else:
        drive = gain * drive
    return project_weights(weights + dt * drive, bound)


def adapt_step(net, S, z, gain, dt):
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    gain = check_gain(gain, net.layout.node_count)
    w = adapt_weights(net.weights, np.asarray(S, dtype=float), z, gain, dt, net.weight_bound)
    return RbfNetwork(net.layout, w, net.weight_bound)


def basis_shift_bound(layout, delta_beta):
    """Certified bound on |S(beta) - S(beta_bar)| for coordinate-wise
    deviations at most ``delta_beta``: sqrt(p) * sqrt(2/e)/width * |delta_beta|."""
    d = np.atleast_1d(np.asarray(delta_beta, dtype=float))
    if np.any(d < 0.0):
        raise ValueError("delta_beta must be nonnegative")
    return math.sqrt(layout.node_count) * GAUSSIAN_SLOPE / layout.width * float(np.linalg.norm(d))
