"""Pure-feedback agent dynamics and the multiplicative sensor-fault model."""
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import FaultFactorOutOfRangeError, NonFiniteDerivativeError, UnknownPlantError


@dataclass(frozen=True)
class PureFeedbackPlant:
    """Chain x_k' = f_k(x_1..x_k, x_{k+1}), with x_{n+1} = u.

    Each ``f[k]`` takes ``(xcheck, nxt)`` where ``xcheck[..., :k+1]`` are the
    first k+1 states; it must broadcast over leading (agent) axes.
    """

    name: str
    f: Sequence[Callable]

    @property
    def order(self):
        return len(self.f)


@dataclass
class PlantState:
    x: np.ndarray
    t: float = 0.0


def _sec5_f1(xc, nxt):
    return xc[..., 0] + nxt + nxt**3 / 5.0


def _sec5_f2(xc, nxt):
    return xc[..., 0] * xc[..., 1] + nxt + nxt**3 / 7.0


PLANTS = {
    "paper_sec5": PureFeedbackPlant("paper_sec5", (_sec5_f1, _sec5_f2)),
}


def get_plant(name):
    try:
        return PLANTS[name]
    except KeyError:
        raise UnknownPlantError(f"unknown plant {name!r}; known: {sorted(PLANTS)}") from None


def plant_derivative(plant, state, u):
    """State rates for one agent (x shape (n,)) or a team (x shape (N, n))."""
    x = np.asarray(state.x if isinstance(state, PlantState) else state, dtype=float)
    u = np.asarray(u, dtype=float)
    n = plant.order
    rates = np.empty_like(x)
    with np.errstate(invalid="ignore", over="ignore"):
        for k in range(n):
            nxt = x[..., k + 1] if k + 1 < n else u
            rates[..., k] = plant.f[k](x[..., : k + 1], nxt)
    if not np.all(np.isfinite(rates)):
        raise NonFiniteDerivativeError(f"non-finite state rate at x={x!r}, u={u!r}")
    return rates


@dataclass(frozen=True)
class SensorFaultModel:
    """Partial-effectiveness sensor fault.

    The factor is 1 up to ``tau_f`` and settles to ``eta`` after a cosine
    blend of width ``ramp_width`` (0 gives a hard switch).
    """

    eta: float
    tau_f: float
    ramp_width: float = 0.1
    eta_lower: float = None
    eta_dot_bound: float = None

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise FaultFactorOutOfRangeError(f"fault factor {self.eta} not in (0, 1]")
        if self.ramp_width < 0.0:
            raise ValueError("ramp_width must be >= 0")
        if self.eta_lower is None:
            object.__setattr__(self, "eta_lower", 0.5 * self.eta)
        if not (0.0 < self.eta_lower < self.eta):
            raise FaultFactorOutOfRangeError(
                f"eta_lower={self.eta_lower} must satisfy 0 < eta_lower < eta={self.eta}"
            )
        if self.eta_dot_bound is None:
            object.__setattr__(self, "eta_dot_bound", 1.1 * self.max_rate() if self.max_rate() > 0 else 1.0)

    def max_rate(self):
        if self.eta == 1.0:
            return 0.0
        if self.ramp_width == 0.0:
            return math.inf
        return (1.0 - self.eta) * math.pi / (2.0 * self.ramp_width)

    def factor(self, t):
        if t <= self.tau_f:
            return 1.0
        s = t - self.tau_f
        if s >= self.ramp_width:
            return self.eta
        return self.eta + (1.0 - self.eta) * 0.5 * (1.0 + math.cos(math.pi * s / self.ramp_width))

    def rate(self, t):
        s = t - self.tau_f
        if s <= 0.0 or s >= self.ramp_width:
            return 0.0
        w = self.ramp_width
        return -(1.0 - self.eta) * 0.5 * math.pi / w * math.sin(math.pi * s / w)


NO_FAULT = SensorFaultModel(eta=1.0, tau_f=math.inf, eta_lower=0.5)


def apply_sensor_fault(x, t, fault):
    if t <= fault.tau_f:
        return x
    eta = fault.factor(t)
    if not (0.0 < eta <= 1.0):
        raise FaultFactorOutOfRangeError(f"fault factor {eta} not in (0, 1] at t={t}")
    return eta * x


def fault_rate_violations(fault, times):
    """Finite-difference |d eta/dt| along ``times`` compared with the bound.

    Returns (max observed rate, number of intervals at or above the bound).
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return 0.0, 0
    etas = np.array([fault.factor(t) for t in times])
    rates = np.abs(np.diff(etas) / np.diff(times))
    return float(rates.max()), int(np.sum(rates >= fault.eta_dot_bound))


@dataclass(frozen=True)
class SectorBounds:
    """Affine sandwich for h(v) = f_k(xcheck, v) - f_k(xcheck, 0).

    Unprimed constants apply for v >= 0, primed ones for v < 0. Infinite
    slopes or offsets disable that side of the check.
    """

    ell_lower: float = 0.0
    ell_upper: float = math.inf
    ell_lower_prime: float = 0.0
    ell_upper_prime: float = math.inf
    phi_k1: float = -math.inf
    phi_k2: float = math.inf
    phi_k1_prime: float = -math.inf
    phi_k2_prime: float = math.inf

    def __post_init__(self):
        if self.ell_lower > self.ell_upper or self.ell_lower_prime > self.ell_upper_prime:
            raise ValueError("lower slope exceeds upper slope")


@dataclass
class SectorReport:
    holds: bool
    worst_violation: float
    worst_point: tuple = field(default=None)


def _affine(slope, offset, v):
    # inf slope with v == 0 must not produce nan
    with np.errstate(invalid="ignore"):
        out = slope * v + offset
    return np.where(np.isnan(out), offset, out)


def check_sector_bounds(plant, level, bounds, box, samples=10_000, seed=0):
    """Sample the nonaffine increment of ``f_level`` and report the worst
    violation of the sector inequalities (positive means violated).

    ``box`` maps ``"state"`` to ``level`` (lo, hi) ranges for the first
    ``level`` states and ``"next"`` to the (lo, hi) range of the next state
    (or input). Box vertices are always included in the sample set.
    """
    k = level - 1
    ranges = list(box["state"]) + [box["next"]]
    if len(ranges) != level + 1:
        raise ValueError(f"box must give {level} state ranges plus one for the next variable")
    lo = np.array([r[0] for r in ranges], dtype=float)
    hi = np.array([r[1] for r in ranges], dtype=float)
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((samples, level + 1))
    corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij")).reshape(level + 1, -1).T
    pts = np.vstack([corners, pts])

    xc = pts[:, :level]
    v = pts[:, level]
    h = plant.f[k](xc, v) - plant.f[k](xc, np.zeros_like(v))
    pos = v >= 0.0
    lower = np.where(pos, _affine(bounds.ell_lower, bounds.phi_k1, v), _affine(bounds.ell_lower_prime, bounds.phi_k1_prime, v))
    upper = np.where(pos, _affine(bounds.ell_upper, bounds.phi_k2, v), _affine(bounds.ell_upper_prime, bounds.phi_k2_prime, v))
    viol = np.maximum(lower - h, h - upper)
    idx = int(np.argmax(viol))
    worst = float(viol[idx])
    return SectorReport(holds=worst <= 0.0, worst_violation=worst, worst_point=tuple(pts[idx]))


def _odd_cubic_bounds(coef):
    # h(v) = v + coef*v^3 on |v| <= V. For v >= 0: v <= h <= (1 + coef V^2) v.
    # For v < 0 the same slopes need offsets: h - v >= -coef V^3 and
    # h - (1 + coef V^2) v = coef v (v^2 - V^2) peaks at v = -V/sqrt(3).
    def bounds(vmax):
        steep = 1.0 + coef * vmax**2
        return SectorBounds(
            ell_lower=1.0, ell_upper=steep, ell_lower_prime=1.0, ell_upper_prime=steep,
            phi_k1=0.0, phi_k2=0.0,
            phi_k1_prime=-coef * vmax**3, phi_k2_prime=2.0 * coef * vmax**3 / (3.0 * math.sqrt(3.0)),
        )
    return bounds


# candidate sector constants per plant and level, as functions of the
# half-width of the next-variable range
SECTOR_BOUNDS = {
    "paper_sec5": (_odd_cubic_bounds(1.0 / 5.0), _odd_cubic_bounds(1.0 / 7.0)),
}
