"""Backstepping cascade with first-order command filters and RBF compensation.

All functions broadcast over a leading agent axis, so one call evaluates the
whole team (an ``(N, n)`` state array) or a single agent (``(1, n)``). The same
formulas serve the nominal loop (fed continuous sensor outputs) and the
event-triggered loop (fed held, last-transmitted values).
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ControllerDivergedError, NonPositiveGainError, StepTooLargeError
from .rbf import RbfNetwork, adapt_weights, check_gain, eval_basis

NOMINAL = "nominal"
EVENT_TRIGGERED = "event_triggered"


@dataclass(frozen=True)
class ControllerGains:
    delta1: float
    gamma: tuple        # levels 1..n
    xi: tuple           # filter time constants, levels 2..n
    lam: tuple          # adaptation gains, levels 1..n (scalar or p x p)

    def __post_init__(self):
        n = len(self.gamma)
        if len(self.xi) != n - 1 or len(self.lam) != n:
            raise ValueError(f"expected {n} gammas, {n - 1} filter constants, {n} adaptation gains")
        if not self.delta1 > 0.0:
            raise NonPositiveGainError("delta1 must be positive")
        for name in ("gamma", "xi"):
            for v in getattr(self, name):
                if not v > 0.0:
                    raise NonPositiveGainError(f"{name} entries must be positive, got {v}")
        for v in self.lam:
            if np.ndim(v) == 0 and not v > 0.0:
                raise NonPositiveGainError(f"adaptation gains must be positive, got {v}")

    @property
    def order(self):
        return len(self.gamma)


@dataclass
class ControllerState:
    networks: list                      # one RbfNetwork per level, weights (N, p)
    filter_outputs: np.ndarray = None   # (N, n-1); None until the cascade first runs
    last_virtuals: np.ndarray = None    # (N, n)

    @property
    def initialized(self):
        return self.filter_outputs is not None


@dataclass
class CascadeOutput:
    v: np.ndarray
    e: np.ndarray
    z: np.ndarray
    alpha: np.ndarray
    alpha_f: np.ndarray          # filter outputs used at this evaluation
    nn_terms: np.ndarray         # W_k^T S_k per level
    state: ControllerState = field(repr=False)


def surface_errors(x_f, filter_outputs):
    """z_1 = x_1, z_k = x_k - alpha_kf for k >= 2."""
    x_f = np.asarray(x_f, dtype=float)
    z = x_f.copy()
    z[..., 1:] -= np.asarray(filter_outputs, dtype=float)
    return z


def virtual_control_1(e, z1, net1, beta1, gains):
    nn = 0.0 if net1 is None else np.sum(net1.weights * eval_basis(net1.layout, beta1), axis=-1)
    return -gains.delta1 * e - (gains.gamma[0] + 1.0) * z1 - nn


def virtual_control_k(z_k, z_km1, net_k, beta_k, gains, k):
    if not 2 <= k <= gains.order:
        raise ValueError(f"level {k} outside 2..{gains.order}")
    nn = 0.0 if net_k is None else np.sum(net_k.weights * eval_basis(net_k.layout, beta_k), axis=-1)
    return -(gains.gamma[k - 1] + 1.0) * z_k - z_km1 - nn


def control_output(controller, gains=None):
    return controller.last_virtuals[..., -1]


def filter_step(alpha_f, alpha_in, xi, dt):
    """One forward-Euler step of xi * a_f' + a_f = a_in."""
    if dt > xi:
        raise StepTooLargeError(f"dt={dt} exceeds filter time constant {xi}")
    return alpha_f + dt * (alpha_in - alpha_f) / xi


def nn_input(own, neighbor_mean, level):
    """NN input for ``level``: the first state for level 1; the first ``level``
    states plus the neighbors' mean first state above that."""
    if level == 1:
        return own[..., :1]
    return np.concatenate([own[..., :level], np.asarray(neighbor_mean)[..., None]], axis=-1)


def nn_input_deviation(level, delta_x, delta_xj):
    """Coordinate-wise bound on |beta - beta_bar| implied by the thresholds."""
    if level == 1:
        return np.array([delta_x[0]], dtype=float)
    return np.array(list(delta_x[:level]) + [delta_xj], dtype=float)


def init_controller(layouts, n_agents, weight_bounds):
    nets = [RbfNetwork.zeros(lay, wb, batch=(n_agents,)) for lay, wb in zip(layouts, weight_bounds)]
    return ControllerState(networks=nets)


def evaluate_chain(own, bcast_first, adjacency, degrees, neighbor_mean, networks, filter_outputs, gains):
    """Evaluate e, z, alpha level by level without touching any state.

    ``filter_outputs=None`` applies the initialization rule alpha_kf = alpha_{k-1}.
    Returns (e, z, alpha, alpha_f, S list, nn_terms).
    """
    n = gains.order
    e = degrees * own[..., 0] - bcast_first @ adjacency.T
    nbr = bcast_first @ neighbor_mean.T
    z = np.empty_like(own)
    alpha = np.empty_like(own)
    alpha_f = np.empty(own.shape[:-1] + (n - 1,))
    nn_terms = np.empty_like(own)
    basis = []
    for k in range(1, n + 1):
        net = networks[k - 1]
        S = eval_basis(net.layout, nn_input(own, nbr, k))
        nn = np.sum(net.weights * S, axis=-1)
        basis.append(S)
        nn_terms[..., k - 1] = nn
        if k == 1:
            z[..., 0] = own[..., 0]
            alpha[..., 0] = -gains.delta1 * e - (gains.gamma[0] + 1.0) * z[..., 0] - nn
        else:
            af = alpha[..., k - 2] if filter_outputs is None else filter_outputs[..., k - 2]
            alpha_f[..., k - 2] = af
            z[..., k - 1] = own[..., k - 1] - af
            alpha[..., k - 1] = -(gains.gamma[k - 1] + 1.0) * z[..., k - 1] - z[..., k - 2] - nn
    return e, z, alpha, alpha_f, basis, nn_terms


def controller_cascade(mode, own, bcast_first, graph, controller, gains, dt, neighbor_mean=None):
    """Run the cascade for all agents and advance filters and weights.

    ``own`` is (N, n): the signals each agent's controller sees of itself
    (continuous sensor outputs in nominal mode, held samples otherwise).
    ``bcast_first`` is (N,): every agent's first state as its neighbors see it.
    Returns a CascadeOutput holding v and the updated ControllerState.
    """
    if mode not in (NOMINAL, EVENT_TRIGGERED):
        raise ValueError(f"unknown mode {mode!r}")
    own = np.atleast_2d(np.asarray(own, dtype=float))
    bcast_first = np.atleast_1d(np.asarray(bcast_first, dtype=float))
    if neighbor_mean is None:
        from .graph import neighbor_mean_matrix
        neighbor_mean = neighbor_mean_matrix(graph)
    e, z, alpha, alpha_f, basis, nn_terms = evaluate_chain(
        own, bcast_first, graph.adjacency, graph.degrees, neighbor_mean,
        controller.networks, controller.filter_outputs, gains,
    )
    if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(z))):
        raise ControllerDivergedError("non-finite virtual control")

    n = gains.order
    new_filters = np.empty_like(alpha_f)
    for k in range(2, n + 1):
        new_filters[..., k - 2] = filter_step(alpha_f[..., k - 2], alpha[..., k - 2], gains.xi[k - 2], dt)
    new_nets = []
    for k, net in enumerate(controller.networks):
        gain = check_gain(gains.lam[k], net.layout.node_count)
        w = adapt_weights(net.weights, basis[k], z[..., k], gain, dt, net.weight_bound)
        new_nets.append(replace(net, weights=w))
    state = ControllerState(networks=new_nets, filter_outputs=new_filters, last_virtuals=alpha)
    return CascadeOutput(v=alpha[..., -1], e=e, z=z, alpha=alpha, alpha_f=alpha_f, nn_terms=nn_terms, state=state)


@dataclass
class Lemma3Bounds:
    delta_e: float
    dz: np.ndarray        # levels 1..n
    dalpha: np.ndarray    # levels 1..n
    dalpha_f: np.ndarray  # levels 2..n


def lemma3_bounds(gains, delta_x, delta_xj, ds, degree, weight_bounds, filter_init_gap=0.0):
    """Deviation constants between the continuous and sampled signal chains.

    delta_x: per-level local thresholds; delta_xj: neighbor first-state
    threshold; ds: per-level basis-shift bounds; weight_bounds: per-level
    weight-norm bounds; filter_init_gap: |alpha_kf(0) - alpha_bar_kf(0)| per
    level 2..n (scalar broadcasts).
    """
    n = gains.order
    gaps = np.broadcast_to(np.asarray(filter_init_gap, dtype=float), (max(n - 1, 0),))
    delta_e = degree * (delta_x[0] + delta_xj)
    dz = np.zeros(n)
    da = np.zeros(n)
    daf = np.zeros(max(n - 1, 0))
    dz[0] = delta_x[0]
    da[0] = gains.delta1 * delta_e + (gains.gamma[0] + 1.0) * dz[0] + weight_bounds[0] * ds[0]
    for k in range(2, n + 1):
        daf[k - 2] = gaps[k - 2] + da[k - 2]
        dz[k - 1] = delta_x[k - 1] + daf[k - 2]
        da[k - 1] = (gains.gamma[k - 1] + 1.0) * dz[k - 1] + dz[k - 2] + weight_bounds[k - 1] * ds[k - 1]
    return Lemma3Bounds(delta_e=delta_e, dz=dz, dalpha=da, dalpha_f=daf)
