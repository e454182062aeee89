"""Closed-loop simulation of the networked agents.

Plants are integrated with fixed-step RK4 under a held input; controller,
triggers, filters and weight adaptation update once per step.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import trigger as trg
from .config import ScenarioConfig
from .controller import (
    EVENT_TRIGGERED,
    NOMINAL,
    ControllerGains,
    controller_cascade,
    evaluate_chain,
    filter_step,
    init_controller,
    lemma3_bounds,
    nn_input_deviation,
)
from .errors import DivergedError, EtcError, NonFiniteError
from .graph import build_graph, consensus_error, neighbor_mean_matrix
from .plant import SensorFaultModel, get_plant, plant_derivative
from .rbf import RbfNetwork, basis_shift_bound, grid_layout


def rk4_step(fun, t, y, dt):
    k1 = fun(t, y)
    k2 = fun(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = fun(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = fun(t + dt, y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(fun, t0, y0, dt, steps):
    y = np.asarray(y0, dtype=float)
    out = np.empty((steps + 1,) + y.shape)
    out[0] = y
    for k in range(steps):
        y = rk4_step(fun, t0 + k * dt, y, dt)
        out[k + 1] = y
    return out


@dataclass
class Scenario:
    """Runtime objects built from a ScenarioConfig."""

    config: ScenarioConfig
    graph: object
    plant: object
    faults: list
    gains: ControllerGains
    layouts: list
    weight_bounds: tuple
    x0: np.ndarray
    dt: float
    steps: int
    neighbor_mean: np.ndarray

    @property
    def n_agents(self):
        return self.graph.n_agents

    @property
    def order(self):
        return self.plant.order


def build_scenario(cfg):
    n = cfg.n_agents
    plant = get_plant(cfg.plant.name)
    graph = build_graph(cfg.graph.adjacency)
    f = cfg.fault
    etas = f.eta if len(f.eta) == n else f.eta * n
    faults = [
        SensorFaultModel(eta=e, tau_f=f.tau_f, ramp_width=f.ramp_width, eta_lower=f.eta_lower, eta_dot_bound=f.eta_dot_bound)
        for e in etas
    ]
    g = cfg.gains
    gains = ControllerGains(delta1=g.delta1, gamma=tuple(g.gamma), xi=tuple(g.xi), lam=tuple(g.lam))
    r = cfg.rbf
    # level 1 sees its own first state; level k >= 2 sees k own states plus the neighbor mean
    layouts = [grid_layout(1 if k == 1 else k + 1, r.node_count, r.width, tuple(r.box)) for k in range(1, plant.order + 1)]
    steps = int(round(cfg.sim.t_end / cfg.sim.dt))
    return Scenario(
        config=cfg,
        graph=graph,
        plant=plant,
        faults=faults,
        gains=gains,
        layouts=layouts,
        weight_bounds=(r.weight_bound,) * plant.order,
        x0=cfg.x0(),
        dt=cfg.sim.dt,
        steps=max(steps, 1),
        neighbor_mean=neighbor_mean_matrix(graph),
    )


@dataclass
class SimResult:
    mode: str
    t: np.ndarray              # (K+1,)
    x: np.ndarray              # (K+1, N, n) true states
    xf: np.ndarray             # sensor outputs
    x_held: np.ndarray         # what each controller used of its own states
    bcast: np.ndarray          # first states as seen by neighbors
    u: np.ndarray              # (K+1, N) actuated input
    v: np.ndarray              # commanded input
    e: np.ndarray              # consensus error from continuous sensor outputs
    e_used: np.ndarray         # consensus error the controller used
    z: np.ndarray              # (K+1, N, n) surface errors the controller used
    alpha: np.ndarray          # virtual controls the controller used
    alpha_f: np.ndarray        # (K+1, N, n-1) filter outputs the controller used
    weight_norms: np.ndarray   # (K+1, N, n)
    weights: list = None       # per level (K+1, N, p) when recorded
    channels: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    nominal: "SimResult" = None  # twin mode companion

    @property
    def n_steps(self):
        return len(self.t) - 1


class ClosedLoop:
    """One closed loop (nominal or event-triggered) stepped on a fixed grid."""

    def __init__(self, scenario, mode, record_weights=False):
        if mode not in (NOMINAL, EVENT_TRIGGERED):
            raise ValueError(f"unknown loop mode {mode!r}")
        self.sc = scenario
        self.mode = mode
        self.k = 0
        self.t = 0.0
        self.x = scenario.x0.copy()
        self.ctrl = init_controller(scenario.layouts, scenario.n_agents, scenario.weight_bounds)
        self.u = np.zeros(scenario.n_agents)
        self._pending = None
        self.channels = []
        if mode == EVENT_TRIGGERED:
            th = scenario.config.triggers
            N, n = scenario.n_agents, scenario.order
            self.self_ch = [[trg.TriggerChannel(th.dx_self, trg.ChannelLabel(i, trg.STATE, l + 1)) for l in range(n)] for i in range(N)]
            self.nb_ch = [[trg.TriggerChannel(th.dx_neighbor, trg.ChannelLabel(i, trg.NEIGHBOR, l + 1)) for l in range(n)] for i in range(N)]
            self.in_ch = [trg.TriggerChannel(th.du, trg.ChannelLabel(i, trg.INPUT, 0)) for i in range(N)]
            for i in range(N):
                self.channels += self.self_ch[i] + self.nb_ch[i] + [self.in_ch[i]]
        self._alloc(record_weights)

    def _alloc(self, record_weights):
        K, N, n = self.sc.steps, self.sc.n_agents, self.sc.order
        shape3 = (K + 1, N, n)
        self.rec = {
            "t": np.arange(K + 1) * self.sc.dt,
            "x": np.empty(shape3), "xf": np.empty(shape3), "x_held": np.empty(shape3), "bcast": np.empty(shape3),
            "u": np.empty((K + 1, N)), "v": np.empty((K + 1, N)), "e": np.empty((K + 1, N)), "e_used": np.empty((K + 1, N)),
            "z": np.empty(shape3), "alpha": np.empty(shape3), "alpha_f": np.empty((K + 1, N, n - 1)),
            "weight_norms": np.empty(shape3),
        }
        self.rec_weights = [np.empty((K + 1, N, lay.node_count)) for lay in self.sc.layouts] if record_weights else None

    def sense(self):
        etas = np.array([f.factor(self.t) if self.t > f.tau_f else 1.0 for f in self.sc.faults])
        return etas[:, None] * self.x

    def control(self):
        """Sense, trigger, evaluate the cascade and actuate at the current time."""
        sc, k, t = self.sc, self.k, self.t
        xf = self.sense()
        if self.mode == NOMINAL:
            own, bcast = xf, xf
        else:
            N, n = xf.shape
            own = np.empty_like(xf)
            bcast = np.empty_like(xf)
            for i in range(N):
                for l in range(n):
                    val = float(xf[i, l])
                    own[i, l] = trg.check_and_update(self.self_ch[i][l], val, t)[0]
                    bcast[i, l] = trg.check_and_update(self.nb_ch[i][l], val, t)[0]
        out = controller_cascade(self.mode, own, bcast[:, 0], sc.graph, self.ctrl, sc.gains, sc.dt, sc.neighbor_mean)
        v = out.v
        if self.mode == NOMINAL:
            u = v.copy()
        else:
            u = np.array([trg.check_and_update(self.in_ch[i], float(v[i]), t)[0] for i in range(len(v))])
        r = self.rec
        r["x"][k] = self.x
        r["xf"][k] = xf
        r["x_held"][k] = own
        r["bcast"][k] = bcast
        r["u"][k] = u
        r["v"][k] = v
        r["e"][k] = consensus_error(sc.graph, xf[:, 0])
        r["e_used"][k] = out.e
        r["z"][k] = out.z
        r["alpha"][k] = out.alpha
        r["alpha_f"][k] = out.alpha_f
        for lvl, net in enumerate(self.ctrl.networks):
            r["weight_norms"][k, :, lvl] = np.linalg.norm(net.weights, axis=-1)
            if self.rec_weights is not None:
                self.rec_weights[lvl][k] = net.weights
        self.u = u
        self._pending = out.state

    def advance(self):
        """Integrate the plants one step under the held input."""
        sc = self.sc
        u = self.u
        self.x = rk4_step(lambda _t, y: plant_derivative(sc.plant, y, u), self.t, self.x, sc.dt)
        self.ctrl = self._pending
        self.k += 1
        self.t = self.k * sc.dt
        if not np.all(np.isfinite(self.x)):
            raise NonFiniteError(f"non-finite state at t={self.t:.6g}", t=self.t)
        limit = sc.config.sim.divergence_limit
        if np.max(np.abs(self.x)) > limit:
            raise DivergedError(f"|x| exceeded divergence limit {limit} at t={self.t:.6g}", t=self.t)

    def step(self):
        self.control()
        self.advance()

    def result(self):
        r = self.rec
        return SimResult(mode=self.mode, weights=self.rec_weights, channels=self.channels, **r)


def step(loop):
    """Advance a ClosedLoop by one grid step (sense, trigger, control, integrate)."""
    loop.step()
    return loop


def run(cfg, record_weights=None):
    """Simulate the configured scenario over its whole horizon.

    In twin mode the event-triggered result is returned with the nominal
    loop, run side by side from identical initial conditions, attached as
    ``result.nominal``.
    """
    sc = build_scenario(cfg)
    if record_weights is None:
        record_weights = cfg.sim.record_weights
    mode = cfg.sim.mode
    loops = {}
    if mode in ("event_triggered", "twin"):
        loops[EVENT_TRIGGERED] = ClosedLoop(sc, EVENT_TRIGGERED, record_weights)
    if mode in ("nominal", "twin"):
        loops[NOMINAL] = ClosedLoop(sc, NOMINAL, record_weights)
    try:
        for _ in range(sc.steps):
            for lp in loops.values():
                lp.step()
        for lp in loops.values():
            lp.control()
    except DivergedError:
        raise
    except (EtcError, ArithmeticError) as exc:
        t = next(iter(loops.values())).t
        raise DivergedError(f"{type(exc).__name__} at t={t:.6g}: {exc}", t=t) from exc
    results = {m: lp.result() for m, lp in loops.items()}
    for res in results.values():
        res.metrics = summarize(res, sc)
    if mode == "twin":
        main = results[EVENT_TRIGGERED]
        main.nominal = results[NOMINAL]
        main.metrics["twin_gap_x"] = float(np.max(np.abs(main.x - main.nominal.x)))
        main.metrics["twin_gap_u"] = float(np.max(np.abs(main.u - main.nominal.u)))
        return main
    return next(iter(results.values()))


def signal_rate_bound(signal, dt):
    """Largest |finite-difference rate| of a sampled signal."""
    signal = np.asarray(signal, dtype=float)
    if signal.size < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(signal))) / dt)


def monitored_signal(result, label):
    if label.kind == trg.INPUT:
        return result.v[:, label.agent]
    return result.xf[:, label.agent, label.level - 1]


def zeno_report(result, dt):
    rows = []
    for ch in result.channels:
        rate = signal_rate_bound(monitored_signal(result, ch.label), dt)
        cert = trg.zeno_certificate(ch, rate) if rate > 0.0 else math.inf
        stats = trg.inter_event_stats(ch)
        rows.append({
            "agent": ch.label.agent, "kind": ch.label.kind, "level": ch.label.level,
            "threshold": ch.threshold, "count": stats.count, "min_gap": stats.min_gap,
            "mean_gap": stats.mean_gap, "rate_bound": rate, "certificate": cert,
            "flagged": stats.min_gap < cert,
        })
    return rows


def tail_window(t_end):
    return 0.75 * t_end, t_end


def summarize(result, scenario):
    t = result.t
    t_end = t[-1]
    lo, hi = tail_window(t_end)
    tail = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    early = t <= min(1.0, t_end) + 1e-12
    m = {
        "t_end": float(t_end),
        "tail_window": [float(lo), float(hi)],
        "tail_max_abs_e": float(np.max(np.abs(result.e[tail]))),
        "early_max_abs_e": float(np.max(np.abs(result.e[early]))),
        "max_abs_x": [float(v) for v in np.max(np.abs(result.x), axis=(0, 1))],
        "max_abs_u": float(np.max(np.abs(result.u))),
        "max_weight_norm": [float(v) for v in np.max(result.weight_norms, axis=(0, 1))],
    }
    if result.channels:
        counts = {}
        level_counts = {}
        min_gaps = {}
        for ch in result.channels:
            kind, lvl = ch.label.kind, ch.label.level
            counts[kind] = counts.get(kind, 0) + ch.count
            key = f"{kind}{lvl}" if kind != trg.INPUT else kind
            level_counts[key] = level_counts.get(key, 0) + ch.count
            gap = trg.inter_event_stats(ch).min_gap
            min_gaps[kind] = min(min_gaps.get(kind, math.inf), gap)
        m["event_counts"] = counts
        m["event_counts_by_level"] = level_counts
        m["min_gap"] = min_gaps
        m["zeno"] = zeno_report(result, scenario.dt)
    return m


@dataclass
class ShadowChains:
    z: np.ndarray
    alpha: np.ndarray
    alpha_f: np.ndarray


def shadow_nominal(result, cfg):
    """Recompute the continuous-signal chain along a recorded run.

    Uses the run's sensor outputs and weight trajectories; only the
    z/alpha/filter chain is re-derived, with its own filter state.
    """
    if result.n_steps < 0 or len(result.t) == 0:
        return ShadowChains(np.empty((0,)), np.empty((0,)), np.empty((0,)))
    if result.weights is None:
        raise ValueError("shadow replay needs a run recorded with record_weights=True")
    sc = build_scenario(cfg)
    K1, N, n = result.xf.shape
    z = np.empty((K1, N, n))
    alpha = np.empty((K1, N, n))
    alpha_f = np.empty((K1, N, n - 1))
    filters = None
    for k in range(K1):
        xf = result.xf[k]
        nets = [RbfNetwork(lay, result.weights[l][k], sc.weight_bounds[l]) for l, lay in enumerate(sc.layouts)]
        _e, zk, ak, afk, _S, _nn = evaluate_chain(
            xf, xf[:, 0], sc.graph.adjacency, sc.graph.degrees, sc.neighbor_mean, nets, filters, sc.gains
        )
        z[k], alpha[k], alpha_f[k] = zk, ak, afk
        filters = np.empty_like(afk)
        for lvl in range(2, n + 1):
            filters[:, lvl - 2] = filter_step(afk[:, lvl - 2], ak[:, lvl - 2], sc.gains.xi[lvl - 2], sc.dt)
    return ShadowChains(z=z, alpha=alpha, alpha_f=alpha_f)


@dataclass
class Lemma3Report:
    violations_strict: int
    violations_beyond_slack: int
    max_ratio: float            # max over signals of |deviation| / strict bound
    bounds: list                # per agent Lemma3Bounds (strict)
    slack_bounds: list          # per agent, thresholds inflated by one-step change
    max_dev_z: np.ndarray       # (N, n)
    max_dev_alpha: np.ndarray   # (N, n)


def lemma3_check(result, cfg, shadow=None):
    """Compare the sampled chain with the shadow continuous chain against the
    deviation constants, strictly and with one-step evaluation slack."""
    sc = build_scenario(cfg)
    if shadow is None:
        shadow = shadow_nominal(result, cfg)
    th = cfg.triggers
    n = sc.order
    dt = sc.dt
    dev_z = np.abs(shadow.z - result.z)
    dev_a = np.abs(shadow.alpha - result.alpha)
    gap0 = np.abs(shadow.alpha_f[0] - result.alpha_f[0]) if n > 1 else np.zeros((sc.n_agents, 0))
    # one-step change of each monitored sensor signal
    rates = np.array([signal_rate_bound(result.xf[:, :, l], dt) for l in range(n)])
    slack_x = dt * rates
    slack_xj = dt * rates[0]

    strict, slacked = [], []
    v_strict = v_slack = 0
    ratio = 0.0
    for i in range(sc.n_agents):
        d_i = float(sc.graph.degrees[i])
        for which, dx, dxj in (("strict", [th.dx_self] * n, th.dx_neighbor), ("slack", [th.dx_self + s for s in slack_x], th.dx_neighbor + slack_xj)):
            ds = [basis_shift_bound(sc.layouts[k - 1], nn_input_deviation(k, dx, dxj)) for k in range(1, n + 1)]
            b = lemma3_bounds(sc.gains, dx, dxj, ds, d_i, sc.weight_bounds, gap0[i])
            exceed = int(np.sum(dev_z[:, i, :] > b.dz) + np.sum(dev_a[:, i, :] > b.dalpha))
            if which == "strict":
                strict.append(b)
                v_strict += exceed
                ratio = max(ratio, float(np.max(dev_z[:, i, :] / b.dz)), float(np.max(dev_a[:, i, :] / b.dalpha)))
            else:
                slacked.append(b)
                v_slack += exceed
    return Lemma3Report(
        violations_strict=v_strict,
        violations_beyond_slack=v_slack,
        max_ratio=ratio,
        bounds=strict,
        slack_bounds=slacked,
        max_dev_z=dev_z.max(axis=0),
        max_dev_alpha=dev_a.max(axis=0),
    )


def compare_thresholds(cfg, threshold_sets):
    """Run the scenario once per (dx_self, dx_neighbor, du) set.

    Returns one row per set, in input order, with event counts per channel
    kind and the tail consensus residual.
    """
    if len(threshold_sets) < 2:
        raise ValueError("need at least two threshold sets to compare")
    rows = []
    for dxs, dxn, du in threshold_sets:
        c = cfg.with_overrides(triggers={"dx_self": dxs, "dx_neighbor": dxn, "du": du}, sim={"mode": "event_triggered"})
        res = run(c)
        m = res.metrics
        rows.append({
            "dx_self": dxs, "dx_neighbor": dxn, "du": du,
            "event_counts": dict(m["event_counts"]),
            "event_counts_by_level": dict(m["event_counts_by_level"]),
            "tail_max_abs_e": m["tail_max_abs_e"],
        })
    return rows
