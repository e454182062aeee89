"""Randomized property suites and runtime assumption checks.

Each check returns a CheckResult; the CLI prints them and the test suite
asserts on them.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import graph as gr
from .engine import build_scenario, lemma3_check
from .plant import SECTOR_BOUNDS, check_sector_bounds, fault_rate_violations
from .rbf import RbfNetwork, adapt_step, basis_shift_bound, eval_basis, grid_layout, project_weights
from .trigger import INPUT


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_adjacency(rng, n, p_edge=0.5, weighted=True):
    mask = np.triu(rng.random((n, n)) < p_edge, 1)
    w = rng.uniform(0.1, 2.0, (n, n)) if weighted else np.ones((n, n))
    a = np.where(mask, w, 0.0)
    return a + a.T


def lemma1_suite(seed=0, n_graphs=1000, max_agents=8):
    rng = np.random.default_rng(seed)
    ring = gr.build_graph(gr.ring_adjacency(4))
    ring_ev = gr.laplacian_spectrum(ring)
    ring_ok = bool(np.max(np.abs(ring_ev - [0.0, 2.0, 2.0, 4.0])) <= 1e-9)
    disagree = 0
    bad_zero = 0
    for _ in range(n_graphs):
        n = int(rng.integers(1, max_agents + 1))
        g = gr.build_graph(random_adjacency(rng, n, p_edge=rng.uniform(0.1, 0.9)))
        conn = gr.is_connected_spectral(g)
        if conn != gr.is_connected_bfs(g):
            disagree += 1
        ev = gr.laplacian_spectrum(g)
        if abs(ev[0]) > 1e-9 or ev[0] < -1e-9:
            bad_zero += 1
        if conn and n > 1 and ev[1] <= 1e-9:
            bad_zero += 1
    passed = ring_ok and disagree == 0 and bad_zero == 0
    detail = (f"ring-4 spectrum {(np.round(ring_ev, 12) + 0.0).tolist()}; {n_graphs} random graphs: "
              f"{disagree} spectral/BFS disagreements, {bad_zero} zero-eigenvalue anomalies")
    return CheckResult("lemma1 (Laplacian spectrum, connectivity)", passed, detail)


def lemma2_suite(seed=0, pairs=10_000, node_count=25, width=2.0, delta=1e-3, input_dim=1, box=(-2.0, 2.0)):
    """Random (beta, beta_bar) pairs with coordinate deviations <= delta
    never exceed the certified basis-shift bound."""
    rng = np.random.default_rng(seed)
    layout = grid_layout(input_dim, node_count, width, box)
    dbeta = np.full(input_dim, delta)
    bound = basis_shift_bound(layout, dbeta)
    lo, hi = box
    beta = rng.uniform(lo - 1.0, hi + 1.0, (pairs, input_dim))
    # half the pairs sit at the worst-case radius of some center, where the slope peaks
    half = pairs // 2
    centers = layout.centers[rng.integers(0, layout.node_count, half)]
    dirs = rng.normal(size=(half, input_dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    beta[:half] = centers + dirs * width / math.sqrt(2.0)
    shift = rng.uniform(-delta, delta, (pairs, input_dim))
    shift[: pairs // 4] = delta * np.sign(rng.normal(size=(pairs // 4, input_dim)))
    gap = np.linalg.norm(eval_basis(layout, beta) - eval_basis(layout, beta + shift), axis=1)
    viol = int(np.sum(gap > bound))
    return CheckResult(
        f"lemma2 (basis-shift bound, {input_dim}-D input)", viol == 0,
        f"{pairs} pairs, p={node_count}, width={width}, deviation<={delta}: bound {bound:.6e}, "
        f"max observed {gap.max():.6e}, {viol} violations",
    )


def projection_suite(seed=0, trials=10_000, p=25, bound=10.0, drives=None):
    rng = np.random.default_rng(seed)
    scale = rng.uniform(0.0, 3.0 * bound, (trials, 1))
    w1 = rng.normal(size=(trials, p))
    w1 *= scale / np.linalg.norm(w1, axis=1, keepdims=True)
    w2 = w1 + rng.normal(scale=bound, size=(trials, p))
    p1, p2 = project_weights(w1, bound), project_weights(w2, bound)
    over = int(np.sum(np.linalg.norm(p1, axis=1) > bound))
    idem = int(np.sum(np.any(project_weights(p1, bound) != p1, axis=1)))
    expand = int(np.sum(np.linalg.norm(p1 - p2, axis=1) > np.linalg.norm(w1 - w2, axis=1) * (1 + 1e-12)))

    drives = trials if drives is None else drives
    layout = grid_layout(1, p, 2.0)
    drive_over = 0
    for _ in range(drives):
        start = project_weights(rng.normal(scale=bound, size=p), bound)
        net = RbfNetwork(layout, start, bound)
        S = eval_basis(layout, rng.uniform(-3, 3, 1))
        net = adapt_step(net, S, rng.normal(scale=100.0), rng.uniform(1e-3, 10.0), rng.uniform(1e-4, 1e-1))
        drive_over += int(np.linalg.norm(net.weights) > bound)
    passed = over == 0 and idem == 0 and expand == 0 and drive_over == 0
    return CheckResult(
        "projection (norm bound, idempotence, non-expansiveness, adapt_step)", passed,
        f"{trials} pairs: {over} over bound, {idem} non-idempotent, {expand} expansive; "
        f"{drives} random adapt drives: {drive_over} over bound",
    )


def lemma3_suite(result, cfg):
    rep = lemma3_check(result, cfg)
    return CheckResult(
        "lemma3 (sampled vs continuous chain deviations)", rep.violations_beyond_slack == 0,
        f"strict violations {rep.violations_strict}, beyond one-step slack {rep.violations_beyond_slack}, "
        f"max deviation/bound ratio {rep.max_ratio:.4f}, bounds dz={np.round(rep.bounds[0].dz, 6).tolist()} "
        f"dalpha={np.round(rep.bounds[0].dalpha, 6).tolist()} (agent 1)",
    ), rep


def assumption_checks(cfg, result=None, samples=10_000, seed=0):
    """Graph connectivity, fault-factor bounds and sector bounds; advisory."""
    sc = build_scenario(cfg)
    out = []
    conn = gr.is_connected(sc.graph)
    out.append(CheckResult("assumption: undirected connected graph", conn,
                           f"lambda_2 = {gr.laplacian_spectrum(sc.graph)[1] if sc.n_agents > 1 else 0.0:.6g}"))
    times = np.arange(sc.steps + 1) * sc.dt
    for i, f in enumerate(sc.faults):
        etas = np.array([f.factor(t) for t in times])
        in_range = bool(np.all((etas > f.eta_lower) & (etas <= 1.0)))
        max_rate, n_over = fault_rate_violations(f, times)
        out.append(CheckResult(
            f"assumption: fault factor bounds (agent {i + 1})", in_range and n_over == 0,
            f"eta in [{etas.min():.3g}, {etas.max():.3g}] vs lower {f.eta_lower:.3g}; "
            f"max |d eta/dt| {max_rate:.4g} vs bound {f.eta_dot_bound:.4g}",
        ))
    bounds_fns = SECTOR_BOUNDS.get(cfg.plant.name)
    if bounds_fns is not None:
        n = sc.order
        if result is not None:
            xmax = np.max(np.abs(result.x), axis=(0, 1))
            umax = float(np.max(np.abs(result.u)))
            half = [max(float(v), 1e-6) for v in xmax] + [max(umax, 1e-6)]
        else:
            lo, hi = cfg.rbf.box
            half = [max(abs(lo), abs(hi))] * (n + 1)
        for lvl in range(1, n + 1):
            vmax = half[lvl]
            box = {"state": [(-h, h) for h in half[:lvl]], "next": (-vmax, vmax)}
            rep = check_sector_bounds(sc.plant, lvl, bounds_fns[lvl - 1](vmax), box, samples, seed)
            out.append(CheckResult(
                f"assumption: sector bounds level {lvl}", rep.holds,
                f"box half-widths {np.round(half[:lvl + 1], 4).tolist()}, worst violation {rep.worst_violation:.3g}",
            ))
    return out


def run_invariant_checks(result, cfg):
    """Invariants that every recorded run must satisfy."""
    sc = build_scenario(cfg)
    out = []
    wb = max(sc.weight_bounds)
    out.append(CheckResult("projection invariant along run", bool(np.all(result.weight_norms <= wb)),
                           f"max |W| {result.weight_norms.max():.4g} <= {wb}"))
    finite = all(np.all(np.isfinite(a)) for a in (result.x, result.u, result.e))
    out.append(CheckResult("boundedness", finite and np.max(np.abs(result.x)) < cfg.sim.divergence_limit,
                           f"max |x| {np.max(np.abs(result.x)):.4g}, max |u| {np.max(np.abs(result.u)):.4g}"))
    if result.channels:
        held_ok = True
        for ch in result.channels:
            if ch.label.kind != INPUT:
                continue
            k_events = set(int(round(t / sc.dt)) for t in ch.event_times)
            u = result.u[:, ch.label.agent]
            changed = np.nonzero(u[1:] != u[:-1])[0] + 1
            if any(int(k) not in k_events for k in changed):
                held_ok = False
        out.append(CheckResult("zero-order hold of actuated input", held_ok,
                               "u changes only at input-channel events"))
        gaps = [m["min_gap"] for m in result.metrics.get("zeno", [])]
        min_gap = min(gaps) if gaps else math.inf
        out.append(CheckResult("Zeno surrogate", min_gap >= sc.dt * (1 - 1e-9),
                               f"min inter-event gap {min_gap:.6g} s vs dt {sc.dt}"))
    return out
