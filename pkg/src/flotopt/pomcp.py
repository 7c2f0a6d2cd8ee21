"""Online POMDP planning with Partially Observable Monte Carlo Planning.

Each decision runs Monte Carlo tree search over action sequences: every
simulation draws a world realization from the belief, descends the tree with
UCB1, expands one node, rolls out to the depth limit and backs up discounted
returns. Grade/recovery observations are continuous, so observation nodes
bucket on the measurement outcome only and each action edge leads to a single
child; the value of measuring emerges because rollouts act on the composition
the simulated agent would actually know.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .belief import BeliefHyperparams, BeliefState
from .environment import (ActionGrid, EpisodeContext, FlotationAction,
                          MeasurementSchedule, Policy)
from .ground_truth import ErrorSurface, GroundTruth, true_outputs
from .kinetics import EconomicParams, KineticParams, reward

PLANNING_COMPOSITION_NODES = 9
PLANNING_COMPOSITION_SIGMAS = 4.0
MIN_PLANNING_HALF_SPAN = 0.5


@dataclass(frozen=True)
class PomcpConfig:
    """Search budget and shape of the planner.

    The paper-style defaults: 1000 simulations per decision, depth 10,
    discount 0.95, exploration constant on the scale of the reward range,
    kinetic-greedy rollouts with a 0.2 chance of a random action. Planning
    lattices are capped so fine action grids reuse a coarse surface sample.
    """

    n_simulations: int = 1000
    max_depth: int = 10
    ucb_constant: float = 10.0
    discount: float = 0.95
    rollout_policy: str = "kinetic-greedy"  # or "uniform-random"
    rollout_epsilon: float = 0.2
    worlds_per_step: int = 32
    unvisited_order: str = "strided"  # or "lexicographic"
    max_lattice_t_nodes: int = 32
    max_lattice_f_nodes: int = 48

    def __post_init__(self) -> None:
        if self.n_simulations < 1:
            raise ValueError("need at least one simulation per decision")
        if self.max_depth < 1:
            raise ValueError("tree depth must be >= 1")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        if self.rollout_policy not in ("kinetic-greedy", "uniform-random"):
            raise ValueError(f"unknown rollout policy {self.rollout_policy!r}")
        if not 0.0 <= self.rollout_epsilon <= 1.0:
            raise ValueError("rollout epsilon must lie in [0, 1]")
        if self.worlds_per_step < 1:
            raise ValueError("need at least one sampled world per decision")
        if self.unvisited_order not in ("strided", "lexicographic"):
            raise ValueError(f"unknown unvisited order {self.unvisited_order!r}")


def exploration_order(n: int, kind: str = "strided") -> np.ndarray:
    """Deterministic order in which unvisited actions are first tried.

    "lexicographic" scans the grid time-major; "strided" walks it with a
    golden-ratio stride so a small simulation budget still covers the whole
    grid roughly uniformly. Both are fixed permutations of the grid order.
    """
    if kind == "lexicographic" or n <= 2:
        return np.arange(n)
    stride = max(1, round(n * 0.6180339887498949))
    while math.gcd(stride, n) != 1:
        stride += 1
    return (np.arange(n, dtype=np.int64) * stride) % n


class SearchNode:
    """One history node: visit count, value, and per-action child statistics."""

    __slots__ = ("visits", "value", "order_pos", "budget_left", "children",
                 "n_children", "child_ids", "child_visits", "child_values",
                 "_slot_of")

    def __init__(self, budget_left: int = 0):
        self.visits = 0
        self.value = 0.0
        self.order_pos = 0
        self.budget_left = budget_left
        self.children: dict[int, SearchNode] = {}
        self.n_children = 0
        self.child_ids = np.empty(8, dtype=np.int64)
        self.child_visits = np.empty(8, dtype=np.float64)
        self.child_values = np.empty(8, dtype=np.float64)
        self._slot_of: dict[int, int] = {}

    def _grow(self) -> None:
        cap = len(self.child_ids) * 2
        self.child_ids = np.resize(self.child_ids, cap)
        self.child_visits = np.resize(self.child_visits, cap)
        self.child_values = np.resize(self.child_values, cap)

    def allowed(self, action_id: int, n_grid: int) -> bool:
        return action_id < n_grid or self.budget_left > 0

    def select_child(self, order: np.ndarray, constant: float, n_grid: int):
        """Next action id to simulate and whether it is a fresh expansion."""
        while self.order_pos < len(order):
            aid = int(order[self.order_pos])
            self.order_pos += 1
            if self.allowed(aid, n_grid):
                return aid, True
        k = self.n_children
        scores = self.child_values[:k] + constant * np.sqrt(
            math.log(max(self.visits, 1)) / self.child_visits[:k])
        return int(self.child_ids[int(np.argmax(scores))]), False

    def update_child(self, action_id: int, value: float) -> None:
        slot = self._slot_of.get(action_id)
        if slot is None:
            if self.n_children == len(self.child_ids):
                self._grow()
            slot = self.n_children
            self.n_children += 1
            self._slot_of[action_id] = slot
            self.child_ids[slot] = action_id
            self.child_visits[slot] = 0.0
            self.child_values[slot] = 0.0
        self.child_visits[slot] += 1.0
        self.child_values[slot] += (value - self.child_values[slot]) / self.child_visits[slot]

    def child_stats(self):
        k = self.n_children
        return (self.child_ids[:k].copy(), self.child_visits[:k].copy(),
                self.child_values[:k].copy())


def ucb_select(node: SearchNode, constant: float, n_grid: int | None = None,
               order: np.ndarray | None = None) -> int:
    """Action id maximizing value + constant * sqrt(ln(parent)/child visits).

    Unvisited actions (in the node's deterministic order) take precedence,
    the usual infinite-bonus convention. The node's selection cursor is not
    advanced; this is a read-only view of the same rule used in search.
    """
    if order is None:
        ids, _, _ = node.child_stats()
        order = np.asarray(ids if node.n_children else [], dtype=np.int64)
    if n_grid is None:
        n_grid = len(order)
    pos = node.order_pos
    while pos < len(order):
        aid = int(order[pos])
        if node.allowed(aid, n_grid):
            return aid
        pos += 1
    k = node.n_children
    if k == 0:
        raise ValueError("node has no children to select from")
    scores = node.child_values[:k] + constant * np.sqrt(
        math.log(max(node.visits, 1)) / node.child_visits[:k])
    return int(node.child_ids[int(np.argmax(scores))])


def rollout(world: GroundTruth, kp: KineticParams, econ: EconomicParams,
            schedule: MeasurementSchedule, start_T: int, depth: int,
            action_fn, discount: float, measurements_used: int = 0) -> float:
    """Discounted return of playing `action_fn` for `depth` steps in a world.

    Reference implementation of the rollout semantics (the planner's table
    fast path must agree with it); `action_fn(T)` returns a FlotationAction.
    """
    total = 0.0
    disc = 1.0
    used = measurements_used
    for offset in range(depth):
        T = start_T + offset
        if T >= world.horizon:
            break
        action = action_fn(T)
        if schedule.mode == "fixed":
            measured = schedule.scheduled(T)
        else:
            measured = action.measure and used < schedule.budget
        used += int(measured)
        c = float(world.composition_series[T])
        g, r = true_outputs(world, kp, c, action.t, action.f)
        total += disc * reward(econ, g, r, action.t, action.f, measured)
        disc *= discount
    return total


class _KineticGrid:
    """Kinetic model and reward pre-evaluated over the action grid."""

    def __init__(self, grid: ActionGrid, econ: EconomicParams, kp: KineticParams):
        t = grid.actions[:, 0]
        f = grid.actions[:, 1]
        self.kp = kp
        self.k0 = econ.price_coeff * econ.production_coeff / (1e4 * econ.timesteps_per_year)
        self.lift = 1.0 - np.exp(-kp.k * t / 10.0) / (1.0 + np.exp(4.0 - 0.04 * f))
        self.recovery = 100.0 * (kp.k * t / (1.0 + kp.k * t)) * (f / (f + 10.0))
        self.opex = econ.opex_time_coeff * t + econ.opex_air_coeff * f
        self._greedy_cache: dict[int, int] = {}

    def grade_row(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)[..., None]
        return c * (1.0 + (1.0 - c / self.kp.c_max) * self.lift)

    def reward_row(self, c: float) -> np.ndarray:
        g = self.grade_row(c)
        return self.k0 * g * self.recovery - self.opex

    def greedy(self, c: float) -> int:
        key = int(round(c * 50.0))  # 0.02 pp buckets
        idx = self._greedy_cache.get(key)
        if idx is None:
            idx = int(np.argmax(self.reward_row(key / 50.0)))
            self._greedy_cache[key] = idx
        return idx


class _Lattice:
    """Planning lattice axes plus gather weights from lattice to grid actions.

    Sampling happens on the raw axes; surfaces returned by the belief pad
    singleton axes, so gather indices are computed against the padded layout.
    """

    def __init__(self, grid: ActionGrid, cfg: PomcpConfig,
                 feed_mean: float, feed_std: float, c_max: float):
        half = max(PLANNING_COMPOSITION_SIGMAS * feed_std, MIN_PLANNING_HALF_SPAN)
        lo = max(1.0, feed_mean - half)
        hi = min(c_max, feed_mean + half)
        self.c_nodes = np.linspace(lo, hi, PLANNING_COMPOSITION_NODES)
        self.t_nodes = self._axis(grid.t_values, cfg.max_lattice_t_nodes)
        self.f_nodes = self._axis(grid.f_values, cfg.max_lattice_f_nodes)
        t_pad = self._padded(self.t_nodes)
        f_pad = self._padded(self.f_nodes)
        self.identity = (np.array_equal(t_pad, grid.t_values)
                         and np.array_equal(f_pad, grid.f_values))
        if not self.identity:
            self._build_gather(grid, t_pad, f_pad)

    @staticmethod
    def _axis(values: np.ndarray, cap: int) -> np.ndarray:
        if len(values) <= cap:
            return values.copy()
        return np.linspace(values[0], values[-1], cap)

    @staticmethod
    def _padded(nodes: np.ndarray) -> np.ndarray:
        # mirror the ErrorSurface singleton-axis padding
        if nodes.size == 1:
            return np.array([nodes[0], nodes[0] + 1.0])
        return nodes

    def _build_gather(self, grid: ActionGrid, t_pad: np.ndarray,
                      f_pad: np.ndarray) -> None:
        nf = len(f_pad)
        t = grid.actions[:, 0]
        f = grid.actions[:, 1]
        it = np.clip(np.searchsorted(t_pad, t) - 1, 0, len(t_pad) - 2)
        jf = np.clip(np.searchsorted(f_pad, f) - 1, 0, nf - 2)
        ut = np.clip((t - t_pad[it]) / (t_pad[it + 1] - t_pad[it]), 0, 1)
        uf = np.clip((f - f_pad[jf]) / (f_pad[jf + 1] - f_pad[jf]), 0, 1)
        self._gather_idx = np.stack([
            it * nf + jf, it * nf + jf + 1,
            (it + 1) * nf + jf, (it + 1) * nf + jf + 1], axis=1)
        self._gather_wt = np.stack([
            (1 - ut) * (1 - uf), (1 - ut) * uf,
            ut * (1 - uf), ut * uf], axis=1)

    def at_actions(self, slabs: np.ndarray) -> np.ndarray:
        """Evaluate (..., n_lattice_tf) surface slabs at every grid action."""
        if self.identity:
            return slabs
        taken = slabs[..., self._gather_idx]           # (..., n_actions, 4)
        return np.einsum("...ak,ak->...a", taken, self._gather_wt)

    def blend(self, comp: np.ndarray):
        """Composition-axis linear-blend indices and fractions."""
        j = np.clip(np.searchsorted(self.c_nodes, comp) - 1, 0,
                    len(self.c_nodes) - 2)
        width = self.c_nodes[j + 1] - self.c_nodes[j]
        u = np.clip((comp - self.c_nodes[j]) / width, 0.0, 1.0)
        return j, u


class PomcpPlanner:
    """Reusable planner for one (grid, schedule, econ, kp, horizon) context."""

    def __init__(self, cfg: PomcpConfig, ctx: EpisodeContext,
                 feed_mean: float, feed_std: float):
        self.cfg = cfg
        self.ctx = ctx
        self.kinetic = _KineticGrid(ctx.grid, ctx.econ, ctx.kp)
        self.lattice = _Lattice(ctx.grid, cfg, feed_mean, feed_std, ctx.kp.c_max)
        self.n_grid = ctx.grid.n_actions
        n_ids = self.n_grid * (2 if ctx.schedule.mode == "agent-choice" else 1)
        self.order = exploration_order(n_ids, cfg.unvisited_order)
        self.last_root_stats: dict | None = None
        self.last_root: SearchNode | None = None
        self._sample_cache: dict = {}

    # -- per-decision search ----------------------------------------------

    def make_search(self, belief: BeliefState, T: int, rng: np.random.Generator,
                    measurements_used: int = 0) -> "_DecisionSearch":
        """Sample worlds and build the per-decision tables (also used by tests).

        A belief with no observations at all degrades to planning on the
        prior mean, i.e. the kinetic model with the expected feedstock path
        (fixed-schedule mode; under agent-chosen measurement the prior is
        sampled so the value of information can surface in the tree).
        """
        cfg, ctx = self.cfg, self.ctx
        if T >= ctx.horizon:
            raise ValueError(f"cannot plan at terminal timestep {T}")
        depth = min(cfg.max_depth, ctx.horizon - T)
        zero_data = (belief.n_observations == 0 and not belief.comp_times
                     and ctx.schedule.mode == "fixed")
        if zero_data:
            worlds = [self._prior_mean_world(belief)]
        else:
            worlds = belief.sample_worlds(
                self.lattice.c_nodes, self.lattice.t_nodes, self.lattice.f_nodes,
                ctx.horizon, rng, cfg.worlds_per_step, cache=self._sample_cache)
        return _DecisionSearch(self, belief, worlds, T, depth, rng,
                               measurements_used, deterministic=zero_data)

    def _prior_mean_world(self, belief: BeliefState) -> GroundTruth:
        lat = self.lattice
        comp = np.clip(
            belief.composition_path(np.arange(self.ctx.horizon, dtype=float)),
            1.0, self.ctx.kp.c_max)
        shape = (len(lat.c_nodes), len(lat.t_nodes), len(lat.f_nodes))
        grade = np.full(shape, belief.hyper.grade_error.mean)
        rec = np.full(shape, belief.hyper.recovery_error.mean)
        return GroundTruth(
            composition_series=comp,
            grade_error=ErrorSurface(lat.c_nodes, lat.t_nodes, lat.f_nodes, grade),
            recovery_error=ErrorSurface(lat.c_nodes, lat.t_nodes, lat.f_nodes, rec),
            seed=None)

    def plan(self, belief: BeliefState, T: int, rng: np.random.Generator,
             measurements_used: int = 0) -> FlotationAction:
        cfg = self.cfg
        search = self.make_search(belief, T, rng, measurements_used)
        root = SearchNode(
            budget_left=max(self.ctx.schedule.budget - measurements_used, 0))
        n_worlds = len(search.worlds)
        for i in range(cfg.n_simulations):
            search.simulate(root, i % n_worlds, 0, None)
        self.last_root = root
        return self._choose(root, T)

    def _choose(self, root: SearchNode, T: int) -> FlotationAction:
        ids, visits, values = root.child_stats()
        if len(ids) == 0:
            raise RuntimeError("search produced no root children")
        order = np.lexsort((ids, -values, -visits))
        best = int(ids[order[0]])
        grid_idx = best % self.n_grid
        t, f = self.ctx.grid.action_at(grid_idx)
        if self.ctx.schedule.mode == "fixed":
            measure = self.ctx.schedule.scheduled(T)
        else:
            measure = best >= self.n_grid
        self.last_root_stats = {
            "T": T,
            "children": [
                {"t": float(self.ctx.grid.actions[int(a) % self.n_grid, 0]),
                 "f": float(self.ctx.grid.actions[int(a) % self.n_grid, 1]),
                 "measure": bool(int(a) >= self.n_grid)
                 if self.ctx.schedule.mode == "agent-choice" else None,
                 "visits": int(v), "value": float(q)}
                for a, v, q in zip(ids, visits, values)],
        }
        return FlotationAction(t=t, f=f, measure=measure)


class _DecisionSearch:
    """Tables and tree simulation for a single decision."""

    def __init__(self, planner: PomcpPlanner, belief: BeliefState,
                 worlds: list[GroundTruth], T: int, depth: int,
                 rng: np.random.Generator, measurements_used: int,
                 deterministic: bool = False):
        cfg, ctx = planner.cfg, planner.ctx
        # a certainty-equivalent (prior-mean) world needs no rollout dithering
        self.deterministic = deterministic
        self.planner = planner
        self.cfg = cfg
        self.ctx = ctx
        self.T = T
        self.depth = depth
        self.rng = rng
        self.worlds = worlds
        self.n_grid = planner.n_grid
        kin = planner.kinetic
        lat = planner.lattice
        W = len(worlds)

        self.comp = np.stack([w.composition_series[T:T + depth] for w in worlds])
        nc = len(worlds[0].grade_error.c_nodes)
        self._Vg = np.stack([w.grade_error.values.reshape(nc, -1) for w in worlds])
        self._Vr = np.stack([w.recovery_error.values.reshape(nc, -1) for w in worlds])
        self._j, self._u = lat.blend(self.comp)        # (W, depth)

        self.fixed_mode = ctx.schedule.mode == "fixed"
        self.sched = [self.fixed_mode and ctx.schedule.scheduled(T + o)
                      for o in range(depth)]
        self.sched_cost = [ctx.econ.measurement_cost if m else 0.0
                           for m in self.sched]
        self.meas_cost = ctx.econ.measurement_cost
        self.mu_path = belief.composition_path(
            np.arange(T, T + depth, dtype=float)).tolist()
        self.comp_list = self.comp.tolist()
        n_draws = cfg.n_simulations * depth + 1
        self._eps = rng.random(n_draws)
        self._rand_actions = rng.integers(0, self.n_grid, size=n_draws).tolist()
        self._rand_pos = 0

        # full per-world reward tables pay off only when the tree will touch
        # a fair share of the (world, offset, action) space
        self.tabulated = W * depth * self.n_grid <= 1_200_000
        if self.tabulated:
            widx = np.arange(W)[:, None]
            uu = self._u[..., None]
            slab_g = (1.0 - uu) * self._Vg[widx, self._j] + uu * self._Vg[widx, self._j + 1]
            slab_r = (1.0 - uu) * self._Vr[widx, self._j] + uu * self._Vr[widx, self._j + 1]
            err_g = lat.at_actions(slab_g)             # (W, depth, n_actions)
            err_r = lat.at_actions(slab_r)
            g = np.clip(kin.grade_row(self.comp) + err_g, 0.0, ctx.kp.c_max)
            r = np.clip(kin.recovery[None, None, :] + err_r, 0.0, 100.0)
            self.reward_tab = kin.k0 * g * r - kin.opex[None, None, :]
            self.reward_tab -= np.asarray(self.sched_cost)[None, :, None]
            # hot-loop view: plain Python nesting avoids numpy scalar boxing
            self.tab = self.reward_tab.tolist()
            self.step_reward = self._tab_reward
        else:
            self._kin = kin
            self._jl = self._j.tolist()
            self._ul = self._u.tolist()
            self.step_reward = self._on_demand_reward

    def _tab_reward(self, w: int, o: int, a: int) -> float:
        return self.tab[w][o][a]

    def _on_demand_reward(self, w: int, o: int, a: int) -> float:
        """Single-point evaluation mirroring the vectorized table build."""
        lat = self.planner.lattice
        kin = self._kin
        j = self._jl[w][o]
        u = self._ul[w][o]
        if lat.identity:
            eg_lo, eg_hi = self._Vg[w, j, a], self._Vg[w, j + 1, a]
            er_lo, er_hi = self._Vr[w, j, a], self._Vr[w, j + 1, a]
        else:
            idx = lat._gather_idx[a]
            wt = lat._gather_wt[a]
            eg_lo = self._Vg[w, j, idx] @ wt
            eg_hi = self._Vg[w, j + 1, idx] @ wt
            er_lo = self._Vr[w, j, idx] @ wt
            er_hi = self._Vr[w, j + 1, idx] @ wt
        err_g = (1.0 - u) * eg_lo + u * eg_hi
        err_r = (1.0 - u) * er_lo + u * er_hi
        c = self.comp_list[w][o]
        g = c * (1.0 + (1.0 - c / kin.kp.c_max) * kin.lift[a]) + err_g
        g = min(max(g, 0.0), kin.kp.c_max)
        r = min(max(kin.recovery[a] + err_r, 0.0), 100.0)
        return kin.k0 * g * r - kin.opex[a] - self.sched_cost[o]

    # estimate: composition the simulated agent believes; None means "follow
    # the belief-mean path" (no in-simulation measurement has happened yet)

    def simulate(self, node: SearchNode, w: int, o: int, est) -> float:
        node.visits += 1
        aid, fresh = node.select_child(self.planner.order, self.cfg.ucb_constant,
                                       self.n_grid)
        a = aid % self.n_grid
        step_reward = self.step_reward(w, o, a)
        if self.fixed_mode:
            measured = self.sched[o]
        else:
            measured = aid >= self.n_grid and node.budget_left > 0
            if measured:
                step_reward -= self.meas_cost
        est2 = self.comp_list[w][o] if measured else est
        if o + 1 >= self.depth:
            tail = 0.0
        elif fresh:
            child = SearchNode(budget_left=node.budget_left - int(
                measured and not self.fixed_mode))
            node.children[aid] = child
            tail = self.rollout_from(w, o + 1, est2)
        else:
            child = node.children.get(aid)
            if child is None:  # first visit landed at terminal depth earlier
                child = SearchNode(budget_left=node.budget_left)
                node.children[aid] = child
            tail = self.simulate(child, w, o + 1, est2)
        value = step_reward + self.cfg.discount * tail
        node.update_child(aid, value)
        node.value += (value - node.value) / node.visits
        return value

    def rollout_from(self, w: int, o: int, est) -> float:
        cfg = self.cfg
        gamma = cfg.discount
        epsilon = 0.0 if self.deterministic else cfg.rollout_epsilon
        greedy = self.planner.kinetic.greedy
        cache = self.planner.kinetic._greedy_cache
        uniform = cfg.rollout_policy == "uniform-random"
        c_max = self.ctx.kp.c_max
        rows = self.tab[w] if self.tabulated else None
        step_reward = self.step_reward
        comp_row = self.comp_list[w]
        sched = self.sched
        mu = self.mu_path
        eps = self._eps
        randa = self._rand_actions
        pos = self._rand_pos
        total = 0.0
        disc = 1.0
        for oo in range(o, self.depth):
            if uniform or eps[pos] < epsilon:
                a = randa[pos]
            else:
                c_known = est if est is not None else mu[oo]
                if c_known < 0.0:
                    c_known = 0.0
                elif c_known > c_max:
                    c_known = c_max
                key = int(round(c_known * 50.0))
                a = cache.get(key)
                if a is None:
                    a = greedy(c_known)
            pos += 1
            total += disc * (rows[oo][a] if rows is not None
                             else step_reward(w, oo, a))
            disc *= gamma
            if sched[oo]:
                est = comp_row[oo]
        self._rand_pos = pos
        return total


class PomcpPolicy(Policy):
    """POMCP with a GP belief refitted on measured batches.

    Belief updates are gated on feedstock measurement: a measured batch
    contributes its composition and the grade/recovery residuals, matching
    the role of measurement in the state-uncertainty studies (with zero
    measurements the planner runs on the bare prior). Setting
    `update_on_unmeasured` also folds unmeasured batches in, attributing
    their residuals at the feedstock posterior mean.
    """

    name = "pomcp"

    def __init__(self, cfg: PomcpConfig = PomcpConfig(),
                 hyper: BeliefHyperparams | None = None,
                 seed: int = 0, diagnostics_path=None,
                 update_on_unmeasured: bool = False):
        if hyper is None:
            raise ValueError("PomcpPolicy needs belief hyperparameters")
        self.cfg = cfg
        self.hyper = hyper
        self.seed = seed
        self.diagnostics_path = diagnostics_path
        self.update_on_unmeasured = update_on_unmeasured

    def reset(self, ctx: EpisodeContext) -> None:
        super().reset(ctx)
        self.belief = BeliefState.initial(self.hyper, ctx.kp)
        self.rng = np.random.default_rng([4, self.seed])
        feed = self.hyper.feedstock
        self.planner = PomcpPlanner(self.cfg, ctx, feed_mean=feed.mean,
                                    feed_std=math.sqrt(feed.variance))
        self._measured = 0
        if self.diagnostics_path:
            open(self.diagnostics_path, "w").close()

    def act(self, T: int) -> FlotationAction:
        action = self.planner.plan(self.belief, T, self.rng, self._measured)
        if self.diagnostics_path:
            with open(self.diagnostics_path, "a") as fh:
                fh.write(json.dumps(self.planner.last_root_stats) + "\n")
        return action

    def observe(self, T, action, obs, step_reward) -> None:
        if obs.composition is not None:
            self._measured += 1
            self.belief = self.belief.updated(T, action, obs, float(obs.composition))
        elif self.update_on_unmeasured:
            c_used = self.belief.composition_mean(T)
            self.belief = self.belief.updated(T, action, obs, c_used)
