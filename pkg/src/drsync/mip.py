"""Compact integer model over the time graph plus an embedded exact backend.

The model object carries the variable index (x[driver, arc] binary,
r[driver, node] continuous) and the reconstructed constraint families; it
can be written out in LP interchange format for external solvers. The
embedded backend does not touch the algebraic rows: it is a depth-first
branch-and-bound that schedules ride segments in chronological order,
assigns each steering piece to an existing or a fresh driver, validates
relocations (waits and deadhead hops) eagerly against the pieces already
scheduled, and prunes with the incumbent, the constructive lower bound
and the optional driver cap. It is exact whenever it finishes within the
time limit.

Export caveat: renewals earned by multi-arc deadhead runs whose single
arcs are each shorter than the break length are not representable in the
exported rows (waiting chains are, via auxiliary chain binaries); the
embedded backend and the feasibility checker handle them exactly.
"""

from __future__ import annotations

import time as _time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable

from .bounds import BoundReport
from .instance import Instance, POLICY_NONE
from .solution import (
    Piece,
    RidePlan,
    Solution,
    assemble_route,
    check_feasibility,
    plan_from_routes,
)
from .timegraph import (
    FAMILY_DEADHEAD,
    FAMILY_DEPOT,
    FAMILY_STEERING,
    FAMILY_WAITING,
    LEG_DIRECT,
    LEG_IN,
    LEG_OUT,
    TimeGraph,
)


class AssignmentError(Exception):
    """An explicit variable assignment violates flow or coverage."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class SolverConfig:
    time_limit: float = 3600.0
    cutoff: int | None = None
    start_solution: Solution | None = None
    incumbent_callback: Callable[[Solution], Solution | None] | None = None
    seed: int = 0


@dataclass
class SolveOutcome:
    status: str                      # optimal | infeasible | feasible | timeout_no_solution
    best_solution: Solution | None
    best_bound: int
    elapsed: float
    incumbent_log: list[tuple[float, int]] = field(default_factory=list)


@dataclass(frozen=True)
class Model:
    graph: TimeGraph
    instance: Instance
    bounds: BoundReport
    driver_count: int
    cardinality_cap: int | None = None
    # proving a solution at or below this value ends the search (a valid
    # lower bound asserted by the caller; the constructive LB by default)
    objective_floor: int = 0

    @property
    def lower_bound(self) -> int:
        return self.bounds.lb

    def n_binary(self) -> int:
        return self.driver_count * len(self.graph.arcs)

    def n_continuous(self) -> int:
        return self.driver_count * len(self.graph.nodes)


def build_model(graph: TimeGraph, bounds: BoundReport) -> Model:
    return Model(graph=graph, instance=graph.instance, bounds=bounds,
                 driver_count=bounds.ub, objective_floor=bounds.lb)


def restrict(model: Model, cap: int) -> Model:
    """Copy of the model with the total-activation cap added (problem P(cap))."""
    if cap < 0:
        raise ValueError("cap must be >= 0")
    return replace(model, cardinality_cap=cap)


# ---------------------------------------------------------------------------
# LP export
# ---------------------------------------------------------------------------

def _chain_pairs(graph: TimeGraph, t_b: int):
    """Same-base copy pairs at least a break apart, with the wait arcs between."""
    for base, ids in graph.copies.items():
        for i in range(len(ids)):
            arcs: list[int] = []
            for j in range(i + 1, len(ids)):
                arcs.append(graph.wait_next[ids[j - 1]])
                if graph.nodes[ids[j]].time - graph.nodes[ids[i]].time >= t_b:
                    yield base, ids[i], ids[j], list(arcs)


def export_model(model: Model, path: str) -> None:
    """Write the integer program in LP interchange text format, deterministically."""
    g = model.graph
    inst = model.instance
    legal = inst.legal
    K = model.driver_count
    horizon = max((n.time for n in g.nodes if n.time is not None), default=0) + legal.t_dw

    def x(k, a):
        return f"x_{k}_{a}"

    def r(k, n):
        return f"r_{k}_{n}"

    src_arcs = sorted(g.depot_out.values())
    sink_arcs = sorted(g.depot_in.values())

    rows: list[str] = []

    def row(name, terms, sense, rhs):
        body = " ".join(f"{'+' if c >= 0 else '-'} {abs(c)} {v}" for c, v in terms)
        rows.append(f" {name}: {body} {sense} {rhs}")

    for k in range(K):
        for node in g.nodes:
            if node.base == "__depot__":
                continue
            terms = [(1, x(k, a)) for a in g.into[node.id]]
            terms += [(-1, x(k, a)) for a in g.out_of[node.id]]
            row(f"flow_{k}_{node.id}", terms, "=", 0)
        row(f"act_out_{k}", [(1, x(k, a)) for a in src_arcs], "<=", 1)
        row(f"act_pair_{k}",
            [(1, x(k, a)) for a in src_arcs] + [(-1, x(k, a)) for a in sink_arcs], "=", 0)

    for (rid, seg), arcs in sorted(g.seg_direct.items()):
        entry = list(arcs)
        for (rid2, seg2, st), ins in sorted(g.seg_in.items()):
            if rid2 == rid and seg2 == seg:
                entry += ins
        terms = [(1, x(k, a)) for k in range(K) for a in sorted(entry)]
        if terms:
            row(f"cover_{rid}_{seg}", terms, "=", 1)
        elif K > 0 and g.arcs:
            # uncoverable segment: an explicitly contradictory row
            row(f"cover_{rid}_{seg}", [(0, x(0, 0))], "=", 1)

    for (rid, seg, st), ins in sorted(g.seg_in.items()):
        outs = g.seg_out.get((rid, seg, st), [])
        by_copy: dict[int, tuple[list[int], list[int]]] = {}
        for a in ins:
            by_copy.setdefault(g.arcs[a].head, ([], []))[0].append(a)
        for a in outs:
            by_copy.setdefault(g.arcs[a].tail, ([], []))[1].append(a)
        for copy_node, (iarcs, oarcs) in sorted(by_copy.items()):
            terms = [(1, x(k, a)) for k in range(K) for a in sorted(iarcs)]
            terms += [(-1, x(k, a)) for k in range(K) for a in sorted(oarcs)]
            row(f"statflow_{rid}_{seg}_{copy_node}", terms, "=", 0)

    # ride continuity: the copy reached by segment seg equals the copy left by seg+1
    rides = {rd.id: rd for rd in inst.rides}
    for rid, rd in sorted(rides.items()):
        for pos in range(1, len(rd.stops) - 1):
            into_arcs = [a for a in g.seg_direct.get((rid, pos - 1), [])]
            into_arcs += [a for (r2, s2, _), arcs in sorted(g.seg_out.items())
                          if r2 == rid and s2 == pos - 1 for a in arcs]
            out_arcs = [a for a in g.seg_direct.get((rid, pos), [])]
            out_arcs += [a for (r2, s2, _), arcs in sorted(g.seg_in.items())
                         if r2 == rid and s2 == pos for a in arcs]
            by_copy2: dict[int, tuple[list[int], list[int]]] = {}
            for a in into_arcs:
                by_copy2.setdefault(g.arcs[a].head, ([], []))[0].append(a)
            for a in out_arcs:
                by_copy2.setdefault(g.arcs[a].tail, ([], []))[1].append(a)
            for copy_node, (iarcs, oarcs) in sorted(by_copy2.items()):
                terms = [(1, x(k, a)) for k in range(K) for a in sorted(iarcs)]
                terms += [(-1, x(k, a)) for k in range(K) for a in sorted(oarcs)]
                row(f"cont_{rid}_{pos}_{copy_node}", terms, "=", 0)

    for arc in g.arcs:
        if arc.family == FAMILY_DEADHEAD:
            terms = [(1, x(k, arc.id)) for k in range(K)]
            terms += [(-(K - 1), x(k, arc.twin)) for k in range(K)]
            if K > 1:
                row(f"dh_{arc.id}", terms, "<=", 0)
            else:
                row(f"dh_{arc.id}", [(1, x(0, arc.id))], "<=", 0)

    # steering resource: r is the remaining continuous allowance at each node
    chain_z: list[tuple[str, int, int, list[int]]] = list(_chain_pairs(g, legal.t_b))
    for k in range(K):
        for arc in g.arcs:
            M = legal.t_cs + max(arc.duration, 0)
            if arc.family == FAMILY_STEERING:
                row(f"rprop_{k}_{arc.id}",
                    [(1, r(k, arc.head)), (-1, r(k, arc.tail)), (M, x(k, arc.id))],
                    "<=", M - arc.duration)
                row(f"rcap_{k}_{arc.id}",
                    [(1, r(k, arc.tail)), (-arc.duration, x(k, arc.id))], ">=", 0)
            elif arc.consumption == 0 and arc.family != FAMILY_DEPOT:
                relax = []
                if arc.family == FAMILY_WAITING:
                    relax = [(legal.t_cs, f"z_{k}_{b}_{i}_{j}")
                             for b, i, j, chain in chain_z if arc.head == j]
                row(f"rprop_{k}_{arc.id}",
                    [(1, r(k, arc.head)), (-1, r(k, arc.tail)), (M, x(k, arc.id))] + [
                        (-c, v) for c, v in relax],
                    "<=", M)
        for b, i, j, chain in chain_z:
            for a in chain:
                row(f"zlink_{k}_{b}_{i}_{j}_{a}",
                    [(1, f"z_{k}_{b}_{i}_{j}"), (-1, x(k, a))], "<=", 0)

    for k in range(K):
        terms = [(g.arcs[a].duration, x(k, a)) for a in range(len(g.arcs))
                 if g.arcs[a].family == FAMILY_STEERING]
        if terms:
            row(f"daily_steer_{k}", terms, "<=", legal.t_ds)
        span_terms = [(g.nodes[g.arcs[a].tail].time, x(k, a)) for a in sink_arcs]
        span_terms += [(-g.nodes[g.arcs[a].head].time, x(k, a)) for a in src_arcs]
        span_terms += [(horizon, x(k, a)) for a in src_arcs]
        if span_terms:
            row(f"span_{k}", span_terms, "<=", legal.t_dw + horizon)

    lb = model.bounds.lb
    if src_arcs and lb > 0:
        row("min_total_activation",
            [(1, x(k, a)) for k in range(K) for a in src_arcs], ">=", lb)
        for k in range(min(lb, K)):
            row(f"force_out_{k}", [(1, x(k, a)) for a in src_arcs], ">=", 1)
            row(f"force_in_{k}", [(1, x(k, a)) for a in sink_arcs], ">=", 1)
    for k in range(K - 1):
        row(f"sym_{k}",
            [(1, x(k, a)) for a in src_arcs] + [(-1, x(k + 1, a)) for a in src_arcs],
            ">=", 0)
        start_terms = [(g.nodes[g.arcs[a].head].time, x(k, a)) for a in src_arcs]
        start_terms += [(-g.nodes[g.arcs[a].head].time, x(k + 1, a)) for a in src_arcs]
        start_terms += [(-horizon, x(k + 1, a)) for a in src_arcs]
        if start_terms:
            row(f"sym_start_{k}", start_terms, ">=", -horizon)
    if model.cardinality_cap is not None and src_arcs:
        row("cap_total_activation",
            [(1, x(k, a)) for k in range(K) for a in src_arcs],
            "<=", model.cardinality_cap)

    obj_terms = [x(k, a) for k in range(K) for a in src_arcs]
    lines = ["\\ drsync driver routing model", f"\\ drivers={K} lb={lb}"]
    lines.append("Minimize")
    lines.append(" obj: " + (" + ".join(obj_terms) if obj_terms else "0 x_none"))
    lines.append("Subject To")
    lines.extend(rows)
    lines.append("Bounds")
    for k in range(K):
        for node in g.nodes:
            lines.append(f" 0 <= {r(k, node.id)} <= {legal.t_cs}")
    lines.append("Binaries")
    names = [x(k, a) for k in range(K) for a in range(len(g.arcs))]
    names += [f"z_{k}_{b}_{i}_{j}" for k in range(K) for b, i, j, _ in chain_z]
    if not obj_terms:
        names.append("x_none")
    for i in range(0, len(names), 8):
        lines.append(" " + " ".join(names[i:i + 8]))
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _segment_required(inst: Instance, rid: str, seg: int) -> bool:
    return any(r.id == rid and seg < r.n_segments for r in inst.rides)


def extract_solution(model: Model, assignment) -> Solution:
    """Build a Solution from active (driver, arc) pairs; errors name the defect."""
    g = model.graph
    if isinstance(assignment, dict):
        active = {ka for ka, v in assignment.items() if v}
    else:
        active = set(assignment)
    per_driver: dict[int, list[int]] = {}
    for k, a in active:
        per_driver.setdefault(k, []).append(a)
    routes = []
    for k in sorted(per_driver):
        arcs = per_driver[k]
        by_tail = {g.arcs[a].tail: a for a in arcs}
        if len(by_tail) != len(arcs):
            raise AssignmentError([f"driver {k}: branching flow (two arcs leave one node)"])
        if not any(g.arcs[a].tail == g.source for a in arcs):
            raise AssignmentError([f"driver {k}: no source arc"])
        route = []
        node = g.source
        seen = 0
        while node != g.sink:
            a = by_tail.get(node)
            if a is None:
                raise AssignmentError([f"driver {k}: flow stops at node {node}"])
            route.append(a)
            node = g.arcs[a].head
            seen += 1
            if seen > len(arcs):
                raise AssignmentError([f"driver {k}: flow does not reach the sink"])
        if seen != len(arcs):
            raise AssignmentError([f"driver {k}: disconnected arcs in assignment"])
        if any(g.arcs[a].mode == 1 for a in route):
            routes.append(tuple(route))
    plan = plan_from_routes(model.instance, g, routes)
    sol = Solution(g, routes, plan)
    violations = check_feasibility(sol, model.instance, g)
    hard = [v for v in violations if v.kind in ("uncovered_segment", "desync")]
    if hard:
        raise AssignmentError([f"{v.kind} at {v.subject}" for v in hard])
    return sol


# ---------------------------------------------------------------------------
# Embedded exact search
# ---------------------------------------------------------------------------

class _TimeUp(Exception):
    pass


class _Stop(Exception):
    pass


class _Driver:
    __slots__ = ("base", "time", "u", "daily", "start", "trail_run",
                 "elements", "pieces", "engaged", "last_active")

    def __init__(self, base, time, u, daily, start):
        self.base = base
        self.time = time
        self.u = u
        self.daily = daily
        self.start = start
        self.trail_run = 0
        self.elements: list[tuple] = []
        self.pieces: set[int] = set()
        self.engaged: int | None = None   # ride index while aboard (policy none)
        self.last_active = time

    def key(self):
        return (self.base, self.time, self.u, self.daily, self.start,
                self.trail_run, self.engaged)

    def snapshot(self):
        return (self.base, self.time, self.u, self.daily, self.start,
                self.trail_run, len(self.elements), self.engaged, self.last_active)

    def rollback(self, snap, added_pieces):
        (self.base, self.time, self.u, self.daily, self.start,
         self.trail_run, n_el, self.engaged, self.last_active) = snap
        del self.elements[n_el:]
        self.pieces -= added_pieces


class _Search:
    def __init__(self, model: Model, config: SolverConfig):
        self.g = model.graph
        self.inst = model.instance
        self.legal = model.instance.legal
        self.model = model
        self.config = config
        self.policy_none = self.inst.exchange_policy == POLICY_NONE
        self.rides = list(self.inst.rides)
        self.nrides = len(self.rides)
        self.deadline = _time.monotonic() + config.time_limit
        self.t0 = _time.monotonic()
        self.nodes_visited = 0

        # ride runtime state
        self.pos = [0] * self.nrides
        self.cur_node = [-1] * self.nrides          # graph node of current stop
        self.pending = [None] * self.nrides         # (station node, seg) awaiting out-leg
        self.minstart = [0] * self.nrides           # first usable index into start grid
        self.times: list[list[int]] = [[] for _ in range(self.nrides)]
        self.stations: list[list[str | None]] = [[] for _ in range(self.nrides)]
        self.start_grids = [
            self.inst.window(r.departures[0]).grid(self.inst.ell) for r in self.rides
        ]
        self.crew: list[dict[int, int]] = [dict() for _ in range(self.nrides)]

        self.drivers: list[_Driver] = []
        self.pieces: list[Piece] = []
        self.carriers: dict[str, list[Piece]] = {}
        self.ride_pieces: list[list[Piece]] = [[] for _ in range(self.nrides)]

        self.best_f: int | None = None
        self.best_solution: Solution | None = None
        if config.start_solution is not None:
            self.best_f = config.start_solution.objective
            self.best_solution = config.start_solution
        self.incumbent_log: list[tuple[float, int]] = []

    # -- plumbing ---------------------------------------------------------

    def _tick(self):
        self.nodes_visited += 1
        if (self.nodes_visited & 0xFF) == 0 and _time.monotonic() > self.deadline:
            raise _TimeUp

    def _threshold(self) -> int:
        thr = self.best_f if self.best_f is not None else (1 << 30)
        if self.config.cutoff is not None:
            thr = min(thr, self.config.cutoff)
        if self.model.cardinality_cap is not None:
            thr = min(thr, self.model.cardinality_cap + 1)
        return thr

    def _node_time(self, nid: int) -> int:
        return self.g.nodes[nid].time

    # -- relocation -------------------------------------------------------

    def _connect(self, d: _Driver, to_base: str, to_time: int):
        """(ok, u_after, plan elements, trailing deadhead run) for moving d."""
        t_b = self.legal.t_b
        if d.time > to_time:
            return False, 0, None, 0
        if d.base == to_base:
            gap = to_time - d.time
            plan = [("wait", d.base, d.time, to_time)] if gap else []
            u = 0 if gap >= t_b else d.u
            return True, u, plan, (d.trail_run if gap == 0 else 0)
        start = (d.base, d.time, min(d.trail_run, t_b), False)
        parents: dict[tuple, tuple | None] = {start: None}
        queue = deque([start])
        goal_any = goal_renew = None

        def check_goal(state):
            nonlocal goal_any, goal_renew
            base, tm, run, renewed = state
            if base == to_base and tm <= to_time:
                if goal_any is None:
                    goal_any = state
                if goal_renew is None and (renewed or to_time - tm >= t_b):
                    goal_renew = state

        check_goal(start)
        while queue and goal_renew is None:
            state = queue.popleft()
            base, tm, run, renewed = state
            for unit in self._carrier_units(base):
                st, en, legs = unit
                if st < tm or en > to_time:
                    continue
                if any(p.arc in d.pieces for p in legs):
                    continue
                wait = st - tm
                new_run = (run + en - st) if wait == 0 else (en - st)
                nxt = (legs[-1].to_base, en, min(new_run, t_b),
                       renewed or wait >= t_b or new_run >= t_b)
                if nxt not in parents:
                    parents[nxt] = (state, legs, wait)
                    queue.append(nxt)
                    check_goal(nxt)
        goal = goal_renew if goal_renew is not None else goal_any
        if goal is None:
            return False, 0, None, 0
        steps: list[tuple] = []
        cur = goal
        while parents[cur] is not None:
            prev, legs, wait = parents[cur]
            chunk = [("deadhead", self.g.arcs[p.arc].twin) for p in legs]
            if wait:
                chunk.insert(0, ("wait", legs[0].from_base, prev[1], legs[0].start))
            steps = chunk + steps
            cur = prev
        end_run = goal[2]
        if goal[1] < to_time:
            steps.append(("wait", to_base, goal[1], to_time))
            end_run = 0
        u = 0 if goal_renew is not None else d.u
        return True, u, steps, end_run

    def _carrier_units(self, base: str):
        if not self.policy_none:
            for p in self.carriers.get(base, ()):
                yield p.start, p.end, (p,)
        else:
            for ri in range(self.nrides):
                chunk = self.ride_pieces[ri]
                if not chunk or self.pos[ri] < self.rides[ri].n_segments:
                    continue  # only completed rides can carry passengers
                if chunk[0].from_base != base:
                    continue
                yield chunk[0].start, chunk[-1].end, tuple(chunk)

    # -- main search ------------------------------------------------------

    def run(self) -> SolveOutcome:
        status = "optimal"
        try:
            if self.nrides == 0:
                self._record_leaf()
            else:
                self._dfs()
        except _TimeUp:
            status = "timeout"
        except _Stop:
            status = "optimal"
        elapsed = _time.monotonic() - self.t0
        if status == "timeout":
            if self.best_solution is not None:
                return SolveOutcome("feasible", self.best_solution,
                                    self.model.bounds.lb, elapsed, self.incumbent_log)
            return SolveOutcome("timeout_no_solution", None,
                                self.model.bounds.lb, elapsed, self.incumbent_log)
        if self.best_solution is None:
            cap = self.model.cardinality_cap
            bound = (cap + 1) if cap is not None else 0
            if self.config.cutoff is not None:
                bound = max(bound, self.config.cutoff)
            return SolveOutcome("infeasible", None, bound, elapsed, self.incumbent_log)
        return SolveOutcome("optimal", self.best_solution, self.best_f,
                            elapsed, self.incumbent_log)

    def _next_event(self):
        t_active = None
        choice = None
        for ri in range(self.nrides):
            if self.pending[ri] is not None:
                t = self._node_time(self.pending[ri][0])
                if t_active is None or t < t_active:
                    t_active, choice = t, ("out", ri)
            elif self.cur_node[ri] >= 0 and self.pos[ri] < self.rides[ri].n_segments:
                t = self._node_time(self.cur_node[ri])
                if t_active is None or t < t_active:
                    t_active, choice = t, ("seg", ri)
        best_start = None
        for ri in range(self.nrides):
            if self.cur_node[ri] >= 0:
                continue
            grid = self.start_grids[ri]
            if self.minstart[ri] >= len(grid):
                return ("dead", ri, None)  # deferred past the window: infeasible branch
            e_min = grid[self.minstart[ri]]
            if (t_active is None or e_min <= t_active) and (
                    best_start is None or e_min < best_start[1]):
                best_start = (ri, e_min)
        if best_start is not None:
            return ("start", best_start[0], t_active)
        if choice is None:
            return None
        return (choice[0], choice[1], t_active)

    def _dfs(self):
        self._tick()
        if len(self.drivers) >= self._threshold():
            return
        ev = self._next_event()
        if ev is None:
            self._record_leaf()
            return
        kind, ri, t_active = ev
        if kind == "dead":
            return
        if kind == "start":
            self._branch_start(ri, t_active)
        elif kind == "seg":
            self._branch_segment(ri)
        else:
            self._branch_out(ri)

    def _branch_start(self, ri: int, t_active):
        grid = self.start_grids[ri]
        base = self.rides[ri].stops[0]
        lo = self.minstart[ri]
        for gi in range(lo, len(grid)):
            t = grid[gi]
            if t_active is not None and t > t_active:
                break
            node = self.g.node_at.get((base, t))
            if node is None:
                continue
            self.cur_node[ri] = node
            self.times[ri].append(t)
            self._dfs()
            self.times[ri].pop()
            self.cur_node[ri] = -1
        if t_active is not None:
            nxt = lo
            while nxt < len(grid) and grid[nxt] <= t_active:
                nxt += 1
            if nxt > lo:
                saved = self.minstart[ri]
                self.minstart[ri] = nxt
                self._dfs()
                self.minstart[ri] = saved

    def _branch_segment(self, ri: int):
        ride = self.rides[ri]
        k = self.pos[ri]
        node = self.cur_node[ri]
        for aid in self.g.seg_direct.get((ride.id, k), ()):
            arc = self.g.arcs[aid]
            if arc.tail != node:
                continue
            piece = self._mk_piece(ride.id, k, LEG_DIRECT, None, arc)
            self._try_piece(ri, piece, advance=("direct", arc.head))
        if not self.policy_none:
            for acc in ride.stations[k]:
                for aid in self.g.seg_in.get((ride.id, k, acc.station_id), ()):
                    arc = self.g.arcs[aid]
                    if arc.tail != node:
                        continue
                    piece = self._mk_piece(ride.id, k, LEG_IN, acc.station_id, arc)
                    self._try_piece(ri, piece, advance=("pending", arc.head))

    def _branch_out(self, ri: int):
        ride = self.rides[ri]
        snode, k, station = self.pending[ri]
        for aid in self.g.seg_out.get((ride.id, k, station), ()):
            arc = self.g.arcs[aid]
            if arc.tail != snode:
                continue
            piece = self._mk_piece(ride.id, k, LEG_OUT, station, arc)
            self._try_piece(ri, piece, advance=("out", arc.head))

    def _mk_piece(self, rid, seg, leg, station, arc) -> Piece:
        return Piece(rid, seg, leg, station,
                     self.g.nodes[arc.tail].base, self.g.nodes[arc.tail].time,
                     self.g.nodes[arc.head].base, self.g.nodes[arc.head].time,
                     arc.id)

    # -- piece assignment ---------------------------------------------------

    def _try_piece(self, ri: int, piece: Piece, advance):
        if self.policy_none:
            self._try_piece_none(ri, piece, advance)
            return
        seen = set()
        for idx, d in enumerate(self.drivers):
            key = d.key()
            if key in seen:
                continue
            seen.add(key)
            ok, u0, plan, _run = self._connect(d, piece.from_base, piece.start)
            if not ok:
                continue
            dur = piece.duration
            if (u0 + dur > self.legal.t_cs or d.daily + dur > self.legal.t_ds
                    or piece.end - d.start > self.legal.t_dw):
                continue
            self._commit(ri, idx, piece, plan, u0, advance)
        if len(self.drivers) + 1 < self._threshold():
            self._commit_new(ri, piece, advance)

    def _commit_new(self, ri: int, piece: Piece, advance, boarded_at=None):
        d = _Driver(piece.from_base if boarded_at is None else boarded_at[0],
                    piece.start if boarded_at is None else boarded_at[1],
                    0, 0, piece.start if boarded_at is None else boarded_at[1])
        self.drivers.append(d)
        plan: list[tuple] = []
        if boarded_at is not None:
            plan = boarded_at[2]
        self._commit(ri, len(self.drivers) - 1, piece, plan, 0, advance, new=True)
        self.drivers.pop()

    def _commit(self, ri, idx, piece, plan, u0, advance, new=False):
        d = self.drivers[idx]
        snap = d.snapshot()
        for el in plan or []:
            d.elements.append(el)
        d.elements.append(("steer", piece.arc))
        d.pieces.add(piece.arc)
        d.base, d.time = piece.to_base, piece.end
        d.u = u0 + piece.duration
        d.daily += piece.duration
        d.trail_run = 0
        d.last_active = piece.end
        self._advance_and_recurse(ri, piece, advance, idx)
        d.rollback(snap, {piece.arc})

    def _advance_and_recurse(self, ri, piece, advance, steerer_idx):
        self.pieces.append(piece)
        self.carriers.setdefault(piece.from_base, []).append(piece)
        self.ride_pieces[ri].append(piece)
        kind, head = advance
        prev_node = self.cur_node[ri]
        prev_pending = self.pending[ri]
        undo_crew = None
        if kind == "pending":
            self.pending[ri] = (head, piece.segment, piece.station)
            self.stations[ri].append(piece.station)
        elif kind == "out":
            self.pending[ri] = None
            self.pos[ri] += 1
            self.times[ri].append(self._node_time(head))
            self.cur_node[ri] = head
        else:
            self.pos[ri] += 1
            self.times[ri].append(self._node_time(head))
            self.cur_node[ri] = head
            self.stations[ri].append(None)
        ok = True
        if self.policy_none:
            undo_crew = self._crew_update(ri, piece, steerer_idx)
            if undo_crew == "violates":
                undo_crew = None
                ok = False
        if ok:
            self._dfs()
        if undo_crew is not None:
            self._crew_rollback(ri, undo_crew)
        if kind == "pending":
            self.stations[ri].pop()
        elif kind == "out":
            self.pos[ri] -= 1
            self.times[ri].pop()
        else:
            self.pos[ri] -= 1
            self.times[ri].pop()
            self.stations[ri].pop()
        self.pending[ri] = prev_pending
        self.cur_node[ri] = prev_node
        self.ride_pieces[ri].pop()
        self.carriers[piece.from_base].pop()
        self.pieces.pop()

    # -- policy-none crew handling ----------------------------------------

    def _try_piece_none(self, ri: int, piece: Piece, advance):
        ride = self.rides[ri]
        k = piece.segment
        start_t = self.times[ri][0]
        start_b = ride.stops[0]
        seen = set()
        if k == 0:
            for idx, d in enumerate(self.drivers):
                if d.engaged is not None:
                    continue
                key = d.key()
                if key in seen:
                    continue
                seen.add(key)
                ok, u0, plan, _run = self._connect(d, piece.from_base, piece.start)
                if not ok:
                    continue
                if (u0 + piece.duration > self.legal.t_cs
                        or d.daily + piece.duration > self.legal.t_ds
                        or piece.end - d.start > self.legal.t_dw):
                    continue
                self._commit(ri, idx, piece, plan, u0, advance)
            if len(self.drivers) + 1 < self._threshold():
                self._commit_new(ri, piece, advance)
            return
        # later segment: crew members or late recruits who boarded at the start
        for idx in sorted(self.crew[ri]):
            d = self.drivers[idx]
            run = piece.start - d.last_active
            u0 = 0 if run >= self.legal.t_b else d.u
            if (u0 + piece.duration > self.legal.t_cs
                    or d.daily + piece.duration > self.legal.t_ds
                    or piece.end - d.start > self.legal.t_dw):
                continue
            plan = [("deadhead", self.g.arcs[p.arc].twin)
                    for p in self.ride_pieces[ri] if p.start >= d.last_active]
            self._commit(ri, idx, piece, plan, u0, advance)
        for idx, d in enumerate(self.drivers):
            if d.engaged is not None or idx in self.crew[ri]:
                continue
            key = d.key()
            if key in seen:
                continue
            seen.add(key)
            ok, u0, plan, end_run = self._connect(d, start_b, start_t)
            if not ok:
                continue
            if end_run + (piece.start - start_t) >= self.legal.t_b:
                u0 = 0
            if (u0 + piece.duration > self.legal.t_cs
                    or d.daily + piece.duration > self.legal.t_ds
                    or piece.end - d.start > self.legal.t_dw):
                continue
            ride_dh = [("deadhead", self.g.arcs[p.arc].twin)
                       for p in self.ride_pieces[ri]]
            self._commit(ri, idx, piece, (plan or []) + ride_dh, u0, advance)
        if len(self.drivers) + 1 < self._threshold():
            if piece.end - start_t <= self.legal.t_dw:
                ride_dh = [("deadhead", self.g.arcs[p.arc].twin)
                           for p in self.ride_pieces[ri]]
                u0 = 0
                self._commit_new(ri, piece, advance,
                                 boarded_at=(start_b, start_t, ride_dh))

    def _crew_update(self, ri: int, piece: Piece, steerer_idx: int):
        ride = self.rides[ri]
        undo: dict[int, tuple] = {}
        d = self.drivers[steerer_idx]
        if steerer_idx not in self.crew[ri]:
            undo[steerer_idx] = ("join", d.engaged)
            self.crew[ri][steerer_idx] = piece.end
            d.engaged = ri
        else:
            undo[steerer_idx] = ("stamp", self.crew[ri][steerer_idx])
            self.crew[ri][steerer_idx] = piece.end
        if self.pos[ri] < ride.n_segments:
            return undo
        # ride completed: release the crew at the terminal
        terminal_b = piece.to_base
        terminal_t = piece.end
        for idx in sorted(self.crew[ri]):
            m = self.drivers[idx]
            if terminal_t - m.start > self.legal.t_dw:
                self._crew_rollback(ri, undo)
                return "violates"
            undo.setdefault(idx, ("release", m.snapshot()))
            if m.time < terminal_t:
                for p in self.ride_pieces[ri]:
                    if p.start >= m.last_active and p.arc not in m.pieces:
                        m.elements.append(("deadhead", self.g.arcs[p.arc].twin))
                run = terminal_t - m.last_active
                if run >= self.legal.t_b:
                    m.u = 0
                m.trail_run = run
                m.base, m.time = terminal_b, terminal_t
            m.engaged = None
        undo["__crew__"] = dict(self.crew[ri])
        self.crew[ri] = {}
        return undo

    def _crew_rollback(self, ri: int, undo):
        if "__crew__" in undo:
            self.crew[ri] = undo.pop("__crew__")
        for idx, (tag, data) in undo.items():
            d = self.drivers[idx]
            if tag == "join":
                del self.crew[ri][idx]
                d.engaged = data
            elif tag == "stamp":
                self.crew[ri][idx] = data
            else:  # release
                d.rollback(data, set())
                d.engaged = ri

    # -- incumbents ---------------------------------------------------------

    def _record_leaf(self):
        f = len(self.drivers)
        if self.best_f is not None and f >= self.best_f:
            return
        if self.config.cutoff is not None and f >= self.config.cutoff:
            return
        routes = [assemble_route(self.g, d.elements) for d in self.drivers]
        plan = {}
        for ri, ride in enumerate(self.rides):
            plan[ride.id] = RidePlan(tuple(self.times[ri]), tuple(self.stations[ri]))
        sol = Solution(self.g, routes, plan)
        self.best_f = f
        self.best_solution = sol
        self.incumbent_log.append((_time.monotonic() - self.t0, f))
        cb = self.config.incumbent_callback
        if cb is not None:
            better = cb(sol)
            if better is not None and better.objective < self.best_f:
                self.best_f = better.objective
                self.best_solution = better
                self.incumbent_log.append((_time.monotonic() - self.t0, better.objective))
        if self.best_f <= max(self.model.objective_floor, 0):
            raise _Stop  # incumbent meets a proven lower bound


def solve(model: Model, config: SolverConfig | None = None) -> SolveOutcome:
    """Run the embedded exact backend on the model."""
    config = config or SolverConfig()
    if model.cardinality_cap is not None and model.cardinality_cap == 0:
        feasible_empty = len(model.instance.rides) == 0
        if feasible_empty:
            return SolveOutcome("optimal", Solution(model.graph, [], {}), 0, 0.0, [])
        return SolveOutcome("infeasible", None, 1, 0.0, [])
    return _Search(model, config).run()
