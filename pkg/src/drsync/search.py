"""Greedy construction and composite-neighborhood local search.

Construction fixes vehicle plans first (earliest departures, station-free
except where a leg exceeds the continuous-steering cap), then assigns
drivers greedily: reuse whoever is available at the start of a piece,
steer until the route ends or the steering allowance runs out, then either
wait for a break-sized gap or stay aboard to the terminal.

The local search explores seven problem-specific operators over a frozen
solution; ties on the driver count are ranked by remaining working time,
pools are truncated to a share mu, and randomized choices are skewed by
the perturbation exponent p.
"""

from __future__ import annotations

import math
import random
import time as _time
from dataclasses import dataclass

from .instance import Instance, POLICY_FULL, POLICY_NONE
from .solution import (
    ConnectionPlanner,
    PlanError,
    RidePlan,
    Solution,
    assemble_route,
    check_feasibility,
    normalize_ride_times,
    plan_pieces,
)
from .timegraph import FAMILY_STEERING, TimeGraph

COMPOSITE = "composite"
VND = "vnd"


class ConstructionError(Exception):
    """No feasible vehicle plan or crew exists for some ride."""


@dataclass(frozen=True)
class SearchConfig:
    mu: float = 0.2
    mu_min: int = 2
    p: float = 3.0
    deadline: float | None = None     # seconds of wall budget
    mode: str = COMPOSITE
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.mu <= 1):
            raise ValueError("mu must be in (0, 1]")
        if self.mu_min < 1:
            raise ValueError("mu_min must be >= 1")
        if self.p < 1:
            raise ValueError("p must be >= 1")


def perturbed_select(n: int, p: float, rng: random.Random) -> int:
    """Index floor(y^p * n) with y uniform in [0, 1): skewed to the front."""
    if n < 1:
        raise ValueError("empty selection")
    y = rng.random()
    return min(int(y ** p * n), n - 1)


def rank_and_truncate(candidates: list[Solution], mu: float, mu_min: int) -> list[Solution]:
    """Keep the mu-share of candidates with the most remaining working time."""
    if not candidates:
        return []
    ranked = sorted(candidates, key=lambda s: (-s.theta(), s.sort_key()))
    keep = max(math.ceil(mu * len(ranked)), min(mu_min, len(ranked)))
    return ranked[:keep]


def theta(solution: Solution, legal=None) -> int:
    """Total unused working time over the active drivers."""
    return solution.theta(legal)


# ---------------------------------------------------------------------------
# Vehicle plan construction
# ---------------------------------------------------------------------------

def earliest_plan(instance: Instance, graph: TimeGraph) -> dict[str, RidePlan]:
    """Earliest departures, direct legs unless a leg must be split at a station."""
    t_cs = instance.legal.t_cs
    plan: dict[str, RidePlan] = {}
    for ride in instance.rides:
        times = [instance.window(ride.departures[0]).earliest]
        stations: list[str | None] = []
        for k in range(ride.n_segments):
            win = instance.window(ride.departures[k + 1])
            grid = win.grid(instance.ell)
            direct = ride.segment_minutes[k]
            t = next((g for g in grid if g >= times[k] + direct), None)
            if t is not None and t - times[k] <= t_cs:
                times.append(t)
                stations.append(None)
                continue
            choice = None
            if instance.exchange_policy == POLICY_FULL:
                accs = sorted(
                    (a for a in ride.stations[k]
                     if a.detour(direct) <= instance.zeta and a.minutes_in <= t_cs),
                    key=lambda a: (a.detour(direct), a.station_id))
                for acc in accs:
                    ts = times[k] + acc.minutes_in
                    t = next((g for g in grid if g >= ts + acc.minutes_out), None)
                    if t is not None and t - ts <= t_cs:
                        choice = (acc.station_id, t)
                        break
            if choice is None:
                raise ConstructionError(
                    f"ride {ride.id} segment {k}: no coverable departure exists")
            stations.append(choice[0])
            times.append(choice[1])
        plan[ride.id] = RidePlan(tuple(times), tuple(stations))
    return plan


# ---------------------------------------------------------------------------
# Driver assignment (the greedy core, reused after every plan change)
# ---------------------------------------------------------------------------

class _Sim:
    __slots__ = ("base", "time", "u", "daily", "start", "trail_run", "elements")

    def __init__(self, base, time):
        self.base = base
        self.time = time
        self.u = 0
        self.daily = 0
        self.start = time
        self.trail_run = 0
        self.elements: list[tuple] = []

    def rested_u(self, at_time: int, t_b: int) -> int:
        return 0 if at_time - self.time >= t_b else self.u


def _fits(sim: _Sim, u_eff: int, piece, legal) -> bool:
    d = piece.duration
    return (u_eff + d <= legal.t_cs and sim.daily + d <= legal.t_ds
            and piece.end - sim.start <= legal.t_dw)


def assign_drivers(instance: Instance, graph: TimeGraph,
                   plan: dict[str, RidePlan]) -> Solution:
    """Greedy driver assignment over a fixed vehicle plan; always feasible."""
    legal = instance.legal
    pieces = plan_pieces(instance, graph, plan)
    if instance.exchange_policy == POLICY_NONE:
        routes = _assign_none(instance, graph, plan, pieces)
    else:
        routes = _assign_exchange(instance, graph, plan, pieces)
    return Solution(graph, routes, plan)


def _assign_exchange(instance, graph, plan, pieces):
    legal = instance.legal
    by_ride: dict[str, list] = {}
    for p in pieces:
        by_ride.setdefault(p.ride, []).append(p)
    vehicle_routes = sorted(by_ride.values(), key=lambda vp: (vp[0].start, vp[0].ride))
    departures_from: dict[str, list[int]] = {}
    for p in pieces:
        departures_from.setdefault(p.from_base, []).append(p.start)
    for v in departures_from.values():
        v.sort()

    drivers: list[_Sim] = []

    def take(sim: _Sim, vp, pos):
        if sim.time < vp[pos].start:
            sim.elements.append(("wait", sim.base, sim.time, vp[pos].start))
            sim.u = sim.rested_u(vp[pos].start, legal.t_b)
            sim.trail_run = 0
            sim.time = vp[pos].start
        while pos < len(vp) and _fits(sim, sim.u, vp[pos], legal):
            p = vp[pos]
            sim.elements.append(("steer", p.arc))
            sim.u += p.duration
            sim.daily += p.duration
            sim.base, sim.time = p.to_base, p.end
            sim.trail_run = 0
            pos += 1
        return pos

    for vp in vehicle_routes:
        pos = 0
        while pos < len(vp):
            p = vp[pos]
            pick = None
            for si, sim in enumerate(drivers):
                if sim.base != p.from_base or sim.time > p.start:
                    continue
                if _fits(sim, sim.rested_u(p.start, legal.t_b), p, legal):
                    pick = si
                    break
            if pick is None:
                drivers.append(_Sim(p.from_base, p.start))
                pick = len(drivers) - 1
            sim = drivers[pick]
            new_pos = take(sim, vp, pos)
            pos = new_pos
            if pos < len(vp):
                _relieve(sim, vp, pos, departures_from, legal, graph)
    return [assemble_route(graph, d.elements) for d in drivers if d.elements]


def _relieve(sim: _Sim, vp, pos, departures_from, legal, graph):
    """Relieved mid-route: wait here for a break-sized gap, else ride along."""
    here, now = sim.base, sim.time
    nxt = next((t for t in departures_from.get(here, ()) if t > now), None)
    wait_ok = nxt is not None and legal.t_b <= nxt - now <= 4 * legal.t_b
    span_ok = vp[-1].end - sim.start <= legal.t_dw
    if wait_ok or not span_ok:
        return  # stay idle; a later takeover emits the waiting chain
    for p in vp[pos:]:
        sim.elements.append(("deadhead", graph.arcs[p.arc].twin))
    run = vp[-1].end - now
    sim.base, sim.time = vp[-1].to_base, vp[-1].end
    sim.trail_run = run
    if run >= legal.t_b:
        sim.u = 0


def _assign_none(instance, graph, plan, pieces):
    legal = instance.legal
    by_ride: dict[str, list] = {}
    for p in pieces:
        by_ride.setdefault(p.ride, []).append(p)
    vehicle_routes = sorted(by_ride.values(), key=lambda vp: (vp[0].start, vp[0].ride))
    drivers: list[_Sim] = []

    for vp in vehicle_routes:
        start_b, start_t = vp[0].from_base, vp[0].start
        term_t = vp[-1].end
        if term_t - start_t > legal.t_dw:
            raise ConstructionError(
                f"ride {vp[0].ride}: span {term_t - start_t} exceeds the daily "
                "working limit for an aboard crew")
        if any(p.duration > legal.t_cs for p in vp):
            raise ConstructionError(
                f"ride {vp[0].ride}: a leg exceeds continuous steering and "
                "stations are disabled under this exchange policy")
        crew: list[tuple[int, int]] = []   # (driver index, last_active time)
        pos = 0
        while pos < len(vp):
            p = vp[pos]
            pick = None
            for ci, (di, last) in enumerate(crew):
                sim = drivers[di]
                u_eff = 0 if p.start - last >= legal.t_b else sim.u
                if u_eff + p.duration <= legal.t_cs and sim.daily + p.duration <= legal.t_ds:
                    pick = ci
                    for q in vp:
                        if last <= q.start < p.start:
                            sim.elements.append(("deadhead", graph.arcs[q.arc].twin))
                    sim.u = u_eff
                    sim.base, sim.time = p.from_base, p.start
                    break
            if pick is None:
                di = None
                for si, sim in enumerate(drivers):
                    if sim.base != start_b or sim.time > start_t:
                        continue
                    if term_t - sim.start > legal.t_dw:
                        continue
                    u_eff = sim.rested_u(start_t, legal.t_b)
                    if p.start - start_t >= legal.t_b:
                        u_eff = 0
                    if u_eff + p.duration <= legal.t_cs and sim.daily + p.duration <= legal.t_ds:
                        di = si
                        break
                if di is None:
                    drivers.append(_Sim(start_b, start_t))
                    di = len(drivers) - 1
                sim = drivers[di]
                if sim.time < start_t:
                    sim.elements.append(("wait", sim.base, sim.time, start_t))
                    sim.u = sim.rested_u(start_t, legal.t_b)
                    sim.time = start_t
                for q in vp[:pos]:
                    sim.elements.append(("deadhead", graph.arcs[q.arc].twin))
                if p.start - start_t >= legal.t_b:
                    sim.u = 0
                crew.append((di, start_t))
                pick = len(crew) - 1
            di, _last = crew[pick]
            sim = drivers[di]
            stint_end = pos
            while stint_end < len(vp):
                q = vp[stint_end]
                if (sim.u + q.duration > legal.t_cs
                        or sim.daily + q.duration > legal.t_ds):
                    break
                sim.elements.append(("steer", q.arc))
                sim.u += q.duration
                sim.daily += q.duration
                stint_end += 1
            sim.base = vp[stint_end - 1].to_base
            sim.time = vp[stint_end - 1].end
            crew[pick] = (di, sim.time)
            # everyone else is aboard; their state catches up at release
            pos = stint_end
        for di, last in crew:
            sim = drivers[di]
            if sim.time < term_t:
                for q in vp:
                    if q.start >= last:
                        sim.elements.append(("deadhead", graph.arcs[q.arc].twin))
                run = term_t - last
                sim.u = 0 if run >= legal.t_b else sim.u
                sim.trail_run = run
                sim.base, sim.time = vp[-1].to_base, term_t
            else:
                sim.trail_run = 0
    return [assemble_route(graph, d.elements) for d in drivers if d.elements]


def construct(instance: Instance, graph: TimeGraph) -> Solution:
    """Greedy start solution: earliest station-free plan, then driver assignment."""
    return assign_drivers(instance, graph, earliest_plan(instance, graph))


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def _feasible(cands: list[Solution], instance: Instance, graph: TimeGraph) -> list[Solution]:
    return [c for c in cands if not check_feasibility(c, instance, graph)]


def _driver_pieces(solution: Solution) -> list[list]:
    g = solution.graph
    idx = {}
    for p in plan_pieces(g.instance, g, solution.plan):
        idx[p.arc] = p
    out = []
    for route in solution.routes:
        out.append([idx[a] for a in route if g.arcs[a].family == FAMILY_STEERING])
    return out


def _rebuild_driver(instance, graph, planner, pieces):
    """Elements for a driver serving `pieces` in order, or None if illegal."""
    legal = instance.legal
    own = frozenset(p.arc for p in pieces)
    first = pieces[0]
    elements: list[tuple] = [("steer", first.arc)]
    u = first.duration
    daily = first.duration
    base, now = first.to_base, first.end
    for p in pieces[1:]:
        if p.start < now:
            return None
        reachable, renewable, plan_any, plan_renew = planner.connect(
            base, now, p.from_base, p.start, own)
        if not reachable:
            return None
        u0 = 0 if renewable else u
        if (u0 + p.duration > legal.t_cs or daily + p.duration > legal.t_ds
                or p.end - pieces[0].start > legal.t_dw):
            return None
        elements += (plan_renew if renewable else plan_any) + [("steer", p.arc)]
        u = u0 + p.duration
        daily += p.duration
        base, now = p.to_base, p.end
    return elements


def operator_reassign_segments(solution, instance, graph, config, rng) -> list[Solution]:
    """Remove one driver by absorbing their pieces into the other routes."""
    per_driver = _driver_pieces(solution)
    if len(per_driver) < 2:
        return []
    all_pieces = [p for dp in per_driver for p in dp]
    planner = ConnectionPlanner(instance, graph, all_pieces)
    out = []
    for victim in range(len(per_driver)):
        hosts = [list(dp) for di, dp in enumerate(per_driver) if di != victim]

        def place(i) -> bool:
            if i == len(per_driver[victim]):
                return True
            piece = per_driver[victim][i]
            for h in hosts:
                trial = sorted(h + [piece], key=lambda p: (p.start, p.end))
                if _rebuild_driver(instance, graph, planner, trial) is None:
                    continue
                h.append(piece)
                h.sort(key=lambda p: (p.start, p.end))
                if place(i + 1):
                    return True
                h.remove(piece)
            return False

        if not place(0):
            continue
        routes = []
        for h in hosts:
            els = _rebuild_driver(instance, graph, planner, h)
            if els is None:
                break
            routes.append(assemble_route(graph, els))
        else:
            out.append(Solution(graph, routes, solution.plan))
    return _feasible(out, instance, graph)


def _shift(solution, instance, graph, delta) -> list[Solution]:
    out = []
    for rid in sorted(solution.plan):
        rp = solution.plan[rid]
        ride = next(r for r in instance.rides if r.id == rid)
        times = [t + delta for t in rp.times]
        ok = all(
            instance.window(ride.departures[i]).earliest <= times[i]
            <= instance.window(ride.departures[i]).latest
            for i in range(len(times))
        )
        if not ok:
            continue
        plan = dict(solution.plan)
        plan[rid] = RidePlan(tuple(times), rp.stations)
        try:
            out.append(assign_drivers(instance, graph, plan))
        except (PlanError, ConstructionError):
            continue
    return out


def operator_postpone(solution, instance, graph, config, rng) -> list[Solution]:
    """Delay one ride's departures by one discretization step."""
    return _feasible(_shift(solution, instance, graph, instance.ell), instance, graph)


def operator_prepone(solution, instance, graph, config, rng) -> list[Solution]:
    """Advance one ride's departures by one discretization step."""
    return _feasible(_shift(solution, instance, graph, -instance.ell), instance, graph)


def _insertable_segments(solution, instance):
    segs = []
    for rid in sorted(solution.plan):
        rp = solution.plan[rid]
        ride = next(r for r in instance.rides if r.id == rid)
        for k in range(ride.n_segments):
            if rp.stations[k] is not None:
                continue
            accs = [a for a in ride.stations[k]
                    if a.detour(ride.segment_minutes[k]) <= instance.zeta
                    and a.minutes_in <= instance.legal.t_cs]
            if accs:
                segs.append((rp.times[k + 1] - rp.times[k], rid, k, ride, accs))
    segs.sort(key=lambda s: (-s[0], s[1], s[2]))
    return segs


def _insert_station(solution, instance, graph, config, rng, order_fn) -> list[Solution]:
    if instance.exchange_policy != POLICY_FULL:
        return []
    segs = _insertable_segments(solution, instance)
    if not segs:
        return []
    _dur, rid, k, ride, accs = segs[perturbed_select(len(segs), config.p, rng)]
    accs = order_fn(list(accs), ride, k)
    acc = accs[perturbed_select(len(accs), config.p, rng)]
    rp = solution.plan[rid]
    stations = list(rp.stations)
    stations[k] = acc.station_id
    times = list(rp.times)
    times[k + 1] = max(times[k + 1], times[k] + acc.minutes_in + acc.minutes_out)
    fixed = normalize_ride_times(instance, ride, times, tuple(stations))
    if fixed is None:
        return []
    plan = dict(solution.plan)
    plan[rid] = RidePlan(fixed, tuple(stations))
    try:
        cand = assign_drivers(instance, graph, plan)
    except (PlanError, ConstructionError):
        return []
    return _feasible([cand], instance, graph)


def operator_insert_stop_random(solution, instance, graph, config, rng) -> list[Solution]:
    """Split a long leg at a station chosen uniformly."""
    def order(accs, ride, k):
        rng.shuffle(accs)
        return accs
    return _insert_station(solution, instance, graph, config, rng, order)


def operator_insert_stop_shortest_detour(solution, instance, graph, config, rng) -> list[Solution]:
    """Split a long leg, favoring the station with the smallest detour."""
    def order(accs, ride, k):
        return sorted(accs, key=lambda a: (a.detour(ride.segment_minutes[k]), a.station_id))
    return _insert_station(solution, instance, graph, config, rng, order)


def operator_insert_stop_highest_sync(solution, instance, graph, config, rng) -> list[Solution]:
    """Split a long leg, favoring stations other routes already pass."""
    g = solution.graph
    visits: dict[str, int] = {}
    for route in solution.routes:
        for aid in route:
            arc = g.arcs[aid]
            for node in (arc.tail, arc.head):
                b = g.nodes[node].base
                visits[b] = visits.get(b, 0) + 1

    def order(accs, ride, k):
        return sorted(accs, key=lambda a: (-visits.get(a.station_id, 0), a.station_id))
    return _insert_station(solution, instance, graph, config, rng, order)


def operator_remove_stop(solution, instance, graph, config, rng) -> list[Solution]:
    """Drop a station visit wherever the direct leg is available."""
    out = []
    for rid in sorted(solution.plan):
        rp = solution.plan[rid]
        ride = next(r for r in instance.rides if r.id == rid)
        for k in range(ride.n_segments):
            if rp.stations[k] is None:
                continue
            gap = rp.times[k + 1] - rp.times[k]
            if gap < ride.segment_minutes[k] or gap > instance.legal.t_cs:
                continue
            stations = list(rp.stations)
            stations[k] = None
            plan = dict(solution.plan)
            plan[rid] = RidePlan(rp.times, tuple(stations))
            try:
                out.append(assign_drivers(instance, graph, plan))
            except (PlanError, ConstructionError):
                continue
    return _feasible(out, instance, graph)


OPERATORS = (
    operator_reassign_segments,
    operator_postpone,
    operator_prepone,
    operator_insert_stop_random,
    operator_insert_stop_shortest_detour,
    operator_insert_stop_highest_sync,
    operator_remove_stop,
)


# ---------------------------------------------------------------------------
# Local search
# ---------------------------------------------------------------------------

def _pool_truncate(cands: list[Solution], config: SearchConfig) -> list[Solution]:
    groups: dict[int, list[Solution]] = {}
    for c in cands:
        groups.setdefault(c.objective, []).append(c)
    out = []
    for f in sorted(groups):
        out.extend(rank_and_truncate(groups[f], config.mu, config.mu_min))
    return out


def _op_rng(config: SearchConfig, iteration: int, op_index: int) -> random.Random:
    return random.Random(config.seed * 1000003 + iteration * 101 + op_index)


def local_search(solution: Solution, instance: Instance, graph: TimeGraph,
                 config: SearchConfig | None = None,
                 trace: list[tuple[int, int]] | None = None) -> Solution:
    """Lexicographic descent on (driver count, -remaining working time)."""
    config = config or SearchConfig()
    t_end = None if config.deadline is None else _time.monotonic() + config.deadline
    current = solution
    f0, th0 = current.objective, current.theta()
    if trace is not None:
        trace.append((f0, th0))
    iteration = 0
    op_cursor = 0
    while t_end is None or _time.monotonic() < t_end:
        if config.mode == COMPOSITE:
            pool: list[Solution] = []
            for oi, op in enumerate(OPERATORS):
                rng = _op_rng(config, iteration, oi)
                pool.extend(_pool_truncate(
                    op(current, instance, graph, config, rng), config))
        else:
            rng = _op_rng(config, iteration, op_cursor)
            pool = _pool_truncate(
                OPERATORS[op_cursor](current, instance, graph, config, rng), config)
        better = [c for c in pool
                  if c.objective < f0 or (c.objective == f0 and c.theta() > th0)]
        iteration += 1
        if better:
            current = min(better, key=lambda c: (c.objective, -c.theta(), c.sort_key()))
            f0, th0 = current.objective, current.theta()
            if trace is not None:
                trace.append((f0, th0))
            op_cursor = 0
        else:
            if config.mode == COMPOSITE:
                break
            op_cursor += 1
            if op_cursor == len(OPERATORS):
                break
    return current
