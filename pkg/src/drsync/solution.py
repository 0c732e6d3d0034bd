"""Solution representation, feasibility checking, and route plumbing.

A solution is a set of driver routes (arc sequences source -> sink) over
the time graph. The vehicle side is captured by a plan: per ride, the
chosen departure minute of every stop and the station (if any) inserted
into each segment. Pieces are the steering arcs a plan implies; every
piece must be steered by exactly one driver.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections import deque

from .instance import Instance, POLICY_NONE
from .legality import rest_renews
from .timegraph import (
    DEPOT,
    FAMILY_DEADHEAD,
    FAMILY_DEPOT,
    FAMILY_STEERING,
    FAMILY_WAITING,
    LEG_DIRECT,
    LEG_IN,
    LEG_OUT,
    TimeGraph,
)


class SolutionStructureError(Exception):
    """A route is not a well-formed source->sink path over existing arcs."""


class PlanError(Exception):
    """A plan references timings or stations the graph does not admit."""


@dataclass(frozen=True)
class Violation:
    kind: str      # uncovered_segment | continuous_steering | daily_steering |
                   # daily_working | break_too_short | desync | detour
    subject: str   # driver or ride identifier
    detail: int    # minutes over limit, or a count for structural kinds


@dataclass(frozen=True)
class RidePlan:
    times: tuple[int, ...]
    stations: tuple[str | None, ...]


@dataclass(frozen=True)
class Piece:
    """One steering arc a plan requires, in instance terms."""

    ride: str
    segment: int
    leg: str
    station: str | None
    from_base: str
    start: int
    to_base: str
    end: int
    arc: int

    @property
    def duration(self) -> int:
        return self.end - self.start


_LEG_RANK = {LEG_IN: 0, LEG_DIRECT: 1, LEG_OUT: 2}


def _steer_index(graph: TimeGraph) -> dict:
    idx = getattr(graph, "_steer_idx", None)
    if idx is None:
        idx = {}
        for arc in graph.arcs:
            if arc.family == FAMILY_STEERING:
                tail_t = graph.nodes[arc.tail].time
                head_t = graph.nodes[arc.head].time
                idx[(arc.ride, arc.segment, arc.leg, arc.station, tail_t, head_t)] = arc.id
        graph._steer_idx = idx
    return idx


def plan_pieces(instance: Instance, graph: TimeGraph, plan: dict[str, RidePlan]) -> list[Piece]:
    """Expand a plan into its chronologically ordered steering pieces."""
    idx = _steer_index(graph)
    ride_order = {r.id: i for i, r in enumerate(instance.rides)}
    rides = {r.id: r for r in instance.rides}
    pieces: list[Piece] = []
    for rid, rp in plan.items():
        ride = rides[rid]
        for k in range(ride.n_segments):
            t0, t1 = rp.times[k], rp.times[k + 1]
            a, b = ride.stops[k], ride.stops[k + 1]
            st = rp.stations[k]
            if st is None:
                arc = idx.get((rid, k, LEG_DIRECT, None, t0, t1))
                if arc is None:
                    raise PlanError(f"ride {rid} segment {k}: no direct arc {t0}->{t1}")
                pieces.append(Piece(rid, k, LEG_DIRECT, None, a, t0, b, t1, arc))
            else:
                acc = next((x for x in ride.stations[k] if x.station_id == st), None)
                if acc is None:
                    raise PlanError(f"ride {rid} segment {k}: station {st} not admissible")
                ts = t0 + acc.minutes_in
                arc_in = idx.get((rid, k, LEG_IN, st, t0, ts))
                arc_out = idx.get((rid, k, LEG_OUT, st, ts, t1))
                if arc_in is None or arc_out is None:
                    raise PlanError(f"ride {rid} segment {k}: no via-{st} arcs {t0}->{ts}->{t1}")
                pieces.append(Piece(rid, k, LEG_IN, st, a, t0, st, ts, arc_in))
                pieces.append(Piece(rid, k, LEG_OUT, st, st, ts, b, t1, arc_out))
    pieces.sort(key=lambda p: (p.start, p.end, ride_order[p.ride], p.segment, _LEG_RANK[p.leg]))
    return pieces


def segment_min_duration(ride, k: int, station: str | None) -> int:
    if station is None:
        return ride.segment_minutes[k]
    acc = next(x for x in ride.stations[k] if x.station_id == station)
    return acc.minutes_in + acc.minutes_out


def segment_max_duration(ride, k: int, station: str | None, t_cs: int) -> int:
    """Largest departure gap the graph still has an arc chain for."""
    if station is None:
        return t_cs
    acc = next(x for x in ride.stations[k] if x.station_id == station)
    return acc.minutes_in + t_cs  # out leg carries the slack


def normalize_ride_times(
    instance: Instance, ride, times: list[int], stations: tuple[str | None, ...]
) -> tuple[int, ...] | None:
    """Push times forward onto feasible grid points; None if a window breaks."""
    t_cs = instance.legal.t_cs
    ell = instance.ell
    out = list(times)
    win0 = instance.window(ride.departures[0])
    if out[0] < win0.earliest or out[0] > win0.latest or (out[0] - win0.earliest) % ell:
        return None
    for k in range(ride.n_segments):
        win = instance.window(ride.departures[k + 1])
        lo = out[k] + segment_min_duration(ride, k, stations[k])
        t = max(out[k + 1], lo, win.earliest)
        rem = (t - win.earliest) % ell
        if rem:
            t += ell - rem
        if t > win.latest:
            return None
        if t - out[k] > segment_max_duration(ride, k, stations[k], t_cs):
            return None
        out[k + 1] = t
    return tuple(out)


# ---------------------------------------------------------------------------
# Driver routes
# ---------------------------------------------------------------------------

# timeline elements: ("steer", arc_id) | ("deadhead", arc_id) | ("wait", base, t0, t1)


def assemble_route(graph: TimeGraph, elements: list[tuple]) -> tuple[int, ...]:
    """Expand timeline elements into a full source->sink arc sequence."""
    arcs: list[int] = []
    node = None
    for el in elements:
        if el[0] == "wait":
            _, base, t0, t1 = el
            cur = graph.node_at[(base, t0)]
            if node is None:
                arcs.append(graph.depot_out[cur])
            elif cur != node:
                raise SolutionStructureError(f"wait does not start where driver is ({base}@{t0})")
            while graph.nodes[cur].time < t1:
                aid = graph.wait_next.get(cur)
                if aid is None:
                    raise SolutionStructureError(f"no waiting chain from {base}@{graph.nodes[cur].time}")
                arcs.append(aid)
                cur = graph.arcs[aid].head
            if graph.nodes[cur].time != t1:
                raise SolutionStructureError(f"no copy of {base} at {t1}")
            node = cur
        else:
            _, aid = el
            arc = graph.arcs[aid]
            if node is None:
                arcs.append(graph.depot_out[arc.tail])
            elif arc.tail != node:
                raise SolutionStructureError("disconnected timeline element")
            arcs.append(aid)
            node = arc.head
    if node is None:
        raise SolutionStructureError("empty driver timeline")
    arcs.append(graph.depot_in[node])
    return tuple(arcs)


class Solution:
    """Driver routes over the graph plus the vehicle plan they serve."""

    def __init__(self, graph: TimeGraph, routes: list[tuple[int, ...]],
                 plan: dict[str, RidePlan]):
        self.graph = graph
        self.routes = [tuple(r) for r in routes]
        self.plan = dict(plan)

    @property
    def objective(self) -> int:
        return len(self.routes)

    def theta(self, legal=None) -> int:
        legal = legal or self.graph.instance.legal
        total = 0
        for route in self.routes:
            first, last = self.route_span(route)
            total += legal.t_dw - (last - first)
        return total

    def route_span(self, route: tuple[int, ...]) -> tuple[int, int]:
        times = [
            t
            for aid in route
            for t in (self.graph.nodes[self.graph.arcs[aid].tail].time,
                      self.graph.nodes[self.graph.arcs[aid].head].time)
            if t is not None
        ]
        return min(times), max(times)

    def sort_key(self):
        return tuple(self.routes)

    def to_dict(self) -> dict:
        g = self.graph
        rides = []
        for rid in sorted(self.plan):
            rp = self.plan[rid]
            rides.append({
                "id": rid,
                "times": list(rp.times),
                "stations": list(rp.stations),
            })
        drivers = []
        for k, route in enumerate(self.routes):
            steps = []
            for aid in route:
                arc = g.arcs[aid]
                steps.append({
                    "family": arc.family,
                    "from": {"base": g.nodes[arc.tail].base, "time": g.nodes[arc.tail].time},
                    "to": {"base": g.nodes[arc.head].base, "time": g.nodes[arc.head].time},
                    "ride": arc.ride,
                    "segment": arc.segment,
                    "station": arc.station,
                })
            drivers.append({"id": k, "route": steps})
        return {
            "schema": "drsync-solution/1",
            "objective": self.objective,
            "theta": self.theta(),
            "rides": rides,
            "drivers": drivers,
        }


def plan_from_routes(instance: Instance, graph: TimeGraph,
                     routes: list[tuple[int, ...]]) -> dict[str, RidePlan]:
    """Recover the vehicle plan implied by the steering arcs of a route set."""
    rides = {r.id: r for r in instance.rides}
    times: dict[str, dict[int, int]] = {rid: {} for rid in rides}
    stations: dict[str, dict[int, str | None]] = {rid: {} for rid in rides}
    for route in routes:
        for aid in route:
            arc = graph.arcs[aid]
            if arc.family != FAMILY_STEERING:
                continue
            rid, k = arc.ride, arc.segment
            if arc.leg in (LEG_DIRECT, LEG_IN):
                times[rid][k] = graph.nodes[arc.tail].time
                stations[rid][k] = arc.station
            if arc.leg in (LEG_DIRECT, LEG_OUT):
                times[rid][k + 1] = graph.nodes[arc.head].time
    plan = {}
    for rid, ride in rides.items():
        tvec = tuple(times[rid].get(i, -1) for i in range(len(ride.stops)))
        svec = tuple(stations[rid].get(k) for k in range(ride.n_segments))
        plan[rid] = RidePlan(tvec, svec)
    return plan


# ---------------------------------------------------------------------------
# Transfer planning (waits + deadhead hops between assignments)
# ---------------------------------------------------------------------------

class ConnectionPlanner:
    """Finds wait/deadhead itineraries between two located points in time.

    Carriers are the pieces of the current plan; under the no-exchange
    policy a deadheading driver must ride whole rides, so carriers become
    ride-level units there.
    """

    def __init__(self, instance: Instance, graph: TimeGraph, pieces: list[Piece]):
        self.graph = graph
        self.t_b = instance.legal.t_b
        self.policy_none = instance.exchange_policy == POLICY_NONE
        self.units: dict[str, list[tuple[int, str, int, tuple[Piece, ...]]]] = {}
        if self.policy_none:
            by_ride: dict[str, list[Piece]] = {}
            for p in pieces:
                by_ride.setdefault(p.ride, []).append(p)
            units = []
            for chunk in by_ride.values():
                chunk.sort(key=lambda p: p.start)
                units.append((chunk[0].from_base, chunk[0].start,
                              chunk[-1].to_base, chunk[-1].end, tuple(chunk)))
        else:
            units = [(p.from_base, p.start, p.to_base, p.end, (p,)) for p in pieces]
        for fb, st, tb, en, legs in sorted(units, key=lambda u: (u[1], u[3])):
            self.units.setdefault(fb, []).append((st, tb, en, legs))

    def connect(
        self,
        from_base: str,
        from_time: int,
        to_base: str,
        to_time: int,
        exclude: frozenset[int] = frozenset(),
    ) -> tuple[bool, bool, list[tuple] | None, list[tuple] | None]:
        """(reachable, renewable, some plan, some renewing plan)."""
        t_b = self.t_b
        start = (from_base, from_time, 0, False)
        parents: dict[tuple, tuple | None] = {start: None}
        queue = deque([start])
        goal_any: tuple | None = None
        goal_renew: tuple | None = None

        def check_goal(state):
            nonlocal goal_any, goal_renew
            base, time, run, renewed = state
            if base == to_base and time <= to_time:
                if goal_any is None:
                    goal_any = state
                if goal_renew is None and (renewed or to_time - time >= t_b):
                    goal_renew = state

        check_goal(start)
        while queue and goal_renew is None:
            state = queue.popleft()
            base, time, run, renewed = state
            for st, _tb, en, legs in self.units.get(base, ()):
                if st < time or en > to_time:
                    continue
                if exclude and any(p.arc in exclude for p in legs):
                    continue
                wait = st - time
                new_run = (run + en - st) if wait == 0 else (en - st)
                nxt = (legs[-1].to_base, en, min(new_run, t_b),
                       renewed or wait >= t_b or new_run >= t_b)
                if nxt not in parents:
                    parents[nxt] = (state, legs, wait)
                    queue.append(nxt)
                    check_goal(nxt)
        if goal_any is None:
            return False, False, None, None

        def unwind(goal):
            steps: list[tuple] = []
            cur = goal
            while parents[cur] is not None:
                prev, legs, wait = parents[cur]
                chunk = [("deadhead", self.graph.arcs[p.arc].twin) for p in legs]
                if wait:
                    chunk.insert(0, ("wait", legs[0].from_base, prev[1], legs[0].start))
                steps = chunk + steps
                cur = prev
            if goal[1] < to_time:
                steps.append(("wait", to_base, goal[1], to_time))
            return steps

        plan_any = unwind(goal_any)
        plan_renew = unwind(goal_renew) if goal_renew is not None else None
        return True, goal_renew is not None, plan_any, plan_renew


# ---------------------------------------------------------------------------
# Feasibility checking
# ---------------------------------------------------------------------------

def _validate_structure(graph: TimeGraph, route: tuple[int, ...], who: str) -> None:
    if len(route) < 3:
        raise SolutionStructureError(f"{who}: route too short to be source->sink")
    for aid in route:
        if not (0 <= aid < len(graph.arcs)):
            raise SolutionStructureError(f"{who}: arc {aid} does not exist")
    first, last = graph.arcs[route[0]], graph.arcs[route[-1]]
    if first.tail != graph.source or first.family != FAMILY_DEPOT:
        raise SolutionStructureError(f"{who}: route does not start at the source")
    if last.head != graph.sink or last.family != FAMILY_DEPOT:
        raise SolutionStructureError(f"{who}: route does not end at the sink")
    for a, b in zip(route, route[1:]):
        if graph.arcs[a].head != graph.arcs[b].tail:
            raise SolutionStructureError(f"{who}: dangling arcs {a}->{b}")
    for aid in route[1:-1]:
        if graph.arcs[aid].family == FAMILY_DEPOT:
            raise SolutionStructureError(f"{who}: depot arc inside the route")
    if not any(graph.arcs[aid].mode == 1 for aid in route):
        raise SolutionStructureError(f"{who}: active driver without a steering arc")


def check_feasibility(solution: Solution, instance: Instance,
                      graph: TimeGraph | None = None) -> list[Violation]:
    """Every hours-of-service, coverage and synchronization rule; empty = feasible."""
    g = graph or solution.graph
    legal = instance.legal
    out: list[Violation] = []

    for k, route in enumerate(solution.routes):
        _validate_structure(g, route, f"driver {k}")

    steer_users: dict[int, set[int]] = {}
    for k, route in enumerate(solution.routes):
        for aid in route:
            if g.arcs[aid].family == FAMILY_STEERING:
                steer_users.setdefault(aid, set()).add(k)

    # per-driver legality
    for k, route in enumerate(solution.routes):
        who = f"driver {k}"
        u = 0
        daily = 0
        block: tuple | None = None  # ("wait", base, total) | ("deadhead", total)
        worst_short = 0
        flagged = False

        def close_block():
            nonlocal u, block, worst_short
            if block is not None:
                total = block[-1]
                if rest_renews(total, legal):
                    u = 0
                    worst_short = 0
                else:
                    worst_short = max(worst_short, total)
                block = None

        for aid in route:
            arc = g.arcs[aid]
            if arc.family == FAMILY_DEPOT:
                continue
            if arc.family == FAMILY_STEERING:
                close_block()
                u += arc.duration
                daily += arc.duration
                if u > legal.t_cs and not flagged:
                    flagged = True
                    if worst_short > 0:
                        out.append(Violation("break_too_short", who, legal.t_b - worst_short))
                    else:
                        out.append(Violation("continuous_steering", who, u - legal.t_cs))
            elif arc.family == FAMILY_WAITING:
                base = g.nodes[arc.tail].base
                if block is not None and block[0] == "wait" and block[1] == base:
                    block = ("wait", base, block[2] + arc.duration)
                else:
                    close_block()
                    block = ("wait", base, arc.duration)
            else:  # deadhead
                if block is not None and block[0] == "deadhead":
                    block = ("deadhead", block[1] + arc.duration)
                else:
                    close_block()
                    block = ("deadhead", arc.duration)
                twin_ok = any(l != k for l in steer_users.get(arc.twin, ()))
                if not twin_ok:
                    out.append(Violation("desync", who, max(1, arc.duration)))
        if daily > legal.t_ds:
            out.append(Violation("daily_steering", who, daily - legal.t_ds))
        first, last = solution.route_span(route)
        if last - first > legal.t_dw:
            out.append(Violation("daily_working", who, last - first - legal.t_dw))

    # coverage, continuity, detours
    rides = {r.id: r for r in instance.rides}
    used: dict[tuple[str, int], list] = {}
    for route in solution.routes:
        for aid in route:
            arc = g.arcs[aid]
            if arc.family == FAMILY_STEERING:
                used.setdefault((arc.ride, arc.segment), []).append(arc)
    for rid, ride in rides.items():
        end_node = None
        for kseg in range(ride.n_segments):
            who = f"ride {rid} segment {kseg}"
            arcs = used.get((rid, kseg), [])
            direct = [a for a in arcs if a.leg == LEG_DIRECT]
            ins = [a for a in arcs if a.leg == LEG_IN]
            outs = [a for a in arcs if a.leg == LEG_OUT]
            start_node = None
            seg_end = None
            if not arcs:
                out.append(Violation("uncovered_segment", who, ride.segment_minutes[kseg]))
            elif len(direct) == 1 and not ins and not outs:
                start_node, seg_end = direct[0].tail, direct[0].head
            elif not direct and len(ins) == 1 and len(outs) == 1 and ins[0].head == outs[0].tail:
                start_node, seg_end = ins[0].tail, outs[0].head
                acc = next((x for x in ride.stations[kseg]
                            if x.station_id == ins[0].station), None)
                if acc is None:
                    out.append(Violation("desync", who, 1))
                elif acc.detour(ride.segment_minutes[kseg]) > instance.zeta:
                    out.append(Violation(
                        "detour", who,
                        acc.detour(ride.segment_minutes[kseg]) - instance.zeta))
            else:
                out.append(Violation("desync", who, len(arcs)))
            if start_node is not None and end_node is not None and start_node != end_node:
                out.append(Violation("desync", f"ride {rid} stop {kseg}", 1))
            if seg_end is not None:
                end_node = seg_end

    if instance.exchange_policy == POLICY_NONE:
        for k, route in enumerate(solution.routes):
            touched: dict[str, set[int]] = {}
            for aid in route:
                arc = g.arcs[aid]
                if arc.ride is not None and arc.family in (FAMILY_STEERING, FAMILY_DEADHEAD):
                    touched.setdefault(arc.ride, set()).add(arc.segment)
            for rid, segs in touched.items():
                if len(segs) != rides[rid].n_segments:
                    out.append(Violation("desync", f"driver {k} ride {rid}",
                                         rides[rid].n_segments - len(segs)))
    return out
