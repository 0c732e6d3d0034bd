"""Problem data model: rides, stops, legal limits, JSON persistence and decomposition.

All times are integer minutes from midnight of the planning day. Travel
times are given explicitly per ride segment and per station detour; there
is no geometry anywhere in the model.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace

log = logging.getLogger("drsync")

SCHEMA_TAG = "drsync/1"

POLICY_NONE = "none"
POLICY_REGULAR = "regular_stops"
POLICY_FULL = "regular_and_intermediate"
POLICIES = (POLICY_NONE, POLICY_REGULAR, POLICY_FULL)


class InstanceError(Exception):
    """Base class for instance loading/validation problems."""


class InstanceFormatError(InstanceError):
    """Raised when a file is not parseable as the drsync/1 schema."""


class InstanceValidationError(InstanceError):
    """Raised with the full list of violated invariants."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid instance: " + "; ".join(violations))


@dataclass(frozen=True)
class LegalParams:
    """Daily hours-of-service limits, minutes.

    t_cs: max continuous steering between breaks
    t_b:  minimum break duration
    t_ds: max total daily steering
    t_dw: max daily working span (return minus start)
    """

    t_cs: int = 270
    t_b: int = 45
    t_ds: int = 660
    t_dw: int = 780


@dataclass(frozen=True)
class Stop:
    id: str
    kind: str  # "customer" | "station"


@dataclass(frozen=True)
class StationAccess:
    """Reachability of one service station from one ride segment."""

    station_id: str
    minutes_in: int
    minutes_out: int

    def detour(self, direct: int) -> int:
        return self.minutes_in + self.minutes_out - direct


@dataclass(frozen=True)
class Ride:
    id: str
    line_id: str
    stops: tuple[str, ...]                       # customer stop ids, visit order
    departures: tuple[int, ...]                  # scheduled departure per stop
    segment_minutes: tuple[int, ...]             # direct drive time per consecutive pair
    stations: tuple[tuple[StationAccess, ...], ...]  # admissible stations per segment

    @property
    def n_segments(self) -> int:
        return len(self.stops) - 1


@dataclass(frozen=True)
class TimeWindow:
    earliest: int
    latest: int

    def grid(self, ell: int) -> tuple[int, ...]:
        if ell <= 0:
            return (self.earliest,)
        return tuple(range(self.earliest, self.latest + 1, ell))


@dataclass(frozen=True)
class Instance:
    rides: tuple[Ride, ...]
    stops: tuple[Stop, ...]
    legal: LegalParams = LegalParams()
    theta_tw: int = 10
    zeta: int = 10
    ell: int = 10
    exchange_policy: str = POLICY_FULL

    def stop_map(self) -> dict[str, Stop]:
        return {s.id: s for s in self.stops}

    def window(self, departure: int) -> TimeWindow:
        half = self.theta_tw // 2
        return TimeWindow(departure - half, departure + half)


def derive_time_windows(ride: Ride, theta_tw: int) -> list[TimeWindow]:
    """Window per customer stop: scheduled departure plus/minus half the width."""
    half = theta_tw // 2
    windows = []
    for tau in ride.departures:
        if tau - half < 0:
            raise InstanceValidationError(
                [f"ride {ride.id}: window underflows start of day (departure {tau}, width {theta_tw})"]
            )
        windows.append(TimeWindow(tau - half, tau + half))
    return windows


def validate_instance(inst: Instance) -> list[str]:
    """Return every violated invariant (empty list when valid)."""
    bad: list[str] = []
    lg = inst.legal
    if lg.t_b <= 0:
        bad.append(f"t_b must be positive, got {lg.t_b}")
    if not (0 < lg.t_cs <= lg.t_ds <= lg.t_dw):
        bad.append(f"need 0 < t_cs <= t_ds <= t_dw, got ({lg.t_cs}, {lg.t_ds}, {lg.t_dw})")
    if inst.theta_tw < 0:
        bad.append(f"theta_tw must be >= 0, got {inst.theta_tw}")
    if inst.theta_tw % 2 != 0:
        bad.append(f"theta_tw must be even (windows are centered), got {inst.theta_tw}")
    if inst.zeta < 0:
        bad.append(f"zeta must be >= 0, got {inst.zeta}")
    if inst.theta_tw < inst.zeta:
        bad.append(f"detour limit exceeds window: zeta {inst.zeta} > theta_tw {inst.theta_tw}")
    if inst.ell <= 0:
        bad.append(f"ell must be positive, got {inst.ell}")
    elif inst.theta_tw % inst.ell != 0:
        bad.append(f"ell {inst.ell} does not divide theta_tw {inst.theta_tw}")
    if inst.exchange_policy not in POLICIES:
        bad.append(f"unknown exchange_policy {inst.exchange_policy!r}")

    seen_stop_ids = set()
    for s in inst.stops:
        if s.id in seen_stop_ids:
            bad.append(f"duplicate stop id {s.id!r}")
        seen_stop_ids.add(s.id)
        if s.kind not in ("customer", "station"):
            bad.append(f"stop {s.id}: unknown kind {s.kind!r}")
    stops = inst.stop_map()

    half = inst.theta_tw // 2
    seen_ride_ids = set()
    for r in inst.rides:
        if r.id in seen_ride_ids:
            bad.append(f"duplicate ride id {r.id!r}")
        seen_ride_ids.add(r.id)
        if len(r.stops) < 2:
            bad.append(f"ride {r.id}: needs at least 2 stops")
            continue
        n_seg = r.n_segments
        if len(r.departures) != len(r.stops):
            bad.append(f"ride {r.id}: {len(r.departures)} departures for {len(r.stops)} stops")
            continue
        if len(r.segment_minutes) != n_seg or len(r.stations) != n_seg:
            bad.append(f"ride {r.id}: segment arrays must have length {n_seg}")
            continue
        for sid in r.stops:
            if sid not in stops:
                bad.append(f"ride {r.id}: unknown stop {sid!r}")
            elif stops[sid].kind != "customer":
                bad.append(f"ride {r.id}: stop {sid!r} is not a customer stop")
        for a, b in zip(r.departures, r.departures[1:]):
            if b <= a:
                bad.append(f"ride {r.id}: departures not strictly increasing ({a} -> {b})")
                break
        for tau in r.departures:
            if tau - half < 0:
                bad.append(f"ride {r.id}: window [{tau - half}, {tau + half}] underflows start of day")
        for k, direct in enumerate(r.segment_minutes):
            if direct <= 0:
                bad.append(f"ride {r.id} segment {k}: drive time must be positive")
            for acc in r.stations[k]:
                if acc.station_id not in stops:
                    bad.append(f"ride {r.id} segment {k}: unknown station {acc.station_id!r}")
                elif stops[acc.station_id].kind != "station":
                    bad.append(f"ride {r.id} segment {k}: {acc.station_id!r} is not a station")
                if acc.minutes_in <= 0 or acc.minutes_out <= 0:
                    bad.append(f"ride {r.id} segment {k}: station {acc.station_id} drive times must be positive")
                elif acc.minutes_in + acc.minutes_out < direct:
                    bad.append(
                        f"ride {r.id} segment {k}: via-station time "
                        f"{acc.minutes_in + acc.minutes_out} below direct {direct}"
                    )
    return bad


def check_instance(inst: Instance) -> Instance:
    """Validate, warn about provably uncoverable segments, and return the instance."""
    bad = validate_instance(inst)
    if bad:
        raise InstanceValidationError(bad)
    t_cs = inst.legal.t_cs
    for r in inst.rides:
        for k, direct in enumerate(r.segment_minutes):
            if direct <= t_cs:
                continue
            splittable = inst.exchange_policy == POLICY_FULL and any(
                acc.minutes_in <= t_cs and acc.minutes_out <= t_cs
                and acc.detour(direct) <= inst.zeta
                for acc in r.stations[k]
            )
            if not splittable:
                log.warning(
                    "ride %s segment %d: direct drive %d exceeds t_cs=%d and no admissible "
                    "station can split it; the instance is likely infeasible",
                    r.id, k, direct, t_cs,
                )
    return inst


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------

_TOP_KEYS = {"schema", "legal", "params", "stops", "rides"}
_LEGAL_KEYS = {"t_cs", "t_b", "t_ds", "t_dw"}
_PARAM_KEYS = {"theta_tw", "zeta", "ell", "exchange_policy"}
_STOP_KEYS = {"id", "kind"}
_RIDE_KEYS = {"id", "line_id", "stops", "departures", "segment_minutes", "stations"}
_ACCESS_KEYS = {"id", "in_minutes", "out_minutes"}


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise InstanceFormatError(f"{where}: unknown keys {sorted(unknown)}")


def instance_to_dict(inst: Instance) -> dict:
    return {
        "schema": SCHEMA_TAG,
        "legal": {
            "t_cs": inst.legal.t_cs,
            "t_b": inst.legal.t_b,
            "t_ds": inst.legal.t_ds,
            "t_dw": inst.legal.t_dw,
        },
        "params": {
            "theta_tw": inst.theta_tw,
            "zeta": inst.zeta,
            "ell": inst.ell,
            "exchange_policy": inst.exchange_policy,
        },
        "stops": [{"id": s.id, "kind": s.kind} for s in inst.stops],
        "rides": [
            {
                "id": r.id,
                "line_id": r.line_id,
                "stops": list(r.stops),
                "departures": list(r.departures),
                "segment_minutes": list(r.segment_minutes),
                "stations": [
                    [
                        {"id": a.station_id, "in_minutes": a.minutes_in, "out_minutes": a.minutes_out}
                        for a in seg
                    ]
                    for seg in r.stations
                ],
            }
            for r in inst.rides
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InstanceFormatError("top level must be an object")
    _reject_unknown(data, _TOP_KEYS, "top level")
    if data.get("schema") != SCHEMA_TAG:
        raise InstanceFormatError(f"schema must be {SCHEMA_TAG!r}, got {data.get('schema')!r}")
    try:
        legal_d = data["legal"]
        params_d = data["params"]
        stops_d = data["stops"]
        rides_d = data["rides"]
    except KeyError as exc:
        raise InstanceFormatError(f"missing top-level key {exc}") from exc
    _reject_unknown(legal_d, _LEGAL_KEYS, "legal")
    _reject_unknown(params_d, _PARAM_KEYS, "params")

    try:
        legal = LegalParams(
            t_cs=int(legal_d["t_cs"]), t_b=int(legal_d["t_b"]),
            t_ds=int(legal_d["t_ds"]), t_dw=int(legal_d["t_dw"]),
        )
        stops = []
        for sd in stops_d:
            _reject_unknown(sd, _STOP_KEYS, "stop")
            stops.append(Stop(id=str(sd["id"]), kind=str(sd["kind"])))
        rides = []
        for rd in rides_d:
            _reject_unknown(rd, _RIDE_KEYS, f"ride {rd.get('id')}")
            segs = []
            for seg in rd["stations"]:
                accs = []
                for ad in seg:
                    _reject_unknown(ad, _ACCESS_KEYS, "station access")
                    accs.append(StationAccess(
                        station_id=str(ad["id"]),
                        minutes_in=int(ad["in_minutes"]),
                        minutes_out=int(ad["out_minutes"]),
                    ))
                segs.append(tuple(accs))
            rides.append(Ride(
                id=str(rd["id"]),
                line_id=str(rd["line_id"]),
                stops=tuple(str(s) for s in rd["stops"]),
                departures=tuple(int(t) for t in rd["departures"]),
                segment_minutes=tuple(int(t) for t in rd["segment_minutes"]),
                stations=tuple(segs),
            ))
        inst = Instance(
            rides=tuple(rides),
            stops=tuple(stops),
            legal=legal,
            theta_tw=int(params_d["theta_tw"]),
            zeta=int(params_d["zeta"]),
            ell=int(params_d["ell"]),
            exchange_policy=str(params_d["exchange_policy"]),
        )
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance data: {exc}") from exc
    return check_instance(inst)


def load_instance(path: str) -> Instance:
    """Load and validate a drsync/1 instance file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path} is not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def save_instance(inst: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Station filtering and decomposition
# ---------------------------------------------------------------------------

def filter_stations(inst: Instance) -> Instance:
    """Drop (segment, station) pairs whose detour exceeds the limit. Pure copy."""
    rides = []
    for r in inst.rides:
        segs = tuple(
            tuple(a for a in r.stations[k] if a.detour(r.segment_minutes[k]) <= inst.zeta)
            for k in range(r.n_segments)
        )
        rides.append(replace(r, stations=segs))
    referenced = {sid for r in rides for sid in r.stops}
    referenced |= {a.station_id for r in rides for seg in r.stations for a in seg}
    stops = tuple(s for s in inst.stops if s.kind == "customer" or s.id in referenced)
    return replace(inst, rides=tuple(rides), stops=stops)


def _ride_footprint(ride: Ride) -> set[str]:
    ids = set(ride.stops)
    for seg in ride.stations:
        ids.update(a.station_id for a in seg)
    return ids


def _sub_instance(inst: Instance, rides: list[Ride]) -> Instance:
    used = set()
    for r in rides:
        used |= _ride_footprint(r)
    stops = tuple(s for s in inst.stops if s.id in used)
    return replace(inst, rides=tuple(rides), stops=stops)


def decompose(inst: Instance) -> list[Instance]:
    """Split into connected components of the ride/stop sharing graph."""
    parent = list(range(len(inst.rides)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[str, int] = {}
    for idx, r in enumerate(inst.rides):
        for sid in _ride_footprint(r):
            if sid in owner:
                ra, rb = find(owner[sid]), find(idx)
                if ra != rb:
                    parent[rb] = ra
            else:
                owner[sid] = idx

    groups: dict[int, list[Ride]] = {}
    for idx, r in enumerate(inst.rides):
        groups.setdefault(find(idx), []).append(r)
    return [_sub_instance(inst, rides) for _, rides in sorted(groups.items())]


def split_by_line(inst: Instance) -> list[Instance]:
    """One sub-instance per line, in order of first appearance."""
    by_line: dict[str, list[Ride]] = {}
    for r in inst.rides:
        by_line.setdefault(r.line_id, []).append(r)
    return [_sub_instance(inst, rides) for rides in by_line.values()]
