"""Parsing, normalization, and staging of tabular accident records.

The staging format is a 38-column CSV (RFC 4180, UTF-8, header row
required). The first thirteen columns carry typed semantics; the rest
are passed through as strings. ``gen_fixture`` produces deterministic
synthetic datasets that stand in for a real accident-record extract,
together with companion ground-truth files used by the resolution and
import test suites.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
import re
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path

INJURY_LEVELS = ("NONE", "MINOR", "SERIOUS", "FATAL")

# Fields whose values are short codes: upper-cased on parse.
_CODE_FIELDS = {"event_type", "state", "airport_icao", "registration", "injury_level"}
# Free-text narrative: never reformatted.
_NARRATIVE_FIELDS = {"probable_cause"}

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_US_DATE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")


class IngestError(Exception):
    """Hard ingest failure: bad file, bad header, or excessive rejects."""


def load_column_manifest() -> list[str]:
    """Return the 38-entry staging column manifest, in declared order."""
    text = resources.files("askg.data").joinpath("columns.txt").read_text("utf-8")
    cols = [line.strip() for line in text.splitlines() if line.strip()]
    if len(cols) != 38 or len(set(cols)) != 38:
        raise IngestError("packaged column manifest is corrupt")
    return cols


@dataclass
class RawRecord:
    """One normalized accident record.

    Named fields carry the typed columns; every remaining manifest
    column lives in ``extras`` as a plain string.
    """

    event_id: str
    event_type: str
    event_date: str
    event_year: int | None
    city: str
    state: str
    airport_icao: str
    acft_make: str
    acft_model: str
    registration: str
    operator_name: str
    injury_level: str
    probable_cause: str
    extras: dict[str, str] = field(default_factory=dict)

    _NAMED = (
        "event_id",
        "event_type",
        "event_date",
        "event_year",
        "city",
        "state",
        "airport_icao",
        "acft_make",
        "acft_model",
        "registration",
        "operator_name",
        "injury_level",
        "probable_cause",
    )

    def value(self, column: str) -> str:
        """String value of any manifest column (empty string for null)."""
        if column in self._NAMED:
            v = getattr(self, column)
            if v is None:
                return ""
            return str(v)
        return self.extras.get(column, "")

    def to_row(self, manifest: list[str]) -> list[str]:
        return [self.value(c) for c in manifest]


@dataclass
class RejectedRow:
    line_no: int
    reason: str


@dataclass
class StagingSet:
    """Parsed records plus the manifest and provenance of their source."""

    records: list[RawRecord]
    column_manifest: list[str]
    provenance: dict[str, str]
    rejects: list[RejectedRow] = field(default_factory=list)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StagingSet):
            return NotImplemented
        return (
            self.records == other.records
            and self.column_manifest == other.column_manifest
        )


def _fold(column: str, value: str) -> str:
    if column in _NARRATIVE_FIELDS:
        return value
    value = " ".join(value.split())
    if column in _CODE_FIELDS:
        value = value.upper()
    return value


def _parse_date(value: str) -> str | None:
    """Normalize a date string to ISO-8601, or None if unparseable."""
    if _ISO_DATE.match(value):
        try:
            return date.fromisoformat(value).isoformat()
        except ValueError:
            return None
    m = _US_DATE.match(value)
    if m:
        mm, dd, yyyy = (int(g) for g in m.groups())
        try:
            return date(yyyy, mm, dd).isoformat()
        except ValueError:
            return None
    return None


def _validate_row(
    raw: dict[str, str], seen_ids: set[str]
) -> RawRecord | str:
    """Build a RawRecord from folded column values, or a reject reason."""
    event_id = raw["event_id"]
    if not event_id:
        return "empty event_id"
    if event_id in seen_ids:
        return f"duplicate event_id {event_id!r}"

    event_date = raw["event_date"]
    if event_date:
        normalized = _parse_date(event_date)
        if normalized is None:
            return f"unparseable event_date {event_date!r}"
        event_date = normalized

    year_text = raw["event_year"]
    event_year: int | None = None
    if year_text:
        try:
            event_year = int(year_text)
        except ValueError:
            return f"non-integer event_year {year_text!r}"
    if event_date:
        date_year = int(event_date[:4])
        if event_year is None:
            event_year = date_year
        elif event_year != date_year:
            return (
                f"event_year {event_year} disagrees with event_date {event_date}"
            )

    injury = raw["injury_level"]
    if injury and injury not in INJURY_LEVELS:
        return f"invalid injury_level {injury!r}"

    icao = raw["airport_icao"]
    if icao and len(icao) != 4:
        return f"invalid airport_icao {icao!r}"

    named = {k: raw[k] for k in RawRecord._NAMED if k not in (
        "event_id", "event_date", "event_year", "injury_level", "airport_icao")}
    extras = {k: v for k, v in raw.items() if k not in RawRecord._NAMED}
    rec = RawRecord(
        event_id=event_id,
        event_date=event_date,
        event_year=event_year,
        injury_level=injury,
        airport_icao=icao,
        extras=extras,
        **named,
    )
    seen_ids.add(event_id)
    return rec


def parse_csv(path: str | Path, manifest: list[str] | None = None) -> StagingSet:
    """Parse a staging CSV into a StagingSet.

    Rows that violate the record invariants are collected in
    ``StagingSet.rejects`` with their line number and reason. More than
    50% rejected rows, a missing file, or a header that does not match
    the manifest raise IngestError.
    """
    path = Path(path)
    if manifest is None:
        manifest = load_column_manifest()
    if not path.is_file():
        raise IngestError(f"no such file: {path}")

    data = path.read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    reader = csv.reader(io.StringIO(data.decode("utf-8")))

    try:
        header = next(reader)
    except StopIteration:
        raise IngestError(f"{path}: empty file, header row required") from None
    got = [h.strip().lower() for h in header]
    want = [c.strip().lower() for c in manifest]
    if got != want:
        missing = sorted(set(want) - set(got))
        extra = sorted(set(got) - set(want))
        detail = []
        if missing:
            detail.append(f"missing columns: {', '.join(missing)}")
        if extra:
            detail.append(f"unexpected columns: {', '.join(extra)}")
        if not detail:
            detail.append("column order differs from manifest")
        raise IngestError(f"{path}: header mismatch ({'; '.join(detail)})")

    records: list[RawRecord] = []
    rejects: list[RejectedRow] = []
    seen_ids: set[str] = set()
    parsed = 0
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        parsed += 1
        if len(row) != len(manifest):
            rejects.append(
                RejectedRow(line_no, f"expected {len(manifest)} columns, got {len(row)}")
            )
            continue
        folded = {c: _fold(c, v) for c, v in zip(manifest, row)}
        result = _validate_row(folded, seen_ids)
        if isinstance(result, str):
            rejects.append(RejectedRow(line_no, result))
        else:
            records.append(result)

    if parsed and len(rejects) * 2 > parsed:
        raise IngestError(
            f"{path}: {len(rejects)} of {parsed} rows rejected (>50%), refusing staging set"
        )
    return StagingSet(
        records=records,
        column_manifest=list(manifest),
        provenance={"source": str(path), "sha256": digest},
        rejects=rejects,
    )


def write_csv(staging: StagingSet, path: str | Path) -> Path:
    """Serialize a StagingSet back to the staging CSV format."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(staging.column_manifest)
        for rec in staging.records:
            writer.writerow(rec.to_row(staging.column_manifest))
    return path


# --------------------------------------------------------------------------
# Synthetic fixture generation


@dataclass(frozen=True)
class FixturePaths:
    csv: Path
    truth: Path
    counts: Path


# (icao, airport name, city, state)
_AIRPORTS = [
    ("KLAX", "Los Angeles International", "Los Angeles", "CA"),
    ("KJFK", "John F Kennedy International", "New York", "NY"),
    ("KORD", "Chicago O'Hare International", "Chicago", "IL"),
    ("KATL", "Hartsfield-Jackson Atlanta International", "Atlanta", "GA"),
    ("KDFW", "Dallas-Fort Worth International", "Dallas", "TX"),
    ("KDEN", "Denver International", "Denver", "CO"),
    ("KSEA", "Seattle-Tacoma International", "Seattle", "WA"),
    ("KSFO", "San Francisco International", "San Francisco", "CA"),
    ("KMIA", "Miami International", "Miami", "FL"),
    ("KDAB", "Daytona Beach International", "Daytona Beach", "FL"),
    ("KPHX", "Phoenix Sky Harbor International", "Phoenix", "AZ"),
    ("KBOS", "Boston Logan International", "Boston", "MA"),
]

_OFF_AIRPORT = [
    ("Fresno", "CA"),
    ("Amarillo", "TX"),
    ("Ocala", "FL"),
    ("Bozeman", "MT"),
    ("Duluth", "MN"),
]

# make -> (models, airline pool or None for general aviation)
_FLEET_POOLS = {
    "Boeing": (["737-800", "747-400", "777-300ER", "767-300"], "airline"),
    "Airbus": (["A320", "A350-900"], "airline"),
    "Cessna": (["172 Skyhawk", "182 Skylane", "208 Caravan"], "ga"),
    "Piper": (["PA-28", "PA-31"], "ga"),
    "Beechcraft": (["Bonanza", "King Air 350"], "ga"),
    "Embraer": (["ERJ-145", "E175"], "airline"),
    "Bombardier": (["CRJ-200", "CRJ-900"], "airline"),
    "Cirrus": (["SR22"], "ga"),
    "Mooney": (["M20"], "ga"),
    "Robinson": (["R44"], "ga"),
}

_AIRLINES = [
    "Delta Air Lines",
    "United Airlines",
    "American Airlines",
    "Southwest Airlines",
    "SkyWest Airlines",
    "Alaska Airlines",
]

# Alias spellings the generator may substitute for a plain model string.
# Each variant carries the index of its normalized equivalence class, so
# the generator can tell when the written surfaces span more than one
# canonical form (the condition for a resolvable alias cluster) without
# depending on the resolution code.
_MODEL_ALIAS_SURFACES: dict[str, list[tuple[str, int]]] = {
    "737-800": [("737-800", 0), ("B737-800", 1), ("Boeing 737-800", 1)],
    "747-400": [("747-400", 0), ("B747-400", 1), ("Boeing 747-400", 1)],
    "A320": [("A320", 0), ("Airbus A320", 1)],
    "A350-900": [("A350-900", 0), ("Airbus A350-900", 1)],
    "172 Skyhawk": [("172 Skyhawk", 0), ("C172 Skyhawk", 1), ("Cessna 172 Skyhawk", 1)],
    "182 Skylane": [("182 Skylane", 0), ("C182 Skylane", 1), ("Cessna 182 Skylane", 1)],
    "208 Caravan": [("208 Caravan", 0), ("C208 Caravan", 1), ("Cessna 208 Caravan", 1)],
}

_EVENT_TYPES = ["ACC", "INC"]
_PHASES = ["TAKEOFF", "CLIMB", "CRUISE", "APPROACH", "LANDING", "TAXI"]
_WEATHER = ["VMC", "IMC"]
_LIGHT = ["DAY", "NIGHT", "DUSK"]
_DAMAGE = ["NONE", "MINOR", "SUBSTANTIAL", "DESTROYED"]
_PURPOSES = ["PERSONAL", "INSTRUCTIONAL", "BUSINESS", "SCHEDULED"]
_CERTS = ["PRIVATE", "COMMERCIAL", "ATP", "STUDENT"]

_CAUSES = [
    "The pilot's failure to maintain directional control during the landing roll.",
    "A total loss of engine power due to fuel exhaustion.",
    "The pilot's improper flare, which resulted in a hard landing.",
    "An encounter with unforecast windshear during final approach.",
    "The flight crew's unstabilized approach and delayed go-around decision.",
    "A fatigue fracture of the crankshaft due to inadequate maintenance.",
    "The pilot's visual misjudgment of distance from terrain at night.",
    "Loss of tail rotor effectiveness while hovering in gusting wind.",
]


def _make_fleet(rng: random.Random, size: int) -> list[dict[str, str]]:
    fleet = []
    makes = list(_FLEET_POOLS)
    used_regs: set[str] = set()
    for i in range(size):
        make = makes[rng.randrange(len(makes))]
        models, kind = _FLEET_POOLS[make]
        model = models[rng.randrange(len(models))]
        while True:
            reg = f"N{rng.randrange(10000, 99999)}{chr(ord('A') + rng.randrange(26))}"
            if reg not in used_regs:
                used_regs.add(reg)
                break
        operator = ""
        if kind == "airline":
            operator = _AIRLINES[rng.randrange(len(_AIRLINES))]
        elif rng.random() < 0.3:
            operator = _AIRLINES[rng.randrange(len(_AIRLINES))]
        fleet.append(
            {
                "registration": reg,
                "make": make,
                "model": model,
                "operator": operator,
                "serial": f"SN{rng.randrange(100000, 999999)}",
                "category": "AIRPLANE" if make != "Robinson" else "HELICOPTER",
                "num_engines": "2" if kind == "airline" else "1",
                "engine_type": "TURBOFAN" if kind == "airline" else "RECIPROCATING",
                "engine_mfr": "CFM" if kind == "airline" else "Lycoming",
            }
        )
    return fleet


def _corrupt(row: list[str], kind: int, manifest: list[str], prior_id: str) -> list[str]:
    """Damage one row so the parser must reject it."""
    idx = {c: i for i, c in enumerate(manifest)}
    row = list(row)
    kind = kind % 5
    if kind == 0:
        row[idx["event_date"]] = "13/45/2020"
    elif kind == 1:
        row[idx["event_id"]] = ""
    elif kind == 2:
        row[idx["injury_level"]] = "CATASTROPHIC"
    elif kind == 3:
        row[idx["event_id"]] = prior_id
    else:
        row = row[:-1]
    return row


def gen_fixture(
    n: int,
    seed: int,
    alias_rate: float,
    out_dir: str | Path,
    malformed: int = 0,
) -> FixturePaths:
    """Write a deterministic synthetic fixture of ``n`` rows.

    Produces three files in ``out_dir``:

    * ``fixture.csv``: the staging CSV (``malformed`` of the rows are
      deliberately invalid and will be rejected by parse_csv);
    * ``fixture.truth.tsv``: one line per injected alias cluster,
      tab-separated: plain model spelling, then every distinct variant
      spelling that appears in the CSV;
    * ``fixture.counts.json``: node/relationship cardinalities the graph
      build is expected to produce from the valid rows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= alias_rate <= 1:
        raise ValueError("alias_rate must be in [0, 1]")
    if not 0 <= malformed <= n:
        raise ValueError("malformed must be in [0, n]")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_column_manifest()
    rng = random.Random(seed)
    fleet = _make_fleet(rng, max(1, n // 3))

    rows: list[list[str]] = []
    # family plain surface -> set of (surface, class) actually written
    written_aliases: dict[str, set[tuple[str, int]]] = {}
    corrupt_at = set(rng.sample(range(n), malformed)) if malformed else set()

    nodes: dict[str, set] = {
        "Accident": set(),
        "Aircraft": set(),
        "Manufacturer": set(),
        "Airport": set(),
        "Airline": set(),
        "Location": set(),
    }
    rels = {
        "INVOLVED_IN": 0,
        "MANUFACTURED_BY": set(),
        "OPERATED_BY": set(),
        "OCCURRED_AT": 0,
        "LOCATED_IN": 0,
    }

    # Duplicate-id corruption reuses the latest surviving id; before any
    # valid row exists it degrades to an empty id (still a reject).
    last_valid_id = ""
    for i in range(n):
        ac = fleet[rng.randrange(len(fleet))]
        year = rng.randrange(1998, 2025)
        month = rng.randrange(1, 13)
        day = rng.randrange(1, 29)
        event_date = date(year, month, day).isoformat()
        event_id = f"EVT{seed % 100:02d}{i:06d}"

        model_surface = ac["model"]
        alias_choice = _MODEL_ALIAS_SURFACES.get(ac["model"], [(model_surface, 0)])[0]
        alias_pool = _MODEL_ALIAS_SURFACES.get(ac["model"])
        if alias_pool and rng.random() < alias_rate:
            alias_choice = alias_pool[rng.randrange(1, len(alias_pool))]
            model_surface = alias_choice[0]

        if rng.random() < 0.9:
            icao, apt_name, city, state = _AIRPORTS[rng.randrange(len(_AIRPORTS))]
        else:
            icao, apt_name = "", ""
            city, state = _OFF_AIRPORT[rng.randrange(len(_OFF_AIRPORT))]

        fatal = rng.random() < 0.25
        injury = "FATAL" if fatal else ["NONE", "MINOR", "SERIOUS"][rng.randrange(3)]
        fatal_count = str(rng.randrange(1, 5)) if fatal else "0"

        values = {
            "event_id": event_id,
            "event_type": _EVENT_TYPES[rng.randrange(2)],
            "event_date": event_date,
            "event_year": str(year),
            "city": city,
            "state": state,
            "country": "USA",
            "region": "",
            "airport_icao": icao,
            "airport_name": apt_name,
            "latitude": f"{rng.uniform(25.0, 48.0):.4f}",
            "longitude": f"{rng.uniform(-124.0, -70.0):.4f}",
            "acft_make": ac["make"],
            "acft_model": model_surface,
            "acft_serial_number": ac["serial"],
            "acft_category": ac["category"],
            "acft_damage": _DAMAGE[rng.randrange(4)],
            "registration": ac["registration"],
            "num_engines": ac["num_engines"],
            "engine_type": ac["engine_type"],
            "engine_manufacturer": ac["engine_mfr"],
            "operator_name": ac["operator"],
            "far_part": "121" if ac["operator"] else "91",
            "flight_purpose": _PURPOSES[rng.randrange(4)],
            "flight_phase": _PHASES[rng.randrange(6)],
            "weather_condition": _WEATHER[rng.randrange(2)],
            "light_condition": _LIGHT[rng.randrange(3)],
            "visibility_sm": f"{rng.randrange(1, 11)}",
            "wind_speed_kts": f"{rng.randrange(0, 35)}",
            "crew_count": "2" if ac["operator"] else "1",
            "passenger_count": str(rng.randrange(0, 180) if ac["operator"] else rng.randrange(0, 4)),
            "fatal_injury_count": fatal_count,
            "serious_injury_count": str(rng.randrange(0, 3)),
            "minor_injury_count": str(rng.randrange(0, 4)),
            "injury_level": injury,
            "probable_cause": _CAUSES[rng.randrange(len(_CAUSES))],
            "pilot_certificate": _CERTS[rng.randrange(4)],
            "report_status": "FINAL",
        }
        row = [values[c] for c in manifest]

        if i in corrupt_at:
            rows.append(_corrupt(row, i, manifest, last_valid_id))
            continue

        rows.append(row)
        last_valid_id = event_id
        if alias_pool is not None:
            written_aliases.setdefault(ac["model"], set()).add(alias_choice)
        nodes["Accident"].add(event_id)
        nodes["Aircraft"].add(ac["registration"])
        nodes["Manufacturer"].add(ac["make"])
        rels["INVOLVED_IN"] += 1
        rels["MANUFACTURED_BY"].add(ac["registration"])
        if ac["operator"]:
            nodes["Airline"].add(ac["operator"])
            rels["OPERATED_BY"].add(ac["registration"])
        if icao:
            nodes["Airport"].add(icao)
            rels["OCCURRED_AT"] += 1
        if city:
            nodes["Location"].add((city, state))
            rels["LOCATED_IN"] += 1

    csv_path = out_dir / "fixture.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(manifest)
        writer.writerows(rows)

    clusters = []
    for plain in sorted(written_aliases):
        surfaces = written_aliases[plain]
        if len({cls for _, cls in surfaces}) < 2:
            continue
        variants = sorted(s for s, _ in surfaces)
        clusters.append([plain] + variants)

    truth_path = out_dir / "fixture.truth.tsv"
    with truth_path.open("w", encoding="utf-8", newline="") as fh:
        for cluster in clusters:
            fh.write("\t".join(cluster) + "\n")

    counts = {
        "nodes": {label: len(v) for label, v in nodes.items()},
        "relationships": {
            "INVOLVED_IN": rels["INVOLVED_IN"],
            "MANUFACTURED_BY": len(rels["MANUFACTURED_BY"]),
            "OPERATED_BY": len(rels["OPERATED_BY"]),
            "OCCURRED_AT": rels["OCCURRED_AT"],
            "LOCATED_IN": rels["LOCATED_IN"],
        },
        "alias_clusters": len(clusters),
        "rows": n,
        "malformed": malformed,
    }
    counts_path = out_dir / "fixture.counts.json"
    counts_path.write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")

    return FixturePaths(csv=csv_path, truth=truth_path, counts=counts_path)


def read_truth_clusters(path: str | Path) -> list[list[str]]:
    """Read the alias ground-truth companion file: plain form + variants."""
    clusters = []
    for line in Path(path).read_text("utf-8").splitlines():
        if line.strip():
            clusters.append(line.split("\t"))
    return clusters
