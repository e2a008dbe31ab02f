"""Native property-graph store.

Labeled nodes, typed directed relationships, unique constraints,
single-property and composite hash indexes, batched transactional bulk
import with per-batch rollback, and a checksummed binary snapshot
format (magic ``ASKG``).

Concurrency contract: any number of readers or one writer. Queries take
the read lock; bulk import takes the write lock per committed batch, so
readers between batches observe only committed state.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"ASKG"
SNAPSHOT_VERSION = 1

Scalar = str | int | float | bool


class GraphError(Exception):
    pass


class SchemaError(GraphError):
    pass


class SnapshotError(GraphError):
    pass


@dataclass
class Node:
    node_id: int
    labels: set[str]
    properties: dict[str, Scalar]


@dataclass
class Relationship:
    rel_id: int
    type: str
    source: int
    target: int
    properties: dict[str, Scalar] = field(default_factory=dict)


@dataclass
class GraphSchema:
    node_labels: dict[str, list[str]] = field(default_factory=dict)
    relationship_types: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    unique_constraints: list[tuple[str, str]] = field(default_factory=list)
    indexes: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)

    def all_indexes(self) -> list[tuple[str, tuple[str, ...]]]:
        """Declared indexes plus the backing index of every unique constraint."""
        out = list(self.indexes)
        for label, prop in self.unique_constraints:
            backing = (label, (prop,))
            if backing not in out:
                out.append(backing)
        return out

    def to_dict(self) -> dict:
        return {
            "node_labels": self.node_labels,
            "relationship_types": {
                t: [list(p) for p in pairs]
                for t, pairs in self.relationship_types.items()
            },
            "unique_constraints": [list(c) for c in self.unique_constraints],
            "indexes": [[label, list(props)] for label, props in self.indexes],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GraphSchema":
        return cls(
            node_labels={k: list(v) for k, v in raw["node_labels"].items()},
            relationship_types={
                t: [tuple(p) for p in pairs]
                for t, pairs in raw["relationship_types"].items()
            },
            unique_constraints=[tuple(c) for c in raw["unique_constraints"]],
            indexes=[(label, tuple(props)) for label, props in raw["indexes"]],
        )


def default_schema() -> GraphSchema:
    """The aviation graph schema: six labels, five edge types."""
    return GraphSchema(
        node_labels={
            "Accident": [
                "event_id", "event_type", "event_date", "event_year",
                "city", "state", "injury_level", "fatal_injury_count",
                "probable_cause",
            ],
            "Aircraft": ["registration", "make", "model", "category"],
            "Manufacturer": ["name"],
            "Airport": ["icao", "name", "city", "state"],
            "Airline": ["name"],
            "Location": ["name", "city", "state"],
        },
        relationship_types={
            "MANUFACTURED_BY": [("Aircraft", "Manufacturer")],
            "INVOLVED_IN": [("Aircraft", "Accident")],
            "OPERATED_BY": [("Aircraft", "Airline")],
            "OCCURRED_AT": [("Accident", "Airport")],
            "LOCATED_IN": [("Accident", "Location")],
        },
        unique_constraints=[("Aircraft", "registration"), ("Airport", "icao")],
        indexes=[
            ("Aircraft", ("make",)),
            ("Accident", ("event_year",)),
            ("Aircraft", ("make", "model")),
        ],
    )


@dataclass(frozen=True)
class NodeSpec:
    label: str
    key_property: str
    properties: dict

    def key_value(self):
        return self.properties.get(self.key_property)


@dataclass(frozen=True)
class EndpointRef:
    label: str
    key_property: str
    key_value: Scalar


@dataclass(frozen=True)
class RelSpec:
    type: str
    source: EndpointRef
    target: EndpointRef
    properties: dict = field(default_factory=dict)


@dataclass
class ImportBatch:
    nodes: list[NodeSpec] = field(default_factory=list)
    relationships: list[RelSpec] = field(default_factory=list)
    batch_size: int = 500

    def __post_init__(self):
        if self.batch_size < 1:
            raise GraphError("batch_size must be positive")


@dataclass
class ImportReport:
    nodes_created: int = 0
    nodes_updated: int = 0
    rels_created: int = 0
    rels_matched: int = 0
    failures: list[str] = field(default_factory=list)
    committed_batches: int = 0
    failed_batches: list[str] = field(default_factory=list)

    @property
    def failed(self) -> int:
        return len(self.failures)


class ReadWriteLock:
    """Many readers or a single writer; writers wait for active readers."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False

    def acquire_read(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1

    def release_read(self):
        with self._cond:
            self._readers -= 1
            if self._readers == 0:
                self._cond.notify_all()

    def acquire_write(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True

    def release_write(self):
        with self._cond:
            self._writer = False
            self._cond.notify_all()

    class _Guard:
        def __init__(self, acquire, release):
            self._acquire, self._release = acquire, release

        def __enter__(self):
            self._acquire()

        def __exit__(self, *exc):
            self._release()

    def read_lock(self):
        return self._Guard(self.acquire_read, self.release_read)

    def write_lock(self):
        return self._Guard(self.acquire_write, self.release_write)


def _check_scalar(value) -> Scalar:
    if isinstance(value, bool) or isinstance(value, (str, int, float)):
        return value
    raise GraphError(f"unsupported property value {value!r} (scalars only, no nulls)")


class PropertyGraph:
    """In-memory adjacency store with hash indexes."""

    def __init__(self, schema: GraphSchema | None = None):
        self.nodes: dict[int, Node] = {}
        self.relationships: dict[int, Relationship] = {}
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}
        self._label_members: dict[str, set[int]] = {}
        # (label, props tuple) -> value tuple -> set of node ids
        self._indexes: dict[tuple[str, tuple[str, ...]], dict[tuple, set[int]]] = {}
        self._rel_keys: dict[tuple[str, int, int], int] = {}
        self._next_node_id = 1
        self._next_rel_id = 1
        self.schema = GraphSchema()
        self.lock = ReadWriteLock()
        if schema is not None:
            self.apply_schema(schema)

    # -- schema ------------------------------------------------------------

    def apply_schema(self, schema: GraphSchema) -> dict:
        """Install constraints and indexes, validating existing data.

        Re-applying the same schema is a no-op. Returns a report of the
        constraint and index counts now in force.
        """
        for label, prop in schema.unique_constraints:
            dupes = self._find_duplicates(label, prop)
            if dupes:
                listing = ", ".join(repr(v) for v in sorted(map(str, dupes)))
                raise SchemaError(
                    f"uniqueness on :{label}({prop}) violated by existing values: {listing}"
                )
        self.schema = schema
        wanted = set(schema.all_indexes())
        for key in list(self._indexes):
            if key not in wanted:
                del self._indexes[key]
        for key in wanted:
            if key not in self._indexes:
                self._indexes[key] = {}
                self._reindex(key)
        return {
            "unique_constraints": len(schema.unique_constraints),
            "indexes": len(schema.all_indexes()),
            "labels": sorted(schema.node_labels),
            "relationship_types": sorted(schema.relationship_types),
        }

    def _find_duplicates(self, label: str, prop: str) -> set:
        seen: dict = {}
        dupes = set()
        for nid in self._label_members.get(label, ()):
            value = self.nodes[nid].properties.get(prop)
            if value is None:
                continue
            if value in seen:
                dupes.add(value)
            seen[value] = nid
        return dupes

    def _reindex(self, key: tuple[str, tuple[str, ...]]) -> None:
        label, props = key
        bucket = self._indexes[key]
        bucket.clear()
        for nid in self._label_members.get(label, ()):
            entry = self._index_entry(self.nodes[nid], props)
            if entry is not None:
                bucket.setdefault(entry, set()).add(nid)

    @staticmethod
    def _index_entry(node: Node, props: tuple[str, ...]) -> tuple | None:
        values = tuple(node.properties.get(p) for p in props)
        if any(v is None for v in values):
            return None
        return values

    def _index_add(self, node: Node) -> None:
        for (label, props), bucket in self._indexes.items():
            if label in node.labels:
                entry = self._index_entry(node, props)
                if entry is not None:
                    bucket.setdefault(entry, set()).add(node.node_id)

    def _index_remove(self, node: Node) -> None:
        for (label, props), bucket in self._indexes.items():
            if label in node.labels:
                entry = self._index_entry(node, props)
                if entry is not None and entry in bucket:
                    bucket[entry].discard(node.node_id)
                    if not bucket[entry]:
                        del bucket[entry]

    def _unique_violation(self, label: str, props: dict, exclude: int | None) -> str | None:
        for c_label, c_prop in self.schema.unique_constraints:
            if c_label != label or c_prop not in props:
                continue
            value = props[c_prop]
            existing = self._lookup_ids(c_label, {c_prop: value})
            existing = {i for i in existing if i != exclude}
            if existing:
                return f"uniqueness on :{c_label}({c_prop}) violated by value {value!r}"
        return None

    # -- mutation primitives -------------------------------------------------

    def create_node(self, labels: set[str] | list[str], properties: dict) -> int:
        labels = set(labels)
        if not labels:
            raise GraphError("node requires at least one label")
        props = {k: _check_scalar(v) for k, v in properties.items()}
        for label in labels:
            problem = self._unique_violation(label, props, None)
            if problem:
                raise GraphError(problem)
        nid = self._next_node_id
        self._next_node_id += 1
        node = Node(node_id=nid, labels=labels, properties=props)
        self.nodes[nid] = node
        self._out[nid] = []
        self._in[nid] = []
        for label in labels:
            self._label_members.setdefault(label, set()).add(nid)
        self._index_add(node)
        return nid

    def set_properties(self, node_id: int, properties: dict) -> None:
        node = self.nodes.get(node_id)
        if node is None:
            raise GraphError(f"no node {node_id}")
        merged = dict(node.properties)
        merged.update({k: _check_scalar(v) for k, v in properties.items()})
        for label in node.labels:
            problem = self._unique_violation(label, merged, node_id)
            if problem:
                raise GraphError(problem)
        self._index_remove(node)
        node.properties = merged
        self._index_add(node)

    def replace_properties(self, node_id: int, properties: dict) -> None:
        node = self.nodes.get(node_id)
        if node is None:
            raise GraphError(f"no node {node_id}")
        props = {k: _check_scalar(v) for k, v in properties.items()}
        for label in node.labels:
            problem = self._unique_violation(label, props, node_id)
            if problem:
                raise GraphError(problem)
        self._index_remove(node)
        node.properties = props
        self._index_add(node)

    def delete_node(self, node_id: int) -> None:
        """Remove a node and every incident relationship."""
        node = self.nodes.get(node_id)
        if node is None:
            raise GraphError(f"no node {node_id}")
        for rid in list(self._out[node_id]) + list(self._in[node_id]):
            if rid in self.relationships:
                self.delete_relationship(rid)
        self._index_remove(node)
        for label in node.labels:
            self._label_members[label].discard(node_id)
        del self._out[node_id]
        del self._in[node_id]
        del self.nodes[node_id]

    def create_relationship(
        self, type_: str, source: int, target: int, properties: dict | None = None
    ) -> int:
        if not type_:
            raise GraphError("relationship type must be non-empty")
        if source not in self.nodes or target not in self.nodes:
            raise GraphError("relationship endpoints must be live nodes")
        rid = self._next_rel_id
        self._next_rel_id += 1
        rel = Relationship(
            rel_id=rid,
            type=type_,
            source=source,
            target=target,
            properties={k: _check_scalar(v) for k, v in (properties or {}).items()},
        )
        self.relationships[rid] = rel
        self._out[source].append(rid)
        self._in[target].append(rid)
        self._rel_keys[(type_, source, target)] = rid
        return rid

    def delete_relationship(self, rel_id: int) -> None:
        rel = self.relationships.get(rel_id)
        if rel is None:
            raise GraphError(f"no relationship {rel_id}")
        self._out[rel.source].remove(rel_id)
        self._in[rel.target].remove(rel_id)
        self._rel_keys.pop((rel.type, rel.source, rel.target), None)
        del self.relationships[rel_id]

    # -- reads -------------------------------------------------------------

    def _lookup_ids(self, label: str, props: dict, force_scan: bool = False) -> set[int]:
        key = (label, tuple(sorted(props)))
        if not force_scan:
            ordered = self._matching_index(label, set(props))
            if ordered is not None:
                entry = tuple(props[p] for p in ordered)
                return set(self._indexes[(label, ordered)].get(entry, set()))
        members = self._label_members.get(label)
        if members is None:
            return set()
        out = set()
        for nid in members:
            node_props = self.nodes[nid].properties
            if all(node_props.get(p) == v for p, v in props.items()):
                out.add(nid)
        return out

    def _matching_index(self, label: str, props: set[str]) -> tuple[str, ...] | None:
        """An index on exactly these properties, if one exists."""
        for ix_label, ix_props in self._indexes:
            if ix_label == label and set(ix_props) == props:
                return ix_props
        return None

    def lookup(
        self, label: str, properties: dict, force_scan: bool = False
    ) -> list[int]:
        """Node ids with the label and exact property values, sorted.

        Uses an index covering exactly the queried properties when one
        exists (unless ``force_scan``); results are identical either way.
        Unknown labels yield an empty result with a logged warning.
        """
        if label not in self._label_members and label not in self.schema.node_labels:
            logger.warning("lookup on unknown label %r", label)
            return []
        return sorted(self._lookup_ids(label, properties, force_scan=force_scan))

    def expand(
        self,
        node_id: int,
        rel_type: str | None,
        direction: str = "out",
        min_depth: int = 1,
        max_depth: int = 1,
    ) -> list[int]:
        """Nodes reachable over typed edges within [min_depth, max_depth] hops.

        Breadth-first, deduplicated; the start node is excluded unless
        min_depth is 0. Unknown relationship types yield an empty result
        with a logged warning.
        """
        if node_id not in self.nodes:
            raise GraphError(f"no node {node_id}")
        if direction not in ("out", "in", "both"):
            raise GraphError(f"bad direction {direction!r}")
        if not 0 <= min_depth <= max_depth:
            raise GraphError("need 0 <= min_depth <= max_depth")
        if rel_type is not None and rel_type not in self.schema.relationship_types:
            known = {r.type for r in self.relationships.values()}
            if rel_type not in known:
                logger.warning("expand over unknown relationship type %r", rel_type)
                return []

        seen = {node_id: 0}
        frontier = [node_id]
        depth = 0
        result: set[int] = {node_id} if min_depth == 0 else set()
        while frontier and depth < max_depth:
            depth += 1
            nxt: list[int] = []
            for nid in frontier:
                for other in self.neighbors(nid, rel_type, direction):
                    if other not in seen:
                        seen[other] = depth
                        nxt.append(other)
                        if depth >= min_depth:
                            result.add(other)
            frontier = nxt
        return sorted(result)

    def incident(
        self, node_id: int, rel_type: str | None, direction: str
    ) -> list[tuple[int, int]]:
        """(relationship id, other endpoint) pairs at a node, honoring
        direction ('out', 'in', 'both') and an optional type filter."""
        out: list[tuple[int, int]] = []
        if direction in ("out", "both"):
            for rid in self._out[node_id]:
                rel = self.relationships[rid]
                if rel_type is None or rel.type == rel_type:
                    out.append((rid, rel.target))
        if direction in ("in", "both"):
            for rid in self._in[node_id]:
                rel = self.relationships[rid]
                if rel_type is None or rel.type == rel_type:
                    out.append((rid, rel.source))
        return out

    def neighbors(self, node_id: int, rel_type: str | None, direction: str) -> list[int]:
        out: list[int] = []
        if direction in ("out", "both"):
            for rid in self._out[node_id]:
                rel = self.relationships[rid]
                if rel_type is None or rel.type == rel_type:
                    out.append(rel.target)
        if direction in ("in", "both"):
            for rid in self._in[node_id]:
                rel = self.relationships[rid]
                if rel_type is None or rel.type == rel_type:
                    out.append(rel.source)
        return out

    def node_counts(self) -> dict[str, int]:
        return {
            label: len(members)
            for label, members in sorted(self._label_members.items())
            if members
        }

    def rel_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rel in self.relationships.values():
            counts[rel.type] = counts.get(rel.type, 0) + 1
        return dict(sorted(counts.items()))

    # -- bulk import ---------------------------------------------------------

    def bulk_import(self, batch: ImportBatch, failpoint=None) -> ImportReport:
        """Upsert nodes then relationships in transactions of batch_size.

        Item-level problems (constraint hits, unresolvable endpoints,
        undeclared labels or types) skip the item and are recorded in the
        report. An unexpected exception inside a transaction rolls that
        transaction back atomically; later transactions still run.
        ``failpoint(item_index)`` is a test seam invoked before each item.
        """
        report = ImportReport()
        items: list = list(batch.nodes) + list(batch.relationships)
        size = batch.batch_size
        for start in range(0, len(items), size):
            chunk = items[start : start + size]
            with self.lock.write_lock():
                journal: list = []
                try:
                    for offset, item in enumerate(chunk):
                        if failpoint is not None:
                            failpoint(start + offset)
                        if isinstance(item, NodeSpec):
                            self._import_node(item, report, journal)
                        else:
                            self._import_rel(item, report, journal)
                except Exception as exc:  # noqa: BLE001 - rollback then continue
                    self._rollback(journal, report, start, exc)
                    continue
                report.committed_batches += 1
        return report

    def _rollback(self, journal, report: ImportReport, start: int, exc: Exception):
        for action in reversed(journal):
            kind = action[0]
            if kind == "node_created":
                self.delete_node(action[1])
            elif kind == "node_props":
                self.replace_properties(action[1], action[2])
            elif kind == "rel_created":
                if action[1] in self.relationships:
                    self.delete_relationship(action[1])
            elif kind == "counter":
                counter, amount = action[1], action[2]
                setattr(report, counter, getattr(report, counter) - amount)
        report.failed_batches.append(f"batch at item {start}: {exc}")

    def _import_node(self, spec: NodeSpec, report: ImportReport, journal: list) -> None:
        if spec.label not in self.schema.node_labels:
            report.failures.append(f"node {spec.key_value()!r}: undeclared label {spec.label}")
            return
        key_value = spec.key_value()
        if key_value is None:
            report.failures.append(f"node spec for :{spec.label} missing key {spec.key_property}")
            return
        existing = self._lookup_ids(spec.label, {spec.key_property: key_value})
        props = {k: v for k, v in spec.properties.items() if v is not None and v != ""}
        if existing:
            nid = min(existing)
            old = dict(self.nodes[nid].properties)
            try:
                self.set_properties(nid, props)
            except GraphError as exc:
                report.failures.append(f"node {key_value!r}: {exc}")
                return
            journal.append(("node_props", nid, old))
            journal.append(("counter", "nodes_updated", 1))
            report.nodes_updated += 1
        else:
            try:
                nid = self.create_node({spec.label}, props)
            except GraphError as exc:
                report.failures.append(f"node {key_value!r}: {exc}")
                return
            journal.append(("node_created", nid))
            journal.append(("counter", "nodes_created", 1))
            report.nodes_created += 1

    def _resolve_endpoint(self, ref: EndpointRef) -> int | None:
        ids = self._lookup_ids(ref.label, {ref.key_property: ref.key_value})
        return min(ids) if ids else None

    def _import_rel(self, spec: RelSpec, report: ImportReport, journal: list) -> None:
        pairs = self.schema.relationship_types.get(spec.type)
        if pairs is None:
            report.failures.append(f"relationship type {spec.type} undeclared")
            return
        if (spec.source.label, spec.target.label) not in pairs:
            report.failures.append(
                f"{spec.type} does not allow ({spec.source.label})->({spec.target.label})"
            )
            return
        src = self._resolve_endpoint(spec.source)
        dst = self._resolve_endpoint(spec.target)
        if src is None or dst is None:
            which = spec.source if src is None else spec.target
            report.failures.append(
                f"{spec.type}: unresolvable endpoint :{which.label}"
                f"({which.key_property}={which.key_value!r})"
            )
            return
        existing = self._rel_keys.get((spec.type, src, dst))
        if existing is not None:
            if spec.properties:
                self.relationships[existing].properties.update(spec.properties)
            journal.append(("counter", "rels_matched", 1))
            report.rels_matched += 1
            return
        rid = self.create_relationship(spec.type, src, dst, spec.properties)
        journal.append(("rel_created", rid))
        journal.append(("counter", "rels_created", 1))
        report.rels_created += 1

    # -- snapshots -----------------------------------------------------------

    def _payload(self) -> list[bytes]:
        schema_block = json.dumps(self.schema.to_dict(), sort_keys=True).encode()
        nodes_block = json.dumps(
            [
                [n.node_id, sorted(n.labels), dict(sorted(n.properties.items()))]
                for n in sorted(self.nodes.values(), key=lambda n: n.node_id)
            ]
        ).encode()
        rels_block = json.dumps(
            [
                [r.rel_id, r.type, r.source, r.target, dict(sorted(r.properties.items()))]
                for r in sorted(self.relationships.values(), key=lambda r: r.rel_id)
            ]
        ).encode()
        return [schema_block, nodes_block, rels_block]

    def canonical_digest(self) -> str:
        """Content digest of schema, nodes, and edges (id-order canonical)."""
        h = hashlib.sha256()
        for block in self._payload():
            h.update(block)
        return h.hexdigest()

    def snapshot_save(self, path: str | Path) -> Path:
        path = Path(path)
        with self.lock.read_lock():
            blocks = self._payload()
        body = bytearray()
        body += SNAPSHOT_MAGIC
        body += SNAPSHOT_VERSION.to_bytes(4, "little")
        for block in blocks:
            compressed = zlib.compress(block, 6)
            body += len(compressed).to_bytes(8, "little")
            body += compressed
        checksum = hashlib.sha256(bytes(body)).digest()
        path.write_bytes(bytes(body) + checksum)
        return path

    @classmethod
    def snapshot_load(cls, path: str | Path) -> "PropertyGraph":
        data = Path(path).read_bytes()
        if len(data) < 44 or data[:4] != SNAPSHOT_MAGIC:
            raise SnapshotError("not a graph snapshot (bad magic)")
        version = int.from_bytes(data[4:8], "little")
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(
                f"snapshot version {version} unsupported (expected {SNAPSHOT_VERSION})"
            )
        body, checksum = data[:-32], data[-32:]
        if hashlib.sha256(body).digest() != checksum:
            raise SnapshotError("snapshot checksum mismatch (truncated or corrupt)")
        offset = 8
        blocks = []
        for _ in range(3):
            if offset + 8 > len(body):
                raise SnapshotError("snapshot truncated")
            length = int.from_bytes(body[offset : offset + 8], "little")
            offset += 8
            raw = body[offset : offset + length]
            if len(raw) != length:
                raise SnapshotError("snapshot truncated")
            offset += length
            blocks.append(json.loads(zlib.decompress(raw)))
        if offset != len(body):
            raise SnapshotError("snapshot has trailing garbage")

        graph = cls()
        graph.schema = GraphSchema.from_dict(blocks[0])
        for key in graph.schema.all_indexes():
            graph._indexes[key] = {}
        for node_id, labels, props in blocks[1]:
            node = Node(node_id=node_id, labels=set(labels), properties=props)
            graph.nodes[node_id] = node
            graph._out[node_id] = []
            graph._in[node_id] = []
            for label in node.labels:
                graph._label_members.setdefault(label, set()).add(node_id)
            graph._index_add(node)
            graph._next_node_id = max(graph._next_node_id, node_id + 1)
        for rel_id, type_, src, dst, props in blocks[2]:
            rel = Relationship(rel_id, type_, src, dst, props)
            graph.relationships[rel_id] = rel
            graph._out[src].append(rel_id)
            graph._in[dst].append(rel_id)
            graph._rel_keys[(type_, src, dst)] = rel_id
            graph._next_rel_id = max(graph._next_rel_id, rel_id + 1)
        return graph
