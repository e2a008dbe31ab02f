"""Three-tier entity resolution.

Surfaces are normalized lexically, grouped into entities keyed by a
content-derived id, and compared pairwise inside blocking buckets.
Merge candidates come from three tiers, in priority order:

* ``rule``: alias families from the domain rule table (unconditional);
* ``lexical``: identical canonical forms (unconditional; only arises
  when merging independently resolved entity sets);
* ``embedding``: cosine similarity of hashed character-trigram vectors
  at or above the configured threshold (default 0.8).

Candidates are reported, never auto-merged; ``apply_merges`` performs
the explicit consolidation step.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

KINDS = ("manufacturer", "model", "airport", "airline", "location")

DEFAULT_THRESHOLD = 0.8


class ResolveError(Exception):
    pass


@dataclass(frozen=True)
class RuleTable:
    """Alias families and code-prefix expansions, keyed by normalized form."""

    prefix_expansions: dict[str, str]
    model_families: list[list[str]]
    manufacturer_families: list[list[str]]
    version: str = "1"

    def families_for(self, kind: str) -> list[list[str]]:
        if kind == "model":
            return self.model_families
        if kind == "manufacturer":
            return self.manufacturer_families
        return []

    def family_index(self, kind: str) -> dict[str, int]:
        out: dict[str, int] = {}
        for i, fam in enumerate(self.families_for(kind)):
            for form in fam:
                out[form] = i
        return out

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleTable":
        raw = json.loads(Path(path).read_text("utf-8"))
        return cls(
            prefix_expansions=raw.get("prefix_expansions", {}),
            model_families=raw.get("model_families", []),
            manufacturer_families=raw.get("manufacturer_families", []),
            version=str(raw.get("version", "1")),
        )


def default_rules() -> RuleTable:
    with resources.as_file(
        resources.files("askg.data").joinpath("resolution_rules.json")
    ) as p:
        return RuleTable.from_file(p)


@dataclass(frozen=True)
class EntityCandidate:
    surface: str
    kind: str
    source_record: str = ""


@dataclass
class ResolvedEntity:
    entity_id: str
    canonical: str
    kind: str
    aliases: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class MergeCandidate:
    left: ResolvedEntity
    right: ResolvedEntity
    similarity: float
    tier: str  # rule | lexical | embedding


_PREFIX_CODE = re.compile(r"([a-z])(\d[\w-]*)")


def normalize(surface: str, kind: str, rules: RuleTable | None = None) -> str:
    """Canonicalize a surface form.

    Lowercases, collapses whitespace, strips punctuation except hyphens
    inside tokens, and for model strings expands a leading
    manufacturer-code letter (``b737-800`` becomes ``boeing 737-800``).
    """
    if not surface or not surface.strip():
        raise ValueError("surface must be non-empty")
    if rules is None:
        rules = default_rules()
    s = re.sub(r"[^\w\s-]", "", surface.lower())
    tokens = [t for t in (tok.strip("-") for tok in s.split()) if t]
    if kind == "model" and tokens:
        m = _PREFIX_CODE.fullmatch(tokens[0])
        if m and m.group(1) in rules.prefix_expansions:
            tokens = [rules.prefix_expansions[m.group(1)], m.group(2)] + tokens[1:]
    return " ".join(tokens)


def entity_id_for(kind: str, canonical: str) -> str:
    digest = hashlib.sha256(f"{kind}\x1f{canonical}".encode("utf-8")).hexdigest()
    return digest[:16]


def resolve_entities(
    candidates: list[EntityCandidate], rules: RuleTable | None = None
) -> list[ResolvedEntity]:
    """Group candidate surfaces by normalized form and assign stable ids.

    One entity per (kind, canonical); the entity id is derived from that
    pair, so rebuilding from the same staging set reproduces it.
    """
    if rules is None:
        rules = default_rules()
    grouped: dict[tuple[str, str], ResolvedEntity] = {}
    for cand in candidates:
        if cand.kind not in KINDS:
            raise ResolveError(f"unknown entity kind {cand.kind!r}")
        surface = cand.surface.strip()
        if not surface:
            continue
        canonical = normalize(surface, cand.kind, rules)
        if not canonical:
            continue
        key = (cand.kind, canonical)
        ent = grouped.get(key)
        if ent is None:
            ent = ResolvedEntity(
                entity_id=entity_id_for(cand.kind, canonical),
                canonical=canonical,
                kind=cand.kind,
            )
            grouped[key] = ent
        ent.aliases.add(surface)
    return sorted(grouped.values(), key=lambda e: e.entity_id)


class HashedTrigramEmbedding:
    """Deterministic character-trigram embedding with a fixed hash.

    Buckets each contiguous 3-character substring into one of
    ``dimension`` slots via SHA-256, counts occurrences, and returns the
    L2-normalized count vector. Inputs shorter than 3 characters hash as
    a single gram.
    """

    name = "hashed-trigram"

    def __init__(self, dimension: int = 256):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        grams = (
            [text]
            if len(text) < 3
            else [text[i : i + 3] for i in range(len(text) - 2)]
        )
        vec = np.zeros(self.dimension, dtype=np.float64)
        for g in grams:
            h = hashlib.sha256(g.encode("utf-8")).digest()
            vec[int.from_bytes(h[:4], "big") % self.dimension] += 1.0
        return vec / np.linalg.norm(vec)


_DEFAULT_PROVIDER = HashedTrigramEmbedding()


def embed(text: str) -> np.ndarray:
    """Embed with the default hashed-trigram provider (dimension 256)."""
    return _DEFAULT_PROVIDER.embed(text)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u, v))


def _blocking_buckets(
    entities: list[ResolvedEntity], family_of: dict[str, int]
) -> list[list[int]]:
    """Indexes of entities grouped by first token or shared rule family."""
    buckets: dict[str, list[int]] = {}
    for i, ent in enumerate(entities):
        first = ent.canonical.split(" ", 1)[0]
        buckets.setdefault(f"tok:{first}", []).append(i)
        fam = family_of.get(ent.canonical)
        if fam is not None:
            buckets.setdefault(f"fam:{fam}", []).append(i)
    return list(buckets.values())


def find_merge_candidates(
    entities: list[ResolvedEntity],
    threshold: float = DEFAULT_THRESHOLD,
    rules: RuleTable | None = None,
    provider: HashedTrigramEmbedding | None = None,
) -> list[MergeCandidate]:
    """Propose duplicate pairs among entities of one kind.

    Pairs are deduplicated (highest-priority tier wins) and returned in
    canonical order, sorted by entity-id pair. Candidates are proposals
    only: nothing is merged here.
    """
    if not entities:
        return []
    kinds = {e.kind for e in entities}
    if len(kinds) > 1:
        raise ResolveError(f"mixed entity kinds: {sorted(kinds)}")
    if not 0 < threshold <= 1:
        raise ResolveError("threshold must be in (0, 1]")
    if rules is None:
        rules = default_rules()
    if provider is None:
        provider = _DEFAULT_PROVIDER

    kind = next(iter(kinds))
    family_of = rules.family_index(kind)
    vectors = [provider.embed(e.canonical) for e in entities]

    best: dict[tuple[int, int], MergeCandidate] = {}
    rank = {"rule": 2, "lexical": 1, "embedding": 0}
    for bucket in _blocking_buckets(entities, family_of):
        for ai in range(len(bucket)):
            for bi in range(ai + 1, len(bucket)):
                i, j = bucket[ai], bucket[bi]
                left, right = entities[i], entities[j]
                if left is right:
                    continue
                sim = cosine(vectors[i], vectors[j])
                fam_l = family_of.get(left.canonical)
                if fam_l is not None and fam_l == family_of.get(right.canonical):
                    tier = "rule"
                elif left.canonical == right.canonical:
                    tier = "lexical"
                elif sim >= threshold:
                    tier = "embedding"
                else:
                    continue
                key = (min(i, j), max(i, j))
                prev = best.get(key)
                if prev is None or rank[tier] > rank[prev.tier]:
                    if left.entity_id > right.entity_id:
                        left, right = right, left
                    best[key] = MergeCandidate(left, right, sim, tier)
    return sorted(best.values(), key=lambda c: (c.left.entity_id, c.right.entity_id))


def apply_merges(
    entities: list[ResolvedEntity], accepted: list[MergeCandidate]
) -> list[ResolvedEntity]:
    """Consolidate entities connected by accepted candidates.

    Union-find over the accepted pairs; each cluster keeps the
    lexicographically least canonical as survivor, takes the union of
    aliases, and gets a fresh content-derived id.
    """
    index = {id(e): i for i, e in enumerate(entities)}
    by_id: dict[str, int] = {}
    for i, e in enumerate(entities):
        by_id.setdefault(e.entity_id, i)

    parent = list(range(len(entities)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    def locate(e: ResolvedEntity) -> int:
        i = index.get(id(e))
        if i is not None:
            return i
        i = by_id.get(e.entity_id)
        if i is not None:
            return i
        # a previous merge may have absorbed this entity: find the
        # survivor that carries its canonical or all of its aliases,
        # which makes re-applying an accepted set a no-op
        for j, ent in enumerate(entities):
            if ent.kind != e.kind:
                continue
            if e.canonical == ent.canonical or e.canonical in {
                normalize(a, ent.kind) for a in ent.aliases
            }:
                return j
            if e.aliases and e.aliases <= ent.aliases:
                return j
        raise ResolveError(f"merge references unknown entity {e.entity_id}")

    for cand in accepted:
        union(locate(cand.left), locate(cand.right))

    clusters: dict[int, list[ResolvedEntity]] = {}
    for i, e in enumerate(entities):
        clusters.setdefault(find(i), []).append(e)

    merged: list[ResolvedEntity] = []
    for members in clusters.values():
        canonical = min(m.canonical for m in members)
        aliases: set[str] = set()
        for m in members:
            aliases |= m.aliases
        merged.append(
            ResolvedEntity(
                entity_id=entity_id_for(members[0].kind, canonical),
                canonical=canonical,
                kind=members[0].kind,
                aliases=aliases,
            )
        )
    return sorted(merged, key=lambda e: e.entity_id)


def clusters_from_candidates(
    entities: list[ResolvedEntity], candidates: list[MergeCandidate]
) -> list[list[ResolvedEntity]]:
    """Connected components of size >= 2 under the candidate pairs."""
    pos = {e.entity_id: i for i, e in enumerate(entities)}
    parent = list(range(len(entities)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in candidates:
        a, b = pos.get(c.left.entity_id), pos.get(c.right.entity_id)
        if a is None or b is None:
            raise ResolveError("candidate references entity outside the set")
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    groups: dict[int, list[ResolvedEntity]] = {}
    for i, e in enumerate(entities):
        groups.setdefault(find(i), []).append(e)
    return [
        sorted(g, key=lambda e: e.canonical)
        for g in groups.values()
        if len(g) >= 2
    ]


def extract_candidates(staging) -> dict[str, list[EntityCandidate]]:
    """Pull entity candidates of every kind out of a staging set."""
    out: dict[str, list[EntityCandidate]] = {k: [] for k in KINDS}
    for rec in staging.records:
        rid = rec.event_id
        if rec.acft_make.strip():
            out["manufacturer"].append(EntityCandidate(rec.acft_make, "manufacturer", rid))
        if rec.acft_model.strip():
            out["model"].append(EntityCandidate(rec.acft_model, "model", rid))
        if rec.airport_icao.strip():
            out["airport"].append(EntityCandidate(rec.airport_icao, "airport", rid))
        if rec.operator_name.strip():
            out["airline"].append(EntityCandidate(rec.operator_name, "airline", rid))
        if rec.city.strip():
            loc = f"{rec.city}, {rec.state}" if rec.state else rec.city
            out["location"].append(EntityCandidate(loc, "location", rid))
    return out


def write_merge_report(candidates: list[MergeCandidate], path: str | Path) -> Path:
    """Write the merge-candidate report CSV."""
    import csv

    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["left_id", "right_id", "left_canonical", "right_canonical", "similarity", "tier"]
        )
        for c in candidates:
            writer.writerow(
                [
                    c.left.entity_id,
                    c.right.entity_id,
                    c.left.canonical,
                    c.right.canonical,
                    f"{c.similarity:.6f}",
                    c.tier,
                ]
            )
    return path
