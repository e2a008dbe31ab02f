import random

from askg.cypher.executor import ResultSet
from askg.ground import GroundedAnswer, canonical_number, compose, verify


def _rs(columns, rows, provenance=None, page=None):
    return ResultSet(
        columns=columns,
        rows=[tuple(r) for r in rows],
        provenance=[tuple(p) for p in (provenance or [[] for _ in rows])],
        page=page or {"number": 1, "size": 100, "has_more": False},
        stats={"rows_scanned": 0, "type_mismatches": 0, "elapsed_ms": 0.1},
    )


def _node(nid, **props):
    return {"id": nid, "labels": ["Accident"], "properties": props}


class TestCompose:
    def test_empty_results(self):
        answer = compose("q", "MATCH ...", _rs(["x"], []))
        assert answer.text == "No matching records found."
        assert answer.verified is True
        assert answer.citations == []
        assert answer.provenance == []

    def test_two_row_listing_cites_both_event_ids(self):
        rs = _rs(
            ["x"],
            [[_node(11, event_id="EV01", event_year=2020)],
             [_node(22, event_id="EV02", event_year=2021)]],
            provenance=[[11], [22]],
        )
        answer = compose("q", "c", rs)
        assert "'EV01'" in answer.text
        assert "'EV02'" in answer.text
        assert answer.provenance == [11, 22]
        assert answer.verified is True
        assert {c["value"] for c in answer.citations} == {"EV01", "EV02"}

    def test_count_query_cites_the_aggregate_cell(self):
        rs = _rs(["count(x)"], [[7]], provenance=[[1, 2, 3]])
        answer = compose("q", "c", rs)
        assert "7" in answer.text
        assert answer.citations == [{"value": "7", "row": 0, "column": 0}]
        assert answer.verified is True

    def test_listing_truncates_at_five(self):
        rows = [[_node(i, event_id=f"EV{i:02d}")] for i in range(8)]
        rs = _rs(["x"], rows, provenance=[[i] for i in range(8)])
        answer = compose("q", "c", rs)
        assert "include" in answer.text
        assert len(answer.citations) == 5

    def test_deterministic(self):
        rs = _rs(["x"], [[_node(1, event_id="A")]], provenance=[[1]])
        assert compose("q", "c", rs).text == compose("q", "c", rs).text


class TestVerify:
    def test_compose_verify_closure_on_samples(self):
        rs = _rs(["x", "n"], [[_node(5, event_id="EV9"), 3]], provenance=[[5]])
        answer = compose("q", "c", rs)
        assert verify(answer, rs) == []

    def test_foreign_quoted_value_is_violation(self):
        rs = _rs(["x"], [[_node(1, event_id="EV1")]], provenance=[[1]])
        answer = GroundedAnswer(
            text="Matching records: 'EV1', 'GHOST99'.",
            provenance=[1],
            citations=[],
            verified=False,
        )
        violations = verify(answer, rs)
        assert any("GHOST99" in v for v in violations)

    def test_foreign_number_is_violation(self):
        rs = _rs(["count(x)"], [[7]], provenance=[[1]])
        answer = GroundedAnswer(
            text="There are 7 matching records across 12 states.",
            provenance=[1],
            citations=[],
            verified=False,
        )
        violations = verify(answer, rs)
        assert any("'12'" in v for v in violations)

    def test_foreign_provenance_id_is_violation(self):
        rs = _rs(["x"], [[_node(1, event_id="EV1")]], provenance=[[1]])
        answer = GroundedAnswer(
            text="Matching records: 'EV1'.", provenance=[1, 999], citations=[], verified=False
        )
        violations = verify(answer, rs)
        assert any("999" in v for v in violations)

    def test_bad_citation_coordinates_are_violations(self):
        rs = _rs(["x"], [[_node(1, event_id="EV1")]], provenance=[[1]])
        answer = GroundedAnswer(
            text="Matching records: 'EV1'.",
            provenance=[1],
            citations=[{"value": "EV1", "row": 9, "column": 0}],
            verified=False,
        )
        assert verify(answer, rs)

    def test_monotone_violation_detection(self):
        rs = _rs(["x"], [[_node(1, event_id="EV1", city="Miami")]], provenance=[[1]])
        good = compose("q", "c", rs)
        assert verify(good, rs) == []
        tampered = GroundedAnswer(
            text=good.text + " Also 'FABRICATED'.",
            provenance=good.provenance,
            citations=good.citations,
            verified=True,
        )
        assert len(verify(tampered, rs)) >= 1

    def test_number_canonicalization(self):
        assert canonical_number(7.0) == "7"
        assert canonical_number(7.5) == "7.5"
        assert canonical_number(1234567) == "1234567"
        rs = _rs(["sum(x.n)"], [[1234567.0]], provenance=[[1]])
        answer = compose("q", "c", rs)
        assert "1234567" in answer.text
        assert "," not in answer.text.replace(", ", " ")
        assert answer.verified


class TestClosureFuzz:
    WORD_POOL = ["alpha", "beta", "gamma's", 'quo"te', "x-ray", "", "O'Hare", "a\\b"]

    def _random_results(self, rng: random.Random) -> ResultSet:
        n_cols = rng.randint(1, 3)
        aggregate = rng.random() < 0.25
        if aggregate:
            columns = [rng.choice(["count(x)", "sum(x.n)", "min(x.n)"])]
            rows = [[rng.choice([rng.randint(0, 10 ** rng.randint(1, 7)),
                                 rng.random() * 100, 0])]]
            provenance = [sorted(rng.sample(range(1, 50), rng.randint(0, 4)))]
            return _rs(columns, rows, provenance)
        columns = [f"c{i}" for i in range(n_cols)]
        rows = []
        provenance = []
        for r in range(rng.randint(0, 6)):
            row = []
            for c in range(n_cols):
                roll = rng.random()
                if roll < 0.35:
                    props = {}
                    if rng.random() < 0.8:
                        props["event_id"] = f"EV{rng.randint(0, 999):03d}"
                    if rng.random() < 0.5:
                        props["city"] = rng.choice(self.WORD_POOL)
                    if rng.random() < 0.4:
                        props["event_year"] = rng.randint(1990, 2025)
                    row.append({"id": rng.randint(1, 200), "labels": ["Accident"],
                                "properties": props})
                elif roll < 0.55:
                    row.append(rng.randint(-5, 10 ** rng.randint(1, 6)))
                elif roll < 0.7:
                    row.append(round(rng.random() * 1000, 3))
                elif roll < 0.85:
                    row.append(rng.choice(self.WORD_POOL))
                elif roll < 0.95:
                    row.append(rng.random() < 0.5)
                else:
                    row.append(None)
            rows.append(row)
            provenance.append(sorted({cell["id"] for cell in row if isinstance(cell, dict)}))
        return _rs(columns, rows, provenance)

    def test_500_fuzz_trials_all_verify(self):
        rng = random.Random(4242)
        for trial in range(500):
            rs = self._random_results(rng)
            answer = compose("question", "query", rs)
            violations = verify(answer, rs)
            assert violations == [], (trial, answer.text, violations)
            assert answer.verified is True
            if rs.rows:
                has_displayable = any(
                    cell is not None and cell != "" for cell in
                    (row[0] for row in rs.rows)
                )
                if answer.provenance:
                    union = set()
                    for p in rs.provenance:
                        union |= set(p)
                    assert set(answer.provenance) <= union
