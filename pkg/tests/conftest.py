import json

import pytest

from askg import ingest


@pytest.fixture(scope="session")
def fixture_1000(tmp_path_factory):
    """Clean 1,000-row fixture shared across suites (seed 7, alias 0.2)."""
    out = tmp_path_factory.mktemp("fixture1000")
    paths = ingest.gen_fixture(1000, seed=7, alias_rate=0.2, out_dir=out)
    return paths


@pytest.fixture(scope="session")
def fixture_1000_dirty(tmp_path_factory):
    """1,000 rows with 10 deliberately malformed rows injected."""
    out = tmp_path_factory.mktemp("fixture1000dirty")
    return ingest.gen_fixture(1000, seed=7, alias_rate=0.2, out_dir=out, malformed=10)


@pytest.fixture(scope="session")
def staging_1000(fixture_1000):
    return ingest.parse_csv(fixture_1000.csv)


@pytest.fixture(scope="session")
def fixture_counts(fixture_1000):
    return json.loads(fixture_1000.counts.read_text("utf-8"))
