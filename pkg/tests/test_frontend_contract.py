"""Keeps the review console's fixture file in lockstep with the service.

The frontend tests run against frontend/tests/fixtures/service_fixtures.json;
this test rebuilds that fixture from the real service and fails if the
committed file has drifted (regenerate with scripts/make_frontend_fixtures.py).
"""

import importlib.util
import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_builder():
    spec = importlib.util.spec_from_file_location(
        "make_frontend_fixtures", REPO / "scripts" / "make_frontend_fixtures.py"
    )
    module = importlib.util.module_from_spec(spec)
    sys.modules[spec.name] = module
    spec.loader.exec_module(module)
    return module


def test_committed_fixture_matches_live_service(tmp_path):
    builder = load_builder()
    live = builder.build_fixture(tmp_path)
    committed = json.loads(builder.FIXTURE_PATH.read_text(encoding="utf-8"))
    assert committed == live
