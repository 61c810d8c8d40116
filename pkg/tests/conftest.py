import json

import pytest

from edgemdl.graph import parse_schema

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []

TOY_SCHEMA = {
    "object_types": ["user", "product"],
    "relations": [
        {
            "name": "rates",
            "source": "user",
            "target": "product",
            "directed": False,
            "attributes": [
                {"name": "stars", "kind": "categorical", "domain": [1, 2, 3, 4, 5]},
                {"name": "ts", "kind": "temporal"},
            ],
        }
    ],
}

TOY_EDGES = """relation,source,target,stars,ts
rates,u1,p1,5,100
rates,u1,p2,5,105
rates,u1,p3,5,110
rates,u2,p1,1,1000
rates,u2,p2,4,90000
rates,u3,p3,3,500000
"""


@pytest.fixture
def toy_schema():
    return parse_schema(json.dumps(TOY_SCHEMA))


@pytest.fixture
def toy_files(tmp_path):
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps(TOY_SCHEMA))
    edges = tmp_path / "edges.csv"
    edges.write_text(TOY_EDGES)
    return schema, edges


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
