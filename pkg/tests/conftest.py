import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from colsem.core import Database, Relation

settings.register_profile("default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

AUTHORS = Relation(
    "R",
    (("Author", "str"), ("Institute", "str"), ("Address", "str")),
    [("Codd", "IBM", "San Jose"), ("Chamberlin", "IBM", None), ("Boyce", None, "San Jose")],
)


@pytest.fixture
def authors():
    return Relation(AUTHORS.name, AUTHORS.columns, list(AUTHORS.rows))


@pytest.fixture
def authors_db(authors):
    return Database([authors])


@pytest.fixture
def x_db():
    """R(x) = {(1), (Null)}."""
    return Database([Relation("R", (("x", "int"),), [(1,), (None,)])])


_VALUES = {
    "int": st.integers(-(2**40), 2**40),
    "float": st.floats(allow_nan=False, width=64),
    "str": st.text(alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"), min_size=1, max_size=8),
    "bool": st.booleans(),
}


@st.composite
def relations(draw, max_rows=8, max_columns=4, types=tuple(_VALUES), name="R"):
    width = draw(st.integers(1, max_columns))
    columns = tuple((f"c{i}", draw(st.sampled_from(types))) for i in range(width))
    row = st.tuples(*(st.one_of(st.none(), _VALUES[t]) for _, t in columns))
    rows = draw(st.lists(row, max_size=max_rows))
    if draw(st.booleans()):
        rows.append((None,) * width)
    return Relation(name, columns, rows)


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str = ""):
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else ""))
