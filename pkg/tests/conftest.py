import numpy as np
import pytest

from consfem.mesh import appendix_hexagon, perturbed, refine, square_crisscross


@pytest.fixture(scope="session")
def hex0():
    return appendix_hexagon()


@pytest.fixture(scope="session")
def hex1():
    return refine(appendix_hexagon(), 1)


@pytest.fixture(scope="session")
def hex2():
    return refine(appendix_hexagon(), 2)


@pytest.fixture(scope="session")
def cross3():
    return square_crisscross(3)


@pytest.fixture(scope="session")
def jittered():
    return perturbed(refine(appendix_hexagon(), 2), 0.15, seed=3)


@pytest.fixture(scope="session")
def mesh_suite(hex0, hex1, hex2, cross3, jittered):
    """Meshes on which every divergence-free construction must hold."""
    return {"hex0": hex0, "hex1": hex1, "hex2": hex2, "cross3": cross3,
            "jittered": jittered,
            "jittered_cross": perturbed(square_crisscross(4), 0.2, seed=11)}


def random_triangle(rng, min_area=0.05):
    while True:
        x = rng.uniform(-1.0, 1.0, size=(3, 2))
        a = 0.5 * ((x[1, 0] - x[0, 0]) * (x[2, 1] - x[0, 1]) - (x[1, 1] - x[0, 1]) * (x[2, 0] - x[0, 0]))
        if abs(a) > min_area:
            return x if a > 0 else x[[0, 2, 1]]


# --------------------------------------------------------------------------
# acceptance report: one line per criterion in the terminal summary

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    num, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    ok = rep.passed if rep.when == "call" else False
    if rep.when == "call" or not ok:
        _criteria[num] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, ok, detail = _criteria[num]
        line = f"criterion {num} ({title}): {'PASS' if ok else 'FAIL'}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
