import pytest

from tbm import _apsp_py, apsp

try:
    from tbm import _apsp as _apsp_c
except ImportError:  # extension not built
    _apsp_c = None

BACKENDS = [pytest.param(_apsp_py, id="python"),
            pytest.param(_apsp_c, id="cython",
                         marks=pytest.mark.skipif(_apsp_c is None, reason="extension not built"))]


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per shortest-path kernel."""
    monkeypatch.setattr(apsp, "relax_edge", request.param.relax_edge)
    monkeypatch.setattr(apsp, "floyd_warshall", request.param.floyd_warshall)
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
