import pytest

from rminar import estimation

ORTHO_TOL = 1e-8

# every fit made while a test runs is recorded here and checked on teardown
_fits: list = []
ACCEPTANCE_LINES: list[str] = []
# session-wide record for the orthogonality criterion
ORTHO_SESSION = {"fits": 0, "max": 0.0}


def _recording(fn):
    def wrapper(*args, **kwargs):
        res = fn(*args, **kwargs)
        _fits.append(res)
        return res

    wrapper.__wrapped__ = fn
    return wrapper


@pytest.fixture(scope="session", autouse=True)
def _record_fits():
    names = ["four_stage_wls_additive", "four_stage_wls_multiplicative", "multiplicative_triplet"]
    originals = {n: getattr(estimation, n) for n in names}
    for n, fn in originals.items():
        setattr(estimation, n, _recording(fn))
    yield
    for n, fn in originals.items():
        setattr(estimation, n, fn)


@pytest.fixture(autouse=True)
def _orthogonality_guard(request):
    _fits.clear()
    yield
    if request.node.get_closest_marker("no_ortho_guard"):
        return
    for r in _fits:
        ORTHO_SESSION["fits"] += 1
        ORTHO_SESSION["max"] = max([ORTHO_SESSION["max"], *r.orthogonality.values()])
    bad = [(k, v) for r in _fits for k, v in r.orthogonality.items() if not v <= ORTHO_TOL]
    _fits.clear()
    if bad:
        pytest.fail(f"normal-equation orthogonality above {ORTHO_TOL}: {bad[:5]}")


def pytest_configure(config):
    config.addinivalue_line("markers", "no_ortho_guard: skip the per-test orthogonality check")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    if ORTHO_SESSION["fits"]:
        ok = ORTHO_SESSION["max"] <= ORTHO_TOL
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] 12 (whole session): {ORTHO_SESSION['fits']} in-process fits, "
            f"max relative orthogonality residual {ORTHO_SESSION['max']:.2e} (limit {ORTHO_TOL:g})"
        )
