import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sbls import kernels  # noqa: E402
from sbls.synth import SynthSpec, generate  # noqa: E402


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


def spec_dict(seed=1, n_rows=600, sex="binormal", age="binormal", **extra):
    sex_attr = {"name": "sex", "classes": ["male", "female"], "linkage": sex}
    age_attr = {"name": "age", "classes": ["young", "adult", "senior"], "linkage": age}
    for a in (sex_attr, age_attr):
        if a["linkage"] == "binormal":
            a["target_auc"] = 0.7
        elif a["linkage"] == "noisy":
            a["p_correct"] = 0.8
    d = {"seed": seed, "n_rows": n_rows, "attributes": [sex_attr, age_attr]}
    d.update(extra)
    return d


@pytest.fixture
def make_dataset(tmp_path):
    def make(name="ds", **kwargs):
        out = tmp_path / name
        generate(SynthSpec.from_json(spec_dict(**kwargs)), out)
        return out
    return make


_ACCEPTANCE: dict[int, tuple[str, list[bool]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, text = mark.args
    _ACCEPTANCE.setdefault(n, (text, []))[1].append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        text, results = _ACCEPTANCE[n]
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {text}")
