import pytest

pytestmark = pytest.mark.plugin


def test_scenario_hook_overrides_default(pytester: pytest.Pytester) -> None:
    pytester.makeconftest("""
    from prnn_abc import Scenario

    def pytest_prnn_abc_scenario(config):
        return Scenario(name="hooked", adaptive=True)
""")
    pytester.makepyfile("""
    def test_hooked(prnn_scenario):
        assert prnn_scenario.name == "hooked"
        assert prnn_scenario.adaptive
""")
    pytester.runpytest().assert_outcomes(passed=1)


def test_hook_returning_none_falls_through(pytester: pytest.Pytester) -> None:
    pytester.makeconftest("""
    def pytest_prnn_abc_scenario(config):
        return None
""")
    pytester.makepyfile("""
    def test_default(prnn_scenario):
        assert prnn_scenario.name == "default"
""")
    pytester.runpytest().assert_outcomes(passed=1)


def test_scenario_hook_runs_once_per_session(pytester: pytest.Pytester) -> None:
    pytester.makepyfile("""
    def test_one(prnn_scenario):
        ...

    def test_two(prnn_scenario):
        ...
""")
    hook_recorder = pytester.inline_run()
    calls = hook_recorder.getcalls("pytest_prnn_abc_scenario")
    assert len(calls) == 1


def test_scenario_hook_is_lazy(pytester: pytest.Pytester) -> None:
    pytester.makepyfile("""
    def test_plain():
        ...
""")
    hook_recorder = pytester.inline_run()
    calls = hook_recorder.getcalls("pytest_prnn_abc_scenario")
    assert not calls
