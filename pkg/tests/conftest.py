import os

import pytest
from hypothesis import HealthCheck, settings

from spt_rgbd import synth

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory):
    """Small generated dataset (three 30-frame test sequences), written once per session."""
    root = tmp_path_factory.mktemp("synth")
    configs = [synth.random_config(s, n_frames=30) for s in range(3)]
    synth.write_synth_dataset(configs, root)
    return root


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    lines = acceptance_log.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
