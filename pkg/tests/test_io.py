import numpy as np
import pytest

from ftconsensus import io
from ftconsensus.errors import ParseError, ValidationError
from ftconsensus.sim import Event, Trace, run

BUNDLED = ["paper_actuator_fault", "paper_baseline_faultfree", "paper_process_fault",
           "paper_process_fault_noftc"]


def _text(name):
    return io.scenario_path(name).read_text()


def test_bundled_scenarios_listed():
    assert io.bundled_scenarios() == BUNDLED


def test_load_bundled_process_fault():
    cfg = io.load_scenario("paper_process_fault")
    assert cfg.M == 5 and cfg.n == 2
    assert cfg.integration.dt == 1e-3 and cfg.integration.t_end == 30.0
    assert cfg.fault.agent == 1 and cfg.fault.type == 1 and cfg.fault.theta == (0.8,)
    assert cfg.gains.fde_h == 2.0 and cfg.gains.fie_lambda == 10.0
    assert cfg.rbf.neurons == 21


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip(name, tmp_path):
    cfg = io.load_scenario(name)
    path = tmp_path / "s.yaml"
    io.dump_scenario(cfg, path)
    assert io.load_scenario(path) == cfg


@pytest.mark.parametrize("text", ["", "# only a comment\n", "[1, 2", "- a\n- b\n"])
def test_parse_errors(text, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ParseError):
        io.load_scenario(path)


@pytest.mark.parametrize("old, new, key", [
    ("theta_bar: -0.8", "theta_bar: -1.0", "gains.theta_bar"),
    ("fde_h: 2.0", "fde_h: 0.0", "gains.fde_h"),
    ("dt_s: 0.001", "dt_s: -0.001", "integration.dt_s"),
    ("t_end_s: 30.0", "t_end_s: 4.0", "integration.t_end_s"),
    ("theta: [0.8]", "theta: [1.5]", "fault.theta"),
    ("{name: x2cosx}", "{name: x3}", "fault_class[0].basis.name"),
    ("kappa: [1.0, 1.0]", "kappa: [0.5, 0.5]", "leader.kappa"),
    ("    - [2, 1.0]", "    []", "topology"),
    ("fie_x_bar: 0.0", "fie_x_bar: 0.0\n  typo_gain: 1.0", "gains.typo_gain"),
    ("scheme: euler", "scheme: midpoint", "integration.scheme"),
])
def test_validation_errors_name_key(old, new, key):
    text = _text("paper_process_fault")
    assert old in text
    with pytest.raises(ValidationError) as exc:
        io.parse_scenario(text.replace(old, new, 1))
    assert exc.value.key == key


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        io.load_scenario("no_such_scenario")


@pytest.fixture(scope="module")
def short_result():
    cfg = io.load_scenario("paper_process_fault").with_overrides(t_end=6.0)
    return run(cfg)


def test_trace_csv_round_trip(short_result, tmp_path):
    path = tmp_path / "out" / "trace.csv"
    io.write_trace(short_result.trace, path, short_result.events)
    header = path.read_text().splitlines()[0].split(",")
    assert header == short_result.trace.columns
    trace, events = io.read_trace(path)
    # 17 significant digits reproduce every double exactly
    np.testing.assert_array_equal(trace.data, short_result.trace.data)
    assert events == short_result.events
    assert io.events_path(path).name == "trace.events.csv"


def test_trace_without_events(short_result, tmp_path):
    path = tmp_path / "trace.csv"
    io.write_trace(short_result.trace, path)
    _, events = io.read_trace(path)
    assert events is None


def test_read_trace_rejects_garbage(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("")
    with pytest.raises(ParseError):
        io.read_trace(path)
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        io.read_trace(path)


def test_summary_of_fault_run(short_result):
    s = io.summarize(short_result.trace, short_result.events)
    a1 = s.agents[0]
    assert 5.0 < a1.T_d < 5.5 and a1.isolated_type == 1 and a1.T_isol >= a1.T_d
    assert a1.fie_violations[1] == 0
    assert all(a.T_d is None and a.fde_violations == 0 for a in s.agents[1:])
    text = str(s)
    assert "agent 1: detected at" in text and "isolated fault type 1" in text
    assert s.window == pytest.approx((1.0, 6.0))
    # mode columns alone recover the same times
    inferred = io.summarize(short_result.trace)
    assert inferred.agents[0].T_d == a1.T_d and inferred.agents[0].T_isol == a1.T_isol


def test_summary_hand_trace():
    cols = ["t", "xr_1", "x_1_1", "err_1_1", "u_1_1", "eps_1_1", "nu_1_1", "mode_1"]
    data = np.array([
        [0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.1, 0.0],
        [1.0, 0.0, 0.0, 3.0, 0.0, 0.2, 0.1, 0.0],
        [2.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.1, 0.0],
    ])
    s = io.summarize(Trace(cols, data), events=[], window=1.0)
    a = s.agents[0]
    assert a.terminal_error == 4.0
    assert a.rms_error == pytest.approx(np.sqrt(12.5))
    assert a.fde_violations == 1
    assert s.lines()[0] == "no detection"


def test_event_rows_round_trip(tmp_path):
    events = [Event(0.1, 1, "detected", p=2), Event(0.2, 1, "fie_excluded", s=2, p=1),
              Event(0.2, 1, "isolated", s=1)]
    path = tmp_path / "e.csv"
    io.write_events(events, path)
    assert io.read_events(path) == events
