import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epsbmc.cli import main
from epsbmc.config import ConfigError, expand_sweep, load_config, parse_config, read_toml
from epsbmc.agent import DecayingRate
from epsbmc.output import read_curve_csv, read_records_csv, render_plot, write_csv
from epsbmc.policy import Constant
from epsbmc.runner import AggregateCurve, MetricsRecord, aggregate, run_experiment

DATA = Path(__file__).parent / "data"
CONFIGS = Path(__file__).parents[1] / "src" / "epsbmc" / "configs"
SVG = "{http://www.w3.org/2000/svg}"

TINY = {
    "name": "tiny",
    "episodes": 3,
    "runs": 2,
    "env": {"kind": "gridworld"},
    "strategy": {"kind": "constant", "c": 0.05},
}


def tiny(**overrides):
    data = {k: dict(v) if isinstance(v, dict) else v for k, v in TINY.items()}
    for path, value in overrides.items():
        table = data
        *parents, leaf = path.split(".")
        for key in parents:
            table = table.setdefault(key, {})
        if value is None:
            table.pop(leaf, None)
        else:
            table[leaf] = value
    return data


def rec(run, episode, metric, eps=0.5):
    return MetricsRecord(run, episode, -1.0, 10, metric, eps)


# -- config -------------------------------------------------------------------


def test_defaults_follow_domain():
    cfg = parse_config(tiny())
    assert cfg.agent.gamma == 0.99
    assert cfg.agent.learning_rate(0) == 0.7
    assert cfg.test_protocol == "single_episode"
    assert cfg.strategy == Constant(0.05)
    sc = parse_config(tiny(**{"env.kind": "supplychain", "strategy.kind": "bmc", "strategy.c": None}))
    assert sc.test_protocol == "averaged" and sc.test_trials == 10
    assert sc.strategy.alpha0 == 1000.0 and sc.strategy.beta0 == pytest.approx(1000.01)


def test_cartpole_rate_defaults_are_complete():
    cfg = parse_config(tiny(**{"env.kind": "cartpole"}))
    assert cfg.agent.learning_rate == DecayingRate(0.5, 0.99, 0.01)
    assert cfg.agent.gamma == 0.95 and cfg.test_protocol == "averaged"


@pytest.mark.parametrize(
    "override,field",
    [
        ({"episodes": 0}, "episodes"),
        ({"runs": "many"}, "runs"),
        ({"env.kind": "maze"}, "env.kind"),
        ({"env.gridworld.subgoals": [[9, 9]]}, "env.gridworld"),
        ({"env.cartpole.force": 3.0}, "env.cartpole.force"),
        ({"agent.gamma": 1.5}, "agent"),
        ({"agent.bootstrap": "td_lambda"}, "agent.bootstrap"),
        ({"strategy.c": 2.0}, "strategy.c"),
        ({"strategy.rho": 0.9}, "strategy.rho"),
        ({"colour": "blue"}, "colour"),
        ({"test.trials": 0}, "test.trials"),
        ({"early_stop.consecutive_perfect": -1}, "early_stop.consecutive_perfect"),
    ],
)
def test_errors_name_the_field(override, field):
    with pytest.raises(ConfigError) as info:
        parse_config(tiny(**override))
    assert info.value.path == field
    assert field in str(info.value)


def test_missing_required_field():
    data = tiny(episodes=None)
    with pytest.raises(ConfigError, match="episodes"):
        parse_config(data)


def test_nested_and_dotted_keys_agree():
    a = parse_config({**TINY, "agent": {"learning_rate": {"start": 0.5, "decay": 0.9, "floor": 0.1}}})
    b = parse_config({**TINY, "agent.learning_rate.start": 0.5, "agent.learning_rate.decay": 0.9,
                      "agent.learning_rate.floor": 0.1})
    assert a == b


@pytest.mark.parametrize("path", sorted(CONFIGS.rglob("*.toml")), ids=lambda p: p.relative_to(CONFIGS).as_posix())
def test_shipped_configs_parse(path):
    data = read_toml(path)
    points = expand_sweep(data)
    expected = math.prod(len(v) for v in _leaves(data.get("sweep", {})))
    assert len(points) == expected
    expected_runs = 100 if path.parent.name == "full" else 20
    assert all(cfg.runs == expected_runs for _, cfg in points)


def _leaves(table):
    for value in table.values():
        if isinstance(value, dict):
            yield from _leaves(value)
        else:
            yield value


def test_sweep_cardinality_is_cartesian():
    data = tiny(**{"strategy.kind": "geometric", "strategy.rho": 0.9, "strategy.c": None})
    data["sweep"] = {"strategy": {"rho": [0.85, 0.9, 0.95]}, "agent.gamma": [0.9, 0.99]}
    points = expand_sweep(data)
    assert len(points) == 6
    assert [p for p, _ in points][0] == {"strategy.rho": 0.85, "agent.gamma": 0.9}
    assert {(c.strategy.rho, c.agent.gamma) for _, c in points} == {
        (r, g) for r in (0.85, 0.9, 0.95) for g in (0.9, 0.99)
    }


def test_empty_sweep_list_rejected():
    data = tiny()
    data["sweep"] = {"strategy.c": []}
    with pytest.raises(ConfigError, match="sweep.strategy.c"):
        expand_sweep(data)


def test_malformed_toml(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("episodes = = 3\n")
    with pytest.raises(ConfigError):
        load_config(bad)


# -- runner -------------------------------------------------------------------


def test_one_episode_one_record_per_run():
    records = run_experiment(parse_config(tiny(episodes=1)))
    assert [(r.run, r.episode) for r in records] == [(0, 0), (1, 0)]
    for r in records:
        assert all(math.isfinite(v) for v in (r.train_return, r.test_metric, r.epsilon))


def test_bmc_epsilon_column_non_increasing():
    cfg = parse_config(tiny(episodes=30, runs=3, **{"strategy.kind": "bmc", "strategy.c": None}))
    records = run_experiment(cfg)
    for run in range(3):
        eps = [r.epsilon for r in records if r.run == run]
        assert all(b <= a + 1e-12 for a, b in zip(eps, eps[1:]))


def test_parallelism_does_not_change_records():
    cfg = parse_config(tiny(episodes=5, runs=4))
    assert run_experiment(cfg, 1) == run_experiment(cfg, 8)


def test_runs_depend_on_seed():
    a = run_experiment(parse_config(tiny(episodes=5, base_seed=1, **{"strategy.c": 0.5})))
    b = run_experiment(parse_config(tiny(episodes=5, base_seed=2, **{"strategy.c": 0.5})))
    assert a != b


def test_run_r_only_depends_on_base_seed_plus_r():
    shifted = run_experiment(parse_config(tiny(episodes=4, runs=1, base_seed=1, **{"strategy.c": 0.5})))
    base = run_experiment(parse_config(tiny(episodes=4, runs=2, base_seed=0, **{"strategy.c": 0.5})))
    assert [r.__dict__ | {"run": 1} for r in shifted] == [r.__dict__ for r in base if r.run == 1]


def test_early_stop_truncates_runs():
    cfg = parse_config(tiny(episodes=300, runs=2, **{
        "strategy.kind": "bmc", "strategy.c": None, "early_stop.consecutive_perfect": 4
    }))
    records = run_experiment(cfg)
    for run in range(2):
        mine = [r for r in records if r.run == run]
        assert len(mine) < 300
        assert [r.test_metric for r in mine[-4:]] == [20.0] * 4


def test_invalid_parallelism():
    with pytest.raises(ValueError):
        run_experiment(parse_config(tiny()), 0)


# -- aggregation --------------------------------------------------------------


def test_aggregate_two_runs():
    curve = aggregate([rec(0, 0, 10.0), rec(1, 0, 20.0)])
    assert curve.mean == (15.0,)
    assert curve.stderr[0] == pytest.approx(5.0, rel=1e-15)
    assert curve.n == (2,)


def test_aggregate_single_run():
    curve = aggregate([rec(0, 0, 3.0), rec(0, 1, 4.0)])
    assert curve.mean == (3.0, 4.0) and curve.stderr == (0.0, 0.0)


def test_aggregate_constant_metric():
    curve = aggregate([rec(r, 0, 7.25) for r in range(6)])
    assert curve.stderr == (0.0,)


def test_aggregate_carries_forward():
    curve = aggregate([rec(0, 0, 30.0), rec(0, 1, 20.0), rec(0, 2, 20.0), rec(1, 0, 10.0)])
    assert curve.mean == (20.0, 15.0, 15.0)
    assert curve.n == (2, 2, 2)


def test_aggregate_empty():
    assert len(aggregate([])) == 0


def _two_pass(values):
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var) / math.sqrt(n)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_aggregate_matches_two_pass(runs, episodes, seed):
    rng = np.random.default_rng(seed)
    values = rng.normal(0, 50, size=(runs, episodes))
    records = [rec(r, e, float(values[r, e])) for r in range(runs) for e in range(episodes)]
    curve = aggregate(records)
    for e in range(episodes):
        mean, se = _two_pass(list(values[:, e]))
        scale = max(1.0, float(np.abs(values[:, e]).max()))
        assert abs(curve.mean[e] - mean) <= 1e-12 * scale
        assert abs(curve.stderr[e] - se) <= 1e-12 * scale


# -- CSV ----------------------------------------------------------------------

GOLDEN = [
    MetricsRecord(0, 0, -4.3, 41, 200.0, 1 / 2.01),
    MetricsRecord(0, 1, -2.1000000000000005, 21, 20.0, 0.1),
    MetricsRecord(1, 0, -20.0, 200, 1e-5, 1.0),
]


def test_golden_records_file(tmp_path):
    out = tmp_path / "records.csv"
    write_csv(GOLDEN, out)
    assert out.read_bytes() == (DATA / "records_golden.csv").read_bytes()


def test_records_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    records = [
        MetricsRecord(r, e, float(rng.normal()) * 1e3, int(rng.integers(200)), float(rng.random()), float(rng.random()))
        for r in range(3) for e in range(4)
    ]
    write_csv(records, tmp_path / "r.csv")
    assert read_records_csv(tmp_path / "r.csv") == records


def test_curve_round_trip(tmp_path):
    curve = aggregate([rec(r, e, float(r * 3.1 + e / 7)) for r in range(3) for e in range(5)])
    write_csv(curve, tmp_path / "c.csv")
    assert read_curve_csv(tmp_path / "c.csv") == curve
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "episode,mean,stderr,n"


def test_empty_records_header_only(tmp_path):
    write_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "run,episode,train_return,train_steps,test_metric,epsilon\n"
    assert read_records_csv(tmp_path / "e.csv") == []


# -- SVG ----------------------------------------------------------------------


def _curve(means, ses):
    n = len(means)
    return AggregateCurve(tuple(range(n)), tuple(means), tuple(ses), (5,) * n)


def _parse(path):
    return ET.parse(path).getroot()


def _pairs(points):
    return [tuple(float(v) for v in p.split(",")) for p in points.split()]


def test_flat_curve_single_polyline(tmp_path):
    render_plot([("flat", _curve([1.0] * 10, [0.0] * 10))], tmp_path / "p.svg")
    root = _parse(tmp_path / "p.svg")
    assert len(root.findall(f".//{SVG}polyline")) == 1


def test_svg_is_deterministic(tmp_path):
    curves = {"a": _curve([1.0, 2.0, 1.5], [0.1, 0.2, 0.3]), "b <&> \"q\"": _curve([0.0, 1.0, 2.0], [0.0] * 3)}
    render_plot(curves, tmp_path / "1.svg", title="t")
    render_plot(curves, tmp_path / "2.svg", title="t")
    assert (tmp_path / "1.svg").read_bytes() == (tmp_path / "2.svg").read_bytes()
    root = _parse(tmp_path / "1.svg")
    names = [el.get("data-name") for el in root.iter(f"{SVG}polyline")]
    assert names == ["a", "b <&> \"q\""]
    legend = [el.text for el in root.iter(f"{SVG}text")]
    assert "a" in legend and "b <&> \"q\"" in legend


def test_band_vertices_are_mean_plus_minus_stderr(tmp_path):
    means = [20.0, 18.5, 21.25, 19.0]
    ses = [1.0, 0.5, 0.0, 2.25]
    render_plot([("m", _curve(means, ses))], tmp_path / "p.svg")
    root = _parse(tmp_path / "p.svg")
    band = _pairs(root.find(f".//{SVG}polygon").get("points"))
    n = len(means)
    upper, lower = band[:n], band[n:][::-1]
    for e in range(n):
        assert upper[e] == (e, means[e] + ses[e])
        assert lower[e] == (e, means[e] - ses[e])
    assert _pairs(root.find(f".//{SVG}polyline").get("points")) == [(e, m) for e, m in enumerate(means)]


def test_mismatched_lengths_rejected(tmp_path):
    with pytest.raises(ValueError):
        render_plot({"a": _curve([1.0, 2.0], [0.0, 0.0]), "b": _curve([1.0], [0.0])}, tmp_path / "p.svg")
    with pytest.raises(ValueError):
        render_plot({"a": AggregateCurve((0, 1), (1.0,), (0.0, 0.0), (1, 1))}, tmp_path / "p.svg")


# -- CLI ----------------------------------------------------------------------


def _write_config(tmp_path, text):
    path = tmp_path / "cfg.toml"
    path.write_text(text)
    return path


SMALL_RUN = """
name = "cli"
episodes = 4
runs = 2
env.kind = "gridworld"
strategy.kind = "bmc"
"""


def test_cli_run_writes_three_files(tmp_path, capsys):
    cfg = _write_config(tmp_path, SMALL_RUN)
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["curve.csv", "curve.svg", "records.csv"]
    assert len(read_records_csv(tmp_path / "out" / "records.csv")) == 8


def test_cli_seed_override(tmp_path):
    cfg = _write_config(tmp_path, SMALL_RUN + "strategy.eps_min = 0.3\n")
    main(["run", str(cfg), "--out", str(tmp_path / "a"), "--seed", "5"])
    main(["run", str(cfg), "--out", str(tmp_path / "b"), "--seed", "5", "--parallelism", "2"])
    main(["run", str(cfg), "--out", str(tmp_path / "c"), "--seed", "6"])
    a, b, c = ((tmp_path / d / "records.csv").read_bytes() for d in "abc")
    assert a == b != c


def test_cli_sweep_directories(tmp_path):
    text = (
        'name = "geo"\nepisodes = 2\nruns = 1\nenv.kind = "gridworld"\nstrategy.kind = "geometric"\n'
        "strategy.rho = 0.9\n[sweep]\nstrategy.rho = [0.85, 0.9, 0.95, 0.975, 0.99]\n"
    )
    cfg = _write_config(tmp_path, text)
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "out")]) == 0
    dirs = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert dirs == [f"strategy.rho={v}" for v in ("0.85", "0.9", "0.95", "0.975", "0.99")]
    for d in dirs:
        assert (tmp_path / "out" / d / "records.csv").exists()


def test_cli_malformed_config(tmp_path, capsys):
    cfg = _write_config(tmp_path, SMALL_RUN.replace("episodes = 4", "episodes = -4"))
    code = main(["run", str(cfg), "--out", str(tmp_path / "out")])
    assert code != 0
    assert "episodes" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_cli_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) != 0
    assert "nope.toml" in capsys.readouterr().err


def test_cli_bad_arguments():
    assert main(["frobnicate"]) != 0


def test_cli_oracle(tmp_path, capsys):
    assert main(["oracle", "gridworld", str(CONFIGS / "gridworld_bmc.toml")]) == 0
    assert capsys.readouterr().out.strip() == "20"
    cfg = _write_config(tmp_path, SMALL_RUN + "env.gridworld.subgoals = []\n")
    assert main(["oracle", "gridworld", str(cfg)]) == 0
    assert capsys.readouterr().out.strip() == "8"


def test_cli_oracle_rejects_other_domains(tmp_path, capsys):
    cfg = _write_config(tmp_path, SMALL_RUN.replace("gridworld", "cartpole"))
    assert main(["oracle", "gridworld", str(cfg)]) == 2
    assert "env.kind" in capsys.readouterr().err
