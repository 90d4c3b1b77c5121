import csv
import json
import math
import os
import subprocess
import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from boundfire import cli
from boundfire.config import EXPERIMENTS, ConfigError, ExperimentConfig, parse_angle, parse_config
from boundfire.experiments import snapshot_run
from boundfire.render import BLUE, GRAY, GREEN, RED, WHITE, burnt_components, render_svg, site_colors
from boundfire.forestfire import NO_RECOVERY, T_C, ProcessSpec, simulate
from boundfire.lattice import Hexagon, build_domain

GOLDEN = Path(__file__).parent / "golden" / "csv_headers.txt"

TINY = {
    "perc-event": {"event": "hcross", "n_grid": [2, 4], "replicas": 500},
    "char-length": {"p_grid": [0.7, 0.8], "cap": 64, "max_replicas": 4000, "block": 1000},
    "arm-exponent": {"n_grid": [4, 8, 16], "replicas": 500},
    "cone-arm-exponent": {"alpha": "pi/2", "n_grid": [4, 8, 16], "replicas": 500},
    "origin-burn": {"N_grid": [2, 4, 8], "replicas": 200},
    "long-path": {"n_grid": [2, 4, 8], "replicas": 2000},
    "fire-depth": {"N_grid": [8, 16], "replicas": 50},
    "cone-count": {"n_grid": [16, 32], "replicas": 5, "arm_replicas": 2000, "zeta": 0.1},
    "bounded-cluster": {"strips": [[21, 8]], "L_grid": [5, 50], "replicas": 20},
    "scaling-check": {
        "p_grid": [0.7, 0.8], "cap": 64, "max_replicas": 4000, "block": 1000,
        "arm_replicas": 500, "theta_replicas": 200,
    },
    "snapshot": {"N": 6, "zeta": 2, "t": 1.0},
}


def _write(path, experiment, params, seed=3, extra=""):
    doc = {"experiment": experiment, "seed": seed, "parameters": params}
    path.write_text(yaml.safe_dump(doc, sort_keys=False) + extra)
    return path


def _run(tmp_path, experiment, params=None, args=(), name="out"):
    cfg = _write(tmp_path / f"{name}.yaml", experiment, TINY[experiment] if params is None else params)
    out = tmp_path / name
    rc = cli.main(["run", str(cfg), "--out", str(out), *args])
    return rc, out


def _golden():
    out = {}
    for line in GOLDEN.read_text().splitlines():
        name, header = line.split(": ")
        out[name] = header.split(",")
    return out


def test_golden_covers_every_experiment():
    assert set(_golden()) == set(EXPERIMENTS)


@pytest.mark.parametrize("experiment", sorted(EXPERIMENTS))
def test_every_experiment_writes_golden_header(tmp_path, experiment):
    rc, out = _run(tmp_path, experiment)
    assert rc == 0
    raw = Path(str(out) + ".csv").read_bytes()
    assert raw.endswith(b"\r\n")
    rows = list(csv.reader(raw.decode("utf-8").splitlines()))
    assert rows[0] == _golden()[experiment]
    assert all(len(r) == len(rows[0]) for r in rows)
    summary = json.loads(Path(str(out) + ".json").read_text())
    assert summary["experiment"] == experiment
    assert summary["config"]["parameters"] == parse_config(Path(str(out) + ".config.yaml").read_text()).parameters
    assert isinstance(summary["pass"], bool)


def test_origin_burn_end_to_end(tmp_path):
    params = {"N_grid": [4, 8, 16], "replicas": 2000}
    rc, out = _run(tmp_path, "origin-burn", params)
    assert rc == 0
    rows = list(csv.DictReader(open(str(out) + ".csv", newline="")))
    assert [int(r["n"]) for r in rows] == [4, 8, 16]
    assert {r["zeta"] for r in rows} == {"1.0"} and {r["variant"] for r in rows} == {"NoRecovery"}
    summary = json.loads(Path(str(out) + ".json").read_text())
    names = [c.get("name") for c in summary["checks"]]
    assert "monotone-trend" in names


def test_rerun_is_byte_identical(tmp_path):
    for exp in ("origin-burn", "perc-event", "cone-count"):
        _, a = _run(tmp_path, exp, name="a")
        _, b = _run(tmp_path, exp, name="b")
        assert Path(str(a) + ".csv").read_bytes() == Path(str(b) + ".csv").read_bytes()


def test_thread_count_does_not_change_output(tmp_path):
    params = {"N_grid": [4, 8], "replicas": 9000}
    _, a = _run(tmp_path, "origin-burn", params, ("--threads", "1"), name="t1")
    _, b = _run(tmp_path, "origin-burn", params, ("--threads", "3"), name="t3")
    assert Path(str(a) + ".csv").read_bytes() == Path(str(b) + ".csv").read_bytes()


def test_seed_override_changes_results_and_hash(tmp_path):
    _, a = _run(tmp_path, "perc-event", name="s1")
    _, b = _run(tmp_path, "perc-event", args=("--seed", "99"), name="s2")
    ra = list(csv.DictReader(open(str(a) + ".csv", newline="")))
    rb = list(csv.DictReader(open(str(b) + ".csv", newline="")))
    assert ra[0]["spec_hash"] != rb[0]["spec_hash"]
    assert rb[0]["seed"] == "99"


def test_unknown_key_exits_one_with_line(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("experiment: origin-burn\nseed: 1\nparameters:\n  N_grid: [4]\n  zetta: 1\n")
    assert cli.main(["run", str(cfg)]) == 1
    assert f"{cfg}:5: unknown parameter 'zetta'" in capsys.readouterr().err
    cfg.write_text("experiment: origin-burn\ncolour: red\n")
    assert cli.main(["run", str(cfg)]) == 1
    assert ":2: unknown key 'colour'" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text,line",
    [
        ("experiment: nope\n", 1),
        ("experiment: origin-burn\nseed: -1\n", 2),
        ("experiment: origin-burn\nthreads: 0\n", 2),
        ("experiment: origin-burn\nparameters:\n  zeta: 0\n", 3),
        ("experiment: origin-burn\nparameters:\n  replicas: 1.5\n", 3),
        ("experiment: cone-count\nparameters:\n  alpha: pi\n", 3),
        ("experiment: origin-burn\nparameters:\n  variant: Maybe\n", 3),
        ("experiment: [a\n", 2),  # reported where the parser gives up
    ],
)
def test_invalid_values_report_lines(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "c.yaml")
    assert err.value.line == line
    assert str(err.value).startswith(f"c.yaml:{line}:")


def test_missing_file_and_bad_overrides(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 1
    cfg = _write(tmp_path / "c.yaml", "origin-burn", TINY["origin-burn"])
    assert cli.main(["run", str(cfg), "--threads", "0"]) == 1
    assert cli.main(["run", str(cfg), "--seed", str(2**64)]) == 1


def test_assert_flag_sets_exit_code(tmp_path, capsys):
    # far from criticality the one-arm slope misses the critical target
    params = {"n_grid": [4, 8, 16], "replicas": 2000, "p": 0.3}
    assert _run(tmp_path, "arm-exponent", params, name="x")[0] == 0
    assert _run(tmp_path, "arm-exponent", params, ("--assert",), name="y")[0] == 2
    assert "FAIL arm-exponent one-arm" in capsys.readouterr().out
    ok = {"N_grid": [16, 64], "replicas": 400}
    assert _run(tmp_path, "origin-burn", ok, ("--assert",), name="z")[0] == 0


def test_parse_angle():
    assert parse_angle("pi/3") == pytest.approx(math.pi / 3)
    assert parse_angle("2*pi/5") == pytest.approx(2 * math.pi / 5)
    assert parse_angle("pi") == pytest.approx(math.pi)
    assert parse_angle(0.5) == 0.5
    assert parse_angle("0.25") == 0.25


_scalars = st.one_of(st.integers(-10, 10**6), st.floats(-1e3, 1e3, allow_nan=False), st.sampled_from(["inf", "pi/3"]))


@given(
    st.sampled_from(sorted(EXPERIMENTS)),
    st.integers(0, 2**64 - 1),
    st.one_of(st.none(), st.integers(1, 64)),
    st.data(),
)
def test_config_echo_round_trip(experiment, seed, threads, data):
    params = dict(EXPERIMENTS[experiment])
    # overwrite a few free-form parameters with arbitrary values
    free = [k for k in params if k in ("sigma", "target", "tolerance", "bound_delta", "max_slope", "horizon", "t", "ratio_factor")]
    for k in free:
        if data.draw(st.booleans()):
            params[k] = data.draw(st.floats(-1e3, 1e3, allow_nan=False))
    cfg = ExperimentConfig(experiment, params, seed, threads, data.draw(st.sampled_from(["out", "a/b c", "r/ü"])))
    text = cfg.dump()
    again = parse_config(text)
    assert again == parse_config(again.dump())
    assert again.to_dict() == parse_config(yaml.safe_dump(cfg.to_dict())).to_dict()
    assert again.seed == seed and again.threads == threads and again.parameters == params


def test_defaults_are_filled_and_echoed(tmp_path):
    cfg = parse_config("experiment: long-path\nparameters:\n  n_grid: [2, 3, 4]\n")
    assert cfg.parameters["replicas"] == EXPERIMENTS["long-path"]["replicas"]
    assert parse_config(cfg.dump()) == cfg


def test_spec_hash_depends_on_content_only():
    a = parse_config("experiment: long-path\nseed: 4\noutput: x\n")
    b = parse_config("experiment: long-path\nseed: 4\noutput: y\nthreads: 3\n")
    c = parse_config("experiment: long-path\nseed: 5\n")
    assert cli.spec_hash(a) == cli.spec_hash(b) != cli.spec_hash(c)


# --------------------------------------------------------------------------
# snapshots


def _fills(svg):
    return [part.split('"')[0] for part in svg.split('fill="')[1:]]


def test_snapshot_at_time_zero_is_white():
    spec = ProcessSpec(build_domain(Hexagon(5)), NO_RECOVERY, 1.0, 1.0)
    run = simulate(spec, 0, observers=(0.0,))
    fills = _fills(render_svg(run, 0.0))
    assert len(fills) == run.domain.size
    assert set(fills) == {WHITE}


def test_no_fires_means_no_burnt_colours():
    spec = ProcessSpec(build_domain(Hexagon(5)), NO_RECOVERY, 1.0, 2.0, ignition_boundary=())
    run = simulate(spec, 0, observers=(2.0,))
    fills = _fills(render_svg(run, 2.0))
    assert set(fills) <= {WHITE, GRAY}
    assert GRAY in fills


def test_snapshot_colours_follow_states():
    spec = ProcessSpec(build_domain(Hexagon(10)), NO_RECOVERY, 0.5, 2 * T_C)
    run = simulate(spec, 4, observers=(2 * T_C,))
    colors, triggered = site_colors(run, 2 * T_C)
    st_ = run.snapshots[2 * T_C]
    labels, sizes = burnt_components(run.domain, st_)
    largest = int(np.argmax(sizes))
    for i, c in enumerate(colors):
        expect = {0: WHITE, 1: GRAY}.get(int(st_[i])) or (RED if labels[i] == largest else BLUE)
        assert c == expect
    assert RED in colors
    svg = render_svg(run, 2 * T_C)
    assert _fills(svg).count(GREEN) == len(triggered) == len(set(run.ignition_vertex.tolist()))
    assert svg.startswith("<?xml") and svg.count("<polygon") == run.domain.size + len(triggered)
    with pytest.raises(KeyError):
        run.snapshot(1.0)


def test_figure_style_snapshot_statistics():
    params = {"N": 50, "zeta": 0.5, "variant": "NoRecovery", "t": 2 * T_C}
    wins = 0
    for seed in range(5):
        run = snapshot_run(params, seed)
        _, sizes = burnt_components(run.domain, run.snapshots[2 * T_C])
        top = np.sort(sizes)[::-1]
        second = top[1] if top.size > 1 else 0
        wins += top.size > 0 and top[0] >= 10 * max(second, 1)
    assert wins >= 3


def test_snapshot_command(tmp_path):
    cfg = _write(tmp_path / "snap.yaml", "snapshot", TINY["snapshot"])
    out = tmp_path / "snap"
    assert cli.main(["snapshot", str(cfg), "--out", str(out)]) == 0
    svg = Path(str(out) + ".svg").read_text()
    assert svg.count("<polygon") >= build_domain(Hexagon(6)).size
    again = tmp_path / "again"
    cli.main(["snapshot", str(cfg), "--out", str(again)])
    assert Path(str(again) + ".svg").read_text() == svg
    other = _write(tmp_path / "o.yaml", "origin-burn", TINY["origin-burn"])
    assert cli.main(["snapshot", str(other)]) == 1


# --------------------------------------------------------------------------
# the two kernel backends


def test_pure_numpy_backend_matches(tmp_path):
    script = textwrap.dedent(
        """
        import json, math
        from boundfire import BACKEND
        from boundfire.forestfire import origin_burn_experiment, long_path_experiment, fire_depth_experiment
        from boundfire.percolation import one_arm_curve, estimate_event
        from boundfire.lattice import Rhombus, build_domain
        from boundfire import percolation as perc
        dom = build_domain(Rhombus(6))
        out = {
            "backend": BACKEND,
            "origin": origin_burn_experiment(4, 1.0, replicas=40, seed=2).successes,
            "long": long_path_experiment(4, 1.0, 300, seed=2).successes,
            "depth": fire_depth_experiment(8, 0.5, 1 / 14, 0.7, 20, seed=2).successes,
            "arm": [e.successes for e in one_arm_curve([4, 8], 200, 2, 0.5, math.pi / 3)],
            "cross": estimate_event(perc.HCross(), dom, 0.5, 300, 2).successes,
        }
        print(json.dumps(out))
        """
    )
    results = {}
    for flag in ("0", "1"):
        env = dict(os.environ, BOUNDFIRE_PURE_NUMPY=flag)
        proc = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True, text=True, timeout=900)
        assert proc.returncode == 0, proc.stderr
        results[flag] = json.loads(proc.stdout.strip().splitlines()[-1])
    assert results["0"].pop("backend") == "numba"
    assert results["1"].pop("backend") == "numpy"
    assert results["0"] == results["1"]


def test_shipped_configs_are_valid():
    shipped = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))
    assert {p.stem for p in shipped} == set(EXPERIMENTS)
    for path in shipped:
        cfg = parse_config(path.read_text(), str(path))
        assert cfg.parameters == EXPERIMENTS[cfg.experiment]
