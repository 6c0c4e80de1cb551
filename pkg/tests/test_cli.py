import json

import jsonschema
import pytest

from limitops.cli import CONFIG_SCHEMA, TASK_SCHEMAS, main


Z1 = {"kind": "lattice", "dim": 1}
Z2 = {"kind": "lattice", "dim": 2}

PERIODIC_OP = {
    "kind": "sum",
    "terms": [
        {"kind": "laplacian"},
        {"kind": "multiplication",
         "field": {"type": "periodic", "values": [0.3, -0.4], "period": [2]}},
    ],
}

RANDOM_OP = {
    "kind": "sum",
    "terms": [
        {"kind": "laplacian"},
        {"kind": "multiplication", "field": {"type": "seededRandom"}},
    ],
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def payload_without_timings(text):
    data = json.loads(text)
    assert "timings" in data
    del data["timings"]
    return json.dumps(data, sort_keys=True)


# -- schema -------------------------------------------------------------------


def test_print_schema_is_valid_jsonschema(capsys):
    code, out, _ = run(["--print-schema"], capsys)
    assert code == 0
    blob = json.loads(out)
    assert blob["schemaVersion"] == "1"
    jsonschema.Draft202012Validator.check_schema(blob["config"])
    for name, sch in blob["tasks"].items():
        jsonschema.Draft202012Validator.check_schema(sch)
    assert set(blob["tasks"]) == set(TASK_SCHEMAS)


def test_subcommand_print_schema(capsys):
    code, out, _ = run(["geometry", "--print-schema"], capsys)
    assert code == 0
    assert json.loads(out)["config"] == CONFIG_SCHEMA


def test_no_task_is_an_error(capsys):
    code, _, err = run([], capsys)
    assert code == 1
    assert "task" in err


def test_missing_config_is_an_error(capsys):
    code, _, err = run(["geometry"], capsys)
    assert code == 1
    assert "--config" in err


def test_unknown_top_level_key_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z1, "bogus": 1})
    code, _, err = run(["geometry", "--config", cfg], capsys)
    assert code == 1
    assert "config rejected" in err


def test_bad_task_parameter_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z1, "task": {"rMax": 0}})
    code, _, err = run(["geometry", "--config", cfg], capsys)
    assert code == 1
    assert "config rejected" in err
    assert "rMax" in err


def test_unreadable_config_is_an_error(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    code, _, err = run(["geometry", "--config", str(bad)], capsys)
    assert code == 1
    assert "error" in err


def test_operator_required_for_operator_tasks(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z1, "sequences": [{"v": [1]}]})
    code, _, err = run(["limits", "--config", cfg], capsys)
    assert code == 1
    assert "operator" in err


# -- payloads ----------------------------------------------------------------


def test_geometry_payload(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z2, "task": {"rMax": 4}})
    code, out, _ = run(["geometry", "--config", cfg], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["schemaVersion"] == "1"
    assert data["task"] == "geometry"
    assert data["result"]["profile"] == [[r, (2 * r + 1) ** 2] for r in range(1, 5)]
    assert data["resolved"]["seed"] == 0
    assert data["timings"]["totalSeconds"] >= 0


def test_geometry_csv(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z1, "task": {"rMax": 3}})
    code, out, _ = run(["geometry", "--config", cfg, "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "r,count"
    assert lines[1:] == ["1,3", "2,5", "3,7"]


def test_covering_payload(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z2, "task": {"scopeRadius": 10, "r": 2}})
    code, out, _ = run(["covering", "--config", cfg], capsys)
    assert code == 0
    rep = json.loads(out)["result"]["report"]
    assert rep["ok"]
    assert rep["diam_ok"] and rep["neighbor_ok"]


def test_partition_payload(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z1, "task": {"variation": 0.5,
                                                     "scopeRadius": 40}})
    code, out, _ = run(["partition", "--config", cfg], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["pitch"] == 9
    assert res["support_diam"] == 16
    assert res["variation"] == 0.5


def test_limits_success_and_divergence_exit_codes(tmp_path, capsys):
    ok = write_cfg(tmp_path, {
        "space": Z1, "operator": PERIODIC_OP,
        "sequences": [{"v": [2], "label": "even"}],
    }, "ok.json")
    code, out, _ = run(["limits", "--config", ok], capsys)
    assert code == 0
    entry = json.loads(out)["result"]["limits"][0]
    assert entry["status"] == "limit"
    assert entry["exact"]

    bad = write_cfg(tmp_path, {
        "space": Z1, "operator": RANDOM_OP,
        "sequences": [{"v": [1]}],
        "task": {"budget": 256, "radii": [3, 6]},
    }, "bad.json")
    code2, out2, _ = run(["limits", "--config", bad], capsys)
    assert code2 == 2
    assert json.loads(out2)["result"]["limits"][0]["status"] == "divergent"


def test_fredholm_cli_end_to_end(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "space": Z1,
        "operator": {"kind": "shift", "v": [1]},
        "projection": {"predicate": {"type": "halfspace", "normal": [1],
                                     "threshold": 0}},
        "sequences": [{"v": [1], "label": "right"}, {"v": [-1], "label": "left"}],
        "task": {"schedule": [25, 50]},
    })
    code, out, _ = run(["fredholm", "--config", cfg], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["verdict"] == "Fredholm-consistent"


def test_compactness_csv(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "space": Z1,
        "operator": {"kind": "multiplication",
                     "field": {"type": "table",
                               "entries": [{"point": [0], "value": 2.0}]}},
        "sequences": [{"v": [1], "label": "right"}],
    })
    code, out, _ = run(["compactness", "--config", cfg, "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "sequence,maxLimitNorm,verdict"
    assert lines[1] == "right,0.0,compact-consistent"


def test_out_writes_file(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"space": Z1, "task": {"rMax": 2}})
    dest = tmp_path / "report.json"
    code, out, _ = run(["geometry", "--config", cfg, "--out", str(dest)], capsys)
    assert code == 0
    assert out == ""
    assert json.loads(dest.read_text())["task"] == "geometry"


# -- seeds and determinism ------------------------------------------------------


def test_seed_fills_unseeded_random_fields(tmp_path, capsys):
    cfg = {
        "space": Z1, "operator": RANDOM_OP,
        "sequences": [{"v": [1]}],
        "task": {"budget": 256, "radii": [3, 6]},
    }
    implicit = write_cfg(tmp_path, cfg, "implicit.json")
    explicit_cfg = json.loads(json.dumps(cfg))
    explicit_cfg["operator"]["terms"][1]["field"]["seed"] = 9
    explicit = write_cfg(tmp_path, explicit_cfg, "explicit.json")

    _, out_a, _ = run(["limits", "--config", implicit, "--seed", "9"], capsys)
    _, out_b, _ = run(["limits", "--config", explicit, "--seed", "9"], capsys)
    assert payload_without_timings(out_a) == payload_without_timings(out_b)
    assert json.loads(out_a)["resolved"]["config"]["operator"]["terms"][1][
        "field"]["seed"] == 9

    _, out_c, _ = run(["limits", "--config", implicit, "--seed", "10"], capsys)
    assert payload_without_timings(out_a) != payload_without_timings(out_c)


SPECTRUM_CFG = {
    "space": Z1,
    "operator": PERIODIC_OP,
    "sequences": [{"v": [2], "label": "even"}],
    "task": {
        "method": "nuGrid", "windowRadius": 50, "pitch": 0.1,
        "zBox": [-3.0, 3.0, -1.0, 1.0], "tau": 0.1,
    },
}


def test_repeated_runs_byte_identical(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SPECTRUM_CFG)
    _, a, _ = run(["essential-spectrum", "--config", cfg, "--seed", "3"], capsys)
    _, b, _ = run(["essential-spectrum", "--config", cfg, "--seed", "3"], capsys)
    assert payload_without_timings(a) == payload_without_timings(b)


def test_thread_count_does_not_change_bytes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SPECTRUM_CFG)
    _, a, _ = run(["essential-spectrum", "--config", cfg, "--threads", "1"], capsys)
    _, b, _ = run(["essential-spectrum", "--config", cfg, "--threads", "8"], capsys)
    assert payload_without_timings(a) == payload_without_timings(b)
    cloud = json.loads(a)["result"]["unionCloud"]
    assert len(cloud) > 0
