import csv
import json

import pytest

from formres import __version__
from formres.cli import main, run, validate_config
from formres.errors import ConfigError
from formres.geometry import SdsParams
from formres.trapping import nu_min


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def sds(task, **extra):
    return {"spacetime": {"kind": "sds", "n": 4, "mass": 1.0, "lam": 0.01}, "task": {"name": task, **extra}}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_cohomology_row(tmp_path):
    out = tmp_path / "out"
    assert run(write_config(tmp_path, sds("cohomology")), out) == 0
    rows = read_rows(out / "cohomology.csv")
    assert rows[0][0] == "space"
    assert ["K", "1", "2", "2", "2", "1"] in rows
    assert ["H", "1", "0", "2", "0", "1"] in rows


def test_trapping_summary_round_trip(tmp_path):
    out = tmp_path / "out"
    assert run(write_config(tmp_path, sds("trapping", sample_size=500)), out, seed=3) == 0
    summary = json.loads((out / "summary.json").read_text())
    res = summary["results"]
    assert summary["schema"] == "1"
    assert res["r_p"]["value"] == pytest.approx(3.0)
    assert res["nu_min"]["op"] == "trapping.nu_min"
    assert res["nu_min"]["value"] == nu_min(SdsParams.from_lambda(4, 1.0, 0.01))
    assert res["gap_condition_holds"]["value"] is True
    assert res["escape_violations"]["value"] == 0
    assert all("op" in v and "value" in v for v in res.values())
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema"] == "1"
    assert manifest["seed"] == 3
    assert manifest["library"]["version"] == __version__
    assert manifest["wall_time_s"] >= 0
    assert manifest["inputs"]["task"]["sample_size"] == 500


def test_invalid_dimension_exit_1(tmp_path, capsys):
    cfg = sds("geometry")
    cfg["spacetime"]["n"] = 3
    assert run(write_config(tmp_path, cfg), tmp_path / "out") == 1
    err = capsys.readouterr().err
    assert "spacetime.n must be an integer >= 4, got 3" in err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("mutate", [
    lambda c: c["task"].update(name="bogus"),
    lambda c: c["spacetime"].update(mass=-1.0),
    lambda c: c["spacetime"].update(cosmo=0.3),
    lambda c: c.update(extra={}),
    lambda c: c.update(numerics={"order": 3}),
    lambda c: c.update(numerics={"N": "many"}),
])
def test_config_errors(tmp_path, mutate):
    cfg = sds("geometry")
    mutate(cfg)
    assert run(write_config(tmp_path, cfg), tmp_path / "out") == 1


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(bad, tmp_path / "out") == 1
    assert run(tmp_path / "missing.json", tmp_path / "out") == 1


def test_numerical_failure_exit_2(tmp_path):
    # a truncated Frobenius series cannot meet the tail tolerance
    cfg = sds("mode-scan", re_range=[0.0, 0.1], im_range=[0.5, 0.6], step=0.05)
    cfg["numerics"] = {"frobenius_order": 4}
    assert run(write_config(tmp_path, cfg), tmp_path / "out") == 2


def test_degenerate_parameters_are_config_errors(tmp_path):
    cfg = sds("geometry")
    cfg["spacetime"]["lam"] = 0.05
    assert run(write_config(tmp_path, cfg), tmp_path / "out") == 1


def test_deterministic_outputs(tmp_path):
    cfg = write_config(tmp_path, sds("trapping", sample_size=300))
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(cfg, a, seed=7) == 0 and run(cfg, b, seed=7) == 0
    for name in ("trapping.csv",):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    sa = json.loads((a / "summary.json").read_text())
    sb = json.loads((b / "summary.json").read_text())
    assert sa == sb


def test_output_directory_precedence(tmp_path, monkeypatch):
    cfg = sds("ds-table")
    cfg["output"] = {"directory": str(tmp_path / "from_config")}
    path = write_config(tmp_path, cfg)
    monkeypatch.setenv("FORMRES_OUT", str(tmp_path / "from_env"))
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "from_env" / "ds_table.csv").exists()
    assert main(["run", str(path), "--out", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "ds_table.csv").exists()
    monkeypatch.delenv("FORMRES_OUT")
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "from_config" / "manifest.json").exists()


def test_ds_table_csv(tmp_path):
    cfg = {"spacetime": {"kind": "ds", "n": 4}, "task": {"name": "ds-table"}}
    out = tmp_path / "out"
    assert run(write_config(tmp_path, cfg), out) == 0
    rows = read_rows(out / "ds_table.csv")
    assert rows[0] == ["degree", "box_tangential", "box_normal", "d_plus_delta"]
    assert rows[1] == ["0", "0,3", "-", "0,4"]


def test_zero_modes_task(tmp_path):
    out = tmp_path / "out"
    assert run(write_config(tmp_path, sds("zero-modes")), out) == 0
    res = json.loads((out / "summary.json").read_text())["results"]
    assert res["dim_K"]["value"] == [1, 2, 2, 2, 1]
    assert res["u_plus.matching_residual"]["value"] < 1e-12


def test_kds_task(tmp_path):
    cfg = {"spacetime": {"kind": "kds", "n": 4, "mass": 1.0, "cosmo": 0.03, "spin": 0.1},
           "task": {"name": "kds-verify", "spins": [0.0, 0.1]}, "numerics": {"sizes": [32, 64]}}
    out = tmp_path / "out"
    assert run(write_config(tmp_path, cfg), out) == 0
    rows = read_rows(out / "kds_residuals.csv")
    assert len(rows) == 1 + 2 * 4 * 2


def test_kds_requires_dimension_four():
    with pytest.raises(ConfigError):
        validate_config({"spacetime": {"kind": "kds", "n": 5, "mass": 1.0, "cosmo": 0.03},
                         "task": {"name": "kds-verify"}})


def test_lam_and_cosmo_exclusive():
    cfg = sds("geometry")
    cfg["spacetime"]["cosmo"] = 0.03
    with pytest.raises(ConfigError):
        validate_config(cfg)
