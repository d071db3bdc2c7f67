"""Batch runner: ``formres run config.json [--out DIR] [--seed N]``.

A run configuration is a JSON object with four blocks::

    {
      "spacetime": {"kind": "sds", "n": 4, "mass": 1.0, "cosmo": 0.03},
      "task": {"name": "trapping", "sample_size": 10000},
      "numerics": {"order": 2},
      "output": {"directory": "out"}
    }

``spacetime.kind`` is ``sds``, ``ds`` or ``kds``; ``sds`` accepts ``lam``
in place of ``cosmo``.  The output directory is taken from ``--out``, then
the ``FORMRES_OUT`` environment variable, then ``output.directory``.

Every run writes ``manifest.json``, ``summary.json`` and one or more CSV
tables.  Exit status is 0 on success, 1 for configuration errors and 2
for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FormresError, NumericalError

SCHEMA_VERSION = "1"
OUT_ENV = "FORMRES_OUT"
TASKS = ("geometry", "trapping", "zero-modes", "cohomology", "ds-table", "kds-verify", "evolve", "mode-scan")


# ---------------------------------------------------------------- validation

def _number(block, key, *, positive=False, default=None, name=None):
    name = name or key
    if key not in block:
        if default is not None:
            return default
        raise ConfigError(f"{name} is required")
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not np.isfinite(val):
        raise ConfigError(f"{name} must be a finite number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{name} must be positive, got {val!r}")
    return float(val)


def _integer(block, key, *, minimum=None, default=None, name=None):
    name = name or key
    if key not in block:
        if default is not None:
            return default
        raise ConfigError(f"{name} is required")
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{name} must be an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {val}")
    return val


def validate_config(cfg) -> dict:
    """Check types and invariants of every block; returns a normalised copy."""
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(cfg) - {"spacetime", "task", "numerics", "output"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    st = cfg.get("spacetime")
    task = cfg.get("task")
    if not isinstance(st, dict):
        raise ConfigError("spacetime block is required")
    if not isinstance(task, dict) or "name" not in task:
        raise ConfigError("task block with a 'name' is required (exactly one task per run)")
    if task["name"] not in TASKS:
        raise ConfigError(f"task.name must be one of {', '.join(TASKS)}; got {task['name']!r}")
    kind = st.get("kind", "sds")
    if kind not in ("sds", "ds", "kds"):
        raise ConfigError(f"spacetime.kind must be sds, ds or kds; got {kind!r}")
    norm = {"kind": kind}
    norm["n"] = _integer(st, "n", minimum=4, default=4, name="spacetime.n")
    if kind == "sds":
        norm["mass"] = _number(st, "mass", positive=True, name="spacetime.mass")
        if "lam" in st and "cosmo" in st:
            raise ConfigError("give either spacetime.cosmo or spacetime.lam, not both")
        if "lam" in st:
            lam = _number(st, "lam", positive=True, name="spacetime.lam")
            norm["cosmo"] = lam * (norm["n"] - 2) * (norm["n"] - 1) / 2
        else:
            norm["cosmo"] = _number(st, "cosmo", positive=True, name="spacetime.cosmo")
    elif kind == "kds":
        if norm["n"] != 4:
            raise ConfigError("spacetime.n must be 4 for kind kds")
        norm["mass"] = _number(st, "mass", positive=True, name="spacetime.mass")
        norm["cosmo"] = _number(st, "cosmo", positive=True, name="spacetime.cosmo")
        norm["spin"] = _number(st, "spin", default=0.0, name="spacetime.spin")
        if norm["spin"] < 0:
            raise ConfigError("spacetime.spin must be nonnegative")
    numerics = cfg.get("numerics", {})
    output = cfg.get("output", {})
    if not isinstance(numerics, dict) or not isinstance(output, dict):
        raise ConfigError("numerics and output blocks must be objects")
    if "order" in numerics and numerics["order"] not in (2, 4):
        raise ConfigError("numerics.order must be 2 or 4")
    for key, val in numerics.items():
        if key != "order" and (isinstance(val, bool) or not isinstance(val, (int, float, list))):
            raise ConfigError(f"numerics.{key} must be numeric")
    return {"spacetime": norm, "task": dict(task), "numerics": dict(numerics), "output": dict(output)}


# ---------------------------------------------------------------- tasks

class Recorder:
    """Collects summary numbers tagged with the operation that produced them, and CSV tables."""

    def __init__(self):
        self.summary: dict = {}
        self.tables: dict = {}

    def put(self, key, value, op):
        self.summary[key] = {"value": _jsonable(value), "op": op}

    def table(self, name, header, rows):
        self.tables[name] = (list(header), [list(r) for r in rows])


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


def _sds(st):
    from .geometry import SdsParams

    if st["kind"] != "sds":
        raise ConfigError(f"this task needs spacetime.kind sds, got {st['kind']}")
    return SdsParams(st["n"], st["mass"], st["cosmo"])


def task_geometry(cfg, rec, seed):
    from .geometry import lambda_small, nondegeneracy_margin

    p = _sds(cfg["spacetime"])
    h = p.horizons
    vals = {"lam": lambda_small(p), "r_minus": h.r_minus, "r_plus": h.r_plus, "r_p": h.r_p,
            "beta_minus": h.beta_minus, "beta_plus": h.beta_plus, "nondegeneracy_margin": nondegeneracy_margin(p)}
    for k, v in vals.items():
        rec.put(k, v, f"geometry.{'horizons' if k not in ('lam', 'nondegeneracy_margin') else k}")
    rec.table("geometry", ["quantity", "value"], [(k, repr(float(v))) for k, v in vals.items()])


def task_trapping(cfg, rec, seed):
    from .trapping import trapping_report

    p = _sds(cfg["spacetime"])
    size = _integer(cfg["task"], "sample_size", minimum=1, default=10_000, name="task.sample_size")
    rep = trapping_report(p, size, seed)
    rec.put("r_p", rep.r_p, "trapping.photon_sphere_radius")
    rec.put("nu_min", rep.nu_min, "trapping.nu_min")
    rec.put("subprincipal_eigs", list(rep.subprincipal_eigs), "trapping.gap_condition")
    rec.put("gap_condition_holds", rep.gap_condition_holds, "trapping.gap_condition")
    rec.put("gap_margin", rep.gap_margin, "trapping.gap_condition")
    rec.put("lyapunov_fit", rep.fitted_lyapunov, "trapping.lyapunov_fit")
    rec.put("escape_violations", rep.escape.violations, "trapping.escape_function_check")
    rec.put("escape_samples", rep.escape.samples, "trapping.escape_function_check")
    rec.table("trapping", ["quantity", "value"], [
        ("r_p", repr(rep.r_p)), ("nu_min", repr(rep.nu_min)), ("lyapunov_fit", repr(rep.fitted_lyapunov)),
        ("gap_condition_holds", int(rep.gap_condition_holds)), ("escape_violations", rep.escape.violations)])


def task_zero_modes(cfg, rec, seed):
    from .zero_modes import basis_u_pm, dims_H, dims_K, h1_triviality_certificate

    p = _sds(cfg["spacetime"])
    basis = basis_u_pm(p)
    rows = []
    for label, c in basis.coefficients.items():
        rec.put(f"{label}.coefficients", list(c), "zero_modes.basis_u_pm")
        rec.put(f"{label}.matching_residual", basis.matching_residual(label), "zero_modes.basis_u_pm")
        rows.append([label, *(repr(float(x)) for x in c), repr(float(basis.matching_residual(label)))])
    cert = h1_triviality_certificate(p)
    rec.put("h1_determinant", cert.determinant, "zero_modes.h1_triviality_certificate")
    rec.put("h1_normalized_determinant", cert.normalized_determinant, "zero_modes.h1_triviality_certificate")
    rec.put("dim_K", dims_K(p), "zero_modes.dims_K")
    rec.put("dim_H", dims_H(p), "zero_modes.dims_H")
    rec.table("zero_modes", ["label", "f11", "f12", "f21", "f22", "matching_residual"], rows)


def task_cohomology(cfg, rec, seed):
    from .cohomology import betti_ds, betti_sds, table

    st = cfg["spacetime"]
    if st["kind"] == "kds":
        raise ConfigError("cohomology task supports spacetime.kind sds or ds")
    betti = betti_sds(st["n"]) if st["kind"] == "sds" else betti_ds(st["n"])
    tab = table(betti)
    for k in ("K", "H_exact", "H_lower", "H_upper"):
        rec.put(f"dim_{k}", tab[k], "cohomology.table")
    rows = [["K", *tab["K"]], ["H", *tab["H_exact"]], ["H_lower", *tab["H_lower"]], ["H_upper", *tab["H_upper"]]]
    rec.table("cohomology", ["space", *(f"degree_{k}" for k in range(st["n"] + 1))], rows)


def task_ds_table(cfg, rec, seed):
    from .desitter import indicial_table, zero_is_simple

    n = cfg["spacetime"]["n"]
    tab = indicial_table(n)
    rec.put("zero_is_simple", zero_is_simple(tab), "desitter.zero_is_simple")
    rows = tab.rows()
    rec.put("rows", [list(r) for r in rows], "desitter.indicial_table")
    rec.table("ds_table", ["degree", "box_tangential", "box_normal", "d_plus_delta"], rows)


def task_kds_verify(cfg, rec, seed):
    from .kds_maxwell import KdsParams, refinement_study

    st = cfg["spacetime"]
    if st["kind"] != "kds":
        raise ConfigError("kds-verify needs spacetime.kind kds")
    spins = cfg["task"].get("spins", [st["spin"]])
    sizes = tuple(cfg["numerics"].get("sizes", [32, 64, 128, 256]))
    order = cfg["numerics"].get("order", 4)
    perturb = _number(cfg["task"], "perturb", default=0.0, name="task.perturb")
    rows = []
    for a in spins:
        p = KdsParams(st["mass"], st["cosmo"], float(a))
        for check in ("closed", "coclosed"):
            for which in ("u1", "u2"):
                study = refinement_study(p, check, which, sizes, order, perturb)
                key = f"a={a}.{check}.{which}"
                rec.put(f"{key}.residual", study.residuals[-1], "kds_maxwell.refinement_study")
                rec.put(f"{key}.slope", study.slope if np.isfinite(study.slope) else None,
                        "kds_maxwell.refinement_study")
                for N, res in zip(study.sizes, study.residuals):
                    rows.append([repr(float(a)), check, which, N, repr(float(res))])
    rec.table("kds_residuals", ["spin", "check", "field", "size", "max_residual"], rows)


def task_evolve(cfg, rec, seed):
    from . import evolve as ev

    p = _sds(cfg["spacetime"])
    t = cfg["task"]
    num = cfg["numerics"]
    sector = t.get("sector", "scalar")
    t_max = _number(t, "t_max", positive=True, default=200.0, name="task.t_max")
    cfl = _number(num, "cfl", positive=True, default=0.5, name="numerics.cfl")
    window = tuple(t.get("fit_window", (0.4 * t_max, t_max)))
    width = _number(t, "pulse_width", positive=True, default=5.0, name="task.pulse_width")
    amp = _number(t, "velocity_amplitude", default=0.3, name="task.velocity_amplitude")
    data = (lambda x: ev.bump(x, 0.0, width), lambda x: amp * ev.bump(x, 0.4 * width, 0.8 * width))
    if sector == "scalar":
        ell = _integer(t, "ell", minimum=0, default=0, name="task.ell")
        ts = ev.evolve_scalar(p, data, ell, t_max, N=_integer(num, "N", minimum=16, default=4000), cfl=cfl)
        fits = [ev.fit_decay(ts.t, ts.values["u"][i], window) for i in range(len(ts.probe_radii))]
        rec.put("asymptotic_values", [f.asymptotic_value for f in fits], "evolve.fit_decay")
    elif sector == "twoform":
        ts = ev.evolve_twoform(p, data, data, t_max, N=_integer(num, "N", minimum=16, default=4000), cfl=cfl)
        fits = [ev.fit_decay(ts.t, ts.values["omega"][i], window) for i in range(len(ts.probe_radii))]
        r = ts.probe_radii
        fits_e = [ev.fit_decay(ts.t, ts.values["dtdr"][i] * r[i] ** (p.n - 2), window) for i in range(len(r))]
        rec.put("omega_coefficient", [f.asymptotic_value for f in fits], "evolve.fit_decay")
        rec.put("dtdr_coefficient", [f.asymptotic_value for f in fits_e], "evolve.fit_decay")
    elif sector == "oneform":
        h = p.horizons
        N = _integer(num, "N", minimum=16, default=400)
        grid = ev.PenetratingGrid.build(p, N, order=num.get("order", 4))
        prof = ev.u_pm_profiles(p, grid.r)
        cp = _number(t, "u_plus", default=0.0, name="task.u_plus")
        cm = _number(t, "u_minus", default=0.0, name="task.u_minus")
        w = h.r_plus - h.r_minus
        A0 = cp * prof["u_plus"][0] + cm * prof["u_minus"][0] + ev.bump(grid.r, h.r_minus + 0.3 * w, 0.15 * w)
        B0 = cp * prof["u_plus"][1] + cm * prof["u_minus"][1] + 0.5 * ev.bump(grid.r, h.r_minus + 0.55 * w, 0.15 * w)
        ts = ev.evolve_oneform(p, (A0, B0, 0 * A0, 0 * A0), t_max, N=N, cfl=cfl, order=num.get("order", 4))
        fits = ev.oneform_decay(p, ts, window)
        rec.put("projection", [f.projection for f in fits], "evolve.oneform_decay")
        rec.put("projection_residual", fits[0].projection_residual, "evolve.project_oneform")
    else:
        raise ConfigError("task.sector must be scalar, oneform or twoform")
    rec.put("probe_radii", list(ts.probe_radii), f"evolve.evolve_{sector}")
    rec.put("decay_rates", [f.rate for f in fits], "evolve.fit_decay")
    rec.put("oscillation", [f.omega for f in fits], "evolve.fit_decay")
    rec.put("fits_accepted", [f.accepted for f in fits], "evolve.fit_decay")
    header, rows = ts.to_rows()
    rec.table("timeseries", header, [[repr(x) for x in row] for row in rows])


def task_mode_scan(cfg, rec, seed):
    from .mode_scan import ConnectionSettings, mode_scan, sector_from_name, zero_frequency_ratio

    p = _sds(cfg["spacetime"])
    t, num = cfg["task"], cfg["numerics"]
    sector = sector_from_name(p.n, t.get("sector", "scalar_l0"))
    settings = ConnectionSettings(order=_integer(num, "frobenius_order", minimum=4, default=80),
                                  rtol=_number(num, "rtol", positive=True, default=1e-11))
    step = _number(t, "step", positive=True, default=0.02, name="task.step")
    res = mode_scan(p, sector, tuple(t.get("re_range", (-2.0, 2.0))), tuple(t.get("im_range", (0.02, 1.0))),
                    step, settings)
    rec.put("winding_number", res.winding, "mode_scan.mode_scan")
    rec.put("min_over_median", res.min_ratio, "mode_scan.mode_scan")
    rec.put("skipped", [complex(s) for s in res.skipped], "mode_scan.mode_scan")
    rec.put("zero_frequency_ratio", zero_frequency_ratio(p, sector, settings=settings),
            "mode_scan.zero_frequency_ratio")
    rec.table("mode_scan", ["re_sigma", "im_sigma", "abs_det", "arg_det"],
              [[repr(x) for x in row] for row in res.rows()])


DISPATCH = {
    "geometry": task_geometry, "trapping": task_trapping, "zero-modes": task_zero_modes,
    "cohomology": task_cohomology, "ds-table": task_ds_table, "kds-verify": task_kds_verify,
    "evolve": task_evolve, "mode-scan": task_mode_scan,
}


# ---------------------------------------------------------------- output

def _write_atomic(path: Path, write):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        write(fh)
    os.replace(tmp, path)


def _out_dir(args_out, cfg) -> Path:
    return Path(args_out or os.environ.get(OUT_ENV) or cfg["output"].get("directory") or "formres_out")


def run(config_path, out=None, seed=0) -> int:
    t0 = time.perf_counter()
    try:
        try:
            raw = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration: {exc}") from exc
        cfg = validate_config(raw)
        rec = Recorder()
        DISPATCH[cfg["task"]["name"]](cfg, rec, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FormresError as exc:  # pragma: no cover - every error is one of the two above
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = _out_dir(out, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in rec.tables.items():
        def write(fh, header=header, rows=rows):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        _write_atomic(out_dir / f"{name}.csv", write)
    summary = {"schema": SCHEMA_VERSION, "task": cfg["task"]["name"], "results": rec.summary}
    _write_atomic(out_dir / "summary.json", lambda fh: json.dump(summary, fh, indent=2, sort_keys=True))
    manifest = {
        "schema": SCHEMA_VERSION,
        "inputs": raw,
        "normalized": cfg,
        "seed": seed,
        "library": {"name": "formres", "version": __version__},
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": time.perf_counter() - t0,
        "tables": sorted(f"{k}.csv" for k in rec.tables),
    }
    _write_atomic(out_dir / "manifest.json", lambda fh: json.dump(manifest, fh, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="formres", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute one task described by a JSON configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and output.directory)")
    p_run.add_argument("--seed", type=int, default=0, help="seed for randomised sampling")
    args = parser.parse_args(argv)
    return run(args.config, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
