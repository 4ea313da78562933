"""Command-line driver: TOML experiment configs in, JSON reports out.

Subcommands::

    conflat run <config.toml> [--output PATH]
    conflat gallery list
    conflat version

Exit status: 0 when every check passes, 1 on a failed check, 2 on a config
or expression error.  Reports are deterministic for a fixed config: sampling
uses the fixed interior lattice, and the provenance block carries tolerances
and lattice parameters instead of wall-clock data.  The environment variable
``CONFLAT_OUT`` supplies a default directory for relative output paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import __version__
from .curvature import (
    ChartMetric,
    DegenerateMetricError,
    conformal_flatness_certificate,
    curvature_batch,
    pack_symmetry_residuals,
)
from .duality import NotConformallyFlatError, verify_duality
from .expr import ExprError
from .fields import lattice
from .frontal import (
    conformal_change,
    gallery,
    gallery_schema,
    gauss_equation_residual,
    gcf_from_frontal,
    pair_point_cloud,
    pair_residuals,
)
from .jets import EvalDomainError
from .surface2d import (
    HoloSeed,
    IntegrabilityError,
    RealizationDriftError,
    CauchyRiemannError,
    flat_duality_check,
    realize_in_q3,
    second_form_from_seed,
)

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "certificate": 1e-8,
    "symmetry": 1e-10,
    "bianchi": 1e-10,
    "weyl_trace": 1e-9,
    "duality": 1e-7,
    "pair": 1e-8,
    "gauss_equation": 1e-6,
    "form_relations": 1e-6,
    "surface_relation": 1e-7,
    "route_agreement": 1e-7,
    "ii_agreement": 1e-8,
    "codazzi": 1e-7,
    "integrability": 1e-6,
    "reconstruction": 1e-6,
    "drift_bound": 1e-6,
}

EXPERIMENT_KINDS = (
    "check-metric",
    "dualize",
    "frontal-check",
    "conformal-change",
    "realize2d",
    "gallery",
)


class ConfigError(ValueError):
    pass


@dataclass
class Check:
    name: str
    passed: bool
    residual: float | None
    tolerance: float | None
    worst_point: list[float] | None = None
    detail: str | None = None

    def as_json(self) -> dict:
        out = {
            "name": self.name,
            "passed": bool(self.passed),
            "residual": self.residual,
            "tolerance": self.tolerance,
        }
        if self.worst_point is not None:
            out["worst_point"] = self.worst_point
        if self.detail:
            out["detail"] = self.detail
        return out


def _tolerances(cfg: dict) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for key, val in cfg.get("tolerances", {}).items():
        if key not in tol:
            raise ConfigError(f"unknown tolerance key {key!r}")
        tol[key] = float(val)
    return tol


def _metric_from_config(cfg: dict) -> ChartMetric:
    chart = cfg.get("chart")
    if not chart:
        raise ConfigError("missing [chart] table")
    n = int(chart.get("dimension", 0))
    if n < 2:
        raise ConfigError("chart.dimension must be >= 2")
    box = [tuple(map(float, pair)) for pair in chart.get("box", [])]
    if len(box) != n:
        raise ConfigError("chart.box must list one [lo, hi] pair per dimension")
    metric = cfg.get("metric", {})
    if "components" in metric:
        return ChartMetric.from_strings(metric["components"], box)
    if "sigma" in metric:
        return ChartMetric.conformally_flat(metric["sigma"], n, box)
    raise ConfigError("metric needs either 'components' or a conformal 'sigma'")


def _samples_for(metric_box, n_default: int, cfg: dict) -> np.ndarray:
    sample_cfg = cfg.get("samples", {})
    count = int(sample_cfg.get("count", n_default))
    pts = lattice(metric_box, count)
    extra = sample_cfg.get("points")
    if extra:
        user = np.asarray(extra, dtype=float).T
        pts = np.concatenate([pts, user], axis=1)
    return pts


# ---------------------------------------------------------------------------
# experiments


def _run_check_metric(cfg: dict, tol: dict) -> list[Check]:
    metric = _metric_from_config(cfg)
    samples = _samples_for(metric.box, 10 ** min(metric.n, 3), cfg)
    checks = []
    cert = conformal_flatness_certificate(metric, samples, tol=tol["certificate"])
    checks.append(
        Check(
            "conformally_flat",
            cert.certified,
            cert.max_residual,
            tol["certificate"],
            list(cert.worst_point) if cert.worst_point else None,
            detail=cert.mode,
        )
    )
    batch = curvature_batch(metric, samples)
    sym = pack_symmetry_residuals(batch)
    for name, res in sym.items():
        bound = tol["symmetry"] if "bianchi" not in name else tol["bianchi"]
        if name == "weyl_trace":
            bound = tol["weyl_trace"]
        k = int(np.argmax(res))
        checks.append(
            Check(
                f"curvature_{name}",
                bool(res[k] <= bound),
                float(res[k]),
                bound,
                [float(v) for v in samples[:, k]],
            )
        )
    return checks


def _run_dualize(cfg: dict, tol: dict) -> list[Check]:
    metric = _metric_from_config(cfg)
    samples = _samples_for(metric.box, 50, cfg)
    checks = []
    try:
        verdict = verify_duality(metric, samples, tol=tol["duality"],
                                 certificate_tol=tol["certificate"])
    except NotConformallyFlatError as err:
        rep = err.report
        checks.append(
            Check(
                "conformally_flat",
                False,
                rep.max_residual,
                rep.tol,
                list(rep.worst_point) if rep.worst_point else None,
                detail=rep.mode,
            )
        )
        return checks
    cert = verdict.input_certificate
    checks.append(
        Check("conformally_flat", True, cert.max_residual, cert.tol, detail=cert.mode)
    )
    for name, c in verdict.checks.items():
        checks.append(
            Check(
                name,
                c.passed,
                c.residual,
                c.tol,
                list(c.worst_point) if c.worst_point else None,
            )
        )
    checks.append(
        Check(
            "parabolic_exclusions",
            True,
            float(verdict.n_parabolic),
            None,
            detail=f"{verdict.n_parabolic} of {verdict.n_samples} samples excluded",
        )
    )
    return checks


def _pair_from_config(cfg: dict):
    fr = cfg.get("frontal", {})
    name = fr.get("gallery")
    if not name:
        raise ConfigError("frontal.gallery is required")
    n = fr.get("n")
    params = dict(fr.get("params", {}))
    return gallery(name, int(n) if n else None, params)


def _run_frontal_check(cfg: dict, tol: dict) -> list[Check]:
    pair = _pair_from_config(cfg)
    count = int(cfg.get("samples", {}).get("count", 40))
    samples = pair.default_samples(count)
    checks = []
    res = pair_residuals(pair, samples)
    worst = int(np.argmax(np.max(res, axis=0)))
    checks.append(
        Check(
            "pair_residuals",
            bool(np.max(res) <= tol["pair"]),
            float(np.max(res)),
            tol["pair"],
            [float(v) for v in samples[:, worst]],
        )
    )
    if np.max(res) <= tol["pair"]:
        ge = gauss_equation_residual(pair, samples)
        k = int(np.argmax(ge))
        checks.append(
            Check(
                "gauss_equation",
                bool(ge[k] <= tol["gauss_equation"]),
                float(ge[k]),
                tol["gauss_equation"],
                [float(v) for v in samples[:, k]],
            )
        )
        rec = gcf_from_frontal(pair, samples)
        checks.append(
            Check(
                "ricci_trace_relation",
                rec.ricci_relation <= tol["form_relations"],
                rec.ricci_relation,
                tol["form_relations"],
            )
        )
        checks.append(
            Check(
                "scalar_trace_relation",
                rec.scalar_relation <= tol["form_relations"],
                rec.scalar_relation,
                tol["form_relations"],
            )
        )
        if rec.schouten_vs_second is not None:
            checks.append(
                Check(
                    "schouten_equals_minus_ii",
                    rec.schouten_vs_second <= tol["form_relations"],
                    rec.schouten_vs_second,
                    tol["form_relations"],
                )
            )
            checks.append(
                Check(
                    "third_form_is_dual",
                    rec.third_vs_dual <= tol["form_relations"],
                    rec.third_vs_dual,
                    tol["form_relations"],
                )
            )
        if rec.gauss_curv_vs_trace is not None:
            checks.append(
                Check(
                    "gauss_curvature_is_minus_trace",
                    rec.gauss_curv_vs_trace <= tol["surface_relation"],
                    rec.gauss_curv_vs_trace,
                    tol["surface_relation"],
                )
            )
        checks.append(
            Check(
                "gauss_map_rank_equality",
                rec.rank_consistent and rec.joint_full_rank_matches_regularity,
                None,
                None,
                detail=f"regular fraction {rec.fraction_checked:.3f}",
            )
        )
    return checks


def _run_conformal_change(cfg: dict, tol: dict) -> list[Check]:
    cc = cfg.get("conformal_change", {})
    sigma = cc.get("sigma", "0")
    n = int(cc.get("n", 2))
    count = int(cfg.get("samples", {}).get("count", 25))
    box = None
    if "box" in cc:
        box = [tuple(map(float, p)) for p in cc["box"]]
    report = conformal_change(sigma, n, samples=None if box is None else lattice(box, count), box=box)
    return [
        Check("pair_residuals", report.pair_residual <= tol["pair"],
              report.pair_residual, tol["pair"]),
        Check("dual_route_agreement", report.route_disagreement <= tol["route_agreement"],
              report.route_disagreement, tol["route_agreement"]),
        Check("ii_route_agreement", report.ii_agreement <= tol["ii_agreement"],
              report.ii_agreement, tol["ii_agreement"]),
        Check("ii_codazzi", report.ii_codazzi <= tol["codazzi"],
              report.ii_codazzi, tol["codazzi"]),
    ]


def _run_realize2d(cfg: dict, tol: dict) -> list[Check]:
    rl = cfg.get("realize2d", {})
    sigma = rl.get("sigma", "0")
    box = [tuple(map(float, p)) for p in rl.get("box", [[0.0, 1.0], [0.0, 1.0]])]
    metric = ChartMetric.conformally_flat(sigma, 2, box)
    seed = HoloSeed.from_strings(rl.get("seed_re", "0"), rl.get("seed_im", "0"), box)
    h = float(rl.get("h", 0.02))
    checks = []
    try:
        form = second_form_from_seed(seed, metric)
    except (CauchyRiemannError, IntegrabilityError) as err:
        checks.append(Check("seed_admissible", False, None, None, detail=str(err)))
        return checks
    checks.append(
        Check("trace_condition", form.trace_residual <= tol["integrability"],
              form.trace_residual, tol["integrability"])
    )
    checks.append(
        Check("codazzi_condition", form.codazzi_residual <= tol["integrability"],
              form.codazzi_residual, tol["integrability"])
    )
    drift_bound = float(rl.get("drift_bound", tol["drift_bound"]))
    try:
        res = realize_in_q3(metric, form.field, h=h, drift_bound=drift_bound)
    except RealizationDriftError as err:
        checks.append(
            Check("constraint_drift", False,
                  err.result.residuals["constraint_drift"], drift_bound)
        )
        return checks
    r = res.residuals
    checks.append(Check("constraint_drift", True, r["constraint_drift"], drift_bound))
    for key in ("first_form_reconstruction", "second_form_reconstruction",
                "path_dependence"):
        checks.append(
            Check(key, r[key] <= tol["reconstruction"], r[key], tol["reconstruction"])
        )
    # flat inputs additionally get the two-dimensional duality check
    try:
        fd = flat_duality_check(metric, form.field)
        checks.append(
            Check("flat_dual_flatness", fd.dual_gauss_curvature <= tol["reconstruction"],
                  fd.dual_gauss_curvature, tol["reconstruction"],
                  detail=f"{fd.n_degenerate} degenerate samples")
        )
        checks.append(
            Check("flat_dual_codazzi", fd.dual_codazzi_residual <= tol["reconstruction"],
                  fd.dual_codazzi_residual, tol["reconstruction"])
        )
    except ValueError:
        pass  # input not flat, or dual everywhere degenerate: not applicable
    return checks


def _run_gallery_export(cfg: dict, tol: dict, out_dir: Path) -> list[Check]:
    pair = _pair_from_config(cfg)
    count = int(cfg.get("samples", {}).get("count", 100))
    samples = pair.default_samples(count)
    rows = pair_point_cloud(pair, samples)
    target = cfg.get("export", {}).get("pointcloud", f"{pair.name}_cloud.jsonl")
    path = _resolve_output(target, out_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    res = pair_residuals(pair, samples)
    return [
        Check(
            "pointcloud_written", True, None, None,
            detail=f"{len(rows)} rows -> {path}",
        ),
        Check(
            "pair_residuals",
            bool(np.max(res) <= tol["pair"]),
            float(np.max(res)),
            tol["pair"],
        ),
    ]


# ---------------------------------------------------------------------------
# the runner


def _resolve_output(target: str, out_dir: Path) -> Path:
    p = Path(target)
    if not p.is_absolute():
        p = out_dir / p
    return p


def run_config(config_path: str, output: str | None = None) -> int:
    out_dir = Path(os.environ.get("CONFLAT_OUT", "."))
    try:
        with open(config_path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        print(f"error: config file not found: {config_path}", file=sys.stderr)
        return 2
    except tomllib.TOMLDecodeError as err:
        print(f"error: config parse failure: {err}", file=sys.stderr)
        return 2

    try:
        exp = cfg.get("experiment", {})
        kind = exp.get("kind")
        if kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"experiment.kind must be one of {EXPERIMENT_KINDS}, got {kind!r}"
            )
        tol = _tolerances(cfg)
        if kind == "check-metric":
            checks = _run_check_metric(cfg, tol)
        elif kind == "dualize":
            checks = _run_dualize(cfg, tol)
        elif kind == "frontal-check":
            checks = _run_frontal_check(cfg, tol)
        elif kind == "conformal-change":
            checks = _run_conformal_change(cfg, tol)
        elif kind == "realize2d":
            checks = _run_realize2d(cfg, tol)
        else:
            checks = _run_gallery_export(cfg, tol, out_dir)
    except (ConfigError, ExprError, EvalDomainError, ValueError) as err:
        # domain and configuration problems are reported as exit 2 unless they
        # arise from a failed numeric precondition inside a check
        if isinstance(err, (DegenerateMetricError,)):
            print(f"error: {err}", file=sys.stderr)
            return 1
        print(f"error: {err}", file=sys.stderr)
        return 2

    passed = all(c.passed for c in checks)
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "conflat", "version": __version__},
        "experiment": kind,
        "config": cfg,
        "checks": [c.as_json() for c in checks],
        "passed": passed,
        "provenance": {
            "tolerances": tol,
            "sample_lattice": {
                "kind": "kronecker-shifted",
                "margin": 0.05,
                "generators": "frac(sqrt(primes))",
                "shift": "0.5/count",
            },
        },
    }
    target = output or exp.get("output") or (Path(config_path).stem + "_report.json")
    path = _resolve_output(target, out_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    for c in checks:
        status = "pass" if c.passed else "FAIL"
        res = "" if c.residual is None else f" residual={c.residual:.3e}"
        print(f"{c.name}: {status}{res}")
    print(f"report: {path}")
    return 0 if passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="conflat",
        description="conformally-flat duality and lightcone hypersurface checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a TOML experiment file")
    p_run.add_argument("--output", "-o", help="report path (JSON)")
    p_gal = sub.add_parser("gallery", help="gallery utilities")
    p_gal.add_argument("action", choices=["list"])
    sub.add_parser("version", help="print the tool version")

    args = parser.parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    if args.command == "gallery":
        for name, info in gallery_schema().items():
            print(f"{name}: {info['summary']}")
            print(f"    dimensions: {info['dims']}; default n = {info['default_n']}")
            for pname, pdesc in info["params"].items():
                print(f"    param {pname}: {pdesc}")
        return 0
    return run_config(args.config, args.output)


if __name__ == "__main__":
    raise SystemExit(main())
