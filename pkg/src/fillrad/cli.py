"""``fillrad`` command line: sample, persist, fillrad, bounds, probe and suite.

Exit codes: 0 success, 1 failed verdict or estimator error, 2 usage or input
error, 3 simplex budget exceeded.  Failures print a JSON ``{error, message,
context}`` record on stderr.  Files are written atomically.
"""

from __future__ import annotations

import functools
import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import _io, bounds, constructions, samplers, suite
from ._kernel import IMPLEMENTATION
from .errors import FillradError, InvalidInput
from .metric_core import kuratowski_embed, read_metric_csv, validate_metric, write_metric_csv
from .persistence import (
    DEFAULT_SIMPLEX_BUDGET,
    EstimatorConfig,
    FillRadEstimate,
    build_vr_filtration,
    estimate_fillrad,
    reduce,
)

VERDICT_FAILED = 1


def _fail(record: dict, code: int) -> None:
    click.echo(json.dumps(_io.jsonable(record), sort_keys=True), err=True)
    sys.exit(code)


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FillradError as exc:
            _fail(exc.to_record(), exc.exit_code)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            _fail({"error": type(exc).__name__, "message": str(exc), "context": {}}, 2)

    return wrapper


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def _sample_record(sample, csv_path: Path, config: dict) -> dict:
    if isinstance(sample, samplers.SubmersionSample):
        meta = sample.metadata()
        meta["proj"] = sample.proj.tolist()
        meta["base"]["distances"] = sample.base.space.d.tolist()
    else:
        meta = sample.metadata()
    meta["distances"] = csv_path.name
    meta["config"] = config
    return meta


def load_sample(meta_path, csv_path=None):
    """Rebuild a sample (or submersion) from a sidecar written by ``sample``."""
    meta_path = Path(meta_path)
    meta = json.loads(meta_path.read_text())
    if csv_path is None:
        if not meta.get("distances"):
            raise InvalidInput(f"{meta_path}: no distance file recorded; pass --in")
        csv_path = meta_path.parent / meta["distances"]
    space = read_metric_csv(csv_path)
    total = samplers.ManifoldSample.from_metadata(space, meta)
    if "proj" not in meta:
        return total
    bmeta = meta["base"]
    base = samplers.ManifoldSample.from_metadata(validate_metric(np.array(bmeta["distances"], dtype=float)), bmeta)
    return samplers.make_submersion(total, base, meta["proj"])


def _manifold(sample):
    return sample.total if isinstance(sample, samplers.SubmersionSample) else sample


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Filling-radius estimates and bound certificates for sampled manifolds."""


@main.command()
@click.option("--manifold", type=click.Choice(samplers.MANIFOLDS), required=True)
@click.option("--n", "n", type=int, default=None, help="Point count (pairs for rp2, base points for graph).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--circumference", type=float, default=2 * math.pi, show_default=True, help="circle length")
@click.option("--L", "L", type=float, default=2 * math.pi, show_default=True, help="torus: long circle length")
@click.option("--l", "l_", type=float, default=1.2 * math.pi, show_default=True, help="torus: short circle length")
@click.option("--nL", "nL", type=int, default=32, show_default=True)
@click.option("--nl", "nl", type=int, default=20, show_default=True)
@click.option("--a", "a", type=float, default=1.0, show_default=True, help="graph: Berger fiber scale")
@click.option("--n-fiber", type=int, default=12, show_default=True, help="graph: points per fiber")
@click.option("--k", "k", type=int, default=None, help="graph: neighbors in the kNN graph")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="distance CSV; sidecar goes next to it")
@handles_errors
def sample(manifold, n, seed, circumference, L, l_, nL, nl, a, n_fiber, k, out):
    """Write a sampled distance matrix plus a JSON metadata sidecar."""
    defaults = {"circle": 128, "sphere2": 150, "sphere3": 200, "rp2": 100, "quotient": 150, "graph": 48}
    n = defaults.get(manifold) if n is None else n
    if manifold == "circle":
        s = samplers.sample_circle(circumference, n)
        config = {"manifold": manifold, "circumference": circumference, "n": n}
    elif manifold in ("sphere2", "sphere3"):
        s = samplers.sample_sphere(int(manifold[-1]), n, seed)
        config = {"manifold": manifold, "n": n, "seed": seed}
    elif manifold == "torus":
        s = samplers.sample_flat_torus(L, l_, nL, nl)
        config = {"manifold": manifold, "L": L, "l": l_, "nL": nL, "nl": nl}
    elif manifold == "rp2":
        s, _ = samplers.sample_rp2(n, seed)
        config = {"manifold": manifold, "n": n, "seed": seed}
    elif manifold == "quotient":
        if n % 2:
            raise InvalidInput("quotient samples need an even point count", n=n)
        _, s = samplers.sample_rp2(n // 2, seed)
        config = {"manifold": manifold, "n": n, "seed": seed}
    else:
        s = samplers.sample_berger(a, n, n_fiber, seed, k)
        config = {"manifold": manifold, "a": a, "n": n, "n_fiber": n_fiber, "k": k, "seed": seed}
    out = Path(out)
    write_metric_csv(_manifold(s).space, out)
    _io.atomic_write_json(sidecar_path(out), _sample_record(s, out, config))
    click.echo(f"wrote {out} ({_manifold(s).n} points) and {sidecar_path(out)}")


@main.command()
@click.option("--in", "in_", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--maxdim", type=int, default=2, show_default=True,
              help="top simplex dimension; bars are reported in degrees below it")
@click.option("--threshold", type=float, default=None, help="filtration cap (default: diameter)")
@click.option("--budget", type=int, default=DEFAULT_SIMPLEX_BUDGET, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handles_errors
def persist(in_, maxdim, threshold, budget, out):
    """Vietoris-Rips barcode of a distance CSV."""
    space = read_metric_csv(in_)
    thr = space.diameter if threshold is None else threshold
    filt = build_vr_filtration(space, maxdim, thr, budget)
    bc = reduce(filt)
    obj = bc.to_json()
    obj["config"] = {"in": Path(in_).name, "maxdim": maxdim, "threshold": thr, "budget": budget,
                     "counts": list(filt.counts)}
    _io.atomic_write_json(out, obj)
    for k in range(bc.maxdim_homology + 1):
        click.echo(f"H{k}: {len(bc.bars(k))} finite, {len(bc.essential_births(k))} essential")


@main.command()
@click.option("--in", "in_", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--dim", "k", type=int, default=None, help="homology degree (default: sidecar dim, else 1)")
@click.option("--meta", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--r-max", type=float, default=None)
@click.option("--min-gap", type=float, default=2.0, show_default=True)
@click.option("--budget", type=int, default=DEFAULT_SIMPLEX_BUDGET, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handles_errors
def fillrad(in_, k, meta, r_max, min_gap, budget, out):
    """Half the death of the dominant bar in degree DIM."""
    if meta is not None:
        s = load_sample(meta, in_)
    else:
        s = samplers.ManifoldSample(read_metric_csv(in_), dim=1, label=Path(in_).stem)
        k = 1 if k is None else k
    config = EstimatorConfig(r_max=r_max, min_gap=min_gap, simplex_budget=budget)
    est = estimate_fillrad(s, k, config)
    obj = est.to_json()
    obj["config"] = {"in": Path(in_).name, "meta": None if meta is None else Path(meta).name, "dim": est.k,
                     "r_max": r_max, "min_gap": min_gap, "budget": budget}
    _io.atomic_write_json(out, obj)
    click.echo(f"{est.label}: fillrad_{est.k} ~ {est.estimate!r} (bar {est.bar}, gap {est.confidence:.3g})")


@main.command("bounds")
@click.option("--meta", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--est", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--in", "in_", type=click.Path(exists=True, dir_okay=False), default=None,
              help="distance CSV (default: the one named in the sidecar)")
@click.option("--estimator-tol", type=float, default=None, help="override the estimator tolerance")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handles_errors
def bounds_cmd(meta, est, in_, estimator_tol, out):
    """Check every applicable bound against an estimate; exit 1 on a failed verdict."""
    s = load_sample(meta, in_)
    estimate = FillRadEstimate.from_json(json.loads(Path(est).read_text()))
    report = bounds.check_bounds(s, estimate, estimator_tol)
    _io.atomic_write_json(out, report.to_json())
    click.echo(bounds.render_table(report))
    if not report.passed:
        sys.exit(VERDICT_FAILED)


@main.group()
def probe():
    """Finite-scale audits of the constructions (JSON reports)."""


def _finish_audit(audit: dict, out) -> None:
    _io.atomic_write_json(out, audit)
    click.echo(f"{audit['construct']}: {audit['violation_count']} violations, "
               f"max residual {audit['max_residual']!r}")
    if audit["violation_count"]:
        sys.exit(VERDICT_FAILED)


@probe.command("reach")
@click.option("--in", "in_", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--pairs", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handles_errors
def probe_reach(in_, pairs, seed, out):
    """Midpoint witnesses between rows, down to nearest neighbors."""
    space = read_metric_csv(in_)
    if space.n < 2:
        raise InvalidInput("reach probes need at least two points", n=space.n)
    audit = constructions.reach_audit(kuratowski_embed(space), suite.reach_pairs(space, pairs, seed))
    audit["parameters"].update({"in": Path(in_).name, "seed": seed})
    _finish_audit(audit, out)


@probe.command("project")
@click.option("--in", "in_", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--cases", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handles_errors
def probe_project(in_, cases, seed, out):
    """Unique nearest row of shifted rows ``dist_p + delta``."""
    space = read_metric_csv(in_)
    if space.n < 2:
        raise InvalidInput("projection probes need at least two points", n=space.n)
    audit = constructions.projection_audit(kuratowski_embed(space), suite.projection_cases(space, cases, seed))
    audit["parameters"].update({"in": Path(in_).name, "seed": seed})
    _finish_audit(audit, out)


@probe.command("retract")
@click.option("--in", "in_", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--meta", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--R", "R", type=float, default=None, help="vicinity radius (default: 0.9 x the lower bound)")
@click.option("--points", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handles_errors
def probe_retract(in_, meta, R, points, seed, out):
    """Fixed points of the discrete Fréchet retraction on Kuratowski rows."""
    if meta is not None:
        s = _manifold(load_sample(meta, in_))
    else:
        s = samplers.ManifoldSample(read_metric_csv(in_), dim=1)
    if R is None:
        if s.inj is None or s.delta is None:
            raise InvalidInput("--R is required when the sidecar lacks inj and delta")
        R = 0.9 * bounds.lower_bound(s.inj, s.delta)
    audit = constructions.retraction_audit(kuratowski_embed(s.space), R,
                                           suite.retraction_points(s.n, points, seed), seed=seed)
    audit["parameters"].update({"in": Path(in_).name})
    _finish_audit(audit, out)


@probe.command("cylinder")
@click.option("--meta", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--in", "in_", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--grid", type=int, default=16, show_default=True, help="t-grid points on [0, rho0]")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handles_errors
def probe_cylinder(meta, in_, grid, out):
    """Mapping-cylinder homotopy audit of a submersion sample."""
    s = load_sample(meta, in_)
    if not isinstance(s, samplers.SubmersionSample):
        raise InvalidInput("the sidecar does not describe a submersion (no fibers)")
    _finish_audit(constructions.cylinder_audit(s, points=grid), out)


@main.command("suite")
@click.option("--out-dir", type=click.Path(file_okay=False), default="fillrad-suite", show_default=True)
@click.option("--only", multiple=True, type=click.Choice(list(suite.SCENARIOS)), help="run a subset")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=None,
              help=f"worker threads (default: ${suite.THREADS_ENV}, else available cores)")
@handles_errors
def suite_cmd(out_dir, only, seed, threads):
    """Run every end-to-end scenario; exit 0 iff all checks pass."""
    names = list(only) or list(suite.SCENARIOS)
    t0 = time.perf_counter()
    results = suite.run_suite(names, seed, threads)
    suite.write_results(results, out_dir)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        click.echo(f"{status}  {r.name:<9} {r.seconds:7.2f}s  "
                   f"{sum(c.passed for c in r.checks)}/{len(r.checks)} checks")
        for c in r.checks:
            if not c.passed:
                click.echo(f"      failed {c.name}: {c.value!r} (target {c.target})")
        if r.error:
            click.echo(f"      error {r.error['error']}: {r.error['message']}")
    click.echo(f"kernel: {IMPLEMENTATION}; total {time.perf_counter() - t0:.1f}s; reports in {out_dir}")
    if not all(r.passed for r in results):
        sys.exit(VERDICT_FAILED)

