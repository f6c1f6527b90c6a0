"""Command line entry point.

Exit codes: 0 success, 1 a verification failed, 2 usage error,
3 a combinatorial cap was exceeded.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import report as rp
from .graphs import CapExceeded, GraphSpec

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

EXIT_FAIL = 1
EXIT_CAP = 3


def _store_strength(ctx, param, value):
    ctx.meta["v_strength"] = value
    return value


def _model_options(f):
    opts = [
        click.option("--dim", type=click.IntRange(1, 3), default=2, show_default=True),
        click.option("--L", "L", type=click.IntRange(1), default=32, show_default=True),
        click.option("--T", "T", type=float, default=1.0, show_default=True),
        click.option("--lambda", "lam", type=float, default=0.0, show_default=True),
        click.option("--c", "c", type=float, default=0.0, show_default=True),
        click.option("--c-tilde", "c_tilde", type=float, default=0.0, show_default=True),
        click.option("--alpha", type=str, default="", help="comma separated phases"),
        click.option("--v-strength", type=float, default=1.0, show_default=True, expose_value=False,
                     callback=_store_strength, help="amplitude of the cosine part of the potential"),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _model(dim, L, T, lam, c, c_tilde, alpha):
    from .lattice import LatticeModel, ModelConfig

    a = tuple(float(x) for x in alpha.split(",") if x.strip()) if alpha else ()
    ctx = click.get_current_context(silent=True)
    strength = ctx.meta.get("v_strength", 1.0) if ctx is not None else 1.0
    return LatticeModel(ModelConfig(dim=dim, L=L, T=T, lam=lam, c=c, c_tilde=c_tilde, alpha=a, v_strength=strength))


def _point(text: str, dim: int) -> tuple[int, ...]:
    vals = tuple(int(x) for x in text.split(",") if x.strip())
    if len(vals) != dim:
        raise click.BadParameter(f"expected {dim} comma separated integers, got {text!r}")
    return vals


def _apply_threads() -> int:
    n = rp.threads_from_env()
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except (ImportError, ValueError):
        pass
    return n


def _config(ctx: click.Context, model=None, out=None, tolerances=None) -> rp.RunConfig:
    flags = {k: v for k, v in ctx.params.items() if k not in ("out",)}
    return rp.RunConfig(
        command=ctx.command_path,
        model=model.config.to_dict() if model is not None else {},
        flags=flags,
        out=str(out) if out else None,
        tolerances=tolerances or {},
        threads=ctx.obj["threads"],
        seed=ctx.obj["seed"],
    )


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--seed", type=int, default=rp.DEFAULT_SEED, show_default=True, help="seed for randomized checks")
@click.pass_context
def main(ctx: click.Context, seed: int) -> None:
    """Lattice Fermi gas kinetics: kernels, momentum graphs and collision operators."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["threads"] = _apply_threads()


# ---------------------------------------------------------------------------


@main.command()
@_model_options
@click.option("--check", type=click.Choice(["dr2", "dr3", "dr4", "loops"]), default="dr2", show_default=True)
@click.option("--tmax", type=float, default=50.0, show_default=True)
@click.option("--n", "n", type=click.IntRange(2), default=101, show_default=True)
@click.option("--sweep", type=click.IntRange(1), default=5, show_default=True, help="k0 grid side for dr3")
@click.option("--sigma", type=click.Choice(["1", "-1"]), default="1", show_default=True)
@click.option("--zeta", type=click.FloatRange(0, 1, min_open=True), default=0.5, show_default=True)
@click.option("--kind", type=click.Choice(["1", "2"]), default="1", show_default=True, help="crossing estimate for dr4")
@click.option("--out", type=click.Path(dir_okay=False), default="kernels.json", show_default=True)
@click.pass_context
def kernels(ctx, dim, L, T, lam, c, c_tilde, alpha, check, tmax, n, sweep, sigma, zeta, kind, out):
    """Oscillatory-kernel bounds with fitted constants.

    dr2: l3 dispersivity; dr3: constructive interference on a k0 sweep;
    dr4: crossing estimate; loops: degree-two resolvent loop and the
    oscillatory delta decay.
    """
    from . import kernels as kn

    model = _model(dim, L, T, lam, c, c_tilde, alpha)
    sig = int(sigma)
    reports = {}
    if check == "dr2":
        reports["dispersivity"] = kn.dispersivity_report(model, tmax, n)
    elif check == "dr3":
        axis = (np.arange(sweep) + 0.5) / sweep
        grid = np.stack(np.meshgrid(*[axis] * dim, indexing="ij"), -1).reshape(-1, dim)
        reports["interference"] = kn.interference_report(model, list(grid), sig, tmax, n)
    elif check == "dr4":
        quarter = np.full(dim, 0.25)
        reports["crossing"] = kn.crossing_check(model, int(kind), (sig, sig, sig), (quarter,) * 3, zeta)
    else:
        k0 = np.full(dim, 0.3)
        reports["loop_deg2"] = kn.resolvent_report(model, 2, k0, [10.0 ** -j for j in range(5)])
        reports["osc_delta"] = kn.osc_delta_report(model, k0, sig, sig, tmax, n)
    rp.write_json(out, {"config": _config(ctx, model, out), "check": check, **reports})
    for name, rep in reports.items():
        if len(rep.sweep) > 1 and isinstance(rep.sweep[0], (int, float)):
            rp.write_csv(rp.sibling(out, f"_{name}.csv"), ["x", "measured", "target"],
                         zip(rep.sweep, rep.measured, rep.target))
            rp.figure_bound(rp.sibling(out, f"_{name}.png"), rep.sweep, rep.measured, rep.target,
                            f"{name}, d={dim}", "t" if check == "dr2" else "s")
    sys.exit(0 if all(r.passed for r in reports.values()) else EXIT_FAIL)


@main.command()
@click.option("--enumerate", "orders", type=click.IntRange(0), nargs=2, required=True, metavar="N NPRIME",
              help="plus and minus tree interaction counts")
@click.option("--shape", type=click.Choice(["error", "main"]), default="error", show_default=True)
@click.option("--pairings-only", is_flag=True)
@click.option("--dump-dir", type=click.Path(file_okay=False), default=None, help="write one JSON file per graph")
@click.option("--out", type=click.Path(dir_okay=False), default="graphs.json", show_default=True)
@click.pass_context
def graphs(ctx, orders, shape, pairings_only, dump_dir, out):
    """Enumerate momentum graphs and check free-edge counts and degrees."""
    from .graphs import enumerate_specs, resolved, vertex_degrees

    n, n_prime = orders
    rows, specs, bad = [], [], 0
    try:
        for i, spec in enumerate(enumerate_specs(n, n_prime, shape, pairings_only=pairings_only)):
            g = resolved(spec)
            counts = vertex_degrees(g)
            nfree = len(g.free_edges)
            ok = nfree == 2 * spec.N + 2 - len(spec.clusters) and set(counts.degrees) <= {0, 1, 2}
            bad += not ok
            rows.append([i, nfree, "".join(map(str, counts.degrees)), counts.n2 - counts.n0, counts.r, int(ok)])
            specs.append(spec.to_dict())
            if dump_dir:
                rp.write_json(Path(dump_dir) / f"graph_{i:06d}.json", g.to_dict())
    except CapExceeded as exc:
        click.echo(f"refused: {exc}", err=True)
        sys.exit(EXIT_CAP)
    payload = {"config": _config(ctx, out=out), "count": len(rows), "failures": bad, "graphs": specs}
    rp.write_json(out, payload)
    rp.write_csv(rp.sibling(out, ".csv"), ["index", "free", "degrees", "n2_minus_n0", "r", "ok"], rows)
    sys.exit(0 if bad == 0 else EXIT_FAIL)


def _load_specs(path) -> list[GraphSpec]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data["graphs"] if "graphs" in data else [data]
    return [GraphSpec.from_dict(d) for d in data]


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="one graph, a list of graphs, or the output of the graphs command")
@click.option("--max", "max_n", type=click.IntRange(0), default=None,
              help="classify every parity-admissible pairing up to this order")
@click.option("--shape", type=click.Choice(["error", "main"]), default="error", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="tags.json", show_default=True)
@click.pass_context
def classify(ctx, input_path, max_n, shape, out):
    """Leading, Nested or Crossing for given graphs or a whole population."""
    from .classify import classify as run, classify_population
    from .graphs import FULL_CAP

    if (input_path is None) == (max_n is None):
        raise click.UsageError("give exactly one of --input and --max")
    cfg = _config(ctx, out=out)
    if input_path:
        tags = []
        for i, spec in enumerate(_load_specs(input_path)):
            row = run(spec).to_dict()
            row["graph_id"] = i
            tags.append(row)
        counts: dict = {}
        for row in tags:
            counts[row["tag"]] = counts.get(row["tag"], 0) + 1
        rp.write_json(out, {"config": cfg, "tags": tags, "total": counts})
        return
    if max_n > FULL_CAP:
        click.echo(f"refused: order {max_n} exceeds cap {FULL_CAP}", err=True)
        sys.exit(EXIT_CAP)
    per = {str(N): dict(classify_population(N, shape)) for N in range(max_n + 1)}
    total: dict = {}
    for counts in per.values():
        for k, v in counts.items():
            total[k] = total.get(k, 0) + v
    rp.write_json(out, {"config": cfg, "by_order": per, "total": total})
    rp.figure_counts(rp.sibling(out, ".png"), total, f"classification up to order {max_n}")


@main.command()
@_model_options
@click.option("--k", "k", type=str, required=True, help="grid point, comma separated integers")
@click.option("--eta", type=float, required=True)
@click.option("--refine/--no-refine", default=True, show_default=True, help="also evaluate on the grid of side 2L")
@click.option("--renormalized", is_flag=True, help="use the renormalized band inside the phase")
@click.option("--out", type=click.Path(dir_okay=False), default="nu.json", show_default=True)
@click.pass_context
def nu(ctx, dim, L, T, lam, c, c_tilde, alpha, k, eta, refine, renormalized, out):
    """Collisional frequency at one grid point."""
    from .kinetic import nu as run

    if not eta > 0:
        raise click.BadParameter("eta must be positive", param_hint="--eta")
    model = _model(dim, L, T, lam, c, c_tilde, alpha)
    val = run(model, _point(k, dim), eta, lam if renormalized else None, refine=refine)
    payload = val.to_dict()
    payload["config"] = _config(ctx, model, out)
    rp.write_json(out, payload)


@main.command()
@_model_options
@click.option("--wfield", type=click.Path(exists=True, dir_okay=False), default=None, help="CSV with rows i_1..i_d,w")
@click.option("--eta", type=float, required=True)
@click.option("--k", "k", type=str, default=None, help="single grid point; default is the whole grid")
@click.option("--out", type=click.Path(dir_okay=False), default="collision.json", show_default=True)
@click.pass_context
def collision(ctx, dim, L, T, lam, c, c_tilde, alpha, wfield, eta, k, out):
    """Collision operator of an occupation field (equilibrium when no file is given)."""
    from .kinetic import collision_operator

    if not eta > 0:
        raise click.BadParameter("eta must be positive", param_hint="--eta")
    model = _model(dim, L, T, lam, c, c_tilde, alpha)
    W = None if wfield is None else rp.read_wfield_csv(wfield, dim, L)
    pts = [_point(k, dim)] if k else [tuple(int(x) for x in p) for p in model.grid.points()]
    vals = [collision_operator(model, W, p, eta) for p in pts]
    payload = {"config": _config(ctx, model, out), "eta": eta,
               "values": [{"k": list(p), "value": v} for p, v in zip(pts, vals)],
               "max_abs": float(np.max(np.abs(vals)))}
    rp.write_json(out, payload)
    rp.write_csv(rp.sibling(out, ".csv"), [f"i{j + 1}" for j in range(dim)] + ["value"],
                 [list(p) + [v] for p, v in zip(pts, vals)])
    if not k:
        rp.figure_field(rp.sibling(out, ".png"), np.reshape(vals, model.grid.shape), "collision operator")


@main.command()
@_model_options
@click.option("--k", "k", type=str, required=True)
@click.option("--t", "t", type=click.FloatRange(0), required=True)
@click.option("--M", "M", type=click.IntRange(0), default=10, show_default=True)
@click.option("--eta", type=float, default=0.05, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="series.json", show_default=True)
@click.pass_context
def series(ctx, dim, L, T, lam, c, c_tilde, alpha, k, t, M, eta, out):
    """Leading series partial sums against the exponential closed form."""
    from .kinetic import leading_series, nu as run

    model = _model(dim, L, T, lam, c, c_tilde, alpha)
    p = _point(k, dim)
    v = run(model, p, eta)
    w0 = float(model.w0(np.asarray(p) / L))
    s = leading_series(w0, v.value, t, M)
    payload = {"config": _config(ctx, model, out), "nu": v, "w0": w0, "series": s}
    rp.write_json(out, payload)
    rp.figure_series(rp.sibling(out, ".png"), s.partial_sums, s.closed_form, f"leading series, t={t}")


@main.command()
@_model_options
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--t", "t", type=click.FloatRange(0), required=True)
@click.option("--eta", type=float, default=0.5, show_default=True)
@click.option("--width", type=float, default=0.3, show_default=True, help="radius of the test bump")
@click.option("--nodes", type=click.IntRange(2), default=24, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="amplitude.json", show_default=True)
@click.pass_context
def amplitude(ctx, dim, L, T, lam, c, c_tilde, alpha, graph_path, t, eta, width, nodes, out):
    """Main pair amplitude of a leading graph with at most two motives."""
    from .kinetic import amplitude_main_pair, bump

    model = _model(dim, L, T, lam, c, c_tilde, alpha)
    spec = GraphSpec.from_dict(json.loads(Path(graph_path).read_text(encoding="utf-8")))
    f = bump(model, width)
    try:
        val = amplitude_main_pair(model, spec, t, lam, eta, f, nodes=nodes)
    except CapExceeded as exc:
        click.echo(f"refused: {exc}", err=True)
        sys.exit(EXIT_CAP)
    rp.write_json(out, {"config": _config(ctx, model, out), "graph": spec, "amplitude": val})


# ---------------------------------------------------------------------------


@main.group()
def verify():
    """Aggregated self-checks; exit status 0 iff every check passes."""


@verify.command("graphs")
@click.option("--max", "max_n", type=click.IntRange(0), default=4, show_default=True)
@click.option("--full-max", type=click.IntRange(0), default=4, show_default=True,
              help="largest order checked over every even cluster decomposition")
@click.option("--sample-histories", type=click.IntRange(1), default=None,
              help="random histories per order above 5 (default: all)")
@click.option("--out", type=click.Path(dir_okay=False), default="verify_graphs.json", show_default=True)
@click.pass_context
def verify_graphs(ctx, max_n, full_max, sample_histories, out):
    """Free-edge count, degree and momentum-constraint lemmas over whole populations."""
    from .bulk import CHECKS, verify_population
    from .graphs import PAIRING_CAP

    if max_n > PAIRING_CAP:
        click.echo(f"refused: order {max_n} exceeds cap {PAIRING_CAP}", err=True)
        sys.exit(EXIT_CAP)
    seed = ctx.obj["seed"]
    runs = []
    for N in range(max_n + 1):
        if N <= full_max:
            runs.append(verify_population(N, "all", seed))
        runs.append(verify_population(N, "pairings", seed, sample_histories if N > 5 else None))
    per_check = {c: {"checked": 0, "passed": 0} for c in CHECKS}
    for r in runs:
        for c in CHECKS:
            per_check[c]["checked"] += r.graphs
            per_check[c]["passed"] += r.graphs - r.failures[c]
    ok = all(r.ok for r in runs)
    payload = {"config": _config(ctx, out=out), "runs": [r.to_dict() for r in runs],
               "per_check": per_check, "pass": ok,
               "exhaustive": all(r.histories == r.histories_total for r in runs)}
    rp.write_json(out, payload)
    rp.figure_counts(rp.sibling(out, ".png"), {c: v["passed"] for c, v in per_check.items()}, "graphs passing each check")
    sys.exit(0 if ok else EXIT_FAIL)


@verify.command("motives")
@click.option("--points", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--tol", type=float, default=1e-12, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="verify_motives.json", show_default=True)
@click.pass_context
def verify_motives(ctx, points, tol, out):
    """Loss-motive sum identity and detailed balance at random momenta."""
    from .kinetic import detailed_balance, motive_sum_special
    from .lattice import LatticeModel, ModelConfig

    rng = np.random.default_rng(ctx.obj["seed"])
    out_rows = {}
    model = LatticeModel(ModelConfig(dim=2, T=1.0, c=0.3, c_tilde=0.2, alpha=(0.4, -0.7)))
    ks = rng.random((3, points, 2))
    for sigma in (-1, 1):
        lhs, rhs = motive_sum_special(model, *ks, sigma=sigma)
        out_rows[f"loss_sum_max_error_sigma{sigma:+d}"] = float(np.max(np.abs(lhs - rhs)))
    br, fac = detailed_balance(model, *ks)
    out_rows["detailed_balance_max_error"] = float(np.max(np.abs(br - fac)))
    ok = all(v <= tol for v in out_rows.values())
    payload = {"config": _config(ctx, out=out, tolerances={"abs": tol}), "pass": ok, **out_rows}
    rp.write_json(out, payload)
    sys.exit(0 if ok else EXIT_FAIL)


if __name__ == "__main__":
    main()
