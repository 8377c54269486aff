"""Command line front end.

Subcommands cover the full life of a study: serve it over HTTP, run the
synthetic-respondent benchmarks, re-estimate models from a persisted
event log, post-process finalized models into tables and figures, and
export render-ready meshes.

Exit codes: 0 success, 2 configuration problem, 3 study-state problem,
4 numerical failure.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analysis import (
    aggregate_wtt,
    cluster,
    group_scorer,
    importances,
    optimal_design,
    partworth_table,
    per_kilodollar_utility,
    per_mpg_utility,
    wtp_mpg_summary,
    wtt,
)
from .config import ConfigError, load_config, with_overrides
from .form_learner import FormModel, FormPopulation, MixedFormScorer
from .geometry import tessellate
from .sampler import GAConfig
from .simulation import (
    VARIANTS,
    SimSettings,
    make_scenario,
    run_experiment,
    scenario_grid,
    summarize_battery,
)
from .survey import StateError, Study, create_app, read_events, replay_study

EXIT_CONFIG = 2
EXIT_STATE = 3
EXIT_NUMERIC = 4

FAST_SETTINGS = SimSettings(hb_iterations=600, hb_burn_in=300, hb_thin=2,
                            ga_first=GAConfig(4, 6), ga_second=GAConfig(4, 6))


def _guarded(fn):
    """Map domain failures onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            raise click.exceptions.Exit(_fail(EXIT_CONFIG, exc))
        except StateError as exc:
            raise click.exceptions.Exit(_fail(EXIT_STATE, exc))
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise click.exceptions.Exit(_fail(EXIT_NUMERIC, exc))

    return wrapper


def _fail(code: int, exc: Exception) -> int:
    click.echo(f"error: {exc}", err=True)
    return code


def _write_csv(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _save_figure(fig, path: Path) -> None:
    # fixed metadata so a rerun writes identical bytes
    fig.savefig(path, dpi=120, metadata={"Software": "formchoice"})


@click.group()
@click.version_option(__version__, prog_name="formchoice")
def main():
    """Bi-level adaptive preference studies: serve, simulate, estimate,
    analyze, export."""


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--seed", type=int, default=None,
              help="Override the seed in the config file.")
@_guarded
def serve(config_file, host, port, seed):
    """Boot the survey service with one study from CONFIG_FILE."""
    import uvicorn

    config = load_config(config_file)
    if seed is not None:
        config = with_overrides(config, seed=seed)
    study = Study(config)
    app = create_app({config.study_id: study})
    click.echo(f"study {config.study_id} listening on http://{host}:{port}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:  # bind failure
        raise StateError(f"cannot listen on {host}:{port}: {exc}") from None


def _parse_scenarios(names: tuple[str, ...]):
    if "all" in names:
        return scenario_grid()
    scenarios = []
    for name in names:
        parts = name.split("/")
        if len(parts) != 3:
            raise click.BadParameter(
                f"{name!r}; expected form/accuracy/heterogeneity, e.g. low/high/low")
        try:
            scenarios.append(make_scenario(*parts))
        except ValueError as exc:
            raise click.BadParameter(str(exc))
    return scenarios


@main.command()
@click.option("--scenario", "scenarios", multiple=True, default=("all",),
              show_default=True,
              help="'all' or form/accuracy/heterogeneity; repeatable.")
@click.option("--variant", "variants", multiple=True,
              type=click.Choice(VARIANTS), default=("M1", "M2", "M3"),
              show_default=True)
@click.option("--seeds", default=5, show_default=True,
              help="Number of populations per scenario.")
@click.option("--respondents", default=100, show_default=True)
@click.option("--questions", default=20, show_default=True)
@click.option("--holdouts", default=100, show_default=True,
              help="Holdout questions of each kind.")
@click.option("--noise", default=0.0, show_default=True,
              help="Probability a form answer is flipped.")
@click.option("--seed", "base_seed", default=0, show_default=True,
              help="Offset added to every population seed.")
@click.option("--fast", is_flag=True,
              help="Tiny search and chain budgets (smoke runs only).")
@click.option("--out", default="sim_out", show_default=True,
              type=click.Path(file_okay=False))
@_guarded
def simulate(scenarios, variants, seeds, respondents, questions, holdouts,
             noise, base_seed, fast, out):
    """Benchmark questioning strategies on synthetic respondents."""
    scenario_list = _parse_scenarios(scenarios)
    settings = FAST_SETTINGS if fast else SimSettings()
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    reports = []
    for scenario in scenario_list:
        for s in range(seeds):
            for variant in variants:
                report = run_experiment(
                    variant, scenario, n_respondents=respondents,
                    n_questions=questions, holdouts=(holdouts, holdouts),
                    seed=base_seed + s, flip_prob=noise, settings=settings)
                reports.append(report)
                click.echo(f"{scenario.name} seed {base_seed + s} {variant}: "
                           f"form {report.form_hit_rate:.3f} "
                           f"overall {report.overall_hit_rate:.3f}")

    rows = [r.row() for r in reports]
    for row in rows:
        row.pop("runtime_s")  # wall time would break byte-stable reruns
    _write_csv(out_dir / "hit_rates.csv", rows)

    summary = summarize_battery(reports)
    summary_rows = [
        {"scenario": scenario, "variant": variant, **{
            k: round(v, 6) if isinstance(v, float) else v
            for k, v in stats.items()}}
        for (scenario, variant), stats in sorted(summary.items())
    ]
    _write_csv(out_dir / "summary.csv", summary_rows)
    _plot_hit_rates(summary, variants, out_dir / "hit_rates.png")
    _write_json(out_dir / "manifest.json", {
        "command": "simulate",
        "scenarios": [s.name for s in scenario_list],
        "variants": list(variants),
        "seeds": [base_seed + s for s in range(seeds)],
        "respondents": respondents,
        "questions": questions,
        "holdouts": holdouts,
        "noise": noise,
        "fast": fast,
    })
    click.echo(f"wrote {out_dir}/hit_rates.csv, summary.csv, hit_rates.png")


def _plot_hit_rates(summary: dict, variants, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    scenarios = sorted({scenario for scenario, _ in summary})
    x = np.arange(len(scenarios))
    width = 0.8 / max(len(variants), 1)
    fig, axes = plt.subplots(1, 2, figsize=(12, 4.5), sharey=True)
    for ax, metric, title in zip(axes,
                                 ("form_hit_rate", "overall_hit_rate"),
                                 ("Form preference", "Overall preference")):
        for j, variant in enumerate(variants):
            vals = [summary.get((s, variant), {}).get(metric, np.nan)
                    for s in scenarios]
            ax.bar(x + (j - len(variants) / 2 + 0.5) * width, vals, width,
                   label=variant)
        ax.set_title(f"{title} hit rate")
        ax.set_xticks(x, scenarios, rotation=45, ha="right", fontsize=8)
        ax.axhline(0.5, color="gray", lw=0.8, ls=":")
        ax.set_ylim(0.4, 1.0)
    axes[0].legend()
    fig.tight_layout()
    _save_figure(fig, path)
    plt.close(fig)


@main.command()
@click.argument("store", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="models.json", show_default=True,
              type=click.Path(dir_okay=False))
@click.option("--hb-iterations", default=20000, show_default=True)
@click.option("--hb-burn-in", default=10000, show_default=True)
@click.option("--hb-thin", default=10, show_default=True)
@_guarded
def estimate(store, out, hb_iterations, hb_burn_in, hb_thin):
    """Re-estimate all models from a persisted event log STORE."""
    try:
        events = read_events(store)
        study, id_map = replay_study(events)
    except (json.JSONDecodeError, ValueError, KeyError, TypeError,
            AttributeError) as exc:
        raise StateError(f"cannot replay event log: {exc}") from None
    report = study.finalize(hb_iterations=hb_iterations,
                            hb_burn_in=hb_burn_in, hb_thin=hb_thin)
    back = {new: old for old, new in id_map.items()}
    respondents = []
    for i, (row, scorer) in enumerate(zip(report.respondents, report.scorers)):
        session = study._sessions[row["session_id"]]
        respondents.append({
            "session_id": back[row["session_id"]],
            "eta": scorer.eta,
            "weights": [float(v) for v in report.weights[i]],
            "form_model": session.form_model.to_dict(),
            "form_hit_rate": row["form_hit_rate"],
            "overall_hit_rate": row["overall_hit_rate"],
        })
    _write_json(Path(out), {
        "study_id": study.config.study_id,
        "seed": study.config.seed,
        "config": study.config.to_dict(),
        "respondents": respondents,
        "validation": {
            "form_hit_rate": report.form_hit_rate,
            "overall_hit_rate": report.overall_hit_rate,
        },
    })
    click.echo(f"estimated {len(respondents)} respondents -> {out}")


def _load_models(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"models file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "respondents" not in doc:
        raise ConfigError("models file must be an estimate output "
                          "(object with a 'respondents' list)")
    return doc


@main.command()
@click.argument("models_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="analysis_out", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--clusters", default=4, show_default=True)
@click.option("--resolution", default=24, show_default=True,
              help="Mesh tessellation density for the best designs.")
@click.option("--seed", default=0, show_default=True)
@click.option("--fast", is_flag=True,
              help="Tiny design-search budgets (smoke runs only).")
@_guarded
def analyze(models_file, out, clusters, resolution, seed, fast):
    """Segment respondents and extract designs and trade-off tables."""
    doc = _load_models(models_file)
    rows = doc["respondents"]
    if len(rows) < clusters:
        raise ConfigError(f"{len(rows)} respondents cannot form "
                          f"{clusters} clusters")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    weights = np.array([r["weights"] for r in rows])
    models = [FormModel.from_dict(r["form_model"]) for r in rows]
    scorers = []
    for i, r in enumerate(rows):
        others = [m for j, m in enumerate(models) if j != i]
        population = FormPopulation(others) if others else None
        scorers.append(MixedFormScorer(models[i], population, r["eta"]))

    triples = importances(weights)
    pw = partworth_table(weights)
    result = cluster(triples, k=clusters, seed=seed)

    wtp = wtp_mpg_summary(pw)
    if not np.isfinite(wtp["median"]):
        wtp["median"] = None
    importance_rows = []
    for i, (r, t) in enumerate(zip(rows, triples)):
        per_kd = per_kilodollar_utility(pw[i])
        importance_rows.append({
            "session_id": r["session_id"],
            "form": round(t.form, 6),
            "price": round(t.price, 6),
            "mpg": round(t.mpg, 6),
            "cluster": int(result.labels[i]),
            "wtp_per_mpg": (round(per_mpg_utility(pw[i]) / per_kd * 1000.0, 2)
                            if per_kd > 1e-12 else None),
        })
    _write_csv(out_dir / "importances.csv", importance_rows)
    _write_csv(out_dir / "clusters.csv", [
        {"cluster": c, "size": int(result.sizes[c]),
         **{f"{dim}_centroid": round(float(result.centroids[c, d]), 6)
            for d, dim in enumerate(("form", "price", "mpg"))}}
        for c in range(clusters)
    ])

    ga = GAConfig(8, 10) if fast else GAConfig(20, 100)
    restarts = 2 if fast else 5
    group_designs = []
    for c in range(clusters):
        members = [scorers[i] for i in np.flatnonzero(result.labels == c)]
        best = optimal_design(group_scorer(members), config=ga,
                              restarts=restarts, seed=seed + c)
        mesh = tessellate(best.design, resolution).to_wire()
        _write_json(out_dir / f"design_cluster{c}.json", {
            "cluster": c,
            "design": [round(float(v), 9) for v in best.design],
            "score": round(float(best.score), 9),
            "degenerate": best.degenerate,
        })
        _write_json(out_dir / f"mesh_cluster{c}.json", mesh)
        group_designs.append((best, mesh))

    rows_per_respondent = []
    for i, scorer in enumerate(scorers):
        fn = group_scorer([scorer])
        own = optimal_design(fn, config=ga, restarts=restarts,
                             seed=seed + 100 + i)
        rows_per_respondent.append(
            wtt(fn, float(weights[i, 0]), pw[i], own.design))
    table = aggregate_wtt(rows_per_respondent, labels=result.labels)
    _write_csv(out_dir / "tradeoffs.csv",
               [{k: (round(v, 6) if isinstance(v, float) else v)
                 for k, v in row.items()} for row in table])
    _write_json(out_dir / "wtp.json", wtp)
    _plot_segments(np.array([t.as_array() for t in triples]),
                   result, out_dir / "segments.png")
    _plot_designs(group_designs, out_dir / "designs.png")
    _write_json(out_dir / "manifest.json", {
        "command": "analyze",
        "models_file": str(models_file),
        "clusters": clusters,
        "resolution": resolution,
        "seed": seed,
        "fast": fast,
        "n_respondents": len(rows),
    })
    click.echo(f"wrote {out_dir}/importances.csv, clusters.csv, "
               f"tradeoffs.csv, wtp.json, design meshes, figures")


def _plot_segments(X, result, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    pairs = ((0, 1, "form weight", "price spread"),
             (0, 2, "form weight", "fuel-economy spread"))
    for ax, (i, j, xl, yl) in zip(axes, pairs):
        for c in range(len(result.sizes)):
            mask = result.labels == c
            ax.scatter(X[mask, i], X[mask, j], s=18, label=f"group {c}")
            ax.scatter(*result.centroids[c, [i, j]], marker="x", s=90,
                       color="black")
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    _save_figure(fig, path)
    plt.close(fig)


def _plot_designs(group_designs, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = len(group_designs)
    fig = plt.figure(figsize=(4 * n, 4))
    for c, (best, mesh) in enumerate(group_designs):
        ax = fig.add_subplot(1, n, c + 1, projection="3d")
        v = np.array(mesh["vertices"])
        f = np.array(mesh["faces"])
        ax.plot_trisurf(v[:, 0], v[:, 1], v[:, 2], triangles=f,
                        color="lightsteelblue", edgecolor="none")
        ax.set_title(f"group {c} (score {best.score:.2f})", fontsize=9)
        ax.set_axis_off()
        ax.view_init(elev=18, azim=-60)
    fig.tight_layout()
    _save_figure(fig, path)
    plt.close(fig)


@main.command("export-mesh")
@click.argument("design_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--resolution", default=24, show_default=True)
@click.option("--out", default="mesh.json", show_default=True,
              type=click.Path(dir_okay=False))
@_guarded
def export_mesh(design_file, resolution, out):
    """Tessellate the design in DESIGN_FILE to a render-ready mesh."""
    try:
        doc = json.loads(Path(design_file).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"design file is not valid JSON: {exc}") from None
    vector = doc.get("design") if isinstance(doc, dict) else doc
    try:
        design = np.asarray(vector, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("design file must hold a 19-number list "
                          "(optionally under a 'design' key)") from None
    try:
        mesh = tessellate(design, resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write_json(Path(out), mesh.to_wire())
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
