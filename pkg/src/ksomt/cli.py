"""Command-line interface.

Subcommands: ``run`` (full test pipeline), ``simulate`` (synthetic data
files), ``interpret`` (decision summary from an existing report).
"""

from __future__ import annotations

import json
import sys

import click

from .curves import save_curves
from .errors import KsomtError
from .report import RunConfig, interpret, run
from .synthetic import ScenarioSpec, generate


def _fail(exc: KsomtError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(exc.exit_code)


def _parse_label_column(value: str):
    try:
        return int(value)
    except ValueError:
        return value


@click.group()
@click.version_option()
def main():
    """K-sample equality-of-distribution test for functional data."""


@main.command("run")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--label-column", default="0", show_default=True,
              help="Group-label column, by header name or 0-based index.")
@click.option("--stat", "statistic", default="cf-cvm", show_default=True,
              type=click.Choice(["cf-cvm", "cov-sqrt"]))
@click.option("--v-matrix", default="inv-overall", show_default=True,
              help="identity | inv-overall | inv-pooled | custom:PATH")
@click.option("--rank", default=9, show_default=True,
              help="Eigenvalues kept when inverting the covariance.")
@click.option("--pairs", default="all", show_default=True,
              help="all | first-vs-rest | custom:1-2,1-3,...")
@click.option("-B", "--replicas", "B", default=999, show_default=True,
              help="Permutation replica count; B+1 must equal n_R*n_S.")
@click.option("--n-r", "n_R", default=40, show_default=True,
              help="Radii in the reference grid.")
@click.option("--n-s", "n_S", default=25, show_default=True,
              help="Directions in the reference grid.")
@click.option("--seed", default=1, show_default=True)
@click.option("--quadrature", default="trapezoid", show_default=True,
              type=click.Choice(["trapezoid", "riemann-left"]))
@click.option("--log-cir", "apply_log_cir", is_flag=True,
              help="Treat rows as prices and transform to log cumulative returns.")
@click.option("--alpha", default=0.05, show_default=True)
@click.option("-o", "--output", "output_path", default="report.json",
              show_default=True, type=click.Path(dir_okay=False))
@click.option("--emit-points", is_flag=True,
              help="Write cloud.csv/grid.csv/map.csv next to the report.")
@click.option("--points-dir", default=None, type=click.Path(file_okay=False))
@click.option("--figures", "figures_dir", default=None,
              type=click.Path(file_okay=False),
              help="Render curves/cloud/transport figures into this directory.")
def run_command(input_path, label_column, statistic, v_matrix, rank, pairs, B,
                n_R, n_S, seed, quadrature, apply_log_cir, alpha, output_path,
                emit_points, points_dir, figures_dir):
    """Run the full test on a delimited curve table and write a JSON report."""
    try:
        config = RunConfig(
            input_path=input_path,
            label_column=_parse_label_column(label_column),
            statistic=statistic,
            v_matrix=v_matrix,
            rank=rank,
            pairs=pairs,
            B=B,
            n_R=n_R,
            n_S=n_S,
            seed=seed,
            quadrature=quadrature,
            apply_log_cir=apply_log_cir,
            alpha=alpha,
            output_path=output_path,
            emit_points=emit_points,
            points_dir=points_dir,
            figures_dir=figures_dir,
        )
        report = run(config)
    except KsomtError as exc:
        _fail(exc)
    with open(output_path, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")

    summary = interpret(report, alpha)
    click.echo(f"report written to {output_path}")
    if report.degenerate:
        click.echo("warning: all statistics are zero (degenerate data)")
    click.echo(f"method: {report.method}")
    click.echo(f"p_hat = {report.p_hat:.6g}")
    if report.p_tilde is not None:
        click.echo(f"p_tilde = {report.p_tilde:.6g}")
        click.echo(f"nonconformity = {report.nonconformity:.6g}")
    verdict = "rejected" if summary.reject else "not rejected"
    click.echo(f"H0 {verdict} at alpha = {alpha}")
    if summary.note:
        click.echo(f"note: {summary.note}")
    for pair, contrib in summary.ranked_pairs:
        labels = report.group_labels
        name = f"{labels[pair[0] - 1]} vs {labels[pair[1] - 1]}"
        click.echo(f"  pair {pair[0]}-{pair[1]} ({name}): D^2 = {contrib:.4f}")


@main.command("simulate")
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--sizes", default="20,20,20", show_default=True,
              help="Comma-separated group sizes.")
@click.option("-J", "--points", "J", default=24, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--mean-shift", default=None,
              help="Comma-separated drift delta per group.")
@click.option("--scale", default=None,
              help="Comma-separated scale sigma per group.")
def simulate_command(output_path, sizes, J, seed, mean_shift, scale):
    """Write a synthetic Brownian dataset in the run-command input format."""
    try:
        sizes_t = tuple(int(s) for s in sizes.split(","))
        shift = tuple(float(v) for v in mean_shift.split(",")) if mean_shift else None
        scale_t = tuple(float(v) for v in scale.split(",")) if scale else None
        spec = ScenarioSpec(sizes=sizes_t, J=J, seed=seed,
                            mean_shift=shift, scale=scale_t)
        dataset = generate(spec)
        save_curves(dataset, output_path)
    except KsomtError as exc:
        _fail(exc)
    click.echo(f"wrote {dataset.N} curves ({dataset.K} groups) to {output_path}")


@main.command("interpret")
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", default=0.05, show_default=True)
def interpret_command(report_path, alpha):
    """Print the rejection decision and ranked pair contributions."""
    with open(report_path) as fh:
        data = json.load(fh)
    try:
        summary = interpret(data, alpha)
    except KsomtError as exc:
        _fail(exc)
    verdict = "rejected" if summary.reject else "not rejected"
    click.echo(f"H0 {verdict} at alpha = {alpha} "
               f"(threshold (1-alpha)^2 = {summary.threshold:.6g})")
    if summary.note:
        click.echo(f"note: {summary.note}")
    for pair, contrib in summary.ranked_pairs:
        click.echo(f"  pair {pair[0]}-{pair[1]}: D^2 = {contrib:.4f}")


if __name__ == "__main__":
    main()
