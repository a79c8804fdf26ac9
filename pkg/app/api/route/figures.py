"""figures サブコマンド: 境界図の CSV と gnuplot スクリプトを書く"""
import logging

import click

from services.figures import FIGURE_PARAMS, reproduce_figures
from services.graph_io import dump_json

logger = logging.getLogger(__name__)


@click.command("figures")
@click.option("--figure", "figures", type=click.Choice([str(k) for k in FIGURE_PARAMS]), multiple=True,
              help="Figure to reproduce (repeatable; default all).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Output directory for figureK.csv and figureK.gp.")
@click.pass_context
def command(ctx: click.Context, figures, out_dir: str):
    """Write figureK.csv (rho,q0_star,scenario) and figureK.gp, then print a JSON summary."""
    selected = [int(f) for f in figures] if figures else sorted(FIGURE_PARAMS)
    reports = reproduce_figures(selected, out_dir, threads=ctx.obj.get("threads"))
    dump_json([report.model_dump(mode="json") for report in reports])
