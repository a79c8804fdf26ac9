"""region サブコマンド: 二値モデルの厳密復元境界 (ρ, q0*) を CSV で出力する"""
from typing import Optional
import logging

import click

from api.errors import DomainError
from define_model.models import SCENARIOS, BinaryModelParams
from services.figures import default_rho_grid
from services.graph_io import load_model, write_text
from services.thresholds import region_csv, region_sweep

logger = logging.getLogger(__name__)


@click.command("region")
@click.option("--params", "params_path", type=click.Path(), required=True, help="Binary model {q0, q1, q2, q3, rho, xi}; q0 and rho are swept.")
@click.option("--scenario", type=click.Choice(SCENARIOS), required=True)
@click.option("--rho", "rhos", type=float, multiple=True, help="Grid point (repeatable; default 0.02..0.98 step 0.02).")
@click.option("--q0-min", type=float, default=None, help="Lower q0 bound (default max(q1, q2, q3)).")
@click.option("--q0-max", type=float, default=1000.0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="CSV path rho,q0_star,scenario (default: stdout).")
@click.pass_context
def command(ctx: click.Context, params_path: str, scenario: str, rhos, q0_min: Optional[float],
            q0_max: float, out: Optional[str]):
    """Bisect q0 for each rho until the threshold quantity crosses 1."""
    base = load_model(params_path)
    if not isinstance(base, BinaryModelParams):
        raise DomainError("region needs binary model parameters")
    lo = max(base.q1, base.q2, base.q3) if q0_min is None else q0_min
    grid = list(rhos) if rhos else default_rho_grid()
    result = region_sweep(base, scenario, grid, (lo, q0_max), ctx.obj.get("threads"))
    write_text(region_csv(result), out)
