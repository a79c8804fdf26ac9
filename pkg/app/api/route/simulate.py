"""simulate サブコマンド: モンテカルロ実験を実行して集計 CSV を書く"""
from typing import Optional
import logging

import click

from api.errors import DomainError
from define_model.models import ExperimentConfig
from services.experiment import rows_to_csv, run_experiment
from services.graph_io import load_document, write_text
from services.preset_loader import get_preset_loader

logger = logging.getLogger(__name__)


@click.command("simulate")
@click.option("--config", "config_path", type=click.Path(), default=None, help="ExperimentConfig (JSON/YAML).")
@click.option("--preset", default=None, help="Named preset from experiments.yaml (e.g. table1_sbm_known).")
@click.option("--trials", type=int, default=None, help="Override trials per point.")
@click.option("--n", "n_values", type=int, multiple=True, help="Override node counts (repeatable).")
@click.option("--seed", type=int, default=None, help="Override the base seed; trial t uses seed + t.")
@click.option("--out", type=click.Path(), default=None, help="Override the CSV path.")
@click.option("--journal", type=click.Path(), default=None, help="Override the NDJSON journal path.")
@click.pass_context
def command(ctx: click.Context, config_path: Optional[str], preset: Optional[str], trials: Optional[int],
            n_values, seed: Optional[int], out: Optional[str], journal: Optional[str]):
    """Run the experiment; CSV columns: scenario,n,q0,rho,xi,trials,aep,aep_ci_lo,aep_ci_hi,exact_rate,certified_rate,mean_ms."""
    if (config_path is None) == (preset is None):
        raise DomainError("give exactly one of --config and --preset")
    if preset is not None:
        config = get_preset_loader().get_experiment(preset)
    else:
        config = ExperimentConfig.model_validate(load_document(config_path))

    overrides = {}
    if trials is not None:
        overrides["trials"] = trials
    if n_values:
        overrides["n_values"] = list(n_values)
    if seed is not None:
        overrides["base_seed"] = seed
    if out is not None:
        overrides["output"] = out
    if journal is not None:
        overrides["journal"] = journal
    if overrides:
        config = ExperimentConfig.model_validate({**config.model_dump(), **overrides})

    report = run_experiment(config, threads=ctx.obj.get("threads"))
    if config.output is None:
        write_text(rows_to_csv(report.rows))
    else:
        logger.info(f"Wrote {len(report.rows)} rows to {config.output}")
