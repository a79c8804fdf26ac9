"""detect サブコマンド: ジーニー付き MAP または総当たり ML"""
from typing import Optional
import logging

import click

from api.errors import DomainError
from define_model.models import SCENARIOS, BinaryModelParams
from services.detect import map_detect, map_partial_y, micro_labels, reveal_mask
from services.graph_io import dump_json, load_graph, load_model
from services.ml import ml_bruteforce
from services.sampler import binary_to_general, stream
from services.experiment import REVEAL_STREAM

logger = logging.getLogger(__name__)


@click.command("detect")
@click.option("--graph", "graph_path", type=click.Path(), required=True, help="Graph JSON with true x and y (the genie).")
@click.option("--params", "params_path", type=click.Path(), required=True, help="Model parameters (JSON/YAML).")
@click.option("--scenario", type=click.Choice(SCENARIOS), required=True)
@click.option("--detector", type=click.Choice(["map", "ml_bruteforce"]), default="map", show_default=True)
@click.option("--likelihood", type=click.Choice(["poisson", "binomial"]), default="poisson", show_default=True)
@click.option("--revealed-fraction", type=float, default=None, help="MAP with y revealed on this fraction of nodes.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the reveal mask.")
@click.option("--out", type=click.Path(), default=None, help="DetectionResult JSON path (default: stdout).")
def command(graph_path: str, params_path: str, scenario: str, detector: str, likelihood: str,
            revealed_fraction: Optional[float], seed: int, out: Optional[str]):
    """Run a detector and print a DetectionResult as JSON."""
    graph = load_graph(graph_path)
    params = load_model(params_path)

    if detector == "ml_bruteforce":
        if not isinstance(params, BinaryModelParams):
            raise DomainError("ml_bruteforce needs binary model parameters")
        result = ml_bruteforce(graph, scenario, params)
    else:
        general = binary_to_general(params) if isinstance(params, BinaryModelParams) else params
        if revealed_fraction is not None:
            mask = reveal_mask(graph.n, revealed_fraction, stream(seed, REVEAL_STREAM))
            result = map_partial_y(graph, general, micro_labels(graph, general), mask, likelihood)
        else:
            result = map_detect(graph, general, scenario, likelihood=likelihood)
    logger.info(f"{detector} on n={graph.n}: errors={result.errors}")
    dump_json(result.model_dump(mode="json"), out)
