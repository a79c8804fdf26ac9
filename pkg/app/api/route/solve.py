"""solve サブコマンド: SDP 緩和を解いて丸め、必要なら双対証明書を確認する"""
from typing import Optional
import logging

import click

from api.errors import DomainError
from define_model.models import SCENARIOS, BinaryModelParams
from services.certificate import certify as certify_solution
from services.detect import align_and_score
from services.graph_io import dump_json, load_graph, load_model
from services.sdp import build_objective, solve

logger = logging.getLogger(__name__)


@click.command("solve")
@click.option("--graph", "graph_path", type=click.Path(), required=True, help="Graph JSON.")
@click.option("--params", "params_path", type=click.Path(), required=True, help="Binary model {q0, q1, q2, q3, rho, xi}.")
@click.option("--scenario", type=click.Choice(SCENARIOS), required=True)
@click.option("--rank", type=int, default=None, help="Columns of the factor V (default ceil(sqrt(2n))).")
@click.option("--max-iter", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--certify", is_flag=True, help="Also check the dual certificate.")
@click.option("--full", is_flag=True, help="Include the factor V in the output.")
@click.option("--out", type=click.Path(), default=None, help="JSON path (default: stdout).")
def command(graph_path: str, params_path: str, scenario: str, rank: Optional[int], max_iter: Optional[int],
            seed: int, certify: bool, full: bool, out: Optional[str]):
    """Print {"solution": SdpSolution, "certificate": CertificateReport | null, "errors": int | null}."""
    graph = load_graph(graph_path)
    params = load_model(params_path)
    if not isinstance(params, BinaryModelParams):
        raise DomainError("solve needs binary model parameters")

    solution = solve(build_objective(graph, params, scenario), rank=rank, max_iter=max_iter,
                     seed=seed, keep_factor=full)
    report = certify_solution(graph, params, scenario, solution.x_hat) if certify else None
    errors = align_and_score(solution.x_hat, graph.x_signs(), "global_sign") if graph.x is not None else None
    dump_json({
        "solution": solution.model_dump(mode="json"),
        "certificate": None if report is None else report.model_dump(mode="json"),
        "errors": errors,
    }, out)
