"""
CLI entry point for the quantum information manifold toolkit.
Reads matrices in the interchange format and dispatches to the norm,
expansional, geometry and audit layers.
"""
import functools
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Tuple

import click

from audit import AuditEngine, replay_instance
from config import (
    DEFAULT_DIMS,
    DEFAULT_FORMAT,
    DEFAULT_INSTANCES,
    DEFAULT_ORDER,
    DEFAULT_SEED,
    LOG_FILE,
    OUTPUT_FORMATS,
    REPLAY_DIR,
)
from errors import ManifoldError
from expansional import (
    center,
    dyson_series,
    form_bound_check,
    inverse_sandwich_series,
    perturbed_state,
    relative_hamiltonian,
)
from geometry import (
    geodesic,
    kullback_inequality_check,
    relative_entropy,
    separation_demo,
    separation_monotone,
)
from interchange import dump_expansion, dump_matrix, load_matrix
from models import GeodesicSpec, Perturbation, RunConfig
from norms import norm_report, operator_norm, trace_norm
from spectral import (
    DensityState,
    FiniteWeight,
    NearbyCertificate,
    loewner_margin,
    nearby_constant,
    p_nearby_check,
    p_nearby_constant,
)
from utils.checksum import checksum_text
from utils.progress import display_progress
from utils.report import render_mapping, render_report


logger = logging.getLogger(__name__)

# Exit codes
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def setup_logging(log_level: str, log_file: Optional[Path] = None) -> None:
    """Configure logging with the specified level; log lines never go to stdout."""
    log_file = log_file if log_file is not None else LOG_FILE
    level = getattr(logging, log_level.upper(), logging.WARNING)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )
    logger.debug(f"Logging initialized at level {log_level}")


def _parse_dims(ctx, param, value: str) -> Tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not dims:
        raise click.BadParameter("at least one dimension is required")
    return dims


def input_errors(command):
    """Report ManifoldError on stderr and exit 2 before anything reaches stdout."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ManifoldError as e:
            logger.debug(f"{command.__name__} rejected its input", exc_info=True)
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_USAGE)

    return wrapper


def _state(path: Path) -> DensityState:
    return DensityState(load_matrix(path))


def _weight(path: Path) -> FiniteWeight:
    return FiniteWeight(load_matrix(path))


@click.group()
@click.option('--seed', type=int, default=DEFAULT_SEED, show_default=True, help='Seed of the random ensemble')
@click.option('--tol', type=float, default=None, help='Uniform tolerance (per-check defaults if omitted)')
@click.option('--format', 'fmt', type=click.Choice(OUTPUT_FORMATS), default=DEFAULT_FORMAT, show_default=True)
@click.option('--order', type=int, default=DEFAULT_ORDER, show_default=True, help='Series truncation order')
@click.option('--dims', default=",".join(map(str, DEFAULT_DIMS)), show_default=True, callback=_parse_dims, help='Audit dimensions')
@click.option('--instances', type=int, default=DEFAULT_INSTANCES, show_default=True, help='Audit instances')
@click.option(
    '--log-level',
    type=click.Choice(['debug', 'info', 'warning', 'error', 'critical']),
    default='warning',
    show_default=True,
)
@click.pass_context
def qimanifold(ctx, seed, tol, fmt, order, dims, instances, log_level):
    """Finite-dimensional quantum information manifold toolkit."""
    setup_logging(log_level)
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, tol=tol, fmt=fmt, order=order, dims=dims, instances=instances)


@qimanifold.command()
@click.argument('matrix', type=click.Path(path_type=Path))
@click.argument('base', type=click.Path(path_type=Path))
@click.option('--epsilon', type=float, default=0.5, show_default=True, help='Epsilon-norm exponent in [0, 1/2]')
@click.option('--p', 'p', type=float, default=2.0, show_default=True, help='Schatten exponent')
@click.pass_obj
@input_errors
def norms(obj, matrix, base, epsilon, p):
    """All norms of MATRIX relative to the weight BASE."""
    X = load_matrix(matrix)
    weight = _weight(base)
    if abs(weight.trace() - 1.0) <= 1e-10:
        weight = DensityState(weight.operator)
    report = norm_report(X, weight, epsilon=epsilon, p=p)
    click.echo(render_mapping(report.as_text_map(), obj["fmt"]), nl=False)


@qimanifold.command()
@click.argument('rho', type=click.Path(path_type=Path))
@click.argument('sigma', type=click.Path(path_type=Path))
@click.option('--p', 'p', type=float, default=0.0, show_default=True, help='Exponent of the p-nearby relation')
@click.pass_obj
@input_errors
def nearby(obj, rho, sigma, p):
    """Nearby constants of SIGMA relative to RHO and the form-bound verification."""
    rho_w, sigma_w = _weight(rho), _weight(sigma)
    C0 = nearby_constant(rho_w, sigma_w)
    Cp = p_nearby_constant(rho_w, sigma_w, p)
    cert = NearbyCertificate(max(Cp * (1.0 + 1e-9), 1.0 + 1e-9), p)
    witnessed = p_nearby_check(rho_w, sigma_w, cert)
    # Smallest eigenvalue over both sides of C^-1 rho^(1+p) <= sigma <= C rho^(1-p)
    margin = min(
        loewner_margin(rho_w.power_matrix(1 + p) / cert.C, sigma_w.matrix),
        loewner_margin(sigma_w.matrix, rho_w.power_matrix(1 - p) * cert.C),
    )

    X = relative_hamiltonian(rho_w, sigma_w)
    mapping = {
        "nearby_constant": C0,
        "log_nearby_constant": math.log(C0),
        "relative_hamiltonian_norm": operator_norm(X),
        "p": p,
        "p_nearby_constant": Cp,
        "certificate_C": cert.C,
        "p_nearby": witnessed,
        "loewner_margin": margin,
        "form_bound": form_bound_check(rho_w, sigma_w, cert) if witnessed else False,
    }
    click.echo(render_mapping(mapping, obj["fmt"]), nl=False)


@qimanifold.command()
@click.argument('base', type=click.Path(path_type=Path))
@click.argument('matrix', type=click.Path(path_type=Path))
@click.option('--center', 'center_first', is_flag=True, help='Subtract the state expectation of MATRIX first')
@click.pass_obj
@input_errors
def perturb(obj, base, matrix, center_first):
    """Perturbed state exp(log BASE - MATRIX - Psi) as JSON with its free energy."""
    pert = Perturbation(_weight(base), load_matrix(matrix))
    if center_first:
        pert = center(pert)
    state, free_energy = perturbed_state(pert)
    document = {"psi": free_energy.psi, "z": free_energy.z, "state": dump_matrix(state)}
    click.echo(json.dumps(document, indent=2))


@qimanifold.command()
@click.argument('base', type=click.Path(path_type=Path))
@click.argument('matrix', type=click.Path(path_type=Path))
@click.option('--inverse', is_flag=True, help='Expand BASE^1/2 rho_X^-1 BASE^1/2 instead of rho_X')
@click.pass_obj
@input_errors
def expand(obj, base, matrix, inverse):
    """Truncated expansional series of the perturbed weight (order from --order)."""
    weight, X = _weight(base), load_matrix(matrix)
    series = inverse_sandwich_series if inverse else dyson_series
    click.echo(json.dumps(dump_expansion(series(weight, X, obj["order"])), indent=2))


@qimanifold.command()
@click.argument('rho', type=click.Path(path_type=Path))
@click.argument('sigma', type=click.Path(path_type=Path))
@click.pass_obj
@input_errors
def entropy(obj, rho, sigma):
    """Relative entropies of two faithful states and the Kullback inequality."""
    rho_s, sigma_s = _state(rho), _state(sigma)
    kullback = kullback_inequality_check(rho_s, sigma_s)
    forward = relative_entropy(rho_s, sigma_s)
    backward = relative_entropy(sigma_s, rho_s)
    mapping = {
        "relative_entropy": forward,
        "reverse_relative_entropy": backward,
        "symmetrized": forward + backward,
        "trace_distance": trace_norm(rho_s.matrix - sigma_s.matrix),
        "kullback_lhs": kullback.lhs,
        "kullback_holds": kullback.holds,
    }
    click.echo(render_mapping(mapping, obj["fmt"]), nl=False)


@qimanifold.command('geodesic')
@click.argument('rho0', type=click.Path(path_type=Path))
@click.argument('rho1', type=click.Path(path_type=Path))
@click.option('--connection', type=click.Choice(['plus', 'minus']), required=True)
@click.option('--lam', type=float, required=True, help='Curve parameter in [0, 1]')
@click.pass_obj
@input_errors
def geodesic_command(obj, rho0, rho1, connection, lam):
    """Point on the plus or minus geodesic from RHO0 to RHO1, as a matrix document."""
    state = geodesic(GeodesicSpec(_state(rho0), _state(rho1), connection, lam))
    click.echo(json.dumps(dump_matrix(state), indent=2))


@qimanifold.command('audit')
@click.option('--replay', type=click.Path(path_type=Path), default=None, help='Re-run a dumped failing instance')
@click.option('--details', is_flag=True, help='One row per instance and audit instead of pass counts')
@click.option('--progress', is_flag=True, help='Show a progress bar on stderr')
@click.pass_obj
@input_errors
def audit_command(obj, replay, details, progress):
    """Run every theorem audit over a seeded random ensemble."""
    if replay is not None:
        record = replay_instance(replay, tol=obj["tol"])
        click.echo(render_mapping(record.as_row(), obj["fmt"]), nl=False)
        sys.exit(EXIT_OK if record.holds else EXIT_FAILED)

    config = RunConfig(
        seed=obj["seed"],
        tol=obj["tol"],
        dims=obj["dims"],
        instances=obj["instances"],
        order=obj["order"],
        format=obj["fmt"],
    )
    callback = (lambda done, total: display_progress(done, total, "Auditing")) if progress else None
    report = AuditEngine(config, replay_dir=REPLAY_DIR, progress=callback).run()

    rows = report.detail_rows() if details else report.summary_rows()
    body = render_report(rows, config.format)
    footer = {"status": "pass" if report.passed else "fail", "digest": checksum_text(body)}
    click.echo(render_report(rows, config.format, footer), nl=False)
    sys.exit(EXIT_OK if report.passed else EXIT_FAILED)


@qimanifold.command()
@click.option('--nmax', type=int, default=1024, show_default=True, help='Largest dimension (powers of two from 4)')
@click.pass_obj
@input_errors
def separation(obj, nmax):
    """Trace distance against relative entropy for a shrinking mixture."""
    rows = separation_demo(nmax)
    monotone = separation_monotone(rows)
    table = [
        {"n": r.n, "delta": r.delta, "trace_dist": r.trace_dist, "rel_entropy": r.rel_entropy}
        for r in rows
    ]
    click.echo(render_report(table, obj["fmt"], {"monotone": monotone}), nl=False)
    sys.exit(EXIT_OK if monotone else EXIT_FAILED)


def main():
    """Main entry point."""
    qimanifold(obj={}, prog_name="qimanifold")


if __name__ == "__main__":
    main()
