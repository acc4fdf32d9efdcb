"""
Seeded ensemble audits of the operator inequalities and identities.

Each audit is a pair of functions: draw() samples the input matrices of one
instance from its own generator, check() evaluates the property on those
inputs. Failing instances are dumped in replay files that feed check()
again without the generator.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import ARAKI_SCAN_POINTS, AUDIT_TOLERANCES, FD_STEP, MAX_THREADS, REPLAY_DIR
from ensemble import (
    instance_rng,
    random_araki_target,
    random_centered_perturbation,
    random_hermitian,
    random_nearby_state,
    random_perturbation,
    random_state,
)
from errors import ManifoldError, MatrixFormatError
from expansional import (
    dyson_partial_sums,
    form_bound_check,
    perturbed_state,
    perturbed_weight,
    relative_hamiltonian,
    sandwich_bounds,
)
from geometry import (
    bkm_hessian_check,
    duality_pairing_check,
    hood_entropy_envelope_check,
    hood_norm_equivalence,
    kullback_inequality_check,
    symmetrized_entropy_identity,
    trace_norm_bound_check,
)
from interchange import dump_matrix, parse_matrix_document
from models import Perturbation, RunConfig
from norms import araki_norm, araki_norm_scan, bkm_inner, bkm_inner_quadrature, bkm_norm, operator_norm
from spectral import (
    DensityState,
    NearbyCertificate,
    loewner_margin,
    p_nearby_check,
    p_nearby_constant,
)
from utils.checksum import checksum_document


# Configure logger
logger = logging.getLogger(__name__)

Inputs = Dict[str, np.ndarray]
Params = Dict[str, float]
Verdict = Tuple[float, float, bool]

FORM_BOUND_EXPONENTS = (0.0, 0.25, 0.5)
MIXTURE_WEIGHTS = tuple(round(0.1 * k, 1) for k in range(1, 10))
# Certificates are issued slightly above the minimal constant
CERTIFICATE_SLACK = 1e-9


@dataclass(frozen=True)
class Audit:
    name: str
    draw: Callable[[np.random.Generator, int], Tuple[Inputs, Params]]
    check: Callable[[Inputs, Params, float, int], Verdict]


@dataclass(frozen=True)
class AuditRecord:
    """Verdict of one audit on one instance."""

    audit: str
    index: int
    dim: int
    lhs: float
    rhs: float
    holds: bool
    inputs: Inputs = field(default_factory=dict, repr=False, compare=False)
    params: Params = field(default_factory=dict, repr=False, compare=False)
    error: Optional[str] = field(default=None, compare=False)

    def as_row(self) -> dict:
        return {
            "audit": self.audit,
            "index": self.index,
            "dim": self.dim,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
        }


@dataclass
class AuditReport:
    config: RunConfig
    records: List[AuditRecord]
    replay_paths: List[Path] = field(default_factory=list)

    @property
    def failures(self) -> List[AuditRecord]:
        return [r for r in self.records if not r.holds]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary_rows(self) -> List[dict]:
        """Pass counts per audit, in registry order."""
        rows = []
        for name in AUDITS:
            records = [r for r in self.records if r.audit == name]
            if not records:
                continue
            failed = sum(not r.holds for r in records)
            rows.append({
                "audit": name,
                "instances": len(records),
                "passed": len(records) - failed,
                "failed": failed,
            })
        return rows

    def detail_rows(self) -> List[dict]:
        return [r.as_row() for r in self.records]


def _certificate(C: float, p: float) -> NearbyCertificate:
    return NearbyCertificate(max(C * (1.0 + CERTIFICATE_SLACK), 1.0 + CERTIFICATE_SLACK), p)


def _state_and_perturbation(rng: np.random.Generator, n: int) -> Tuple[Inputs, Params]:
    rho = random_state(rng, n)
    target = random_araki_target(rng)
    X = random_perturbation(rng, rho, target)
    return {"rho": rho.matrix, "X": X.matrix}, {"target": target}


def _state_and_centered(rng: np.random.Generator, n: int) -> Tuple[Inputs, Params]:
    rho = random_state(rng, n)
    target = random_araki_target(rng)
    pert = random_centered_perturbation(rng, rho, target)
    return {"rho": rho.matrix, "X": pert.X.matrix}, {"target": target}


def _nearby_pair(rng: np.random.Generator, n: int) -> Tuple[Inputs, Params]:
    rho = random_state(rng, n)
    target = random_araki_target(rng)
    return {"rho": rho.matrix, "sigma": random_nearby_state(rng, rho, target).matrix}, {"target": target}


def _pair_of_perturbations(rng: np.random.Generator, n: int) -> Tuple[Inputs, Params]:
    rho = random_state(rng, n)
    X = random_perturbation(rng, rho, random_araki_target(rng))
    Y = random_perturbation(rng, rho, random_araki_target(rng))
    return {"rho": rho.matrix, "X": X.matrix, "Y": Y.matrix}, {}


def _check_sandwich(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    bounds = sandwich_bounds(rho, inputs["X"], tol)
    rho_X = perturbed_weight(Perturbation(rho, inputs["X"])).matrix
    lower = bounds.lower * rho.matrix
    upper = bounds.upper * rho.matrix
    scale = max(operator_norm(upper), operator_norm(rho_X), 1.0)
    # Worst relative violation of either inequality, for the report
    deficit = -min(loewner_margin(lower, rho_X), loewner_margin(rho_X, upper)) / scale
    return deficit, tol, bounds.holds


def _check_form_bound(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho, sigma = DensityState(inputs["rho"]), DensityState(inputs["sigma"])
    X_norm = operator_norm(relative_hamiltonian(rho, sigma))
    log_C = math.log(p_nearby_constant(rho, sigma, 0.0))

    holds = X_norm <= log_C + tol
    for p in FORM_BOUND_EXPONENTS:
        cert = _certificate(p_nearby_constant(rho, sigma, p), p)
        holds = holds and form_bound_check(rho, sigma, cert, tol)
    return X_norm, log_C + tol, holds


def _check_araki_scan(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    exact = araki_norm(inputs["X"], rho)
    scanned = araki_norm_scan(inputs["X"], rho, ARAKI_SCAN_POINTS)
    return exact, scanned, abs(exact - scanned) <= tol * exact


def _check_bkm_quadrature(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    closed = bkm_inner(inputs["X"], inputs["Y"], rho)
    quadrature = bkm_inner_quadrature(inputs["X"], inputs["Y"], rho)
    scale = max(abs(closed), bkm_norm(inputs["X"], rho) * bkm_norm(inputs["Y"], rho))
    return closed, quadrature, abs(closed - quadrature) <= tol * scale


def _check_norm_chain(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    araki = araki_norm(inputs["X"], rho)
    largest = max(operator_norm(inputs["X"]), bkm_norm(inputs["X"], rho))
    return largest, araki, largest <= araki * (1.0 + tol)


def _check_dyson_series(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    exact = perturbed_weight(Perturbation(rho, inputs["X"])).matrix
    results = dyson_partial_sums(rho, inputs["X"], order)
    scale = rho.operator.norm * math.exp(results[0].araki_M)
    excess = max(
        operator_norm(r.partial_sum.matrix - exact) - r.remainder_bound for r in results
    )
    return excess, tol * scale, excess <= tol * scale


def _check_duality(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    result = duality_pairing_check(DensityState(inputs["rho"]), inputs["X"], inputs["Y"], tol)
    return result.lhs, result.rhs, result.holds


def _check_hessian(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    result = bkm_hessian_check(DensityState(inputs["rho"]), inputs["X"], FD_STEP, tol)
    return result.fd_value, result.closed_form, result.holds


def _check_trace_norm_bound(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    result = trace_norm_bound_check(rho, Perturbation(rho, inputs["X"]), tol)
    return result.lhs, result.rhs, result.holds


def _check_kullback(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    result = kullback_inequality_check(DensityState(inputs["rho"]), DensityState(inputs["sigma"]), tol)
    return result.lhs, result.rhs, result.holds


def _check_entropy_identity(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    result = symmetrized_entropy_identity(rho, Perturbation(rho, inputs["X"]), tol)
    return result.lhs, result.rhs, result.holds


def _draw_mixture(rng: np.random.Generator, n: int) -> Tuple[Inputs, Params]:
    rho = random_state(rng, n)
    sigma1 = random_nearby_state(rng, rho, random_araki_target(rng))
    sigma2 = random_nearby_state(rng, rho, random_araki_target(rng))
    p = float(rng.choice(FORM_BOUND_EXPONENTS))
    return {"rho": rho.matrix, "sigma1": sigma1.matrix, "sigma2": sigma2.matrix}, {"p": p}


def _check_mixture_closure(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    sigma1, sigma2 = DensityState(inputs["sigma1"]), DensityState(inputs["sigma2"])
    p = params["p"]
    cert = _certificate(max(p_nearby_constant(rho, sigma1, p), p_nearby_constant(rho, sigma2, p)), p)

    failures = 0
    for lam in MIXTURE_WEIGHTS:
        mixture = DensityState(lam * sigma1.matrix + (1.0 - lam) * sigma2.matrix)
        failures += not p_nearby_check(rho, mixture, cert, tol)
    return float(failures), 0.0, failures == 0


def _draw_hood_norms(rng: np.random.Generator, n: int) -> Tuple[Inputs, Params]:
    rho0 = random_state(rng, n)
    rho1 = random_nearby_state(rng, rho0, random_araki_target(rng))
    return {"rho0": rho0.matrix, "rho1": rho1.matrix, "X": random_hermitian(rng, n).matrix}, {}


def _check_hood_norms(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    result = hood_norm_equivalence(DensityState(inputs["rho0"]), DensityState(inputs["rho1"]), inputs["X"], tol=tol)
    return result.ratio, result.K, result.holds


def _check_hood_entropy(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    result = hood_entropy_envelope_check(rho, inputs["X"], params["target"])
    return result.lhs, result.rhs, result.holds


def _draw_free_energy(rng: np.random.Generator, n: int) -> Tuple[Inputs, Params]:
    inputs, _ = _pair_of_perturbations(rng, n)
    return inputs, {"lam": float(rng.uniform(0.0, 1.0))}


def _check_free_energy(inputs: Inputs, params: Params, tol: float, order: int) -> Verdict:
    rho = DensityState(inputs["rho"])
    lam = params["lam"]

    def psi(X: np.ndarray) -> float:
        return perturbed_state(Perturbation(rho, X))[1].psi

    mixed = psi(lam * inputs["X"] + (1.0 - lam) * inputs["Y"])
    chord = lam * psi(inputs["X"]) + (1.0 - lam) * psi(inputs["Y"])
    return mixed, chord, mixed <= chord + tol * max(1.0, abs(chord))


# Registry order fixes the per-instance generator streams and the report order
AUDITS: Dict[str, Audit] = {
    audit.name: audit
    for audit in (
        Audit("sandwich", _state_and_perturbation, _check_sandwich),
        Audit("form-bound", _nearby_pair, _check_form_bound),
        Audit("araki-scan", _state_and_perturbation, _check_araki_scan),
        Audit("bkm-quadrature", _pair_of_perturbations, _check_bkm_quadrature),
        Audit("norm-chain", _state_and_perturbation, _check_norm_chain),
        Audit("dyson-series", _state_and_perturbation, _check_dyson_series),
        Audit("duality", _pair_of_perturbations, _check_duality),
        Audit("hessian", _state_and_centered, _check_hessian),
        Audit("trace-norm-bound", _state_and_centered, _check_trace_norm_bound),
        Audit("kullback", _nearby_pair, _check_kullback),
        Audit("entropy-identity", _state_and_perturbation, _check_entropy_identity),
        Audit("mixture-closure", _draw_mixture, _check_mixture_closure),
        Audit("hood-norms", _draw_hood_norms, _check_hood_norms),
        Audit("hood-entropy", _state_and_perturbation, _check_hood_entropy),
        Audit("free-energy", _draw_free_energy, _check_free_energy),
    )
}


def check_instance(
    name: str,
    inputs: Inputs,
    params: Params,
    tol: float,
    order: int,
) -> Tuple[Verdict, Optional[str]]:
    """
    Evaluate one audit on explicit inputs.

    Any exception raised by the check counts as a failure; its message is
    returned next to the verdict.
    """
    try:
        lhs, rhs, holds = AUDITS[name].check(inputs, params, tol, order)
    except Exception as e:
        message = f"{type(e).__name__}: {e}"
        logger.error(f"Audit {name} raised {message}", exc_info=not isinstance(e, ManifoldError))
        return (math.nan, math.nan, False), message
    return (float(lhs), float(rhs), bool(holds)), None


class AuditEngine:
    """Runs the registered audits over a seeded ensemble."""

    def __init__(
        self,
        config: RunConfig,
        replay_dir: Path = REPLAY_DIR,
        audits: Optional[Sequence[str]] = None,
        progress: Optional[Callable[[int, int], None]] = None,
    ):
        """
        Initialize the audit engine.

        Args:
            config: Seed, tolerance, dimensions, instance count and series order
            replay_dir: Directory receiving dumps of failing instances
            audits: Subset of audit names to run (all if None)
            progress: Optional callback(done, total) invoked after each instance
        """
        self.config = config
        self.replay_dir = Path(replay_dir)
        self.audits = list(AUDITS) if audits is None else list(audits)
        self.progress = progress

        unknown = [name for name in self.audits if name not in AUDITS]
        if unknown:
            raise ValueError(f"Unknown audits: {unknown}")

    def tolerance(self, name: str) -> float:
        return self.config.tol if self.config.tol is not None else AUDIT_TOLERANCES[name]

    def run(self) -> AuditReport:
        """
        Audit every instance; instance i has dimension dims[i % len(dims)].

        Returns:
            AuditReport with records in (instance, audit) order
        """
        total = self.config.instances
        records: List[AuditRecord] = []

        with ThreadPoolExecutor(max_workers=MAX_THREADS) as executor:
            for done, instance_records in enumerate(executor.map(self._run_instance, range(total)), 1):
                records.extend(instance_records)
                if self.progress is not None:
                    self.progress(done, total)

        report = AuditReport(self.config, records)
        for record in report.failures:
            report.replay_paths.append(self._dump_replay(record))
        if report.failures:
            logger.warning(f"{len(report.failures)} audit failures; replay dumps in {self.replay_dir}")
        return report

    def _run_instance(self, index: int) -> List[AuditRecord]:
        dims = self.config.dims
        n = dims[index % len(dims)]
        records = []
        for stream, name in enumerate(AUDITS):
            if name not in self.audits:
                continue
            rng = instance_rng(self.config.seed, index, stream)
            try:
                inputs, params = AUDITS[name].draw(rng, n)
            except Exception as e:
                message = f"draw failed: {type(e).__name__}: {e}"
                logger.error(f"Audit {name} instance {index}: {message}", exc_info=True)
                records.append(AuditRecord(name, index, n, math.nan, math.nan, False, error=message))
                continue
            (lhs, rhs, holds), error = check_instance(
                name, inputs, params, self.tolerance(name), self.config.order
            )
            records.append(AuditRecord(name, index, n, lhs, rhs, holds, inputs, params, error))
        return records

    def _dump_replay(self, record: AuditRecord) -> Path:
        """Write a failing instance; the file name depends only on seed, audit and index."""
        self.replay_dir.mkdir(parents=True, exist_ok=True)
        inputs = {key: dump_matrix(value) for key, value in record.inputs.items()}
        document = {
            "audit": record.audit,
            "seed": self.config.seed,
            "index": record.index,
            "dim": record.dim,
            "tol": self.tolerance(record.audit),
            "order": self.config.order,
            "params": record.params,
            "inputs": inputs,
            "inputs_sha256": checksum_document(inputs),
            "verdict": {"lhs": _finite_or_none(record.lhs), "rhs": _finite_or_none(record.rhs), "holds": record.holds},
            "error": record.error,
        }
        path = self.replay_dir / f"{record.audit}-seed{self.config.seed}-i{record.index}.json"
        with open(path, "w") as f:
            json.dump(document, f, indent=2)
        logger.warning(f"Audit {record.audit} failed on instance {record.index} (n={record.dim}); replay: {path}")
        return path


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def replay_instance(path: Union[str, Path], tol: Optional[float] = None) -> AuditRecord:
    """
    Re-run the check stored in a replay dump.

    Args:
        path: Replay file written by AuditEngine
        tol: Override of the stored tolerance

    Raises:
        MatrixFormatError: If the dump is malformed or its inputs were altered
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text())
        name = document["audit"]
        raw_inputs = document["inputs"]
        params = {k: float(v) for k, v in document.get("params", {}).items()}
        stored_tol = float(document["tol"])
        order = int(document["order"])
        index, dim = int(document["index"]), int(document["dim"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise MatrixFormatError(f"{path}: not a replay dump: {e}") from e

    if name not in AUDITS:
        raise MatrixFormatError(f"{path}: unknown audit {name!r}")
    if checksum_document(raw_inputs) != document.get("inputs_sha256"):
        raise MatrixFormatError(f"{path}: inputs do not match their recorded digest")

    inputs = {
        key: parse_matrix_document(json.dumps(value), source=f"{path}:{key}").matrix
        for key, value in raw_inputs.items()
    }
    (lhs, rhs, holds), error = check_instance(name, inputs, params, tol if tol is not None else stored_tol, order)
    return AuditRecord(name, index, dim, lhs, rhs, holds, inputs, params, error)
