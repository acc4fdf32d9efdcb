"""
Matrix interchange documents.

A document is a JSON object with fields "n" (integer), "re" (n x n reals)
and optionally "im" (n x n reals, default zero).
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from config import HERMITIAN_TOL
from errors import MatrixFormatError, NonHermitianError
from models import ExpansionResult
from spectral import HermitianOperator, as_matrix


# Configure logger
logger = logging.getLogger(__name__)


def _parse_grid(value: Any, field: str, n: int, source: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise MatrixFormatError(f"{source}: field '{field}' must be a list of {n} rows")
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            raise MatrixFormatError(f"{source}: field '{field}' row {i} must hold {n} numbers")
        for j, entry in enumerate(row):
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                raise MatrixFormatError(f"{source}: field '{field}[{i}][{j}]' is not a number: {entry!r}")
    grid = np.array(value, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise MatrixFormatError(f"{source}: field '{field}' has non-finite entries")
    return grid


def parse_matrix_document(text: str, source: str = "<string>") -> HermitianOperator:
    """
    Parse an interchange document into a HermitianOperator.

    Args:
        text: Document text
        source: Name used in diagnostics

    Returns:
        The symmetrized operator

    Raises:
        MatrixFormatError: On malformed JSON (with line and column) or bad fields
        NonHermitianError: If the symmetrization residual exceeds 1e-8 * max(||A||, 1)
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise MatrixFormatError(f"{source}: line {e.lineno}, column {e.colno}: {e.msg}") from e

    if not isinstance(document, dict):
        raise MatrixFormatError(f"{source}: expected a JSON object with fields n, re, im")
    if "n" not in document:
        raise MatrixFormatError(f"{source}: missing field 'n'")
    n = document["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise MatrixFormatError(f"{source}: field 'n' must be a positive integer, got {n!r}")
    if "re" not in document:
        raise MatrixFormatError(f"{source}: missing field 're'")

    real = _parse_grid(document["re"], "re", n, source)
    imag = _parse_grid(document["im"], "im", n, source) if "im" in document else np.zeros((n, n))

    try:
        operator = HermitianOperator(real + 1j * imag, tol=HERMITIAN_TOL)
    except NonHermitianError as e:
        raise NonHermitianError(f"{source}: {e}") from e

    if operator.symmetrization_residual > 0.0:
        logger.debug(f"{source}: symmetrization residual {operator.symmetrization_residual:.3e}")
    return operator


def load_matrix(path: Union[str, Path]) -> HermitianOperator:
    """Read and parse an interchange file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise MatrixFormatError(f"{path}: cannot read file: {e}") from e
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MatrixFormatError(f"{path}: not valid UTF-8 at byte {e.start}") from e
    return parse_matrix_document(text, source=str(path))


def dump_matrix(A) -> Dict[str, Any]:
    """Interchange document of an operator, weight or array; "im" only when non-zero."""
    matrix = as_matrix(A)
    document: Dict[str, Any] = {"n": int(matrix.shape[0]), "re": matrix.real.tolist()}
    if np.any(matrix.imag):
        document["im"] = matrix.imag.tolist()
    return document


def save_matrix(path: Union[str, Path], A) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(dump_matrix(A), f, indent=2)
    return path


def dump_expansion(result: ExpansionResult) -> Dict[str, Any]:
    """Partial sum as an interchange document plus the series metadata."""
    return {
        "truncation_order": result.truncation_order,
        "remainder_bound": result.remainder_bound,
        "araki_M": result.araki_M,
        "term_norms": list(result.term_norms),
        "partial_sum": dump_matrix(result.partial_sum),
    }
