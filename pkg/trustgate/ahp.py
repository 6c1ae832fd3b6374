"""
Service sensitivity classification by pairwise comparison.

A comparison matrix holds the relative importance a_ij of service i over
service j. Weights come from the root (geometric-mean) method, the
approximate largest eigenvalue gates the result through the consistency
ratio, and accepted weights become the ordered service catalog consumed by
the trust engine.
"""

import csv
import json
import math
import string
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from .logging import get_logger
from .utils import load_config, parse_number


MIN_ORDER = 1
MAX_ORDER = 15
RECIPROCITY_TOLERANCE = 1e-9
CONSISTENCY_LIMIT = 0.1

# Average random consistency index per matrix order
RANDOM_INDEX: Dict[int, float] = {
    1: 0.0, 2: 0.0, 3: 0.52, 4: 0.89, 5: 1.12,
    6: 1.26, 7: 1.36, 8: 1.41, 9: 1.46, 10: 1.49,
    11: 1.52, 12: 1.54, 13: 1.56, 14: 1.58, 15: 1.59,
}

SAATY_SCALE: Tuple[float, ...] = tuple(
    sorted({float(Fraction(1, k)) for k in range(1, 10)} | {float(k) for k in range(1, 10)})
)

LEVEL_LABELS = string.ascii_uppercase


class MatrixError(ValueError):
    """Raised when a comparison matrix or its inputs are malformed."""
    pass


class ConsistencyError(ValueError):
    """Raised when a comparison matrix fails the consistency gate (CR >= 0.1)."""

    def __init__(self, report: 'ConsistencyReport'):
        self.report = report
        super().__init__(
            f"Comparison matrix rejected: CR = {report.cr:.7f} >= {CONSISTENCY_LIMIT} "
            f"(lambda_max = {report.lambda_max:.7f}, CI = {report.ci:.7f}, RI = {report.ri})"
        )


@dataclass(frozen=True)
class ComparisonMatrix:
    """Square grid of pairwise importance ratios.

    Only squareness is enforced here; the structural invariants are reported
    by ``validate_matrix`` so that a broken matrix can still be inspected.
    """
    entries: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.entries)
        n = len(rows)
        if n == 0:
            raise MatrixError("Comparison matrix is empty")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise MatrixError(
                    f"Comparison matrix must be square: row {i + 1} has {len(row)} entries, expected {n}"
                )
        object.__setattr__(self, "entries", rows)

    @property
    def order(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.float64)

    def __getitem__(self, index: Tuple[int, int]) -> float:
        i, j = index
        return self.entries[i][j]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Union[float, str]]]) -> 'ComparisonMatrix':
        """Build from full rows; string cells may be fractions such as ``1/3``."""
        return cls(tuple(
            tuple(parse_number(v) if isinstance(v, str) else float(v) for v in row)
            for row in rows
        ))

    @classmethod
    def from_upper_triangle(cls, upper: Sequence[Sequence[Union[float, str]]]) -> 'ComparisonMatrix':
        """Build from the strict upper triangle, completing the rest by reciprocity.

        Row i lists a_i,i+1 ... a_i,n. The last (empty) row may be omitted.
        """
        rows = [list(r) for r in upper]
        if rows and len(rows[-1]) == 0:
            rows = rows[:-1]
        n = len(rows) + 1
        grid = [[1.0] * n for _ in range(n)]
        for i, row in enumerate(rows):
            if len(row) != n - 1 - i:
                raise MatrixError(
                    f"Upper triangle row {i + 1} has {len(row)} entries, expected {n - 1 - i}"
                )
            for offset, raw in enumerate(row):
                j = i + 1 + offset
                value = parse_number(raw) if isinstance(raw, str) else float(raw)
                if not value > 0 or math.isinf(value):
                    raise MatrixError(f"Comparison a({i + 1},{j + 1}) must be positive, got {raw}")
                grid[i][j] = value
                grid[j][i] = 1.0 / value
        return cls(tuple(tuple(r) for r in grid))

    @classmethod
    def identity(cls, n: int) -> 'ComparisonMatrix':
        if n < 1:
            raise MatrixError("Matrix order must be positive")
        return cls(tuple(tuple(1.0 for _ in range(n)) for _ in range(n)))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> 'ComparisonMatrix':
        """Perfectly consistent matrix a_ij = w_i / w_j."""
        return cls(tuple(tuple(wi / wj for wj in weights) for wi in weights))


@dataclass(frozen=True)
class MatrixIssue:
    """One finding of ``validate_matrix``; row/col are zero based."""
    kind: str
    message: str
    row: Optional[int] = None
    col: Optional[int] = None


@dataclass(frozen=True)
class ValidationReport:
    errors: Tuple[MatrixIssue, ...] = ()
    warnings: Tuple[MatrixIssue, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.errors

    def kinds(self) -> List[str]:
        return [issue.kind for issue in self.errors]


@dataclass(frozen=True)
class WeightVector:
    weights: Tuple[float, ...]
    raw_geometric_means: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ConsistencyReport:
    lambda_max: float
    ci: float
    ri: float
    cr: float
    accepted: bool
    order: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "lambda_max": self.lambda_max,
            "ci": self.ci,
            "ri": self.ri,
            "cr": self.cr,
            "accepted": self.accepted,
        }


@dataclass(frozen=True)
class AhpAnalysis:
    """All intermediate columns of one pass over a matrix."""
    means: Tuple[float, ...]
    weights: WeightVector
    weighted_rows: Tuple[float, ...]
    report: ConsistencyReport


@dataclass(frozen=True)
class CatalogEntry:
    level: str
    name: str
    sensitive_value: float

    def to_dict(self) -> Dict[str, Any]:
        return {"level": self.level, "name": self.name, "sensitive_value": self.sensitive_value}


@dataclass(frozen=True)
class ServiceCatalog:
    """Services ordered from most to least sensitive.

    Values are the accepted weight vector, so they sum to one. Equal weights
    are allowed to sit next to each other in input order.
    """
    entries: Tuple[CatalogEntry, ...]
    report: Optional[ConsistencyReport] = field(default=None, compare=False)

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise MatrixError("Service catalog is empty")
        labels = [e.level for e in entries]
        if len(set(labels)) != len(labels):
            raise MatrixError(f"Duplicate level labels in catalog: {labels}")
        values = [e.sensitive_value for e in entries]
        if any(not v > 0 for v in values):
            raise MatrixError("Sensitive values must be strictly positive")
        if any(b > a for a, b in zip(values, values[1:])):
            raise MatrixError("Catalog must be ordered by descending sensitive value")
        if abs(math.fsum(values) - 1.0) > 1e-9:
            raise MatrixError(f"Sensitive values must sum to 1, got {math.fsum(values)!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def values(self) -> Tuple[float, ...]:
        return tuple(e.sensitive_value for e in self.entries)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    @property
    def max_value(self) -> float:
        return self.entries[0].sensitive_value

    @property
    def min_value(self) -> float:
        return self.entries[-1].sensitive_value

    def get(self, level: str) -> Optional[CatalogEntry]:
        for entry in self.entries:
            if entry.level == level:
                return entry
        return None

    def by_name(self, name: str) -> Optional[CatalogEntry]:
        for entry in self.entries:
            if entry.name == name:
                return entry
        return None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"entries": [e.to_dict() for e in self.entries]}
        if self.report is not None:
            data["consistency"] = self.report.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ServiceCatalog':
        try:
            entries = tuple(
                CatalogEntry(level=str(e["level"]), name=str(e["name"]),
                             sensitive_value=float(e["sensitive_value"]))
                for e in data["entries"]
            )
            report = None
            if "consistency" in data:
                report = ConsistencyReport(**data["consistency"])
        except (KeyError, TypeError) as e:
            raise MatrixError(f"Malformed catalog data: {e}") from e
        return cls(entries, report=report)

    def save(self, path: Union[str, Path]) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write('\n')

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'ServiceCatalog':
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


def _as_matrix(m: Union[ComparisonMatrix, Sequence[Sequence[Union[float, str]]]]) -> ComparisonMatrix:
    if isinstance(m, ComparisonMatrix):
        return m
    return ComparisonMatrix.from_rows(m)


def _is_saaty(value: float) -> bool:
    return any(math.isclose(value, s, rel_tol=1e-9) for s in SAATY_SCALE)


def validate_matrix(m: Union[ComparisonMatrix, Sequence[Sequence[Union[float, str]]]]) -> ValidationReport:
    """Check positivity, unit diagonal, reciprocity and order range.

    Entries off the 1/9..9 scale only produce warnings.
    """
    matrix = _as_matrix(m)
    n = matrix.order
    errors: List[MatrixIssue] = []
    warnings: List[MatrixIssue] = []

    if not MIN_ORDER <= n <= MAX_ORDER:
        errors.append(MatrixIssue(
            "order", f"Matrix order {n} outside supported range [{MIN_ORDER}, {MAX_ORDER}]"
        ))

    for i in range(n):
        for j in range(n):
            value = matrix[i, j]
            if not value > 0 or math.isinf(value):
                errors.append(MatrixIssue(
                    "non_positive", f"Entry ({i + 1}, {j + 1}) = {value} is not a positive number", i, j
                ))
            elif i == j and value != 1.0:
                errors.append(MatrixIssue(
                    "diagonal", f"Diagonal entry ({i + 1}, {i + 1}) = {value}, expected 1", i, j
                ))
            elif i != j and not _is_saaty(value):
                warnings.append(MatrixIssue(
                    "non_saaty", f"Entry ({i + 1}, {j + 1}) = {value:.6g} is off the 1/9..9 scale", i, j
                ))

    for i in range(n):
        for j in range(i + 1, n):
            a, b = matrix[i, j], matrix[j, i]
            if a > 0 and b > 0 and abs(a * b - 1.0) > RECIPROCITY_TOLERANCE:
                errors.append(MatrixIssue(
                    "reciprocity",
                    f"Reciprocity violation at ({i + 1}, {j + 1}): {a} x {b} != 1", i, j
                ))

    report = ValidationReport(errors=tuple(errors), warnings=tuple(warnings))
    logger = get_logger()
    for issue in report.warnings:
        logger.warning("AhpClassifier", issue.message)
    if not report.valid:
        logger.debug("AhpClassifier", f"Matrix failed validation with {len(report.errors)} error(s)")
    return report


def _require_valid(matrix: ComparisonMatrix) -> None:
    report = validate_matrix(matrix)
    if not report.valid:
        raise MatrixError("; ".join(issue.message for issue in report.errors))


def row_geometric_means(m: ComparisonMatrix) -> List[float]:
    """n-th root of each row product."""
    array = m.as_array()
    if np.any(array <= 0):
        raise MatrixError("Row geometric means need strictly positive entries")
    n = m.order
    return [float(v) for v in np.prod(array, axis=1) ** (1.0 / n)]


def normalize_weights(means: Sequence[float]) -> WeightVector:
    """Scale positive values so they sum to one."""
    values = [float(v) for v in means]
    if not values:
        raise MatrixError("Cannot normalise an empty vector")
    if any(not v > 0 or math.isinf(v) for v in values):
        raise MatrixError(f"Weights need strictly positive inputs, got {values}")
    total = math.fsum(values)
    return WeightVector(
        weights=tuple(v / total for v in values),
        raw_geometric_means=tuple(values),
    )


def weighted_row_sums(m: ComparisonMatrix, w: WeightVector) -> List[float]:
    """The A_i x W column: each matrix row dotted with the weight vector."""
    if len(w) != m.order:
        raise MatrixError(f"Weight vector has {len(w)} entries for a matrix of order {m.order}")
    return [float(v) for v in m.as_array() @ np.array(w.weights, dtype=np.float64)]


def lambda_max(m: ComparisonMatrix, w: WeightVector) -> float:
    """Approximate largest eigenvalue: mean of (A W)_i / W_i."""
    products = weighted_row_sums(m, w)
    n = m.order
    return math.fsum(p / wi for p, wi in zip(products, w.weights)) / n


def consistency_check(lam: float, n: int) -> ConsistencyReport:
    """Fill CI, RI and CR for an eigenvalue estimate of an order-n matrix."""
    if n not in RANDOM_INDEX:
        raise MatrixError(f"No random index for matrix order {n}; supported orders are {MIN_ORDER}-{MAX_ORDER}")
    if lam < n - 1e-6:
        raise MatrixError(f"lambda_max {lam} is below the matrix order {n}")

    ri = RANDOM_INDEX[n]
    ci = (lam - n) / (n - 1) if n > 1 else 0.0
    if ri == 0.0:
        # orders 1 and 2 are consistent by construction
        cr = 0.0
    else:
        cr = ci / ri
    return ConsistencyReport(
        lambda_max=lam, ci=ci, ri=ri, cr=cr, accepted=cr < CONSISTENCY_LIMIT, order=n
    )


def analyse(m: ComparisonMatrix, validation: Optional[ValidationReport] = None) -> AhpAnalysis:
    """Run the whole weighting pass and return every intermediate column.

    ``validation`` is a report already produced by ``validate_matrix(m)``;
    without one the matrix is validated here.
    """
    if validation is None:
        _require_valid(m)
    elif not validation.valid:
        raise MatrixError("; ".join(issue.message for issue in validation.errors))
    means = row_geometric_means(m)
    weights = normalize_weights(means)
    rows = weighted_row_sums(m, weights)
    lam = lambda_max(m, weights)
    report = consistency_check(lam, m.order)
    get_logger().debug("AhpClassifier", "Matrix analysed", report.to_dict())
    return AhpAnalysis(
        means=tuple(means), weights=weights, weighted_rows=tuple(rows), report=report
    )


def check_names(names: Sequence[str], n: int) -> List[str]:
    """Stripped names, one per matrix row, non-empty and unique."""
    names = [str(name).strip() for name in names]
    if len(names) != n:
        raise MatrixError(f"Expected {n} service names, got {len(names)}")
    if any(not name for name in names):
        raise MatrixError("Service names must be non-empty")
    if len(set(names)) != len(names):
        raise MatrixError(f"Service names must be unique: {names}")
    return names


def classify(m: ComparisonMatrix, names: Sequence[str],
             analysis: Optional[AhpAnalysis] = None) -> ServiceCatalog:
    """Rank services by weight and label them A, B, C... from most sensitive.

    Pass the result of ``analyse(m)`` as ``analysis`` to skip a second
    validation and weighting pass.
    """
    names = check_names(names, m.order)
    if analysis is None:
        analysis = analyse(m)
    elif len(analysis.means) != m.order:
        raise MatrixError(f"Analysis covers {len(analysis.means)} services, matrix has {m.order}")
    report = analysis.report
    if not report.accepted:
        get_logger().warning(
            "AhpClassifier", "Comparison matrix rejected by consistency check", report.to_dict()
        )
        raise ConsistencyError(report)

    weights = analysis.weights.weights
    order = sorted(range(m.order), key=lambda i: -weights[i])
    entries = tuple(
        CatalogEntry(level=LEVEL_LABELS[position], name=names[i], sensitive_value=weights[i])
        for position, i in enumerate(order)
    )
    get_logger().info(
        "AhpClassifier",
        f"Classified {m.order} services (CR = {report.cr:.7f})",
    )
    return ServiceCatalog(entries, report=report)


def insert_service(m: ComparisonMatrix, names: Sequence[str], new_name: str,
                   new_comparisons: Sequence[Union[float, str]]) -> Tuple[ComparisonMatrix, ServiceCatalog]:
    """Append a new service row, complete its column by reciprocity and re-rank.

    ``new_comparisons[j]`` is the importance of the new service over service j.
    """
    names = check_names(names, m.order)
    base = analyse(m).report
    if not base.accepted:
        raise ConsistencyError(base)
    if new_name.strip() in names:
        raise MatrixError(f"Service {new_name!r} is already in the matrix")

    n = m.order
    row = [parse_number(v) if isinstance(v, str) else float(v) for v in new_comparisons]
    if len(row) != n:
        raise MatrixError(f"Expected {n} comparisons for the new service, got {len(row)}")
    for j, value in enumerate(row):
        if not value > 0 or math.isinf(value):
            raise MatrixError(f"Comparison with {names[j]!r} must be positive, got {value}")
    if n + 1 > MAX_ORDER:
        raise MatrixError(f"Cannot grow matrix beyond order {MAX_ORDER}")

    grid = [list(r) + [1.0 / row[i]] for i, r in enumerate(m.entries)]
    grid.append(row + [1.0])
    expanded = ComparisonMatrix(tuple(tuple(r) for r in grid))
    get_logger().info("AhpClassifier", f"Inserting service {new_name!r} into a matrix of order {n}")
    return expanded, classify(expanded, names + [new_name.strip()])


REFERENCE_SERVICES: Tuple[str, ...] = (
    "Governmental-military",
    "Commercial",
    "Academic",
    "Banking-stock",
    "e-Shopping",
    "VoIP",
    "Education",
    "Entertainment",
    "Public",
)


def reference_matrix() -> ComparisonMatrix:
    """Nine service classes, each one step more important than the next: a_ij = j - i + 1."""
    n = len(REFERENCE_SERVICES)
    return ComparisonMatrix.from_upper_triangle(
        [[float(j - i + 1) for j in range(i + 1, n)] for i in range(n - 1)]
    )


# Reference row means of the nine classes. The last is not the geometric mean of
# the last matrix row (0.24112850); catalogs built from these keep the reference
# sensitive values.
REFERENCE_MEANS: Tuple[float, ...] = (
    4.14716627, 3.00799234, 2.11309937, 1.4592328, 1.0,
    0.68529161, 0.47323851, 0.33244766, 0.18473035,
)


def reference_catalog() -> ServiceCatalog:
    """The nine-level sensitivity table used as the default scale."""
    weights = normalize_weights(REFERENCE_MEANS).weights
    return ServiceCatalog(tuple(
        CatalogEntry(level=LEVEL_LABELS[i], name=name, sensitive_value=weights[i])
        for i, name in enumerate(REFERENCE_SERVICES)
    ))


def load_matrix(path: Union[str, Path]) -> Tuple[ComparisonMatrix, Optional[List[str]]]:
    """Read a comparison matrix file.

    CSV: n rows of n decimals or fractions, with an optional header row of
    service names (detected when the first row does not parse as numbers).
    JSON/YAML: ``{"names": [...], "upper": [[...], ...]}`` or
    ``{"names": [...], "matrix": [[...], ...]}``.
    """
    path = Path(path)
    if path.suffix.lower() in ('.json', '.yaml', '.yml'):
        data = load_config(str(path))
        if not isinstance(data, dict):
            raise MatrixError(f"Matrix file {path} must contain a mapping")
        names = data.get("names")
        if "upper" in data:
            matrix = ComparisonMatrix.from_upper_triangle(data["upper"])
        elif "matrix" in data:
            matrix = ComparisonMatrix.from_rows(data["matrix"])
        else:
            raise MatrixError(f"Matrix file {path} needs an 'upper' or 'matrix' key")
        return matrix, list(names) if names is not None else None

    with open(path, 'r', encoding='utf-8', newline='') as f:
        rows = [row for row in csv.reader(f) if any(cell.strip() for cell in row)]
    if not rows:
        raise MatrixError(f"Matrix file {path} is empty")

    names: Optional[List[str]] = None
    try:
        for cell in rows[0]:
            parse_number(cell)
    except ValueError:
        names = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
    try:
        matrix = ComparisonMatrix.from_rows([[cell for cell in row] for row in rows])
    except ValueError as e:
        raise MatrixError(f"Malformed matrix file {path}: {e}") from e
    return matrix, names
