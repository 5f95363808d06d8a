"""Render run results to JSON reports and markdown tables."""

import json
import math
from typing import Any, Dict, List

import numpy as np

from capacity import CapacityReport, MinMaxResult, NormBounds
from config import REPORT_DIGITS
from verification import L1Counterexample, VerificationReport

# Fields holding mutual information; scaled by 1/ln 2 when reporting bits
CAPACITY_FIELDS = frozenset(
    {"c_maxmin", "c_minmax", "duality_gap", "lower", "upper", "min_observed_mi", "capacity"}
)


def _matrix(m: np.ndarray) -> List[List[List[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=np.complex128)]


def _vector(v: np.ndarray) -> List[float]:
    return [float(x) for x in np.asarray(v, dtype=np.float64)]


def capacity_to_dict(report: CapacityReport) -> Dict[str, Any]:
    return {
        "c_maxmin": float(report.c_maxmin),
        "c_minmax": float(report.c_minmax),
        "duality_gap": float(report.duality_gap),
        "gamma": float(report.gamma),
        "epsilon": float(report.epsilon),
        "constraint": report.constraint.label,
        "sigma0": _vector(report.sigma0),
        "sigma_star": _vector(report.sigma_star),
        "lambda_star": _vector(report.lambda_star),
        "q_star": _matrix(report.q_star),
        "h_star": _matrix(report.h_star),
        "saddle": {
            "max_side_gap": float(report.saddle.max_side_gap),
            "min_side_gap": float(report.saddle.min_side_gap),
            "certified": report.saddle_certified,
        },
        "solver_iterations": report.solver_iterations,
        "all_zero_channel": report.all_zero_channel,
    }


def minmax_to_dict(result: MinMaxResult) -> Dict[str, Any]:
    return {
        "c_minmax": float(result.c_minmax),
        "norm": result.kind.value,
        "epsilon": float(result.epsilon),
        "sigma": _vector(result.sigma),
        "lambda": _vector(result.lam),
        "q_prime": _matrix(result.q_prime),
        "h_prime": _matrix(result.h_prime),
        "iterations": result.iterations,
        "converged": result.converged,
    }


def bounds_to_dict(bounds: NormBounds) -> Dict[str, Any]:
    return {
        "lower": float(bounds.lower),
        "upper": float(bounds.upper),
        "norm": bounds.kind.value,
        "alpha_low": float(bounds.alpha_low),
        "alpha_high": float(bounds.alpha_high),
    }


def verification_to_dict(report: VerificationReport) -> Dict[str, Any]:
    return {
        "passed": report.passed,
        "min_observed_mi": None if report.min_observed_mi is None else float(report.min_observed_mi),
        "worst_delta": None if report.worst_delta is None else _matrix(report.worst_delta.entries),
        "checks": [
            {
                "name": c.name,
                "passed": c.passed,
                "observed": float(c.observed),
                "bound": float(c.bound),
                "margin": float(c.margin),
                "tolerance": float(c.tolerance),
            }
            for c in report.checks
        ],
    }


def counterexample_to_dict(result: L1Counterexample) -> Dict[str, Any]:
    # Determinant values, not capacities: never unit-converted
    return {
        "diag_restricted_min": float(result.diag_restricted_min),
        "full_matrix_value": float(result.full_matrix_value),
        "split": float(result.split),
        "full_delta": _matrix(result.full_delta),
        "nuclear_norm": float(result.nuclear_norm),
        "lemma_fails": result.lemma_fails,
    }


def sweep_to_dict(epsilons: List[float], gammas: List[float], table: np.ndarray) -> Dict[str, Any]:
    return {
        "epsilons": [float(e) for e in epsilons],
        "gammas": [float(g) for g in gammas],
        "capacity": [_vector(row) for row in table],
    }


def _scaled(value: Any, factor: float) -> Any:
    if value is None or isinstance(value, bool):
        return value
    if isinstance(value, list):
        return [_scaled(v, factor) for v in value]
    return float(value) * factor


def convert_units(payload: Dict[str, Any], bits: bool) -> Dict[str, Any]:
    """Return a copy with capacity fields in bits (or unchanged nats) plus a ``units`` tag."""
    factor = 1.0 / math.log(2) if bits else 1.0

    def walk(node: Any) -> Any:
        if isinstance(node, dict):
            return {
                key: _scaled(value, factor) if key in CAPACITY_FIELDS and factor != 1.0 else walk(value)
                for key, value in node.items()
            }
        if isinstance(node, list):
            return [walk(v) for v in node]
        return node

    converted = walk(payload)
    converted["units"] = "bits" if bits else "nats"
    return converted


def to_json(payload: Dict[str, Any]) -> str:
    # repr-precision floats; sorted keys keep reports byte-identical across runs
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> Dict[str, Any]:
    return json.loads(text)


def _fmt(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        return f"{value:.{REPORT_DIGITS}g}"
    if isinstance(value, list) and all(isinstance(v, float) for v in value):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def _is_matrix(value: Any) -> bool:
    return isinstance(value, list) and bool(value) and isinstance(value[0], list) and bool(value[0]) and isinstance(value[0][0], list)


def _quantity_rows(prefix: str, node: Dict[str, Any]) -> List[str]:
    rows: List[str] = []
    for key in sorted(node):
        value = node[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows += _quantity_rows(f"{name}.", value)
        elif not _is_matrix(value):
            rows.append(f"| {name} | {_fmt(value)} |")
    return rows


def to_markdown(payload: Dict[str, Any]) -> str:
    """Human-readable table; matrices are left to the JSON report."""
    command = payload.get("command", "report")
    lines = [f"## Compound MIMO capacity: {command} ({payload.get('units', 'nats')})", ""]

    if "capacity" in payload and "gammas" in payload:
        gammas = payload["gammas"]
        lines.append("| epsilon \\ gamma | " + " | ".join(_fmt(g) for g in gammas) + " |")
        lines.append("|---" * (len(gammas) + 1) + "|")
        for eps, row in zip(payload["epsilons"], payload["capacity"]):
            lines.append(f"| {_fmt(eps)} | " + " | ".join(_fmt(v) for v in row) + " |")
        return "\n".join(lines) + "\n"

    lines += ["| quantity | value |", "|---|---|"]
    body = {k: v for k, v in payload.items() if k not in ("command", "units", "verification")}
    lines += _quantity_rows("", body)

    verification = payload.get("verification")
    if verification:
        overall = "pass" if verification["passed"] else "FAIL"
        lines += ["", f"Verification: {overall}, min observed MI {_fmt(verification['min_observed_mi'])}"]
        lines += ["", "### Checks (nats)", "", "| check | passed | observed | bound | margin |", "|---|---|---|---|---|"]
        for c in verification["checks"]:
            status = "pass" if c["passed"] else "FAIL"
            lines.append(f"| {c['name']} | {status} | {_fmt(c['observed'])} | {_fmt(c['bound'])} | {_fmt(c['margin'])} |")
    return "\n".join(lines) + "\n"
