"""
LangGraph pipeline for compound-mimo-capacity runs

Flow:
    load ─▶ capacity | minmax | bounds | verify | counterexample | sweep ─▶ render
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple, TypedDict

import numpy as np
from langgraph.graph import END, StateGraph

from capacity import (
    PowerConstraint,
    SumPower,
    UncertaintyRegion,
    capacity_bounds_other_norm,
    compound_capacity,
    minmax_capacity,
)
from channel_io import DEFAULT_CHANNEL_FILE, load_channel, random_channel
from config import MC_SAMPLES, THREADS
from errors import InvalidParameter, UnsupportedNorm
from matrix_kernel import ChannelMatrix, NormKind
from renderer import (
    bounds_to_dict,
    capacity_to_dict,
    convert_units,
    counterexample_to_dict,
    minmax_to_dict,
    sweep_to_dict,
    to_json,
    to_markdown,
    verification_to_dict,
)
from verification import VerificationConfig, counterexample_l1, verify_instance

logger = logging.getLogger(__name__)

COMMANDS = ("capacity", "minmax", "bounds", "verify", "counterexample", "sweep")
FORMATS = ("json", "table")


# ──────────────────────────────────────────────────────────────
# 1. Run configuration and shared state
@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: Path | None = None
    dims: Tuple[int, int] | None = None
    gamma: float = 1.0
    epsilon: float = 0.0
    norm: NormKind = NormKind.SPECTRAL
    constraint: PowerConstraint = field(default_factory=SumPower)
    output_path: Path | None = None
    seed: int = 0
    samples: int = MC_SAMPLES
    bits: bool = False
    grid: Tuple[Tuple[float, ...], Tuple[float, ...]] | None = None
    output_format: str = "json"

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidParameter(f"command must be one of {', '.join(COMMANDS)}, got '{self.command}'")
        if not self.gamma > 0:
            raise InvalidParameter(f"--gamma must be > 0, got {self.gamma}")
        if not self.epsilon >= 0:
            raise InvalidParameter(f"--epsilon must be >= 0, got {self.epsilon}")
        if self.samples < 1:
            raise InvalidParameter(f"--samples must be >= 1, got {self.samples}")
        if self.output_format not in FORMATS:
            raise InvalidParameter(f"--format must be json or table, got '{self.output_format}'")
        if self.command == "sweep" and self.grid is None:
            raise InvalidParameter("--grid is required for the sweep command")
        if self.command == "bounds" and self.norm is NormKind.SPECTRAL:
            raise UnsupportedNorm("--norm must be frobenius or nuclear for the bounds command")

    @property
    def region(self) -> UncertaintyRegion:
        return UncertaintyRegion(self.norm, self.epsilon)


class RunState(TypedDict, total=False):
    config: RunConfig
    channel: ChannelMatrix
    payload: Dict[str, Any]
    converged: bool
    verified: bool
    document: str


# ──────────────────────────────────────────────────────────────
# 2. Nodes
def node_load(state: RunState) -> RunState:
    cfg = state["config"]
    if cfg.command == "counterexample":
        return state
    if cfg.input_path is not None:
        channel = load_channel(cfg.input_path)
    elif cfg.dims is not None:
        channel = random_channel(*cfg.dims, seed=cfg.seed)
        logger.info(f"Drew random {cfg.dims[0]}x{cfg.dims[1]} channel (seed {cfg.seed})")
    else:
        channel = load_channel(DEFAULT_CHANNEL_FILE)
    state["channel"] = channel
    return state


def node_capacity(state: RunState) -> RunState:
    cfg = state["config"]
    report = compound_capacity(state["channel"].array, cfg.region, cfg.gamma, cfg.constraint)
    if report.all_zero_channel:
        logger.warning("Worst-case channel is all zero; capacity is 0 for every covariance")
    state["payload"] = capacity_to_dict(report)
    return state


def node_minmax(state: RunState) -> RunState:
    cfg = state["config"]
    result = minmax_capacity(state["channel"].array, cfg.region, cfg.gamma, cfg.constraint)
    if not result.converged:
        logger.warning(f"Min-max descent hit the iteration cap ({result.iterations}) before stalling")
    state["payload"] = minmax_to_dict(result)
    state["converged"] = result.converged
    return state


def node_bounds(state: RunState) -> RunState:
    cfg = state["config"]
    bounds = capacity_bounds_other_norm(state["channel"].array, cfg.norm, cfg.epsilon, cfg.gamma, cfg.constraint)
    state["payload"] = bounds_to_dict(bounds)
    return state


def node_verify(state: RunState) -> RunState:
    cfg = state["config"]
    h0 = state["channel"].array
    report = compound_capacity(h0, cfg.region, cfg.gamma, cfg.constraint)
    checks = verify_instance(
        h0, cfg.region, cfg.gamma, cfg.constraint, VerificationConfig(samples=cfg.samples, seed=cfg.seed), report
    )
    for failure in checks.failures:
        logger.warning(f"Check {failure.name} failed: margin {failure.margin:.3e}")
    state["payload"] = {"report": capacity_to_dict(report), "verification": verification_to_dict(checks)}
    state["verified"] = checks.passed
    return state


def node_counterexample(state: RunState) -> RunState:
    result = counterexample_l1()
    if not result.lemma_fails:
        logger.warning("Dense perturbation did not beat the diagonal minimum")
    state["payload"] = counterexample_to_dict(result)
    state["verified"] = result.lemma_fails
    return state


def node_sweep(state: RunState) -> RunState:
    cfg = state["config"]
    assert cfg.grid is not None
    epsilons, gammas = cfg.grid
    h0 = state["channel"].array
    points = [(i, j) for i in range(len(epsilons)) for j in range(len(gammas))]

    def solve(point: Tuple[int, int]) -> float:
        i, j = point
        region = UncertaintyRegion(NormKind.SPECTRAL, epsilons[i])
        return compound_capacity(h0, region, gammas[j], cfg.constraint).c_maxmin

    if cfg.norm is not NormKind.SPECTRAL:
        raise UnsupportedNorm(f"sweep needs --norm spectral, got {cfg.norm.value}")
    with ThreadPoolExecutor(max_workers=min(THREADS, len(points))) as pool:
        values = list(pool.map(solve, points))

    table = np.array(values, dtype=np.float64).reshape(len(epsilons), len(gammas))
    logger.info(f"Swept {len(points)} grid points on {min(THREADS, len(points))} threads")
    state["payload"] = sweep_to_dict(list(epsilons), list(gammas), table)
    return state


def node_render(state: RunState) -> RunState:
    cfg = state["config"]
    payload = convert_units({"command": cfg.command, **state.get("payload", {})}, cfg.bits)
    document = to_markdown(payload) if cfg.output_format == "table" else to_json(payload)
    if cfg.output_path is not None:
        try:
            Path(cfg.output_path).write_text(document, encoding="utf-8")
        except OSError as exc:
            raise InvalidParameter(f"--output {cfg.output_path} cannot be written: {exc.strerror or exc}") from exc
        logger.info(f"Report written to {cfg.output_path}")
    state["payload"] = payload
    state["document"] = document
    return state


def _route(state: RunState) -> str:
    return state["config"].command


# ──────────────────────────────────────────────────────────────
# 3. Build LangGraph
def build_graph():
    g = StateGraph(RunState)

    g.add_node("load", node_load)
    g.add_node("capacity", node_capacity)
    g.add_node("minmax", node_minmax)
    g.add_node("bounds", node_bounds)
    g.add_node("verify", node_verify)
    g.add_node("counterexample", node_counterexample)
    g.add_node("sweep", node_sweep)
    g.add_node("render", node_render)

    g.set_entry_point("load")
    g.add_conditional_edges("load", _route, {command: command for command in COMMANDS})
    for command in COMMANDS:
        g.add_edge(command, "render")
    g.add_edge("render", END)

    return g.compile()
