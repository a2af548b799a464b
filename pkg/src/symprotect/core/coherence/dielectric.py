"""Relaxation through dielectric loss in the junction and geometric capacitors."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.constants as const

from ...errors import SpecError
from ..circuit import N_NODES, CircuitSpec, CircuitStates, capacitance_matrix, transition_matrix_element

logger = logging.getLogger(__name__)

LOSS_KINDS = ("junction_intrinsic", "geometric")
DEFAULT_TAN_DELTA = {"junction_intrinsic": 1e-7, "geometric": 1e-6}


@dataclass(frozen=True)
class LossChannel:
    """A family of lossy capacitors sharing one loss tangent.

    ``branches`` lists junction indices (0-9); None means every junction.
    """

    kind: str
    tan_delta: Optional[float] = None
    branches: Optional[Sequence[int]] = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise SpecError(f"Unknown loss channel kind: {self.kind}")
        if self.loss_tangent < 0:
            raise SpecError(f"Loss tangent must be non-negative, got {self.loss_tangent}")

    @property
    def loss_tangent(self) -> float:
        return DEFAULT_TAN_DELTA[self.kind] if self.tan_delta is None else float(self.tan_delta)

    @property
    def name(self) -> str:
        return self.kind

    def member_capacitances(self, spec: CircuitSpec) -> Dict[int, float]:
        """Capacitance in farads of every member branch."""
        scale = 1.0 if self.kind == "junction_intrinsic" else spec.geometric_cap_fraction
        members = range(len(spec.junctions())) if self.branches is None else self.branches
        junctions = spec.junctions()
        return {int(b): scale * junctions[b].capacitance for b in members}


def default_loss_channels() -> List[LossChannel]:
    return [LossChannel("junction_intrinsic"), LossChannel("geometric")]


def charge_transition_vector(states: CircuitStates, i_state: int = 0, j_state: int = 1) -> np.ndarray:
    """Q_k = 2e <j|N_k|i> in coulombs."""
    elements = [
        transition_matrix_element(states, "node_charge", node, i_state, j_state)
        for node in range(N_NODES)
    ]
    return 2.0 * const.e * np.array(elements, dtype=complex)


def _branch_voltage(voltages: np.ndarray, nodes: Sequence[int]) -> complex:
    if len(nodes) == 1:
        return voltages[nodes[0]]
    a, b = nodes
    return voltages[b] - voltages[a]


def dielectric_loss_rate(
    spec: CircuitSpec,
    states: CircuitStates,
    channels: Optional[Sequence[LossChannel]] = None,
    i_state: int = 0,
    j_state: int = 1,
) -> Dict[str, float]:
    """Relaxation rate in Hz per loss channel.

    Gamma_c = (2/hbar) tan(delta_c) sum_b C_b |<j|V_b|i>|^2, with node
    voltages V = C^-1 Q. The capacitance matrix used for V includes the
    geometric capacitors whenever a geometric channel is requested.

    Returns:
        Mapping of channel name to rate, plus "total"
    """
    if channels is None:
        channels = default_loss_channels()
    if len(states.spectrum) <= max(i_state, j_state):
        raise SpecError("dielectric_loss_rate needs the |0> and |1> states")
    with_geometric = any(c.kind == "geometric" for c in channels)
    inverse = np.linalg.inv(capacitance_matrix(spec, include_geometric=with_geometric))
    voltages = inverse @ charge_transition_vector(states, i_state, j_state)
    junctions = spec.junctions()

    rates: Dict[str, float] = {}
    for channel in channels:
        energy = 0.0
        for branch, capacitance in channel.member_capacitances(spec).items():
            energy += capacitance * abs(_branch_voltage(voltages, junctions[branch].nodes)) ** 2
        rate = 2.0 / const.hbar * channel.loss_tangent * energy
        rates[channel.name] = rates.get(channel.name, 0.0) + rate
        logger.debug(f"Dielectric channel {channel.name}: {rate:.6e} Hz")
    rates["total"] = float(sum(rates.values()))
    return rates


def trace_formula_rate(
    spec: CircuitSpec,
    states: CircuitStates,
    tan_delta: float,
    include_geometric: bool = False,
    i_state: int = 0,
    j_state: int = 1,
) -> float:
    """(2/hbar) tan(delta) Tr(C^-1 Q2) with Q2_kl = Q_k Q_l^*, for a uniform loss tangent."""
    inverse = np.linalg.inv(capacitance_matrix(spec, include_geometric=include_geometric))
    q = charge_transition_vector(states, i_state, j_state)
    return float(2.0 / const.hbar * tan_delta * np.real(np.vdot(q, inverse @ q)))
