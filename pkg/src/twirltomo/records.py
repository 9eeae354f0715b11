"""Experiment records shared by the twirl protocols."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ExperimentRecord:
    """One twirl realization.

    ``kind`` is "mub", "clifford", or "local"; ``descriptor`` identifies the
    drawn twirl element ((J, m) for a MUB state, a Clifford element, or the
    per-qubit (pauli index, rotation index) tuple for the one-qubit twirl);
    ``outcome`` is the measured bit string, qubit 1 first.
    """

    kind: str
    descriptor: tuple
    outcome: tuple[int, ...]
