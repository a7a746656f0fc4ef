"""Utility accounting over transcripts.

The user banks reward minus payment on every record; a provider banks
payment minus its true generation cost on the records delegated to it.
Sums use math.fsum so million-record ledgers of tiny per-token amounts
don't drift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ConfigError, ProviderProfile, benchmarks
from .mechanism import Transcript
from .strategies import Phase


def user_utility(transcript: Transcript) -> float:
    """Sum of (reward - payment) over all records."""
    if len(transcript) == 0:
        return 0.0
    return math.fsum(transcript.reward - transcript.payment)


def provider_utility(transcript: Transcript, provider: int) -> float:
    """Sum of (payment - cost_per_token * true_length) over the provider's records."""
    if not 1 <= provider <= transcript.stats.u_bar.size:
        raise ConfigError(f"unknown provider id {provider}")
    mask = transcript.provider == provider
    if not mask.any():
        return 0.0
    gains = transcript.payment[mask] - transcript.cost_per_token[mask] * transcript.true_length[mask]
    return math.fsum(gains)


@dataclass(frozen=True)
class ProviderRow:
    provider: int
    provider_utility: float
    delegation_count: int
    user_utility_from_provider: float


@dataclass(frozen=True)
class PhaseRow:
    phase: Phase
    provider: int
    provider_utility: float
    delegation_count: int
    user_utility_from_provider: float


@dataclass(frozen=True)
class UtilityReport:
    user_total: float
    per_provider: tuple[ProviderRow, ...]
    per_phase: tuple[PhaseRow, ...]
    u_fb: float
    u_sb: float
    gap_to_sb: float

    def to_dict(self) -> dict:
        return {
            "user_total": self.user_total,
            "u_fb": self.u_fb,
            "u_sb": self.u_sb,
            "gap_to_sb": self.gap_to_sb,
            "per_provider": [
                {
                    "provider": r.provider,
                    "provider_utility": r.provider_utility,
                    "delegations": r.delegation_count,
                    "user_utility": r.user_utility_from_provider,
                }
                for r in self.per_provider
            ],
            "per_phase": [
                {
                    "phase": r.phase.label,
                    "provider": r.provider,
                    "provider_utility": r.provider_utility,
                    "delegations": r.delegation_count,
                    "user_utility": r.user_utility_from_provider,
                }
                for r in self.per_phase
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def csv_header(K: int) -> str:
        cols = ["user_total", "u_fb", "u_sb", "gap_to_sb"]
        for i in range(1, K + 1):
            cols += [f"p{i}_utility", f"p{i}_delegations", f"p{i}_user_utility"]
        return ",".join(cols)

    def to_csv_row(self) -> str:
        cells = [repr(self.user_total), repr(self.u_fb), repr(self.u_sb), repr(self.gap_to_sb)]
        for r in self.per_provider:
            cells += [repr(r.provider_utility), str(r.delegation_count), repr(r.user_utility_from_provider)]
        return ",".join(cells)


def _rows_for(transcript: Transcript, mask: np.ndarray, provider: int):
    sub = mask & (transcript.provider == provider)
    count = int(sub.sum())
    if count == 0:
        return 0.0, 0, 0.0
    prov = math.fsum(
        transcript.payment[sub] - transcript.cost_per_token[sub] * transcript.true_length[sub]
    )
    user = math.fsum(transcript.reward[sub] - transcript.payment[sub])
    return prov, count, user


def report(transcript: Transcript, profiles: Sequence[ProviderProfile]) -> UtilityReport:
    """Full breakdown: totals, per-provider and per-phase splits, and the
    gap to the second-best benchmark for this transcript's horizon."""
    K = len(profiles)
    everything = np.ones(len(transcript), dtype=bool)
    per_provider = []
    for p in profiles:
        prov, count, user = _rows_for(transcript, everything, p.id)
        per_provider.append(
            ProviderRow(
                provider=p.id,
                provider_utility=prov,
                delegation_count=count,
                user_utility_from_provider=user,
            )
        )
    per_phase = []
    for phase in Phase:
        mask = transcript.phase_code == phase.value
        for p in profiles:
            prov, count, user = _rows_for(transcript, mask, p.id)
            per_phase.append(
                PhaseRow(
                    phase=phase,
                    provider=p.id,
                    provider_utility=prov,
                    delegation_count=count,
                    user_utility_from_provider=user,
                )
            )
    total = user_utility(transcript)
    bench = benchmarks(profiles, transcript.T)
    return UtilityReport(
        user_total=total,
        per_provider=tuple(per_provider),
        per_phase=tuple(per_phase),
        u_fb=bench.u_fb,
        u_sb=bench.u_sb,
        gap_to_sb=bench.u_sb - total,
    )
