"""Emulated contact-tracing token.

A token holds one identity and one health code, advertises them as a BLE
local name, and tallies every well-formed peer advertisement it hears. The
state is an immutable value and every operation returns a new state, which
keeps the simulator deterministic and makes log snapshots free.

Volatility contract: the encounter log exists only while the token is
powered. ``power_off`` always clears it. The identity and configured health
code survive power cycles (they model flash-resident configuration, not
RAM), so ``power_on`` after ``power_off`` resumes advertising the same
datagram over a fresh, empty log.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import protocol
from .protocol import Datagram, Identity, ParseReject


class TokenOffError(RuntimeError):
    """The operation needs a powered token."""


@dataclass(frozen=True)
class EncounterRecord:
    """Aggregated sightings of one peer, sub-tallied per health code.

    Keeping the per-code tally preserves both views of an encounter: one
    entry per peer, and the sequence of health codes the peer advertised.
    """

    peer_public_id: str
    health_counts: dict[str, int]

    @property
    def total_count(self) -> int:
        return sum(self.health_counts.values())


@dataclass(frozen=True)
class TokenState:
    identity: Identity
    health_code: str
    powered: bool
    # peer public id -> health code -> number of accepted observations.
    # Never mutated in place; operations copy-on-write.
    log: dict[str, dict[str, int]]


def power_on(identity: Identity, health_code: str) -> TokenState:
    """Battery connected: advertising starts immediately over an empty log."""
    return TokenState(identity, protocol.normalize_health_code(health_code), True, {})


def power_off(state: TokenState) -> TokenState:
    """Battery removed: the volatile encounter log is gone for good.

    Idempotent; identity and configured health code are kept.
    """
    return TokenState(state.identity, state.health_code, False, {})


def set_health(state: TokenState, health_code: str) -> TokenState:
    """Reconfigure the advertised health code. The log is untouched."""
    _require_powered(state)
    return replace(state, health_code=protocol.normalize_health_code(health_code))


def current_advertisement(state: TokenState) -> str:
    """The BLE local name the token is advertising right now."""
    _require_powered(state)
    datagram = Datagram(state.identity.public_id, state.health_code)
    return protocol.build_advertised_name(datagram)


def observe_advertisement(state: TokenState, name: str) -> TokenState:
    """Process one discovered BLE name.

    Only well-formed "#C19:" names from peers are logged; everything else,
    including the token's own advertisement, leaves the state unchanged.
    Each accepted observation increments the peer's tally by one; debouncing
    of repeat sightings is the scanner's concern, not the token's.
    """
    _require_powered(state)
    parsed = protocol.parse_advertised_name(name)
    if isinstance(parsed, ParseReject) or parsed.public_id == state.identity.public_id:
        return state
    log = dict(state.log)
    counts = dict(log.get(parsed.public_id, ()))
    counts[parsed.health_code] = counts.get(parsed.health_code, 0) + 1
    log[parsed.public_id] = counts
    return replace(state, log=log)


def download_log(state: TokenState) -> list[EncounterRecord]:
    """Snapshot of the encounter log, sorted by peer public id.

    A pure read: the log is not cleared, and the returned records are
    independent copies.
    """
    _require_powered(state)
    return [EncounterRecord(peer, dict(state.log[peer])) for peer in sorted(state.log)]


def export_log_csv(records: list[EncounterRecord]) -> str:
    """Render a downloaded log as CSV text.

    One ``peer_public_id,health_code,count`` line per (peer, code) pair,
    peers in ascending id order and codes ascending within a peer. LF line
    endings, no header; an empty log exports as an empty string. This is
    the byte-exact format the config UI saves to disk.
    """
    lines = []
    for record in records:
        for code in sorted(record.health_counts):
            lines.append(f"{record.peer_public_id},{code},{record.health_counts[code]}")
    return "".join(line + "\n" for line in lines)


def _require_powered(state: TokenState) -> None:
    if not state.powered:
        raise TokenOffError("token is not powered")
