"""Deterministic proximity simulator for a fleet of emulated tokens.

Time is a bare integer tick counter; radio range is binary. A scenario
scripts which token pairs are in range over which half-open tick intervals
``[start, end)``. On every tick that is a multiple of the advertisement
interval, each active pair exchanges advertisements symmetrically (both
tokens advertise and scan), and each direction is delivered independently
with the configured detection probability.

Determinism: identical scenario + seed gives a byte-identical event trace
and identical final logs. With detection probability 1.0 the RNG is never
consulted, so the result is the same under any seed.

``oracle_counts`` recomputes the expected per-pair counts by brute-force
enumeration of (tick, contact) pairs without ever touching the token state
machines; it exists to check ``run`` and must stay independent of it.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from . import protocol, token
from .protocol import Identity


# Labels end up in trace/log CSV columns and in per-token file names, so
# keep them to a safe charset: no commas, no path separators, no whitespace.
_LABEL_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.\-]*")


class ScenarioError(ValueError):
    """The scenario document failed validation."""


class UnknownLabelError(ScenarioError):
    """A contact references a token label that was never declared."""


class InvertedIntervalError(ScenarioError):
    """A contact interval is empty or inverted (start >= end)."""


@dataclass(frozen=True)
class SimParams:
    advertisement_interval_ticks: int = 1
    detection_probability: float = 1.0
    rng_seed: int = 0


@dataclass(frozen=True)
class TokenDecl:
    """One token in the fleet: a label for the scenario, plus its config."""

    label: str
    identity: Identity
    health_code: str


@dataclass(frozen=True)
class Contact:
    """Tokens ``a`` and ``b`` are in radio range for ticks start <= t < end."""

    a: str
    b: str
    start: int
    end: int


@dataclass(frozen=True)
class Scenario:
    tokens: tuple[TokenDecl, ...]
    contacts: tuple[Contact, ...]
    params: SimParams = field(default_factory=SimParams)


@dataclass(frozen=True)
class TraceEvent:
    """One delivery attempt: ``observer`` heard ``advertisement`` at ``tick``.

    ``accepted`` records the detection-probability draw; with p = 1.0 every
    event is accepted.
    """

    tick: int
    observer: str
    advertisement: str
    accepted: bool


def identity_from_seed(seed: str) -> Identity:
    """Deterministic identity for simulations: same seed, same identity."""
    return protocol.generate_identity(random.Random(seed))


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario from its JSON document text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_from_dict(doc: object) -> Scenario:
    """Validate a parsed scenario document and resolve all cross-references.

    Schema::

        {
          "params":   {"advertisement_interval_ticks": int >= 1,
                       "detection_probability": float in [0, 1],
                       "rng_seed": int},                      # all optional
          "tokens":   [{"label": str,
                        "identity_seed": str,                 # default: label
                        "private_code": "hex32",              # alternative
                        "health": "hex4"}],                   # default "0000"
          "contacts": [{"a": str, "b": str, "start": int, "end": int}]
        }

    Unknown keys are rejected so that typos fail loudly instead of silently
    running a different experiment.
    """
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    _reject_unknown_keys(doc, {"params", "tokens", "contacts"}, "scenario")

    params = _parse_params(doc.get("params", {}))
    tokens = _parse_tokens(doc.get("tokens"))
    contacts = _parse_contacts(doc.get("contacts", []), {t.label for t in tokens})
    return Scenario(tokens=tokens, contacts=contacts, params=params)


def _reject_unknown_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"unknown {where} keys: {sorted(unknown)}")


def _parse_params(obj: object) -> SimParams:
    if not isinstance(obj, dict):
        raise ScenarioError("params must be an object")
    allowed = {"advertisement_interval_ticks", "detection_probability", "rng_seed"}
    _reject_unknown_keys(obj, allowed, "params")

    interval = obj.get("advertisement_interval_ticks", 1)
    if not isinstance(interval, int) or isinstance(interval, bool) or interval < 1:
        raise ScenarioError("advertisement_interval_ticks must be an integer >= 1")
    p = obj.get("detection_probability", 1.0)
    if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
        raise ScenarioError("detection_probability must be a number in [0, 1]")
    seed = obj.get("rng_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("rng_seed must be an integer")
    return SimParams(interval, float(p), seed)


def _parse_tokens(obj: object) -> tuple[TokenDecl, ...]:
    if not isinstance(obj, list) or not obj:
        raise ScenarioError("tokens must be a non-empty list")
    decls = []
    labels: set[str] = set()
    public_ids: dict[str, str] = {}
    for i, entry in enumerate(obj):
        if not isinstance(entry, dict):
            raise ScenarioError(f"tokens[{i}] must be an object")
        _reject_unknown_keys(entry, {"label", "identity_seed", "private_code", "health"}, f"tokens[{i}]")
        label = entry.get("label")
        if not isinstance(label, str) or not _LABEL_RE.fullmatch(label):
            raise ScenarioError(
                f"tokens[{i}].label must be alphanumeric with ._- (got {label!r})"
            )
        if label in labels:
            raise ScenarioError(f"duplicate token label {label!r}")
        labels.add(label)

        if "identity_seed" in entry and "private_code" in entry:
            raise ScenarioError(f"token {label!r}: give identity_seed or private_code, not both")
        if "private_code" in entry:
            try:
                identity = Identity.from_private(entry["private_code"])
            except protocol.ProtocolError as exc:
                raise ScenarioError(f"token {label!r}: {exc}") from exc
        else:
            seed = entry.get("identity_seed", label)
            if not isinstance(seed, str):
                raise ScenarioError(f"token {label!r}: identity_seed must be a string")
            identity = identity_from_seed(seed)

        try:
            health = protocol.normalize_health_code(entry.get("health", "0000"))
        except protocol.ProtocolError as exc:
            raise ScenarioError(f"token {label!r}: {exc}") from exc

        if identity.public_id in public_ids:
            raise ScenarioError(
                f"tokens {public_ids[identity.public_id]!r} and {label!r} resolve to "
                "the same identity; self-filtering would corrupt their logs"
            )
        public_ids[identity.public_id] = label
        decls.append(TokenDecl(label, identity, health))
    return tuple(decls)


def _parse_contacts(obj: object, labels: set[str]) -> tuple[Contact, ...]:
    if not isinstance(obj, list):
        raise ScenarioError("contacts must be a list")
    contacts = []
    for i, entry in enumerate(obj):
        if not isinstance(entry, dict):
            raise ScenarioError(f"contacts[{i}] must be an object")
        _reject_unknown_keys(entry, {"a", "b", "start", "end"}, f"contacts[{i}]")
        a, b = entry.get("a"), entry.get("b")
        for side in (a, b):
            if not isinstance(side, str) or side not in labels:
                raise UnknownLabelError(f"contacts[{i}] references undeclared token {side!r}")
        if a == b:
            raise ScenarioError(f"contacts[{i}]: a token cannot contact itself")
        start, end = entry.get("start"), entry.get("end")
        for name, value in (("start", start), ("end", end)):
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ScenarioError(f"contacts[{i}].{name} must be a non-negative integer")
        if start >= end:
            raise InvertedIntervalError(f"contacts[{i}]: start {start} must be < end {end}")
        contacts.append(Contact(a, b, start, end))
    return tuple(contacts)


def run(scenario: Scenario) -> tuple[dict[str, token.TokenState], list[TraceEvent]]:
    """Execute the scenario and return final token states (by label) and
    the ordered event trace.

    Event order is fixed: ticks ascending; contacts in declaration order
    within a tick; the a-observes-b direction before b-observes-a within a
    contact. RNG draws happen in exactly that order, one per event, except
    at p = 1.0 or 0.0 where no draws are made at all.
    """
    params = scenario.params
    states = {t.label: token.power_on(t.identity, t.health_code) for t in scenario.tokens}
    ads = {label: token.current_advertisement(state) for label, state in states.items()}
    rng = random.Random(params.rng_seed)
    p = params.detection_probability

    events: list[TraceEvent] = []
    horizon = max((c.end for c in scenario.contacts), default=0)
    for tick in range(0, horizon, params.advertisement_interval_ticks):
        for contact in scenario.contacts:
            if not contact.start <= tick < contact.end:
                continue
            for observer, source in ((contact.a, contact.b), (contact.b, contact.a)):
                if p >= 1.0:
                    accepted = True
                elif p <= 0.0:
                    accepted = False
                else:
                    accepted = rng.random() < p
                events.append(TraceEvent(tick, observer, ads[source], accepted))
                if accepted:
                    states[observer] = token.observe_advertisement(states[observer], ads[source])
    return states, events


def oracle_counts(scenario: Scenario) -> dict[tuple[str, str], float]:
    """Expected observation count per (observer label, peer label).

    Brute force on purpose: every (tick, contact) pair is enumerated
    directly and counted when the tick is an advertisement slot, then
    scaled by the detection probability. At p = 1.0 the result is the
    exact integer count ``run`` must reproduce; below that it is the
    binomial expectation.
    """
    params = scenario.params
    counts: dict[tuple[str, str], int] = {}
    for contact in scenario.contacts:
        hits = 0
        for tick in range(contact.start, contact.end):
            if tick % params.advertisement_interval_ticks == 0:
                hits += 1
        for key in ((contact.a, contact.b), (contact.b, contact.a)):
            counts[key] = counts.get(key, 0) + hits
    p = params.detection_probability
    if p >= 1.0:
        return {key: float(n) for key, n in counts.items()}
    return {key: n * p for key, n in counts.items()}


def trace_to_csv(events: list[TraceEvent]) -> str:
    """Render the trace as ``tick,observer,advertisement,accepted`` lines.

    LF endings, no header; ``accepted`` is "true" or "false".
    """
    return "".join(
        f"{e.tick},{e.observer},{e.advertisement},{'true' if e.accepted else 'false'}\n"
        for e in events
    )
