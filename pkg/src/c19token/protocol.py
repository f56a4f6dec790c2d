"""Wire formats and identity scheme for the BLE contact-tracing token.

Everything that crosses a wire or a file is lower-case ASCII hex:

* health code    -- 4 hex digits, a 16-bit symptom bitmask
* public id      -- 16 hex digits (64 bits), derived from the private code
* private code   -- 32 hex digits (128 bits), kept secret by the owner
* datagram       -- public id + health code, 20 hex digits
* advertised name-- "#C19:" + datagram, 25 characters, broadcast as the
                    BLE local device name

Hex input is accepted case-insensitively; canonical output is always
lower-case. The "#C19:" prefix itself is case-sensitive. The public id is
the first 8 bytes of SHA-256 over the canonical (lower-case) private code,
so revealing the private code proves authorship of the public id.
"""

from __future__ import annotations

import hashlib
import random
import re
import secrets
from dataclasses import dataclass
from enum import Enum, IntFlag
from typing import Iterable

ADVERTISEMENT_PREFIX = "#C19:"
ADVERTISED_NAME_LENGTH = 25

# Validated, canonical 25-char advertised name. Plain strings on the wire;
# build_advertised_name / parse_advertised_name enforce the grammar.
AdvertisedName = str

_HEX_RES = {
    digits: re.compile(f"[0-9a-fA-F]{{{digits}}}")
    for digits in (4, 16, 20, 32)
}


class ProtocolError(ValueError):
    """A protocol value is malformed (bad hex, wrong length, mismatched pair)."""


def _canonical_hex(value: str, digits: int, what: str) -> str:
    if not isinstance(value, str) or not _HEX_RES[digits].fullmatch(value):
        raise ProtocolError(f"{what} must be exactly {digits} hex digits, got {value!r}")
    return value.lower()


def normalize_health_code(code: str) -> str:
    return _canonical_hex(code, 4, "health code")


def normalize_public_id(public_id: str) -> str:
    return _canonical_hex(public_id, 16, "public id")


def normalize_private_code(private_code: str) -> str:
    return _canonical_hex(private_code, 32, "private code")


class Symptom(IntFlag):
    """One bit of the 16-bit health mask. Bit values follow the fixed
    enumeration order, so the mask of a selection is just the sum."""

    FEELING_FINE = 1
    SORE_THROAT = 2
    COUGH = 4
    RUNNY_NOSE = 8
    SHORTNESS_OF_BREATH = 16
    MUSCLE_PAIN = 32
    LOSS_OF_SMELL_OR_TASTE = 64
    DIARRHEA = 128
    FEVER = 256
    HEADACHE = 512
    TESTED_NEGATIVE = 1024
    TESTED_POSITIVE = 2048
    WEARING_MASK = 4096
    NOT_WEARING_MASK = 8192
    SYMPTOMS_GETTING_BETTER = 16384
    SYMPTOMS_GETTING_WORSE = 32768

    @property
    def bit_value(self) -> int:
        return self.value

    @property
    def ordinal(self) -> int:
        return self.value.bit_length() - 1

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "Symptom":
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise ProtocolError(f"unknown symptom label: {label!r}") from None


_LABELS: dict[Symptom, str] = {
    Symptom.FEELING_FINE: "Feeling fine",
    Symptom.SORE_THROAT: "Sore throat",
    Symptom.COUGH: "Cough",
    Symptom.RUNNY_NOSE: "Runny nose or nasal congestion",
    Symptom.SHORTNESS_OF_BREATH: "Shortness of breath or difficulty breathing",
    Symptom.MUSCLE_PAIN: "Muscle pain",
    Symptom.LOSS_OF_SMELL_OR_TASTE: "Loss of smell or taste",
    Symptom.DIARRHEA: "Diarrhea",
    Symptom.FEVER: "Fever",
    Symptom.HEADACHE: "Headache",
    Symptom.TESTED_NEGATIVE: "Tested negative for Covid-19",
    Symptom.TESTED_POSITIVE: "Tested positive for Covid-19",
    Symptom.WEARING_MASK: "Wearing a mask",
    Symptom.NOT_WEARING_MASK: "Not wearing a mask",
    Symptom.SYMPTOMS_GETTING_BETTER: "Symptoms are getting better",
    Symptom.SYMPTOMS_GETTING_WORSE: "Symptoms are getting worse",
}

_BY_LABEL: dict[str, Symptom] = {label: s for s, label in _LABELS.items()}

ALL_SYMPTOMS: frozenset[Symptom] = frozenset(Symptom)


def encode_health(symptoms: Iterable[Symptom]) -> str:
    """Sum the bit values of ``symptoms`` into the canonical 4-hex-digit code.

    The empty selection is legal and encodes to "0000" (no information
    supplied). No semantic checks are made on the combination: the code is
    a raw sum of whatever was ticked.
    """
    mask = 0
    for symptom in symptoms:
        mask |= Symptom(symptom).value
    if not 0 <= mask <= 0xFFFF:
        # unreachable with the 16 defined flags; guards the 4-digit invariant
        # against synthetic flag values
        raise ProtocolError(f"health mask out of range: {mask:#x}")
    return f"{mask:04x}"


def decode_health(code: str) -> frozenset[Symptom]:
    """Inverse of :func:`encode_health`.

    Raises ProtocolError unless ``code`` is exactly 4 hex digits
    (case-insensitive).
    """
    mask = int(normalize_health_code(code), 16)
    return frozenset(s for s in Symptom if s.value & mask)


def health_labels(code: str) -> list[str]:
    """Human-readable labels for a health code, in enumeration (bit) order."""
    return [s.label for s in sorted(decode_health(code), key=lambda s: s.value)]


def derive_public_id(private_code: str) -> str:
    """Public id = first 8 bytes of SHA-256 over the canonical private code.

    Deterministic, and one-way: knowing the public id reveals nothing about
    the private code, while presenting the private code later proves the
    public id originated from its holder.
    """
    code = normalize_private_code(private_code)
    return hashlib.sha256(code.encode("ascii")).hexdigest()[:16]


def verify_public_id(private_code: str, public_id: str) -> bool:
    """True iff ``public_id`` was derived from ``private_code``."""
    return derive_public_id(private_code) == normalize_public_id(public_id)


@dataclass(frozen=True)
class Identity:
    """A private verification code and the public id derived from it.

    Construction rejects pairs where the derivation does not hold, so any
    Identity in the program is internally consistent.
    """

    private_code: str
    public_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "private_code", normalize_private_code(self.private_code))
        object.__setattr__(self, "public_id", normalize_public_id(self.public_id))
        if derive_public_id(self.private_code) != self.public_id:
            raise ProtocolError("public id was not derived from this private code")

    @classmethod
    def from_private(cls, private_code: str) -> "Identity":
        code = normalize_private_code(private_code)
        return cls(code, derive_public_id(code))


def generate_identity(rng: random.Random | None = None) -> Identity:
    """Mint a fresh 128-bit identity.

    By default the private code comes from the OS entropy pool; pass a
    seeded ``random.Random`` to make the result reproducible in tests and
    simulations. OS entropy failures (``OSError``) propagate to the caller.
    """
    if rng is None:
        private_code = secrets.token_hex(16)
    else:
        private_code = f"{rng.getrandbits(128):032x}"
    return Identity.from_private(private_code)


@dataclass(frozen=True)
class Datagram:
    """The 20-hex payload an advertised name carries: public id + health code."""

    public_id: str
    health_code: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "public_id", normalize_public_id(self.public_id))
        object.__setattr__(self, "health_code", normalize_health_code(self.health_code))

    @property
    def text(self) -> str:
        return self.public_id + self.health_code

    @property
    def symptoms(self) -> frozenset[Symptom]:
        return decode_health(self.health_code)


class ParseReject(Enum):
    """Why an advertised name was not treated as a datagram.

    Rejects are the expected path for every ordinary BLE name in range
    (headphones, speakers, ...), not faults; they are typed so the
    simulator can keep statistics on them.
    """

    WRONG_PREFIX = "wrong-prefix"
    WRONG_LENGTH = "wrong-length"
    NON_HEX = "non-hex"


def build_advertised_name(datagram: Datagram) -> AdvertisedName:
    """Render the BLE local name: "#C19:" + 20-hex datagram, 25 chars."""
    return ADVERTISEMENT_PREFIX + datagram.text


def parse_advertised_name(text: str) -> Datagram | ParseReject:
    """Total parser over arbitrary strings.

    Accepts exactly the grammar "#C19:" + 20 hex digits (hex part
    case-insensitive) and returns the datagram; anything else comes back as
    a :class:`ParseReject` naming the first grammar rule that failed.
    """
    if not isinstance(text, str) or not text.startswith(ADVERTISEMENT_PREFIX):
        return ParseReject.WRONG_PREFIX
    payload = text[len(ADVERTISEMENT_PREFIX):]
    if len(payload) != 20:
        return ParseReject.WRONG_LENGTH
    if not _HEX_RES[20].fullmatch(payload):
        return ParseReject.NON_HEX
    payload = payload.lower()
    return Datagram(payload[:16], payload[16:])
