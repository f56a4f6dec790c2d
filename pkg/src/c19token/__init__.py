"""Phone-free BLE contact-tracing tokens, emulated end to end.

The pieces: a wire codec and identity scheme (:mod:`c19token.protocol`),
an emulated token with a volatile encounter log (:mod:`c19token.token`),
a deterministic proximity simulator (:mod:`c19token.simnet`), the optional
encounter-sharing service (:mod:`c19token.sharesvc`), the localhost bridge
the config UI talks to (:mod:`c19token.bridge`), and the ``ct`` command
line (:mod:`c19token.cli`).
"""

from .protocol import (
    ADVERTISEMENT_PREFIX,
    Datagram,
    Identity,
    ParseReject,
    ProtocolError,
    Symptom,
    build_advertised_name,
    decode_health,
    derive_public_id,
    encode_health,
    generate_identity,
    parse_advertised_name,
    verify_public_id,
)

__version__ = "0.1.0"

__all__ = [
    "ADVERTISEMENT_PREFIX",
    "Datagram",
    "Identity",
    "ParseReject",
    "ProtocolError",
    "Symptom",
    "build_advertised_name",
    "decode_health",
    "derive_public_id",
    "encode_health",
    "generate_identity",
    "parse_advertised_name",
    "verify_public_id",
    "__version__",
]
