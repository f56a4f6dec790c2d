"""Local bridge exposing an emulated token's configuration verbs over HTTP.

Stands in for the browser-to-hardware link: the config UI and the ``ct
token`` subcommands talk to this localhost service instead of a BLE radio.
The verbs mirror what the configuration channel offers — mint an identity,
update the hardware with identity + health code, download the device log,
and connect/disconnect the battery. ``/observe`` is an emulation-only hook
that feeds the token a discovered BLE name, for demos and tests.

The bridge owns exactly one token and serializes all access to it.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import protocol, token
from .protocol import Identity, ParseReject

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8642
DEFAULT_URL = f"http://{DEFAULT_HOST}:{DEFAULT_PORT}"


class NotConfiguredError(RuntimeError):
    """No identity has been written to the token yet."""


class TokenBridge:
    """Holds the emulated token; every verb takes the lock, so callers may
    hit the HTTP surface concurrently without corrupting the state."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._state: token.TokenState | None = None

    def new_identity(self) -> Identity:
        return protocol.generate_identity()

    def update_hardware(self, private_code: str, health_code: str) -> token.TokenState:
        """Write identity + health code to the token.

        A powered token with the same identity just changes its advertised
        code and keeps its log. Writing a different identity (or writing to
        an unpowered token) powers it up fresh, with an empty log.
        """
        identity = Identity.from_private(private_code)
        with self._lock:
            state = self._state
            if state is not None and state.powered and state.identity == identity:
                self._state = token.set_health(state, health_code)
            else:
                self._state = token.power_on(identity, health_code)
            return self._state

    def power(self, on: bool) -> token.TokenState:
        with self._lock:
            state = self._state
            if state is None:
                raise NotConfiguredError("configure the token before powering it")
            if on:
                if not state.powered:
                    self._state = token.power_on(state.identity, state.health_code)
            else:
                self._state = token.power_off(state)
            return self._state

    def observe(self, name: str) -> bool:
        """Feed one discovered BLE name to the token; True if it was logged."""
        with self._lock:
            state = self._state
            if state is None:
                raise NotConfiguredError("configure the token before feeding it names")
            self._state = token.observe_advertisement(state, name)
            parsed = protocol.parse_advertised_name(name)
            return not isinstance(parsed, ParseReject) and parsed.public_id != state.identity.public_id

    def download_log(self) -> list[token.EncounterRecord]:
        with self._lock:
            state = self._state
            if state is None:
                raise NotConfiguredError("configure the token before downloading its log")
            return token.download_log(state)

    def snapshot(self) -> token.TokenState | None:
        with self._lock:
            return self._state


class _UpdateIn(BaseModel):
    private_code: str
    health: str


class _PowerIn(BaseModel):
    on: bool


class _ObserveIn(BaseModel):
    name: str


def create_app(bridge: TokenBridge | None = None) -> FastAPI:
    bridge = bridge if bridge is not None else TokenBridge()
    app = FastAPI(title="token bridge")
    # The UI is served from a file:// page or a dev server; the bridge is a
    # localhost-only tool, so any origin may call it.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(protocol.ProtocolError)
    async def _protocol_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(token.TokenOffError)
    async def _token_off(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(NotConfiguredError)
    async def _not_configured(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.post("/identity/new")
    def identity_new():
        identity = bridge.new_identity()
        return {"private_code": identity.private_code, "public_id": identity.public_id}

    @app.post("/update-hardware")
    def update_hardware(body: _UpdateIn):
        state = bridge.update_hardware(body.private_code, body.health)
        return {
            "public_id": state.identity.public_id,
            "health": state.health_code,
            "advertisement": token.current_advertisement(state),
        }

    @app.post("/power")
    def power(body: _PowerIn):
        state = bridge.power(body.on)
        return {"powered": state.powered}

    @app.post("/observe")
    def observe(body: _ObserveIn):
        return {"accepted": bridge.observe(body.name)}

    @app.get("/download-log")
    def download_log():
        records = bridge.download_log()
        rows = [
            {"peer_public_id": r.peer_public_id, "health_code": code, "count": count}
            for r in records
            for code, count in sorted(r.health_counts.items())
        ]
        return {"records": rows}

    @app.get("/download-log.csv")
    def download_log_csv():
        csv_text = token.export_log_csv(bridge.download_log())
        return PlainTextResponse(csv_text, media_type="text/csv")

    @app.get("/status")
    def status():
        state = bridge.snapshot()
        if state is None:
            return {"configured": False, "powered": False, "public_id": None,
                    "health": None, "advertisement": None}
        return {
            "configured": True,
            "powered": state.powered,
            "public_id": state.identity.public_id,
            "health": state.health_code,
            "advertisement": token.current_advertisement(state) if state.powered else None,
        }

    return app


def serve(host: str = DEFAULT_HOST, port: int = DEFAULT_PORT) -> None:
    """Run the bridge until interrupted. Blocks."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")
