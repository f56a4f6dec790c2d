"""Optional central encounter-sharing service and its client.

Users who download their token's log may submit dated encounter lines to
this service and post short messages that become visible to everyone they
have a recorded encounter with. There are no accounts, sessions, or
personal data: the only identifier anywhere is the 16-hex public id.

Authorship is proven by preimage: the caller reveals the private
verification code and the service checks that it digests to the public id
the data is filed under. This is deliberately the weakest scheme consistent
with the identity design; the private code travels over the channel, so
real deployments must front the service with TLS. Nothing is ever stored
under a public id without a verifying preimage in the same request.

Storage is an embedded in-memory store; the dated CSV line
``reporter,peer,YYYY-MM-DD`` is the canonical serialization for bulk
import/export.
"""

from __future__ import annotations

import datetime
import threading
from dataclasses import dataclass
from typing import Iterable

import httpx
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import protocol
from .protocol import derive_public_id, normalize_public_id

MAX_MESSAGE_BYTES = 1024


class ShareError(Exception):
    """Base for sharing-service failures."""


class AuthenticationError(ShareError):
    """The presented private code does not authenticate the request."""


class MalformedShareData(ShareError, ValueError):
    """A record or message field is malformed."""


class OversizedBodyError(ShareError, ValueError):
    """Message body exceeds MAX_MESSAGE_BYTES."""


def _parse_date(value: object) -> datetime.date:
    if isinstance(value, datetime.date):
        return value
    if isinstance(value, str):
        try:
            return datetime.date.fromisoformat(value)
        except ValueError:
            pass
    raise MalformedShareData(f"date must be an ISO-8601 calendar date, got {value!r}")


@dataclass(frozen=True)
class ShareRecord:
    """One dated encounter: the submitting side is the reporter, but the
    link is treated symmetrically for queries and message visibility."""

    reporter_public_id: str
    peer_public_id: str
    date: datetime.date

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "reporter_public_id", normalize_public_id(self.reporter_public_id))
            object.__setattr__(self, "peer_public_id", normalize_public_id(self.peer_public_id))
        except protocol.ProtocolError as exc:
            raise MalformedShareData(str(exc)) from exc
        object.__setattr__(self, "date", _parse_date(self.date))
        if self.reporter_public_id == self.peer_public_id:
            raise MalformedShareData("reporter and peer must differ")

    @property
    def line(self) -> str:
        """Canonical CSV form: ``reporter,peer,YYYY-MM-DD``."""
        return f"{self.reporter_public_id},{self.peer_public_id},{self.date.isoformat()}"

    @classmethod
    def from_line(cls, line: str) -> "ShareRecord":
        parts = line.split(",")
        if len(parts) != 3:
            raise MalformedShareData(f"expected reporter,peer,YYYY-MM-DD, got {line!r}")
        return cls(parts[0], parts[1], parts[2])

    def _sort_key(self) -> tuple:
        return (self.date, self.reporter_public_id, self.peer_public_id)


@dataclass(frozen=True)
class Message:
    id: int
    author_public_id: str
    body: str
    date: datetime.date


def parse_records_csv(text: str) -> list[ShareRecord]:
    """Parse bulk-import CSV text, one record per non-empty line.

    Raises MalformedShareData naming the 1-based line number of the first
    bad line.
    """
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(ShareRecord.from_line(line.strip()))
        except MalformedShareData as exc:
            raise MalformedShareData(f"line {lineno}: {exc}") from exc
    return records


class ShareStore:
    """Embedded single-node store.

    All mutations serialize on one lock and are atomic per request; reads
    take the same lock and copy out, so they always see a consistent
    snapshot. Retention is unlimited here; expiry is a deployment policy,
    not part of the protocol.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._records: set[ShareRecord] = set()
        self._messages: list[Message] = []
        self._next_message_id = 1

    def _authenticate(self, private_code: str) -> str:
        try:
            return derive_public_id(private_code)
        except protocol.ProtocolError as exc:
            raise AuthenticationError(f"private code rejected: {exc}") from exc

    def submit_encounters(self, private_code: str, records: Iterable[ShareRecord]) -> int:
        """Store records reported by the holder of ``private_code``.

        Every record's reporter id must match the id derived from the
        private code, or nothing at all is stored. Exact duplicate triples
        are kept once; the return value counts only newly stored records.
        """
        reporter = self._authenticate(private_code)
        batch = list(records)
        for record in batch:
            if record.reporter_public_id != reporter:
                raise AuthenticationError(
                    f"record reporter {record.reporter_public_id} does not match "
                    f"the private code's public id {reporter}"
                )
        with self._lock:
            fresh = [r for r in batch if r not in self._records]
            self._records.update(fresh)
            return len(fresh)

    def query_encounters(self, public_id: str) -> list[ShareRecord]:
        """All records naming ``public_id`` on either side, sorted by
        (date, reporter, peer)."""
        wanted = normalize_public_id(public_id)
        with self._lock:
            hits = [
                r for r in self._records
                if wanted in (r.reporter_public_id, r.peer_public_id)
            ]
        return sorted(hits, key=ShareRecord._sort_key)

    def post_message(self, private_code: str, body: str, date: object) -> Message:
        """Store a message under the id derived from ``private_code``."""
        author = self._authenticate(private_code)
        if not isinstance(body, str) or not body:
            raise MalformedShareData("message body must be non-empty")
        if len(body.encode("utf-8")) > MAX_MESSAGE_BYTES:
            raise OversizedBodyError(f"message body exceeds {MAX_MESSAGE_BYTES} bytes")
        when = _parse_date(date)
        with self._lock:
            message = Message(self._next_message_id, author, body, when)
            self._next_message_id += 1
            self._messages.append(message)
            return message

    def fetch_messages_for(self, public_id: str) -> list[Message]:
        """Messages visible to ``public_id``: exactly those authored by
        someone sharing a record with it, in either role.

        Visibility is evaluated against the records as they stand now, so
        an encounter submitted after a message was posted retroactively
        exposes that message on the next fetch.
        """
        wanted = normalize_public_id(public_id)
        with self._lock:
            partners = set()
            for r in self._records:
                if r.reporter_public_id == wanted:
                    partners.add(r.peer_public_id)
                elif r.peer_public_id == wanted:
                    partners.add(r.reporter_public_id)
            hits = [m for m in self._messages if m.author_public_id in partners]
        return sorted(hits, key=lambda m: (m.date, m.author_public_id, m.id))

    def export_csv(self) -> str:
        """All stored records in canonical line form, sorted, LF endings."""
        with self._lock:
            records = sorted(self._records, key=ShareRecord._sort_key)
        return "".join(r.line + "\n" for r in records)


# --- HTTP surface -----------------------------------------------------------


class _RecordIn(BaseModel):
    reporter: str
    peer: str
    date: str


class _SubmitIn(BaseModel):
    private_code: str
    records: list[_RecordIn]


class _PostMessageIn(BaseModel):
    private_code: str
    body: str
    date: str


def _record_json(r: ShareRecord) -> dict:
    return {"reporter": r.reporter_public_id, "peer": r.peer_public_id, "date": r.date.isoformat()}


def _message_json(m: Message) -> dict:
    return {"id": m.id, "author": m.author_public_id, "body": m.body, "date": m.date.isoformat()}


def create_app(store: ShareStore | None = None) -> FastAPI:
    """The sharing service as an ASGI app around ``store``."""
    store = store if store is not None else ShareStore()
    app = FastAPI(title="encounter sharing service")

    @app.exception_handler(AuthenticationError)
    async def _auth_error(request, exc):
        return JSONResponse(status_code=401, content={"detail": str(exc)})

    @app.exception_handler(OversizedBodyError)
    async def _oversized(request, exc):
        return JSONResponse(status_code=413, content={"detail": str(exc)})

    @app.exception_handler(MalformedShareData)
    async def _malformed(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(protocol.ProtocolError)
    async def _protocol_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/encounters")
    def submit_encounters(body: _SubmitIn):
        records = [ShareRecord(r.reporter, r.peer, r.date) for r in body.records]
        accepted = store.submit_encounters(body.private_code, records)
        return {"accepted": accepted}

    @app.get("/encounters/{public_id}")
    def query_encounters(public_id: str):
        return {"records": [_record_json(r) for r in store.query_encounters(public_id)]}

    @app.post("/messages")
    def post_message(body: _PostMessageIn):
        message = store.post_message(body.private_code, body.body, body.date)
        return {"id": message.id}

    @app.get("/messages/for/{public_id}")
    def fetch_messages(public_id: str):
        return {"messages": [_message_json(m) for m in store.fetch_messages_for(public_id)]}

    return app


class ShareServiceError(RuntimeError):
    """Client-side failure talking to the service.

    ``status_code`` is the HTTP status for rejections, or None when the
    service could not be reached at all.
    """

    def __init__(self, message: str, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class ShareClient:
    """Plain request/response client for the sharing service.

    Stateless apart from the underlying connection pool; safe to use from
    one thread at a time, sequential requests only.
    """

    def __init__(self, base_url: str, http: httpx.Client | None = None):
        self._http = http or httpx.Client(base_url=base_url, timeout=10.0)

    def close(self) -> None:
        self._http.close()

    def _request(self, method: str, url: str, **kwargs) -> httpx.Response:
        try:
            response = self._http.request(method, url, **kwargs)
        except httpx.HTTPError as exc:
            raise ShareServiceError(f"cannot reach sharing service: {exc}") from exc
        if response.status_code >= 400:
            detail = None
            try:
                detail = response.json().get("detail")
            except Exception:
                pass
            raise ShareServiceError(
                detail or f"service returned HTTP {response.status_code}",
                status_code=response.status_code,
            )
        return response

    def submit_encounters(self, private_code: str, records: Iterable[ShareRecord]) -> int:
        payload = {
            "private_code": private_code,
            "records": [_record_json(r) for r in records],
        }
        return self._request("POST", "/encounters", json=payload).json()["accepted"]

    def query_encounters(self, public_id: str) -> list[ShareRecord]:
        data = self._request("GET", f"/encounters/{public_id}").json()
        return [ShareRecord(r["reporter"], r["peer"], r["date"]) for r in data["records"]]

    def post_message(self, private_code: str, body: str, date: str) -> int:
        payload = {"private_code": private_code, "body": body, "date": date}
        return self._request("POST", "/messages", json=payload).json()["id"]

    def fetch_messages_for(self, public_id: str) -> list[Message]:
        data = self._request("GET", f"/messages/for/{public_id}").json()
        return [
            Message(m["id"], m["author"], m["body"], datetime.date.fromisoformat(m["date"]))
            for m in data["messages"]
        ]
