import datetime

import pytest
from fastapi.testclient import TestClient
from hypothesis import given, settings, strategies as st

from c19token import protocol
from c19token.protocol import Identity
from c19token.sharesvc import (
    AuthenticationError,
    MalformedShareData,
    Message,
    OversizedBodyError,
    ShareClient,
    ShareRecord,
    ShareServiceError,
    ShareStore,
    create_app,
    parse_records_csv,
)

ALICE = Identity.from_private("a" * 32)
BOB = Identity.from_private("b" * 32)
CAROL = Identity.from_private("c" * 32)

EXAMPLE_LINE = "2ef94e20ba20beea,8a04e24bcd91beea,2020-08-01"


def record(reporter=ALICE, peer=BOB, date="2020-08-01"):
    return ShareRecord(reporter.public_id, peer.public_id, date)


class TestShareRecord:
    def test_example_line_round_trip(self):
        parsed = ShareRecord.from_line(EXAMPLE_LINE)
        assert parsed.reporter_public_id == "2ef94e20ba20beea"
        assert parsed.peer_public_id == "8a04e24bcd91beea"
        assert parsed.date == datetime.date(2020, 8, 1)
        assert parsed.line == EXAMPLE_LINE

    def test_reporter_must_differ_from_peer(self):
        with pytest.raises(MalformedShareData):
            ShareRecord(ALICE.public_id, ALICE.public_id, "2020-08-01")

    @pytest.mark.parametrize("bad_date", ["2020-8-1", "notadate", "2020/08/01", ""])
    def test_bad_dates_rejected(self, bad_date):
        with pytest.raises(MalformedShareData):
            record(date=bad_date)

    def test_bad_ids_rejected(self):
        with pytest.raises(MalformedShareData):
            ShareRecord("nothex", BOB.public_id, "2020-08-01")

    def test_hex_canonicalized(self):
        r = ShareRecord(ALICE.public_id.upper(), BOB.public_id, "2020-08-01")
        assert r.reporter_public_id == ALICE.public_id

    def test_parse_records_csv_reports_line_numbers(self):
        text = f"{record().line}\n\nbogus line\n"
        with pytest.raises(MalformedShareData, match="line 3"):
            parse_records_csv(text)

    def test_parse_records_csv_skips_blank_lines(self):
        text = f"\n{record().line}\n\n"
        assert parse_records_csv(text) == [record()]


class TestStoreSubmitQuery:
    def test_submit_and_query_both_sides(self):
        store = ShareStore()
        accepted = store.submit_encounters(ALICE.private_code, [record()])
        assert accepted == 1
        for viewer in (ALICE.public_id, BOB.public_id):
            assert store.query_encounters(viewer) == [record()]

    def test_duplicate_submission_stored_once(self):
        store = ShareStore()
        assert store.submit_encounters(ALICE.private_code, [record()]) == 1
        assert store.submit_encounters(ALICE.private_code, [record()]) == 0
        assert len(store.query_encounters(ALICE.public_id)) == 1

    def test_mismatched_reporter_rejected_atomically(self):
        store = ShareStore()
        good = record()
        forged = ShareRecord(BOB.public_id, CAROL.public_id, "2020-08-02")
        with pytest.raises(AuthenticationError):
            store.submit_encounters(ALICE.private_code, [good, forged])
        assert store.query_encounters(ALICE.public_id) == []

    def test_malformed_private_code_is_auth_failure(self):
        store = ShareStore()
        with pytest.raises(AuthenticationError):
            store.submit_encounters("tooshort", [record()])

    def test_query_unseen_id_is_empty(self):
        store = ShareStore()
        assert store.query_encounters(CAROL.public_id) == []

    def test_query_sorted_by_date_then_ids(self):
        store = ShareStore()
        records = [
            record(ALICE, BOB, "2020-08-03"),
            record(ALICE, CAROL, "2020-08-01"),
            record(ALICE, BOB, "2020-08-01"),
        ]
        store.submit_encounters(ALICE.private_code, records)
        results = store.query_encounters(ALICE.public_id)
        keys = [(r.date, r.reporter_public_id, r.peer_public_id) for r in results]
        assert keys == sorted(keys)

    def test_query_malformed_id_raises(self):
        store = ShareStore()
        with pytest.raises(protocol.ProtocolError):
            store.query_encounters("xyz")

    def test_export_csv_canonical_lines(self):
        store = ShareStore()
        reporter = Identity.from_private("d" * 32)
        store.submit_encounters(
            reporter.private_code,
            [ShareRecord(reporter.public_id, BOB.public_id, "2020-08-01")],
        )
        assert store.export_csv() == f"{reporter.public_id},{BOB.public_id},2020-08-01\n"


class TestStoreMessages:
    def test_post_and_fetch_for_encounter_partner(self):
        store = ShareStore()
        store.submit_encounters(ALICE.private_code, [record(ALICE, BOB)])
        message = store.post_message(ALICE.private_code, "Tested positive 2020-08-03", "2020-08-03")
        fetched = store.fetch_messages_for(BOB.public_id)
        assert fetched == [message]
        assert message.author_public_id == ALICE.public_id

    def test_no_encounters_means_no_audience(self):
        store = ShareStore()
        store.post_message(ALICE.private_code, "hello", "2020-08-03")
        assert store.fetch_messages_for(BOB.public_id) == []

    def test_non_partner_sees_nothing(self):
        store = ShareStore()
        store.submit_encounters(ALICE.private_code, [record(ALICE, BOB)])
        store.post_message(ALICE.private_code, "hello", "2020-08-03")
        assert store.fetch_messages_for(CAROL.public_id) == []

    def test_visibility_is_evaluated_at_fetch_time(self):
        store = ShareStore()
        message = store.post_message(ALICE.private_code, "posted first", "2020-08-01")
        assert store.fetch_messages_for(BOB.public_id) == []
        store.submit_encounters(BOB.private_code, [record(BOB, ALICE, "2020-08-02")])
        assert store.fetch_messages_for(BOB.public_id) == [message]

    def test_link_is_symmetric_for_visibility(self):
        store = ShareStore()
        store.submit_encounters(ALICE.private_code, [record(ALICE, BOB)])
        from_alice = store.post_message(ALICE.private_code, "from alice", "2020-08-02")
        from_bob = store.post_message(BOB.private_code, "from bob", "2020-08-02")
        assert store.fetch_messages_for(BOB.public_id) == [from_alice]
        assert store.fetch_messages_for(ALICE.public_id) == [from_bob]

    def test_own_messages_not_echoed_back(self):
        store = ShareStore()
        store.submit_encounters(ALICE.private_code, [record(ALICE, BOB)])
        store.post_message(ALICE.private_code, "mine", "2020-08-02")
        authors = {m.author_public_id for m in store.fetch_messages_for(ALICE.public_id)}
        assert ALICE.public_id not in authors

    def test_oversized_body_rejected(self):
        store = ShareStore()
        with pytest.raises(OversizedBodyError):
            store.post_message(ALICE.private_code, "x" * 2048, "2020-08-03")

    def test_exactly_1024_bytes_accepted(self):
        store = ShareStore()
        message = store.post_message(ALICE.private_code, "x" * 1024, "2020-08-03")
        assert len(message.body.encode()) == 1024

    def test_multibyte_bodies_measured_in_bytes(self):
        store = ShareStore()
        with pytest.raises(OversizedBodyError):
            store.post_message(ALICE.private_code, "é" * 513, "2020-08-03")

    def test_empty_body_rejected(self):
        store = ShareStore()
        with pytest.raises(MalformedShareData):
            store.post_message(ALICE.private_code, "", "2020-08-03")

    def test_fetch_sorted_by_date_then_author(self):
        store = ShareStore()
        store.submit_encounters(ALICE.private_code, [record(ALICE, CAROL)])
        store.submit_encounters(BOB.private_code, [record(BOB, CAROL, "2020-08-02")])
        store.post_message(BOB.private_code, "later", "2020-08-05")
        store.post_message(ALICE.private_code, "earlier", "2020-08-01")
        fetched = store.fetch_messages_for(CAROL.public_id)
        assert [m.body for m in fetched] == ["earlier", "later"]


# --- randomized graphs vs a brute-force adjacency oracle ---------------------

_IDS = [Identity.from_private(f"{i:032x}") for i in range(12)]


def oracle_visible(records, messages, viewer_id):
    partners = set()
    for r in records:
        if r.reporter_public_id == viewer_id:
            partners.add(r.peer_public_id)
        if r.peer_public_id == viewer_id:
            partners.add(r.reporter_public_id)
    visible = [m for m in messages if m.author_public_id in partners]
    return sorted(visible, key=lambda m: (m.date, m.author_public_id, m.id))


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_audience_gating_matches_graph_oracle(data):
    edges = data.draw(st.lists(
        st.tuples(st.integers(0, len(_IDS) - 1), st.integers(0, len(_IDS) - 1)),
        max_size=25,
    ))
    authors = data.draw(st.lists(st.integers(0, len(_IDS) - 1), max_size=8))

    store = ShareStore()
    records = []
    for day, (i, j) in enumerate(edges):
        if i == j:
            continue
        r = ShareRecord(_IDS[i].public_id, _IDS[j].public_id,
                        datetime.date(2020, 8, 1 + day % 28))
        store.submit_encounters(_IDS[i].private_code, [r])
        records.append(r)
    messages = [
        store.post_message(_IDS[k].private_code, f"m{n}", datetime.date(2020, 8, 1 + n % 28))
        for n, k in enumerate(authors)
    ]
    for identity in _IDS:
        assert store.fetch_messages_for(identity.public_id) == oracle_visible(
            records, messages, identity.public_id
        )


# --- HTTP surface ------------------------------------------------------------


@pytest.fixture
def api():
    store = ShareStore()
    app = create_app(store)
    with TestClient(app) as http:
        yield store, http


def submit_payload(private=ALICE, records=None):
    if records is None:
        records = [{"reporter": ALICE.public_id, "peer": BOB.public_id, "date": "2020-08-01"}]
    return {"private_code": private.private_code, "records": records}


class TestHttpEndpoints:
    def test_submit_then_query(self, api):
        _, http = api
        response = http.post("/encounters", json=submit_payload())
        assert response.status_code == 200
        assert response.json() == {"accepted": 1}
        got = http.get(f"/encounters/{BOB.public_id}")
        assert got.status_code == 200
        assert got.json()["records"] == [
            {"reporter": ALICE.public_id, "peer": BOB.public_id, "date": "2020-08-01"},
        ]

    def test_duplicate_submit_accepts_zero(self, api):
        _, http = api
        http.post("/encounters", json=submit_payload())
        assert http.post("/encounters", json=submit_payload()).json() == {"accepted": 0}

    def test_auth_failure_is_401(self, api):
        _, http = api
        response = http.post("/encounters", json=submit_payload(private=BOB))
        assert response.status_code == 401

    def test_malformed_record_is_400(self, api):
        _, http = api
        payload = submit_payload(records=[
            {"reporter": ALICE.public_id, "peer": ALICE.public_id, "date": "2020-08-01"},
        ])
        assert http.post("/encounters", json=payload).status_code == 400

    def test_malformed_query_id_is_400(self, api):
        _, http = api
        assert http.get("/encounters/zzz").status_code == 400

    def test_post_and_fetch_messages(self, api):
        _, http = api
        http.post("/encounters", json=submit_payload())
        posted = http.post("/messages", json={
            "private_code": ALICE.private_code, "body": "hi", "date": "2020-08-02",
        })
        assert posted.status_code == 200
        message_id = posted.json()["id"]
        fetched = http.get(f"/messages/for/{BOB.public_id}")
        assert fetched.json()["messages"] == [
            {"id": message_id, "author": ALICE.public_id, "body": "hi", "date": "2020-08-02"},
        ]

    def test_oversized_body_is_413(self, api):
        _, http = api
        response = http.post("/messages", json={
            "private_code": ALICE.private_code, "body": "x" * 2048, "date": "2020-08-02",
        })
        assert response.status_code == 413

    def test_store_stays_clean_after_failed_submit(self, api):
        store, http = api
        http.post("/encounters", json=submit_payload(private=BOB))
        assert store.export_csv() == ""


class TestShareClient:
    def test_round_trip_through_client(self, api):
        _, http = api
        client = ShareClient("http://testserver", http=http)
        accepted = client.submit_encounters(ALICE.private_code, [record()])
        assert accepted == 1
        assert client.query_encounters(BOB.public_id) == [record()]
        message_id = client.post_message(ALICE.private_code, "hello", "2020-08-02")
        fetched = client.fetch_messages_for(BOB.public_id)
        assert fetched == [Message(message_id, ALICE.public_id, "hello",
                                   datetime.date(2020, 8, 2))]

    def test_client_raises_typed_error_with_status(self, api):
        _, http = api
        client = ShareClient("http://testserver", http=http)
        with pytest.raises(ShareServiceError) as excinfo:
            client.submit_encounters(BOB.private_code, [record()])
        assert excinfo.value.status_code == 401

    def test_client_wraps_transport_failure(self):
        client = ShareClient("http://127.0.0.1:1")
        with pytest.raises(ShareServiceError) as excinfo:
            client.query_encounters(ALICE.public_id)
        assert excinfo.value.status_code is None


def test_concurrent_submissions_all_land():
    import threading

    store = ShareStore()
    identities = [Identity.from_private(f"{i:032x}") for i in range(8)]

    def worker(identity, n):
        for day in range(1, n + 1):
            store.submit_encounters(identity.private_code, [
                ShareRecord(identity.public_id, BOB.public_id, f"2020-08-{day:02d}"),
            ])

    threads = [threading.Thread(target=worker, args=(identity, 20)) for identity in identities]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(store.query_encounters(BOB.public_id)) == len(identities) * 20
