#!/usr/bin/env python3
"""End-to-end walkthrough of the suite, all in-process.

Mints identities, configures two tokens, runs them through a scripted day
of contacts, analyzes the downloaded logs, and then exercises the sharing
service: one user shares their encounters and posts a status message the
other can fetch.
"""

import random

from c19token import protocol, sharesvc, simnet, token
from c19token.protocol import Symptom


def section(title):
    print(f"\n=== {title} ===")


def main():
    rng = random.Random(2020)

    section("identity grant")
    alice = protocol.generate_identity(rng)
    bob = protocol.generate_identity(rng)
    print(f"alice: private={alice.private_code} public={alice.public_id}")
    print(f"bob:   private={bob.private_code} public={bob.public_id}")

    section("health codes")
    alice_code = protocol.encode_health({Symptom.SORE_THROAT, Symptom.HEADACHE})
    bob_code = protocol.encode_health({Symptom.FEELING_FINE})
    print(f"alice ticks 'Sore throat' + 'Headache' -> {alice_code}")
    print(f"bob ticks 'Feeling fine'               -> {bob_code}")

    section("a day in proximity")
    scenario = simnet.Scenario(
        tokens=(
            simnet.TokenDecl("alice", alice, alice_code),
            simnet.TokenDecl("bob", bob, bob_code),
        ),
        contacts=(
            simnet.Contact("alice", "bob", 0, 25),
            simnet.Contact("alice", "bob", 40, 55),
        ),
        params=simnet.SimParams(advertisement_interval_ticks=1,
                                detection_probability=0.9, rng_seed=7),
    )
    states, events = simnet.run(scenario)
    print(f"{len(events)} delivery attempts, "
          f"{sum(e.accepted for e in events)} accepted")
    for label in ("alice", "bob"):
        for record in token.download_log(states[label]):
            print(f"{label} saw {record.peer_public_id} x{record.total_count} "
                  f"codes={dict(sorted(record.health_counts.items()))}")

    section("what bob's log means")
    for record in token.download_log(states["bob"]):
        for code, count in sorted(record.health_counts.items()):
            labels = ", ".join(protocol.health_labels(code)) or "(nothing)"
            print(f"peer {record.peer_public_id} advertised [{labels}] {count} times")

    section("encounter sharing")
    store = sharesvc.ShareStore()
    records = [
        sharesvc.ShareRecord(bob.public_id, r.peer_public_id, "2020-08-01")
        for r in token.download_log(states["bob"])
    ]
    accepted = store.submit_encounters(bob.private_code, records)
    print(f"bob shares {accepted} encounter(s):")
    print(store.export_csv(), end="")

    store.post_message(alice.private_code, "Symptoms worsening, getting tested.",
                       "2020-08-02")
    for message in store.fetch_messages_for(bob.public_id):
        print(f"bob fetches: [{message.date}] from {message.author_public_id}: "
              f"{message.body}")


if __name__ == "__main__":
    main()
