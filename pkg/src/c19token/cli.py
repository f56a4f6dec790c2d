"""Operator command line for the contact-tracing token suite.

Subcommands: ``id`` (identity generation/verification), ``health`` (symptom
codec), ``token`` (talks to a running bridge), ``sim`` (scenario runs),
``report`` (log analysis), ``share`` (sharing-service client), ``bridge``
(serves the local bridge for the config UI).

Exit codes are a stable scripting contract: 0 success, 1 usage or
validation error (including authentication rejections), 2 I/O or network
error. Commands are thin shells over the library modules and print
deterministically for a given input and seed.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import random
import sys
from pathlib import Path

import httpx

from . import bridge, protocol, sharesvc, simnet, token
from .protocol import ProtocolError, Symptom

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

# Codes made only of these read as "no symptom shown": the wearer feels
# fine, tested negative, or is just reporting mask usage. Everything else
# flags the encounter as symptomatic. Override per run with --benign.
BENIGN_DEFAULT = frozenset({
    Symptom.FEELING_FINE,
    Symptom.TESTED_NEGATIVE,
    Symptom.WEARING_MASK,
})


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for I/O here.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def cmd_id_new(args) -> int:
    rng = random.Random(args.seed) if args.seed is not None else None
    identity = protocol.generate_identity(rng)
    print(identity.private_code)
    print(identity.public_id)
    return EXIT_OK


def cmd_id_verify(args) -> int:
    ok = protocol.verify_public_id(args.private_code, args.public_id)
    print("true" if ok else "false")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_health_encode(args) -> int:
    print(protocol.encode_health(Symptom.from_label(label) for label in args.labels))
    return EXIT_OK


def cmd_health_decode(args) -> int:
    for label in protocol.health_labels(args.code):
        print(label)
    return EXIT_OK


def cmd_sim_run(args) -> int:
    scenario = simnet.load_scenario(Path(args.scenario).read_text())
    states, events = simnet.run(scenario)

    if args.trace_out:
        Path(args.trace_out).write_text(simnet.trace_to_csv(events))
    if args.logs_out:
        outdir = Path(args.logs_out)
        outdir.mkdir(parents=True, exist_ok=True)
        for label, state in states.items():
            csv_text = token.export_log_csv(token.download_log(state))
            (outdir / f"{label}.csv").write_text(csv_text)

    width = max(len(label) for label in states)
    width = max(width, len("token"))
    print(f"{'token'.ljust(width)}  peers  observations")
    for label in sorted(states):
        records = token.download_log(states[label])
        total = sum(r.total_count for r in records)
        print(f"{label.ljust(width)}  {len(records):5d}  {total:12d}")

    if args.check_oracle:
        _check_oracle(scenario, states)
        print("oracle check passed")
    return EXIT_OK


def _check_oracle(scenario: simnet.Scenario, states) -> None:
    if scenario.params.detection_probability < 1.0:
        raise CliError("--check-oracle requires detection_probability = 1.0")
    public_ids = {t.label: t.identity.public_id for t in scenario.tokens}
    for (observer, peer), want in simnet.oracle_counts(scenario).items():
        counts = states[observer].log.get(public_ids[peer], {})
        got = sum(counts.values())
        if got != want:
            raise CliError(
                f"oracle mismatch: {observer} logged {peer} {got} times, expected {want:g}"
            )


def cmd_report(args) -> int:
    rows, errors = _parse_log_csv(Path(args.log_csv).read_text())
    if errors:
        for message in errors:
            print(f"error: {message}", file=sys.stderr)
        return EXIT_VALIDATION

    benign = BENIGN_DEFAULT
    if args.benign is not None:
        benign = frozenset(Symptom.from_label(label) for label in args.benign)

    symptomatic_total = 0
    for peer, code, count in rows:
        symptoms = protocol.decode_health(code)
        flagged = bool(symptoms - benign)
        if flagged:
            symptomatic_total += count
        labels = "; ".join(protocol.health_labels(code)) or "-"
        flag = "SYMPTOMATIC" if flagged else "-"
        print(f"{peer}\t{code}\t{count}\t{flag}\t{labels}")
    print(f"symptomatic encounters: {symptomatic_total}")
    return EXIT_OK


def _parse_log_csv(text: str) -> tuple[list[tuple[str, str, int]], list[str]]:
    rows: list[tuple[str, str, int]] = []
    errors: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            errors.append(f"line {lineno}: expected peer_public_id,health_code,count")
            continue
        try:
            peer = protocol.normalize_public_id(parts[0])
            code = protocol.normalize_health_code(parts[1])
            count = int(parts[2])
            if count <= 0:
                raise ValueError(f"count must be positive, got {count}")
        except ValueError as exc:  # ProtocolError is a ValueError
            errors.append(f"line {lineno}: {exc}")
            continue
        rows.append((peer, code, count))
    return rows, errors


def _share_client(args) -> sharesvc.ShareClient:
    url = args.url or os.environ.get("CT_SHARE_URL")
    if not url:
        raise CliError("no sharing service URL: pass --url or set CT_SHARE_URL")
    return sharesvc.ShareClient(url)


def cmd_share_submit(args) -> int:
    records = sharesvc.parse_records_csv(Path(args.records).read_text())
    print(_share_client(args).submit_encounters(args.private, records))
    return EXIT_OK


def cmd_share_query(args) -> int:
    for record in _share_client(args).query_encounters(args.public_id):
        print(record.line)
    return EXIT_OK


def cmd_share_post(args) -> int:
    date = args.date or datetime.date.today().isoformat()
    print(_share_client(args).post_message(args.private, args.body, date))
    return EXIT_OK


def cmd_share_fetch(args) -> int:
    for message in _share_client(args).fetch_messages_for(args.public_id):
        print(json.dumps({
            "id": message.id,
            "author": message.author_public_id,
            "date": message.date.isoformat(),
            "body": message.body,
        }))
    return EXIT_OK


def _bridge_url(args) -> str:
    return args.url or os.environ.get("CT_BRIDGE_URL") or bridge.DEFAULT_URL


def _bridge_request(method: str, url: str, **kwargs) -> httpx.Response:
    try:
        response = httpx.request(method, url, timeout=10.0, **kwargs)
    except httpx.HTTPError as exc:
        raise CliError(f"cannot reach bridge: {exc}", EXIT_IO) from exc
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", f"HTTP {response.status_code}")
        except Exception:
            detail = f"HTTP {response.status_code}"
        raise CliError(f"bridge rejected request: {detail}")
    return response


def cmd_token_update(args) -> int:
    response = _bridge_request(
        "POST", f"{_bridge_url(args)}/update-hardware",
        json={"private_code": args.private, "health": args.health},
    )
    print(response.json()["advertisement"])
    return EXIT_OK


def cmd_token_download(args) -> int:
    response = _bridge_request("GET", f"{_bridge_url(args)}/download-log.csv")
    sys.stdout.write(response.text)
    return EXIT_OK


def cmd_token_power(args) -> int:
    response = _bridge_request(
        "POST", f"{_bridge_url(args)}/power", json={"on": args.state == "on"}
    )
    print("on" if response.json()["powered"] else "off")
    return EXIT_OK


def cmd_bridge(args) -> int:
    bridge.serve(args.host, args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ct", description="contact-tracing token suite")
    sub = parser.add_subparsers(dest="command", required=True)

    p_id = sub.add_parser("id", help="identity generation and verification")
    id_sub = p_id.add_subparsers(dest="subcommand", required=True)
    p = id_sub.add_parser("new", help="mint an identity (private code + public id)")
    p.add_argument("--seed", type=int, help="deterministic seed (tests only)")
    p.set_defaults(func=cmd_id_new)
    p = id_sub.add_parser("verify", help="check a private code against a public id")
    p.add_argument("private_code")
    p.add_argument("public_id")
    p.set_defaults(func=cmd_id_verify)

    p_health = sub.add_parser("health", help="symptom <-> health-code codec")
    health_sub = p_health.add_subparsers(dest="subcommand", required=True)
    p = health_sub.add_parser("encode", help="labels to 4-hex health code")
    p.add_argument("labels", nargs="*", metavar="LABEL")
    p.set_defaults(func=cmd_health_encode)
    p = health_sub.add_parser("decode", help="4-hex health code to labels")
    p.add_argument("code")
    p.set_defaults(func=cmd_health_decode)

    p_sim = sub.add_parser("sim", help="proximity simulator")
    sim_sub = p_sim.add_subparsers(dest="subcommand", required=True)
    p = sim_sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario", help="scenario JSON path")
    p.add_argument("--trace-out", help="write the event trace CSV here")
    p.add_argument("--logs-out", help="directory for per-token log CSVs")
    p.add_argument("--check-oracle", action="store_true",
                   help="fail unless simulated counts match the brute-force oracle (p=1 only)")
    p.set_defaults(func=cmd_sim_run)

    p = sub.add_parser("report", help="analyze an exported token log")
    p.add_argument("log_csv", help="token log CSV path")
    p.add_argument("--benign", action="append", metavar="LABEL",
                   help="treat LABEL as non-symptomatic (repeatable; replaces the default set)")
    p.set_defaults(func=cmd_report)

    p_share = sub.add_parser("share", help="encounter-sharing service client")
    share_sub = p_share.add_subparsers(dest="subcommand", required=True)
    for name in ("submit", "query", "post", "fetch"):
        sp = share_sub.add_parser(name)
        sp.add_argument("--url", help="service base URL (or set CT_SHARE_URL)")
        if name == "submit":
            sp.add_argument("--private", required=True, help="reporter private code")
            sp.add_argument("records", help="CSV file of reporter,peer,YYYY-MM-DD lines")
            sp.set_defaults(func=cmd_share_submit)
        elif name == "query":
            sp.add_argument("public_id")
            sp.set_defaults(func=cmd_share_query)
        elif name == "post":
            sp.add_argument("--private", required=True, help="author private code")
            sp.add_argument("--date", help="ISO date (default: today)")
            sp.add_argument("body", help="message text")
            sp.set_defaults(func=cmd_share_post)
        else:
            sp.add_argument("public_id")
            sp.set_defaults(func=cmd_share_fetch)

    p_token = sub.add_parser("token", help="drive a running token bridge")
    token_sub = p_token.add_subparsers(dest="subcommand", required=True)
    p = token_sub.add_parser("update-hardware", help="write identity + health code")
    p.add_argument("--private", required=True, help="private code (identity)")
    p.add_argument("--health", required=True, help="4-hex health code")
    p.add_argument("--url", help=f"bridge URL (default {bridge.DEFAULT_URL})")
    p.set_defaults(func=cmd_token_update)
    p = token_sub.add_parser("download-log", help="print the device log CSV")
    p.add_argument("--url", help=f"bridge URL (default {bridge.DEFAULT_URL})")
    p.set_defaults(func=cmd_token_download)
    p = token_sub.add_parser("power", help="connect or disconnect the battery")
    p.add_argument("state", choices=("on", "off"))
    p.add_argument("--url", help=f"bridge URL (default {bridge.DEFAULT_URL})")
    p.set_defaults(func=cmd_token_power)

    p = sub.add_parser("bridge", help="serve the local token bridge for the config UI")
    p.add_argument("--host", default=bridge.DEFAULT_HOST)
    p.add_argument("--port", type=int, default=bridge.DEFAULT_PORT)
    p.set_defaults(func=cmd_bridge)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except sharesvc.ShareServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO if exc.status_code is None else EXIT_VALIDATION
    except (ProtocolError, simnet.ScenarioError, sharesvc.ShareError, token.TokenOffError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
