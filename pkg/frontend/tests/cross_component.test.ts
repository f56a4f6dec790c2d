/**
 * Cross-component checks against the real Python side: the health codec
 * must agree with the `ct` CLI on golden vectors, and the log file the UI
 * saves must be byte-identical to `ct token download-log`.
 */
import { execFile as execFileCb, spawn, ChildProcess } from "node:child_process";
import net from "node:net";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { BridgeClient } from "../src/bridge.js";
import { SYMPTOMS, encodeHealth } from "../src/health.js";

const execFile = promisify(execFileCb);
const PYTHON = process.env.CT_PYTHON ?? "python3";

function ct(...args: string[]) {
  return execFile(PYTHON, ["-m", "c19token", ...args]);
}

// deterministic PRNG so the 50 golden vectors are the same on every run
function mulberry32(seed: number): () => number {
  return () => {
    seed |= 0;
    seed = (seed + 0x6d2b79f5) | 0;
    let t = Math.imul(seed ^ (seed >>> 15), 1 | seed);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("health codec agrees with the CLI", () => {
  it("matches ct health encode on 50 random checkbox sets", async () => {
    const rng = mulberry32(0xc19);
    const sets: string[][] = [[], SYMPTOMS.map((s) => s.label)];
    while (sets.length < 50) {
      sets.push(SYMPTOMS.filter(() => rng() < 0.5).map((s) => s.label));
    }
    for (const labels of sets) {
      const { stdout } = await ct("health", "encode", ...labels);
      expect(stdout.trim()).toBe(encodeHealth(labels));
    }
  });
});

describe("against a live bridge", () => {
  let proc: ChildProcess;
  let base: string;

  beforeAll(async () => {
    const port = await freePort();
    base = `http://127.0.0.1:${port}`;
    proc = spawn(PYTHON, ["-m", "c19token", "bridge", "--port", String(port)], {
      stdio: "ignore",
    });
    await waitForBridge(base);
  });

  afterAll(() => {
    proc.kill();
  });

  it("grants verifiable identities", async () => {
    const client = new BridgeClient(base);
    const granted = await client.newIdentity();
    expect(granted.public_id).toMatch(/^[0-9a-f]{16}$/);
    expect(granted.private_code).toMatch(/^[0-9a-f]{32}$/);
    const { stdout } = await ct("id", "verify", granted.private_code, granted.public_id);
    expect(stdout.trim()).toBe("true");
  });

  it("saved log file is byte-identical to the CLI export", async () => {
    const client = new BridgeClient(base);
    const granted = await client.newIdentity();
    const update = await client.updateHardware(granted.private_code, "0001");
    expect(update.advertisement).toBe(`#C19:${granted.public_id}0001`);

    const peers = [
      "#C19:8a04e24bcd91beea0202",
      "#C19:8a04e24bcd91beea0202",
      "#C19:2ef94e20ba20beea0001",
      "#C19:ffeeddccbbaa99880000",
    ];
    for (const name of peers) {
      // emulation hook: stand in for BLE names arriving at the token
      const response = await fetch(`${base}/observe`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ name }),
      });
      expect(response.ok).toBe(true);
    }

    const uiSavedCsv = await client.downloadLogCsv();
    const { stdout: cliCsv } = await ct("token", "download-log", "--url", base);
    expect(uiSavedCsv).toBe(cliCsv);
    expect(uiSavedCsv).toContain("8a04e24bcd91beea,0202,2\n");

    const rows = await client.downloadLog();
    const rebuilt = rows.map((r) => `${r.peer_public_id},${r.health_code},${r.count}\n`).join("");
    expect(rebuilt).toBe(uiSavedCsv);
  });
});

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = net.createServer();
    server.once("error", reject);
    server.listen(0, "127.0.0.1", () => {
      const { port } = server.address() as net.AddressInfo;
      server.close(() => resolve(port));
    });
  });
}

async function waitForBridge(base: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(`${base}/status`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error(`bridge did not come up at ${base}`);
    }
    await new Promise((r) => setTimeout(r, 100));
  }
}
