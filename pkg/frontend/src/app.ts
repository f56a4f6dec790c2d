/**
 * The configuration page: identity grant on first load, the symptom
 * checkbox list, "Update hardware", and "Download device log".
 *
 * All token access goes through the injected BridgeClient; the page itself
 * never calls fetch. The device log is rendered locally and saved to a
 * local file only — it is never sent anywhere.
 */

import { BridgeClient } from "./bridge.js";
import { SYMPTOMS, decodeHealth, encodeHealth } from "./health.js";
import {
  KeyValueStorage,
  StoredIdentity,
  getDefaultStorage,
  loadIdentity,
  saveIdentity,
} from "./storage.js";

export interface AppOptions {
  root: HTMLElement;
  client: BridgeClient;
  storage?: KeyValueStorage;
  /** Called when "Update hardware" is clicked with nothing ticked. */
  confirmEmptySelection?: () => boolean;
  saveFile?: (filename: string, contents: string) => void;
}

export interface AppHandle {
  identity: StoredIdentity;
  updateHardware(): Promise<void>;
  downloadLog(): Promise<void>;
  saveLog(): Promise<void>;
}

const PAGE = `
  <h1>Token configuration</h1>
  <div id="error-banner" class="error" hidden></div>
  <div id="id-banner" class="banner"></div>
  <div id="private-notice" class="notice" hidden></div>
  <fieldset>
    <legend>Current symptoms</legend>
    <ul id="symptom-list" class="symptoms"></ul>
    <button id="update-btn" type="button">Update hardware</button>
    <div id="advertisement" class="advertisement" hidden></div>
  </fieldset>
  <fieldset>
    <legend>Device log</legend>
    <button id="download-btn" type="button">Download device log</button>
    <div id="log-empty" hidden>No encounters.</div>
    <div id="log-view" hidden>
      <table id="log-table">
        <thead>
          <tr><th>Peer public ID</th><th>Reported symptoms</th><th>Count</th></tr>
        </thead>
        <tbody></tbody>
      </table>
      <button id="save-btn" type="button">Save log to file</button>
    </div>
  </fieldset>
`;

export async function initApp(options: AppOptions): Promise<AppHandle> {
  const { root, client } = options;
  const storage = options.storage ?? getDefaultStorage();
  const confirmEmpty =
    options.confirmEmptySelection ??
    (() => window.confirm("Nothing is ticked. Update the token with the empty health code 0000?"));
  const saveFile = options.saveFile ?? browserSaveFile;

  root.innerHTML = PAGE;
  const el = <T extends HTMLElement>(id: string) => root.querySelector(`#${id}`) as T;
  const errorBanner = el("error-banner");

  const showError = (message: string) => {
    errorBanner.hidden = false;
    errorBanner.textContent = message;
  };
  const clearError = () => {
    errorBanner.hidden = true;
    errorBanner.textContent = "";
  };

  const list = el("symptom-list");
  for (const symptom of SYMPTOMS) {
    const item = document.createElement("li");
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = symptom.label;
    box.className = "symptom-box";
    label.append(box, ` ${symptom.label}`);
    item.append(label);
    list.append(item);
  }

  let identity: StoredIdentity;
  try {
    const grant = await ensureIdentity(storage, client);
    identity = grant.identity;
    el("id-banner").textContent = grant.fresh
      ? `Your public contact tracing ID will be: ${identity.publicId}`
      : `Your public contact tracing ID: ${identity.publicId}`;
    if (grant.fresh) {
      const notice = el("private-notice");
      notice.hidden = false;
      notice.textContent =
        "Save this private verification code somewhere safe — it proves your ID is " +
        `yours and is shown only once: ${identity.privateCode}`;
    }
  } catch (err) {
    showError(`could not obtain an identity: ${describe(err)}`);
    throw err;
  }

  const checkedLabels = (): string[] =>
    Array.from(root.querySelectorAll<HTMLInputElement>(".symptom-box"))
      .filter((box) => box.checked)
      .map((box) => box.value);

  async function updateHardware(): Promise<void> {
    const labels = checkedLabels();
    if (labels.length === 0 && !confirmEmpty()) {
      return;
    }
    const health = encodeHealth(labels);
    try {
      const result = await client.updateHardware(identity.privateCode, health);
      clearError();
      const view = el("advertisement");
      view.hidden = false;
      view.textContent = `Token is advertising: ${result.advertisement}`;
    } catch (err) {
      showError(`hardware update failed, token unchanged: ${describe(err)}`);
    }
  }

  async function downloadLog(): Promise<void> {
    let rows;
    try {
      rows = await client.downloadLog();
    } catch (err) {
      showError(`could not download the device log: ${describe(err)}`);
      return;
    }
    clearError();
    const empty = el("log-empty");
    const view = el("log-view");
    if (rows.length === 0) {
      empty.hidden = false;
      view.hidden = true;
      return;
    }
    const body = view.querySelector("tbody") as HTMLTableSectionElement;
    body.innerHTML = "";
    for (const row of rows) {
      const tr = document.createElement("tr");
      const symptoms = decodeHealth(row.health_code).join(", ") || "(none)";
      for (const text of [row.peer_public_id, symptoms, String(row.count)]) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.append(td);
      }
      body.append(tr);
    }
    empty.hidden = true;
    view.hidden = false;
  }

  async function saveLog(): Promise<void> {
    try {
      const csv = await client.downloadLogCsv();
      clearError();
      saveFile("device-log.csv", csv);
    } catch (err) {
      showError(`could not save the device log: ${describe(err)}`);
    }
  }

  el("update-btn").addEventListener("click", () => void updateHardware());
  el("download-btn").addEventListener("click", () => void downloadLog());
  el("save-btn").addEventListener("click", () => void saveLog());

  return { identity, updateHardware, downloadLog, saveLog };
}

async function ensureIdentity(
  storage: KeyValueStorage,
  client: BridgeClient,
): Promise<{ identity: StoredIdentity; fresh: boolean }> {
  const existing = loadIdentity(storage);
  if (existing !== null) {
    return { identity: existing, fresh: false };
  }
  const granted = await client.newIdentity();
  const identity: StoredIdentity = {
    privateCode: granted.private_code,
    publicId: granted.public_id,
    createdAt: new Date().toISOString(),
  };
  saveIdentity(storage, identity);
  return { identity, fresh: true };
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

function browserSaveFile(filename: string, contents: string): void {
  const blob = new Blob([contents], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}
