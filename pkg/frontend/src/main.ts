import { initApp } from "./app.js";
import { BridgeClient } from "./bridge.js";

const DEFAULT_BRIDGE_URL = "http://127.0.0.1:8642";

const params = new URLSearchParams(window.location.search);
const bridgeUrl = params.get("bridge") ?? DEFAULT_BRIDGE_URL;

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}

void initApp({ root, client: new BridgeClient(bridgeUrl) });
