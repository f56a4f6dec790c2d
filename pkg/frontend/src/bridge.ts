/**
 * HTTP client for the local token bridge.
 *
 * This is the page's only network surface: every request goes to the
 * configured bridge base URL and nowhere else. Requests are serialized so
 * at most one is in flight at a time.
 */

export interface GrantedIdentity {
  private_code: string;
  public_id: string;
}

export interface UpdateResult {
  public_id: string;
  health: string;
  advertisement: string;
}

export interface LogRow {
  peer_public_id: string;
  health_code: string;
  count: number;
}

export interface BridgeStatus {
  configured: boolean;
  powered: boolean;
  public_id: string | null;
  health: string | null;
  advertisement: string | null;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class BridgeError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = "BridgeError";
  }
}

export class BridgeClient {
  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => globalThis.fetch(url, init),
  ) {}

  newIdentity(): Promise<GrantedIdentity> {
    return this.request("POST", "/identity/new");
  }

  updateHardware(privateCode: string, health: string): Promise<UpdateResult> {
    return this.request("POST", "/update-hardware", { private_code: privateCode, health });
  }

  async downloadLog(): Promise<LogRow[]> {
    const data = await this.request<{ records: LogRow[] }>("GET", "/download-log");
    return data.records;
  }

  downloadLogCsv(): Promise<string> {
    return this.request("GET", "/download-log.csv", undefined, "text");
  }

  status(): Promise<BridgeStatus> {
    return this.request("GET", "/status");
  }

  private request<T>(
    method: string,
    path: string,
    body?: unknown,
    parse: "json" | "text" = "json",
  ): Promise<T> {
    const task = () => this.send<T>(method, path, body, parse);
    const next = this.queue.then(task, task);
    this.queue = next.then(
      () => undefined,
      () => undefined,
    );
    return next;
  }

  private async send<T>(
    method: string,
    path: string,
    body: unknown,
    parse: "json" | "text",
  ): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new BridgeError(`cannot reach the token bridge at ${this.baseUrl}: ${err}`);
    }
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const data = (await response.json()) as { detail?: string };
        if (data.detail) {
          detail = data.detail;
        }
      } catch {
        // non-JSON error body: keep the status line
      }
      throw new BridgeError(detail, response.status);
    }
    if (parse === "text") {
      return (await response.text()) as T;
    }
    return (await response.json()) as T;
  }
}
