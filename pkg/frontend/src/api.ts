// Thin typed client for the inference service. The base URL is a runtime
// setting: `?api=http://host:port` beats `window.KOSPRED_API_BASE`, and an
// empty base means same-origin.

import type { HealthResponse, Metadata, PredictRequest, PredictResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Client errors carry a field-level message the form can surface. */
  get isClientError(): boolean {
    return this.status !== null && this.status >= 400 && this.status < 500;
  }
}

export function resolveApiBase(win?: Window): string {
  if (!win) return "";
  const fromQuery = new URLSearchParams(win.location.search).get("api");
  if (fromQuery) return fromQuery.replace(/\/+$/, "");
  const fromGlobal = (win as unknown as { KOSPRED_API_BASE?: string }).KOSPRED_API_BASE;
  return fromGlobal ? fromGlobal.replace(/\/+$/, "") : "";
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = `request failed with status ${response.status}`;
  try {
    const doc = (await response.json()) as { error?: string };
    if (doc.error) detail = doc.error;
  } catch {
    // non-JSON error body; keep the status message
  }
  return new ApiError(detail, response.status);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async metadata(signal?: AbortSignal): Promise<Metadata> {
    let response: Response;
    try {
      response = await fetch(this.url("/api/metadata"), { signal });
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`, null);
    }
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as Metadata;
  }

  async predict(request: PredictRequest, signal?: AbortSignal): Promise<PredictResponse> {
    let response: Response;
    try {
      response = await fetch(this.url("/api/predict"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
        signal,
      });
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") throw err;
      throw new ApiError(`service unreachable: ${String(err)}`, null);
    }
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as PredictResponse;
  }

  async health(): Promise<HealthResponse> {
    const response = await fetch(this.url("/healthz"));
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as HealthResponse;
  }
}
