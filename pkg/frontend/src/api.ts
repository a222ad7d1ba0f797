/** Typed client for the moderation service's HTTP JSON API. */

import type {
  ErrorWire,
  FlagPageWire,
  FlagWire,
  PersonaStatsWire,
  ReportsWire,
  ServiceStatsWire,
} from "./types.js";

export interface HttpResponse {
  status: number;
  body: unknown;
}

/** Transport abstraction so tests can script the service. */
export type Transport = (
  method: string,
  path: string,
  body?: unknown,
) => Promise<HttpResponse>;

/** The service answered with an error payload ({code, message}). */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service could not be reached at all (network down, refused). */
export class ServiceUnreachable extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "ServiceUnreachable";
  }
}

export function httpTransport(baseUrl: string, token?: string): Transport {
  return async (method, path, body) => {
    let response: Response;
    try {
      response = await fetch(baseUrl + path, {
        method,
        headers: {
          "content-type": "application/json",
          ...(token ? { authorization: `Bearer ${token}` } : {}),
        },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new ServiceUnreachable(cause);
    }
    const text = await response.text();
    return { status: response.status, body: text ? JSON.parse(text) : null };
  };
}

function isErrorWire(body: unknown): body is ErrorWire {
  return (
    typeof body === "object" &&
    body !== null &&
    "code" in body &&
    "message" in body
  );
}

export class ApiClient {
  constructor(private readonly transport: Transport) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.transport(method, path, body);
    if (response.status >= 400) {
      if (isErrorWire(response.body)) {
        throw new ApiError(response.body.code, response.body.message, response.status);
      }
      throw new ApiError("http_error", `request failed (${response.status})`, response.status);
    }
    return response.body as T;
  }

  listFlags(status = "pending", page = 1, pageSize = 50): Promise<FlagPageWire> {
    const query = `status=${encodeURIComponent(status)}&page=${page}&page_size=${pageSize}`;
    return this.call("GET", `/v1/flags?${query}`);
  }

  submitVerdict(flagId: string, label: string, moderatorId: string): Promise<FlagWire> {
    return this.call("POST", `/v1/flags/${encodeURIComponent(flagId)}/verdict`, {
      label,
      moderator_id: moderatorId,
    });
  }

  serviceStats(): Promise<ServiceStatsWire> {
    return this.call("GET", "/v1/stats/service");
  }

  evalReports(): Promise<ReportsWire> {
    return this.call("GET", "/v1/reports/eval");
  }

  personaStats(): Promise<PersonaStatsWire | { available: false }> {
    return this.call("GET", "/v1/stats/personas");
  }
}
