/**
 * Scripted stand-in for the moderation service, driven by the committed
 * fixture file (which a Python-side contract test keeps byte-aligned with
 * real service responses).  Implements the queue semantics the console
 * depends on: stable ordering, 409 on double resolution, counters.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ServiceUnreachable, type HttpResponse, type Transport } from "../src/api.js";
import type { FlagWire, PersonaStatsWire, ReportsWire } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export interface Fixture {
  flags_pending: { flags: FlagWire[]; total: number; page: number; page_size: number };
  stats_before: { pending: number; resolved: number; retraining_examples: number };
  resolve_conflict: { status: number; body: { code: string; message: string } };
  reports: ReportsWire;
  personas: PersonaStatsWire;
}

export function loadFixture(): Fixture {
  return JSON.parse(
    readFileSync(join(here, "fixtures", "service_fixtures.json"), "utf-8"),
  ) as Fixture;
}

export interface ResolutionEvent {
  flagId: string;
  label: string;
  moderatorId: string;
}

export class FixtureService {
  pending: FlagWire[];
  resolvedCount = 0;
  retraining: number;
  resolutionEvents: ResolutionEvent[] = [];
  offline = false;
  private readonly fixture: Fixture;

  constructor(fixture: Fixture = loadFixture()) {
    this.fixture = fixture;
    this.pending = structuredClone(fixture.flags_pending.flags);
    this.retraining = fixture.stats_before.retraining_examples;
  }

  readonly transport: Transport = async (method, path, body) => {
    if (this.offline) {
      throw new ServiceUnreachable(new Error("connection refused"));
    }
    return this.route(method, path, body);
  };

  private route(method: string, path: string, body?: unknown): HttpResponse {
    const verdictMatch = path.match(/^\/v1\/flags\/([^/]+)\/verdict$/);
    if (method === "POST" && verdictMatch) {
      return this.resolve(verdictMatch[1]!, body as { label: string; moderator_id: string });
    }
    if (method === "GET" && path.startsWith("/v1/flags")) {
      return {
        status: 200,
        body: {
          flags: structuredClone(this.pending),
          total: this.pending.length,
          page: 1,
          page_size: 50,
        },
      };
    }
    if (method === "GET" && path === "/v1/stats/service") {
      return {
        status: 200,
        body: {
          pending: this.pending.length,
          resolved: this.resolvedCount,
          retraining_examples: this.retraining,
        },
      };
    }
    if (method === "GET" && path === "/v1/reports/eval") {
      return { status: 200, body: structuredClone(this.fixture.reports) };
    }
    if (method === "GET" && path === "/v1/stats/personas") {
      return { status: 200, body: structuredClone(this.fixture.personas) };
    }
    return { status: 404, body: { code: "not_found", message: `no route ${path}` } };
  }

  private resolve(flagId: string, body: { label: string; moderator_id: string }): HttpResponse {
    const index = this.pending.findIndex((f) => f.flag_id === flagId);
    if (index < 0) {
      if (this.resolutionEvents.some((e) => e.flagId === flagId)) {
        // same shape the real service returns on double resolution
        return {
          status: 409,
          body: { ...this.fixture.resolve_conflict.body, message: `flag ${flagId} was already resolved` },
        };
      }
      return { status: 404, body: { code: "unknown_flag", message: `no flag with id '${flagId}'` } };
    }
    const flag = this.pending[index]!;
    this.pending.splice(index, 1);
    this.resolvedCount += 1;
    this.retraining += 1;
    this.resolutionEvents.push({ flagId, label: body.label, moderatorId: body.moderator_id });
    return {
      status: 200,
      body: {
        ...flag,
        status: "resolved",
        verdict: body.label,
        moderator_id: body.moderator_id,
        resolved_at: "2023-04-02T09:30:00.000Z",
      },
    };
  }
}

/** Transport wrapper whose next call blocks until released (for testing the
 * optimistic in-flight state). */
export function gated(transport: Transport): {
  transport: Transport;
  release: () => void;
} {
  let open: (() => void) | null = null;
  const gate = new Promise<void>((resolve) => {
    open = resolve;
  });
  let used = false;
  return {
    transport: async (method, path, body) => {
      if (!used && method === "POST" && path.includes("/verdict")) {
        used = true;
        await gate;
      }
      return transport(method, path, body);
    },
    release: () => open!(),
  };
}
