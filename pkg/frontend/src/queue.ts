/**
 * Review queue state: triage of pending flags with optimistic verdict
 * markers, conflict surfacing, an offline unsent queue, and a cached view
 * when the service is unreachable.
 *
 * Invariant: a flag leaves the pending list only after the service has
 * confirmed its resolution; an in-flight verdict only marks the row.
 */

import { ApiClient, ApiError, ServiceUnreachable } from "./api.js";
import type { FlagWire } from "./types.js";

export interface UnsentVerdict {
  flagId: string;
  label: string;
}

export interface QueueRow {
  flag: FlagWire;
  /** verdict submitted and awaiting service confirmation */
  pendingVerdict: string | null;
  /** verdict queued locally because the service was unreachable */
  unsent: string | null;
}

export interface QueueState {
  rows: QueueRow[];
  total: number;
  page: number;
  pageSize: number;
  filter: string;
  /** non-blocking banner when the last refresh failed; view stays cached */
  banner: string | null;
  /** conflict notices from verdicts that lost a race */
  conflicts: string[];
  /** count of resolved verdicts feeding retraining, as reported by the service */
  retrainingCount: number;
  unsent: UnsentVerdict[];
}

export class QueueStore {
  private flags: FlagWire[] = [];
  private total = 0;
  private page = 1;
  private pageSize = 50;
  private filter = "pending";
  private banner: string | null = null;
  private conflicts: string[] = [];
  private retrainingCount = 0;
  private pendingVerdicts = new Map<string, string>();
  private unsentQueue: UnsentVerdict[] = [];

  constructor(
    private readonly client: ApiClient,
    private readonly moderatorId: string,
  ) {}

  get state(): QueueState {
    return {
      rows: this.flags.map((flag) => ({
        flag,
        pendingVerdict: this.pendingVerdicts.get(flag.flag_id) ?? null,
        unsent:
          this.unsentQueue.find((u) => u.flagId === flag.flag_id)?.label ?? null,
      })),
      total: this.total,
      page: this.page,
      pageSize: this.pageSize,
      filter: this.filter,
      banner: this.banner,
      conflicts: [...this.conflicts],
      retrainingCount: this.retrainingCount,
      unsent: [...this.unsentQueue],
    };
  }

  /** Load a page of flags; on failure keep the cached view and raise a banner. */
  async refresh(filter = this.filter, page = this.page): Promise<QueueState> {
    try {
      const result = await this.client.listFlags(filter, page, this.pageSize);
      this.flags = result.flags;
      this.total = result.total;
      this.page = result.page;
      this.pageSize = result.page_size;
      this.filter = filter;
      this.banner = null;
      const stats = await this.client.serviceStats();
      this.retrainingCount = stats.retraining_examples;
    } catch (error) {
      if (error instanceof ServiceUnreachable) {
        this.banner = "service unreachable; showing the last loaded queue";
      } else {
        throw error;
      }
    }
    return this.state;
  }

  /**
   * Submit a moderator verdict.  The row is marked optimistically and only
   * removed once the service confirms; a 409 surfaces as a conflict notice
   * and the queue refreshes; an unreachable service queues the verdict
   * locally with an "unsent" badge.
   */
  async submitVerdict(flagId: string, label: string): Promise<QueueState> {
    this.pendingVerdicts.set(flagId, label);
    try {
      await this.client.submitVerdict(flagId, label, this.moderatorId);
      this.pendingVerdicts.delete(flagId);
      this.flags = this.flags.filter((f) => f.flag_id !== flagId);
      this.total = Math.max(0, this.total - 1);
      this.retrainingCount += 1;
    } catch (error) {
      this.pendingVerdicts.delete(flagId);
      if (error instanceof ApiError && error.code === "already_resolved") {
        this.conflicts.push(
          `flag ${flagId}: already resolved by another moderator`,
        );
        await this.refresh();
      } else if (error instanceof ServiceUnreachable) {
        if (!this.unsentQueue.some((u) => u.flagId === flagId)) {
          this.unsentQueue.push({ flagId, label });
        }
        this.banner = "service unreachable; verdict queued locally";
      } else {
        throw error;
      }
    }
    return this.state;
  }

  /** Retry locally queued verdicts; conflicts and confirmations both drain. */
  async flushUnsent(): Promise<QueueState> {
    const queued = [...this.unsentQueue];
    for (const item of queued) {
      try {
        await this.client.submitVerdict(item.flagId, item.label, this.moderatorId);
        this.unsentQueue = this.unsentQueue.filter((u) => u !== item);
        this.flags = this.flags.filter((f) => f.flag_id !== item.flagId);
        this.total = Math.max(0, this.total - 1);
        this.retrainingCount += 1;
      } catch (error) {
        if (error instanceof ApiError && error.code === "already_resolved") {
          this.unsentQueue = this.unsentQueue.filter((u) => u !== item);
          this.conflicts.push(
            `flag ${item.flagId}: already resolved by another moderator`,
          );
        } else if (error instanceof ServiceUnreachable) {
          break; // still offline; keep the rest queued
        } else {
          throw error;
        }
      }
    }
    return this.state;
  }

  dismissConflicts(): void {
    this.conflicts = [];
  }
}
