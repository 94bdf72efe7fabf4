// Debounced machine-state writer with revision-ordered application.
//
// Slider drags produce a burst of values; we coalesce them into one PUT per
// debounce window.  Responses can arrive out of order (each PUT is its own
// request), so a response is applied only if its revision is newer than the
// last one applied -- the server revision is authoritative.

import { ApiClient, MachineStateDto, SessionResponse } from './api.js';

export type UpdateListener = (update: SessionResponse) => void;

export class StateSync {
  private pending: Partial<MachineStateDto> = {};
  private timer: ReturnType<typeof setTimeout> | null = null;
  private lastAppliedRevision = -1;
  private inflight = 0;

  constructor(
    private readonly client: ApiClient,
    private readonly session: string,
    private readonly onUpdate: UpdateListener,
    private readonly debounceMs: number = 80,
  ) {}

  /** Queue a partial state change; flushed after the debounce window. */
  set(partial: Partial<MachineStateDto>): void {
    Object.assign(this.pending, partial);
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => void this.flush(), this.debounceMs);
  }

  /** Send the coalesced changes immediately. */
  async flush(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const body = this.pending;
    if (Object.keys(body).length === 0) {
      return;
    }
    this.pending = {};
    this.inflight++;
    try {
      const update = await this.client.putState(this.session, body);
      this.apply(update);
    } finally {
      this.inflight--;
    }
  }

  /** Apply a server response unless an even newer one already arrived. */
  apply(update: SessionResponse): boolean {
    if (update.revision <= this.lastAppliedRevision) {
      return false;
    }
    this.lastAppliedRevision = update.revision;
    this.onUpdate(update);
    return true;
  }

  get busy(): boolean {
    return this.inflight > 0 || this.timer !== null;
  }

  get revision(): number {
    return this.lastAppliedRevision;
  }
}
