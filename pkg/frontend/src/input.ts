// Pilot input pacing: mouse-move floods are throttled to a wire budget.

export type Clock = () => number; // ms

export class RateLimiter {
  private last = -Infinity;
  readonly minIntervalMs: number;

  constructor(maxPerSecond: number, private clock: Clock = () => performance.now()) {
    this.minIntervalMs = 1000 / maxPerSecond;
  }

  /** True when a send is allowed now; consumes the slot. */
  allow(): boolean {
    const now = this.clock();
    if (now - this.last >= this.minIntervalMs) {
      this.last = now;
      return true;
    }
    return false;
  }
}

export interface PilotCursor {
  eeFrontal: [number, number]; // human-frame y, z (m)
  depth: number; // human-frame x (m)
}

/** Latest-intent pilot input: remembers the newest cursor state and emits
 *  it at no more than `maxPerSecond` messages per second. */
export class InputPump {
  private pending: PilotCursor | null = null;
  private limiter: RateLimiter;
  sent = 0;

  constructor(
    maxPerSecond: number,
    private emit: (c: PilotCursor) => void,
    clock?: Clock,
  ) {
    this.limiter = new RateLimiter(maxPerSecond, clock);
  }

  update(cursor: PilotCursor): void {
    this.pending = cursor;
    this.flush();
  }

  flush(): void {
    if (this.pending !== null && this.limiter.allow()) {
      this.emit(this.pending);
      this.sent += 1;
      this.pending = null;
    }
  }
}
