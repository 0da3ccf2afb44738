// Trial HUD state: reaction times, running stats, hit flashes.

export class RunningStats {
  values: number[] = [];

  push(v: number): void {
    this.values.push(v);
  }

  get count(): number {
    return this.values.length;
  }

  get mean(): number | null {
    if (this.values.length === 0) return null;
    return this.values.reduce((a, b) => a + b, 0) / this.values.length;
  }

  /** Population standard deviation (divide by n), matching the server. */
  get sd(): number | null {
    const m = this.mean;
    if (m === null) return null;
    const ss = this.values.reduce((a, b) => a + (b - m) * (b - m), 0);
    return Math.sqrt(ss / this.values.length);
  }

  reset(): void {
    this.values = [];
  }
}

export interface HudState {
  connected: boolean;
  role: string;
  mappingLabel: string;
  trialLine: string;
  statsLine: string;
  lastReaction: number | null;
  flashUntil: number; // ms timestamp for the hit flash
}

export function formatReaction(rt: number | null): string {
  return rt === null ? "-" : `${(rt * 1000).toFixed(0)} ms`;
}

export function trialLine(
  trial: { kind: string; hits_done: number; hits_required: number } | null,
): string {
  if (!trial) return "no trial";
  return `${trial.kind}: ${trial.hits_done}/${trial.hits_required} hits`;
}

export function statsLine(stats: RunningStats): string {
  if (stats.count === 0) return "reaction: -";
  const mean = stats.mean as number;
  const sd = stats.sd as number;
  return `reaction: mean ${(mean * 1000).toFixed(0)} ms, sd ${(sd * 1000).toFixed(0)} ms (${stats.count})`;
}
