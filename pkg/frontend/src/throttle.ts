/** Rate limiter for gesture streams: leading-edge emit, one queued
 * trailing value that replaces itself, and a caller-driven clock. The
 * render loop pumps it, so tests can drive time by hand and a 1 s drag
 * can never emit more than ceil(1s / interval) + 1 frames (the +1 is
 * the pointer-up flush). */
export class GestureThrottle<T> {
  private lastEmit = -Infinity;
  private pending: T | null = null;

  constructor(
    readonly intervalMs: number,
    private readonly sink: (v: T) => void,
  ) {}

  push(v: T, now: number): void {
    if (now - this.lastEmit >= this.intervalMs) {
      this.lastEmit = now;
      this.sink(v);
    } else {
      this.pending = v;
    }
  }

  /** Emit the queued value once the interval has elapsed. */
  pump(now: number): void {
    if (this.pending !== null && now - this.lastEmit >= this.intervalMs) {
      const v = this.pending;
      this.pending = null;
      this.lastEmit = now;
      this.sink(v);
    }
  }

  /** Emit the queued value immediately (pointer released: the final
   * pose must not be lost to the throttle window). */
  flush(now: number): void {
    if (this.pending !== null) {
      const v = this.pending;
      this.pending = null;
      this.lastEmit = now;
      this.sink(v);
    }
  }

  get queued(): boolean {
    return this.pending !== null;
  }

  drop(): void {
    this.pending = null;
  }
}
