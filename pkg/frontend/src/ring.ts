/** Fixed-capacity FIFO backed by a circular array; push evicts the
 * oldest entry once full. Iteration runs oldest to newest. */
export class Ring<T> {
  private buf: T[] = [];
  private head = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
  }

  get length(): number {
    return this.buf.length;
  }

  push(v: T): void {
    if (this.buf.length < this.capacity) {
      this.buf.push(v);
    } else {
      this.buf[this.head] = v;
      this.head = (this.head + 1) % this.capacity;
    }
  }

  last(): T | undefined {
    if (this.buf.length === 0) return undefined;
    return this.buf[(this.head + this.buf.length - 1) % this.buf.length];
  }

  clear(): void {
    this.buf = [];
    this.head = 0;
  }

  forEach(fn: (v: T, i: number) => void): void {
    for (let i = 0; i < this.buf.length; i++) {
      fn(this.buf[(this.head + i) % this.buf.length], i);
    }
  }

  toArray(): T[] {
    const out: T[] = new Array(this.buf.length);
    this.forEach((v, i) => (out[i] = v));
    return out;
  }
}
