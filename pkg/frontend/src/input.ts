/** Keyboard state to acceleration command mapping.
 *
 * Up arrow (or W) accelerates at +1.5, down arrow (or S) brakes at -3.0;
 * brake wins when both are held, no keys means zero command. The session
 * sends one command per tick, so the mapping itself is stateless.
 */

export const ACCEL_COMMAND = 1.5;
export const BRAKE_COMMAND = -3.0;

const ACCEL_KEYS = new Set(["ArrowUp", "KeyW"]);
const BRAKE_KEYS = new Set(["ArrowDown", "KeyS"]);

export class InputTracker {
  private held = new Set<string>();
  /** Wall time of the most recent keydown, for latency bookkeeping. */
  lastKeydownAt: number | null = null;

  keydown(code: string, at: number = performance.now()): void {
    if (ACCEL_KEYS.has(code) || BRAKE_KEYS.has(code)) {
      this.held.add(code);
      this.lastKeydownAt = at;
    }
  }

  keyup(code: string): void {
    this.held.delete(code);
  }

  clear(): void {
    this.held.clear();
  }

  command(): number {
    for (const code of this.held) {
      if (BRAKE_KEYS.has(code)) return BRAKE_COMMAND; // safety precedence
    }
    for (const code of this.held) {
      if (ACCEL_KEYS.has(code)) return ACCEL_COMMAND;
    }
    return 0.0;
  }

  attach(target: {
    addEventListener(type: string, cb: (ev: KeyboardEvent) => void): void;
  }): void {
    target.addEventListener("keydown", (ev) => this.keydown(ev.code));
    target.addEventListener("keyup", (ev) => this.keyup(ev.code));
  }
}
