// Keyboard (and optional gamepad) state -> velocity commands, rate-capped to
// at most one command per server tick window.

export interface KeyState {
  forward: boolean;
  back: boolean;
  left: boolean;
  right: boolean;
}

export const TELEOP_V = 0.8; // m/s, matches the scripted operator cruise speed
export const TELEOP_OMEGA = 1.2; // rad/s

const KEY_MAP: Record<string, keyof KeyState> = {
  w: "forward",
  arrowup: "forward",
  s: "back",
  arrowdown: "back",
  a: "left",
  arrowleft: "left",
  d: "right",
  arrowright: "right",
};

export function emptyKeys(): KeyState {
  return { forward: false, back: false, left: false, right: false };
}

/** Returns true when the key is a teleop key (and was applied). */
export function applyKey(keys: KeyState, key: string, down: boolean): boolean {
  const mapped = KEY_MAP[key.toLowerCase()];
  if (!mapped) return false;
  keys[mapped] = down;
  return true;
}

export function commandFromKeys(keys: KeyState, vOp = TELEOP_V, omegaOp = TELEOP_OMEGA): { v: number; omega: number } {
  const v = (keys.forward ? vOp : 0) - (keys.back ? vOp : 0);
  const omega = (keys.left ? omegaOp : 0) - (keys.right ? omegaOp : 0);
  return { v, omega };
}

export function mergeGamepad(
  cmd: { v: number; omega: number },
  axes: { forward: number; turn: number } | null,
  vOp = TELEOP_V,
  omegaOp = TELEOP_OMEGA,
): { v: number; omega: number } {
  if (!axes) return cmd;
  const v = Math.abs(axes.forward) > 0.1 ? axes.forward * vOp : cmd.v;
  const omega = Math.abs(axes.turn) > 0.1 ? -axes.turn * omegaOp : cmd.omega;
  return { v, omega };
}

/**
 * Decides which ticks actually emit a command: at most one per window, and
 * idle (zero) commands are sent only once after motion stops so an untouched
 * console emits no command traffic at all.
 */
export class CommandGate {
  private lastEmit = -Infinity;
  private lastSent: { v: number; omega: number } | null = null;

  constructor(private windowMs: number) {}

  next(cmd: { v: number; omega: number }, nowMs: number): { v: number; omega: number } | null {
    if (nowMs - this.lastEmit < this.windowMs) return null;
    const isZero = cmd.v === 0 && cmd.omega === 0;
    const sentZero = this.lastSent !== null && this.lastSent.v === 0 && this.lastSent.omega === 0;
    if (isZero && (this.lastSent === null || sentZero)) return null;
    this.lastEmit = nowMs;
    this.lastSent = cmd;
    return cmd;
  }

  reset(): void {
    this.lastEmit = -Infinity;
    this.lastSent = null;
  }
}
