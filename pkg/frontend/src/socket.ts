// WebSocket wrapper: reconnect with exponential backoff, never send while
// disconnected (messages are held for the drop notice, then discarded).

export class Backoff {
  private attempt = 0;

  constructor(
    private baseMs = 500,
    private factor = 2,
    private maxMs = 10_000,
  ) {}

  next(): number {
    const delay = Math.min(this.baseMs * this.factor ** this.attempt, this.maxMs);
    this.attempt += 1;
    return delay;
  }

  reset(): void {
    this.attempt = 0;
  }
}

export interface SocketHandlers {
  onFrame: (raw: string) => void;
  onOpen: (droppedWhileOffline: number) => void;
  onClose: () => void;
}

type WsLike = {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  readyState: number;
};

const OPEN = 1;

export class ConsoleSocket {
  private ws: WsLike | null = null;
  private offlineQueue: string[] = [];
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  readonly backoff: Backoff;

  constructor(
    private url: string,
    private handlers: SocketHandlers,
    private wsFactory: (url: string) => WsLike = (u) => new WebSocket(u) as unknown as WsLike,
    backoff?: Backoff,
  ) {
    this.backoff = backoff ?? new Backoff();
  }

  connect(): void {
    if (this.closed) return;
    const ws = this.wsFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoff.reset();
      const dropped = this.offlineQueue.length;
      this.offlineQueue = []; // dropped on reconnect, surfaced via the notice
      this.handlers.onOpen(dropped);
    };
    ws.onmessage = (ev) => this.handlers.onFrame(String(ev.data));
    ws.onerror = () => {
      /* close follows */
    };
    ws.onclose = () => {
      this.ws = null;
      this.handlers.onClose();
      if (!this.closed) {
        this.timer = setTimeout(() => this.connect(), this.backoff.next());
      }
    };
  }

  /** Send when online; otherwise hold for the drop notice. Returns whether sent. */
  send(payload: string): boolean {
    if (this.ws !== null && this.ws.readyState === OPEN) {
      this.ws.send(payload);
      return true;
    }
    this.offlineQueue.push(payload);
    return false;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.ws?.close();
  }
}
