/**
 * Session client: request/reply bookkeeping over a framed transport.
 *
 * The transport is anything that can move bytes (a TCP socket in tests and
 * tooling, a WebSocket bridge in the browser); the client owns sequencing,
 * reply matching and push routing. It never interprets scene content (that
 * is the store's job), so it stays valid for drivers and observers alike.
 */

import {
  Command,
  encodeFrame,
  FrameDecoder,
  HelloPayload,
  isReply,
  JsonValue,
  Push,
  ServerMessage,
} from "./protocol.js";

export interface Transport {
  send(bytes: Uint8Array): void;
  close(): void;
  onData(handler: (chunk: Uint8Array) => void): void;
  onClose(handler: () => void): void;
}

/** A command the server answered with an error reply. */
export class CommandError extends Error {
  constructor(
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "CommandError";
  }
}

interface PendingReply {
  resolve: (result: Record<string, JsonValue>) => void;
  reject: (err: Error) => void;
}

export class SessionClient {
  /** Resolves once the server has said hello; role tells driver/observer. */
  readonly hello: Promise<HelloPayload>;

  onPush: ((push: Push) => void) | null = null;
  onDisconnect: (() => void) | null = null;

  private readonly decoder = new FrameDecoder();
  private readonly pending = new Map<number, PendingReply>();
  private resolveHello!: (h: HelloPayload) => void;
  private rejectHello!: (e: Error) => void;
  private helloSeen = false;
  private nextSeq = 1;
  private closed = false;

  constructor(private readonly transport: Transport) {
    this.hello = new Promise<HelloPayload>((resolve, reject) => {
      this.resolveHello = resolve;
      this.rejectHello = reject;
    });
    transport.onData((chunk) => this.receive(chunk));
    transport.onClose(() => this.handleClose());
  }

  /** Send one command and resolve with its reply result. */
  command(kind: string, payload: Record<string, JsonValue> = {}): Promise<Record<string, JsonValue>> {
    if (this.closed) return Promise.reject(new Error("connection closed"));
    const message: Command = { seq: this.nextSeq++, kind, payload };
    return new Promise((resolve, reject) => {
      this.pending.set(message.seq, { resolve, reject });
      this.transport.send(encodeFrame(message as unknown as JsonValue));
    });
  }

  close(): void {
    this.closed = true;
    this.transport.close();
  }

  private receive(chunk: Uint8Array): void {
    let messages: JsonValue[];
    try {
      messages = this.decoder.feed(chunk);
    } catch (err) {
      this.failAll(err instanceof Error ? err : new Error(String(err)));
      this.transport.close();
      return;
    }
    for (const raw of messages) {
      this.dispatch(raw as unknown as ServerMessage);
    }
  }

  private dispatch(msg: ServerMessage): void {
    if (isReply(msg)) {
      const waiter = this.pending.get(msg.seq);
      if (!waiter) return; // reply to a command we gave up on
      this.pending.delete(msg.seq);
      if ("ok" in msg && msg.ok) {
        waiter.resolve(msg.result);
      } else if ("error" in msg) {
        waiter.reject(new CommandError(msg.error, msg.detail));
      }
      return;
    }
    if (msg.kind === "hello") {
      this.helloSeen = true;
      this.resolveHello(msg.payload);
      return;
    }
    this.onPush?.(msg);
  }

  private handleClose(): void {
    this.closed = true;
    const err = new Error("connection closed");
    if (!this.helloSeen) this.rejectHello(err);
    this.failAll(err);
    this.onDisconnect?.();
  }

  private failAll(err: Error): void {
    for (const waiter of this.pending.values()) waiter.reject(err);
    this.pending.clear();
  }
}
