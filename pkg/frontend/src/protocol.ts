/**
 * Wire format of the session service (docs/protocol.md in the engine repo).
 *
 * Every message in either direction is one frame: a 4-byte big-endian
 * unsigned length followed by a UTF-8 JSON body. Bodies are canonical JSON:
 * keys sorted, no whitespace, no NaN or infinities. Frames over 64 MiB are
 * rejected on both ends.
 */

export const MAX_FRAME_BYTES = 64 * 1024 * 1024;
export const FORMAT_VERSION = 1;

export type JsonValue =
  | null
  | boolean
  | number
  | string
  | JsonValue[]
  | { [key: string]: JsonValue };

export type QuatJson = [number, number, number, number]; // w, x, y, z
export type Vec3Json = [number, number, number];

export interface TransformJson {
  rotation: QuatJson;
  translation: Vec3Json;
}

export type ColorJson =
  | { rgb: [number, number, number] }
  | { channel: string; colormap: string };

export interface StatusJson {
  physics_mode: string;
  interaction_mode: string;
  collisions: boolean;
  springs: boolean;
  time: number;
  playing: boolean;
  selection: number[];
  grabs: Record<string, number>;
}

export interface StatsJson {
  n_objects: number;
  n_moving: number;
  pair_tests_executed: number;
  pairs_colliding: number;
  broad_candidates: number;
}

export interface HelloPayload {
  format_version: number;
  dt: number;
  role: "driver" | "observer";
}

export interface DeltaObjectEntry {
  transform: TransformJson;
  linear_velocity: Vec3Json;
  angular_velocity: Vec3Json;
  color: ColorJson;
  group: number | null;
  visible: boolean;
}

export interface SnapshotPayload {
  step: number;
  doc: Record<string, JsonValue>;
  status: StatusJson;
  stats: StatsJson;
}

export interface DeltaPayload {
  step: number;
  objects: Record<string, DeltaObjectEntry>;
  status: StatusJson;
  stats: StatsJson;
}

export type StatsPayload = StatsJson & { step: number };

export type Push =
  | { kind: "hello"; payload: HelloPayload }
  | { kind: "snapshot"; payload: SnapshotPayload }
  | { kind: "delta"; payload: DeltaPayload }
  | { kind: "stats"; payload: StatsPayload };

export interface OkReply {
  seq: number;
  ok: true;
  result: Record<string, JsonValue>;
}

export interface ErrorReply {
  seq: number;
  error: string;
  detail: string;
}

export type Reply = OkReply | ErrorReply;
export type ServerMessage = Push | Reply;

export interface Command {
  seq: number;
  kind: string;
  payload: Record<string, JsonValue>;
}

export function isReply(msg: ServerMessage): msg is Reply {
  return typeof (msg as { seq?: unknown }).seq === "number";
}

/**
 * Canonical JSON: object keys sorted, compact separators. Mirrors what the
 * server emits so tests can compare encoded bodies byte for byte.
 */
export function canonicalJson(value: JsonValue): string {
  if (value === null || typeof value === "boolean") return JSON.stringify(value);
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new Error("NaN/Infinity not allowed on the wire");
    return JSON.stringify(value);
  }
  if (typeof value === "string") return JSON.stringify(value);
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const keys = Object.keys(value).sort();
  const parts = keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(value[k]!));
  return "{" + parts.join(",") + "}";
}

export function encodeFrame(body: JsonValue): Uint8Array {
  const text = new TextEncoder().encode(canonicalJson(body));
  if (text.length > MAX_FRAME_BYTES) {
    throw new Error(`frame of ${text.length} bytes exceeds the 64 MiB cap`);
  }
  const out = new Uint8Array(4 + text.length);
  new DataView(out.buffer).setUint32(0, text.length, false);
  out.set(text, 4);
  return out;
}

/**
 * Incremental frame parser. Feed it received chunks in order; it returns the
 * complete message bodies they finish. A stream that ends mid-frame is a
 * protocol error, surfaced by end().
 */
export class FrameDecoder {
  private buffer = new Uint8Array(0);

  feed(chunk: Uint8Array): JsonValue[] {
    if (chunk.length > 0) {
      const merged = new Uint8Array(this.buffer.length + chunk.length);
      merged.set(this.buffer, 0);
      merged.set(chunk, this.buffer.length);
      this.buffer = merged;
    }
    const out: JsonValue[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const view = new DataView(this.buffer.buffer, this.buffer.byteOffset, 4);
      const length = view.getUint32(0, false);
      if (length > MAX_FRAME_BYTES) {
        throw new Error(`incoming frame of ${length} bytes exceeds the 64 MiB cap`);
      }
      if (this.buffer.length < 4 + length) break;
      const body = this.buffer.subarray(4, 4 + length);
      out.push(JSON.parse(new TextDecoder().decode(body)) as JsonValue);
      this.buffer = this.buffer.subarray(4 + length);
    }
    return out;
  }

  /** Call when the stream closes; rejects a half-received frame. */
  end(): void {
    if (this.buffer.length !== 0) {
      throw new Error(`stream closed mid-frame (${this.buffer.length} bytes pending)`);
    }
  }

  get pendingBytes(): number {
    return this.buffer.length;
  }
}
