// End-to-end UI loop against the real session service: boot the headless
// server, connect over TCP, script a drag through the DragController, and
// check the pose stream rate, the store's folded state and the exact shadow
// footprints. No mocks anywhere; whatever the server says is the truth.

import { ChildProcess, spawn } from "node:child_process";
import * as net from "node:net";
import * as THREE from "three";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionClient, CommandError, Transport } from "../src/client.js";
import { DragController } from "../src/drag.js";
import { defaultCamera } from "../src/camera.js";
import { JsonValue, Push, canonicalJson } from "../src/protocol.js";
import { SHADOW_LIFT } from "../src/shadow.js";
import { SceneStore } from "../src/store.js";
import { SceneView } from "../src/viewport.js";
import { CUBE_OBJ } from "./fixtures.js";

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

function startServer(): Promise<{ proc: ChildProcess; port: number }> {
  return new Promise((resolve, reject) => {
    const proc = spawn("python3", ["-m", "asmb.cli", "serve", "--port", "0"], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let buffered = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffered += chunk.toString("utf-8");
      for (const line of buffered.split("\n")) {
        if (!line.trim()) continue;
        try {
          const msg = JSON.parse(line) as { event?: string; port?: number };
          if (msg.event === "listening" && typeof msg.port === "number") {
            resolve({ proc, port: msg.port });
            return;
          }
        } catch {
          // partial line; keep buffering
        }
      }
    });
    proc.on("error", reject);
    proc.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
    const bootTimer = setTimeout(
      () => reject(new Error("server never reported a port")),
      20_000,
    );
    bootTimer.unref();
  });
}

function tcpTransport(port: number): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const sock = net.createConnection({ host: "127.0.0.1", port }, () => {
      resolve({
        send: (bytes) => sock.write(bytes),
        close: () => sock.destroy(),
        onData: (h) => sock.on("data", (buf: Buffer) => h(new Uint8Array(buf))),
        onClose: (h) => sock.on("close", () => h()),
      });
    });
    sock.on("error", reject);
  });
}

/** A connected client with its store kept in sync and push fan-out. */
class Peer {
  client!: SessionClient;
  store = new SceneStore();
  private listeners: Array<(push: Push) => void> = [];

  async connect(port: number): Promise<void> {
    this.client = new SessionClient(await tcpTransport(port));
    this.client.onPush = (push) => {
      this.store.apply(push);
      for (const l of [...this.listeners]) l(push);
    };
  }

  /** Resolves the first time a push satisfies the predicate. */
  waitFor<T>(pick: (push: Push) => T | undefined, timeoutMs = 10_000): Promise<T> {
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for a push")),
        timeoutMs,
      );
      const listener = (push: Push): void => {
        const got = pick(push);
        if (got !== undefined) {
          clearTimeout(timer);
          this.listeners = this.listeners.filter((l) => l !== listener);
          resolve(got);
        }
      };
      this.listeners.push(listener);
    });
  }
}

let server: { proc: ChildProcess; port: number };

beforeAll(async () => {
  server = await startServer();
});

afterAll(() => {
  server?.proc.kill();
});

describe("live UI loop", () => {
  const driver = new Peer();
  let objectId = 0;

  it("connects, is the driver, and receives hello plus a snapshot", async () => {
    await driver.connect(server.port);
    const snapshotSeen = driver.store.connectedOnce
      ? Promise.resolve()
      : driver.waitFor((p) => (p.kind === "snapshot" ? true : undefined));
    const hello = await driver.client.hello;
    expect(hello.format_version).toBe(1);
    expect(hello.role).toBe("driver");
    expect(hello.dt).toBeGreaterThan(0);
    await snapshotSeen;
    expect(driver.store.connectedOnce).toBe(true);
    expect(driver.store.step).toBeGreaterThanOrEqual(0);
  });

  it("loads a mesh and spawns an object; the structural snapshot follows", async () => {
    const loaded = (await driver.client.command("load_model", {
      format: "obj",
      text: CUBE_OBJ,
      name: "cube",
    })) as { mesh: string };
    expect(loaded.mesh).toMatch(/^[0-9a-f]{64}$/);
    const snapshotAfter = driver.waitFor((p) => (p.kind === "snapshot" ? p : undefined));
    const spawned = (await driver.client.command("spawn", {
      mesh: loaded.mesh,
      transform: { rotation: [1, 0, 0, 0], translation: [0, 0.5, 0] },
    })) as { id: number };
    objectId = spawned.id;
    await snapshotAfter;
    expect(driver.store.object(objectId)).toBeDefined();
  });

  it("scripted drag streams grab_pose at 30 Hz or better and moves the object", async () => {
    const drag = new DragController(defaultCamera(), { widthPx: 800, heightPx: 600 });
    const start = driver.store.object(objectId)!.state.transform;
    const beginCmd = drag.begin("left", objectId, start, { x: 200, y: 300 });
    await driver.client.command(beginCmd.kind, beginCmd.payload);

    const acks: Array<Promise<unknown>> = [];
    const ticks = 72;
    const t0 = performance.now();
    for (let i = 1; i <= ticks; i += 1) {
      drag.pointerMove({ x: 200 + i * 6, y: 300 }, false);
      const pose = drag.tick()!;
      acks.push(driver.client.command(pose.kind, pose.payload));
      await sleep(15);
    }
    const elapsedSec = (performance.now() - t0) / 1000;
    await Promise.all(acks); // every pose answered ok (some coalesced)
    const rate = ticks / elapsedSec;
    expect(rate).toBeGreaterThanOrEqual(30);

    const endCmd = drag.end()!;
    await driver.client.command(endCmd.kind, endCmd.payload);

    // the object visibly followed the drag (server deltas moved it)
    await driver.waitFor((p) =>
      p.kind === "delta" || p.kind === "snapshot" ? p : undefined,
    );
    const moved = driver.store.object(objectId)!.state.transform.translation;
    expect(moved[0]).toBeGreaterThan(start.translation[0] + 1.0);
  }, 30_000);

  it("shadow footprints preserve the (x, z) of every object center exactly", async () => {
    // wait for a fresh step so the scene is settled on server truth
    await driver.waitFor((p) => (p.kind === "delta" || p.kind === "snapshot" ? p : undefined));
    const view = new SceneView();
    view.sync(driver.store);
    for (const node of driver.store.sceneGraph()) {
      const t = node.object.state.transform.translation;
      const shadow = view.node(node.id)!.shadow;
      const center = new THREE.Vector3(0, 0, 0).applyMatrix4(shadow.matrix);
      expect(Object.is(center.x, t[0])).toBe(true);
      expect(Object.is(center.z, t[2])).toBe(true);
      expect(center.y).toBeCloseTo(view.groundY + SHADOW_LIFT, 9);
    }
  });

  it("a second client is a read-only observer whose state matches the driver's", async () => {
    const observer = new Peer();
    const snapshotSeen = observer.waitFor((p) => (p.kind === "snapshot" ? p : undefined));
    await observer.connect(server.port);
    const hello = await observer.client.hello;
    expect(hello.role).toBe("observer");
    await snapshotSeen;

    // commands from an observer are refused
    await expect(
      observer.client.command("spawn", { mesh: "0".repeat(64) }),
    ).rejects.toBeInstanceOf(CommandError);

    // both stores fold to the identical document at the same step
    const target = Math.max(driver.store.step, observer.store.step) + 10;
    const docAt = (peer: Peer): Promise<string> =>
      peer.waitFor((push) => {
        if (push.kind !== "delta" && push.kind !== "snapshot") return undefined;
        return peer.store.step === target
          ? canonicalJson(peer.store.doc as unknown as JsonValue)
          : undefined;
      });
    const [docDriver, docObserver] = await Promise.all([docAt(driver), docAt(observer)]);
    expect(docObserver).toBe(docDriver);
    observer.client.close();
  }, 30_000);

  it("driver disconnect releases its grabs; the next client becomes driver", async () => {
    // park a grab, then vanish
    await driver.client.command("grab_begin", { cursor: "left", id: objectId });
    const watcher = new Peer();
    await watcher.connect(server.port);
    await watcher.waitFor((p) => (p.kind === "snapshot" ? p : undefined));
    expect(watcher.store.status.grabs["left"]).toBe(objectId);

    driver.client.close();
    await watcher.waitFor((p) =>
      (p.kind === "delta" || p.kind === "snapshot") &&
      watcher.store.status.grabs["left"] === undefined
        ? true
        : undefined,
    );

    // watcher connected while the old driver was alive: still an observer
    expect((await watcher.client.hello).role).toBe("observer");
    // the next fresh connection takes over as driver
    const successor = new Peer();
    await successor.connect(server.port);
    expect((await successor.client.hello).role).toBe("driver");
    successor.client.close();
    watcher.client.close();
  }, 30_000);
});
