import { describe, expect, it } from "vitest";

import { SceneStore } from "../src/store.js";
import {
  CUBE_HASH,
  deltaEntry,
  deltaPush,
  makeDoc,
  makeObject,
  makeStats,
  makeStatus,
  snapshotPush,
  transformAt,
} from "./fixtures.js";

describe("snapshot handling", () => {
  it("adopts the document and status wholesale", () => {
    const store = new SceneStore();
    expect(store.connectedOnce).toBe(false);
    store.apply(
      snapshotPush(12, makeDoc([makeObject(1), makeObject(2, transformAt(3, 0, 0))])),
    );
    expect(store.connectedOnce).toBe(true);
    expect(store.step).toBe(12);
    expect(store.object(1)?.name).toBe("obj-1");
    expect(store.object(2)?.state.transform.translation).toEqual([3, 0, 0]);
  });

  it("parses embedded OBJ geometry once and caches it", () => {
    const store = new SceneStore();
    store.apply(snapshotPush(0, makeDoc([makeObject(1)])));
    const first = store.geometry(CUBE_HASH);
    expect(first.positions).toHaveLength(8 * 3);
    expect(first.indices).toHaveLength(12 * 3);
    expect(store.geometry(CUBE_HASH)).toBe(first);
  });

  it("a later snapshot replaces everything", () => {
    const store = new SceneStore();
    store.apply(snapshotPush(0, makeDoc([makeObject(1), makeObject(2)])));
    store.apply(snapshotPush(240, makeDoc([makeObject(5)])));
    expect(store.object(1)).toBeUndefined();
    expect(store.object(5)).toBeDefined();
    expect(store.step).toBe(240);
  });
});

describe("delta folding", () => {
  it("rejects a delta before any snapshot", () => {
    const store = new SceneStore();
    expect(() => store.apply(deltaPush(1, {}))).toThrow(/snapshot/);
  });

  it("rejects a delta naming an unknown object", () => {
    const store = new SceneStore();
    store.apply(snapshotPush(0, makeDoc([makeObject(1)])));
    expect(() =>
      store.apply(deltaPush(1, { "99": deltaEntry(transformAt(0, 0, 0)) })),
    ).toThrow(/unknown object 99/);
  });

  it("folds object rows and status fields onto the document", () => {
    const store = new SceneStore();
    store.apply(snapshotPush(0, makeDoc([makeObject(1), makeObject(2)])));
    const moved = transformAt(1.5, 2.5, -0.5);
    store.apply(
      deltaPush(
        1,
        {
          "1": deltaEntry(moved, {
            linear_velocity: [0.1, 0, 0],
            color: { rgb: [1, 0, 0] },
            visible: false,
          }),
        },
        makeStatus({ physics_mode: "pose", time: 0.5, selection: [2], grabs: { left: 1 } }),
        makeStats({ n_objects: 2, n_moving: 1 }),
      ),
    );
    const obj = store.object(1)!;
    expect(obj.state.transform).toEqual(moved);
    expect(obj.state.linear_velocity).toEqual([0.1, 0, 0]);
    expect(obj.color).toEqual({ rgb: [1, 0, 0] });
    expect(obj.visible).toBe(false);
    // untouched object keeps its row
    expect(store.object(2)?.state.transform.translation).toEqual([0, 0, 0]);
    // status folds onto the doc fields, matching what a snapshot would say
    expect(store.doc?.physics_mode).toBe("pose");
    expect(store.doc?.current_time).toBe(0.5);
    expect(store.status.grabs).toEqual({ left: 1 });
    expect(store.stats.n_moving).toBe(1);
    expect(store.step).toBe(1);
  });

  it("a stats push updates counters without touching objects", () => {
    const store = new SceneStore();
    store.apply(snapshotPush(0, makeDoc([makeObject(1)])));
    store.apply({
      kind: "stats",
      payload: { ...makeStats({ pairs_colliding: 4 }), step: 9 },
    });
    expect(store.stats.pairs_colliding).toBe(4);
    expect(store.object(1)).toBeDefined();
  });
});

describe("derived views", () => {
  it("sceneGraph marks grabbed and selected objects", () => {
    const store = new SceneStore();
    store.apply(
      snapshotPush(
        0,
        makeDoc([makeObject(1), makeObject(2)]),
        makeStatus({ selection: [2], grabs: { right: 1 } }),
      ),
    );
    const nodes = store.sceneGraph();
    expect(nodes.map((n) => n.id)).toEqual([1, 2]);
    expect(nodes[0]?.grabbedBy).toBe("right");
    expect(nodes[0]?.selected).toBe(false);
    expect(nodes[1]?.grabbedBy).toBeNull();
    expect(nodes[1]?.selected).toBe(true);
  });

  it("worldBounds covers rotated cubes and skips hidden ones", () => {
    const store = new SceneStore();
    const quarter = Math.SQRT1_2;
    const hidden = makeObject(2, transformAt(100, 100, 100), { visible: false });
    const spun = makeObject(1, {
      rotation: [quarter, 0, 0, quarter], // 90 deg about x: still the unit cube
      translation: [0, 2, 0],
    });
    store.apply(snapshotPush(0, makeDoc([spun, hidden])));
    const b = store.worldBounds()!;
    expect(b.min[0]).toBeCloseTo(-0.5, 9);
    expect(b.min[1]).toBeCloseTo(1.5, 9);
    expect(b.max[1]).toBeCloseTo(2.5, 9);
    expect(b.max[0]).toBeLessThan(1); // the hidden cube at 100 is ignored
  });

  it("worldBounds is null for an empty scene", () => {
    const store = new SceneStore();
    store.apply(snapshotPush(0, makeDoc([])));
    expect(store.worldBounds()).toBeNull();
  });
});
