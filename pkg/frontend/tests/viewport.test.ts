import { describe, expect, it } from "vitest";
import * as THREE from "three";

import { DEFAULT_MARGIN, SHADOW_LIFT } from "../src/shadow.js";
import { SceneStore } from "../src/store.js";
import {
  SELECTION_COLOR_GROUP,
  SELECTION_COLOR_SINGLE,
  SceneView,
  colormapRgb,
} from "../src/viewport.js";
import {
  IDENTITY,
  deltaEntry,
  deltaPush,
  makeDoc,
  makeObject,
  makeStatus,
  snapshotPush,
  transformAt,
} from "./fixtures.js";

function storeWith(push: ReturnType<typeof snapshotPush>): SceneStore {
  const store = new SceneStore();
  store.apply(push);
  return store;
}

describe("scene sync", () => {
  it("creates a body and a flattened shadow per object", () => {
    const tx = 0.1 + 0.2; // 0.30000000000000004, a bit-picky float
    const store = storeWith(snapshotPush(0, makeDoc([makeObject(1, transformAt(tx, 2, -1.5))])));
    const view = new SceneView();
    view.sync(store);
    const node = view.node(1)!;
    const bodyPos = new THREE.Vector3().setFromMatrixPosition(node.body.matrix);
    expect(bodyPos.y).toBe(2);

    // shadow footprint keeps the center's x and z bit for bit
    const shadowPos = new THREE.Vector3(0, 0, 0).applyMatrix4(node.shadow.matrix);
    expect(Object.is(shadowPos.x, tx)).toBe(true);
    expect(Object.is(shadowPos.z, -1.5)).toBe(true);
    // cube bottom sits at 1.5, so the plane hangs the margin below that
    expect(view.groundY).toBeCloseTo(1.5 - DEFAULT_MARGIN, 12);
    expect(shadowPos.y).toBeCloseTo(view.groundY + SHADOW_LIFT, 12);

    // every shadow vertex flattens to the plane while x/z ride through
    const corner = new THREE.Vector3(0.5, -0.5, 0.5).applyMatrix4(node.shadow.matrix);
    expect(corner.x).toBeCloseTo(tx + 0.5, 12);
    expect(corner.y).toBeCloseTo(view.groundY + SHADOW_LIFT, 12);
    expect(corner.z).toBeCloseTo(-1.0, 12);
  });

  it("moving the camera is irrelevant: sync takes no camera at all", () => {
    const store = storeWith(snapshotPush(0, makeDoc([makeObject(1)])));
    const view = new SceneView();
    view.sync(store);
    const before = view.node(1)!.shadow.matrix.clone();
    view.sync(store); // nothing changed, no camera anywhere in the call
    expect(view.node(1)!.shadow.matrix.equals(before)).toBe(true);
  });

  it("applies deltas: bodies track the server, shadows follow", () => {
    const store = storeWith(snapshotPush(0, makeDoc([makeObject(1)])));
    const view = new SceneView();
    view.sync(store);
    store.apply(deltaPush(1, { "1": deltaEntry(transformAt(4, 1, 9)) }));
    view.sync(store);
    const pos = new THREE.Vector3().setFromMatrixPosition(view.node(1)!.body.matrix);
    expect([pos.x, pos.y, pos.z]).toEqual([4, 1, 9]);
    const shadow = new THREE.Vector3(0, 0, 0).applyMatrix4(view.node(1)!.shadow.matrix);
    expect(shadow.x).toBe(4);
    expect(shadow.z).toBe(9);
  });

  it("prunes nodes for objects that left the document", () => {
    const store = storeWith(snapshotPush(0, makeDoc([makeObject(1), makeObject(2)])));
    const view = new SceneView();
    view.sync(store);
    expect(view.node(2)).toBeDefined();
    store.apply(snapshotPush(120, makeDoc([makeObject(1)])));
    view.sync(store);
    expect(view.node(2)).toBeUndefined();
  });

  it("hidden objects hide their shadows too", () => {
    const store = storeWith(
      snapshotPush(0, makeDoc([makeObject(1, IDENTITY, { visible: false })])),
    );
    const view = new SceneView();
    view.sync(store);
    expect(view.node(1)!.body.visible).toBe(false);
    expect(view.node(1)!.shadow.visible).toBe(false);
  });
});

describe("selection outlines", () => {
  it("shows a single-color outline for a lone selection", () => {
    const store = storeWith(
      snapshotPush(0, makeDoc([makeObject(1), makeObject(2)]), makeStatus({ selection: [1] })),
    );
    const view = new SceneView();
    view.sync(store);
    expect(view.node(1)!.outline.visible).toBe(true);
    expect(view.node(2)!.outline.visible).toBe(false);
    const mat = view.node(1)!.outline.material as THREE.LineBasicMaterial;
    expect(mat.color.getHex()).toBe(SELECTION_COLOR_SINGLE);
  });

  it("uses the group color when selected objects share a group", () => {
    const doc = makeDoc([
      makeObject(1, IDENTITY, { group: 10 }),
      makeObject(2, IDENTITY, { group: 10 }),
    ]);
    doc.groups = [{ id: 10, name: "pair" }];
    const store = storeWith(snapshotPush(0, doc, makeStatus({ selection: [1, 2] })));
    const view = new SceneView();
    view.sync(store);
    const mat = view.node(1)!.outline.material as THREE.LineBasicMaterial;
    expect(mat.color.getHex()).toBe(SELECTION_COLOR_GROUP);
  });
});

describe("ribbon markers", () => {
  it("appears only while the playhead sits on a keyframe", () => {
    const doc = makeDoc([
      makeObject(1, IDENTITY, {
        keyframes: [
          { time: 1.5, transform: IDENTITY, color: { rgb: [1, 1, 1] }, group: null, visible: true },
        ],
      }),
    ]);
    const store = storeWith(snapshotPush(0, doc, makeStatus({ time: 0 })));
    const view = new SceneView();
    view.sync(store);
    expect(view.node(1)!.ribbon.visible).toBe(false);
    store.apply(deltaPush(1, {}, makeStatus({ time: 1.5 })));
    view.sync(store);
    expect(view.node(1)!.ribbon.visible).toBe(true);
  });
});

describe("cursor shadows", () => {
  it("tracks grabs: darker, larger, and gone after release", () => {
    const store = storeWith(
      snapshotPush(0, makeDoc([makeObject(1, transformAt(2, 1, 3))]), makeStatus({ grabs: { left: 1 } })),
    );
    const view = new SceneView();
    view.sync(store);
    const cursor = view.cursorShadow("left")!;
    expect(cursor).toBeDefined();
    const objectShadowMat = view.node(1)!.shadow.material as THREE.MeshBasicMaterial;
    const cursorMat = cursor.material as THREE.MeshBasicMaterial;
    expect(cursorMat.opacity).toBeGreaterThan(objectShadowMat.opacity); // darker

    // larger: a corner is scaled away from the footprint center in x/z
    const center = new THREE.Vector3(0, 0, 0).applyMatrix4(cursor.matrix);
    expect(center.x).toBeCloseTo(2, 12); // scaling is about the center: it stays
    expect(center.z).toBeCloseTo(3, 12);
    const corner = new THREE.Vector3(0.5, 0.5, 0.5).applyMatrix4(cursor.matrix);
    const own = view.node(1)!.shadow.matrix;
    const plain = new THREE.Vector3(0.5, 0.5, 0.5).applyMatrix4(own);
    expect(Math.abs(corner.x - center.x)).toBeGreaterThan(Math.abs(plain.x - center.x));
    expect(Math.abs(corner.z - center.z)).toBeGreaterThan(Math.abs(plain.z - center.z));

    store.apply(deltaPush(1, {}, makeStatus({ grabs: {} })));
    view.sync(store);
    expect(view.cursorShadow("left")).toBeUndefined();
  });

  it("follows the local drag target between server echoes", () => {
    const store = storeWith(
      snapshotPush(0, makeDoc([makeObject(1)]), makeStatus({ grabs: { left: 1 } })),
    );
    const view = new SceneView();
    view.sync(store, new Map([["left", transformAt(5, 2, -4)]]));
    const center = new THREE.Vector3(0, 0, 0).applyMatrix4(view.cursorShadow("left")!.matrix);
    expect(center.x).toBeCloseTo(5, 12);
    expect(center.z).toBeCloseTo(-4, 12);
  });
});

describe("colormaps", () => {
  it("blue-white-red hits blue, white and red", () => {
    expect(colormapRgb("blue-white-red", 0)).toEqual([0, 0, 1]);
    expect(colormapRgb("blue-white-red", 0.5)).toEqual([1, 1, 1]);
    expect(colormapRgb("blue-white-red", 1)).toEqual([1, 0, 0]);
  });

  it("rainbow runs blue to red", () => {
    const [r0, , b0] = colormapRgb("rainbow", 0);
    const [r1, , b1] = colormapRgb("rainbow", 1);
    expect(b0).toBeGreaterThan(r0);
    expect(r1).toBeGreaterThan(b1);
  });
});
