/**
 * Three.js scene construction from the store.
 *
 * The view owns no simulation state: every sync() rebuilds object poses,
 * shadows, outlines and markers from the last server push, so reopening a
 * client reproduces the identical scene graph. WebGL itself lives in
 * main.ts; everything here also runs headless for tests.
 */

import * as THREE from "three";

import { ColorJson, StatusJson, TransformJson } from "./protocol.js";
import { ParsedMesh, ProjectDoc, boxCorners } from "./doc.js";
import { SceneStore, SceneNode } from "./store.js";
import {
  CURSOR_SHADOW_DARKNESS,
  CURSOR_SHADOW_SCALE,
  DEFAULT_MARGIN,
  OBJECT_SHADOW_DARKNESS,
  SHADOW_LIFT,
  groundPlaneY,
  shadowMatrixElements,
} from "./shadow.js";
import { ribbonedObjects } from "./timeline.js";

export const SELECTION_COLOR_SINGLE = 0xffc83c;
export const SELECTION_COLOR_GROUP = 0x3cc8ff;
export const RIBBON_COLOR = 0xff4fa0;
export const GROUND_COLOR = 0x9aa0a6;
const FALLBACK_RGB: [number, number, number] = [0.7, 0.7, 0.72];

/** Per-object render bundle. */
export interface ObjectNode {
  body: THREE.Mesh;
  shadow: THREE.Mesh;
  outline: THREE.LineSegments;
  ribbon: THREE.Mesh;
  meshRef: string;
}

function transformMatrix(t: TransformJson): THREE.Matrix4 {
  const [w, x, y, z] = t.rotation;
  return new THREE.Matrix4().compose(
    new THREE.Vector3(t.translation[0], t.translation[1], t.translation[2]),
    new THREE.Quaternion(x, y, z, w),
    new THREE.Vector3(1, 1, 1),
  );
}

/** Indexed BufferGeometry with normals from a parsed mesh. */
export function buildGeometry(parsed: ParsedMesh): THREE.BufferGeometry {
  const geo = new THREE.BufferGeometry();
  geo.setAttribute("position", new THREE.BufferAttribute(parsed.positions, 3));
  geo.setIndex(new THREE.BufferAttribute(parsed.indices, 1));
  geo.computeVertexNormals();
  return geo;
}

/** rainbow / blue-white-red ramps over a normalized 0..1 value. */
export function colormapRgb(name: string, v: number): [number, number, number] {
  const t = Math.min(Math.max(v, 0), 1);
  if (name === "blue-white-red") {
    if (t < 0.5) {
      const u = t * 2;
      return [u, u, 1];
    }
    const u = (t - 0.5) * 2;
    return [1, 1 - u, 1 - u];
  }
  // rainbow: blue -> cyan -> green -> yellow -> red
  const h = (1 - t) * (2 / 3); // hue 2/3 (blue) down to 0 (red)
  const c = new THREE.Color().setHSL(h, 1, 0.5);
  return [c.r, c.g, c.b];
}

function edgesForBox(min: [number, number, number], max: [number, number, number]): Float32Array {
  const c = boxCorners(min, max);
  const pairs: Array<[number, number]> = [
    [0, 1], [0, 2], [1, 3], [2, 3],
    [4, 5], [4, 6], [5, 7], [6, 7],
    [0, 4], [1, 5], [2, 6], [3, 7],
  ];
  const out = new Float32Array(pairs.length * 6);
  pairs.forEach(([a, b], i) => {
    out.set(c[a]!, i * 6);
    out.set(c[b]!, i * 6 + 3);
  });
  return out;
}

export class SceneView {
  readonly scene: THREE.Scene;
  readonly ground: THREE.Mesh;
  private readonly geometryByRef = new Map<string, THREE.BufferGeometry>();
  private readonly nodes = new Map<number, ObjectNode>();
  private readonly cursorShadows = new Map<string, THREE.Mesh>();
  private planeY = -DEFAULT_MARGIN;

  constructor() {
    this.scene = new THREE.Scene();
    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x404048, 0.9));
    const sun = new THREE.DirectionalLight(0xffffff, 0.7);
    sun.position.set(3, 10, 4);
    this.scene.add(sun);
    this.ground = new THREE.Mesh(
      new THREE.PlaneGeometry(1, 1),
      new THREE.MeshBasicMaterial({ color: GROUND_COLOR }),
    );
    this.ground.rotation.x = -Math.PI / 2;
    this.scene.add(this.ground);
  }

  /** Ground height currently in use (scene bottom minus the margin). */
  get groundY(): number {
    return this.planeY;
  }

  node(id: number): ObjectNode | undefined {
    return this.nodes.get(id);
  }

  cursorShadow(cursor: string): THREE.Mesh | undefined {
    return this.cursorShadows.get(cursor);
  }

  /**
   * Bring the scene in line with the store. `dragTargets` carries the local
   * drag controller's in-flight target per cursor so its shadow tracks the
   * pointer between server echoes; object bodies still only move on deltas.
   */
  sync(store: SceneStore, dragTargets: ReadonlyMap<string, TransformJson> = new Map()): void {
    const doc = store.doc;
    if (doc === null) {
      return;
    }
    const bounds = store.worldBounds();
    this.planeY = groundPlaneY(bounds ? bounds.min[1] : DEFAULT_MARGIN);
    this.layoutGround(bounds);
    const flatten = new THREE.Matrix4().fromArray(shadowMatrixElements(this.planeY));
    const ribboned = ribbonedObjects(doc, store.status.time);
    const seen = new Set<number>();
    for (const entry of store.sceneGraph()) {
      seen.add(entry.id);
      this.syncObject(store, entry, flatten, ribboned);
    }
    for (const [id, node] of [...this.nodes]) {
      if (!seen.has(id)) {
        this.scene.remove(node.body, node.shadow, node.outline, node.ribbon);
        this.nodes.delete(id);
      }
    }
    this.syncCursorShadows(store, flatten, dragTargets);
  }

  private geometry(store: SceneStore, ref: string): THREE.BufferGeometry {
    let geo = this.geometryByRef.get(ref);
    if (geo === undefined) {
      geo = buildGeometry(store.geometry(ref));
      this.geometryByRef.set(ref, geo);
    }
    return geo;
  }

  private layoutGround(bounds: { min: [number, number, number]; max: [number, number, number] } | null): void {
    let size = 20;
    let cx = 0;
    let cz = 0;
    if (bounds !== null) {
      const spanX = bounds.max[0] - bounds.min[0];
      const spanZ = bounds.max[2] - bounds.min[2];
      size = Math.max(20, 4 * Math.max(spanX, spanZ));
      cx = (bounds.min[0] + bounds.max[0]) / 2;
      cz = (bounds.min[2] + bounds.max[2]) / 2;
    }
    this.ground.scale.set(size, size, 1);
    this.ground.position.set(cx, this.planeY, cz);
  }

  private syncObject(
    store: SceneStore,
    entry: SceneNode,
    flatten: THREE.Matrix4,
    ribboned: Set<number>,
  ): void {
    let node = this.nodes.get(entry.id);
    if (node === undefined || node.meshRef !== entry.meshRef) {
      if (node !== undefined) {
        this.scene.remove(node.body, node.shadow, node.outline, node.ribbon);
      }
      node = this.createNode(store, entry.id, entry.meshRef);
      this.nodes.set(entry.id, node);
    }
    const world = transformMatrix(entry.object.state.transform);
    node.body.matrix.copy(world);
    node.body.visible = entry.object.visible;
    this.applyColor(node.body, entry.object.color, store, entry.meshRef);

    // shadow = flatten * world: x and z ride through untouched
    node.shadow.matrix.copy(flatten).multiply(world);
    node.shadow.visible = entry.object.visible;

    node.outline.matrix.copy(world);
    node.outline.visible = entry.selected && entry.object.visible;
    if (entry.selected) {
      const grouped =
        entry.object.group !== null &&
        store.status.selection.some(
          (otherId) =>
            otherId !== entry.id && store.object(otherId)?.group === entry.object.group,
        );
      (node.outline.material as THREE.LineBasicMaterial).color.setHex(
        grouped ? SELECTION_COLOR_GROUP : SELECTION_COLOR_SINGLE,
      );
    }

    node.ribbon.visible = entry.object.visible && ribboned.has(entry.id);
    if (node.ribbon.visible) {
      const parsed = store.geometry(entry.meshRef);
      const top = parsed.max[1];
      const t = entry.object.state.transform.translation;
      node.ribbon.position.set(t[0], t[1] + top + 0.3, t[2]);
    }
  }

  private createNode(store: SceneStore, id: number, meshRef: string): ObjectNode {
    const geo = this.geometry(store, meshRef);
    const body = new THREE.Mesh(
      geo,
      new THREE.MeshLambertMaterial({ color: 0xffffff }),
    );
    body.matrixAutoUpdate = false;
    body.userData["objectId"] = id;
    const shadow = new THREE.Mesh(
      geo,
      new THREE.MeshBasicMaterial({
        color: 0x000000,
        transparent: true,
        opacity: OBJECT_SHADOW_DARKNESS,
        depthWrite: false,
      }),
    );
    shadow.matrixAutoUpdate = false;
    const parsed = store.geometry(meshRef);
    const outlineGeo = new THREE.BufferGeometry();
    outlineGeo.setAttribute(
      "position",
      new THREE.BufferAttribute(edgesForBox(parsed.min, parsed.max), 3),
    );
    const outline = new THREE.LineSegments(
      outlineGeo,
      new THREE.LineBasicMaterial({ color: SELECTION_COLOR_SINGLE }),
    );
    outline.matrixAutoUpdate = false;
    const ribbon = new THREE.Mesh(
      new THREE.OctahedronGeometry(0.12),
      new THREE.MeshBasicMaterial({ color: RIBBON_COLOR }),
    );
    ribbon.visible = false;
    this.scene.add(body, shadow, outline, ribbon);
    return { body, shadow, outline, ribbon, meshRef };
  }

  private applyColor(
    mesh: THREE.Mesh,
    color: ColorJson,
    store: SceneStore,
    meshRef: string,
  ): void {
    const mat = mesh.material as THREE.MeshLambertMaterial;
    if ("rgb" in color) {
      mat.vertexColors = false;
      mat.color.setRGB(color.rgb[0], color.rgb[1], color.rgb[2]);
      return;
    }
    const entry = store.doc?.meshes[meshRef];
    const scalars = entry?.scalars?.[color.channel];
    const geo = mesh.geometry;
    const count = geo.getAttribute("position").count;
    if (!scalars || scalars.length !== count) {
      mat.vertexColors = false;
      mat.color.setRGB(...FALLBACK_RGB);
      return;
    }
    let lo = Infinity;
    let hi = -Infinity;
    for (const s of scalars) {
      lo = Math.min(lo, s);
      hi = Math.max(hi, s);
    }
    const span = hi - lo || 1;
    const rgb = new Float32Array(count * 3);
    for (let i = 0; i < count; i += 1) {
      const [r, g, b] = colormapRgb(color.colormap, (scalars[i]! - lo) / span);
      rgb[i * 3] = r;
      rgb[i * 3 + 1] = g;
      rgb[i * 3 + 2] = b;
    }
    geo.setAttribute("color", new THREE.BufferAttribute(rgb, 3));
    mat.vertexColors = true;
    mat.color.setRGB(1, 1, 1);
  }

  private syncCursorShadows(
    store: SceneStore,
    flatten: THREE.Matrix4,
    dragTargets: ReadonlyMap<string, TransformJson>,
  ): void {
    const active = new Set<string>();
    for (const [cursor, objectId] of Object.entries(store.status.grabs)) {
      const obj = store.object(objectId);
      if (obj === undefined) {
        continue;
      }
      active.add(cursor);
      let mesh = this.cursorShadows.get(cursor);
      const geo = this.geometry(store, obj.mesh);
      if (mesh === undefined) {
        mesh = new THREE.Mesh(
          geo,
          new THREE.MeshBasicMaterial({
            color: 0x000000,
            transparent: true,
            opacity: CURSOR_SHADOW_DARKNESS,
            depthWrite: false,
          }),
        );
        mesh.matrixAutoUpdate = false;
        this.scene.add(mesh);
        this.cursorShadows.set(cursor, mesh);
      } else if (mesh.geometry !== geo) {
        mesh.geometry = geo;
      }
      const target = dragTargets.get(cursor) ?? obj.state.transform;
      const world = transformMatrix(target);
      // larger than the body shadow, scaled about the footprint center
      const cx = target.translation[0];
      const cz = target.translation[2];
      const grow = new THREE.Matrix4()
        .makeTranslation(cx, 0, cz)
        .multiply(new THREE.Matrix4().makeScale(CURSOR_SHADOW_SCALE, 1, CURSOR_SHADOW_SCALE))
        .multiply(new THREE.Matrix4().makeTranslation(-cx, 0, -cz));
      mesh.matrix.copy(grow).multiply(flatten).multiply(world);
      mesh.visible = true;
    }
    for (const [cursor, mesh] of [...this.cursorShadows]) {
      if (!active.has(cursor)) {
        this.scene.remove(mesh);
        this.cursorShadows.delete(cursor);
      }
    }
  }
}

/** Shadow lift exported for tests that probe exact plane height. */
export const VIEW_SHADOW_LIFT = SHADOW_LIFT;
