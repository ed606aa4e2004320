/**
 * Client-side scene truth: the last snapshot with every delta since folded
 * in. The UI renders from this store and nowhere else (no prediction, no
 * locally computed physics), so whatever is on screen is always a state the
 * server actually produced. Folding follows the protocol contract: object
 * entries overwrite the matching object rows, status overwrites the
 * document's mode/toggle/time fields, and the result after each delta is
 * exactly what the next snapshot will contain.
 */

import { boxCorners, ObjectJson, ParsedMesh, parseObj, ProjectDoc } from "./doc.js";
import { qrotate, Quat, Vec3 } from "./math.js";
import type {
  DeltaPayload,
  Push,
  SnapshotPayload,
  StatsJson,
  StatusJson,
} from "./protocol.js";

export interface SceneNode {
  id: number;
  name: string;
  meshRef: string;
  object: ObjectJson;
  grabbedBy: string | null;
  selected: boolean;
}

const EMPTY_STATS: StatsJson = {
  n_objects: 0,
  n_moving: 0,
  pair_tests_executed: 0,
  pairs_colliding: 0,
  broad_candidates: 0,
};

const EMPTY_STATUS: StatusJson = {
  physics_mode: "full",
  interaction_mode: "edit",
  collisions: true,
  springs: true,
  time: 0,
  playing: false,
  selection: [],
  grabs: {},
};

export class SceneStore {
  doc: ProjectDoc | null = null;
  step = -1;
  /** Placeholder until the first snapshot; real values are server truth. */
  status: StatusJson = EMPTY_STATUS;
  stats: StatsJson = EMPTY_STATS;

  /** Bumped on every applied push; cheap dirty check for render loops. */
  version = 0;

  private byId = new Map<number, ObjectJson>();
  private meshes = new Map<string, ParsedMesh>();

  apply(push: Push): void {
    switch (push.kind) {
      case "snapshot":
        this.applySnapshot(push.payload);
        break;
      case "delta":
        this.applyDelta(push.payload);
        break;
      case "stats": {
        const { step, ...stats } = push.payload;
        void step;
        this.stats = stats;
        break;
      }
      case "hello":
        return; // handled by the client
    }
    this.version += 1;
  }

  applySnapshot(payload: SnapshotPayload): void {
    this.doc = payload.doc as unknown as ProjectDoc;
    this.step = payload.step;
    this.status = payload.status;
    this.stats = payload.stats;
    this.byId.clear();
    for (const obj of this.doc.objects) this.byId.set(obj.id, obj);
    // keep parsed geometry for hashes that are still present
    for (const ref of [...this.meshes.keys()]) {
      if (!(ref in this.doc.meshes)) this.meshes.delete(ref);
    }
  }

  applyDelta(payload: DeltaPayload): void {
    const doc = this.doc;
    if (!doc) throw new Error("delta before first snapshot");
    for (const [idText, entry] of Object.entries(payload.objects)) {
      const obj = this.byId.get(Number(idText));
      if (!obj) throw new Error(`delta for unknown object ${idText}`);
      obj.state.transform = entry.transform;
      obj.state.linear_velocity = entry.linear_velocity;
      obj.state.angular_velocity = entry.angular_velocity;
      obj.color = entry.color;
      obj.group = entry.group;
      obj.visible = entry.visible;
    }
    doc.physics_mode = payload.status.physics_mode;
    doc.interaction_mode = payload.status.interaction_mode;
    doc.collisions_enabled = payload.status.collisions;
    doc.springs_enabled = payload.status.springs;
    doc.current_time = payload.status.time;
    this.status = payload.status;
    this.stats = payload.stats;
    this.step = payload.step;
  }

  get connectedOnce(): boolean {
    return this.doc !== null;
  }

  object(id: number): ObjectJson | undefined {
    return this.byId.get(id);
  }

  /** Parsed geometry for a mesh hash (embedded OBJ entries only). */
  geometry(ref: string): ParsedMesh {
    let parsed = this.meshes.get(ref);
    if (!parsed) {
      const entry = this.doc?.meshes[ref];
      if (!entry) throw new Error(`unknown mesh ${ref}`);
      if (entry.obj === undefined) {
        throw new Error(`mesh ${ref} is path-linked; no loader is attached`);
      }
      parsed = parseObj(entry.obj);
      this.meshes.set(ref, parsed);
    }
    return parsed;
  }

  /** Everything the viewport draws, in document (id) order. */
  sceneGraph(): SceneNode[] {
    const doc = this.doc;
    if (!doc) return [];
    const grabbers = new Map<number, string>();
    for (const [cursor, id] of Object.entries(this.status.grabs)) {
      grabbers.set(id, cursor);
    }
    const selected = new Set(this.status.selection);
    return doc.objects.map((object) => ({
      id: object.id,
      name: object.name,
      meshRef: object.mesh,
      object,
      grabbedBy: grabbers.get(object.id) ?? null,
      selected: selected.has(object.id),
    }));
  }

  /**
   * World-space bounds over all visible objects' transformed local boxes.
   * Null when nothing is visible; the ground plane needs the minimum y.
   */
  worldBounds(): { min: Vec3; max: Vec3 } | null {
    const doc = this.doc;
    if (!doc) return null;
    let found = false;
    const min: Vec3 = [Infinity, Infinity, Infinity];
    const max: Vec3 = [-Infinity, -Infinity, -Infinity];
    for (const obj of doc.objects) {
      if (!obj.visible) continue;
      const mesh = this.geometry(obj.mesh);
      const rot = obj.state.transform.rotation as Quat;
      const tr = obj.state.transform.translation;
      for (const corner of boxCorners(mesh.min, mesh.max)) {
        const world = qrotate(rot, corner as Vec3);
        for (let k = 0; k < 3; k++) {
          const value = world[k]! + tr[k]!;
          if (value < min[k]!) min[k] = value;
          if (value > max[k]!) max[k] = value;
        }
        found = true;
      }
    }
    return found ? { min, max } : null;
  }
}
