// Typed view of the project-file JSON that snapshots carry, plus the mesh
// geometry decoding the viewport needs. Field names follow the on-disk
// format exactly; the store never reshapes the document, it only folds
// delta entries into it.

import type { ColorJson, TransformJson, Vec3Json } from "./protocol.js";

export interface BodyStateJson {
  transform: TransformJson;
  linear_velocity: Vec3Json;
  angular_velocity: Vec3Json;
  mass: number;
  inertia: Vec3Json;
  center_local: Vec3Json;
}

export interface KeyframeJson {
  time: number;
  transform: TransformJson;
  color: ColorJson;
  group: number | null;
  visible: boolean;
}

export interface ObjectJson {
  id: number;
  name: string;
  mesh: string;
  state: BodyStateJson;
  color: ColorJson;
  group: number | null;
  visible: boolean;
  chain: number | null;
  chain_index: number | null;
  keyframes: KeyframeJson[];
}

export interface MeshEntryJson {
  obj?: string;
  path?: string;
  name?: string;
  scalars?: Record<string, number[]>;
  meta?: { n_terminus: Vec3Json; c_terminus: Vec3Json; source_id: string };
}

export interface GroupJson {
  id: number;
  name: string;
}

export interface ChainJson {
  id: number;
  members: number[];
  t_ab: TransformJson;
}

export interface ConnectorJson {
  id: number;
  object_a: number;
  anchor_a: Vec3Json;
  object_b: number;
  anchor_b: Vec3Json;
  rest_length: number;
  stiffness: number;
  display_only: boolean;
}

export interface ProjectDoc {
  format_version: number;
  kind: "project";
  physics: Record<string, number | boolean>;
  duration: number;
  current_time: number;
  physics_mode: string;
  interaction_mode: string;
  collisions_enabled: boolean;
  springs_enabled: boolean;
  light_direction?: Vec3Json;
  next_id: number;
  meshes: Record<string, MeshEntryJson>;
  objects: ObjectJson[];
  groups: GroupJson[];
  chains: ChainJson[];
  connectors: ConnectorJson[];
}

export interface ParsedMesh {
  positions: Float32Array; // x y z per vertex
  indices: Uint32Array; // 3 per triangle
  min: Vec3Json;
  max: Vec3Json;
}

/**
 * Decode the canonical OBJ text embedded in mesh entries: `v` and `f` lines
 * only, 1-based indices, no negative references. Anything else in a
 * snapshot's geometry is a server bug, so parsing is strict.
 */
export function parseObj(text: string): ParsedMesh {
  const positions: number[] = [];
  const indices: number[] = [];
  const min: Vec3Json = [Infinity, Infinity, Infinity];
  const max: Vec3Json = [-Infinity, -Infinity, -Infinity];
  let lineNo = 0;
  for (const raw of text.split("\n")) {
    lineNo += 1;
    const line = raw.trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(/\s+/);
    if (parts[0] === "v") {
      if (parts.length !== 4) throw new Error(`obj line ${lineNo}: bad vertex`);
      for (let k = 0; k < 3; k++) {
        const value = Number(parts[k + 1]);
        if (!Number.isFinite(value)) throw new Error(`obj line ${lineNo}: bad number`);
        positions.push(value);
        if (value < min[k]!) min[k] = value;
        if (value > max[k]!) max[k] = value;
      }
    } else if (parts[0] === "f") {
      if (parts.length !== 4) throw new Error(`obj line ${lineNo}: faces must be triangles`);
      for (let k = 1; k < 4; k++) {
        const idx = Number(parts[k]!.split("/")[0]);
        if (!Number.isInteger(idx) || idx < 1 || idx * 3 > positions.length) {
          throw new Error(`obj line ${lineNo}: vertex index out of range`);
        }
        indices.push(idx - 1);
      }
    } else {
      throw new Error(`obj line ${lineNo}: unsupported record '${parts[0]}'`);
    }
  }
  if (positions.length === 0) throw new Error("obj has no vertices");
  return {
    positions: new Float32Array(positions),
    indices: new Uint32Array(indices),
    min,
    max,
  };
}

/** The 8 corners of a local bounding box, for world-bounds and OBB outlines. */
export function boxCorners(min: Vec3Json, max: Vec3Json): Vec3Json[] {
  const out: Vec3Json[] = [];
  for (const x of [min[0], max[0]]) {
    for (const y of [min[1], max[1]]) {
      for (const z of [min[2], max[2]]) {
        out.push([x, y, z]);
      }
    }
  }
  return out;
}
