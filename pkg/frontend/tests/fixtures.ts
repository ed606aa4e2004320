// Hand-built pushes shaped exactly like the wire format, so the unit tests
// cover the store and view without a server. The live-session test checks
// the same invariants against the real thing.

import { ObjectJson, ProjectDoc } from "../src/doc.js";
import {
  ColorJson,
  DeltaObjectEntry,
  Push,
  SnapshotPayload,
  StatsJson,
  StatusJson,
  TransformJson,
} from "../src/protocol.js";

export const CUBE_OBJ = [
  "v -0.5 -0.5 -0.5",
  "v 0.5 -0.5 -0.5",
  "v -0.5 0.5 -0.5",
  "v 0.5 0.5 -0.5",
  "v -0.5 -0.5 0.5",
  "v 0.5 -0.5 0.5",
  "v -0.5 0.5 0.5",
  "v 0.5 0.5 0.5",
  "f 1 3 4", "f 1 4 2",
  "f 5 6 8", "f 5 8 7",
  "f 1 2 6", "f 1 6 5",
  "f 3 7 8", "f 3 8 4",
  "f 1 5 7", "f 1 7 3",
  "f 2 4 8", "f 2 8 6",
  "",
].join("\n");

export const CUBE_HASH = "cubehash";

export const IDENTITY: TransformJson = {
  rotation: [1, 0, 0, 0],
  translation: [0, 0, 0],
};

export function transformAt(x: number, y: number, z: number): TransformJson {
  return { rotation: [1, 0, 0, 0], translation: [x, y, z] };
}

export function makeObject(
  id: number,
  transform: TransformJson = IDENTITY,
  extra: Partial<ObjectJson> = {},
): ObjectJson {
  const gray: ColorJson = { rgb: [0.8, 0.8, 0.8] };
  return {
    id,
    name: `obj-${id}`,
    mesh: CUBE_HASH,
    state: {
      transform,
      linear_velocity: [0, 0, 0],
      angular_velocity: [0, 0, 0],
      mass: 1,
      inertia: [1 / 6, 1 / 6, 1 / 6],
      center_local: [0, 0, 0],
    },
    color: gray,
    group: null,
    visible: true,
    chain: null,
    chain_index: null,
    keyframes: [],
    ...extra,
  };
}

export function makeDoc(objects: ObjectJson[]): ProjectDoc {
  return {
    format_version: 1,
    kind: "project",
    physics: { dt: 1 / 60 },
    duration: 10,
    current_time: 0,
    physics_mode: "full",
    interaction_mode: "edit",
    collisions_enabled: true,
    springs_enabled: true,
    next_id: objects.length + 1,
    meshes: { [CUBE_HASH]: { obj: CUBE_OBJ, name: "cube" } },
    objects,
    groups: [],
    chains: [],
    connectors: [],
  };
}

export function makeStatus(extra: Partial<StatusJson> = {}): StatusJson {
  return {
    physics_mode: "full",
    interaction_mode: "edit",
    collisions: true,
    springs: true,
    time: 0,
    playing: false,
    selection: [],
    grabs: {},
    ...extra,
  };
}

export function makeStats(extra: Partial<StatsJson> = {}): StatsJson {
  return {
    n_objects: 0,
    n_moving: 0,
    pair_tests_executed: 0,
    pairs_colliding: 0,
    broad_candidates: 0,
    ...extra,
  };
}

export function snapshotPush(
  step: number,
  doc: ProjectDoc,
  status: StatusJson = makeStatus(),
  stats: StatsJson = makeStats(),
): Push {
  const payload: SnapshotPayload = {
    step,
    doc: doc as unknown as SnapshotPayload["doc"],
    status,
    stats,
  };
  return { kind: "snapshot", payload };
}

export function deltaEntry(
  transform: TransformJson,
  extra: Partial<DeltaObjectEntry> = {},
): DeltaObjectEntry {
  return {
    transform,
    linear_velocity: [0, 0, 0],
    angular_velocity: [0, 0, 0],
    color: { rgb: [0.8, 0.8, 0.8] },
    group: null,
    visible: true,
    ...extra,
  };
}

export function deltaPush(
  step: number,
  objects: Record<string, DeltaObjectEntry>,
  status: StatusJson = makeStatus(),
  stats: StatsJson = makeStats(),
): Push {
  return { kind: "delta", payload: { step, objects, status, stats } };
}
