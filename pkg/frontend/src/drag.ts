/**
 * Drag state machine: pointer gestures in, grab commands out.
 *
 * The controller never talks to the network itself. Each method returns the
 * command object (kind + payload) the caller should send, or null when there
 * is nothing to send. That keeps the gesture arithmetic testable without a
 * server and keeps the UI stateless with respect to simulation truth: the
 * rendered object only moves when the server's delta comes back.
 *
 * Mapping (one mouse standing in for a tracked wand):
 *   - plain drag        -> translation in the camera's view plane
 *   - wheel             -> translation along the view direction (depth)
 *   - modifier + drag   -> arcball rotation about the grab point
 */

import {
  CameraState,
  arcballStep,
  arcballVector,
  viewBasis,
  viewToWorldRotation,
  worldPerPixel,
} from "./camera.js";
import { Quat, Vec3, qmul, qnormalize, qrotate, vadd, vscale } from "./math.js";
import { JsonValue, TransformJson } from "./protocol.js";

export type CursorName = "left" | "right";

export interface ScreenPoint {
  /** Pixels from the viewport's left edge. */
  x: number;
  /** Pixels from the viewport's top edge (screen y grows downward). */
  y: number;
}

/** A command ready for SessionClient.command(kind, payload). */
export interface OutgoingCommand {
  kind: string;
  payload: Record<string, JsonValue>;
}

export interface DragControllerOptions {
  /** Viewport size in pixels; used for pixel-to-world and arcball scaling. */
  widthPx: number;
  heightPx: number;
  /** World units moved along the view axis per wheel tick. */
  depthStep?: number;
}

export const DEFAULT_DEPTH_STEP = 0.25;

interface ActiveDrag {
  cursor: CursorName;
  objectId: number;
  rotation: Quat;
  translation: Vec3;
  lastScreen: ScreenPoint;
}

export class DragController {
  private camera: CameraState;
  private widthPx: number;
  private heightPx: number;
  private readonly depthStep: number;
  private active: ActiveDrag | null = null;

  constructor(camera: CameraState, options: DragControllerOptions) {
    this.camera = camera;
    this.widthPx = options.widthPx;
    this.heightPx = options.heightPx;
    this.depthStep = options.depthStep ?? DEFAULT_DEPTH_STEP;
  }

  /** The camera may orbit mid-drag; gestures always use the current one. */
  setCamera(camera: CameraState): void {
    this.camera = camera;
  }

  setViewport(widthPx: number, heightPx: number): void {
    this.widthPx = widthPx;
    this.heightPx = heightPx;
  }

  get dragging(): boolean {
    return this.active !== null;
  }

  get grabbedObject(): number | null {
    return this.active ? this.active.objectId : null;
  }

  /**
   * Start a drag on an object. `start` must be the object's current
   * transform as last reported by the server, so the first pose matches
   * what the scene already shows.
   */
  begin(
    cursor: CursorName,
    objectId: number,
    start: TransformJson,
    screen: ScreenPoint,
  ): OutgoingCommand {
    this.active = {
      cursor,
      objectId,
      rotation: [...start.rotation] as Quat,
      translation: [...start.translation] as Vec3,
      lastScreen: { ...screen },
    };
    return { kind: "grab_begin", payload: { cursor, id: objectId } };
  }

  /**
   * Update the target from a pointer move. With the modifier held the move
   * spins the arcball; otherwise it slides the target in the view plane.
   * Returns nothing: poses are emitted by tick(), not per pointer event,
   * so a fast mouse cannot flood the wire.
   */
  pointerMove(screen: ScreenPoint, modifierHeld: boolean): void {
    const drag = this.active;
    if (drag === null) {
      return;
    }
    if (modifierHeld) {
      const a = this.toNdc(drag.lastScreen);
      const b = this.toNdc(screen);
      const step = arcballStep(a.x, a.y, b.x, b.y);
      const world = viewToWorldRotation(step, viewBasis(this.camera));
      drag.rotation = qnormalize(qmul(world, drag.rotation));
    } else {
      const wpp = worldPerPixel(this.camera, this.heightPx);
      const dx = (screen.x - drag.lastScreen.x) * wpp;
      const dy = (screen.y - drag.lastScreen.y) * wpp;
      const basis = viewBasis(this.camera);
      // screen y grows downward, view up grows upward
      drag.translation = vadd(
        drag.translation,
        vadd(vscale(basis.right, dx), vscale(basis.up, -dy)),
      );
    }
    drag.lastScreen = { ...screen };
  }

  /** Wheel forward by `ticks` pushes the target `ticks * depthStep` deeper. */
  wheel(ticks: number): void {
    const drag = this.active;
    if (drag === null) {
      return;
    }
    const basis = viewBasis(this.camera);
    drag.translation = vadd(drag.translation, vscale(basis.forward, ticks * this.depthStep));
  }

  /**
   * Emit the current pose. Call once per display frame while dragging; the
   * server coalesces bursts, so emitting every frame is safe and keeps the
   * stream comfortably above the 30 Hz floor.
   */
  tick(): OutgoingCommand | null {
    const drag = this.active;
    if (drag === null) {
      return null;
    }
    return {
      kind: "grab_pose",
      payload: {
        cursor: drag.cursor,
        target: {
          rotation: [...drag.rotation],
          translation: [...drag.translation],
        },
      },
    };
  }

  /** Release the grab (pointer up, or aborting after a server error). */
  end(): OutgoingCommand | null {
    const drag = this.active;
    if (drag === null) {
      return null;
    }
    this.active = null;
    return { kind: "grab_end", payload: { cursor: drag.cursor } };
  }

  /** Current target transform, for drawing the cursor shadow. */
  targetTransform(): TransformJson | null {
    const drag = this.active;
    if (drag === null) {
      return null;
    }
    return {
      rotation: [...drag.rotation],
      translation: [...drag.translation],
    };
  }

  private toNdc(p: ScreenPoint): { x: number; y: number } {
    return {
      x: (p.x / this.widthPx) * 2 - 1,
      y: -((p.y / this.heightPx) * 2 - 1),
    };
  }
}

/** Rotate-and-offset helper for previewing a grabbed mesh at its target. */
export function applyTargetToPoint(target: TransformJson, localPoint: Vec3): Vec3 {
  const rotated = qrotate(target.rotation as Quat, localPoint);
  return vadd(rotated, target.translation as Vec3);
}
