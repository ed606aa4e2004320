/**
 * Timeline strip logic: scrubbing, the keyframe button, play/pause, and the
 * gift-ribbon markers that tag objects holding a keyframe at the playhead.
 *
 * Everything here is a pure function of document state, so the strip can be
 * redrawn from the store after every push without local bookkeeping.
 */

import { ObjectJson, ProjectDoc } from "./doc.js";
import { OutgoingCommand } from "./drag.js";

/** Keyframes written through the UI land exactly on the playhead value. */
export const MARKER_EPSILON = 1e-9;

export function clampTime(time: number, duration: number): number {
  if (!Number.isFinite(time)) {
    return 0;
  }
  return Math.min(Math.max(time, 0), duration);
}

/** Scrub the playhead: emits set_time with the time clamped into range. */
export function scrubCommand(time: number, duration: number): OutgoingCommand {
  return { kind: "set_time", payload: { time: clampTime(time, duration) } };
}

/**
 * The keyframe button captures every selected object at the playhead.
 * Time is omitted so the server stamps its own playhead value; the client
 * never guesses at simulation state.
 */
export function keyframeCommands(selection: readonly number[]): OutgoingCommand[] {
  return selection.map((id) => ({ kind: "set_keyframe", payload: { id } }));
}

export function playPauseCommand(currentlyPlaying: boolean): OutgoingCommand {
  return { kind: currentlyPlaying ? "pause" : "play", payload: {} };
}

export function hasKeyframeAt(
  object: ObjectJson,
  time: number,
  eps: number = MARKER_EPSILON,
): boolean {
  return object.keyframes.some((kf) => Math.abs(kf.time - time) <= eps);
}

/** Ids of objects that should wear the ribbon marker at the playhead. */
export function ribbonedObjects(
  doc: ProjectDoc,
  time: number,
  eps: number = MARKER_EPSILON,
): Set<number> {
  const out = new Set<number>();
  for (const obj of doc.objects) {
    if (hasKeyframeAt(obj, time, eps)) {
      out.add(obj.id);
    }
  }
  return out;
}

/** Distinct keyframe times across the document, sorted, for tick marks. */
export function keyframeTimes(doc: ProjectDoc): number[] {
  const seen = new Set<number>();
  for (const obj of doc.objects) {
    for (const kf of obj.keyframes) {
      seen.add(kf.time);
    }
  }
  return [...seen].sort((a, b) => a - b);
}

/** Map a time to an x pixel on a strip of the given width. */
export function timeToPixel(time: number, duration: number, widthPx: number): number {
  if (duration <= 0) {
    return 0;
  }
  return (clampTime(time, duration) / duration) * widthPx;
}

/** Inverse of timeToPixel, for pointer events on the strip. */
export function pixelToTime(xPx: number, duration: number, widthPx: number): number {
  if (widthPx <= 0) {
    return 0;
  }
  return clampTime((xPx / widthPx) * duration, duration);
}
