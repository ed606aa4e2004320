/**
 * HUD view-model: toolbar buttons, error toasts, and the connection banner.
 *
 * The HUD renders server truth only. Buttons emit commands; nothing flips
 * locally until the status push comes back, so the toolbar can never drift
 * from the simulation.
 */

import { OutgoingCommand } from "./drag.js";
import { StatsJson, StatusJson } from "./protocol.js";

export type PhysicsMode = "full" | "pose" | "off";
export type InteractionMode = "edit" | "animate" | "color";

export const PHYSICS_MODES: readonly PhysicsMode[] = ["full", "pose", "off"];
export const INTERACTION_MODES: readonly InteractionMode[] = ["edit", "animate", "color"];

/** One explicit button per mode beats cycling: no hidden state to count. */
export function setModeCommand(
  physics?: PhysicsMode,
  interaction?: InteractionMode,
): OutgoingCommand {
  const payload: Record<string, string> = {};
  if (physics !== undefined) {
    payload["physics"] = physics;
  }
  if (interaction !== undefined) {
    payload["interaction"] = interaction;
  }
  return { kind: "set_mode", payload };
}

export function toggleCollisionsCommand(): OutgoingCommand {
  return { kind: "toggle_collisions", payload: {} };
}

export function toggleSpringsCommand(): OutgoingCommand {
  return { kind: "toggle_springs", payload: {} };
}

export interface Toast {
  message: string;
  bornMs: number;
}

export const TOAST_TTL_MS = 4000;

/** Short-lived error messages, newest last. */
export class ToastQueue {
  private toasts: Toast[] = [];

  push(message: string, nowMs: number): void {
    this.toasts.push({ message, bornMs: nowMs });
  }

  /** Toasts still visible at `nowMs`; expired ones are dropped for good. */
  active(nowMs: number, ttlMs: number = TOAST_TTL_MS): readonly Toast[] {
    this.toasts = this.toasts.filter((t) => nowMs - t.bornMs < ttlMs);
    return this.toasts;
  }

  clear(): void {
    this.toasts = [];
  }
}

/** Banner text for the connection state, or null when all is well. */
export function connectionBanner(connected: boolean): string | null {
  return connected ? null : "connection lost - reconnect to resume";
}

/** One-line summary for the corner readout. */
export function statusLine(status: StatusJson, stats: StatsJson): string {
  const parts = [
    `physics ${status.physics_mode}`,
    `mode ${status.interaction_mode}`,
    status.collisions ? "collisions on" : "collisions off",
    status.springs ? "springs on" : "springs off",
    `t=${status.time.toFixed(2)}${status.playing ? " playing" : ""}`,
  ];
  if (stats.pair_tests_executed > 0 || stats.pairs_colliding > 0) {
    parts.push(`${stats.pairs_colliding}/${stats.pair_tests_executed} contacts`);
  }
  return parts.join(" | ");
}

/** Selection readout, e.g. "3 selected". */
export function selectionLabel(selection: readonly number[]): string {
  if (selection.length === 0) {
    return "nothing selected";
  }
  if (selection.length === 1) {
    return `object ${selection[0]}`;
  }
  return `${selection.length} selected`;
}
