// Canvas rendering: frontal (y, z) piloting pane and sagittal (x, z) view.
// Every drawn quantity comes straight from the latest snapshot.

import { ArmPoints, Snapshot, TargetState, Vec3 } from "./protocol.js";
import { PaneTransform, worldToPx } from "./transforms.js";

export type Pane = "frontal" | "sagittal";

function axes(pane: Pane, v: Vec3): [number, number] {
  // horizontal coordinate, vertical coordinate (z up)
  return pane === "frontal" ? [v[1], v[2]] : [v[0], v[2]];
}

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | unknown;
  fillStyle: string | unknown;
  lineWidth: number;
  font: string;
  globalAlpha: number;
}

export function drawTarget(
  ctx: Ctx2D, t: PaneTransform, pane: Pane, target: TargetState, flash: boolean,
): void {
  const [a, z] = axes(pane, target.center);
  const [px, py] = worldToPx(t, a, z);
  ctx.beginPath();
  ctx.arc(px, py, Math.max(3, target.radius * t.pxPerMeter), 0, Math.PI * 2);
  ctx.fillStyle = flash ? "#ffd447" : target.lit ? "#e4572e" : "#2b2d42";
  ctx.fill();
  ctx.strokeStyle = target.lit ? "#ffd447" : "#8d99ae";
  ctx.lineWidth = target.lit ? 3 : 1;
  ctx.stroke();
  ctx.fillStyle = "#8d99ae";
  ctx.font = "10px sans-serif";
  ctx.fillText(String(target.id), px + 6, py - 6);
}

export function drawArm(
  ctx: Ctx2D, t: PaneTransform, pane: Pane, arm: ArmPoints, color: string, width: number,
): void {
  const pts: Vec3[] = [[0, 0, 0], arm.d, arm.e, arm.w];
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [a, z] = axes(pane, p);
    const [px, py] = worldToPx(t, a, z);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.stroke();
  const [wa, wz] = axes(pane, arm.w);
  const [wx, wy] = worldToPx(t, wa, wz);
  ctx.beginPath();
  ctx.arc(wx, wy, 4, 0, Math.PI * 2);
  ctx.fillStyle = color;
  ctx.fill();
}

export function drawCursor(
  ctx: Ctx2D, t: PaneTransform, y: number, z: number,
): void {
  const [px, py] = worldToPx(t, y, z);
  ctx.beginPath();
  ctx.arc(px, py, 6, 0, Math.PI * 2);
  ctx.strokeStyle = "#06d6a0";
  ctx.lineWidth = 1.5;
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(px - 9, py);
  ctx.lineTo(px + 9, py);
  ctx.moveTo(px, py - 9);
  ctx.lineTo(px, py + 9);
  ctx.stroke();
}

export interface ViewOptions {
  flashTargets: Set<number>;
  cursor: { y: number; z: number } | null; // robot-frame frontal cursor
  humanOverRobot: number;
}

export function renderPane(
  ctx: Ctx2D,
  t: PaneTransform,
  pane: Pane,
  snap: Snapshot,
  opts: ViewOptions,
): void {
  ctx.clearRect(0, 0, t.width, t.height);
  ctx.globalAlpha = 1.0;
  for (const target of snap.targets) {
    drawTarget(ctx, t, pane, target, opts.flashTargets.has(target.id));
  }
  // human arm rendered in robot scale for comparison (divide by the ratio)
  const r = opts.humanOverRobot;
  const scaled: ArmPoints = {
    d: snap.arm_human.d.map((v) => v / r) as Vec3,
    e: snap.arm_human.e.map((v) => v / r) as Vec3,
    w: snap.arm_human.w.map((v) => v / r) as Vec3,
  };
  ctx.globalAlpha = 0.35;
  drawArm(ctx, t, pane, scaled, "#118ab2", 2);
  ctx.globalAlpha = 1.0;
  drawArm(ctx, t, pane, snap.arm_robot, "#ef476f", 3);
  if (pane === "frontal" && opts.cursor) {
    drawCursor(ctx, t, opts.cursor.y, opts.cursor.z);
  }
}

export function drawDisconnected(ctx: Ctx2D, t: PaneTransform): void {
  ctx.globalAlpha = 0.8;
  ctx.fillStyle = "#2b2d42";
  ctx.fillText("disconnected - reconnecting...", t.width / 2 - 80, t.height / 2);
  ctx.globalAlpha = 1.0;
}
