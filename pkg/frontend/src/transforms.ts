// Canvas <-> world coordinate mapping.
//
// Both panes render robot-frame meters: the frontal pane shows (y, z),
// the sagittal pane (x, z), each with the shoulder origin at a fixed
// pixel anchor and a pixels-per-meter scale (URL-configurable).  Pilot
// input is expressed as a human-frame wrist target, so cursor positions
// in the robot-scaled pane are multiplied by the human/robot arm-length
// ratio before they go on the wire.

export interface PaneTransform {
  width: number;
  height: number;
  pxPerMeter: number;
  originX: number; // px of world 0 (horizontal axis)
  originY: number; // px of world 0 (vertical axis, z up)
}

export function makePane(width: number, height: number, pxPerMeter: number): PaneTransform {
  return {
    width,
    height,
    pxPerMeter,
    originX: width / 2,
    originY: height * 0.25, // shoulder sits near the top; arm hangs below
  };
}

export function worldToPx(t: PaneTransform, a: number, z: number): [number, number] {
  return [t.originX + a * t.pxPerMeter, t.originY - z * t.pxPerMeter];
}

export function pxToWorld(t: PaneTransform, px: number, py: number): [number, number] {
  return [(px - t.originX) / t.pxPerMeter, (t.originY - py) / t.pxPerMeter];
}

/** Cursor position in the frontal pane -> human-frame (y, z) wrist target. */
export function cursorToHumanFrontal(
  t: PaneTransform,
  px: number,
  py: number,
  humanOverRobot: number,
): [number, number] {
  const [y, z] = pxToWorld(t, px, py);
  return [y * humanOverRobot, z * humanOverRobot];
}

/** Scroll steps -> clamped human-frame depth (x). */
export function scrollDepth(
  current: number,
  deltaSteps: number,
  stepMeters: number,
  min: number,
  max: number,
): number {
  const next = current + deltaSteps * stepMeters;
  return Math.min(max, Math.max(min, next));
}
