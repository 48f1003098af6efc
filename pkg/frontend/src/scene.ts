/** Top-down rendering of the intersection and both vehicles. */

import { SceneMsg, StateMsg, VehiclePose } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  metersAcross: number; // world meters mapped to the canvas width
}

/** World (x east, y north) to canvas pixels (y down), centered. */
export function worldToScreen(
  x: number,
  y: number,
  vp: Viewport,
): [number, number] {
  const scale = vp.width / vp.metersAcross;
  return [vp.width / 2 + x * scale, vp.height / 2 - y * scale];
}

export function vehicleCorners(pose: VehiclePose): Array<[number, number]> {
  const ux = Math.cos(pose.heading);
  const uy = Math.sin(pose.heading);
  const nx = Math.sin(pose.heading);
  const ny = -Math.cos(pose.heading);
  const hl = pose.length / 2;
  const hw = pose.width / 2;
  return [
    [pose.x + ux * hl + nx * hw, pose.y + uy * hl + ny * hw],
    [pose.x + ux * hl - nx * hw, pose.y + uy * hl - ny * hw],
    [pose.x - ux * hl - nx * hw, pose.y - uy * hl - ny * hw],
    [pose.x - ux * hl + nx * hw, pose.y - uy * hl + ny * hw],
  ];
}

function drawPolygon(
  ctx: CanvasRenderingContext2D,
  corners: Array<[number, number]>,
  vp: Viewport,
  fill: string,
): void {
  ctx.beginPath();
  corners.forEach(([x, y], i) => {
    const [sx, sy] = worldToScreen(x, y, vp);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.closePath();
  ctx.fillStyle = fill;
  ctx.fill();
}

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  scene: SceneMsg,
  state: StateMsg,
  vp: Viewport,
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  ctx.fillStyle = "#202428";
  ctx.fillRect(0, 0, vp.width, vp.height);

  const road = 2 * scene.box_half;
  const scale = vp.width / vp.metersAcross;
  ctx.fillStyle = "#3a3f45";
  // east-west road
  ctx.fillRect(0, vp.height / 2 - road * scale / 2, vp.width, road * scale);
  // north-south road
  ctx.fillRect(vp.width / 2 - road * scale / 2, 0, road * scale, vp.height);

  ctx.strokeStyle = "#585f66";
  ctx.setLineDash([6, 6]);
  ctx.beginPath();
  ctx.moveTo(0, vp.height / 2);
  ctx.lineTo(vp.width, vp.height / 2);
  ctx.moveTo(vp.width / 2, 0);
  ctx.lineTo(vp.width / 2, vp.height);
  ctx.stroke();
  ctx.setLineDash([]);

  const [cx, cy] = worldToScreen(scene.conflict_point.x, scene.conflict_point.y, vp);
  ctx.beginPath();
  ctx.arc(cx, cy, 4, 0, 2 * Math.PI);
  ctx.fillStyle = "#c9a227";
  ctx.fill();

  drawPolygon(ctx, vehicleCorners(state.left), vp, "#4f9ddf");
  drawPolygon(ctx, vehicleCorners(state.straight), vp, "#df6f4f");
}
