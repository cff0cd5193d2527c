import type { Box } from './types'

/** Minimal slice of CanvasRenderingContext2D used by the overlay, so tests
 * can substitute a recording fake. */
export interface OverlayContext {
  strokeStyle: string | CanvasGradient | CanvasPattern
  lineWidth: number
  fillStyle: string | CanvasGradient | CanvasPattern
  beginPath(): void
  rect(x: number, y: number, w: number, h: number): void
  stroke(): void
  arc(x: number, y: number, r: number, a0: number, a1: number): void
  fill(): void
}

/** Map a frame-space box to canvas pixels for a canvas scaled by (sx, sy). */
export function scaleBox(box: Box, sx: number, sy: number): Box {
  return { x: box.x * sx, y: box.y * sy, w: box.w * sx, h: box.h * sy }
}

export function canvasToFrame(px: number, py: number, sx: number, sy: number): { x: number; y: number } {
  return { x: px / sx, y: py / sy }
}

export function drawBox(ctx: OverlayContext, box: Box, color: string, lineWidth = 2): void {
  ctx.beginPath()
  ctx.rect(box.x, box.y, box.w, box.h)
  ctx.strokeStyle = color
  ctx.lineWidth = lineWidth
  ctx.stroke()
}

export function drawDot(ctx: OverlayContext, x: number, y: number, color: string, radius = 4): void {
  ctx.beginPath()
  ctx.arc(x, y, radius, 0, Math.PI * 2)
  ctx.fillStyle = color
  ctx.fill()
}

/** Normalize a drag gesture (any corner pair) into a positive-size box. */
export function dragToBox(x0: number, y0: number, x1: number, y1: number): Box {
  return {
    x: Math.min(x0, x1),
    y: Math.min(y0, y1),
    w: Math.abs(x1 - x0),
    h: Math.abs(y1 - y0),
  }
}
