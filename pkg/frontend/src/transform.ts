/** Screen/layout coordinate mapping for the map canvas.
 *
 * The layout plane is mapped onto the canvas by a uniform scale and a
 * translation, with the y axis flipped so layout +y points up on screen.
 * Both directions are single multiply-adds, so round trips stay well
 * inside half a pixel at any zoom.
 */

export interface Point {
  x: number;
  y: number;
}

const MIN_ZOOM = 0.01;
const MAX_ZOOM = 1000;

export class Viewport {
  zoom: number;
  panX: number;
  panY: number;

  constructor(zoom = 40, panX = 0, panY = 0) {
    this.zoom = zoom;
    this.panX = panX;
    this.panY = panY;
  }

  toScreen(p: Point): Point {
    return {
      x: p.x * this.zoom + this.panX,
      y: this.panY - p.y * this.zoom,
    };
  }

  toLayout(p: Point): Point {
    return {
      x: (p.x - this.panX) / this.zoom,
      y: (this.panY - p.y) / this.zoom,
    };
  }

  panBy(dx: number, dy: number): void {
    this.panX += dx;
    this.panY += dy;
  }

  /** Zoom by a factor while the layout point under (sx, sy) stays put. */
  zoomAround(factor: number, sx: number, sy: number): void {
    const next = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, this.zoom * factor));
    const applied = next / this.zoom;
    this.panX = sx - (sx - this.panX) * applied;
    this.panY = sy - (sy - this.panY) * applied;
    this.zoom = next;
  }

  /** Center the layout bounds in a width-by-height canvas with a margin. */
  fitBounds(
    bounds: [number, number, number, number],
    width: number,
    height: number,
    margin = 40,
  ): void {
    const [minX, minY, maxX, maxY] = bounds;
    const spanX = Math.max(maxX - minX, 1e-9);
    const spanY = Math.max(maxY - minY, 1e-9);
    const usableW = Math.max(width - 2 * margin, 1);
    const usableH = Math.max(height - 2 * margin, 1);
    this.zoom = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, Math.min(usableW / spanX, usableH / spanY)));
    const cx = (minX + maxX) / 2;
    const cy = (minY + maxY) / 2;
    this.panX = width / 2 - cx * this.zoom;
    this.panY = height / 2 + cy * this.zoom;
  }
}
