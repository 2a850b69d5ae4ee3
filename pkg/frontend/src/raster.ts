import type { Raster } from "./types";

/** Pure RGBA helpers; the DOM layer only moves these in and out of canvases. */

export function makeRaster(width: number, height: number): Raster {
  return { width, height, pixels: new Uint8ClampedArray(width * height * 4) };
}

export function cloneRaster(src: Raster): Raster {
  return { width: src.width, height: src.height, pixels: new Uint8ClampedArray(src.pixels) };
}

/**
 * Source-over composite of a patch onto a canvas raster at (ox, oy).
 * out = alpha * src + (1 - alpha) * dst, per channel.
 */
export function compositePatch(canvas: Raster, patch: Raster, ox: number, oy: number): void {
  for (let py = 0; py < patch.height; py++) {
    const cy = oy + py;
    if (cy < 0 || cy >= canvas.height) continue;
    for (let px = 0; px < patch.width; px++) {
      const cx = ox + px;
      if (cx < 0 || cx >= canvas.width) continue;
      const pi = (py * patch.width + px) * 4;
      const ci = (cy * canvas.width + cx) * 4;
      const alpha = patch.pixels[pi + 3] / 255;
      if (alpha === 0) continue;
      for (let ch = 0; ch < 3; ch++) {
        canvas.pixels[ci + ch] =
          alpha * patch.pixels[pi + ch] + (1 - alpha) * canvas.pixels[ci + ch];
      }
      canvas.pixels[ci + 3] = 255;
    }
  }
}
